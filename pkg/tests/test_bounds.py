import json

import numpy as np
import pytest

import oracles
from stripegs.bounds import (
    DEFAULT_WINDOW,
    Window,
    lemma1_check,
    lemma22_check,
    lemma23_check,
    localization_check,
    localized_energies,
    self_energy_lower_bound_check,
    self_energy_terms,
    theorem3_certificate,
)
from stripegs.config import STRIPED, Boundary, SpinConfig, relative_energy
from stripegs.geometry import deform_good_region, running_example, slice_good_region, tile_partition
from stripegs.kernel import ModelParams
from stripegs.results import DomainError
from stripegs.samples import random_polyomino, rng_for, stripes_in_window
from stripegs.stripes import optimal_width
from stripegs.suites import defect_config, patch_family, stripe_patch

P = ModelParams.from_tau(-0.6, 5.0)
Q = ModelParams.from_tau(-0.05, 5.0)


def striped(n, h, flips=()):
    b = Boundary(STRIPED, h, "vertical", 0)
    s = SpinConfig.background_config((n, n), b).spins.copy()
    for c in flips:
        s[c] *= -1
    return SpinConfig(s, (0, 0), b)


# -- droplet self-energy ----------------------------------------------------------------


def test_self_energy_single_site():
    t = self_energy_terms([(0, 0)], P)
    assert t.corners == 4 and t.pairs == 0
    assert t.U.value == pytest.approx(-2 * oracles.lattice_zeta2(5.0), rel=1e-12)
    assert self_energy_lower_bound_check([(0, 0)], P).ok


@pytest.mark.parametrize("k", [2, 5, 10])
def test_self_energy_bars(k):
    cells = [(0, i) for i in range(k)]
    t = self_energy_terms(cells, P)
    assert t.corners == 4 and t.pairs == 0
    assert self_energy_lower_bound_check(cells, P).ok


def test_self_energy_pair_term_uses_tracer_pairs():
    rng = rng_for(9)
    for _ in range(30):
        cells = random_polyomino(rng, int(rng.integers(4, 13)))
        t = self_energy_terms(cells, P)
        assert t.pairs == len(oracles.path_pairs(cells))
        assert t.corners == oracles.corner_count(_mask(cells))
        assert self_energy_lower_bound_check(cells, P).ok


def test_self_energy_rejects_disconnected():
    with pytest.raises(DomainError):
        self_energy_terms([(0, 0), (2, 2)], P)


def _mask(cells):
    pts = np.array(cells)
    pts -= pts.min(axis=0)
    m = np.zeros(tuple(pts.max(axis=0) + 1), bool)
    m[pts[:, 0], pts[:, 1]] = True
    return m


# -- localization -------------------------------------------------------------------------


def test_localization_all_plus_is_tight():
    c = localization_check(SpinConfig(np.ones((30, 30))), 10, P)
    assert c.lhs.value == 0.0 and c.rhs.value == 0.0 and c.ok


def test_localization_random_windows():
    rng = rng_for(31)
    for _ in range(8):
        cfg = stripes_in_window(rng, 16, 2)
        assert localization_check(cfg, 16, P).ok


def test_localized_energies_keyed_by_tile_and_region():
    part = tile_partition(stripes_in_window(rng_for(3), 16, 2), 16)
    loc = localized_energies(part, P)
    assert set(loc.tiles) == set(part.bad_tiles())
    assert set(loc.regions) == set(range(len(part.regions)))


def test_localization_needs_plus_boundary():
    with pytest.raises(DomainError):
        localization_check(striped(20, 2), 10, P)


# -- good regions ------------------------------------------------------------------------


def test_slicing_bound_on_running_example():
    sl = slice_good_region(deform_good_region(running_example()))
    for params in (P, Q):
        c = lemma23_check(sl, params)
        assert c.ok and c.extra["segments"] == 22


@pytest.mark.parametrize("name", ["perfect", "wider", "mixed"])
def test_region_bound_on_patch_families(name):
    h = optimal_width(Q)[0]
    ell = 8 * h
    widths, phase = patch_family(ell, h)[name]
    part = tile_partition(stripe_patch(ell, widths, phase), ell)
    assert part.regions
    for k in range(len(part.regions)):
        c = lemma22_check(part.region(k), Q, c1=0.5)
        assert c.ok
        assert c.extra["c1_required"] <= 0.5


def test_region_bound_reports_are_json():
    h = optimal_width(Q)[0]
    part = tile_partition(stripe_patch(8 * h, *patch_family(8 * h, h)["perfect"]), 8 * h)
    c = lemma22_check(part.region(0), Q)
    # at the required constant the bound is tight
    assert abs(c.slack) < 1e-8 * abs(c.lhs.value) + c.tails
    json.dumps(c.to_dict())


# -- bad tiles ------------------------------------------------------------------------------


def test_window_bounds_and_domain():
    lo, hi = DEFAULT_WINDOW.bounds(Q)
    h = optimal_width(Q)[0]
    assert lo == 8 * h and hi == pytest.approx(3 / 0.05)
    with pytest.raises(DomainError):
        DEFAULT_WINDOW.check(int(hi) + 1, Q)
    Window(1.0, 0.01).check(int(hi) + 1, Q)


def test_bad_tile_bound_outside_window_rejected():
    part = tile_partition(defect_config(40, 15, "notch"), 40)
    with pytest.raises(DomainError):
        lemma1_check(part, (1, 1), ModelParams.from_tau(-0.01, 5.0))


@pytest.mark.parametrize("kind", ["notch", "square", "end"])
def test_bad_tile_bound_on_defects(kind):
    h = optimal_width(Q)[0]
    part = tile_partition(defect_config(8 * h, h, kind), 8 * h)
    r = lemma1_check(part, (1, 1), Q, c2=0.01)
    assert r.ok and r.c2_required > 0.01


def test_bad_tile_bound_requires_bad_tile():
    h = optimal_width(Q)[0]
    part = tile_partition(defect_config(8 * h, h, "notch"), 8 * h)
    good = next((a, b) for a in range(3) for b in range(3) if not part.bad[a, b])
    with pytest.raises(DomainError):
        lemma1_check(part, good, Q)


# -- ground-state property -------------------------------------------------------------------


def test_single_flip_strictly_costs():
    h = optimal_width(P)[0]
    r = theorem3_certificate(striped(12 * h, h, [(5, 5)]), P, window=None)
    assert r.N_c == 4 and r.strict and r.ok
    assert r.corollary.slack == pytest.approx(relative_energy(striped(12 * h, h, [(5, 5)]), P).value)


def test_unperturbed_stripes_have_zero_gain():
    h = optimal_width(P)[0]
    r = theorem3_certificate(striped(12 * h, h), P, window=None)
    assert r.N_c == 0 and not r.strict_required and r.ok
    assert r.corollary.slack == 0.0
    assert set(r.to_dict()) >= {"main", "corollary", "N_c", "ok"}


def test_theorem_requires_optimal_stripes():
    h = optimal_width(P)[0]
    with pytest.raises(DomainError):
        theorem3_certificate(striped(12 * h, h + 1), P, window=None)
    with pytest.raises(DomainError):
        theorem3_certificate(SpinConfig(np.ones((8, 8))), P, window=None)
