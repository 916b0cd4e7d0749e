"""The nine acceptance criteria at their stated tolerances.

Each test records one ``PASS/FAIL criterion N`` line before asserting.
"""

import time

import numpy as np
import pytest

import oracles
from stripegs.bounds import self_energy_lower_bound_check
from stripegs.geometry import (
    deform_good_region,
    extract_contours,
    running_example,
    slice_good_region,
    tile_partition,
)
from stripegs.kernel import ModelParams
from stripegs.oracle import exhaustive_1d, exhaustive_2d, finite_size_crossing, stripe_table
from stripegs.results import VIOLATED
from stripegs.samples import random_polyomino, rng_for, stripes_in_window
from stripegs.stripes import excess_exponent, optimal_width, width_scan
from stripegs.suites import (
    DEFAULT_MULTIPLES,
    chessboard_suite,
    fit_constants,
    identity_suite,
    localization_suite,
    theorem3_suite,
)

pytestmark = pytest.mark.slow

P5 = ModelParams.from_tau(-0.6, 5.0)


def test_criterion_1_droplet_identity(verdict):
    t0 = time.perf_counter()
    rep = identity_suite(P5, seed=0, count=100, shape=(10, 10))
    dt = time.perf_counter() - t0
    worst = max(abs(r["slack"]) / (r["lhs"]["tail_bound"] + r["rhs"]["tail_bound"]) for r in rep.records)
    ok = len(rep.records) == 100 and worst <= 2.0 and dt < 60
    assert verdict(1, ok, f"100 configs, max |slack|/tails = {worst:.3g} (<= 2), {dt:.1f} s (< 60)")


def test_criterion_2_self_energy(verdict):
    rng = rng_for(0)
    violations = mismatched = 0
    for _ in range(100):
        cells = random_polyomino(rng, int(rng.integers(1, 13)))
        c = self_energy_lower_bound_check(cells, P5)
        violations += c.verdict == VIOLATED
        mismatched += c.extra["pairs"] != len(oracles.path_pairs(cells))
    ok = violations == 0 and mismatched == 0
    assert verdict(2, ok, f"100 polyominoes, {violations} violations, {mismatched} pair-set mismatches")


def test_criterion_3_chessboard(verdict):
    rep = chessboard_suite(P5, seed=0, count=200, L_max=64)
    seq_viol = sum(r["verdict"] == VIOLATED for r in rep.records[:200])
    lim = rep.summary["closing_block"]
    vals = [lim[k] for k in ("64", "128", "256")]
    mono = vals[0] > vals[1] > vals[2]
    ok = seq_viol == 0 and mono and rep.ok
    assert verdict(3, ok, f"200 sequences, {seq_viol} violations; |w e_s(w) - tau| = "
                          + ", ".join(f"{v:.3g}" for v in vals) + (" decreasing" if mono else " NOT decreasing"))


def test_criterion_4_localization(verdict):
    params = ModelParams.from_tau(-0.05, 5.0)
    h = optimal_width(params)[0]
    rep = localization_suite(params, seed=0, count=50, ell=8 * h)
    ok = rep.ok and len(rep.records) == 50
    assert verdict(4, ok, f"50 windows of side {3 * 8 * h} (ell = {8 * h}), {rep.violations} violations")


TAUS = (-0.04, -0.02, -0.01, -0.005, -0.0025)


def test_criterion_5_ground_state_corollary(verdict):
    t0 = time.perf_counter()
    weak = not_strict = checked = cornered = 0
    for tau in TAUS:
        rep = theorem3_suite(ModelParams.from_tau(tau, 5.0), seed=0, count=200)
        for r in rep.records:
            if r["context"] != "ground-state property":
                continue
            checked += 1
            weak += r["slack"] < -(r["lhs"]["tail_bound"] + r["rhs"]["tail_bound"])
            if r["N_c"] > 0:
                cornered += 1
                not_strict += not r["strict"]
    dt = time.perf_counter() - t0
    ok = checked == 200 * len(TAUS) and weak == 0 and not_strict == 0 and dt < 600
    assert verdict(5, ok, f"{checked} perturbations over tau in {list(TAUS)}: {weak} below, "
                          f"{not_strict} of {cornered} with corners not strict, {dt:.1f} s (< 600)")


def test_criterion_6_scaling_laws(verdict):
    e2 = excess_exponent(ModelParams.from_tau(-0.1, 5.0), 20, 200)
    scan = width_scan(-np.geomspace(1e-4, 1e-3, 6), 5.0)
    e3 = excess_exponent(ModelParams.from_tau(-0.1, 7.0, 3), 20, 200)
    ok2 = abs(e2 / -3.0 - 1) <= 0.02
    okh = abs(scan.slope / -0.5 - 1) <= 0.10
    ok3 = abs(e3 / -4.0 - 1) <= 0.02
    assert verdict(6, ok2 and okh and ok3,
                   f"excess exponent {e2:.4f} (-3 within 2%), h* slope {scan.slope:.4f} (-0.5 within 10%), "
                   f"d=3 p=7 exponent {e3:.4f} (-4 within 2%)")


SHAPES = ((12, 1), (16, 1), (20, 1), (24, 1), (4, 4), (4, 6))


def test_criterion_7_brute_force(verdict):
    bad = []
    for shape in SHAPES:
        J = finite_size_crossing(shape)["crossing"]
        table = stripe_table(shape)
        run = (lambda P: exhaustive_1d(shape[0], P)) if shape[1] == 1 else (lambda P: exhaustive_2d(*shape, P))
        below, above = run(ModelParams(2, 5.0, J * (1 - 1e-3))), run(ModelParams(2, 5.0, J * (1 + 1e-3)))
        h = table.argmin(J * (1 - 1e-3))["h"]
        kinds = below.kinds
        striped_ok = all(k["kind"] == "striped" and set(k["widths"]) == {h} for k in kinds)
        if not striped_ok or above.kinds != [{"kind": "uniform"}]:
            bad.append(shape)
    assert verdict(7, not bad, f"shapes {[f'{a}x{b}' for a, b in SHAPES]}, failures {bad}")


def test_criterion_8_geometry(verdict):
    rng = rng_for(0)
    corner_bad = length_bad = 0
    for _ in range(100):
        cfg = stripes_in_window(rng, 10, 2, n_tiles=3)
        part = tile_partition(cfg, 10, tuple(int(v) for v in rng.integers(0, 10, size=2)))
        corner_bad += part.total_nc2 != 2 * part.contours.n_corners
        cs = extract_contours(cfg)
        length_bad += sum(len(c.bonds) for c in cs.contours) != oracles.bond_count(cfg.minus_mask())
    inf = sorted(slice_good_region(deform_good_region(running_example())).infinite_spacings())
    fig_ok = inf == [(6, 2), (7, 1), (11, 1), (22, 2)]
    ok = corner_bad == 0 and length_bad == 0 and fig_ok
    assert verdict(8, ok, f"100 configs: {corner_bad} corner-sum and {length_bad} length mismatches; "
                          f"infinite spacings on the running example {inf}")


def test_criterion_9_constants(verdict):
    fit = fit_constants(ModelParams.from_tau(-0.01, 5.0), DEFAULT_MULTIPLES)
    rows = "; ".join(f"ell={r['ell']}: " + ", ".join(f"{k}={r[k]:.3g}" for k in ("C3", "C2", "c1", "c2"))
                     for r in fit.table)
    spread = ", ".join(f"{k} {v:.2f}" for k, v in fit.spread.items())
    assert verdict(9, fit.ok, f"h*={fit.h_star}; {rows}; max/min {spread} (<= 2)")
