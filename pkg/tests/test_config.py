import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from stripegs.config import (
    PERIODIC,
    PLUS,
    STRIPED,
    Boundary,
    Droplet,
    SpinConfig,
    boundary_reduction_check,
    droplet_decompose,
    droplet_identity_check,
    droplet_interaction,
    droplet_representation,
    droplet_self_energy,
    embed_in_torus,
    periodic_energy,
    relative_energy,
    relative_energy_ball,
)
from stripegs.kernel import ModelParams, lattice_zeta
from stripegs.results import DomainError
from stripegs.samples import random_plus_box, rng_for
from stripegs.stripes import optimal_width, striped_energy_per_site

P = ModelParams.from_tau(-0.6, 5.0)
H = optimal_width(P)[0]


def single(shape=(3, 3), at=(1, 1), boundary=Boundary()):
    s = np.ones(shape, dtype=np.int8)
    s[at] = -1
    return SpinConfig(s, (0, 0), boundary)


# -- derived references ----------------------------------------------------------


def test_single_flip_plus_energy():
    e = relative_energy(single(), P)
    ref = 8 * P.J - 2 * oracles.lattice_zeta2(5.0)
    assert abs(e.value - ref) <= e.tail_bound + 1e-12


def test_plus_energy_against_direct_pair_sums():
    rng = rng_for(11)
    for _ in range(10):
        cfg = random_plus_box(rng, (7, 6))
        e = relative_energy(cfg, P)
        ref = oracles.plus_energy(cfg.minus_mask(), P.J, 5.0)
        assert abs(e.value - ref) <= e.tail_bound + 1e-10 * abs(ref)


def test_ball_route_brackets_closed_form():
    rng = rng_for(2)
    for boundary in (Boundary(), Boundary(STRIPED, H, "vertical", 1)):
        s = np.where(rng.random((6, 6)) < 0.4, -1, 1).astype(np.int8)
        cfg = SpinConfig(s, (3, -2), boundary)
        a = relative_energy(cfg, P)
        b = relative_energy_ball(cfg, P, 40)
        assert abs(a.value - b.value) <= a.tail_bound + b.tail_bound


def test_periodic_energy_against_image_sums():
    rng = rng_for(4)
    for shape in ((3, 4), (2, 5)):
        s = np.where(rng.random(shape) < 0.5, -1, 1)
        e = periodic_energy(SpinConfig(s, (0, 0), Boundary(PERIODIC)), P)
        ref, rest = oracles.torus_energy(s, P.J, 5.0)
        assert abs(e.value - ref) <= e.tail_bound + rest


def test_flood_fill_component_count():
    rng = rng_for(8)
    for _ in range(30):
        cfg = random_plus_box(rng, (8, 8))
        assert len(droplet_decompose(cfg)) == oracles.flood_fill_count(cfg.minus_mask())


def test_self_energy_of_single_site():
    U = droplet_self_energy(Droplet.from_cells([(0, 0)]), P)
    assert U.value == pytest.approx(-2 * oracles.lattice_zeta2(5.0), rel=1e-13)


# -- relative energy -------------------------------------------------------------


def test_background_against_itself_is_zero():
    for b in (Boundary(), Boundary(STRIPED, H, "horizontal", 3)):
        cfg = SpinConfig.background_config((9, 7), b, (-4, 2))
        e = relative_energy(cfg, P)
        assert e.value == 0.0 and e.tail_bound == 0.0


def test_flipping_a_stripe_block_costs_energy():
    P2 = ModelParams.from_tau(-0.05, 5.0)
    h = optimal_width(P2)[0]
    b = Boundary(STRIPED, h, "vertical", 0)
    cfg = SpinConfig.background_config((6 * h, 6 * h), b)
    s = np.array(cfg.spins)
    s[2 * h:3 * h, 2 * h:4 * h] *= -1
    assert relative_energy(cfg.with_spins(s), P2).lower > 0


def test_striped_translation_invariance():
    b = Boundary(STRIPED, H, "vertical", 0)
    rng = rng_for(1)
    cfg = SpinConfig.background_config((8, 8), b)
    s = np.array(cfg.spins)
    s[rng.integers(8, size=5), rng.integers(8, size=5)] *= -1
    e0 = relative_energy(cfg.with_spins(s), P).value
    moved = SpinConfig(s, (2 * H, 5), b)
    assert relative_energy(moved, P).value == pytest.approx(e0, rel=1e-12)


def test_relative_energy_periodic_rejected():
    with pytest.raises(DomainError):
        relative_energy(SpinConfig(np.ones((2, 2)), (0, 0), Boundary(PERIODIC)), P)


# -- periodic energy ------------------------------------------------------------


def test_periodic_energy_reference_values():
    plus = SpinConfig(np.ones((4, 6)), (0, 0), Boundary(PERIODIC))
    assert periodic_energy(plus, P).value == 0.0
    b = Boundary(STRIPED, H, "vertical", 0)
    L = 4 * H
    star = SpinConfig(SpinConfig.background_config((L, L), b).spins, (0, 0), Boundary(PERIODIC))
    e = periodic_energy(star, P)
    es = striped_energy_per_site(H, P)
    assert abs(e.value - es.value * L * L) <= e.tail_bound + es.tail_bound * L * L + 1e-9


def test_periodic_energy_shift_invariant():
    rng = rng_for(6)
    s = np.where(rng.random((5, 4)) < 0.5, -1, 1)
    e = periodic_energy(SpinConfig(s, (0, 0), Boundary(PERIODIC)), P).value
    for shift in ((1, 0), (2, 3)):
        t = np.roll(s, shift, axis=(0, 1))
        assert periodic_energy(SpinConfig(t, (0, 0), Boundary(PERIODIC)), P).value == pytest.approx(e, abs=1e-10)


# -- droplets ---------------------------------------------------------------------


def test_droplet_examples():
    d = droplet_decompose(single())
    assert len(d) == 1 and len(d[0].bonds) == 4
    s = np.ones((3, 3), dtype=np.int8)
    s[0, 0] = s[1, 1] = -1
    assert len(droplet_decompose(SpinConfig(s))) == 2
    with pytest.raises(DomainError):
        droplet_decompose(SpinConfig(s, (0, 0), Boundary(STRIPED, 1)))


def test_interaction_symmetric_positive_and_disjoint():
    a = Droplet.from_cells([(0, 0), (0, 1)])
    b = Droplet.from_cells([(3, 0), (4, 2)])
    w1 = droplet_interaction(a, b, P).value
    assert w1 > 0
    assert w1 == pytest.approx(droplet_interaction(b, a, P).value)
    with pytest.raises(DomainError):
        droplet_interaction(a, Droplet.from_cells([(0, 1)]), P)


def test_identity_examples():
    empty = SpinConfig(np.ones((4, 4)))
    c = droplet_identity_check(empty, P)
    assert c.lhs.value == 0.0 and c.rhs.value == 0.0
    c = droplet_identity_check(single(), P)
    U = droplet_self_energy(Droplet.from_cells([(1, 1)]), P)
    assert c.ok
    assert c.rhs.value == pytest.approx(8 * P.J + U.value)


def test_identity_on_random_configs():
    rng = rng_for(21)
    for _ in range(20):
        c = droplet_identity_check(random_plus_box(rng), P)
        assert abs(c.slack) <= 2 * c.tails


def test_identity_ball_slack_shrinks_with_radius():
    cfg = random_plus_box(rng_for(3), (6, 6))
    rhs = droplet_representation(droplet_decompose(cfg), P).value
    slacks = [abs(relative_energy_ball(cfg, P, R).value - rhs) for R in (8, 16, 32)]
    assert slacks[0] > slacks[1] > slacks[2]


# -- boundary reduction ------------------------------------------------------------


def test_reduction_single_flip_converges():
    b = Boundary(STRIPED, H, "vertical", 0)
    cfg = SpinConfig.background_config((2, 2), b)
    s = np.array(cfg.spins)
    s[0, 0] *= -1
    rep = boundary_reduction_check(cfg.with_spins(s), P, L_values=(4 * H, 8 * H, 16 * H))
    assert rep.ok
    gaps = [abs(v.value - rep.direct.value) for v in rep.periodic.values()]
    assert gaps[0] > gaps[1] > gaps[2]
    assert set(rep.to_dict()) == {"direct", "periodic", "juxtaposed", "ok"}


def test_reduction_empty_and_domain():
    b = Boundary(STRIPED, H, "vertical", 0)
    cfg = SpinConfig.background_config((2, 2), b)
    rep = boundary_reduction_check(cfg, P, L_values=(4 * H,), M_values=())
    assert rep.direct.value == 0.0
    assert abs(rep.periodic[4 * H].value) <= rep.periodic[4 * H].tail_bound + 1e-9
    with pytest.raises(DomainError):
        embed_in_torus(cfg, 4 * H + 1)
    with pytest.raises(DomainError):
        boundary_reduction_check(SpinConfig(np.ones((2, 2))), P)


# -- file formats -------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(-5, 5), st.integers(-5, 5), st.data())
def test_text_and_json_round_trip(nx, ny, x0, y0, data):
    bits = data.draw(st.lists(st.booleans(), min_size=nx * ny, max_size=nx * ny))
    s = np.where(np.array(bits).reshape(nx, ny), -1, 1)
    b = data.draw(st.sampled_from([Boundary(), Boundary(STRIPED, 2, "horizontal", 3), Boundary(PERIODIC)]))
    cfg = SpinConfig(s, (x0, y0), b)
    for back in (SpinConfig.from_text(cfg.to_text()), SpinConfig.from_json(cfg.to_json())):
        assert np.array_equal(back.spins, cfg.spins)
        assert back.origin == cfg.origin and back.boundary == cfg.boundary


def test_load_save(tmp_path):
    cfg = SpinConfig(np.array([[1, -1], [-1, -1], [1, 1]]), (2, 1), Boundary(STRIPED, 3, "vertical", 1))
    for name in ("c.txt", "c.json"):
        cfg.save(tmp_path / name)
        back = SpinConfig.load(tmp_path / name)
        assert np.array_equal(back.spins, cfg.spins) and back.boundary == cfg.boundary
    text = (tmp_path / "c.txt").read_text().splitlines()
    assert text[0] == "# origin: 2 1" and text[1].startswith("# boundary: striped")


def test_bad_inputs():
    with pytest.raises(DomainError):
        SpinConfig(np.array([[0, 1]]))
    with pytest.raises(DomainError):
        SpinConfig.from_text("+-\n+x\n")
    with pytest.raises(DomainError):
        SpinConfig.from_text("+-\n+\n")
    with pytest.raises(DomainError):
        Boundary(STRIPED, 2, "diagonal")
    with pytest.raises(DomainError):
        Boundary("twisted")
    assert Boundary.parse("striped h=3 orientation=horizontal phase=2") == Boundary(STRIPED, 3, "horizontal", 2)
    assert Boundary.parse(PLUS) == Boundary()
    assert lattice_zeta(5.0, 2).value > 4
