import numpy as np
import pytest

import oracles
from stripegs.config import PERIODIC, Boundary, SpinConfig, periodic_energy
from stripegs.kernel import ModelParams
from stripegs.oracle import (
    Schedule,
    anneal,
    canonical,
    classify,
    coupling_matrix,
    cyclic_runs,
    exhaustive_1d,
    exhaustive_2d,
    finite_size_crossing,
    matrix_energy,
    ring_coupling_matrix,
    stripe_axis,
    stripe_table,
    striped_candidates,
    symmetry_orbit,
)
from stripegs.results import BudgetError, DomainError


def run(shape, params):
    return exhaustive_1d(shape[0], params) if shape[1] == 1 else exhaustive_2d(*shape, params)


# -- derived references ----------------------------------------------------------


def test_ring_matrix_energy_matches_direct_ring():
    rng = np.random.default_rng(0)
    P = ModelParams(2, 5.0, 1.3)
    C = ring_coupling_matrix(10, P)
    for _ in range(5):
        s = np.where(rng.random(10) < 0.5, -1, 1)
        assert matrix_energy(C, s) == pytest.approx(oracles.ring_energy(s, 1.3, 5.0), abs=1e-9)


def test_torus_matrix_energy_matches_periodic_energy():
    rng = np.random.default_rng(1)
    P = ModelParams(2, 5.0, 1.4)
    C = coupling_matrix((4, 3), P)
    for _ in range(5):
        s = np.where(rng.random((4, 3)) < 0.5, -1, 1)
        e = periodic_energy(SpinConfig(s, (0, 0), Boundary(PERIODIC)), P)
        assert abs(matrix_energy(C, s.ravel()) - e.value) <= e.tail_bound + 1e-9


def test_minimizer_energy_is_periodic_energy():
    P = ModelParams(2, 5.0, 1.5)
    rep = exhaustive_2d(4, 4, P)
    cfg = rep.configs()[0]
    assert rep.energy.value == pytest.approx(periodic_energy(cfg, P).value, abs=1e-12)


# -- symmetry helpers ------------------------------------------------------------


def test_cyclic_runs_and_classify():
    assert cyclic_runs([1, 1, -1, -1, -1, 1]) == [3, 3]
    assert cyclic_runs([1, 1, 1]) == [3]
    assert classify(np.ones((3, 3)))["kind"] == "uniform"
    s = np.array([[1, 1], [-1, -1], [-1, -1], [1, 1]])
    c = classify(s)
    assert c["kind"] == "striped" and c["orientation"] == "vertical" and sorted(c["widths"]) == [2, 2]
    assert classify(np.array([[1, -1], [-1, -1]]))["kind"] == "other"


def test_canonical_is_orbit_invariant():
    rng = np.random.default_rng(3)
    s = np.where(rng.random((4, 4)) < 0.5, -1, 1)
    c = canonical(s)
    for t in symmetry_orbit(s):
        assert np.array_equal(canonical(t), c)


def test_striped_candidates_divide_the_period():
    hs = sorted(h for o, h, _ in striped_candidates((12, 1)))
    assert hs == [1, 2, 3, 6]
    assert {o for o, _, _ in striped_candidates((4, 6))} == {"vertical", "horizontal"}


# -- exhaustive search -----------------------------------------------------------


def test_uniform_minimizer_at_large_coupling():
    for shape in ((12, 1), (4, 4)):
        rep = run(shape, ModelParams(2, 5.0, 3.0))
        assert rep.kinds == [{"kind": "uniform"}]
        assert rep.energy.value == 0.0


def test_reduction_keeps_the_minimum():
    P = ModelParams(2, 5.0, 1.2)
    a, b = exhaustive_1d(16, P), exhaustive_1d(16, P, reduce=False)
    assert a.energy.value == pytest.approx(b.energy.value, abs=1e-12)
    assert a.kinds == b.kinds
    assert 2 * a.enumerated == b.enumerated


@pytest.mark.parametrize("shape", [(12, 1), (16, 1), (4, 4), (4, 6)])
def test_stripes_below_and_uniform_above_crossing(shape):
    J = finite_size_crossing(shape)["crossing"]
    table = stripe_table(shape)
    below = run(shape, ModelParams(2, 5.0, J * (1 - 1e-3)))
    above = run(shape, ModelParams(2, 5.0, J * (1 + 1e-3)))
    (k,) = below.kinds
    assert k["kind"] == "striped"
    assert set(k["widths"]) == {table.argmin(J * (1 - 1e-3))["h"]}
    assert above.kinds == [{"kind": "uniform"}]


def test_budget_and_domain_errors():
    P = ModelParams(2, 5.0, 1.5)
    with pytest.raises(BudgetError):
        exhaustive_1d(40, P)
    with pytest.raises(BudgetError):
        exhaustive_2d(6, 6, P)
    with pytest.raises(DomainError):
        exhaustive_2d(1, 8, P)
    with pytest.raises(DomainError):
        stripe_table((3, 1))


# -- annealing -------------------------------------------------------------------


@pytest.mark.parametrize("shape", [(4, 4), (4, 6)])
def test_anneal_reaches_exhaustive_minimum(shape):
    P = ModelParams(2, 5.0, 1.5)
    target = run(shape, P).energy.value
    hits = sum(abs(anneal(shape, P, seed=s).energy.value - target) < 1e-9 for s in range(20))
    assert hits >= 19


def test_anneal_trace_and_determinism():
    P = ModelParams(2, 5.0, 1.5)
    r = anneal((4, 6), P, Schedule(300), seed=4)
    assert len(r.trace) == 300
    assert all(a >= b for a, b in zip(r.trace, r.trace[1:]))
    again = anneal((4, 6), P, Schedule(300), seed=4)
    assert np.array_equal(r.minimizers[0], again.minimizers[0])
    with pytest.raises(DomainError):
        Schedule(0).temperatures()


def test_anneal_large_torus_stripes_along_axis():
    r = anneal((12, 12), ModelParams.from_tau(-0.6, 5.0), seed=0)
    ax = stripe_axis(r.minimizers[0])
    assert ax["on_axis"]
    assert classify(r.minimizers[0])["kind"] == "striped"


def test_report_serializes():
    import json

    rep = exhaustive_1d(8, ModelParams(2, 5.0, 1.5))
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["enumerated"] == 128 and d["minimizers"]
