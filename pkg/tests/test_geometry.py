import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from stripegs.config import STRIPED, Boundary, SpinConfig
from stripegs.geometry import (
    HORIZONTAL,
    INF,
    NO_ORIENTATION,
    VERTICAL,
    Region,
    deform_good_region,
    extract_contours,
    hole_side,
    localize,
    localize_bubbles,
    padded_minus,
    path_pair_set,
    running_example,
    slice_good_region,
    tile_partition,
)
from stripegs.results import DomainError
from stripegs.samples import random_plus_box, random_polyomino, rng_for, stripes_in_window


def config(minus_cells, shape=(8, 8), origin=(0, 0)):
    s = np.ones(shape, dtype=np.int8)
    for c in minus_cells:
        s[c] = -1
    return SpinConfig(s, origin)


# -- derived references ----------------------------------------------------------


def test_corners_and_bonds_match_block_rules():
    rng = rng_for(13)
    for _ in range(100):
        cfg = random_plus_box(rng, (9, 7))
        cs = extract_contours(cfg)
        assert cs.n_corners == oracles.corner_count(cfg.minus_mask())
        assert cs.n_bonds == oracles.bond_count(cfg.minus_mask())


def test_path_pairs_match_tracer():
    rng = rng_for(17)
    for _ in range(60):
        cells = random_polyomino(rng, int(rng.integers(1, 13)))
        assert path_pair_set(cells) == oracles.path_pairs(cells)


@settings(max_examples=40, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=12))
def test_path_pairs_match_tracer_on_any_set(cells):
    assert path_pair_set(cells) == oracles.path_pairs(cells)


def test_path_pair_examples():
    rect = [(i, j) for i in range(3) for j in range(4)]
    assert path_pair_set(rect) == set()
    L = [(0, 0), (1, 0), (1, 1)]
    assert path_pair_set(L) == set()
    # longer arms: the paths through the missing corner leave and re-enter the droplet
    L = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]
    U = [(0, 0), (0, 1), (1, 0), (2, 0), (2, 1)]
    assert ((0, 1), (2, 1)) in path_pair_set(U)
    assert path_pair_set(L) == oracles.path_pairs(L)


# -- contours --------------------------------------------------------------------


def test_contour_examples():
    cs = extract_contours(config([(3, 3)]))
    assert len(cs.contours) == 1 and cs.n_corners == 4 and cs.n_bonds == 4
    rect = [(i, j) for i in range(2, 5) for j in range(1, 6)]
    cs = extract_contours(config(rect))
    assert len(cs.contours) == 1 and cs.n_corners == 4 and cs.n_bonds == 2 * (3 + 5)
    cs = extract_contours(config([(2, 2), (3, 3)]))
    assert len(cs.contours) == 2 and cs.n_corners == 8
    assert [c.corners for c in cs.contours] == [4, 4]


def test_every_bond_in_exactly_one_contour():
    rng = rng_for(5)
    for _ in range(40):
        cs = extract_contours(random_plus_box(rng, (8, 8)))
        bonds = [b for c in cs.contours for b in c.bonds]
        assert len(bonds) == len(set(bonds)) == cs.n_bonds
        assert set(bonds) == set(cs.bonds())
        assert sum(c.corners for c in cs.contours) == cs.n_corners
        assert all(c.closed for c in cs.contours)


def test_padded_minus_rejects_periodic():
    with pytest.raises(DomainError):
        padded_minus(SpinConfig(np.ones((2, 2)), (0, 0), Boundary("periodic")))


# -- tiles --------------------------------------------------------------------------


def test_all_plus_tiles_are_holes():
    part = tile_partition(SpinConfig(np.ones((20, 15))), 5)
    assert part.hole.all() and part.bad.all() and part.regions == ()


def test_perfect_stripes_single_good_region():
    h, ell = 3, 30
    b = Boundary(STRIPED, h, VERTICAL, 0)
    cfg = SpinConfig.background_config((3 * ell, 2 * ell), b)
    part = tile_partition(cfg, ell)
    assert part.n_bad == 0 and len(part.regions) == 1
    g = part.regions[0]
    assert g.orientation == VERTICAL
    # runs of either sign count, so every site sits in a width-h stripe
    assert g.A_h == {h: g.area}
    hb = Boundary(STRIPED, h, HORIZONTAL, 1)
    part = tile_partition(SpinConfig.background_config((2 * ell, 2 * ell), hb), ell)
    assert part.regions[0].orientation == HORIZONTAL


def test_corner_sum_equals_total_on_random_configs():
    rng = rng_for(23)
    for _ in range(100):
        cfg = stripes_in_window(rng, 10, 2, n_tiles=3)
        origin = tuple(int(v) for v in rng.integers(0, 10, size=2))
        part = tile_partition(cfg, 10, origin)
        assert part.total_nc2 == 2 * part.contours.n_corners
        assert np.array_equal(part.bad, (part.nc2 > 0) | part.hole)


def test_bond_owner_partition():
    part = tile_partition(stripes_in_window(rng_for(2), 10, 2), 10)
    owned = int((part.vowner >= 0).sum() + (part.howner >= 0).sum())
    assert owned == part.contours.n_bonds


def test_tile_errors_and_hole_side():
    with pytest.raises(DomainError):
        tile_partition(SpinConfig(np.ones((8, 8))), 4)
    assert [hole_side(x) for x in (5, 9, 10, 16)] == [1, 1, 2, 3]


def test_partition_report_keys():
    d = tile_partition(stripes_in_window(rng_for(1), 8, 2), 8).to_dict()
    assert {"N_c", "tiles", "good_regions", "sum_nc2"} <= set(d)
    assert {"coords", "nc2", "hole", "bad"} == set(d["tiles"][0])


# -- bubbles -----------------------------------------------------------------------


def test_droplet_inside_region_is_one_bubble():
    cfg = config([(i, j) for i in range(2, 5) for j in range(3, 8)], shape=(10, 10))
    r = Region(np.ones((10, 10), bool), padded_minus(cfg), (0, 0), 5, (0, 0), NO_ORIENTATION)
    (b,) = localize(r)
    assert b.size == 15 and b.is_rectangular and b.corners2 == 8
    vertical = b.bonds[:, 0] == 0
    assert set(b.facing[vertical]) == {3.0} and set(b.facing[~vertical]) == {5.0}


def test_droplet_split_by_region_boundary():
    cfg = config([(i, 4) for i in range(1, 9)], shape=(10, 10))
    mask = np.ones((10, 10), bool)
    mask[4:6, :] = False
    r = Region(mask, padded_minus(cfg), (0, 0), 5, (0, 0), NO_ORIENTATION)
    bubs = localize(r)
    assert len(bubs) == 2
    # the runs toward the cut see the region boundary
    assert any(f == INF for b in bubs for f in b.facing)


def test_localize_bubbles_covers_tiles_and_regions():
    part = tile_partition(stripes_in_window(rng_for(4), 8, 2), 8)
    out = localize_bubbles(part)
    assert len(out) == part.n_bad + len(part.regions)


# -- deformation and slicing on the running example ----------------------------------


@pytest.fixture(scope="module")
def sliced():
    return slice_good_region(deform_good_region(running_example()))


def test_running_example_slices(sliced):
    assert len(sliced.slices) == 6
    assert len(sliced.segments) == 22
    assert sliced.slice_area() == sliced.region.area


def test_running_example_infinite_spacings(sliced):
    inf = sliced.infinite_spacings()
    assert sorted(inf) == [(6, 2), (7, 1), (11, 1), (22, 2)]
    by_index = {s.index: s for s in sliced.segments}
    # each side's two infinite spacings sit on the top and bottom of one droplet
    pairs = {frozenset(p) for p in sliced.pairs}
    assert frozenset((7, 11)) in pairs and frozenset((6, 22)) in pairs
    assert {by_index[7].side, by_index[11].side} == {"top", "bottom"}
    assert {by_index[6].side, by_index[22].side} == {"top", "bottom"}
    finite = [w for s in sliced.segments for w in (s.w1, s.w2) if w != INF]
    assert len(finite) == 2 * len(sliced.segments) - 4


def test_segment_pairs_cover_segments(sliced):
    idx = sorted(i for p in sliced.pairs for i in p)
    assert idx == sorted(s.index for s in sliced.segments)


def test_spacings_used_at_most_twice(sliced):
    assert sliced.max_spacing_use <= 2


def test_deformation_perimeter_and_fixed_point():
    G = running_example()
    D = deform_good_region(G)
    assert D.perimeter_after <= 2 * D.perimeter_before
    assert all(b.is_rectangular for b in localize(D.region))
    again = deform_good_region(D.region)
    assert np.array_equal(again.region.mask, D.region.mask)
    assert again.perimeter_after == again.perimeter_before


def test_sliced_report_serializes(sliced):
    import json

    d = json.loads(json.dumps(sliced.to_dict()))
    assert len(d["slices"]) == 6 and len(d["segments"]) == 22
