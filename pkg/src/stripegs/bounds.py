"""Localized energies of tiles and good regions, and the inequality certificates built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import HORIZONTAL, VERTICAL, SpinConfig, droplet_self_energy, Droplet, pair_form, relative_energy
from .geometry import (
    NO_ORIENTATION,
    ContourSet,
    Region,
    SlicedRegion,
    TilePartition,
    default_ell,
    hole_side,
    localize,
    path_pair_set,
    stripe_inventory,
    tile_partition,
)
from .kernel import ModelParams
from .results import Certificate, DomainError, SumResult, exact, total
from .stripes import INF, e_infinity, f_interaction, min_weight_sum, optimal_width, striped_energy_per_site

__all__ = [
    "Certificate",
    "Window",
    "localized_energy",
    "localized_energy_bad_tile",
    "localized_energy_good_region",
    "self_energy_lower_bound_check",
    "localization_check",
    "lemma23_check",
    "lemma22_check",
    "lemma1_check",
    "theorem3_certificate",
]


@dataclass(frozen=True)
class Window:
    """Admissible tile sides ``c_low h* <= ell <= 1 / (c_high |tau|)``.

    The two constants are empirical choices; a single constant cannot satisfy both ends
    at desk-scale widths.  The upper end keeps ``ell |tau| <= 3``, below which the
    bad-tile bound holds with a positive constant on the defect families.
    """

    c_low: float = 8.0
    c_high: float = 1.0 / 3.0

    def bounds(self, params: ModelParams) -> tuple:
        h, _ = optimal_width(params)
        return self.c_low * h, 1.0 / (self.c_high * abs(params.tau))

    def check(self, ell: int, params: ModelParams) -> None:
        lo, hi = self.bounds(params)
        if not lo <= ell <= hi:
            raise DomainError(f"tile side {ell} outside the window [{lo:g}, {hi:g}]")


DEFAULT_WINDOW = Window()


def _corner_weight(p: float) -> float:
    return 2.0 ** (1.0 - p / 2.0)


@lru_cache(maxsize=4096)
def _m(d: float, p: float) -> SumResult:
    params = ModelParams(2, p, 1.0)
    return min_weight_sum(INF if d == INF else int(d), params)


def bubble_line_energy(bubble, params: ModelParams) -> SumResult:
    """``2J |Gamma_beta| + u_Q(beta)`` with ``u_Q = -sum_b M(d_b)``."""
    out = exact(2.0 * params.J * bubble.n_bonds)
    if bubble.n_bonds:
        vals, counts = np.unique(bubble.facing, return_counts=True)
        for d, c in zip(vals, counts):
            out = out - float(c) * _m(float(d), float(params.p))
    return out


def _grid(cells_list):
    allc = np.concatenate(cells_list)
    lo = allc.min(axis=0)
    shape = tuple(allc.max(axis=0) - lo + 1)
    return lo, shape


def _indicator(cells, lo, shape):
    g = np.zeros(shape)
    q = cells - lo
    g[q[:, 0], q[:, 1]] = 1.0
    return g


def bubble_interactions(bubbles, p: float, star_axis: int | None = None) -> SumResult:
    """``(1/2) sum_{beta != beta'} W`` over bubble pairs.

    With ``star_axis`` only pairs whose projections on that axis are disjoint count
    (pairs that do not overlap after translation along the other axis).
    """
    if len(bubbles) < 2:
        return exact(0.0)
    lo, shape = _grid([b.cells for b in bubbles])
    if star_axis is None:
        every = pair_form(_indicator(np.concatenate([b.cells for b in bubbles]), lo, shape), p)
        same = total(pair_form(_indicator(b.cells, b.cells.min(axis=0), tuple(np.ptp(b.cells, axis=0) + 1)), p)
                     for b in bubbles)
        return 2.0 * (every - same)
    ranges = [(int(b.cells[:, star_axis].min()), int(b.cells[:, star_axis].max())) for b in bubbles]
    out = exact(0.0)
    for i, bi in enumerate(bubbles):
        a0, a1 = ranges[i]
        others = [bubbles[j].cells for j in range(i + 1, len(bubbles))
                  if ranges[j][1] < a0 or ranges[j][0] > a1]
        if not others:
            continue
        cells = [bi.cells] + others
        glo, gshape = _grid(cells)
        out = out + 4.0 * pair_form(_indicator(bi.cells, glo, gshape), p,
                                    _indicator(np.concatenate(others), glo, gshape))
    return out


def localized_energy(bubbles, params: ModelParams, nc2: int = 0, star_axis: int | None = None) -> SumResult:
    out = total(bubble_line_energy(b, params) for b in bubbles)
    out = out + bubble_interactions(bubbles, float(params.p), star_axis)
    return out + _corner_weight(params.p) * nc2 / 2.0


def localized_energy_bad_tile(bubbles, params: ModelParams, nc2: int) -> SumResult:
    """``E_T``: line energies, all pair interactions and ``2^{1-p/2} n_c(T)``."""
    return localized_energy(bubbles, params, nc2, None)


def _star_axis(orientation: str) -> int:
    return 0 if orientation != HORIZONTAL else 1


def localized_energy_good_region(bubbles, params: ModelParams, orientation: str = VERTICAL) -> SumResult:
    """``E_G`` with interactions only between bubbles that cannot overlap by sliding along the stripes."""
    if any(b.corners2 for b in bubbles):
        raise DomainError("good-region energy needs corner-free bubbles")
    return localized_energy(bubbles, params, 0, _star_axis(orientation))


# ---------------------------------------------------------------------------
# droplet self-energy


@dataclass(frozen=True)
class SelfEnergyTerms:
    U: SumResult
    line: SumResult
    corners: int
    pair_term: SumResult
    pairs: int

    @property
    def rhs(self) -> SumResult:
        return self.line + self.pair_term


def _droplet_region(cells) -> tuple:
    pts = np.array(sorted(set(tuple(c) for c in cells)), dtype=np.int64).reshape(-1, 2)
    lo = pts.min(axis=0) - 1
    shape = tuple(pts.max(axis=0) - lo + 2)
    m = np.zeros(shape, dtype=bool)
    q = pts - lo
    m[q[:, 0], q[:, 1]] = True
    P = np.pad(m, 1)
    return Region(np.ones(shape, dtype=bool), P, (int(lo[0]), int(lo[1])), 1, (0, 0), NO_ORIENTATION,
                  ("droplet",)), pts


def self_energy_terms(cells, params: ModelParams) -> SelfEnergyTerms:
    region, pts = _droplet_region(cells)
    bubbles = localize(region)
    if len(bubbles) != 1:
        raise DomainError("cells must form one nearest-neighbour connected droplet")
    b = bubbles[0]
    line = exact(0.0)
    vals, counts = np.unique(b.facing, return_counts=True)
    for d, c in zip(vals, counts):
        line = line - float(c) * _m(float(d), float(params.p))
    nc = ContourSet(region.minus, region.origin).n_corners
    line = line + _corner_weight(params.p) * nc
    P = path_pair_set([tuple(x) for x in pts])
    if P:
        arr = np.array([[u[0] - v[0], u[1] - v[1]] for u, v in P], dtype=float)
        s = float(np.sum((arr ** 2).sum(axis=1) ** (-params.p / 2.0)))
        pair_term = SumResult(4.0 * s, 4.0 * s * 1e-14)
    else:
        pair_term = exact(0.0)
    U = droplet_self_energy(Droplet.from_cells([tuple(x) for x in pts]), params)
    return SelfEnergyTerms(U, line, nc, pair_term, len(P))


def self_energy_lower_bound_check(cells, params: ModelParams) -> Certificate:
    """``U(delta) >= -sum_b M(d_b) + 2^{1-p/2} N_c + 4 sum_P |x-y|^{-p}``."""
    t = self_energy_terms(cells, params)
    return Certificate(t.U, t.rhs, context="droplet self-energy bound",
                       extra={"size": len(set(map(tuple, cells))), "N_c": t.corners, "pairs": t.pairs})


# ---------------------------------------------------------------------------
# localization


@dataclass(frozen=True)
class LocalizedEnergies:
    tiles: dict
    regions: dict

    @property
    def total(self) -> SumResult:
        return total(list(self.tiles.values()) + list(self.regions.values()))


def localized_energies(partition: TilePartition, params: ModelParams) -> LocalizedEnergies:
    tiles = {}
    for a, b in partition.bad_tiles():
        bub = localize(partition.tile_region(a, b))
        tiles[(a, b)] = localized_energy_bad_tile(bub, params, int(partition.nc2[a, b]))
    regions = {}
    for k, g in enumerate(partition.regions):
        bub = localize(partition.region(k))
        regions[k] = localized_energy_good_region(bub, params, g.orientation)
    return LocalizedEnergies(tiles, regions)


def localization_check(config: SpinConfig, ell: int, params: ModelParams, origin=(0, 0),
                       partition: TilePartition | None = None) -> Certificate:
    """``H^+ >= sum_T E_T + sum_G E_G`` for a plus-boundary configuration."""
    if config.boundary.kind != "plus":
        raise DomainError("localization bound is stated for plus boundary conditions")
    part = partition or tile_partition(config, ell, origin)
    loc = localized_energies(part, params)
    lhs = relative_energy(config, params)
    return Certificate(lhs, loc.total, context="localization bound",
                       extra={"ell": int(ell), "bad_tiles": part.n_bad, "good_regions": len(part.regions)})


# ---------------------------------------------------------------------------
# good regions


def sliced_energy(sliced: SlicedRegion, params: ModelParams) -> SumResult:
    bub = localize(sliced.region)
    return localized_energy_good_region(bub, params, VERTICAL)


def lemma23_rhs(sliced: SlicedRegion, params: ModelParams) -> SumResult:
    out = exact(0.0)
    for s in sliced.slices:
        if s.sequence is not None:
            out = out + float(s.height) * e_infinity(s.sequence, params)
    for seg in sliced.segments:
        out = out - f_interaction(seg.w1, seg.h, seg.w2, params)
    return out


def lemma23_check(sliced: SlicedRegion, params: ModelParams) -> Certificate:
    """``E_{G'} >= ell sum_j e_inf(seq_j) - sum_j f(w1(s_j), h(s_j), w2(s_j))``."""
    return Certificate(sliced_energy(sliced, params), lemma23_rhs(sliced, params),
                       context="good-region slicing bound",
                       extra={"slices": len(sliced.slices), "segments": len(sliced.segments)})


def _width_penalty(A: dict, params: ModelParams, h_star: int) -> SumResult:
    es_star = striped_energy_per_site(h_star, params)
    out = exact(0.0)
    for h, area in A.items():
        if h != h_star:
            out = out + 0.5 * float(area) * (striped_energy_per_site(int(h), params) - es_star)
    return out


def lemma22_check(region: Region, params: ModelParams, c1: float | None = None) -> Certificate:
    """``E_G >= e_s(h*)|G| - c1 |tau| |dG| + (1/2) sum_{h != h*} (e_s(h) - e_s(h*)) A_h(G)``.

    ``extra["c1_required"]`` is the smallest ``c1`` for which the bound holds on ``region``.
    """
    params.require_stripe_regime()
    h_star, _ = optimal_width(params)
    bub = localize(region)
    lhs = localized_energy_good_region(bub, params, region.orientation)
    A = stripe_inventory(region.minus, region.mask, region.orientation) if region.orientation != NO_ORIENTATION else {}
    base = striped_energy_per_site(h_star, params) * float(region.area) + _width_penalty(A, params, h_star)
    edge = abs(params.tau) * region.perimeter
    need = (base.value - lhs.value) / edge if edge else 0.0
    c = need if c1 is None else c1
    return Certificate(lhs, base - c * edge, context="good-region bound",
                       extra={"c1": c, "c1_required": need, "area": region.area,
                              "perimeter": region.perimeter, "A_h": {str(k): v for k, v in A.items()}})


# ---------------------------------------------------------------------------
# bad tiles


@dataclass(frozen=True)
class Lemma1Report:
    certificate: Certificate
    ingredients: list
    c2_required: float

    @property
    def ok(self) -> bool:
        return self.certificate.ok and all(c.ok for c in self.ingredients)


def lemma1_check(partition: TilePartition, tile: tuple, params: ModelParams, c2: float | None = None,
                 window: Window | None = DEFAULT_WINDOW) -> Lemma1Report:
    """``E_T >= ell^2 e_s(h*) + c2 [n_c(T) + |tau|^{(p-2)/(p-3)} ell^2 chi_hole(T)]`` and its ingredients.

    Ingredients per cornered bubble: the line-energy bound by ``tau |Gamma| + 2^{1-p/2} nu_c``
    and the length bound ``|Gamma| <= 2 ell + 2 ell nu_c``.
    """
    params.require_stripe_regime()
    ell = partition.ell
    if window is not None:
        window.check(ell, params)
    a, b = tile
    if not partition.bad[a, b]:
        raise DomainError(f"tile {tile} is not bad")
    h_star, _ = optimal_width(params)
    bub = localize(partition.tile_region(a, b))
    nc2 = int(partition.nc2[a, b])
    lhs = localized_energy_bad_tile(bub, params, nc2)
    es = striped_energy_per_site(h_star, params)
    hole = bool(partition.hole[a, b])
    weight = nc2 / 2.0 + (abs(params.tau) ** ((params.p - 2) / (params.p - 3)) * ell * ell if hole else 0.0)
    base = es * float(ell * ell)
    need = (lhs.value - base.value) / weight
    c = need if c2 is None else c2
    cert = Certificate(lhs, base + c * weight, context="bad-tile bound",
                       extra={"tile": list(tile), "nc2": nc2, "hole": hole, "c2": c, "c2_required": need})
    ingredients = []
    cw = _corner_weight(params.p)
    for bb in bub:
        if bb.corners2 == 0:
            continue
        nu = bb.nu_c
        ingredients.append(Certificate(bubble_line_energy(bb, params) + cw * nu,
                                       exact(params.tau * bb.n_bonds + cw * nu),
                                       context="cornered bubble line energy"))
        ingredients.append(Certificate(exact(2 * ell + 2 * ell * nu), exact(bb.n_bonds),
                                       context="contour length per corner"))
    return Lemma1Report(cert, ingredients, need)


# ---------------------------------------------------------------------------
# the quantitative lower bound around the optimal stripes


@dataclass(frozen=True)
class Theorem3Report:
    main: Certificate
    corollary: Certificate
    N_c: int
    N_hole: int
    C1_required: float
    strict_required: bool
    partition: TilePartition = field(repr=False)

    @property
    def strict(self) -> bool:
        return self.corollary.strict

    @property
    def ok(self) -> bool:
        return self.corollary.ok and (self.corollary.strict or not self.strict_required) and self.main.ok

    def to_dict(self) -> dict:
        return {"main": self.main.to_dict(), "corollary": self.corollary.to_dict(), "N_c": self.N_c,
                "N_hole": self.N_hole, "C1_required": self.C1_required,
                "strict_required": self.strict_required, "strict": self.strict, "ok": self.ok}


def theorem3_certificate(config: SpinConfig, params: ModelParams, ell: int | None = None,
                         C1: float | None = None, origin=(0, 0),
                         window: Window | None = DEFAULT_WINDOW) -> Theorem3Report:
    """Both sides of the lower bound on ``H_X(s_X | sigma*)`` and the ground-state corollary.

    ``config`` must carry the optimal striped boundary.  The corollary certificate checks
    ``H_X(s_X|sigma*) - H_X(sigma*_X|sigma*) >= 0``; it must be strict when corners exist.
    """
    params.require_stripe_regime()
    b = config.boundary
    h_star, tie = optimal_width(params)
    if b.kind != "striped" or b.h != h_star:
        raise DomainError("boundary must be the optimal striped state")
    ell = int(ell or default_ell(h_star, window.c_low if window else 8.0))
    if window is not None:
        window.check(ell, params)
    if hole_side(ell) <= h_star:
        raise DomainError("tiles too small: optimal stripes would contain holes")
    part = tile_partition(config, ell, origin)
    gain = relative_energy(config, params)
    N_c = part.contours.n_corners
    N_hole = part.n_hole
    penalty = total(_width_penalty(g.A_h, params, h_star) for g in part.regions) if part.regions else exact(0.0)
    weight = N_c + abs(params.tau) ** ((params.p - 2) / (params.p - 3)) * ell * ell * N_hole
    need = (gain.value - penalty.value) / weight if weight else 0.0
    c = need if C1 is None else C1
    main = Certificate(gain, penalty + c * weight, context="lower bound around optimal stripes",
                       extra={"C1": c, "N_c": N_c, "N_hole": N_hole, "ell": ell, "tie": tie})
    corollary = Certificate(gain, exact(0.0), context="ground-state property",
                            extra={"N_c": N_c, "strict_required": N_c > 0})
    return Theorem3Report(main, corollary, N_c, N_hole, need, N_c > 0, part)
