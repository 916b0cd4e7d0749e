"""Contours, tiles, bubbles, and the deformation and slicing of good regions.

Grid conventions follow :mod:`stripegs.config`: cell ``(i, j)`` of a window is the
site ``(x0 + i, y0 + j)``.  Bond keys are ``("v", i, j)`` for the dual bond between
sites ``(i-1, j)`` and ``(i, j)`` and ``("h", i, j)`` for the one between ``(i, j-1)``
and ``(i, j)``.  The dual vertex ``(i, j)`` is the lower-left corner of site ``(i, j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from .config import FOUR, HORIZONTAL, PERIODIC, VERTICAL, SpinConfig
from .results import ConstructionError, DomainError
from .stripes import INF, StripeSequence

NO_ORIENTATION = "none"
DEFAULT_C0 = 8.0


# ---------------------------------------------------------------------------
# local bond and corner structure


def _local_structure(P: np.ndarray):
    """Bonds and corner pairings of a padded boolean minus mask.

    ``vb[i, j]`` is the bond between ``P[i, j]`` and ``P[i+1, j]``; ``hb[i, j]`` the one
    between ``P[i, j]`` and ``P[i, j+1]``.  Vertex ``(a, b)`` sits between ``P[a:a+2, b:b+2]``.
    The four corner arrays say which orthogonal pairs (N-E, N-W, S-E, S-W) meet at a vertex.
    """
    vb = P[:-1, :] != P[1:, :]
    hb = P[:, :-1] != P[:, 1:]
    SW, SE, NW, NE = P[:-1, :-1], P[1:, :-1], P[:-1, 1:], P[1:, 1:]
    checker = (SW == NE) & (SE == NW) & (SW != SE)
    cNE = ((SW == SE) & (SE == NW) & (NW != NE)) | (checker & NE)
    cSW = ((NE == SE) & (SE == NW) & (SW != NE)) | (checker & NE)
    cNW = ((SW == SE) & (SE == NE) & (NW != SW)) | (checker & NW)
    cSE = ((SW == NW) & (NW == NE) & (SE != SW)) | (checker & SE)
    vinc = np.zeros(vb.shape, dtype=np.int64)
    hinc = np.zeros(hb.shape, dtype=np.int64)
    vinc[:, 1:] += cNE.astype(int) + cNW
    vinc[:, :-1] += cSE.astype(int) + cSW
    hinc[1:, :] += cNE.astype(int) + cSE
    hinc[:-1, :] += cNW.astype(int) + cSW
    return vb, hb, vinc, hinc, (cNE, cNW, cSE, cSW), checker


def padded_minus(config: SpinConfig, pad: int = 1) -> np.ndarray:
    """Minus mask of the box with ``pad`` layers of boundary spins around it."""
    if config.boundary.kind == PERIODIC:
        raise DomainError("contours need a fixed exterior (plus or striped boundary)")
    nx, ny = config.shape
    x0, y0 = config.origin
    X, Y = np.meshgrid(np.arange(x0 - pad, x0 + nx + pad), np.arange(y0 - pad, y0 + ny + pad),
                       indexing="ij")
    s = config.boundary.spins_at(X, Y).copy()
    s[pad:pad + nx, pad:pad + ny] = config.spins
    return s < 0


@dataclass(frozen=True)
class Contour:
    """A chain of dual bonds; closed unless it leaves the modeled window."""

    bonds: tuple
    closed: bool
    corners: int

    @property
    def length(self) -> int:
        return len(self.bonds)


@dataclass(frozen=True, eq=False)
class ContourSet:
    """Contour bonds of a window, corner structure and the chopped contours.

    ``minus`` is padded by one cell; ``origin`` is the site of ``minus[1, 1]``.
    Bonds with at least one side in the window are the window's bonds.
    """

    minus: np.ndarray
    origin: tuple

    @cached_property
    def _local(self):
        return _local_structure(self.minus)

    @property
    def shape(self) -> tuple:
        return (self.minus.shape[0] - 2, self.minus.shape[1] - 2)

    @property
    def vertical_bonds(self) -> np.ndarray:
        vb = self._local[0].copy()
        vb[:, 0] = vb[:, -1] = False
        return vb

    @property
    def horizontal_bonds(self) -> np.ndarray:
        hb = self._local[1].copy()
        hb[0, :] = hb[-1, :] = False
        return hb

    @property
    def vertical_incidence(self) -> np.ndarray:
        return self._local[2]

    @property
    def horizontal_incidence(self) -> np.ndarray:
        return self._local[3]

    @property
    def corner_arrays(self):
        return self._local[4]

    @property
    def n_bonds(self) -> int:
        return int(self.vertical_bonds.sum() + self.horizontal_bonds.sum())

    @property
    def n_corners(self) -> int:
        """``N_c``: orthogonal pairings at vertices touching the window."""
        return int(sum(int(c.sum()) for c in self.corner_arrays))

    @property
    def n_chopped(self) -> int:
        return int(self._local[5].sum())

    def vkey(self, i, j):
        return ("v", self.origin[0] + int(i), self.origin[1] + int(j) - 1)

    def hkey(self, i, j):
        return ("h", self.origin[0] + int(i) - 1, self.origin[1] + int(j))

    def bonds(self) -> list:
        out = [self.vkey(i, j) for i, j in np.argwhere(self.vertical_bonds)]
        out += [self.hkey(i, j) for i, j in np.argwhere(self.horizontal_bonds)]
        return out

    @cached_property
    def contours(self) -> tuple:
        return tuple(_trace(self))

    def to_dict(self) -> dict:
        return {
            "N_c": self.n_corners,
            "bonds": self.n_bonds,
            "chopped_vertices": self.n_chopped,
            "contours": [{"length": c.length, "corners": c.corners, "closed": c.closed}
                         for c in self.contours],
        }


def extract_contours(config: SpinConfig) -> ContourSet:
    """Contour bonds of ``config`` with 4-valent vertices chopped.

    At a vertex where two minus sites touch diagonally the bonds are paired so that
    each minus square keeps its own corner.
    """
    return ContourSet(padded_minus(config, 1), config.origin)


def _vertex_pairs(cs: ContourSet):
    """Map ``(vertex, bond) -> partner bond`` and the set of corner pairings."""
    vb, hb = cs._local[0], cs._local[1]
    cNE, cNW, cSE, cSW = cs.corner_arrays
    X0, Y0 = cs.origin
    partner = {}
    corner = set()
    deg = (vb[:, 1:].astype(int) + vb[:, :-1] + hb[1:, :] + hb[:-1, :])
    for a, b in np.argwhere(deg > 0):
        vx = (X0 + a, Y0 + b)
        N = ("v", vx[0], vx[1])
        S = ("v", vx[0], vx[1] - 1)
        E = ("h", vx[0], vx[1])
        W = ("h", vx[0] - 1, vx[1])
        pairs = []
        if cNE[a, b]:
            pairs.append((N, E, True))
        if cNW[a, b]:
            pairs.append((N, W, True))
        if cSE[a, b]:
            pairs.append((S, E, True))
        if cSW[a, b]:
            pairs.append((S, W, True))
        if not pairs:
            if vb[a, b + 1] and vb[a, b]:
                pairs.append((N, S, False))
            if hb[a + 1, b] and hb[a, b]:
                pairs.append((E, W, False))
        for u, w, orth in pairs:
            partner[(vx, u)] = w
            partner[(vx, w)] = u
            if orth:
                corner.add((vx, frozenset((u, w))))
    return partner, corner


def _ends(bond):
    kind, i, j = bond
    if kind == "v":
        return (i, j), (i, j + 1)
    return (i, j), (i + 1, j)


def _trace(cs: ContourSet) -> list:
    keys = set(cs.bonds())
    partner, corner = _vertex_pairs(cs)

    def step(bond, vx):
        nxt = partner.get((vx, bond))
        if nxt is None or nxt not in keys:
            return None, None
        a, b = _ends(nxt)
        return nxt, (b if a == vx else a)

    def is_corner(vx, u, w):
        return (vx, frozenset((u, w))) in corner

    out = []
    seen = set()
    # open chains first, starting from a free end
    starts = []
    for bnd in sorted(keys):
        for vx in _ends(bnd):
            if step(bnd, vx)[0] is None:
                starts.append((bnd, vx))
    for bnd, free in starts:
        if bnd in seen:
            continue
        a, b = _ends(bnd)
        vx = b if a == free else a
        chain, corners = [bnd], 0
        seen.add(bnd)
        while True:
            nxt, far = step(chain[-1], vx)
            if nxt is None or nxt in seen:
                break
            corners += is_corner(vx, chain[-1], nxt)
            chain.append(nxt)
            seen.add(nxt)
            vx = far
        out.append(Contour(tuple(chain), False, corners))
    for bnd in sorted(keys):
        if bnd in seen:
            continue
        vx = _ends(bnd)[1]
        chain, corners = [bnd], 0
        seen.add(bnd)
        while True:
            nxt, far = step(chain[-1], vx)
            if nxt is None:
                raise ConstructionError(f"contour through {bnd} does not close")
            if nxt == bnd:
                corners += is_corner(vx, chain[-1], nxt)
                break
            corners += is_corner(vx, chain[-1], nxt)
            chain.append(nxt)
            seen.add(nxt)
            vx = far
        out.append(Contour(tuple(chain), True, corners))
    return out


# ---------------------------------------------------------------------------
# tiles


def default_ell(h_star: int, c0: float = DEFAULT_C0) -> int:
    return int(math.ceil(c0 * h_star))


def hole_side(ell: int) -> int:
    return ell // 5


def perimeter(mask: np.ndarray) -> int:
    """Number of unit edges between ``mask`` and its complement."""
    m = np.pad(np.asarray(mask, dtype=bool), 1)
    return int((m[1:, :] != m[:-1, :]).sum() + (m[:, 1:] != m[:, :-1]).sum())


def _runs(row: np.ndarray):
    """``(start, stop, value)`` for the maximal constant runs of a 1D array."""
    row = np.asarray(row)
    if row.size == 0:
        return []
    cut = np.flatnonzero(row[1:] != row[:-1]) + 1
    lo = np.concatenate([[0], cut])
    hi = np.concatenate([cut, [row.size]])
    return [(int(a), int(b), row[a]) for a, b in zip(lo, hi)]


def stripe_inventory(minus: np.ndarray, mask: np.ndarray, orientation: str) -> dict:
    """``A_h``: cells in maximal uniform runs of length ``h`` lying in ``mask``.

    Runs are taken across the stripes (along rows for vertical stripes) and count only
    when both ends are contour bonds, i.e. the run is a full stripe width.  ``minus`` is
    padded by one cell relative to ``mask``.
    """
    if orientation == HORIZONTAL:
        return stripe_inventory(minus.T, mask.T, VERTICAL)
    out: dict = {}
    nx, ny = mask.shape
    for j in range(ny):
        inside = mask[:, j]
        if not inside.any():
            continue
        full = minus[:, j + 1]
        # runs of the padded row; a run counts when it is bounded by sign changes
        for a, b, _ in _runs(full):
            if a == 0 or b == full.size:
                continue
            lo, hi = a - 1, b - 1
            if lo < 0 or hi > nx or not inside[lo:hi].all():
                continue
            h = b - a
            out[h] = out.get(h, 0) + h
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class GoodRegion:
    index: int
    tiles: tuple
    orientation: str
    area: int
    perimeter: int
    A_h: dict

    def to_dict(self) -> dict:
        return {"index": self.index, "orientation": self.orientation, "area": self.area,
                "perimeter": self.perimeter, "tiles": [list(t) for t in self.tiles],
                "A_h": {str(k): v for k, v in self.A_h.items()}}


@dataclass(frozen=True, eq=False)
class TilePartition:
    """Tiles of side ``ell`` covering a window, classified bad or good.

    ``window_origin`` is the site of window cell ``(0, 0)``; tile ``(a, b)`` covers window
    cells ``[a ell, (a+1) ell) x [b ell, (b+1) ell)``.  ``nc2`` stores ``2 n_c(T)``.
    """

    ell: int
    tile_origin: tuple
    window_origin: tuple
    contours: ContourSet
    nc2: np.ndarray
    hole: np.ndarray
    bad: np.ndarray
    labels: np.ndarray
    regions: tuple
    vowner: np.ndarray = field(repr=False)
    howner: np.ndarray = field(repr=False)

    @property
    def ntiles(self) -> tuple:
        return self.nc2.shape

    @property
    def minus(self) -> np.ndarray:
        return self.contours.minus

    @property
    def n_bad(self) -> int:
        return int(self.bad.sum())

    @property
    def n_hole(self) -> int:
        return int(self.hole.sum())

    @property
    def total_nc2(self) -> int:
        return int(self.nc2.sum())

    def tile_coords(self, a: int, b: int) -> tuple:
        return (self.window_origin[0] + a * self.ell, self.window_origin[1] + b * self.ell)

    def tile_mask(self, a: int, b: int) -> np.ndarray:
        m = np.zeros(self.contours.shape, dtype=bool)
        L = self.ell
        m[a * L:(a + 1) * L, b * L:(b + 1) * L] = True
        return m

    def region_mask(self, k: int) -> np.ndarray:
        t = self.labels == self.regions[k].index
        return np.kron(t, np.ones((self.ell, self.ell), dtype=bool)).astype(bool)

    def region(self, k: int) -> "Region":
        g = self.regions[k]
        return Region(self.region_mask(k), self.minus, self.window_origin, self.ell,
                      self.tile_origin, g.orientation, ("good", k))

    def tile_region(self, a: int, b: int) -> "Region":
        return Region(self.tile_mask(a, b), self.minus, self.window_origin, self.ell,
                      self.tile_origin, NO_ORIENTATION, ("tile", a, b))

    def bad_tiles(self) -> list:
        return [tuple(int(v) for v in t) for t in np.argwhere(self.bad)]

    def to_dict(self) -> dict:
        tiles = []
        for a in range(self.ntiles[0]):
            for b in range(self.ntiles[1]):
                tiles.append({"coords": list(self.tile_coords(a, b)), "nc2": int(self.nc2[a, b]),
                              "hole": bool(self.hole[a, b]), "bad": bool(self.bad[a, b])})
        return {
            "ell": self.ell,
            "tile_origin": list(self.tile_origin),
            "window_origin": list(self.window_origin),
            "N_c": self.contours.n_corners,
            "sum_nc2": self.total_nc2,
            "n_bad": self.n_bad,
            "n_hole": self.n_hole,
            "tiles": tiles,
            "good_regions": [g.to_dict() for g in self.regions],
        }


def tile_window(config: SpinConfig, ell: int, origin=(0, 0)) -> SpinConfig:
    """The union of tiles meeting the box, filled with boundary spins outside it."""
    nx, ny = config.shape
    x0, y0 = config.origin
    ox, oy = int(origin[0]), int(origin[1])
    a0, a1 = (x0 - ox) // ell, (x0 + nx - 1 - ox) // ell
    b0, b1 = (y0 - oy) // ell, (y0 + ny - 1 - oy) // ell
    X0, Y0 = ox + a0 * ell, oy + b0 * ell
    W, H = (a1 - a0 + 1) * ell, (b1 - b0 + 1) * ell
    if config.boundary.kind == PERIODIC:
        raise DomainError("tiling needs a fixed exterior (plus or striped boundary)")
    X, Y = np.meshgrid(np.arange(X0, X0 + W), np.arange(Y0, Y0 + H), indexing="ij")
    s = config.boundary.spins_at(X, Y).copy()
    s[x0 - X0:x0 - X0 + nx, y0 - Y0:y0 - Y0 + ny] = config.spins
    return SpinConfig(s, (X0, Y0), config.boundary)


def _hole_flags(minus: np.ndarray, ell: int, k: int) -> np.ndarray:
    nx, ny = minus.shape
    I = np.zeros((nx + 1, ny + 1), dtype=np.int64)
    I[1:, 1:] = np.cumsum(np.cumsum(minus, axis=0), axis=1)
    S = I[k:, k:] - I[:-k, k:] - I[k:, :-k] + I[:-k, :-k]
    uniform = (S == 0) | (S == k * k)
    ia = np.arange(nx - k + 1)
    ja = np.arange(ny - k + 1)
    ok_i = (ia % ell) <= ell - k
    ok_j = (ja % ell) <= ell - k
    u = uniform & ok_i[:, None] & ok_j[None, :]
    ta = ia // ell
    tb = ja // ell
    out = np.zeros((nx // ell, ny // ell), dtype=bool)
    hits = np.argwhere(u)
    out[ta[hits[:, 0]], tb[hits[:, 1]]] = True
    return out


def tile_partition(config: SpinConfig, ell: int, origin=(0, 0)) -> TilePartition:
    """Pave with ``ell``-tiles, count corners per tile, find holes and good regions.

    Each bond goes to the tile holding its minus side; ``n_c(T)`` is half the number of
    (corner, bond) incidences with the bond in ``T``.
    """
    ell = int(ell)
    if ell < 5:
        raise DomainError("tile side must be at least 5")
    win = tile_window(config, ell, origin)
    cs = extract_contours(win)
    P = cs.minus
    nx, ny = cs.shape
    ntx, nty = nx // ell, ny // ell
    vb, hb = cs.vertical_bonds, cs.horizontal_bonds
    vinc, hinc = cs.vertical_incidence, cs.horizontal_incidence

    # owner tiles: minus side of each bond, in window coordinates
    vi, vj = np.nonzero(vb)
    left_minus = P[vi, vj]
    ci = np.where(left_minus, vi - 1, vi)
    cj = vj - 1
    vowner = np.full(vb.shape, -1, dtype=np.int64)
    ok = (ci >= 0) & (ci < nx) & (cj >= 0) & (cj < ny)
    vowner[vi[ok], vj[ok]] = (ci[ok] // ell) * nty + cj[ok] // ell
    hi_, hj = np.nonzero(hb)
    low_minus = P[hi_, hj]
    ci = hi_ - 1
    cj = np.where(low_minus, hj - 1, hj)
    howner = np.full(hb.shape, -1, dtype=np.int64)
    ok = (ci >= 0) & (ci < nx) & (cj >= 0) & (cj < ny)
    howner[hi_[ok], hj[ok]] = (ci[ok] // ell) * nty + cj[ok] // ell

    nc2 = np.zeros(ntx * nty, dtype=np.int64)
    m = vowner >= 0
    np.add.at(nc2, vowner[m], vinc[m])
    m = howner >= 0
    np.add.at(nc2, howner[m], hinc[m])
    nc2 = nc2.reshape(ntx, nty)

    k = hole_side(ell)
    minus_w = P[1:-1, 1:-1]
    hole = _hole_flags(minus_w, ell, k)
    bad = (nc2 > 0) | hole
    labels, n = ndimage.label(~bad, structure=FOUR)

    # orientation from bonds owned by each region
    vcount = np.zeros(ntx * nty, dtype=np.int64)
    hcount = np.zeros(ntx * nty, dtype=np.int64)
    np.add.at(vcount, vowner[vowner >= 0], 1)
    np.add.at(hcount, howner[howner >= 0], 1)
    vcount = vcount.reshape(ntx, nty)
    hcount = hcount.reshape(ntx, nty)
    regions = []
    for r in range(1, n + 1):
        t = labels == r
        nv, nh = int(vcount[t].sum()), int(hcount[t].sum())
        if nv and nh:
            raise ConstructionError(f"good region {r} mixes vertical and horizontal contours")
        orient = VERTICAL if nv else (HORIZONTAL if nh else NO_ORIENTATION)
        cmask = np.kron(t, np.ones((ell, ell), dtype=bool)).astype(bool)
        A = stripe_inventory(P, cmask, orient) if orient != NO_ORIENTATION else {}
        tiles = tuple((int(a), int(b)) for a, b in np.argwhere(t))
        regions.append(GoodRegion(r, tiles, orient, int(cmask.sum()), perimeter(cmask), A))
    return TilePartition(ell, (int(origin[0]), int(origin[1])), win.origin, cs, nc2, hole, bad,
                         labels, tuple(regions), vowner, howner)


# ---------------------------------------------------------------------------
# regions and bubbles


@dataclass(frozen=True, eq=False)
class Region:
    """A set of window cells together with the configuration around it.

    ``minus`` is the padded minus mask of the whole window (pad 1), ``origin`` the site
    of window cell ``(0, 0)``; tile bands are measured from ``tile_origin``.
    """

    mask: np.ndarray
    minus: np.ndarray
    origin: tuple
    ell: int
    tile_origin: tuple = (0, 0)
    orientation: str = VERTICAL
    key: tuple = ("region",)

    @property
    def area(self) -> int:
        return int(self.mask.sum())

    @property
    def perimeter(self) -> int:
        return perimeter(self.mask)

    @property
    def minus_window(self) -> np.ndarray:
        return self.minus[1:-1, 1:-1]

    def transposed(self) -> "Region":
        o = {VERTICAL: HORIZONTAL, HORIZONTAL: VERTICAL}.get(self.orientation, self.orientation)
        return Region(self.mask.T.copy(), self.minus.T.copy(), self.origin[::-1], self.ell,
                      self.tile_origin[::-1], o, self.key)

    def with_mask(self, mask: np.ndarray, key=None) -> "Region":
        return Region(np.asarray(mask, dtype=bool), self.minus, self.origin, self.ell,
                      self.tile_origin, self.orientation, key or self.key)

    def bubbles(self) -> list:
        return localize(self)


@dataclass(frozen=True, eq=False)
class Bubble:
    """Connected component of a droplet inside a region, with its contour portion.

    ``cells`` are window coordinates.  ``bonds`` holds ``(kind, i, j)`` in padded-array
    indices of :class:`ContourSet` (``kind`` 0 vertical, 1 horizontal); ``facing`` the
    facing distance of each bond (``inf`` when the run leaves the region inside the
    droplet); ``corners2`` twice the number of corners on the portion.
    """

    region: tuple
    label: int
    cells: np.ndarray
    bonds: np.ndarray
    facing: np.ndarray
    corners2: int

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def nu_c(self) -> float:
        return self.corners2 / 2.0

    @property
    def bbox(self) -> tuple:
        lo = self.cells.min(axis=0)
        hi = self.cells.max(axis=0)
        return int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])

    @property
    def is_rectangular(self) -> bool:
        x0, y0, x1, y1 = self.bbox
        return self.size == (x1 - x0 + 1) * (y1 - y0 + 1)

    @property
    def n_vertical(self) -> int:
        return int((self.bonds[:, 0] == 0).sum()) if len(self.bonds) else 0

    def mask(self, shape) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[self.cells[:, 0], self.cells[:, 1]] = True
        return m


def _run_lengths(M: np.ndarray, axis: int, forward: bool) -> np.ndarray:
    """Consecutive ``M`` cells starting at each cell along ``axis``."""
    A = np.moveaxis(M, axis, 0)
    R = np.zeros(A.shape, dtype=np.int64)
    n = A.shape[0]
    rng = range(n - 1, -1, -1) if forward else range(n)
    prev = np.zeros(A.shape[1:], dtype=np.int64)
    for i in rng:
        prev = np.where(A[i], prev + 1, 0)
        R[i] = prev
    return np.moveaxis(R, 0, axis)


def localize(region: Region) -> list:
    """Bubbles of the minus set in ``region`` with facing distances and corner counts."""
    P = region.minus
    Q = np.asarray(region.mask, dtype=bool)
    nx, ny = Q.shape
    M = P[1:-1, 1:-1] & Q
    lab, n = ndimage.label(M, structure=FOUR)
    if n == 0:
        return []
    vb, hb, vinc, hinc, _, _ = _local_structure(P)
    bonds = {k: [] for k in range(1, n + 1)}
    facing = {k: [] for k in range(1, n + 1)}
    corners = dict.fromkeys(range(1, n + 1), 0)

    Rr = _run_lengths(M, 0, True)
    Rl = _run_lengths(M, 0, False)
    Ru = _run_lengths(M, 1, True)
    Rd = _run_lengths(M, 1, False)

    # vertical bonds: vb[i, j] between P[i, j] and P[i+1, j] (window cells i-1 and i, row j-1)
    for i, j in np.argwhere(vb[:, 1:-1]):
        j = j + 1
        if P[i + 1, j]:
            c = (i, j - 1)
            if not (0 <= c[0] < nx and M[c]):
                continue
            r = Rr[c]
            term = P[c[0] + r + 1, c[1] + 1]
        else:
            c = (i - 1, j - 1)
            if not (0 <= c[0] < nx and M[c]):
                continue
            r = Rl[c]
            term = P[c[0] - r + 1, c[1] + 1]
        k = lab[c]
        bonds[k].append((0, i, j))
        facing[k].append(INF if term else float(r))
        corners[k] += int(vinc[i, j])
    for i, j in np.argwhere(hb[1:-1, :]):
        i = i + 1
        if P[i, j + 1]:
            c = (i - 1, j)
            if not (0 <= c[1] < ny and M[c]):
                continue
            r = Ru[c]
            term = P[c[0] + 1, c[1] + r + 1]
        else:
            c = (i - 1, j - 1)
            if not (0 <= c[1] < ny and M[c]):
                continue
            r = Rd[c]
            term = P[c[0] + 1, c[1] - r + 1]
        k = lab[c]
        bonds[k].append((1, i, j))
        facing[k].append(INF if term else float(r))
        corners[k] += int(hinc[i, j])
    out = []
    objs = ndimage.find_objects(lab)
    for k in range(1, n + 1):
        sl = objs[k - 1]
        sub = np.argwhere(lab[sl] == k)
        cells = sub + np.array([sl[0].start, sl[1].start])
        out.append(Bubble(region.key, k, cells, np.array(bonds[k], dtype=np.int64).reshape(-1, 3),
                          np.array(facing[k], dtype=float), corners[k]))
    return out


def localize_bubbles(partition: TilePartition) -> dict:
    """Bubbles of every bad tile and every good region, keyed by region."""
    out = {}
    for a, b in partition.bad_tiles():
        out[("tile", a, b)] = localize(partition.tile_region(a, b))
    for k in range(len(partition.regions)):
        out[("good", k)] = localize(partition.region(k))
    return out


# ---------------------------------------------------------------------------
# deformation of a good region


@dataclass(frozen=True)
class Move:
    band: int
    side: str
    boundary: int
    target: int

    @property
    def distance(self) -> int:
        return abs(self.target - self.boundary)


@dataclass(frozen=True, eq=False)
class DeformedRegion:
    """A good region ``G`` and its deformation ``G'`` with rectangular bubbles.

    Horizontally striped regions are handled in transposed coordinates (``transposed``).
    """

    original: Region
    region: Region
    moves: tuple
    transposed: bool

    @property
    def perimeter_before(self) -> int:
        return self.original.perimeter

    @property
    def perimeter_after(self) -> int:
        return self.region.perimeter

    @property
    def max_move(self) -> int:
        return max((m.distance for m in self.moves), default=0)


def _bands(region: Region):
    """Window row ranges of the tile bands crossing the window."""
    ny = region.mask.shape[1]
    y = region.origin[1] + np.arange(ny)
    band = (y - region.tile_origin[1]) // region.ell
    out = []
    for a, b, v in _runs(band):
        out.append((int(v), a, b))
    return out


def _intervals(row: np.ndarray):
    return [(a, b) for a, b, v in _runs(row) if v]


def _rect_info(region: Region):
    """Labels of minus components in the region and which are walled rectangles."""
    P = region.minus
    M = P[1:-1, 1:-1] & region.mask
    lab, n = ndimage.label(M, structure=FOUR)
    info = {}
    for k, sl in enumerate(ndimage.find_objects(lab), start=1):
        box = lab[sl] == k
        x0, x1 = sl[0].start, sl[0].stop
        y0, y1 = sl[1].start, sl[1].stop
        rect = bool(box.all())
        lwall = not P[x0, y0 + 1:y1 + 1].any()
        rwall = not P[x1 + 1, y0 + 1:y1 + 1].any()
        info[k] = (rect, x0, x1, y0, y1, lwall, rwall)
    return lab, info


def deform_good_region(region: Region) -> DeformedRegion:
    """Move each vertical boundary segment inward onto the nearest rectangular bubble wall.

    Segments are the tile-band pieces of the vertical boundary.  The target must be a
    contour wall of a rectangular bubble spanning the band, closer than ``2 ell / 5``.
    """
    transposed = region.orientation == HORIZONTAL
    work = region.transposed() if transposed else region
    lab, info = _rect_info(work)
    limit = 2.0 * work.ell / 5.0
    G = work.mask.copy()
    keep = G.copy()
    moves = []
    for band, r0, r1 in _bands(work):
        rows = G[:, r0:r1]
        if not (rows == rows[:, :1]).all():
            raise ConstructionError(f"band {band} is not a union of tiles")
        for xa, xb in _intervals(rows[:, 0]):
            def target(c, left):
                col = lab[c, r0:r1]
                k = col[0]
                if k == 0 or not (col == k).all():
                    return False
                rect, x0, x1, y0, y1, lw, rw = info[k]
                if not rect or y0 > r0 or y1 < r1:
                    return False
                return (x0 == c and lw) if left else (x1 - 1 == c and rw)

            cl = next((c for c in range(xa, xb) if c - xa < limit and target(c, True)), None)
            cr = next((c for c in range(xb - 1, xa - 1, -1) if xb - 1 - c < limit and target(c, False)),
                      None)
            if cl is None or cr is None or cl > cr:
                side = "left" if cl is None else "right"
                x = work.origin[0] + (xa if cl is None else xb)
                raise ConstructionError(
                    f"no rectangular bubble within 2*ell/5 of the {side} boundary at x={x}, band {band}")
            keep[xa:cl, r0:r1] = False
            keep[cr + 1:xb, r0:r1] = False
            moves.append(Move(band, "left", work.origin[0] + xa, work.origin[0] + cl))
            moves.append(Move(band, "right", work.origin[0] + xb, work.origin[0] + cr + 1))
    out = work.with_mask(keep)
    for b in localize(out):
        if not b.is_rectangular:
            x0, y0, _, _ = b.bbox
            raise ConstructionError(f"bubble at {(x0, y0)} is still not rectangular after deformation")
    return DeformedRegion(work, out, tuple(moves), transposed)


# ---------------------------------------------------------------------------
# slicing


@dataclass(frozen=True)
class Slice:
    band: int
    x0: int
    x1: int
    y0: int
    y1: int
    sequence: StripeSequence | None
    left_margin: int
    right_margin: int

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * self.height

    def to_dict(self) -> dict:
        return {"band": int(self.band), "x": [int(self.x0), int(self.x1)], "y": [int(self.y0), int(self.y1)],
                "sequence": self.sequence.as_list() if self.sequence else [],
                "margins": [int(self.left_margin), int(self.right_margin)]}


@dataclass(frozen=True)
class Segment:
    """Horizontal boundary piece of ``G'`` covering the top or bottom edge of a bubble."""

    index: int
    y: int
    x0: int
    x1: int
    side: str
    bubble: int
    w1: float
    w2: float

    @property
    def h(self) -> int:
        return self.x1 - self.x0

    def to_dict(self) -> dict:
        f = lambda w: "inf" if w == INF else int(w)  # noqa: E731
        return {"index": int(self.index), "y": int(self.y), "x": [int(self.x0), int(self.x1)],
                "side": self.side, "h": int(self.h), "w1": f(self.w1), "w2": f(self.w2),
                "bubble": int(self.bubble)}


@dataclass(frozen=True, eq=False)
class SlicedRegion:
    deformed: DeformedRegion
    slices: tuple
    segments: tuple
    pairs: tuple
    spacing_use: dict

    @property
    def region(self) -> Region:
        return self.deformed.region

    @property
    def finite_spacing_sum(self) -> int:
        return int(sum(w for s in self.segments for w in (s.w1, s.w2) if w != INF))

    @property
    def max_spacing_use(self) -> int:
        return max(self.spacing_use.values(), default=0)

    def slice_area(self) -> int:
        tot = 0
        for s in self.slices:
            inner = s.sequence.length if s.sequence else 0
            tot += s.height * (inner + s.left_margin + s.right_margin)
        return tot

    def infinite_spacings(self) -> list:
        out = []
        for s in self.segments:
            if s.w1 == INF:
                out.append((s.index, 1))
            if s.w2 == INF:
                out.append((s.index, 2))
        return out

    def to_dict(self) -> dict:
        return {
            "transposed": self.deformed.transposed,
            "area": self.region.area,
            "perimeter": [self.deformed.perimeter_before, self.deformed.perimeter_after],
            "slices": [s.to_dict() for s in self.slices],
            "segments": [s.to_dict() for s in self.segments],
            "pairs": [[int(a) for a in p] for p in self.pairs],
        }


def _slices(region: Region, lab: np.ndarray) -> list:
    Mw = region.minus_window
    out = []
    for band, r0, r1 in _bands(region):
        G = region.mask[:, r0:r1]
        if not G.any():
            continue
        if not (G == G[:, :1]).all():
            raise ConstructionError(f"band {band} is not a union of full rows")
        for xa, xb in _intervals(G[:, 0]):
            block = Mw[xa:xb, r0:r1]
            if not (block == block[:, :1]).all():
                raise ConstructionError(f"slice at x={region.origin[0] + xa} in band {band} is not striped")
            runs = _runs(block[:, 0])
            minus_runs = [(a, b) for a, b, v in runs if v]
            if minus_runs:
                widths = [b - a for a, b in minus_runs]
                gaps = [minus_runs[i + 1][0] - minus_runs[i][1] for i in range(len(minus_runs) - 1)]
                seq = StripeSequence(tuple(widths), tuple(gaps))
                lm = minus_runs[0][0]
                rm = (xb - xa) - minus_runs[-1][1]
            else:
                seq, lm, rm = None, xb - xa, 0
            out.append(Slice(band, region.origin[0] + xa, region.origin[0] + xb,
                             region.origin[1] + r0, region.origin[1] + r1, seq, lm, rm))
    return out


_LEFT = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}


def boundary_loops(mask: np.ndarray) -> list:
    """Directed boundary edges of ``mask`` with the region on the left, as closed loops.

    Each edge is ``(start_vertex, direction, cell)``; pinch vertices turn left first so
    diagonally touching cells belong to different loops.
    """
    m = np.pad(np.asarray(mask, dtype=bool), 1)
    out_edges = {}
    for i, j in np.argwhere(m):
        c = (i - 1, j - 1)
        x, y = c
        if not m[i, j - 1]:
            out_edges.setdefault((x, y), []).append(((x, y), (1, 0), c))
        if not m[i + 1, j]:
            out_edges.setdefault((x + 1, y), []).append(((x + 1, y), (0, 1), c))
        if not m[i, j + 1]:
            out_edges.setdefault((x + 1, y + 1), []).append(((x + 1, y + 1), (-1, 0), c))
        if not m[i - 1, j]:
            out_edges.setdefault((x, y + 1), []).append(((x, y + 1), (0, -1), c))
    used = set()
    loops = []
    for start in sorted(e for es in out_edges.values() for e in es):
        if start in used:
            continue
        loop = []
        e = start
        while e not in used:
            used.add(e)
            loop.append(e)
            (x, y), d, _ = e
            end = (x + d[0], y + d[1])
            cand = {c[1]: c for c in out_edges.get(end, ()) if c not in used or c == start}
            left = _LEFT[d]
            right = (-left[0], -left[1])
            nxt = cand.get(left) or cand.get(d) or cand.get(right)
            if nxt is None:
                break
            e = nxt
        loops.append(loop)
    return loops


def _walk_spacing(loop, idx_iter, own, lab, Mw):
    count = 0
    for k in idx_iter:
        _, d, c = loop[k]
        minus = bool(Mw[c])
        b = int(lab[c]) if minus else 0
        if d[1] == 0:
            if minus:
                return INF if b == own else count
            count += 1
        elif minus and b != own:
            return count
    return INF


def slice_good_region(deformed: DeformedRegion) -> SlicedRegion:
    """Slices of ``G'`` by tile bands, boundary segments with their spacings, and pairs.

    Spacings follow the boundary of ``G'`` away from each end of a segment and count plus
    horizontal edges until the boundary of another bubble is reached; reaching the other
    side of the same bubble gives ``inf``.
    """
    region = deformed.region
    Mw = region.minus_window & region.mask
    lab, _ = ndimage.label(Mw, structure=FOUR)
    slices = _slices(region, lab)
    segments = []
    use: dict = {}
    X0, Y0 = region.origin
    for li, loop in enumerate(boundary_loops(region.mask)):
        n = len(loop)

        def seg_key(k):
            _, d, c = loop[k]
            if d[1] != 0 or not Mw[c]:
                return None
            return (int(lab[c]), d)

        keys = [seg_key(k) for k in range(n)]
        start = next((k for k in range(n) if keys[k] is None or keys[k] != keys[k - 1]), None)
        if start is None:
            continue
        k = 0
        while k < n:
            a = (start + k) % n
            key = keys[a]
            if key is None:
                k += 1
                continue
            span = 1
            while span < n and keys[(a + span) % n] == key:
                span += 1
            own, d = key
            fwd = [(a + span + t) % n for t in range(n - span)]
            bwd = [(a - 1 - t) % n for t in range(n - span)]
            wf = _walk_spacing(loop, fwd, own, lab, Mw)
            wb = _walk_spacing(loop, bwd, own, lab, Mw)
            for walk, w in ((fwd, wf), (bwd, wb)):
                if w == INF:
                    continue
                counted = 0
                for t in walk:
                    if counted >= w:
                        break
                    _, dd, cc = loop[t]
                    if dd[1] == 0 and not Mw[cc]:
                        use[(li, t)] = use.get((li, t), 0) + 1
                        counted += 1
            xs = [loop[(a + t) % n][0][0] for t in range(span)]
            y = loop[a][0][1]
            if d == (1, 0):
                x0, x1, side = min(xs), max(xs) + 1, "bottom"
                w1, w2 = wb, wf
            else:
                x0, x1, side = min(xs) - 1, max(xs), "top"
                w1, w2 = wf, wb
            segments.append(Segment(0, Y0 + y, X0 + x0, X0 + x1, side, own, w1, w2))
            k += span
    segments.sort(key=lambda s: (-s.y, s.x0))
    segments = [Segment(i + 1, s.y, s.x0, s.x1, s.side, s.bubble, s.w1, s.w2)
                for i, s in enumerate(segments)]
    by_bubble: dict = {}
    for s in segments:
        by_bubble.setdefault(s.bubble, []).append(s.index)
    pairs = tuple(tuple(v) for _, v in sorted(by_bubble.items()))
    return SlicedRegion(deformed, tuple(slices), tuple(segments), pairs, use)


# ---------------------------------------------------------------------------
# path pairs


def path_pair_set(cells) -> set:
    """Pairs of droplet sites whose two L-shaped lattice paths both cross the contour twice.

    The horizontal-then-vertical and vertical-then-horizontal paths are counted by the
    number of membership changes along them.
    """
    pts = np.array(sorted(set(tuple(int(v) for v in c) for c in cells)), dtype=np.int64).reshape(-1, 2)
    if len(pts) < 2:
        return set()
    lo = pts.min(axis=0)
    g = np.zeros(tuple(pts.max(axis=0) - lo + 1), dtype=np.int8)
    q = pts - lo
    g[q[:, 0], q[:, 1]] = 1
    # cumulative membership changes along rows (axis 0) and columns (axis 1)
    ch0 = np.zeros(g.shape, dtype=np.int64)
    ch0[1:, :] = np.cumsum(g[1:, :] != g[:-1, :], axis=0)
    ch1 = np.zeros(g.shape, dtype=np.int64)
    ch1[:, 1:] = np.cumsum(g[:, 1:] != g[:, :-1], axis=1)
    a, b = np.triu_indices(len(q), k=1)
    xa, ya = q[a, 0], q[a, 1]
    xb, yb = q[b, 0], q[b, 1]
    hv = np.abs(ch0[xb, ya] - ch0[xa, ya]) + np.abs(ch1[xb, yb] - ch1[xb, ya])
    vh = np.abs(ch1[xa, yb] - ch1[xa, ya]) + np.abs(ch0[xb, yb] - ch0[xa, yb])
    sel = (hv >= 2) & (vh >= 2)
    out = set()
    for i, j in zip(a[sel], b[sel]):
        u = (int(pts[i, 0]), int(pts[i, 1]))
        v = (int(pts[j, 0]), int(pts[j, 1]))
        out.add((u, v) if u < v else (v, u))
    return out


# ---------------------------------------------------------------------------
# the running example of the deformation figures


_RUNNING = {
    "full": [(26, 30), (34, 37), (67, 71), (73, 77)],
    "bottom": [(43, 46), (49, 53), (57, 63)],
    "top": [(45, 49), (55, 63)],
}


def running_example() -> Region:
    """A good region with a protrusion, a hole and cut droplets, on tiles of side 20.

    The region has six tile-band slices after deformation; its left protrusion holds a
    bubble whose top and bottom segments see no droplet on their left.
    """
    ell = 20
    X0 = Y0 = -20
    n = 120
    G = np.zeros((n, n), dtype=bool)
    minus = np.zeros((n, n), dtype=bool)

    def box(arr, x0, x1, y0, y1):
        arr[x0 - X0:x1 - X0, y0 - Y0:y1 - Y0] = True

    box(G, 20, 80, 0, 20)
    box(G, 20, 40, 20, 40)
    box(G, 60, 80, 20, 40)
    box(G, 0, 40, 40, 60)
    box(G, 60, 80, 40, 60)
    box(G, 20, 80, 60, 80)
    # droplets run a few rows past the region so no contour bond ends inside it
    e = 5
    for a, b in _RUNNING["full"]:
        box(minus, a, b, -e, 80 + e)
    for a, b in _RUNNING["bottom"]:
        box(minus, a, b, -e, 20 + e)
    for a, b in _RUNNING["top"]:
        box(minus, a, b, 60 - e, 80 + e)
    box(minus, 4, 9, 40 - e, 60 + e)
    box(minus, 20, 24, -e, 80 + e)
    box(minus, 17, 24, 40 - e, 60 + e)
    box(minus, 60, 63, 20, 60)
    return Region(G, np.pad(minus, 1), (X0, Y0), ell, (0, 0), VERTICAL, ("running",))
