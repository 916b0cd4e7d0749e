"""Spin configurations, boundary conditions and energies.

Coordinates: ``spins[i, j]`` is the spin at site ``(x0 + i, y0 + j)``; ``x1`` is the
horizontal axis.  Sites outside the box carry the boundary spins.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.signal import fftconvolve

from .kernel import (
    REL_ROUND,
    ModelParams,
    class_sums,
    column_potential,
    lattice_zeta,
    tail_bound,
    torus_potential,
)
from .results import Certificate, DomainError, SumResult, exact, total
from .stripes import optimal_width, periodic_chain_energy, striped_energy_per_site

PLUS, PERIODIC, STRIPED = "plus", "periodic", "striped"
VERTICAL, HORIZONTAL = "vertical", "horizontal"
FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class Boundary:
    """Boundary condition: all plus, periodic, or a striped state of width ``h``.

    Striped spins are ``+1`` where ``(c - phase) mod 2h < h`` and ``-1`` otherwise,
    with ``c = x1`` for vertical stripes and ``c = x2`` for horizontal ones.
    """

    kind: str = PLUS
    h: int = 0
    orientation: str = VERTICAL
    phase: int = 0

    def __post_init__(self):
        if self.kind not in (PLUS, PERIODIC, STRIPED):
            raise DomainError(f"unknown boundary kind {self.kind!r}")
        if self.kind == STRIPED:
            if self.h < 1:
                raise DomainError("striped boundary needs h >= 1")
            if self.orientation not in (VERTICAL, HORIZONTAL):
                raise DomainError(f"unknown orientation {self.orientation!r}")
            if not 0 <= self.phase < 2 * self.h:
                raise DomainError("phase must lie in [0, 2h)")

    @classmethod
    def optimal(cls, params: ModelParams, orientation: str = VERTICAL, phase: int = 0) -> "Boundary":
        h, _ = optimal_width(params)
        return cls(STRIPED, h, orientation, phase % (2 * h))

    def spins_at(self, x1, x2) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1), np.asarray(x2))
        if self.kind == PLUS:
            return np.ones(x1.shape, dtype=np.int8)
        if self.kind == PERIODIC:
            raise DomainError("periodic boundary has no fixed exterior")
        c = x1 if self.orientation == VERTICAL else x2
        return np.where((c - self.phase) % (2 * self.h) < self.h, 1, -1).astype(np.int8)

    def describe(self) -> str:
        if self.kind == STRIPED:
            return f"striped h={self.h} orientation={self.orientation} phase={self.phase}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "Boundary":
        parts = text.split()
        if not parts:
            return cls()
        kw = dict(p.split("=", 1) for p in parts[1:])
        if parts[0] == STRIPED:
            return cls(STRIPED, int(kw["h"]), kw.get("orientation", VERTICAL), int(kw.get("phase", 0)))
        return cls(parts[0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "h": self.h, "orientation": self.orientation, "phase": self.phase}


@dataclass(frozen=True)
class SpinConfig:
    """Spins on the box ``[x0, x0+nx) x [y0, y0+ny)`` plus a boundary condition."""

    spins: np.ndarray
    origin: tuple = (0, 0)
    boundary: Boundary = field(default_factory=Boundary)

    def __post_init__(self):
        s = np.array(self.spins, dtype=np.int8)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2:
            raise DomainError("spins must be a 2D array")
        if s.size and not np.all(np.abs(s) == 1):
            raise DomainError("spins must be +-1")
        s.setflags(write=False)
        object.__setattr__(self, "spins", s)
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))

    @property
    def shape(self) -> tuple[int, int]:
        return self.spins.shape

    def coords(self):
        nx, ny = self.shape
        x0, y0 = self.origin
        return np.meshgrid(np.arange(x0, x0 + nx), np.arange(y0, y0 + ny), indexing="ij")

    def background(self) -> np.ndarray:
        """Boundary spins evaluated on the box sites."""
        return self.boundary.spins_at(*self.coords())

    def minus_mask(self) -> np.ndarray:
        return self.spins < 0

    def flipped(self) -> np.ndarray:
        """Sites where the configuration differs from its background."""
        return self.spins != self.background()

    def with_spins(self, spins) -> "SpinConfig":
        return replace(self, spins=np.asarray(spins))

    @classmethod
    def background_config(cls, shape, boundary: Boundary, origin=(0, 0)) -> "SpinConfig":
        nx, ny = shape
        X, Y = np.meshgrid(np.arange(origin[0], origin[0] + nx),
                           np.arange(origin[1], origin[1] + ny), indexing="ij")
        return cls(boundary.spins_at(X, Y), origin, boundary)

    # -- text / JSON formats -------------------------------------------------

    def to_text(self) -> str:
        lines = [f"# origin: {self.origin[0]} {self.origin[1]}",
                 f"# boundary: {self.boundary.describe()}"]
        for j in range(self.shape[1] - 1, -1, -1):
            lines.append("".join("+" if v > 0 else "-" for v in self.spins[:, j]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SpinConfig":
        origin, boundary, rows = (0, 0), Boundary(), []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                key = key.strip()
                if key == "origin":
                    a, b = val.split()
                    origin = (int(a), int(b))
                elif key == "boundary":
                    boundary = Boundary.parse(val.strip())
                continue
            if set(line) - {"+", "-"}:
                raise DomainError(f"bad grid row {line!r}")
            rows.append([1 if c == "+" else -1 for c in line])
        if not rows or len({len(r) for r in rows}) != 1:
            raise DomainError("grid rows missing or ragged")
        grid = np.array(rows[::-1], dtype=np.int8).T
        return cls(grid, origin, boundary)

    def to_json(self) -> str:
        return json.dumps({"origin": list(self.origin), "boundary": self.boundary.to_dict(),
                           "rows": self.to_text().splitlines()[2:]})

    @classmethod
    def from_json(cls, text: str) -> "SpinConfig":
        d = json.loads(text)
        b = d.get("boundary", {})
        header = f"# origin: {d['origin'][0]} {d['origin'][1]}\n"
        cfg = cls.from_text(header + "\n".join(d["rows"]))
        return replace(cfg, boundary=Boundary(**b) if b else Boundary())

    @classmethod
    def load(cls, path) -> "SpinConfig":
        text = Path(path).read_text()
        return cls.from_json(text) if text.lstrip().startswith("{") else cls.from_text(text)

    def save(self, path) -> None:
        path = Path(path)
        path.write_text(self.to_json() if path.suffix == ".json" else self.to_text())


# ---------------------------------------------------------------------------
# pair sums


def _kernel_grid(nx: int, ny: int, p: float) -> np.ndarray:
    dx = np.arange(-(nx - 1), nx)
    dy = np.arange(-(ny - 1), ny)
    r2 = (dx[:, None] ** 2 + dy[None, :] ** 2).astype(float)
    r2[nx - 1, ny - 1] = np.inf
    return r2 ** (-p / 2.0)


def pair_form(a: np.ndarray, p: float, b: np.ndarray | None = None) -> SumResult:
    """``sum_{x != y} a_x b_y |x - y|^{-p}`` for arrays on a common grid."""
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    ia = np.argwhere(a != 0)
    ib = np.argwhere(b != 0)
    if len(ia) == 0 or len(ib) == 0:
        return exact(0.0)
    if len(ia) * len(ib) <= 4_000_000:
        wa = a[tuple(ia.T)]
        wb = b[tuple(ib.T)]
        val = 0.0
        absval = 0.0
        step = max(1, 2_000_000 // len(ib))
        for lo in range(0, len(ia), step):
            d = ia[lo:lo + step, None, :] - ib[None, :, :]
            r2 = (d.astype(float) ** 2).sum(-1)
            r2[r2 == 0] = np.inf
            k = r2 ** (-p / 2.0)
            t = wa[lo:lo + step, None] * wb[None, :] * k
            val += float(t.sum())
            absval += float(np.abs(t).sum())
        return SumResult(val, REL_ROUND * absval)
    nx, ny = a.shape
    K = _kernel_grid(nx, ny, p)
    field_ = fftconvolve(b, K, mode="full")[nx - 1:2 * nx - 1, ny - 1:2 * ny - 1]
    val = float(np.sum(a * field_))
    scale = float(np.abs(a).sum() * np.abs(b).max() * K.sum())
    return SumResult(val, 1e-12 * scale)


# ---------------------------------------------------------------------------
# background fields


@lru_cache(maxsize=256)
def _stripe_field_table(h: int, p: float, d: int):
    """``phi(c) = sum_{y != x} s_y |x - y|^{-p}`` for a site in column class c mod 2h."""
    P = 2 * h
    r = np.arange(1, P + 1)
    S0, _, E0, _ = class_sums(r, P, p, d)
    s = np.where(np.arange(P) < h, 1.0, -1.0)
    v0 = column_potential(0, p, d)
    phi = np.empty(P)
    err = np.empty(P)
    for c in range(P):
        plus = s[(c + r) % P]
        minus = s[(c - r) % P]
        phi[c] = s[c] * v0.value + float(np.sum((plus + minus) * S0))
        err[c] = v0.tail_bound + 2.0 * float(np.sum(E0)) + REL_ROUND * 2 * float(np.sum(S0))
    return phi, err


def background_field(boundary: Boundary, X1, X2, params: ModelParams):
    """Field of the infinite background at sites ``(X1, X2)`` and its error bound."""
    if boundary.kind == PLUS:
        S = lattice_zeta(params.p, params.d)
        shape = np.shape(X1)
        return np.full(shape, S.value), np.full(shape, S.tail_bound)
    if boundary.kind != STRIPED:
        raise DomainError("background field needs plus or striped boundary")
    if params.d != 2:
        raise DomainError("configurations are two-dimensional")
    phi, err = _stripe_field_table(boundary.h, float(params.p), 2)
    c = X1 if boundary.orientation == VERTICAL else X2
    idx = (np.asarray(c) - boundary.phase) % (2 * boundary.h)
    return phi[idx], err[idx]


def _nn_cross(F: np.ndarray, s: np.ndarray) -> float:
    """``sum_{x in F, y not in F, |x-y|=1} s_x s_y`` on a grid padded by one site."""
    tot = 0.0
    for axis in (0, 1):
        for shift in (1, -1):
            Fn = np.roll(F, shift, axis=axis)
            sn = np.roll(s, shift, axis=axis)
            tot += float(np.sum((F & ~Fn) * s * sn))
    return tot


def _padded(config: SpinConfig, pad: int = 1):
    nx, ny = config.shape
    x0, y0 = config.origin
    X, Y = np.meshgrid(np.arange(x0 - pad, x0 + nx + pad), np.arange(y0 - pad, y0 + ny + pad),
                       indexing="ij")
    bg = config.boundary.spins_at(X, Y).astype(float)
    sig = bg.copy()
    sig[pad:pad + nx, pad:pad + ny] = config.spins
    return X, Y, bg, sig


def relative_energy(config: SpinConfig, params: ModelParams, mask=None) -> SumResult:
    """``H_X(sigma_X | s) - H_X(s_X | s)`` with ``X`` the box (or ``mask``) and ``s`` the boundary.

    Only the flipped set ``F`` enters:

        2J sum_{x in F, y notin F nn} s_x s_y - 2 sum_{x in F} s_x phi(x)
        + 2 sum_{x != y in F} s_x s_y |x-y|^{-p}.

    For plus boundary this is the plus-boundary Hamiltonian ``H^+``.
    """
    if config.boundary.kind == PERIODIC:
        raise DomainError("use periodic_energy for periodic boundary")
    X, Y, bg, sig = _padded(config)
    F = sig != bg
    if mask is not None:
        m = np.zeros_like(F)
        m[1:-1, 1:-1] = np.asarray(mask, dtype=bool)
        F &= m
    if not F.any():
        return exact(0.0)
    nn = 2.0 * params.J * _nn_cross(F, bg)
    phi, perr = background_field(config.boundary, X[F], Y[F], params)
    lin = -2.0 * float(np.sum(bg[F] * phi))
    lin_err = 2.0 * float(np.sum(perr)) + REL_ROUND * 2.0 * float(np.sum(np.abs(phi)))
    a = np.where(F, bg, 0.0)
    quad = pair_form(a, params.p)
    return SumResult(nn + lin, lin_err) + 2.0 * quad


def relative_energy_ball(config: SpinConfig, params: ModelParams, radius: int) -> SumResult:
    """Independent route for :func:`relative_energy`: every background sum is cut at
    ``|x - y| <= radius`` around each flipped site and the cut is bounded by :func:`tail_bound`.
    """
    if config.boundary.kind == PERIODIC:
        raise DomainError("ball route needs plus or striped boundary")
    R = int(radius)
    nx, ny = config.shape
    x0, y0 = config.origin
    X, Y = np.meshgrid(np.arange(x0 - R, x0 + nx + R), np.arange(y0 - R, y0 + ny + R), indexing="ij")
    bg = config.boundary.spins_at(X, Y).astype(float)
    sig = bg.copy()
    sig[R:R + nx, R:R + ny] = config.spins
    F = sig != bg
    pts = np.argwhere(F)
    if len(pts) == 0:
        return exact(0.0)
    d = np.arange(-R, R + 1)
    DX, DY = np.meshgrid(d, d, indexing="ij")
    r2 = (DX ** 2 + DY ** 2).astype(float)
    inball = (r2 <= R * R) & (r2 > 0)
    K = np.where(inball, np.where(r2 > 0, r2, 1.0) ** (-params.p / 2.0), 0.0)
    lr = 0.0
    nn = 0.0
    for i, j in pts:
        win_s = sig[i - R:i + R + 1, j - R:j + R + 1]
        win_b = bg[i - R:i + R + 1, j - R:j + R + 1]
        # pairs {x, y} with x in F: count each pair once by weighting flipped partners by 1/2
        wF = np.where(win_s != win_b, 0.5, 1.0)
        lr += float(np.sum(wF * K * ((sig[i, j] * win_s - 1.0) - (bg[i, j] * win_b - 1.0))))
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            w = 0.5 if F[i + di, j + dj] else 1.0
            nn += -params.J * w * ((sig[i, j] * sig[i + di, j + dj] - 1.0)
                                   - (bg[i, j] * bg[i + di, j + dj] - 1.0))
    tail = len(pts) * 2.0 * tail_bound(R, params.p, params.d)
    return SumResult(nn + lr, tail + REL_ROUND * abs(lr) * 10, R)


# ---------------------------------------------------------------------------
# periodic energy


def periodic_energy(config: SpinConfig, params: ModelParams) -> SumResult:
    """Energy per period of the periodic extension of the box configuration.

    Boxes of height one are treated as rings with the periodized column potential.
    """
    s = config.spins.astype(float)
    nx, ny = s.shape
    if ny == 1:
        return periodic_chain_energy(s[:, 0], params)
    if params.d != 2:
        raise DomainError("torus energies are two-dimensional")
    nn = 0.0
    for axis in (0, 1):
        nn += -params.J * float(np.sum(s * np.roll(s, -1, axis=axis) - 1.0))
    V, E = torus_potential(nx, ny, float(params.p))
    u = s - 1.0
    if not u.any():
        return exact(nn)
    Fu = np.fft.rfft2(u)
    conv = np.fft.irfft2(np.fft.rfft2(V) * Fu, s=(nx, ny))
    quad = float(np.sum(u * conv))
    lin = 2.0 * float(u.sum()) * float(V.sum())
    au = np.abs(u)
    err_conv = np.fft.irfft2(np.fft.rfft2(E) * np.fft.rfft2(au), s=(nx, ny))
    err = 0.5 * (float(np.sum(au * err_conv)) + 2.0 * float(au.sum()) * float(E.sum()))
    err += 1e-13 * float(au.sum()) * float(V.sum()) * 4
    return SumResult(nn + 0.5 * (quad + lin), err)


def torus_coupling_matrix(nx: int, ny: int, params: ModelParams):
    """Pair couplings ``c_xy`` with ``E(s) = sum_{x<y} c_xy (s_x s_y - 1)`` on the torus.

    Sites are ordered row-major (index ``i * ny + j``).
    """
    V, _ = torus_potential(nx, ny, float(params.p))
    N = nx * ny
    I, Jj = np.divmod(np.arange(N), ny)
    C = V[(I[:, None] - I[None, :]) % nx, (Jj[:, None] - Jj[None, :]) % ny].copy()
    np.fill_diagonal(C, 0.0)
    for axis_len, step in ((nx, (1, 0)), (ny, (0, 1))):
        if axis_len == 1:
            continue
        for x in range(N):
            i, j = divmod(x, ny)
            y = ((i + step[0]) % nx) * ny + (j + step[1]) % ny
            C[x, y] -= params.J
            C[y, x] -= params.J
    return C


# ---------------------------------------------------------------------------
# droplets


@dataclass(frozen=True)
class Droplet:
    """Connected set of minus sites with its boundary bonds.

    Bond keys: ``("v", i, j)`` separates ``(i-1, j)`` from ``(i, j)``;
    ``("h", i, j)`` separates ``(i, j-1)`` from ``(i, j)``.
    """

    cells: tuple
    bonds: frozenset

    @classmethod
    def from_cells(cls, cells) -> "Droplet":
        cells = tuple(sorted((int(a), int(b)) for a, b in cells))
        cs = set(cells)
        bonds = set()
        for (a, b) in cells:
            if (a + 1, b) not in cs:
                bonds.add(("v", a + 1, b))
            if (a - 1, b) not in cs:
                bonds.add(("v", a, b))
            if (a, b + 1) not in cs:
                bonds.add(("h", a, b + 1))
            if (a, b - 1) not in cs:
                bonds.add(("h", a, b))
        return cls(cells, frozenset(bonds))

    @property
    def size(self) -> int:
        return len(self.cells)

    def array(self) -> np.ndarray:
        return np.array(self.cells, dtype=np.int64).reshape(-1, 2)

    def grid(self):
        """Boolean mask over the bounding box and its lower-left corner."""
        a = self.array()
        lo = a.min(axis=0)
        hi = a.max(axis=0)
        m = np.zeros(tuple(hi - lo + 1), dtype=bool)
        m[tuple((a - lo).T)] = True
        return m, (int(lo[0]), int(lo[1]))


def label_minus(mask: np.ndarray):
    return ndimage.label(mask, structure=FOUR)


def droplet_decompose(config: SpinConfig) -> list[Droplet]:
    """Nearest-neighbour components of the minus set (plus boundary)."""
    if config.boundary.kind != PLUS:
        raise DomainError("droplets need finitely many minus spins (plus boundary)")
    lab, n = label_minus(config.minus_mask())
    x0, y0 = config.origin
    out = []
    for k in range(1, n + 1):
        idx = np.argwhere(lab == k)
        out.append(Droplet.from_cells([(x0 + i, y0 + j) for i, j in idx]))
    out.sort(key=lambda d: d.cells[0])
    return out


def _droplet_pairs(cells: np.ndarray, p: float) -> SumResult:
    lo = cells.min(axis=0)
    hi = cells.max(axis=0)
    g = np.zeros(tuple(hi - lo + 1))
    g[tuple((cells - lo).T)] = 1.0
    return pair_form(g, p)


def droplet_self_energy(drop: Droplet, params: ModelParams) -> SumResult:
    """``U(delta) = -2 sum_{x in delta} sum_{y notin delta} |x - y|^{-p}``."""
    S0 = lattice_zeta(params.p, params.d)
    inside = _droplet_pairs(drop.array(), params.p)
    return -2.0 * (drop.size * S0 - inside)


def droplet_interaction(a: Droplet, b: Droplet, params: ModelParams) -> SumResult:
    """``W(delta, delta') = 4 sum_{x in delta, y in delta'} |x - y|^{-p}``."""
    if set(a.cells) & set(b.cells):
        raise DomainError("droplets overlap")
    A = a.array().astype(float)
    B = b.array().astype(float)
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
    t = d2 ** (-params.p / 2.0)
    val = 4.0 * float(t.sum())
    return SumResult(val, REL_ROUND * val)


def droplet_representation(droplets, params: ModelParams) -> SumResult:
    """``2J sum |Gamma| + sum U + (1/2) sum_{delta != delta'} W``."""
    out = exact(2.0 * params.J * sum(len(d.bonds) for d in droplets))
    out = out + total(droplet_self_energy(d, params) for d in droplets)
    if len(droplets) > 1:
        cells = [d.array() for d in droplets]
        allc = np.concatenate(cells)
        lo = allc.min(axis=0)
        hi = allc.max(axis=0)
        # sum over ordered pairs in different droplets = all pairs - same-droplet pairs
        g = np.zeros(tuple(hi - lo + 1))
        g[tuple((allc - lo).T)] = 1.0
        every = pair_form(g, params.p)
        same = total(_droplet_pairs(c, params.p) for c in cells)
        out = out + 2.0 * (every - same)
    return out


def droplet_identity_check(config: SpinConfig, params: ModelParams, radius: int | None = None) -> Certificate:
    """``H^+(config)`` against its droplet representation.

    With ``radius`` the left side uses the ball-truncated route, otherwise the
    closed-form background field.
    """
    if config.boundary.kind != PLUS:
        raise DomainError("identity check needs plus boundary")
    lhs = relative_energy_ball(config, params, radius) if radius else relative_energy(config, params)
    rhs = droplet_representation(droplet_decompose(config), params)
    return Certificate(lhs, rhs, context="droplet identity", equality=True,
                       extra={"minus": int(config.minus_mask().sum())})


# ---------------------------------------------------------------------------
# reduction to periodic and plus boundary conditions


def embed_in_torus(config: SpinConfig, L: int) -> tuple[SpinConfig, tuple[int, int]]:
    """Place the box inside an ``L x L`` window filled with the striped background.

    The window origin is aligned so that the background is periodic on it.
    """
    b = config.boundary
    period = 2 * b.h
    if L % period:
        raise DomainError(f"L={L} must be divisible by 2h*={period}")
    nx, ny = config.shape
    if nx > L or ny > L:
        raise DomainError("box does not fit in the L-box")
    x0, y0 = config.origin
    ox = x0 - (L - nx) // 2
    oy = y0 - (L - ny) // 2
    full = SpinConfig.background_config((L, L), b, (ox, oy))
    s = np.array(full.spins)
    s[x0 - ox:x0 - ox + nx, y0 - oy:y0 - oy + ny] = config.spins
    return SpinConfig(s, (ox, oy), Boundary(PERIODIC)), (ox, oy)


@dataclass(frozen=True)
class ReductionReport:
    direct: SumResult
    periodic: dict
    juxtaposed: dict
    certificates: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.certificates)

    def to_dict(self) -> dict:
        return {
            "direct": self.direct.to_dict(),
            "periodic": {str(k): v.to_dict() for k, v in self.periodic.items()},
            "juxtaposed": {str(k): v.to_dict() for k, v in self.juxtaposed.items()},
            "ok": self.ok,
        }


def boundary_reduction_check(config: SpinConfig, params: ModelParams, L_values=(), M_values=(1, 2, 4),
                             L_juxtapose: int | None = None) -> ReductionReport:
    """Compare the striped-boundary energy difference with its periodic and plus versions.

    ``periodic[L]`` holds ``H^per_L(sigma_X, sigma*) - e_s(h*) L^2`` and ``juxtaposed[M]``
    holds ``H^+`` of ``M x M`` copies divided by ``M^2`` next to ``H^per`` of one copy.
    """
    b = config.boundary
    if b.kind != STRIPED:
        raise DomainError("reduction check needs a striped boundary")
    direct = relative_energy(config, params)
    es = striped_energy_per_site(b.h, params)
    periodic = {}
    for L in sorted(int(x) for x in L_values):
        torus, _ = embed_in_torus(config, L)
        periodic[L] = periodic_energy(torus, params) - es * (L * L)
    juxt = {}
    if M_values:
        L = int(L_juxtapose or (max(L_values) if L_values else 4 * b.h))
        torus, _ = embed_in_torus(config, L)
        per = periodic_energy(torus, params)
        juxt["per"] = per
        for M in sorted(int(x) for x in M_values):
            big = np.tile(torus.spins, (M, M))
            cfg = SpinConfig(big, (0, 0), Boundary(PLUS))
            juxt[M] = relative_energy(cfg, params) / (M * M)
    certs = []
    # the distance to the limit must not grow along either sequence
    gaps = [(L, abs(v.value - direct.value), v.tail_bound + direct.tail_bound) for L, v in periodic.items()]
    for (L0, g0, t0), (L1, g1, t1) in zip(gaps, gaps[1:]):
        certs.append(Certificate(SumResult(g0, t0), SumResult(g1, t1), context=f"reduction gap L={L0}->{L1}",
                                 extra={"gap": g1}))
    if M_values:
        dist = [(M, abs(v.value - per.value), v.tail_bound + per.tail_bound)
                for M, v in juxt.items() if M != "per"]
        for (M0, g0, t0), (M1, g1, t1) in zip(dist, dist[1:]):
            certs.append(Certificate(SumResult(g0, t0), SumResult(g1, t1),
                                     context=f"juxtaposition gap M={M0}->{M1}", extra={"gap": g1}))
    return ReductionReport(direct, periodic, juxt, certs)
