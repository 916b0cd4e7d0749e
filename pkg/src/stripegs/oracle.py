"""Exhaustive and annealed ground-state searches on rings and tori.

Energies are written as ``E(s) = sum_{x<y} c_xy (s_x s_y - 1)`` with a precomputed
coupling matrix, so the all-plus state has energy 0 and a single flip at ``x`` changes
the energy by ``-2 s_x sum_y c_xy s_y``.  Enumeration walks a Gray code, one flip per
step, with the global spin flip removed by pinning site 0.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .config import PERIODIC, Boundary, SpinConfig, periodic_energy, torus_coupling_matrix
from .kernel import ModelParams, periodized_table
from .results import BudgetError, DomainError, SumResult

MAX_RING = 28
MAX_TORUS_SITES = 26
_CAP = 1 << 16


# ---------------------------------------------------------------------------
# couplings


def ring_coupling_matrix(L: int, params: ModelParams) -> np.ndarray:
    """Couplings of the ring Hamiltonian with the periodized column potential ``v_L``."""
    if L < 1:
        raise DomainError("ring length must be positive")
    v, _ = periodized_table(int(L), float(params.p), int(params.d))
    i = np.arange(L)
    C = np.asarray(v)[(i[None, :] - i[:, None]) % L].copy()
    np.fill_diagonal(C, 0.0)
    if L > 1:
        for x in range(L):
            y = (x + 1) % L
            C[x, y] -= params.J
            C[y, x] -= params.J
    return C


def coupling_matrix(shape, params: ModelParams) -> np.ndarray:
    nx, ny = shape
    if ny == 1:
        return ring_coupling_matrix(nx, params)
    return torus_coupling_matrix(nx, ny, params)


def matrix_energy(C: np.ndarray, s: np.ndarray) -> float:
    s = np.asarray(s, dtype=float).ravel()
    return 0.5 * float(s @ C @ s - C.sum())


# ---------------------------------------------------------------------------
# enumeration kernel


@njit(cache=True)
def _gray_search(C, pinned, tol, cap):
    N = C.shape[0]
    first = 1 if pinned else 0
    nfree = N - first
    s = np.ones(N, dtype=np.int8)
    h = np.zeros(N)
    for x in range(N):
        acc = 0.0
        for y in range(N):
            acc += C[x, y]
        h[x] = acc
    E = 0.0
    best = 0.0
    buf = np.empty(cap, dtype=np.int64)
    buf[0] = 0
    nbuf = 1
    overflow = 0
    code = 0
    for k in range(1, 1 << nfree):
        b = 0
        while not (k >> b) & 1:
            b += 1
        x = b + first
        sx = s[x]
        E += -2.0 * sx * h[x]
        for y in range(N):
            h[y] -= 2.0 * C[y, x] * sx
        s[x] = -sx
        code ^= 1 << x
        if E < best - tol:
            best = E
            buf[0] = code
            nbuf = 1
            overflow = 0
        elif E <= best + tol:
            if nbuf < cap:
                buf[nbuf] = code
                nbuf += 1
            else:
                overflow += 1
    return best, buf[:nbuf].copy(), overflow


def _decode(code: int, N: int) -> np.ndarray:
    bits = (int(code) >> np.arange(N)) & 1
    return np.where(bits == 1, -1, 1).astype(np.int8)


def _encode(s: np.ndarray) -> int:
    s = np.asarray(s).ravel()
    return int(sum(1 << i for i in np.nonzero(s < 0)[0]))


# ---------------------------------------------------------------------------
# symmetry


def symmetry_orbit(spins: np.ndarray) -> list:
    """Images of a ring (``ny == 1``) or torus configuration under its symmetry group.

    Translations, axis reflections, the diagonal swap on square tori and the global flip.
    """
    s = np.asarray(spins)
    if s.ndim == 1:
        s = s[:, None]
    nx, ny = s.shape
    bases = [s, s[::-1, :], s[:, ::-1], s[::-1, ::-1]]
    if nx == ny:
        bases += [b.T for b in bases]
    out = []
    for b in bases:
        for dx in range(nx):
            for dy in range(ny):
                t = np.roll(b, (dx, dy), axis=(0, 1))
                out.append(t)
                out.append(-t)
    return out


def canonical(spins: np.ndarray) -> np.ndarray:
    """The orbit member with the smallest encoding."""
    orbit = symmetry_orbit(spins)
    codes = [_encode(o) for o in orbit]
    return orbit[int(np.argmin(codes))]


def classify(spins: np.ndarray) -> dict:
    """``uniform``, ``striped`` (constant along one axis, with its widths) or ``other``."""
    s = np.asarray(spins)
    if s.ndim == 1:
        s = s[:, None]
    if np.all(s == s.flat[0]):
        return {"kind": "uniform"}
    for axis, orient in ((1, "vertical"), (0, "horizontal")):
        if s.shape[axis] >= 1 and np.all(s == s.take([0], axis=axis)):
            line = s[:, 0] if axis == 1 else s[0, :]
            return {"kind": "striped", "orientation": orient, "widths": cyclic_runs(line)}
    return {"kind": "other"}


def cyclic_runs(line) -> list:
    """Run lengths of a periodic +-1 sequence, starting at a sign change."""
    a = np.asarray(line)
    n = len(a)
    ch = np.nonzero(a != np.roll(a, 1))[0]
    if len(ch) == 0:
        return [n]
    ch = list(ch)
    return [int((ch[(i + 1) % len(ch)] - ch[i]) % n or n) for i in range(len(ch))]


def structure_factor(spins: np.ndarray) -> np.ndarray:
    s = np.asarray(spins, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    F = np.fft.fft2(s)
    return np.abs(F) ** 2 / s.size


def stripe_axis(spins: np.ndarray) -> dict:
    """Location of the structure-factor peak (``k = 0`` excluded) and whether it lies on an axis."""
    S = structure_factor(spins)
    S = S.copy()
    S[0, 0] = -1.0
    kx, ky = np.unravel_index(int(np.argmax(S)), S.shape)
    return {"peak": [int(kx), int(ky)], "on_axis": bool(kx == 0 or ky == 0), "value": float(S[kx, ky])}


# ---------------------------------------------------------------------------
# reports


@dataclass
class SearchReport:
    shape: tuple
    params: dict
    method: str
    energy: SumResult
    minimizers: list
    enumerated: int
    symmetries: list
    wall_time: float
    overflow: int = 0
    trace: list = field(default_factory=list)

    @property
    def kinds(self) -> list:
        return [classify(m) for m in self.minimizers]

    def to_dict(self) -> dict:
        return {
            "shape": list(self.shape), "params": self.params, "method": self.method,
            "energy": self.energy.to_dict(), "enumerated": self.enumerated, "symmetries": self.symmetries,
            "wall_time": self.wall_time, "overflow": self.overflow,
            "minimizers": [{"spins": m.astype(int).tolist(), **classify(m)} for m in self.minimizers],
        }

    def configs(self) -> list:
        nx, ny = self.shape
        return [SpinConfig(m.reshape(nx, ny), (0, 0), Boundary(PERIODIC)) for m in self.minimizers]


def _exhaustive(shape, params: ModelParams, reduce: bool, method: str) -> SearchReport:
    t0 = time.perf_counter()
    nx, ny = shape
    N = nx * ny
    C = coupling_matrix(shape, params)
    scale = float(np.abs(C).sum())
    tol = 1e-9 * scale
    best, codes, overflow = _gray_search(C, bool(reduce), tol, _CAP)
    cands = [_decode(c, N) for c in codes]
    exact_e = np.array([matrix_energy(C, s) for s in cands])
    emin = float(exact_e.min())
    keep = [s for s, e in zip(cands, exact_e) if e <= emin + 1e-11 * scale]
    seen, mins = set(), []
    for s in keep:
        c = canonical(s.reshape(nx, ny))
        key = _encode(c)
        if key not in seen:
            seen.add(key)
            mins.append(c.reshape(nx, ny) if ny > 1 else c[:, 0])
    mins.sort(key=_encode)
    ref = periodic_energy(SpinConfig(mins[0].reshape(nx, ny), (0, 0), Boundary(PERIODIC)), params)
    syms = ["global flip (site 0 pinned)"] if reduce else []
    syms += ["translations", "reflections"] + (["diagonal swap"] if nx == ny and ny > 1 else [])
    return SearchReport((nx, ny), params.to_dict(), method, ref, mins,
                        1 << (N - (1 if reduce else 0)), syms, time.perf_counter() - t0, int(overflow))


def exhaustive_1d(L: int, params: ModelParams, reduce: bool = True) -> SearchReport:
    """All ``2^L`` ring configurations (half of them with ``reduce``); minimizers up to symmetry."""
    if L > MAX_RING:
        raise BudgetError(f"ring length {L} exceeds the enumeration budget {MAX_RING}")
    if L < 1:
        raise DomainError("ring length must be positive")
    return _exhaustive((int(L), 1), params, reduce, "exhaustive-1d")


def exhaustive_2d(Lx: int, Ly: int, params: ModelParams, reduce: bool = True) -> SearchReport:
    if Lx * Ly > MAX_TORUS_SITES:
        raise BudgetError(f"torus {Lx}x{Ly} exceeds the enumeration budget of {MAX_TORUS_SITES} sites")
    if Lx < 2 or Ly < 2:
        raise DomainError("torus sides must be at least 2 (use exhaustive_1d for rings)")
    return _exhaustive((int(Lx), int(Ly)), params, reduce, "exhaustive-2d")


# ---------------------------------------------------------------------------
# annealing


@dataclass(frozen=True)
class Schedule:
    """Geometric temperature ladder over ``sweeps`` sweeps of single-spin Metropolis moves."""

    sweeps: int = 4000
    t_start: float = 2.0
    t_end: float = 0.01

    def temperatures(self) -> np.ndarray:
        if self.sweeps < 1:
            raise DomainError("need at least one sweep")
        return np.geomspace(self.t_start, self.t_end, self.sweeps)


@njit(cache=True)
def _anneal(C, s, temps, sites, urand):
    N = C.shape[0]
    h = C @ s.astype(np.float64)
    E = 0.5 * (float(s.astype(np.float64) @ h) - C.sum())
    best = E
    best_s = s.copy()
    trace = np.empty(len(temps))
    for t in range(len(temps)):
        T = temps[t]
        for k in range(N):
            idx = t * N + k
            x = sites[idx]
            sx = s[x]
            dE = -2.0 * sx * h[x]
            if dE <= 0.0 or urand[idx] < np.exp(-dE / T):
                for y in range(N):
                    h[y] -= 2.0 * C[y, x] * sx
                s[x] = -sx
                E += dE
                if E < best:
                    best = E
                    best_s[:] = s
        trace[t] = best
    return best_s, trace


def anneal(shape, params: ModelParams, schedule: Schedule = Schedule(), seed: int = 0) -> SearchReport:
    """Simulated annealing on the ring (``shape = (L, 1)``) or torus; deterministic given ``seed``."""
    t0 = time.perf_counter()
    nx, ny = int(shape[0]), int(shape[1]) if len(shape) > 1 else 1
    C = coupling_matrix((nx, ny), params)
    N = nx * ny
    rng = np.random.default_rng(seed)
    temps = schedule.temperatures()
    s = np.where(rng.random(N) < 0.5, -1, 1).astype(np.int8)
    sites = rng.integers(0, N, size=len(temps) * N)
    urand = rng.random(len(temps) * N)
    best_s, trace = _anneal(C, s, temps, sites, urand)
    grid = best_s.reshape(nx, ny)
    energy = periodic_energy(SpinConfig(grid, (0, 0), Boundary(PERIODIC)), params)
    m = grid if ny > 1 else grid[:, 0]
    return SearchReport((nx, ny), params.to_dict(), "anneal", energy, [m], len(temps) * N, [],
                        time.perf_counter() - t0, 0, [float(x) for x in trace])


# ---------------------------------------------------------------------------
# finite-size stripes


def striped_candidates(shape) -> list:
    """Equal-width stripe configurations fitting the ring or torus: ``(orientation, h, spins)``."""
    nx, ny = shape
    out = []
    for orient, n in (("vertical", nx), ("horizontal", ny)):
        if n == 1:
            continue
        for h in range(1, n // 2 + 1):
            if n % (2 * h):
                continue
            line = np.where((np.arange(n) % (2 * h)) < h, 1, -1).astype(np.int8)
            s = np.repeat(line[:, None], ny, axis=1) if orient == "vertical" else np.repeat(line[None, :], nx, axis=0)
            out.append((orient, h, s))
    return out


def _linear_parts(shape, spins, p: float, d: int = 2):
    """``(a, b)`` with ``E(J) = a J + b``; ``a`` counts broken nearest-neighbour bonds twice."""
    nx, ny = shape
    cfg = SpinConfig(np.asarray(spins).reshape(nx, ny), (0, 0), Boundary(PERIODIC))
    from .kernel import critical_coupling

    jc = critical_coupling(p, d).value
    e0 = periodic_energy(cfg, ModelParams(d, p, 0.0)).value
    e1 = periodic_energy(cfg, ModelParams(d, p, jc)).value
    return (e1 - e0) / jc, e0


@dataclass(frozen=True)
class StripeTable:
    """Energy per site of each equal-width stripe state, and where each crosses the uniform state."""

    shape: tuple
    p: float
    rows: list

    def at(self, J: float) -> list:
        return [{**r, "energy_per_site": (r["a"] * J + r["b"]) / (self.shape[0] * self.shape[1])}
                for r in self.rows]

    def argmin(self, J: float) -> dict:
        return min(self.at(J), key=lambda r: (r["energy_per_site"], r["h"]))

    @property
    def crossing(self) -> float:
        return max(r["crossing"] for r in self.rows)

    def to_dict(self) -> dict:
        return {"shape": list(self.shape), "p": self.p, "crossing": self.crossing,
                "rows": [{k: v for k, v in r.items()} for r in self.rows]}


def stripe_table(shape, p: float = 5.0) -> StripeTable:
    shape = (int(shape[0]), int(shape[1]) if len(shape) > 1 else 1)
    rows = []
    for orient, h, s in striped_candidates(shape):
        a, b = _linear_parts(shape, s, p)
        rows.append({"orientation": orient, "h": h, "a": a, "b": b, "crossing": -b / a})
    if not rows:
        raise DomainError(f"no stripe state fits {shape}")
    return StripeTable(shape, float(p), rows)


def finite_size_crossing(shape, p: float = 5.0, max_iter: int = 20) -> dict:
    """Largest ``J`` at which some configuration beats the uniform state.

    Starts from the stripe-table crossing and climbs with the minimizer's own crossing
    until the exhaustive minimum at ``J`` is the uniform state (Dinkelbach iteration).
    """
    shape = (int(shape[0]), int(shape[1]) if len(shape) > 1 else 1)
    table = stripe_table(shape, p)
    J = table.crossing
    path = [J]
    for _ in range(max_iter):
        params = ModelParams(2, p, J)
        rep = exhaustive_1d(shape[0], params) if shape[1] == 1 else exhaustive_2d(*shape, params)
        C = coupling_matrix(shape, params)
        scale = float(np.abs(C).sum())
        if rep.energy.value >= -1e-10 * scale:
            break
        a, b = _linear_parts(shape, rep.minimizers[0], p)
        J = -b / a
        path.append(J)
    return {"shape": list(shape), "table_crossing": table.crossing, "crossing": J, "path": path}
