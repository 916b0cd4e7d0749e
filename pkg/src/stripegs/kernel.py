"""Power-law pair kernel, column potentials, J_c and periodized potentials.

Lattice sums are split into columns ``v(a) = sum_{y in Z^{d-1}} (a^2+|y|^2)^{-p/2}``.
Each column is written exactly as

    v(a) = B a^{-(p-d+1)} + eps(a),

where the first term is the continuum integral over the transverse directions and
``eps(a)`` is an exponentially small Bessel series (Poisson summation).  Sums of
``a^k v(a)`` over residue classes then reduce to Hurwitz zeta values plus a short
explicit correction.  Every returned :class:`SumResult` carries a bound covering
series truncation and a conservative floating-point rounding estimate.

A brute-force ball summation (:func:`ball_lattice_sum`) with the integral
comparison tail (:func:`tail_bound`) is kept as an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma, kv, zeta

from .results import BudgetError, DomainError, SumResult

__all__ = [
    "ModelParams",
    "SumResult",
    "kernel_value",
    "tail_bound",
    "ball_lattice_sum",
    "column_potential",
    "lattice_zeta",
    "critical_coupling",
    "periodized_potential",
    "periodized_table",
    "torus_potential",
    "class_sums",
]

# relative rounding allowance for Hurwitz/Bessel evaluations
REL_ROUND = 1e-14
# columns up to this index receive the explicit Bessel correction
A_EPS = 40


@dataclass(frozen=True)
class ModelParams:
    """Model parameters; ``tau`` is always derived from ``J`` and ``J_c(p, d)``."""

    d: int
    p: float
    J: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d}")
        if self.J < 0:
            raise DomainError("J must be non-negative")
        if not self.p > self.d + 1:
            raise DomainError(f"need p > d+1 for a finite J_c (p={self.p}, d={self.d})")

    @property
    def jc(self) -> float:
        return critical_coupling(self.p, self.d).value

    @property
    def jc_error(self) -> float:
        return critical_coupling(self.p, self.d).tail_bound

    @property
    def tau(self) -> float:
        return 2.0 * (self.J - self.jc)

    @classmethod
    def from_tau(cls, tau: float, p: float = 5.0, d: int = 2) -> "ModelParams":
        return cls(d=d, p=p, J=critical_coupling(p, d).value + tau / 2.0)

    def require_stripe_regime(self) -> None:
        if not self.p > 2 * self.d:
            raise DomainError(f"stripe regime requires p > 2d (p={self.p}, d={self.d})")

    def to_dict(self) -> dict:
        return {"d": self.d, "p": self.p, "J": self.J, "J_c": self.jc, "tau": self.tau}


def kernel_value(x, p: float) -> float:
    """``|x|^{-p}`` for a non-zero lattice vector ``x``."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    r2 = float(np.dot(v, v))
    if r2 == 0.0:
        raise DomainError("kernel undefined at the origin")
    if math.isinf(p):
        return 1.0 if r2 == 1.0 else 0.0
    return r2 ** (-p / 2.0)


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def tail_bound(R: float, p: float, d: int) -> float:
    """Upper bound on ``sum_{x in Z^d, |x| > R} |x|^{-p}``.

    Each lattice point owns the unit cube centred on it; for ``y`` in that cube
    ``|y| <= |x| + c`` with ``c = sqrt(d)/2`` so ``|x|^{-p} <= (1 + c/R)^p |y|^{-p}``,
    and the cubes lie outside the ball of radius ``R - c``.  Hence

        tail <= (1 + c/R)^p * |S^{d-1}| * (R - c)^{d-p} / (p - d).

    When ``R <= c`` the shell ``R < |x| <= R2`` with ``R2 = floor(c) + 1`` is summed
    explicitly first.
    """
    if R < 1:
        raise DomainError("R must be >= 1")
    if not p > d:
        raise DomainError(f"tail sum diverges for p <= d (p={p}, d={d})")
    c = math.sqrt(d) / 2.0
    if R <= c:
        R2 = math.floor(c) + 1
        inner = _shell_sum(R, R2, p, d)
        return inner + tail_bound(R2, p, d)
    return (1.0 + c / R) ** p * _sphere_area(d) * (R - c) ** (d - p) / (p - d)


def _shell_sum(r_lo: float, r_hi: float, p: float, d: int) -> float:
    n = int(math.floor(r_hi))
    axes = [np.arange(-n, n + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    r = np.sqrt((grid.astype(float) ** 2).sum(axis=1))
    sel = (r > r_lo) & (r <= r_hi)
    return float(np.sum(r[sel] ** (-p)))


def ball_lattice_sum(p: float, d: int, R: int, weight: str | None = None) -> SumResult:
    """Brute-force ``sum_{0<|x|<=R} w(x) |x|^{-p}`` plus the integral tail bound.

    ``weight`` is ``None`` (w = 1) or ``"x1pos"`` (w = x_1 for x_1 > 0, else 0,
    which is the J_c summand).  Rows are summed in lexicographic order and reduced
    with ``math.fsum`` so the result is reproducible for fixed ``R``.
    """
    if d < 1 or R < 1:
        raise DomainError("need d >= 1 and R >= 1")
    R = int(R)
    R2 = R * R
    partials = []
    rest = d - 1
    x1_range = range(1, R + 1) if weight == "x1pos" else range(-R, R + 1)
    for x1 in x1_range:
        room = R2 - x1 * x1
        if rest == 0:
            r2 = np.array([float(x1 * x1)])
        else:
            m = math.isqrt(room)
            axes = [np.arange(-m, m + 1)] * rest
            g = np.meshgrid(*axes, indexing="ij")
            r2 = sum(gi.astype(float) ** 2 for gi in g).ravel() + x1 * x1
            r2 = r2[r2 <= R2]
        r2 = r2[r2 > 0]
        terms = r2 ** (-p / 2.0)
        if weight == "x1pos":
            terms = terms * x1
        partials.append(float(np.sum(terms)))
    value = math.fsum(partials)
    if weight == "x1pos":
        tail = 0.5 * tail_bound(R, p - 1.0, d)
    else:
        tail = tail_bound(R, p, d)
    return SumResult(value, tail + REL_ROUND * abs(value), R)


# ---------------------------------------------------------------------------
# column decomposition


@lru_cache(maxsize=None)
def _column_constants(p: float, d: int):
    m = d - 1
    s = p / 2.0
    nu = s - m / 2.0
    B = math.pi ** (m / 2.0) * math.gamma(s - m / 2.0) / math.gamma(s)
    pref = 2.0 * math.pi ** s / math.gamma(s)
    return m, s, nu, B, pref


@lru_cache(maxsize=None)
def _dual_shells(m: int, K: int):
    """Norms and multiplicities of non-zero k in Z^m with max-norm <= K."""
    axes = [np.arange(-K, K + 1)] * m
    g = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    n2 = (g ** 2).sum(axis=1)
    n2 = n2[n2 > 0]
    vals, counts = np.unique(n2, return_counts=True)
    return np.sqrt(vals.astype(float)), counts.astype(float)


def _shell_count(n: int, m: int) -> int:
    return (2 * n + 1) ** m - (2 * n - 1) ** m


def _eps_remainder(a: float, p: float, d: int, K: int) -> float:
    """Bound on the part of eps(a) from dual vectors with max-norm > K."""
    m, s, nu, B, pref = _column_constants(p, d)
    x0 = 2.0 * math.pi * (K + 1) * a
    first = _shell_count(K + 1, m) * (math.sqrt(m) * (K + 1)) ** nu * float(kv(nu, x0))
    r = ((K + 2) / (K + 1)) ** (m - 1 + nu) * math.exp(-2.0 * math.pi * a)
    return pref * a ** (m / 2.0 - s) * first / (1.0 - r)


@lru_cache(maxsize=None)
def _eps_table(p: float, d: int):
    """eps(a) and its truncation bound for a = 0..A_EPS (index 0 unused)."""
    m, s, nu, B, pref = _column_constants(p, d)
    eps = np.zeros(A_EPS + 1)
    err = np.zeros(A_EPS + 1)
    if m == 0:
        return eps, err
    K = 12 if m <= 2 else 8
    norms, mult = _dual_shells(m, K)
    for a in range(1, A_EPS + 1):
        terms = mult * norms ** nu * kv(nu, 2.0 * math.pi * norms * a)
        eps[a] = pref * a ** (m / 2.0 - s) * float(np.sum(terms))
        err[a] = _eps_remainder(a, p, d, K) + REL_ROUND * abs(eps[a])
    return eps, err


def _eps_beyond(p: float, d: int) -> float:
    """Bound on |eps(a)| for every a > A_EPS (eps(a) is decreasing in a)."""
    if d == 1:
        return 0.0
    return _eps_remainder(A_EPS + 1, p, d, 0)


def class_sums(a0, P: int, p: float, d: int):
    """Sums of ``v(a)`` and ``a v(a)`` over ``a = a0 + m P`` (m >= 0) per entry of ``a0``.

    Returns ``(S0, S1, E0, E1)``: value arrays and absolute error bounds.
    """
    a0 = np.atleast_1d(np.asarray(a0, dtype=np.int64))
    if np.any(a0 < 1) or P < 1:
        raise DomainError("class representatives must be positive and period >= 1")
    m, s, nu, B, pref = _column_constants(p, d)
    q = p - m
    x = a0 / float(P)
    S0 = B * float(P) ** (-q) * zeta(q, x)
    S1 = B * float(P) ** (1.0 - q) * zeta(q - 1.0, x) if q > 2 else np.full(a0.shape, np.inf)
    E0 = REL_ROUND * np.abs(S0)
    E1 = REL_ROUND * np.abs(S1)
    if m > 0:
        eps, err = _eps_table(p, d)
        a = a0.copy()
        while True:
            sel = a <= A_EPS
            if not np.any(sel):
                break
            idx = a[sel]
            S0[sel] += eps[idx]
            S1[sel] += idx * eps[idx]
            E0[sel] += err[idx]
            E1[sel] += idx * err[idx]
            a = a + P
        # classes continue past A_EPS: eps decays like exp(-2 pi a), so the
        # remaining terms are bounded by twice the first one
        first = np.maximum(a, A_EPS + 1).astype(float)
        beyond = _eps_beyond(p, d)
        E0 += 2.0 * beyond
        E1 += 2.0 * beyond * (first + P)
    return S0, S1, E0, E1


@lru_cache(maxsize=4096)
def column_potential(a: int, p: float, d: int) -> SumResult:
    """``v(a) = sum_{y in Z^{d-1}} (a^2 + |y|^2)^{-p/2}``; ``v(0)`` excludes ``y = 0``."""
    a = abs(int(a))
    if a == 0:
        if d == 1:
            return SumResult(0.0)
        return lattice_zeta(p, d - 1)
    if not p > d - 1:
        raise DomainError("column sum diverges")
    m, s, nu, B, pref = _column_constants(p, d)
    val = B * a ** (-(p - m))
    err = REL_ROUND * val
    if m > 0:
        if a <= A_EPS:
            eps, e = _eps_table(p, d)
            val += eps[a]
            err += e[a]
        else:
            err += _eps_beyond(p, d)
    return SumResult(float(val), float(err), A_EPS)


def column_table(n: int, p: float, d: int):
    """Arrays ``v(a)`` and error bounds for ``a = 0..n``."""
    vals = np.empty(n + 1)
    errs = np.empty(n + 1)
    for a in range(n + 1):
        r = column_potential(a, p, d)
        vals[a], errs[a] = r.value, r.tail_bound
    return vals, errs


@lru_cache(maxsize=None)
def lattice_zeta(p: float, d: int) -> SumResult:
    """``S_0 = sum_{x in Z^d, x != 0} |x|^{-p}`` (requires p > d)."""
    if not p > d:
        raise DomainError("lattice zeta diverges for p <= d")
    if d == 1:
        v = 2.0 * float(zeta(p, 1.0))
        return SumResult(v, REL_ROUND * v, A_EPS)
    S0, _, E0, _ = class_sums([1], 1, p, d)
    lower = lattice_zeta(p, d - 1)
    return SumResult(lower.value + 2.0 * float(S0[0]),
                     lower.tail_bound + 2.0 * float(E0[0]), A_EPS)


def _ball_radius_for(tol: float, p: float, d: int, max_radius: int) -> int:
    R = 2
    while 0.5 * tail_bound(R, p - 1.0, d) > tol:
        R *= 2
        if R > max_radius:
            raise BudgetError(f"tolerance {tol} needs radius beyond {max_radius}")
    lo, hi = R // 2, R
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if 0.5 * tail_bound(mid, p - 1.0, d) > tol:
            lo = mid
        else:
            hi = mid
    return hi


@lru_cache(maxsize=None)
def _jc_lattice(p: float, d: int) -> SumResult:
    _, S1, _, E1 = class_sums([1], 1, p, d)
    return SumResult(float(S1[0]), float(E1[0]), A_EPS)


def critical_coupling(p: float, d: int, tol: float = 1e-10, method: str = "lattice",
                      max_radius: int = 4096) -> SumResult:
    """``J_c = sum_{y_1 > 0, y_perp} y_1 / |y|^p``.

    ``method="lattice"`` uses the column decomposition (error near rounding level);
    ``method="ball"`` sums the half ball by brute force with the radius chosen from
    :func:`tail_bound` and raises :class:`BudgetError` when that exceeds ``max_radius``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if math.isinf(p):
        return SumResult(1.0)
    if not p > d + 1:
        raise DomainError(f"J_c diverges for p <= d+1 (p={p}, d={d})")
    if method == "ball":
        R = _ball_radius_for(tol, p, d, max_radius)
        return ball_lattice_sum(p, d, R, weight="x1pos")
    if method != "lattice":
        raise DomainError(f"unknown method {method!r}")
    res = _jc_lattice(float(p), int(d))
    if res.tail_bound > tol:
        raise BudgetError(f"requested tol {tol} below attainable {res.tail_bound:.2e}")
    return res


def periodized_potential(x: int, L, p: float, d: int = 2) -> SumResult:
    """``v_L(x) = sum_{n in Z} v(|x + n L|)``; ``L=None`` or ``inf`` gives ``v(x)``."""
    if L is None or (isinstance(L, float) and math.isinf(L)):
        if x == 0:
            raise DomainError("v_inf(0) is not a pair potential")
        return column_potential(abs(int(x)), p, d)
    L = int(L)
    if L < 1 or x % L == 0:
        raise DomainError("x must not be a multiple of L")
    r = x % L
    S0, _, E0, _ = class_sums([r, L - r], L, p, d)
    return SumResult(float(S0.sum()), float(E0.sum()), A_EPS)


@lru_cache(maxsize=256)
def periodized_table(L: int, p: float, d: int = 2):
    """``v_L(x)`` for ``x = 0..L-1`` with errors; entry 0 is the self-image sum."""
    L = int(L)
    reps = np.arange(L)
    reps[0] = L
    S0, _, E0, _ = class_sums(reps, L, p, d)
    neg = (-np.arange(L)) % L
    vals = S0 + S0[neg]
    errs = E0 + E0[neg]
    vals.setflags(write=False)
    errs.setflags(write=False)
    return vals, errs


# ---------------------------------------------------------------------------
# two-dimensional torus potential


def _power_class_1d(L: int, q: float):
    """``sum_{c != 0, c = z mod L} |c|^{-q}`` for z = 0..L-1."""
    reps = np.arange(L, dtype=float)
    reps[0] = L
    h = float(L) ** (-q) * zeta(q, reps / L)
    neg = (-np.arange(L)) % L
    return h + h[neg]


@lru_cache(maxsize=64)
def torus_potential(Lx: int, Ly: int, p: float):
    """Periodized 2D kernel ``V(z) = sum_{n in Z^2, z + nL != 0} |z + n L|^{-p}``.

    Returns ``(V, err)`` arrays of shape ``(Lx, Ly)``; ``V[0, 0]`` is the sum over
    the non-trivial images of the origin.  Rows ``c != 0`` are resummed in the
    second coordinate with Poisson summation.
    """
    Lx, Ly = int(Lx), int(Ly)
    if Lx < 1 or Ly < 1:
        raise DomainError("torus sides must be positive")
    if not p > 2:
        raise DomainError("need p > 2")
    s = p / 2.0
    nu = s - 0.5
    B = math.sqrt(math.pi) * math.gamma(s - 0.5) / math.gamma(s)
    pref = 2.0 * math.pi ** s / math.gamma(s)
    V = np.zeros((Lx, Ly))
    # c = 0 column: y = z2 mod Ly, y != 0
    V[0, :] += _power_class_1d(Ly, p)
    # c != 0, zero Fourier mode
    V += (B / Ly) * _power_class_1d(Lx, p - 1.0)[:, None]
    # c != 0, Bessel modes
    Cmax = int(math.ceil(8 * Ly)) + Lx
    kmax = int(math.ceil(60.0 * Ly / (2 * math.pi))) + 2
    c = np.arange(1, Cmax + 1, dtype=float)
    k = np.arange(1, kmax + 1, dtype=float)
    arg = 2 * math.pi * np.outer(c, k) / Ly
    w = (np.outer(1.0 / c, k) / Ly) ** nu * kv(nu, arg)
    cos = np.cos(2 * math.pi * np.outer(k, np.arange(Ly)) / Ly)
    G = (2.0 * pref / Ly) * (w @ cos)
    ci = np.arange(1, Cmax + 1)
    for sign in (1, -1):
        np.add.at(V, (sign * ci) % Lx, G)
    # truncation in k for each c (terms decay geometrically past kmax)
    alpha = 2 * math.pi * c / Ly
    last = (kmax / (Ly * c)) ** nu * kv(nu, alpha * kmax)
    ratio = np.exp((nu - 0.5) / kmax - alpha)
    k_err = (2.0 * pref / Ly) * last * ratio / (1.0 - ratio)
    # truncation in c: the full Bessel series at c > Cmax
    c0 = Cmax + 1.0
    a0 = 2 * math.pi * c0 / Ly
    row = (1.0 / (Ly * c0)) ** nu * float(kv(nu, a0)) / (1.0 - math.exp((nu - 0.5) - a0))
    c_err = 2.0 * (2.0 * pref / Ly) * row / (1.0 - math.exp(-2 * math.pi / Ly))
    err = REL_ROUND * np.abs(V) * 10 + 2.0 * float(k_err.sum()) + c_err
    V.setflags(write=False)
    err.setflags(write=False)
    return V, err
