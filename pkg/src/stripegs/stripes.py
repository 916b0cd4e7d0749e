"""Striped-phase energetics.

For blocks of alternating sign and width ``h`` the energy per site is

    e_s(h) = tau/h + D(h),   D(h) = (2/h) sum_{a > h} (a - tri_h(a)) v(a),

with ``tri_h(a) = min(r, 2h - r)``, ``r = a mod 2h``.  ``D`` does not depend on J, so
it is cached per ``(h, p, d)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import zeta

from .kernel import (
    A_EPS,
    REL_ROUND,
    ModelParams,
    class_sums,
    column_table,
    critical_coupling,
    periodized_table,
)
from .results import BudgetError, Certificate, DomainError, SumResult, exact

INF = math.inf


@dataclass(frozen=True)
class StripeSequence:
    """Minus stripes of widths ``h_i`` separated by plus gaps ``w_i``."""

    widths: tuple
    spacings: tuple = ()

    def __post_init__(self):
        h = tuple(int(x) for x in self.widths)
        w = tuple(int(x) for x in self.spacings)
        object.__setattr__(self, "widths", h)
        object.__setattr__(self, "spacings", w)
        if len(h) < 1 or len(w) != len(h) - 1:
            raise DomainError("need n >= 1 widths and n-1 spacings")
        if any(x < 1 for x in h + w):
            raise DomainError("widths and spacings must be >= 1")

    @classmethod
    def from_list(cls, seq: Sequence[int]) -> "StripeSequence":
        seq = list(seq)
        if len(seq) % 2 == 0:
            raise DomainError("sequence must alternate h1,w1,...,hn (odd length)")
        return cls(tuple(seq[0::2]), tuple(seq[1::2]))

    @property
    def n(self) -> int:
        return len(self.widths)

    @property
    def length(self) -> int:
        return sum(self.widths) + sum(self.spacings)

    def as_list(self) -> list[int]:
        out = []
        for i, h in enumerate(self.widths):
            out.append(h)
            if i < len(self.spacings):
                out.append(self.spacings[i])
        return out

    def reversed(self) -> "StripeSequence":
        return StripeSequence(self.widths[::-1], self.spacings[::-1])

    def intervals(self) -> list[tuple[int, int]]:
        """Column ranges ``[start, stop)`` of the minus stripes, first one at 0."""
        out, x = [], 0
        for i, h in enumerate(self.widths):
            out.append((x, x + h))
            x += h + (self.spacings[i] if i < len(self.spacings) else 0)
        return out

    def ring(self, L: int) -> np.ndarray:
        """Block configuration on a ring of length ``L`` (closing gap ``L - length``)."""
        if L - self.length < 1:
            raise DomainError(f"L={L} leaves no closing gap for length {self.length}")
        s = np.ones(L, dtype=np.int8)
        for a, b in self.intervals():
            s[a:b] = -1
        return s


# ---------------------------------------------------------------------------
# striped energy per site


@lru_cache(maxsize=None)
def stripe_excess(h: int, p: float, d: int) -> SumResult:
    """``D(h) = e_s(h) - tau/h`` (independent of J, positive)."""
    h = int(h)
    if h < 1:
        raise DomainError("h must be >= 1")
    a0 = np.arange(h + 1, 3 * h + 1)
    r = a0 % (2 * h)
    tri = np.minimum(r, 2 * h - r)
    S0, S1, E0, E1 = class_sums(a0, 2 * h, p, d)
    val = float(np.sum(S1 - tri * S0))
    err = float(np.sum(E1 + tri * E0)) + REL_ROUND * float(np.sum(S1 + tri * S0))
    return SumResult(2.0 * val / h, 2.0 * err / h, A_EPS)


def striped_energy_per_site(h: int, params: ModelParams, tol: float | None = None) -> SumResult:
    """Energy per site of the infinite striped state of width ``h``."""
    if int(h) != h or h < 1:
        raise DomainError("h must be a positive integer")
    D = stripe_excess(int(h), float(params.p), int(params.d))
    res = D + SumResult(params.tau / h, 2.0 * params.jc_error / h)
    if tol is not None and res.tail_bound > tol:
        raise BudgetError(f"cannot reach tol={tol}; bound is {res.tail_bound:.2e}")
    return res


@dataclass(frozen=True)
class EnergyCurve:
    """Tabulated ``e_s(h)`` for ``h = 1..hmax`` with its argmin."""

    params: ModelParams
    h: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    h_star: int
    tie: bool
    candidates: tuple = field(default=())

    def value(self, h: int) -> float:
        return float(self.values[h - 1])

    def rows(self):
        for h, v, e in zip(self.h, self.values, self.errors):
            yield int(h), float(v), float(e)

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "e_s", "tail_bound"])
        for h, v, e in self.rows():
            w.writerow([h, repr(v), repr(e)])
        return buf.getvalue() if fh is None else ""


def _argmin_with_tie(values: np.ndarray, errors: np.ndarray):
    i = int(np.argmin(values))
    near = np.nonzero(values - values[i] <= errors + errors[i])[0]
    cands = tuple(int(j) + 1 for j in near)
    return min(cands), len(cands) > 1, cands


def energy_curve(params: ModelParams, hmax: int) -> EnergyCurve:
    """``e_s`` on ``1..hmax``; the argmin is over this window only."""
    if hmax < 1:
        raise DomainError("hmax must be >= 1")
    hs = np.arange(1, hmax + 1)
    res = [striped_energy_per_site(int(h), params) for h in hs]
    vals = np.array([r.value for r in res])
    errs = np.array([r.tail_bound for r in res])
    h_star, tie, cands = _argmin_with_tie(vals, errs)
    return EnergyCurve(params, hs, vals, errs, h_star, tie, cands)


def optimal_curve(params: ModelParams, max_width: int = 1 << 16) -> EnergyCurve:
    """Energy curve long enough to certify the global argmin.

    Since ``D > 0``, ``e_s(h) > tau/h`` and no width beyond ``H = tau / min e_s``
    can beat the current minimum; the window doubles until it covers ``H``.
    """
    tau = params.tau
    if not tau < 0:
        raise DomainError("tau >= 0: the uniform state is optimal, no finite argmin")
    hmax = 16
    while True:
        curve = energy_curve(params, hmax)
        emin = float(curve.values.min())
        if emin < 0 and tau / emin <= hmax:
            return curve
        hmax *= 2
        if hmax > max_width:
            raise BudgetError(f"argmin search exceeded width {max_width}")


def optimal_width(params: ModelParams) -> tuple[int, bool]:
    """``(h*, tie)``; with a tie the smaller width is reported."""
    curve = optimal_curve(params)
    return curve.h_star, curve.tie


# ---------------------------------------------------------------------------
# line energies


def _m_weight(h, p: float, d: int) -> SumResult:
    """``sum_{x != 0} min(|x_1|, h) |x|^{-p} = 2 sum_a min(a, h) v(a)``."""
    if h == INF:
        return 2.0 * critical_coupling(p, d)
    h = int(h)
    vals, errs = column_table(h, p, d)
    a = np.arange(h + 1)
    S0, _, E0, _ = class_sums([h + 1], 1, p, d)
    val = float(np.sum(a[1:] * vals[1:])) + h * float(S0[0])
    err = float(np.sum(a[1:] * errs[1:])) + h * float(E0[0]) + REL_ROUND * abs(val)
    return SumResult(2.0 * val, 2.0 * err, A_EPS)


def min_weight_sum(h, params: ModelParams) -> SumResult:
    return _m_weight(h, float(params.p), int(params.d))


def _block_pair_interaction(intervals, p: float, d: int) -> SumResult:
    """``sum_{i != j} sum_{c in I_i, c' in I_j} v(|c - c'|)`` for disjoint column ranges."""
    if len(intervals) < 2:
        return exact(0.0)
    span = intervals[-1][1] - intervals[0][0]
    vals, errs = column_table(span, p, d)
    val, err = 0.0, 0.0
    for i, (a, b) in enumerate(intervals):
        ci = np.arange(a, b)
        for c, e in intervals[i + 1:]:
            cj = np.arange(c, e)
            dist = np.abs(cj[None, :] - ci[:, None])
            val += float(vals[dist].sum())
            err += float(errs[dist].sum())
    return SumResult(2.0 * val, 2.0 * err + REL_ROUND * 2.0 * val, A_EPS)


def e_infinity(seq: StripeSequence, params: ModelParams) -> SumResult:
    """Energy per unit length of the stripes ``seq`` in a plus background."""
    p, d = float(params.p), int(params.d)
    out = exact(4.0 * params.J * seq.n)
    for h in seq.widths:
        out = out - 2.0 * _m_weight(h, p, d)
    inter = _block_pair_interaction(seq.intervals(), p, d)
    return out + 2.0 * inter


# ---------------------------------------------------------------------------
# boundary interaction f


_G_ROWS = 2048
_G_T = 4096


@lru_cache(maxsize=None)
def _g_table(p: float):
    """``g(a) = sum_{t >= 1} t (a^2 + t^2)^{-p/2}`` for a = 0..N with error bounds."""
    s = p / 2.0
    a = np.arange(_G_ROWS + 1, dtype=float)
    t = np.arange(1, _G_T + 1, dtype=float)
    g = np.empty_like(a)
    for lo in range(0, len(a), 128):
        aa = a[lo:lo + 128, None] ** 2
        g[lo:lo + 128] = np.sum(t * (aa + t * t) ** (-s), axis=1)
    up = (a ** 2 + _G_T ** 2) ** (1 - s) / (2 * s - 2)
    dn = (a ** 2 + (_G_T + 1) ** 2) ** (1 - s) / (2 * s - 2)
    g += 0.5 * (up + dn)
    err = 0.5 * (up - dn) + REL_ROUND * g
    tail = np.cumsum(g[::-1])[::-1]
    tail_err = np.cumsum(err[::-1])[::-1]
    return g, err, tail, tail_err


def _g_tail_beyond(p: float, b: int):
    """``sum_{a >= b} g(a)`` for ``b > N`` via the integral comparison of each g(a)."""
    s = p / 2.0
    main = float(zeta(2 * s - 2, b)) / (2 * s - 2)
    cm = (2 * s - 1) ** -0.5 * (2 * s / (2 * s - 1)) ** (-s)
    return main, cm * float(zeta(2 * s - 1, b)) + REL_ROUND * main


def _g_tail(p: float, b: int):
    g, err, tail, tail_err = _g_table(p)
    N = _G_ROWS
    hi_main, hi_err = _g_tail_beyond(p, N + 1)
    if b > N:
        return _g_tail_beyond(p, b)
    return float(tail[b]) + hi_main, float(tail_err[b]) + hi_err


def _half_f(w: int, h: int, p: float):
    """``sum_{a > w} min(a - w, h) g(a)``."""
    g, err, _, _ = _g_table(p)
    if w + h > _G_ROWS:
        raise BudgetError("w + h beyond tabulated range")
    a = np.arange(w + 1, w + h)
    val = float(np.sum((a - w) * g[a]))
    e = float(np.sum((a - w) * err[a]))
    tm, te = _g_tail(p, w + h)
    return val + h * tm, e + h * te


def f_interaction(w1, h: int, w2, params: ModelParams) -> SumResult:
    """``f(w1, h, w2) = (1/2) W(L_h^+, Q_{w1,h,w2})`` (two dimensions)."""
    if params.d != 2:
        raise DomainError("f is implemented for d = 2")
    if int(h) != h or h < 1:
        raise DomainError("h must be a positive integer")
    val, err = 0.0, 0.0
    for w in (w1, w2):
        if w == INF or w is None:
            continue
        if int(w) != w or w < 0:
            raise DomainError("spacings must be non-negative integers or inf")
        v, e = _half_f(int(w), int(h), float(params.p))
        val += v
        err += e
    return SumResult(2.0 * val, 2.0 * err, _G_ROWS)


def fit_c2(params: ModelParams, w_max: int = 30, h_max: int = 30) -> float:
    """Smallest ``C2`` with ``f(w, h, inf) <= C2 / w^{p-4}`` on the sampled grid."""
    best = 0.0
    for w in range(1, w_max + 1):
        for h in range(1, h_max + 1):
            f = f_interaction(w, h, INF, params)
            best = max(best, (f.value + f.tail_bound) * w ** (params.p - 4))
    return best


# ---------------------------------------------------------------------------
# one-dimensional periodic Hamiltonian and chessboard bound


def periodic_chain_energy(spins, params: ModelParams) -> SumResult:
    """``H^per_L`` of a ring configuration with the periodized column potential."""
    s = np.asarray(spins, dtype=float).ravel()
    L = len(s)
    if L < 1:
        return exact(0.0)
    if np.any(np.abs(s) != 1):
        raise DomainError("spins must be +-1")
    nn = -params.J * float(np.sum(s * np.roll(s, -1) - 1.0))
    if L == 1:
        return exact(nn)
    vL, eL = periodized_table(L, float(params.p), int(params.d))
    F = np.fft.rfft(s)
    corr = np.rint(np.fft.irfft(F * np.conj(F), n=L))
    c = corr[1:] - L
    val = 0.5 * float(np.dot(c, vL[1:]))
    err = 0.5 * float(np.dot(np.abs(c), eL[1:])) + REL_ROUND * 0.5 * float(np.dot(np.abs(c), vL[1:]))
    return SumResult(nn + val, err, A_EPS)


def chessboard_rhs(blocks: Sequence[int], params: ModelParams) -> SumResult:
    out = exact(0.0)
    for b in blocks:
        out = out + b * striped_energy_per_site(int(b), params)
    return out


def chessboard_check(seq: StripeSequence, L: int, params: ModelParams) -> Certificate:
    """``H^per_L(blocks) >= sum_i (h_i e_s(h_i) + w_i e_s(w_i))`` with ``w_n = L - length``."""
    wn = L - seq.length
    if wn < 1:
        raise DomainError(f"L={L} inconsistent with sequence length {seq.length}")
    lhs = periodic_chain_energy(seq.ring(L), params)
    blocks = list(seq.widths) + list(seq.spacings) + [wn]
    rhs = chessboard_rhs(blocks, params)
    return Certificate(lhs, rhs, context=f"chessboard seq={seq.as_list()} L={L}",
                       extra={"w_n": wn})


def finite_ring_stripe_energy(h: int, L: int, params: ModelParams) -> SumResult:
    """Energy per site of width-``h`` blocks on a ring of length ``L`` (``2h | L``)."""
    if L % (2 * h):
        raise DomainError("ring length must be a multiple of 2h")
    s = np.ones(L, dtype=np.int8)
    for k in range(0, L, 2 * h):
        s[k:k + h] = -1
    return periodic_chain_energy(s, params) / L


# ---------------------------------------------------------------------------
# gap bound


@dataclass(frozen=True)
class GapFit:
    C3: float
    h_star: int
    tie: bool
    w_max: int
    exponent: float

    @property
    def ok(self) -> bool:
        return self.C3 > 0


def gap_bound_check(params: ModelParams, w_max: int) -> GapFit:
    """Largest ``C3`` with ``e_s(w) - e_s(h*) >= C3 / w^{p-d} + tau / w`` on ``1..w_max``."""
    curve = optimal_curve(params)
    e_star = curve.value(curve.h_star)
    k = params.p - params.d
    best = INF
    for w in range(1, int(w_max) + 1):
        e = striped_energy_per_site(w, params)
        lhs = e.value - e.tail_bound - e_star - params.tau / w
        best = min(best, lhs * w ** k)
    return GapFit(float(best), curve.h_star, curve.tie, int(w_max), k)


def gap_chain_holds(params: ModelParams, C3: float, w_max: int) -> list[Certificate]:
    """``C3/w^{k-2} <= |tau| w + (C3/|tau|)^{1/(k-1)} w (e_s(w) - e_s(h*))`` with ``k = p - d``."""
    curve = optimal_curve(params)
    e_star = striped_energy_per_site(curve.h_star, params)
    k = params.p - params.d
    t = abs(params.tau)
    lam = (C3 / t) ** (1.0 / (k - 1))
    out = []
    for w in range(1, int(w_max) + 1):
        diff = striped_energy_per_site(w, params) - e_star
        rhs_ = t * w + lam * w * diff
        out.append(Certificate(rhs_, exact(C3 / w ** (k - 2)), context=f"gap chain w={w}"))
    return out


# ---------------------------------------------------------------------------
# scaling fits


def excess_exponent(params: ModelParams, h_lo: int = 20, h_hi: int = 200, n: int = 25) -> float:
    """Log-log slope of ``e_s(h) - tau/h`` over geometrically spaced ``h`` in ``[h_lo, h_hi]``."""
    hs = np.unique(np.geomspace(h_lo, h_hi, n).astype(int))
    y = np.array([stripe_excess(int(h), float(params.p), int(params.d)).value for h in hs])
    return float(np.polyfit(np.log(hs), np.log(y), 1)[0])


@dataclass(frozen=True)
class WidthScan:
    """``h*`` along a grid of negative ``tau`` with the fitted log-log slope."""

    p: float
    d: int
    taus: tuple
    h_star: tuple
    ties: tuple
    slope: float

    def rows(self):
        for t, h, tie in zip(self.taus, self.h_star, self.ties):
            yield {"tau": t, "abs_tau": abs(t), "h_star": h, "tie": tie}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "h_star", "tie"])
        for r in self.rows():
            w.writerow([repr(r["tau"]), r["h_star"], int(r["tie"])])
        return buf.getvalue()


def width_scan(taus, p: float = 5.0, d: int = 2) -> WidthScan:
    taus = tuple(float(t) for t in taus)
    if any(t >= 0 for t in taus):
        raise DomainError("the width scan needs tau < 0")
    res = [optimal_width(ModelParams.from_tau(t, p, d)) for t in taus]
    hs = tuple(int(h) for h, _ in res)
    slope = float(np.polyfit(np.log(np.abs(taus)), np.log(hs), 1)[0]) if len(taus) > 1 else math.nan
    return WidthScan(float(p), int(d), taus, hs, tuple(bool(t) for _, t in res), slope)
