"""Seeded verification suites and fits of the empirical constants.

Every suite returns a :class:`SuiteReport` whose records are certificate dictionaries;
a suite passes iff no record is ``violated``.  Configurations that a construction
cannot handle are counted as skipped, never as passes.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    DEFAULT_WINDOW,
    Window,
    lemma1_check,
    lemma22_check,
    lemma23_check,
    localization_check,
    self_energy_lower_bound_check,
    theorem3_certificate,
)
from .config import PLUS, Boundary, SpinConfig, droplet_identity_check
from .geometry import (
    VERTICAL,
    Region,
    deform_good_region,
    hole_side,
    running_example,
    slice_good_region,
    tile_partition,
)
from .kernel import ModelParams
from .results import VIOLATED, Certificate, ConstructionError, DomainError, exact
from .samples import (
    perturb_striped,
    random_plus_box,
    random_polyomino,
    random_stripe_columns,
    random_tile_union,
    rng_for,
    stripes_in_window,
)
from .stripes import (
    INF,
    StripeSequence,
    chessboard_check,
    fit_c2,
    gap_bound_check,
    optimal_width,
    striped_energy_per_site,
)

# empirical defaults for the existential constants
DEFAULT_C1_REGION = 0.5
DEFAULT_C2_TILE = 0.01
DEFAULT_C1_THEOREM = 0.01
DEFAULT_MULTIPLES = (8, 12, 16)


@dataclass
class SuiteReport:
    suite: str
    params: dict
    seed: int
    count: int
    records: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def violations(self) -> int:
        return sum(1 for r in self.records if r["verdict"] == VIOLATED)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def add(self, cert: Certificate, require_strict: bool = False, **meta) -> None:
        """Record ``cert``; with ``require_strict`` a non-strict pass is a violation."""
        rec = {"suite": self.suite, "index": len(self.records), **meta, **cert.to_dict()}
        if require_strict:
            rec["strict"] = cert.strict
            if not cert.strict:
                rec["verdict"] = VIOLATED
        self.records.append(rec)

    def jsonl(self) -> str:
        return "".join(json.dumps(r, default=_jsonable) + "\n" for r in self.records)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "params": self.params, "seed": self.seed, "count": self.count,
                "checks": len(self.records), "violations": self.violations, "skipped": len(self.skipped),
                "ok": self.ok, "elapsed": self.elapsed, "summary": self.summary}


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return str(v)


def _report(name, params, seed, count) -> SuiteReport:
    return SuiteReport(name, params.to_dict(), int(seed), int(count))


def _h_star(params: ModelParams) -> int:
    return optimal_width(params)[0]


# ---------------------------------------------------------------------------
# identities and single-droplet bounds


def identity_suite(params: ModelParams, seed: int = 0, count: int = 100, shape=(10, 10)) -> SuiteReport:
    """Droplet representation against the direct plus-boundary energy."""
    t0 = time.perf_counter()
    rep = _report("identity", params, seed, count)
    rng = rng_for(seed)
    worst = 0.0
    for _ in range(count):
        cfg = random_plus_box(rng, shape)
        c = droplet_identity_check(cfg, params)
        worst = max(worst, abs(c.slack) / c.tails if c.tails else (0.0 if c.slack == 0 else INF))
        rep.add(c)
    rep.summary = {"max_slack_over_tails": worst}
    rep.elapsed = time.perf_counter() - t0
    return rep


def selfenergy_suite(params: ModelParams, seed: int = 0, count: int = 100, max_cells: int = 12) -> SuiteReport:
    t0 = time.perf_counter()
    rep = _report("selfenergy", params, seed, count)
    rng = rng_for(seed)
    for _ in range(count):
        cells = random_polyomino(rng, int(rng.integers(1, max_cells + 1)))
        rep.add(self_energy_lower_bound_check(cells, params), cells=[list(c) for c in cells])
    rep.elapsed = time.perf_counter() - t0
    return rep


def random_sequence(rng: np.random.Generator, L_max: int = 64, block_max: int = 8) -> tuple:
    """A block sequence and a ring length leaving a closing gap of at least one."""
    while True:
        n = int(rng.integers(1, 5))
        seq = StripeSequence(tuple(int(x) for x in rng.integers(1, block_max + 1, n)),
                             tuple(int(x) for x in rng.integers(1, block_max + 1, n - 1)))
        if seq.length < L_max:
            return seq, int(rng.integers(seq.length + 1, L_max + 1))


def closing_block_limit(params: ModelParams, h: int, L_values=(64, 128, 256)) -> dict:
    """``|w_n e_s(w_n) - tau|`` for one block of width ``h`` on rings of length ``L``."""
    return {int(L): abs((L - h) * striped_energy_per_site(L - h, params).value - params.tau) for L in L_values}


def chessboard_suite(params: ModelParams, seed: int = 0, count: int = 200, L_max: int = 64) -> SuiteReport:
    t0 = time.perf_counter()
    rep = _report("chessboard", params, seed, count)
    rng = rng_for(seed)
    for _ in range(count):
        seq, L = random_sequence(rng, L_max)
        rep.add(chessboard_check(seq, L, params), seq=seq.as_list(), L=L)
    lim = closing_block_limit(params, 1)
    vals = list(lim.values())
    for (L0, a), (L1, b) in zip(lim.items(), list(lim.items())[1:]):
        rep.add(Certificate(exact(a), exact(b), context=f"closing block L={L0}->{L1}"))
    rep.summary = {"closing_block": {str(k): v for k, v in lim.items()},
                   "closing_monotone": all(b < a for a, b in zip(vals, vals[1:]))}
    rep.elapsed = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# localization and good regions


def localization_suite(params: ModelParams, seed: int = 0, count: int = 50, ell: int | None = None) -> SuiteReport:
    """Random ``3 ell`` windows with plus boundary; half carry no isolated flips."""
    t0 = time.perf_counter()
    h = _h_star(params)
    ell = int(ell or 8 * h)
    rep = _report("localization", params, seed, count)
    rng = rng_for(seed)
    regions = 0
    for i in range(count):
        cfg = stripes_in_window(rng, ell, h, 3, flips=0 if i % 2 else None)
        part = tile_partition(cfg, ell)
        regions += len(part.regions)
        rep.add(localization_check(cfg, ell, params, partition=part), ell=ell)
    rep.summary = {"ell": ell, "good_regions": regions}
    rep.elapsed = time.perf_counter() - t0
    return rep


def _columns(n: int, widths, start: int) -> np.ndarray:
    col = np.ones(n, dtype=np.int8)
    x, sign = start, -1
    for w in widths:
        if x >= n:
            break
        col[x:x + w] = sign
        x += w
        sign = -sign
    return col


def stripe_patch(ell: int, widths, phase: int = 0) -> SpinConfig:
    """A ``4 ell`` box with plus boundary and a vertical stripe patch whose ends lie in the ring tiles.

    The inner ``2 x 2`` tiles see only straight walls, so they form a good region
    unless the widths create a hole.
    """
    n = 4 * ell
    lo, hi = ell // 2, n - ell // 2
    s = np.ones((n, n), dtype=np.int8)
    s[lo:hi, lo:hi] = _columns(n, list(widths), lo + phase)[lo:hi, None]
    return SpinConfig(s, (0, 0), Boundary(PLUS))


def patch_family(ell: int, h: int):
    """Named width patterns for good regions: perfect, one wider stripe, a moved wall, mixed widths."""
    reps = 4 * ell // h + 2
    m = ell // h
    wider = [h] * reps
    wider[2 * m] = h + 2
    moved = [h] * reps
    moved[2 * m + 1] = max(1, h - 1)
    moved[2 * m + 3] = h + 1
    return {
        "perfect": ([h] * reps, 0),
        "perfect-shifted": ([h] * reps, h),
        "wider": (wider, 0),
        "moved": (moved, 0),
        "mixed": ([h, h + 1] * reps, 0),
    }


def lemma22_suite(params: ModelParams, seed: int = 0, count: int = 10, ell: int | None = None,
                  c1: float = DEFAULT_C1_REGION) -> SuiteReport:
    t0 = time.perf_counter()
    h = _h_star(params)
    ell = int(ell or 8 * h)
    rep = _report("lemma22", params, seed, count)
    rng = rng_for(seed)
    fam = patch_family(ell, h)
    names = list(fam)
    need = []
    for i in range(count):
        name = names[i % len(names)] if i < len(names) else names[int(rng.integers(len(names)))]
        widths, phase = fam[name]
        phase = phase if i < len(names) else int(rng.integers(0, 2 * h))
        part = tile_partition(stripe_patch(ell, widths, phase), ell)
        if not part.regions:
            rep.skipped.append({"family": name, "reason": "no good region"})
        for k in range(len(part.regions)):
            c = lemma22_check(part.region(k), params, c1)
            need.append(c.extra["c1_required"])
            rep.add(c, family=name, ell=ell)
    rep.summary = {"ell": ell, "c1": c1, "c1_required_max": max(need, default=None)}
    rep.elapsed = time.perf_counter() - t0
    return rep


def random_striped_region(rng: np.random.Generator, ell: int, h: int, tiles=(3, 3), fill: float = 0.7) -> Region:
    """A random tile union crossed by full-height vertical stripes of random widths and gaps."""
    nx, ny = tiles
    T = random_tile_union(rng, nx, ny, fill)
    n0 = (nx + 2) * ell
    n1 = (ny + 2) * ell
    G = np.kron(T, np.ones((ell, ell), dtype=bool))
    G = np.pad(G, ell)
    col = random_stripe_columns(rng, n0, 2 * h, 2 * h)
    minus = np.repeat(col[:, None], n1, axis=1)
    return Region(G, np.pad(minus, 1), (-ell, -ell), ell, (0, 0), VERTICAL, ("random",))


def lemma23_suite(params: ModelParams, seed: int = 0, count: int = 20, ell: int | None = None) -> SuiteReport:
    """The running example followed by random rectangular-bubble regions."""
    t0 = time.perf_counter()
    h = _h_star(params)
    ell = int(ell or max(8 * h, 20))
    rep = _report("lemma23", params, seed, count)
    rng = rng_for(seed)
    sl = slice_good_region(deform_good_region(running_example()))
    rep.add(lemma23_check(sl, params), family="running", segments=len(sl.segments))
    for _ in range(count):
        region = random_striped_region(rng, ell, h)
        try:
            sl = slice_good_region(deform_good_region(region))
        except ConstructionError as exc:
            rep.skipped.append({"family": "random", "reason": str(exc)})
            continue
        rep.add(lemma23_check(sl, params), family="random", segments=len(sl.segments), ell=ell)
    rep.elapsed = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# bad tiles


DEFECTS = ("shift", "notch", "bulge", "square", "end", "wide")


def defect_config(ell: int, h: int, kind: str, rng: np.random.Generator | None = None) -> SpinConfig:
    """A ``3 ell`` box of width-``h`` vertical stripes (plus boundary) with one defect near the centre.

    Defect sizes scale with ``ell`` so the family is comparable across tile sides:
    ``shift`` moves all walls by one column over a band of rows, ``notch`` and ``bulge``
    narrow or widen one stripe by a column, ``square`` and ``end`` create uniform patches,
    ``wide`` inserts a stripe at least ``ell/5`` wide.
    """
    n = 3 * ell
    c = n // 2
    if rng is not None:
        c += int(rng.integers(-ell // 6, ell // 6 + 1))
    col = _columns(n, [h] * (n // h + 2), 0)
    s = np.repeat(col[:, None], n, axis=1)
    x0 = (c // (2 * h)) * 2 * h
    lo, hi = n // 2 - ell // 3, n // 2 + ell // 3
    if kind == "shift":
        s[:, lo:hi] = np.roll(s[:, lo:hi], 1, axis=0)
    elif kind == "notch":
        s[x0, lo:hi] = 1
    elif kind == "bulge":
        s[x0 - 1, lo:hi] = -1
        s[x0 + h, lo:hi] = -1
    elif kind == "square":
        s[c - ell // 4:c + ell // 4, c - ell // 4:c + ell // 4] = -1
    elif kind == "end":
        s[:, c:] = 1
    elif kind == "wide":
        k = -(-hole_side(ell) // h) * h
        s[x0:x0 + k, lo:hi] = -1
    else:
        raise DomainError(f"unknown defect {kind!r}")
    return SpinConfig(s, (0, 0), Boundary(PLUS))


def lemma1_suite(params: ModelParams, seed: int = 0, count: int = 12, ell: int | None = None,
                 c2: float = DEFAULT_C2_TILE, window: Window | None = DEFAULT_WINDOW) -> SuiteReport:
    """Central tiles of seeded defect configurations, with the corner-erasure ingredients."""
    t0 = time.perf_counter()
    h = _h_star(params)
    ell = int(ell or 8 * h)
    rep = _report("lemma1", params, seed, count)
    rng = rng_for(seed)
    need = []
    for i in range(count):
        kind = DEFECTS[i % len(DEFECTS)]
        part = tile_partition(defect_config(ell, h, kind, rng if i >= len(DEFECTS) else None), ell)
        if not part.bad[1, 1]:
            rep.skipped.append({"family": kind, "reason": "central tile is good"})
            continue
        r = lemma1_check(part, (1, 1), params, c2, window)
        need.append(r.c2_required)
        rep.add(r.certificate, family=kind, ell=ell)
        for ing in r.ingredients:
            rep.add(ing, family=kind, ell=ell)
    rep.summary = {"ell": ell, "c2": c2, "c2_required_min": min(need, default=None)}
    rep.elapsed = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# ground-state property


def theorem3_suite(params: ModelParams, seed: int = 0, count: int = 200, C1: float = DEFAULT_C1_THEOREM,
                   window: Window | None = DEFAULT_WINDOW, size: int | None = None) -> SuiteReport:
    """Compact perturbations of the optimal stripes: the lower bound and the ground-state property.

    A perturbation with corners whose energy gain is not certified positive counts as a
    violation of the strict form.
    """
    t0 = time.perf_counter()
    h = _h_star(params)
    rep = _report("theorem3", params, seed, count)
    rng = rng_for(seed)
    need, kinds = [], {}
    for _ in range(count):
        n = int(size or rng.integers(h + 1, 4 * h + 1))
        cfg = perturb_striped(rng, h, n)
        r = theorem3_certificate(cfg, params, C1=C1, window=window)
        if r.N_c:
            need.append(r.C1_required)
        kinds[r.N_c > 0] = kinds.get(r.N_c > 0, 0) + 1
        rep.add(r.main, N_c=r.N_c, N_hole=r.N_hole)
        rep.add(r.corollary, require_strict=r.strict_required, N_c=r.N_c)
    rep.summary = {"C1": C1, "C1_required_min": min(need, default=None),
                   "with_corners": kinds.get(True, 0), "without_corners": kinds.get(False, 0)}
    rep.elapsed = time.perf_counter() - t0
    return rep


def epsilon_probe(taus, seed: int = 0, count: int = 40, p: float = 5.0) -> dict:
    """Run the ground-state suite at each ``tau`` and report the widest window where all pass.

    ``taus`` are negative; the window is ``|tau|`` (twice ``J_c - J``).
    """
    rows = []
    for tau in sorted(taus, key=abs):
        params = ModelParams.from_tau(tau, p)
        try:
            rep = theorem3_suite(params, seed, count)
            rows.append({"tau": tau, "ok": rep.ok, "violations": rep.violations})
        except DomainError as exc:
            rows.append({"tau": tau, "ok": False, "error": str(exc)})
    widest = None
    for r in rows:
        if not r["ok"]:
            break
        widest = abs(r["tau"])
    return {"rows": rows, "widest": widest}


# ---------------------------------------------------------------------------
# constant fits across tile sides


@dataclass(frozen=True)
class ConstantsFit:
    """Fitted constants per tile side and their spread ``max/min``."""

    params: dict
    h_star: int
    table: list
    spread: dict

    @property
    def positive(self) -> dict:
        return {k: all(row[k] is not None and row[k] > 0 for row in self.table) for k in self.spread}

    @property
    def stable(self) -> dict:
        return {k: v <= 2.0 for k, v in self.spread.items()}

    @property
    def ok(self) -> bool:
        return all(self.positive.values()) and all(self.stable.values())

    def to_dict(self) -> dict:
        return {"params": self.params, "h_star": self.h_star, "table": self.table, "spread": self.spread,
                "positive": self.positive, "stable": self.stable, "ok": self.ok}


def fit_region_c1(params: ModelParams, ell: int) -> float:
    """Smallest ``c1`` for which the good-region bound holds on the patch family."""
    h = _h_star(params)
    out = -INF
    for widths, phase in patch_family(ell, h).values():
        part = tile_partition(stripe_patch(ell, widths, phase), ell)
        for k in range(len(part.regions)):
            out = max(out, lemma22_check(part.region(k), params).extra["c1_required"])
    return out


def fit_tile_c2(params: ModelParams, ell: int, window: Window | None = DEFAULT_WINDOW) -> float:
    """Largest ``c2`` for which the bad-tile bound holds on the central tiles of the defect family."""
    h = _h_star(params)
    out = INF
    for kind in DEFECTS:
        part = tile_partition(defect_config(ell, h, kind), ell)
        if part.bad[1, 1]:
            out = min(out, lemma1_check(part, (1, 1), params, window=window).c2_required)
    return out


def fit_constants(params: ModelParams, multiples=DEFAULT_MULTIPLES,
                  window: Window | None = DEFAULT_WINDOW) -> ConstantsFit:
    """``C3``, ``C2``, ``c1``, ``c2`` at ``ell = m h*``; the ranges of the 1D fits grow with ``ell``."""
    h = _h_star(params)
    table = []
    for m in multiples:
        ell = int(m * h)
        table.append({
            "ell": ell,
            "C3": gap_bound_check(params, ell).C3,
            "C2": fit_c2(params, w_max=ell, h_max=ell),
            "c1": fit_region_c1(params, ell),
            "c2": fit_tile_c2(params, ell, window),
        })
    spread = {}
    for k in ("C3", "C2", "c1", "c2"):
        vals = [row[k] for row in table]
        spread[k] = max(vals) / min(vals) if min(vals) > 0 else INF
    return ConstantsFit(params.to_dict(), h, table, spread)


SUITES = {
    "identity": identity_suite,
    "selfenergy": selfenergy_suite,
    "chessboard": chessboard_suite,
    "localization": localization_suite,
    "lemma22": lemma22_suite,
    "lemma23": lemma23_suite,
    "lemma1": lemma1_suite,
    "theorem3": theorem3_suite,
}
