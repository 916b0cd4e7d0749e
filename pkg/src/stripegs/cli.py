"""Command-line interface: ``stripegs <command> ...``.

Every command prints its primary result on stdout.  With ``--out DIR`` the same result,
any figures and a ``manifest.json`` describing the run are written to ``DIR``.
Wall-clock timings go to the manifest only, so result files are reproducible byte for
byte; ``stripegs rerun DIR/manifest.json`` replays a run.

Exit codes: 0 success (every certificate holds), 1 a violation was found,
2 usage or domain error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .results import BudgetError, ConstructionError, DomainError

THREADS_ENV = "STRIPEGS_THREADS"

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    """What was run and where its outputs went; enough to reproduce the run."""

    command: str
    params: dict
    seeds: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    version: str = __version__
    outputs: list = field(default_factory=list)
    argv: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=_jsonable)


def _jsonable(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (set, tuple)):
        return list(v)
    return str(v)


def _dumps(obj, indent=None) -> str:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return str(x)
        if isinstance(x, dict):
            return {str(k): clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        return x

    return json.dumps(clean(obj), indent=indent, default=_jsonable)


# ---------------------------------------------------------------------------
# argument helpers


def parse_dims(text: str) -> tuple:
    """``"24"`` is a ring of 24 sites, ``"4x6"`` a 4 by 6 torus."""
    try:
        parts = [int(v) for v in text.lower().split("x")]
    except ValueError:
        raise UsageError(f"bad --dims {text!r}: expected L or LxM") from None
    if len(parts) == 1:
        parts.append(1)
    if len(parts) != 2 or min(parts) < 1:
        raise UsageError(f"bad --dims {text!r}: expected L or LxM")
    return tuple(parts)


def parse_ints(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def parse_grid(text: str) -> list:
    """``a:b:n`` gives ``n`` log-spaced values of ``tau`` between ``a`` and ``b``.

    Both ends must have the same sign; positive ends are read as ``|tau|`` (stripes need
    ``tau < 0``), so ``1e-4:1e-3:6`` and ``-1e-4:-1e-3:6`` give the same grid.
    """
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise UsageError(f"bad grid {text!r}: expected a:b:n") from None
    if n < 1 or a == 0 or b == 0 or (a > 0) != (b > 0):
        raise UsageError(f"bad grid {text!r}: ends must be nonzero with the same sign, n >= 1")
    return [-float(v) for v in np.geomspace(abs(a), abs(b), n)]


def parse_pair(text: str) -> tuple:
    v = parse_ints(text)
    if len(v) != 2:
        raise UsageError(f"expected x,y got {text!r}")
    return tuple(v)


def _params(args):
    from .kernel import ModelParams

    if args.J is not None and args.tau is not None:
        raise UsageError("give either --J or --tau, not both")
    if args.tau is not None:
        return ModelParams.from_tau(args.tau, args.p, args.d)
    if args.J is None:
        raise UsageError("--J or --tau is required")
    return ModelParams(args.d, args.p, args.J)


def _model_args(sp, need_J=True):
    sp.add_argument("--p", type=float, default=5.0, help="decay exponent (default 5)")
    sp.add_argument("--d", type=int, default=2, help="dimension (default 2)")
    if need_J:
        sp.add_argument("--J", type=float, help="nearest-neighbour coupling")
        sp.add_argument("--tau", type=float, help="2 (J - J_c); alternative to --J")


def _set_threads(n):
    if n is None:
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# output handling


class Output:
    """Collects files written under ``--out`` and finishes with the manifest."""

    def __init__(self, args, command: str):
        self.dir = Path(args.out) if getattr(args, "out", None) else None
        self.manifest = RunManifest(command, {}, argv=list(getattr(args, "_argv", [])))
        self.t0 = time.perf_counter()
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str, explicit=None):
        if explicit:
            return Path(explicit)
        return self.dir / name if self.dir else None

    def write(self, name: str, text: str):
        p = self.path(name)
        if p is not None:
            p.write_text(text)
            self.record(p)
        return p

    def record(self, p):
        if p is not None:
            self.manifest.outputs.append(str(p))

    def timing(self, data: dict, *keys) -> dict:
        """Move wall-clock entries of ``data`` into the manifest."""
        for k in keys:
            if k in data:
                self.manifest.timings[k] = data.pop(k)
        return data

    def finish(self):
        self.manifest.timings["total"] = time.perf_counter() - self.t0
        if self.dir:
            target = self.dir / "manifest.json"
            self.manifest.outputs.append(str(target))
            target.write_text(self.manifest.to_json())


def _emit(text: str):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_jc(args) -> int:
    from .kernel import critical_coupling

    out = Output(args, "jc")
    res = critical_coupling(args.p, args.d, tol=args.tol, method=args.method)
    data = {"p": args.p, "d": args.d, "J_c": res.value, "tail_bound": res.tail_bound, "method": args.method}
    out.manifest.params = {"p": args.p, "d": args.d, "method": args.method}
    out.manifest.tolerances = {"tol": args.tol}
    text = _dumps(data, indent=2)
    _emit(text)
    out.write("jc.json", text)
    out.finish()
    return EXIT_OK


def cmd_es(args) -> int:
    from .plotting import energy_curve_figure
    from .stripes import energy_curve

    params = _params(args)
    params.require_stripe_regime()
    out = Output(args, "es")
    curve = energy_curve(params, args.hmax)
    body = curve.to_csv()
    if params.tau >= 0:
        # e_s(h) > tau/h >= 0: the uniform state wins and the curve has no interior argmin
        summary = {"h_star": None, "tie": False, "candidates": [], "e_s_min": None, "hmax": args.hmax}
    else:
        summary = {"h_star": curve.h_star, "tie": curve.tie, "candidates": list(curve.candidates),
                   "e_s_min": curve.value(curve.h_star), "hmax": args.hmax}
    h_text = "none" if summary["h_star"] is None else summary["h_star"]
    _emit(body + f"# h_star: {h_text}\n# tie: {str(summary['tie']).lower()}")
    out.manifest.params = params.to_dict()
    out.write("es.csv", body)
    out.write("es.json", _dumps({"params": params.to_dict(), **summary}, indent=2))
    fig = out.path("es.png", args.figure)
    if fig is not None:
        out.record(energy_curve_figure(curve, fig))
    out.finish()
    return EXIT_OK


def cmd_einf(args) -> int:
    from .stripes import StripeSequence, e_infinity

    params = _params(args)
    out = Output(args, "einf")
    seq = StripeSequence.from_list(parse_ints(args.seq))
    res = e_infinity(seq, params)
    data = {"sequence": seq.as_list(), "e_inf": res.value, "tail_bound": res.tail_bound,
            "params": params.to_dict()}
    out.manifest.params = params.to_dict()
    text = _dumps(data, indent=2)
    _emit(text)
    out.write("einf.json", text)
    out.finish()
    return EXIT_OK


def cmd_decompose(args) -> int:
    from .config import SpinConfig
    from .geometry import tile_partition
    from .plotting import decomposition_figure

    out = Output(args, "decompose")
    cfg = SpinConfig.load(args.config)
    origin = parse_pair(args.origin) if args.origin else (0, 0)
    if args.ell < 1:
        raise UsageError("--ell must be positive")
    part = tile_partition(cfg, args.ell, origin)
    data = {"config": str(args.config), "shape": list(cfg.shape), "origin": list(cfg.origin),
            "boundary": cfg.boundary.to_dict(), **part.to_dict()}
    if args.J is not None or args.tau is not None:
        from .bounds import localized_energies

        params = _params(args)
        loc = localized_energies(part, params)
        data["params"] = params.to_dict()
        data["localized"] = {"tiles": {f"{a},{b}": r.to_dict() for (a, b), r in loc.tiles.items()},
                             "regions": {str(k): r.to_dict() for k, r in loc.regions.items()},
                             "total": loc.total.to_dict()}
        out.manifest.params = params.to_dict()
    out.manifest.params.update({"ell": args.ell, "tile_origin": list(origin), "config": str(args.config)})
    text = _dumps(data, indent=2)
    _emit(text)
    out.write("decompose.json", text)
    for fig in filter(None, (args.svg, args.figure)):
        out.record(decomposition_figure(part, fig))
    if out.dir and not (args.svg or args.figure):
        out.record(decomposition_figure(part, out.dir / "decompose.png"))
    out.finish()
    return EXIT_OK


def cmd_verify(args) -> int:
    from .bounds import DEFAULT_WINDOW
    from .suites import SUITES

    params = _params(args)
    out = Output(args, "verify")
    kwargs = {"seed": args.seed}
    if args.count is not None:
        if args.count < 0:
            raise UsageError("--count must be non-negative")
        kwargs["count"] = args.count
    rep = SUITES[args.suite](params, **kwargs)
    lines = rep.jsonl()
    info = out.timing(rep.to_dict(), "elapsed")
    summary = _dumps({"summary": info})
    _emit(lines + summary)
    out.manifest.params = params.to_dict()
    out.manifest.params["suite"] = args.suite
    out.manifest.seeds = [args.seed]
    out.manifest.tolerances = {"verdict": "slack >= -(lhs.tail_bound + rhs.tail_bound)",
                               "window": asdict(DEFAULT_WINDOW)}
    out.write(f"verify_{args.suite}.jsonl", lines)
    out.write(f"verify_{args.suite}_summary.json", _dumps(info, indent=2))
    out.finish()
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_bruteforce(args) -> int:
    from .oracle import Schedule, anneal, exhaustive_1d, exhaustive_2d
    from .plotting import search_figure

    params = _params(args)
    out = Output(args, "bruteforce")
    shape = parse_dims(args.dims)
    if args.anneal:
        sched = Schedule(args.sweeps)
        rep = anneal(shape, params, sched, seed=args.seed)
        out.manifest.seeds = [args.seed]
        out.manifest.tolerances = asdict(sched)
    elif shape[1] == 1:
        rep = exhaustive_1d(shape[0], params)
    else:
        rep = exhaustive_2d(shape[0], shape[1], params)
    data = out.timing(rep.to_dict(), "wall_time")
    if rep.trace:
        data["trace"] = rep.trace
    out.manifest.params = {**params.to_dict(), "shape": list(shape), "method": rep.method}
    text = _dumps(data, indent=2)
    _emit(text)
    out.write("bruteforce.json", text)
    fig = out.path("bruteforce.png", args.figure)
    if fig is not None:
        out.record(search_figure(rep, fig))
    out.finish()
    return EXIT_OK


def cmd_scan(args) -> int:
    from .plotting import width_scan_figure
    from .stripes import width_scan

    out = Output(args, "scan")
    taus = parse_grid(args.tau_grid)
    scan = width_scan(taus, args.p, args.d)
    body = scan.to_csv()
    _emit(body + f"# slope: {scan.slope!r}")
    out.manifest.params = {"what": args.what, "p": args.p, "d": args.d, "taus": taus}
    out.write("scan.csv", body)
    out.write("scan.json", _dumps({"p": args.p, "d": args.d, "taus": taus, "h_star": scan.h_star,
                                   "ties": scan.ties, "slope": scan.slope,
                                   "predicted_slope": -1.0 / (args.p - 3)}, indent=2))
    fig = out.path("scan.png", args.figure)
    if fig is not None:
        out.record(width_scan_figure(scan, fig))
    out.finish()
    return EXIT_OK


def cmd_fit(args) -> int:
    from .plotting import constants_figure
    from .suites import fit_constants

    params = _params(args)
    out = Output(args, "fit")
    multiples = tuple(parse_ints(args.multiples))
    fit = fit_constants(params, multiples)
    text = _dumps(fit.to_dict(), indent=2)
    _emit(text)
    out.manifest.params = {**params.to_dict(), "multiples": list(multiples)}
    out.write("constants.json", text)
    fig = out.path("constants.png", args.figure)
    if fig is not None:
        out.record(constants_figure(fit, fig))
    out.finish()
    return EXIT_OK if fit.ok else EXIT_VIOLATION


def cmd_rerun(args) -> int:
    """Replay the argument list stored in a manifest."""
    try:
        data = json.loads(Path(args.manifest).read_text())
        argv = list(data["argv"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from None
    if argv and argv[0] == "rerun":
        raise UsageError("manifest records a rerun")
    return main(argv)


COMMANDS = {
    "jc": cmd_jc,
    "es": cmd_es,
    "einf": cmd_einf,
    "decompose": cmd_decompose,
    "verify": cmd_verify,
    "bruteforce": cmd_bruteforce,
    "scan": cmd_scan,
    "fit": cmd_fit,
    "rerun": cmd_rerun,
}


def build_parser() -> argparse.ArgumentParser:
    from .suites import SUITES

    ap = argparse.ArgumentParser(prog="stripegs", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    env = os.environ.get(THREADS_ENV)
    ap.add_argument("--threads", type=int, default=int(env) if env and env.isdigit() else None,
                    help=f"numba thread count (default from ${THREADS_ENV})")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", help="directory for result files and manifest.json")
        return sp

    sp = add("jc", "critical coupling J_c with its error bound")
    _model_args(sp, need_J=False)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--method", choices=("lattice", "ball"), default="lattice")

    sp = add("es", "striped energy per site e_s(h) for h = 1..hmax")
    _model_args(sp)
    sp.add_argument("--hmax", type=int, default=64)
    sp.add_argument("--figure", help="plot file (png, svg or pdf)")

    sp = add("einf", "energy per unit length of a stripe sequence in a plus background")
    _model_args(sp)
    sp.add_argument("--seq", required=True, help="h1,w1,h2,...,hn")

    sp = add("decompose", "tile partition of a configuration: bad tiles, holes, good regions")
    sp.add_argument("--config", required=True, help="text or JSON configuration file")
    sp.add_argument("--ell", type=int, required=True, help="tile side")
    sp.add_argument("--origin", help="tile grid origin x,y (default 0,0)")
    sp.add_argument("--svg", help="write the decomposition figure here")
    sp.add_argument("--figure", help="same, any matplotlib format")
    _model_args(sp)

    sp = add("verify", "run a certificate suite; one JSON line per check")
    sp.add_argument("--suite", required=True, choices=sorted(SUITES))
    _model_args(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, help="number of random cases (suite default if omitted)")

    sp = add("bruteforce", "exact or annealed ground states on a ring or torus")
    sp.add_argument("--dims", required=True, help="L (ring) or LxM (torus)")
    _model_args(sp)
    sp.add_argument("--anneal", action="store_true", help="simulated annealing instead of enumeration")
    sp.add_argument("--sweeps", type=int, default=4000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--figure", help="plot file for the minimizers")

    sp = add("scan", "optimal width h* over a grid of tau")
    sp.add_argument("--what", choices=("hstar",), default="hstar")
    _model_args(sp, need_J=False)
    sp.add_argument("--tau-grid", dest="tau_grid", required=True,
                    help="a:b:n, log-spaced; positive ends are read as |tau|")
    sp.add_argument("--figure", help="log-log plot file")

    sp = add("fit", "fit the bound constants at ell = m h* for each multiple m")
    _model_args(sp)
    sp.add_argument("--multiples", default="8,12,16")
    sp.add_argument("--figure", help="plot file")

    sp = sub.add_parser("rerun", help="replay the run recorded in a manifest.json")
    sp.add_argument("manifest")
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    args._argv = argv
    try:
        _set_threads(args.threads)
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, BudgetError, ConstructionError, FileNotFoundError) as exc:
        print(f"stripegs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
