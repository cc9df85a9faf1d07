"""Command-line front end: ``saddlenode <subcommand> [options]``.

Exit status is 0 on success, 1 on usage or input errors and 2 when a
numerical procedure fails.  Every number is printed with 9 significant
digits so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import svg
from .centre_manifold import FoldError, cm_reduce, jordanize, polish_fold
from .conjugacy import ConjugacyError, conjugate_to_normal_form
from .continuation import ContinuationError, DEFAULT_M_RANGE, branch_numbers, seed_point, trace_branch
from .flow import FlowError
from .formal_nf import NotAFoldError, PolySeries, reduce_to_takens
from .matching import MatchError, normal_form_curve
from .models import BUILTINS, ModelError, PlanarModel2P, ScalarModel1P, builtin, load_model_file
from .saddle_node import ConvergenceError, GenericityError, find_all_stationary, locate_saddle_node

__all__ = ["main", "run", "RunConfig", "UsageError"]

DIGITS = 9
FORMATS = ("csv", "json", "svg")
NUMERICAL_ERRORS = (
    ConvergenceError, GenericityError, MatchError, ConjugacyError, FoldError,
    ContinuationError, FlowError, NotAFoldError, ArithmeticError, np.linalg.LinAlgError,
)
VALUE_OPTIONS = {
    "--model", "--const", "--mu", "--range", "--tol", "--out", "--format", "--jobs",
    "--coeffs", "--order", "--guess", "--branch", "--window",
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    model: str | None = None
    constants: dict[str, float] = field(default_factory=dict)
    mu: float | None = None
    range: tuple[float, float, int] | None = None
    tol: float | None = None
    out: str | None = None
    format: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.format is not None and self.format not in FORMATS:
            raise UsageError(f"--format must be one of {', '.join(FORMATS)}")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")


# -- formatting -------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v + 0.0:.{DIGITS}g}"


def _round(obj):
    """Round floats to 9 significant digits; non-finite values become null."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(f"{v:.{DIGITS}g}") + 0.0 if math.isfinite(v) else None
    return obj


def to_json(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=True) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in r])
    return buf.getvalue()


# -- argument handling --------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_const(text: str) -> tuple[str, float]:
    name, sep, val = text.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"--const expects k=v, got {text!r}")
    try:
        v = float(val)
    except ValueError:
        raise UsageError(f"--const {name}: not a number: {val!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"--const {name}: value must be finite")
    return name.strip(), v


def _parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"--range expects a:b or a:b:n, got {text!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
        n = int(parts[2]) if len(parts) == 3 else 0
    except ValueError:
        raise UsageError(f"--range: cannot parse {text!r}") from None
    if not (math.isfinite(a) and math.isfinite(b)) or n < 0 or (len(parts) == 3 and n < 1):
        raise UsageError(f"--range: invalid values in {text!r}")
    return a, b, n


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what}: expected finite numbers")
    return vals


def _attach_values(argv: list[str]) -> list[str]:
    """Join value options with their values so negative numbers are not read as flags."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="saddlenode", description="Saddle-node normal forms, Takens' coefficient and conjugacies.")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    def common(p, model=True):
        if model:
            p.add_argument("--model", required=True, help="built-in name or model file path")
            p.add_argument("--const", action="append", default=[], metavar="K=V")
        p.add_argument("--tol", type=float)
        p.add_argument("--out")
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("analyze", help="locate the saddle-node point of a scalar model")
    common(p)
    p.add_argument("--guess", help="x,mu starting point")

    p = sub.add_parser("reduce", help="formal reduction of c2,c3,... to Takens' form")
    common(p, model=False)
    p.add_argument("--coeffs", required=True, help="c2,c3,... of x' = c2 x^2 + c3 x^3 + ...")
    p.add_argument("--order", type=int)

    p = sub.add_parser("match", help="matched normal-form parameters over a grid of fold distances")
    common(p)
    p.add_argument("--range", required=True, help="a:b:n grid of fold distances")
    p.add_argument("--guess", help="x,mu starting point")

    p = sub.add_parser("conjugacy", help="conjugacy defect against the matched normal form")
    common(p)
    p.add_argument("--mu", type=float, required=True, help="fold distance")
    p.add_argument("--guess", help="x,mu starting point")

    p = sub.add_parser("cm", help="centre-manifold reduction of a planar model at a fold")
    common(p)
    p.add_argument("--branch", choices=("upper", "lower"), default="upper")
    p.add_argument("--guess", help="x,y,p starting point (models without a seeding rule)")

    p = sub.add_parser("continue", help="fold branches of a planar model in its second parameter")
    common(p)
    p.add_argument("--range", help="a:b[:n] range of the second parameter")
    p.add_argument("--branch", choices=("upper", "lower", "both"), default="both")

    p = sub.add_parser("bifdiag", help="equilibrium branches of a scalar model with stability")
    common(p)
    p.add_argument("--range", required=True, help="a:b:n parameter grid")
    p.add_argument("--window", help="lo,hi state window")
    return parser


def _load(source: str, constants: dict[str, float]):
    if source in BUILTINS:
        model = builtin(source)
    elif os.path.exists(source):
        try:
            model = load_model_file(source)
        except OSError as exc:
            raise UsageError(f"cannot read model file {source!r}: {exc}") from None
    else:
        raise UsageError(f"--model: {source!r} is neither a built-in ({', '.join(sorted(BUILTINS))}) nor a file")
    if constants:
        model = model.with_constants(**constants)
    return model


def _scalar(model) -> ScalarModel1P:
    if not isinstance(model, ScalarModel1P):
        raise UsageError(f"model {model.name} is planar; this subcommand needs a scalar model")
    return model


def _planar(model) -> PlanarModel2P:
    if not isinstance(model, PlanarModel2P):
        raise UsageError(f"model {model.name} is scalar; this subcommand needs a planar model")
    return model


def _locate(model: ScalarModel1P, guess: str | None):
    if guess is not None:
        g = _floats(guess, "--guess")
        if len(g) != 2:
            raise UsageError("--guess expects x,mu")
        x0, mu0 = g
    elif "x" in model.hints and "mu" in model.hints:
        x0, mu0 = model.hints["x"], model.hints["mu"]
    else:
        raise UsageError(f"model {model.name} has no starting point; pass --guess x,mu")
    return locate_saddle_node(model, x0, mu0)


# -- subcommands -------------------------------------------------------------------------


def cmd_analyze(cfg: RunConfig, ns) -> str:
    model = _scalar(_load(ns.model, cfg.constants))
    sn = _locate(model, ns.guess)
    d = sn.as_dict()
    d.update(model=model.name, state=model.state, param=model.param)
    return to_json(d)


def cmd_reduce(cfg: RunConfig, ns) -> str:
    tail = _floats(ns.coeffs, "--coeffs")
    if len(tail) < 1:
        raise UsageError("--coeffs needs at least c2")
    order = ns.order if ns.order is not None else len(tail) + 1
    if order < 2:
        raise UsageError("--order must be at least 2")
    series = PolySeries.from_tail(tail, order)
    reduced, logbook = reduce_to_takens(series)
    if cfg.tol is not None:
        tail_out = reduced.tail.astype(float)
        if np.any(np.abs(tail_out[2:]) > cfg.tol):
            raise ArithmeticError("reduced coefficients above --tol")
    out = {
        "input": [float(c) for c in series.tail],
        "coeffs": [float(c) for c in reduced.tail],
        "order": int(reduced.order),
        "a": float(logbook.a),
        "alpha": float(logbook.alpha),
        "betas": {str(k): float(v) for k, v in logbook.betas.items()},
    }
    if cfg.format == "csv":
        return to_csv(["order", "coefficient"], [(k + 2, c) for k, c in enumerate(out["coeffs"])])
    return to_json(out)


def cmd_match(cfg: RunConfig, ns) -> str:
    model = _scalar(_load(ns.model, cfg.constants))
    a, b, n = cfg.range
    if n < 1:
        raise UsageError("--range for match needs a point count a:b:n")
    sn = _locate(model, ns.guess)
    mus = [m for m in np.linspace(a, b, n) if m != 0]
    curve = normal_form_curve(model, sn, mus, jobs=cfg.jobs, skip_failures=True)
    if cfg.tol is not None:
        bad = [s for s in curve.samples if max(s.residual1, s.residual2) > cfg.tol]
        if bad:
            raise MatchError(f"{len(bad)} points exceed --tol")
    if cfg.format == "json":
        return to_json({
            "p0sq": curve.p0sq, "a0": curve.a0,
            "samples": [s.as_row() for s in curve.samples],
            "failures": [{"mu": m, "reason": r} for m, r in curve.failures],
        })
    if cfg.format == "svg":
        return svg.render([
            svg.Panel("nu(mu)", "mu", "nu", [svg.Series("nu", list(curve.mu), list(curve.nu), "points")]),
            svg.Panel("a(mu)", "mu", "a", [svg.Series("a", list(curve.mu), list(curve.a), "points")]),
        ])
    rows = [(s.mu, s.nu, s.a, s.residual1, s.residual2) for s in curve.samples]
    for mu, reason in curve.failures:
        print(f"warning: mu={fmt(mu)} skipped: {reason}", file=ns.stderr)
    return to_csv(["mu", "nu", "a", "residual1", "residual2"], rows)


def cmd_conjugacy(cfg: RunConfig, ns) -> tuple[str, str | None]:
    model = _scalar(_load(ns.model, cfg.constants))
    if cfg.mu == 0:
        raise UsageError("--mu must be nonzero")
    sn = _locate(model, ns.guess)
    res = conjugate_to_normal_form(model, sn, cfg.mu)
    summary = {
        "mu": cfg.mu, "nu": res.matched.nu, "a": res.matched.a, "model_param": res.model_param,
        "basins": [
            {
                "interval": list(s.interval), "anchor": list(s.anchor),
                "equilibrium": (list(s.equilibrium) if s.equilibrium else None),
                "monotone": s.monotone, "points": int(s.x.size), **s.defect.as_dict(),
            }
            for s in res.samples
        ],
    }
    summary["p90"] = max(s.defect.p90 for s in res.samples)
    summary["max"] = max(s.defect.max for s in res.samples)
    rows = [(k, *r) for k, s in enumerate(res.samples) for r in s.rows()]
    table = to_csv(["basin", "x", "h", "dh", "defect"], rows)
    if cfg.format == "json":
        return to_json(summary), None
    if cfg.format == "svg":
        panels = [svg.Panel("h(x)", "x", "h", []), svg.Panel("defect", "x", "|g(h) - h'f|", [])]
        for k, s in enumerate(res.samples):
            panels[0].series.append(svg.Series(f"basin {k}", list(s.x), list(s.h)))
            panels[1].series.append(svg.Series(f"basin {k}", list(s.x), list(s.pointwise), "points"))
        return svg.render(panels), to_json(summary)
    return table, to_json(summary)


def cmd_cm(cfg: RunConfig, ns) -> str:
    model = _planar(_load(ns.model, cfg.constants))
    m = model.secondary_default()
    if ns.guess is not None:
        g = _floats(ns.guess, "--guess")
        if len(g) != 3:
            raise UsageError("--guess expects x,y,p")
        start = seed_point(model, m, ns.branch, guess=g)
    else:
        start = seed_point(model, m, ns.branch)
    x, y, p = polish_fold(model, start.x, start.y, start.p, m)
    red = cm_reduce(jordanize(model, x, y, p, m))
    d = red.as_dict()
    d.update(model=model.name, branch=ns.branch, p=p, m=m)
    d.pop("mu", None)
    return to_json(d)


def cmd_continue(cfg: RunConfig, ns) -> str:
    model = _planar(_load(ns.model, cfg.constants))
    lo, hi = (cfg.range[0], cfg.range[1]) if cfg.range else DEFAULT_M_RANGE
    names = ("upper", "lower") if ns.branch == "both" else (ns.branch,)
    if cfg.jobs > 1 and len(names) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=2) as pool:
            futs = [pool.submit(trace_branch, model, n, (lo, hi)) for n in names]
            branches = dict(zip(names, (f.result() for f in futs)))
    else:
        branches = {n: trace_branch(model, n, (lo, hi)) for n in names}
    for n, b in branches.items():
        if b.termination != "range-end":
            print(f"warning: {n} branch stopped ({b.termination}): {b.message}", file=ns.stderr)
    if cfg.format == "svg":
        panels = [
            svg.Panel("fold curves", model.params[1], model.params[0], []),
            svg.Panel("p0^2", model.params[1], "p0^2", []),
            svg.Panel("1/a0", model.params[1], "1/a0", []),
        ]
        for n, b in branches.items():
            t = branch_numbers(b)
            for k, panel in enumerate(panels):
                panel.series.append(svg.Series(n, list(t[:, 0]), list(t[:, k + 1])))
        return svg.render(panels)
    if cfg.format == "json":
        return to_json({n: {"termination": b.termination, "points": [q.as_row() for q in b.points]}
                        for n, b in branches.items()})
    rows = [(n, q.m, q.p, q.x, q.y, q.lam, q.p0sq, q.a0) for n, b in branches.items() for q in b.points]
    return to_csv(["branch", "m", "p", "x", "y", "lambda", "p0sq", "a0"], rows)


def cmd_bifdiag(cfg: RunConfig, ns) -> str:
    model = _scalar(_load(ns.model, cfg.constants))
    a, b, n = cfg.range
    if n < 1:
        raise UsageError("--range for bifdiag needs a point count a:b:n")
    if ns.window is not None:
        w = _floats(ns.window, "--window")
        if len(w) != 2 or not w[0] < w[1]:
            raise UsageError("--window expects lo,hi with lo < hi")
        lo, hi = w
    elif "x_lo" in model.hints:
        lo, hi = model.hints["x_lo"], model.hints["x_hi"]
    else:
        raise UsageError(f"model {model.name} has no state window; pass --window lo,hi")
    rows = []
    for mu in np.linspace(a, b, n):
        for pt in find_all_stationary(model, float(mu), lo, hi):
            rows.append((float(mu), pt.x, pt.multiplier, "stable" if pt.stable else "unstable"))
    if cfg.format == "svg":
        st = [r for r in rows if r[3] == "stable"]
        un = [r for r in rows if r[3] == "unstable"]
        return svg.render([svg.Panel("equilibria", model.param, model.state, [
            svg.Series("stable", [r[0] for r in st], [r[1] for r in st], "points", "#1f77b4"),
            svg.Series("unstable", [r[0] for r in un], [r[1] for r in un], "points", "#d62728"),
        ])])
    if cfg.format == "json":
        return to_json({"points": [{"mu": r[0], "x": r[1], "multiplier": r[2], "stability": r[3]} for r in rows]})
    return to_csv([model.param, model.state, "multiplier", "stability"], rows)


COMMANDS = {
    "analyze": cmd_analyze, "reduce": cmd_reduce, "match": cmd_match, "conjugacy": cmd_conjugacy,
    "cm": cmd_cm, "continue": cmd_continue, "bifdiag": cmd_bifdiag,
}


def _config(ns) -> RunConfig:
    consts = dict(_parse_const(c) for c in getattr(ns, "const", []) or [])
    rng = getattr(ns, "range", None)
    return RunConfig(
        subcommand=ns.subcommand, model=getattr(ns, "model", None), constants=consts,
        mu=getattr(ns, "mu", None), range=_parse_range(rng) if rng else None,
        tol=ns.tol, out=ns.out, format=ns.format, jobs=ns.jobs,
    )


def _emit(text: str, path: str | None, stdout):
    if path is None:
        stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path!r}: {exc}") from None


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(_attach_values(argv))
        if ns.subcommand is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        ns.stderr = stderr
        cfg = _config(ns)
        result = COMMANDS[ns.subcommand](cfg, ns)
        if isinstance(result, tuple):
            primary, summary = result
            _emit(primary, cfg.out, stdout)
            if summary is not None and cfg.out is not None:
                stdout.write(summary)
        else:
            _emit(result, cfg.out, stdout)
        return 0
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    except (UsageError, ModelError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
