"""Command-line entry point: ``ballsim {run,gapdist,scaling,verify,oracle,lowerbound}``.

Exit status: 0 when the run completed and every check passed, 1 on an
invariant violation, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from fractions import Fraction

from ..processes.config import ProcessConfig, parse_process
from . import experiments as ex
from .spec import ExperimentSpec, _default, dumps, format_number
from .suites import SUITES, run_suite

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
SCALING_DEFAULT = ("Caching", "MeanThinning", "Packing", "Twinning")


class UsageError(Exception):
    pass


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--process", default="MeanThinning", help="process name, e.g. TwoChoice or Thinning(f=3)")
    parser.add_argument("--n", default=None, help="number of bins (comma-separated list for scaling)")
    size = parser.add_mutually_exclusive_group()
    size.add_argument("--balls", type=int, default=None, help="stop at the first round with at least this many balls")
    size.add_argument("--rounds", type=int, default=None, help="run exactly this many rounds")
    parser.add_argument("--reps", type=int, default=None, help="repetitions (or states/traces for verify)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--alpha", type=float, default=None, help="Lambda smoothing (or the counterexample alpha)")
    parser.add_argument("--alpha-tilde", type=float, default=None, help="V smoothing; default 1/(12n)")
    parser.add_argument("--phi-alpha", type=float, default=0.01, help="Phi smoothing for trajectories")
    parser.add_argument("--eps", default="1/10", help="quantile band for the Lambda checks")
    parser.add_argument("--beta", default=None)
    parser.add_argument("--eta", default=None)
    parser.add_argument("--f", default=None)
    parser.add_argument("--d", type=int, default=None)
    parser.add_argument("--trace", default="final", help="final, full or every:K")
    parser.add_argument("--start", default="empty", help="empty, half-split:L (L integer or 'log'), b1 or b2")
    parser.add_argument("--out", default=None, help="output path (stdout when omitted)")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: $BALLSIM_THREADS or CPUs)")
    parser.add_argument("--format", choices=("csv", "json", "table"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ballsim", description="Balanced-allocation experiments and checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="potential trajectory of one run")
    _common(p)
    p.add_argument("--burn-in", type=int, default=0, help="round whose values normalize the *_norm columns")
    p = sub.add_parser("gapdist", help="gap histogram over repetitions")
    _common(p)
    p = sub.add_parser("scaling", help="average gap per process and n")
    _common(p)
    p.add_argument("--processes", default=",".join(SCALING_DEFAULT), help="comma-separated process names")
    p.add_argument("--m-factor", type=int, default=1000, help="balls per bin")
    p = sub.add_parser("verify", help="run a named invariant suite")
    p.add_argument("suite", choices=SUITES)
    _common(p)
    p = sub.add_parser("oracle", help="exact DP against Monte-Carlo for tiny instances")
    _common(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--tv-max", type=float, default=0.01, help="fail when the TV distance reaches this")
    p = sub.add_parser("lowerbound", help="frequency of Gap >= k log n after k n log n balls")
    _common(p)
    p.add_argument("--k", default="1/20")
    return parser


# ---------------------------------------------------------------------------
# Argument decoding


def _process(args) -> ProcessConfig:
    return parse_process(args.process, d=args.d, beta=args.beta, eta=args.eta, f=args.f)


def _ints(text, default) -> list[int]:
    if text is None:
        return list(default)
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--n must be an integer list, got {text!r}") from exc
    if not values:
        raise UsageError("--n is empty")
    return values


def _one_n(args, default: int) -> int:
    values = _ints(args.n, [default])
    if len(values) != 1:
        raise UsageError("this command takes a single --n")
    return values[0]


def _size(args, default: int, default_unit: str = "balls") -> tuple[int, str]:
    if args.rounds is not None:
        value, unit = args.rounds, "rounds"
    elif args.balls is not None:
        value, unit = args.balls, "balls"
    else:
        value, unit = default, default_unit
    if value < 0:
        raise UsageError("--balls/--rounds must be non-negative")
    return value, unit


def _threads(args) -> int:
    threads = args.threads if args.threads is not None else ex.default_threads()
    if threads < 1:
        raise UsageError("--threads must be at least 1")
    return threads


def _spec(args, command: str, n: int, m: int, unit: str, reps: int, **extra) -> ExperimentSpec:
    return ExperimentSpec(command, _process(args), n, m, unit, reps, args.seed, args.trace,
                          args.alpha if args.alpha is not None else 0.7, args.phi_alpha, args.alpha_tilde,
                          str(args.eps), args.start, extra)


# ---------------------------------------------------------------------------
# Rendering


def spec_comment(spec: ExperimentSpec) -> str:
    return "# spec: " + json.dumps(spec.to_json(), sort_keys=True, default=_default) + "\n"


def _cell(v) -> str:
    if isinstance(v, Fraction):
        return repr(float(v))
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def render_rows(spec: ExperimentSpec, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return dumps({"spec": spec, "rows": rows})
    buf = io.StringIO()
    buf.write(spec_comment(spec))
    if not rows:
        return buf.getvalue()
    cols = list(rows[0])
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in cols])
        return buf.getvalue()
    cells = [[_cell(row[c]) for c in cols] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(cols)]
    buf.write("  ".join(c.rjust(w) for c, w in zip(cols, widths)) + "\n")
    for r in cells:
        buf.write("  ".join(v.rjust(w) for v, w in zip(r, widths)) + "\n")
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Commands


def cmd_run(args) -> int:
    n = _one_n(args, 1000)
    m, unit = _size(args, 0, "rounds")
    trace = args.trace if args.trace != "final" else "full"
    spec = replace(_spec(args, "run", n, m, unit, 1, burn_in=args.burn_in), trace=trace)
    rows = ex.trajectory_rows(spec, burn_in=args.burn_in)
    _emit(render_rows(spec, rows, args.format or "csv"), args.out)
    return EXIT_OK


def cmd_gapdist(args) -> int:
    n = _one_n(args, 1000)
    m, unit = _size(args, 1000 * n)
    spec = _spec(args, "gapdist", n, m, unit, args.reps or 100)
    hist = ex.gap_histogram(spec, _threads(args))
    fmt = args.format or "table"
    if fmt == "json":
        text = dumps({"spec": spec, "histogram": hist, "table": hist.table()})
    elif fmt == "csv":
        rows = [{"gap": g, "count": c, "percent": 100 * Fraction(c, hist.repetitions)} for g, c in hist.counts.items()]
        text = render_rows(spec, rows, "csv")
    else:
        text = spec_comment(spec) + hist.table() + f"\nmean : {float(hist.mean):.3f}\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_scaling(args) -> int:
    configs = [parse_process(p.strip(), d=args.d, beta=args.beta, eta=args.eta, f=args.f)
               for p in args.processes.split(",") if p.strip()]
    if not configs:
        raise UsageError("--processes is empty")
    ns = _ints(args.n, [1000])
    reps = args.reps or 10
    spec = ExperimentSpec("scaling", None, None, args.m_factor, "balls", reps, args.seed,
                          extra={"processes": [c.label for c in configs], "n": ns, "m_factor": args.m_factor})
    rows = ex.scaling_rows(configs, ns, args.m_factor, reps, args.seed, _threads(args))
    _emit(render_rows(spec, rows, args.format or "csv"), args.out)
    return EXIT_OK


def _suite_knobs(args) -> dict:
    name = args.suite
    knobs: dict = {"seed": args.seed} if name != "counterexamples" else {}
    if name in ("framework", "drift", "couplings", "caching2step"):
        knobs["threads"] = _threads(args)
    if args.n is not None:
        knobs["n"] = _one_n(args, 0)
    m = args.rounds if args.rounds is not None else args.balls
    if args.reps is not None:
        key = {"framework": "traces", "drift": "states", "couplings": "runs", "caching2step": "states"}.get(name)
        if key is None:
            raise UsageError(f"--reps has no meaning for the {name} suite")
        knobs[key] = args.reps
    if m is not None:
        if name not in ("framework", "couplings"):
            raise UsageError(f"--rounds has no meaning for the {name} suite")
        knobs["m"] = m
    if name == "counterexamples":
        knobs["alpha"] = args.alpha if args.alpha is not None else 0.5
    if name == "drift":
        knobs["eps"] = args.eps
    if name == "couplings" and args.f is not None:
        knobs["f"] = int(Fraction(args.f))
    return knobs


def cmd_verify(args) -> int:
    knobs = _suite_knobs(args)
    report = run_suite(args.suite, **knobs)
    report = {"spec": {"command": "verify", "suite": args.suite,
                       "knobs": {k: v for k, v in knobs.items() if k != "threads"}}, **report}
    _emit(dumps(report), args.out)
    return EXIT_OK if report["passed"] else EXIT_VIOLATION


def cmd_oracle(args) -> int:
    n = _one_n(args, 3)
    m, _ = _size(args, 6, "rounds")
    spec = _spec(args, "oracle", n, m, "rounds", 1, samples=args.samples, tv_max=args.tv_max)
    report = ex.oracle_report(spec.process, n, m, args.samples, args.seed, args.tv_max)
    if (args.format or "json") == "table":
        text = spec_comment(spec) + f"{report['process']} n={n} m={m} samples={args.samples} tv={report['tv']:.6f}\n"
    else:
        text = dumps({"spec": spec, **report})
    _emit(text, args.out)
    return EXIT_OK if report["passed"] else EXIT_VIOLATION


def cmd_lowerbound(args) -> int:
    n = _one_n(args, 1000)
    spec = _spec(args, "lowerbound", n, 0, "balls", args.reps or 100, k=str(Fraction(args.k)))
    report = ex.lowerbound_probe(spec, args.k, _threads(args))
    if (args.format or "json") == "table":
        text = spec_comment(spec) + (f"{report['process']} n={n} k={format_number(report['k'])} "
                                     f"balls={report['balls']} frequency={report['frequency']:.3f}\n")
    else:
        text = dumps({"spec": spec, **report})
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "gapdist": cmd_gapdist, "scaling": cmd_scaling, "verify": cmd_verify,
            "oracle": cmd_oracle, "lowerbound": cmd_lowerbound}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, OverflowError, ZeroDivisionError) as exc:
        print(f"ballsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
