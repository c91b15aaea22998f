"""Command-line entry point: ``analyze``, ``sweep``, ``bench`` and ``plot``.

Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 numerical
error. Failures are reported on stderr as one line ``error: <code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from typing import Sequence

from cped import bench, report
from cped.baselines import EXTENSIONS
from cped.errors import DataError, HpiError, NumericalError
from cped.hpi import METHODS, analyze
from cped.space import EvaluationSet, load_space, load_trials
from cped.stats import DEFAULT_GRID_SIZE, QuantilePair

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
CODES = {EXIT_USAGE: "usage", EXIT_DATA: "data", EXIT_NUMERICAL: "numerical"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _default_jobs() -> int:
    raw = os.environ.get("HPI_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"HPI_JOBS must be an integer, got {raw!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_estimator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS, default="cped")
    p.add_argument("--extension", choices=EXTENSIONS, default=None, help="naive transform; only with --method ped")
    p.add_argument("--grid-size", type=_positive_int, default=DEFAULT_GRID_SIZE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cped", description="Hyperparameter importance for conditional search spaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="HPI of one evaluation set at one (gamma, gamma') pair, as JSON")
    p.add_argument("--space", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--gamma-prime", type=float, required=True)
    _add_estimator_args(p)
    p.add_argument("--output", default=None, help="write the JSON here instead of stdout")

    p = sub.add_parser("sweep", help="HPI of one evaluation set over a gamma' grid, as CSV")
    p.add_argument("--space", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.01)
    _add_estimator_args(p)
    p.add_argument("--output", required=True)

    p = sub.add_parser("bench", help="seed-averaged sweep on a synthetic objective")
    p.add_argument("--objective", choices=tuple(bench.OBJECTIVES), required=True)
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--seeds", type=_positive_int, default=10, help="use seeds 0..N-1")
    _add_estimator_args(p)
    p.add_argument("--jobs", type=_positive_int, default=None, help="worker processes (default: $HPI_JOBS or 1)")
    p.add_argument("--raw", action="store_true", help="aggregate unnormalised variances")
    p.add_argument("--output-csv", required=True)
    p.add_argument("--output-svg", default=None)
    p.add_argument("--title", default=None)

    p = sub.add_parser("plot", help="render a sweep CSV as an SVG line chart")
    p.add_argument("--input-csv", required=True)
    p.add_argument("--output-svg", required=True)
    p.add_argument("--title", default=None)
    p.add_argument("--raw", action="store_true", help="auto y-range for unnormalised values")
    return parser


def _check_extension(args: argparse.Namespace) -> None:
    if args.extension is not None and args.method != "ped":
        raise UsageError("--extension is only valid with --method ped")


def _load(args: argparse.Namespace) -> EvaluationSet:
    return load_trials(args.trials, load_space(args.space))


def _cmd_analyze(args: argparse.Namespace) -> None:
    q = QuantilePair(args.gamma, args.gamma_prime)
    evalset = _load(args)
    result = analyze(evalset, q, args.method, args.grid_size, args.extension)
    text = json.dumps(result.to_dict(), indent=2, sort_keys=False) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_sweep(args: argparse.Namespace) -> None:
    grid = bench.gamma_prime_grid(args.gamma, args.step)
    evalset = _load(args)
    label = bench.method_label(args.method, args.extension)
    rows = []
    for gp in grid:
        result = analyze(evalset, QuantilePair(args.gamma, float(gp)), args.method, args.grid_size, args.extension)
        # a single fixed evaluation set has no seed spread; degenerate points are reported with n_seeds 0
        count = 0 if result.degenerate else 1
        for name in evalset.space.names:
            rows.append(bench.SweepRow(float(gp), name, label, result.normalized[name], 0.0, count))
    report.write_csv(bench.SweepResult(tuple(rows)), args.output)


def _cmd_bench(args: argparse.Namespace) -> None:
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    config = bench.SweepConfig(
        bench.get_objective(args.objective),
        n=args.n,
        gamma=args.gamma,
        gamma_prime_step=args.step,
        seeds=tuple(range(args.seeds)),
        grid_size=args.grid_size,
    )
    result = bench.run_sweep(config, args.method, args.extension, jobs=jobs, raw=args.raw)
    report.write_csv(result, args.output_csv)
    if args.output_svg:
        report.render_line_chart(result, report.ChartSpec(args.title, normalized=not args.raw), args.output_svg)


def _cmd_plot(args: argparse.Namespace) -> None:
    result = report.read_csv(args.input_csv)
    report.render_line_chart(result, report.ChartSpec(args.title, normalized=not args.raw), args.output_svg)


COMMANDS = {"analyze": _cmd_analyze, "sweep": _cmd_sweep, "bench": _cmd_bench, "plot": _cmd_plot}


def _fail(code: int, message: str) -> int:
    print(f"error: {CODES[code]}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command != "plot":
            _check_extension(args)
        with warnings.catch_warnings():
            # per-regime sample-size warnings would flood sweep output
            if args.command in ("sweep", "bench"):
                warnings.simplefilter("ignore")
            COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, str(exc))
    except (DataError, HpiError) as exc:
        return _fail(EXIT_DATA, str(exc))
    except OSError as exc:
        return _fail(EXIT_DATA, f"{exc.filename}: {exc.strerror}" if exc.filename else str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
