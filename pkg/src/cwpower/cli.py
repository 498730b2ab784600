"""Command-line front end.

    cwpower solve  --problem hilbert:1000 --algo cw --criterion dlambda --eps 1e-14
    cwpower bounds --problem hilbert:3 --v0 ones
    cwpower bench  matrix --output csv

Exit codes: 0 converged, 1 numerical failure, 2 not converged,
64 usage error, 66 input-file error.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import bench
from .diagnostics import emit_report, reference_eigenpair
from .errors import CWPowerError, ParseError, UnsupportedCriterionError
from .grid import l_shape, load_mask, unit_square
from .iteration import (
    Criterion,
    SolverConfig,
    StoppingRule,
    Update,
    collatz_wielandt,
    fixed_shift_power,
    plain_power,
    rayleigh_quotient_iteration,
    variable_lambda_power,
)
from .operators import InverseLaplacian, hilbert_matrix, load_matrix, random_tridiagonal

log = logging.getLogger("cwpower")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NOT_CONVERGED = 2
EXIT_USAGE = 64
EXIT_NOINPUT = 66

ALGORITHMS = ("cw", "rayleigh", "power", "fixed-shift")
FORMATS = ("csv", "md", "json")
PROBLEM_KINDS = ("hilbert", "tridiagonal", "matrix", "unit-square", "l-shape", "mask")


class UsageError(Exception):
    pass


class InputFileError(Exception):
    pass


@dataclass
class ExperimentSpec:
    problem: str
    algorithm: str = "cw"
    config: SolverConfig = field(default_factory=SolverConfig)
    v0: str = "ones"
    output: str = "md"
    seed: Optional[int] = None
    shift: Optional[float] = None
    reference: str = "power"
    relative: bool = False


def _spacing(text):
    try:
        h = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad grid spacing {text!r}; use a decimal or a fraction like 1/16") from None
    return float(h)


def build_problem(problem, seed=None):
    """Build the operator described by ``kind:arg`` (see ``--help``)."""
    kind, _, arg = problem.partition(":")
    if kind not in PROBLEM_KINDS or not arg:
        raise UsageError(f"bad --problem {problem!r}; expected one of {', '.join(k + ':...' for k in PROBLEM_KINDS)}")
    try:
        if kind == "hilbert":
            return hilbert_matrix(int(arg))
        if kind == "tridiagonal":
            n, _, s = arg.partition(":")
            if s:
                seed = int(s)
            return random_tridiagonal(int(n), bench.TRIDIAGONAL_SEED if seed is None else seed)
        if kind == "unit-square":
            return InverseLaplacian(unit_square(_spacing(arg)))
        if kind == "l-shape":
            return InverseLaplacian(l_shape(_spacing(arg)))
    except ValueError as exc:
        if isinstance(exc, CWPowerError):
            raise UsageError(str(exc)) from exc
        raise UsageError(f"bad --problem {problem!r}: {exc}") from exc
    try:
        if kind == "matrix":
            return load_matrix(arg)
        return InverseLaplacian(load_mask(arg))
    except (OSError, ParseError) as exc:
        raise InputFileError(str(exc)) from exc


def build_start(op, v0):
    if v0 == "ones":
        return np.ones(op.dimension)
    if v0 == "t-one":
        if op.is_matrix:
            raise UsageError("--v0 t-one is only valid for grid problems")
        return op.apply(np.ones(op.dimension))
    if v0.startswith("file:"):
        path = v0[5:]
        try:
            with open(path) as fh:
                values = np.array([float(t) for t in fh.read().split()])
        except OSError as exc:
            raise InputFileError(str(exc)) from exc
        except ValueError as exc:
            raise InputFileError(f"{path}: {exc}") from exc
        if values.shape != (op.dimension,):
            raise InputFileError(f"{path}: start vector has {values.size} entries, problem has {op.dimension}")
        return values
    raise UsageError(f"bad --v0 {v0!r}; expected ones, t-one or file:PATH")


def run(spec):
    """Execute one experiment. Returns ``(exit_status, text)``."""
    op = build_problem(spec.problem, spec.seed)
    v0 = build_start(op, spec.v0)
    rule = spec.config.stopping
    if spec.algorithm == "cw":
        rep = variable_lambda_power(op, v0, spec.config)
    elif spec.algorithm == "rayleigh":
        rep = rayleigh_quotient_iteration(op, v0, rule, spec.config.record_trace)
    elif spec.algorithm == "power":
        rep = plain_power(op, v0, rule, spec.config.record_trace)
    elif spec.algorithm == "fixed-shift":
        if spec.shift is None:
            raise UsageError("--algo fixed-shift needs --shift")
        rep = fixed_shift_power(op, v0, spec.shift, rule, spec.config.record_trace)
    else:
        raise UsageError(f"unknown algorithm {spec.algorithm!r}")
    log.info("%s finished in %.3f s (%s)", rep.algorithm, rep.wall_time, rep.stop_reason.value)
    if spec.reference == "power":
        ref, _ = reference_eigenpair(op)
        rep = rep.with_reference(ref, spec.relative)
    elif spec.reference != "none":
        try:
            rep = rep.with_reference(float(spec.reference), spec.relative)
        except ValueError:
            raise UsageError(f"bad --reference {spec.reference!r}") from None
    text = emit_report(rep, fmt=spec.output)
    return (EXIT_OK if rep.converged else EXIT_NOT_CONVERGED), text


def bounds_text(op, y, fmt):
    b = collatz_wielandt(op, y)
    if fmt is None:
        return f"{b.lower:.6f} {b.upper:.6f}\n"
    if fmt == "json":
        return json.dumps({"lower": b.lower, "upper": b.upper,
                           "argmin_index": b.argmin_index, "argmax_index": b.argmax_index}) + "\n"
    if fmt == "csv":
        return f"lower,upper,argmin_index,argmax_index\n{b.lower:.6g},{b.upper:.6g},{b.argmin_index},{b.argmax_index}\n"
    return (f"| lower | upper |\n|---|---|\n| {b.lower:.6g} | {b.upper:.6g} |\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--output", choices=FORMATS, help="report format (default: md)")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of standard output")
    p.add_argument("--config", metavar="PATH", help="JSON file with default values for the flags")
    p.add_argument("-v", "--verbose", action="store_true", help="log timings to standard error")


def _problem_flags(p):
    p.add_argument("--problem", help="hilbert:N | tridiagonal:N[:SEED] | matrix:PATH | "
                   "unit-square:H | l-shape:H | mask:PATH")
    p.add_argument("--v0", help="ones | t-one | file:PATH (default: ones)")
    p.add_argument("--seed", type=int, help="seed for tridiagonal problems")


def make_parser():
    parser = _Parser(prog="cwpower", description="Principal eigenpairs by variable-shift power iteration.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="run one iteration and print its trace")
    _problem_flags(solve)
    solve.add_argument("--algo", choices=ALGORITHMS, help="default: cw")
    solve.add_argument("--update", choices=[u.value for u in Update], help="shift update for --algo cw")
    solve.add_argument("--criterion", choices=[c.value for c in Criterion])
    solve.add_argument("--eps", type=float)
    solve.add_argument("--max-iters", type=int, dest="max_iters")
    solve.add_argument("--shift", type=float, help="shift for --algo fixed-shift")
    solve.add_argument("--reference", help="power (default), none, or a number")
    solve.add_argument("--relative", action="store_true", default=None, help="report relative errors")
    _common(solve)

    bounds = sub.add_parser("bounds", help="print Collatz-Wielandt bounds of the start vector")
    _problem_flags(bounds)
    _common(bounds)

    b = sub.add_parser("bench", help="run one of the table sweeps")
    b.add_argument("table", choices=[t.value for t in bench.TableId])
    _common(b)
    return parser


def _merge_config(args):
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputFileError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise InputFileError(f"{args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"{args.config}: expected a JSON object")
    for key, value in cfg.items():
        key = key.replace("-", "_")
        if key == "algorithm":
            key = "algo"
        if key == "format":
            key = "output"
        if not hasattr(args, key) or key in ("command", "config"):
            raise UsageError(f"{args.config}: unknown setting {key!r}")
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


def spec_from_args(args):
    if not args.problem:
        raise UsageError("--problem is required")
    algo = args.algo or "cw"
    if algo != "fixed-shift" and args.shift is not None:
        raise UsageError("--shift only applies to --algo fixed-shift")
    if args.update is not None and algo != "cw":
        raise UsageError("--update only applies to --algo cw")
    default_criterion = {"power": Criterion.SC1}.get(algo, Criterion.LAMBDA_DIFF)
    try:
        rule = StoppingRule(
            Criterion(args.criterion) if args.criterion else default_criterion,
            1e-14 if args.eps is None else args.eps,
            200 if args.max_iters is None else args.max_iters,
        )
        config = SolverConfig(rule, Update(args.update) if args.update else None, True)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return ExperimentSpec(
        problem=args.problem,
        algorithm=algo,
        config=config,
        v0=args.v0 or "ones",
        output=args.output or "md",
        seed=args.seed,
        shift=args.shift,
        reference=str(args.reference) if args.reference is not None else "power",
        relative=bool(args.relative),
    )


def _emit(text, out):
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputFileError(str(exc)) from exc
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        args = _merge_config(args)
        if args.command == "bench":
            _emit(bench.bench_table(args.table, args.output or "md"), args.out)
            return EXIT_OK
        if args.command == "bounds":
            if not args.problem:
                raise UsageError("--problem is required")
            op = build_problem(args.problem, args.seed)
            _emit(bounds_text(op, build_start(op, args.v0 or "ones"), args.output), args.out)
            return EXIT_OK
        status, text = run(spec_from_args(args))
        _emit(text, args.out)
        return status
    except (UsageError, UnsupportedCriterionError) as exc:
        # an algorithm paired with a criterion it cannot evaluate is a flag error
        print(f"cwpower: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputFileError as exc:
        print(f"cwpower: error: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except CWPowerError as exc:
        print(f"cwpower: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
