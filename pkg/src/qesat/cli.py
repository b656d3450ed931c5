"""Command-line front end: ``qesat solve | gen | bench``."""

from __future__ import annotations

import argparse
import csv
import logging
import re
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .formula import DimacsError, eval_boolean, read_dimacs, write_dimacs
from .oracle import InstanceSpec, generate_random_ksat
from .solver import DEFAULT_SEED, SolverConfig, Status, solve, write_trace_csv

EXIT_SAT = 10
EXIT_UNKNOWN = 0
EXIT_ERROR = 1
BENCH_COLUMNS = ("instance", "status", "cycles", "wall_time_ms", "seed")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the tool reports every error as 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _seed_list(text: str) -> list[int]:
    try:
        return [_u64(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--seed", type=_u64, default=DEFAULT_SEED)
    g.add_argument("--mu", type=float, default=2.0)
    g.add_argument("--delta-init", type=float, default=None, help="default: 1/mu")
    g.add_argument("--delta-min", type=float, default=None, help="default: mu**-3")
    g.add_argument("--stay-probability", type=float, default=None)
    g.add_argument("--max-cycles", type=int, default=100_000)
    g.add_argument("--time-limit-ms", type=int, default=None)
    g.add_argument("--population", type=int, default=1)
    g.add_argument("--force-quantize", action="store_true")
    g.add_argument("--quantize-reference", choices=("current", "last_quantized"), default="current")
    g.add_argument("--init", choices=("binary", "uniform"), default="binary")


def config_from_args(args, seed=None, record_trace=False) -> SolverConfig:
    optional = {}
    if args.stay_probability is not None:
        optional["stay_probability"] = args.stay_probability
    return SolverConfig(
        mu=args.mu,
        delta_init=args.delta_init,
        delta_min=args.delta_min,
        max_cycles=args.max_cycles,
        time_limit=None if args.time_limit_ms is None else args.time_limit_ms / 1000.0,
        population_size=args.population,
        seed=args.seed if seed is None else seed,
        force_quantize=args.force_quantize,
        quantize_reference=args.quantize_reference,
        init=args.init,
        record_trace=record_trace,
        **optional,
    )


def format_model(assignment, width: int = 10) -> list[str]:
    lits = [str(i + 1 if v else -(i + 1)) for i, v in enumerate(assignment)]
    lines = ["v " + " ".join(lits[i : i + width]) for i in range(0, len(lits), width)]
    lines.append("v 0")
    return lines


def cmd_solve(args) -> int:
    try:
        formula = read_dimacs(args.path)
        config = config_from_args(args, record_trace=args.trace is not None)
    except (OSError, DimacsError, ValueError) as e:
        print(f"qesat: {e}", file=sys.stderr)
        return EXIT_ERROR

    outcome = solve(formula, config)
    if args.trace is not None:
        try:
            with open(args.trace, "w", newline="") as f:
                write_trace_csv(outcome.trace, f)
        except OSError as e:
            print(f"qesat: cannot write trace: {e}", file=sys.stderr)
            return EXIT_ERROR

    out = sys.stdout
    out.write(f"c cycles {outcome.cycles_used}\n")
    if outcome.status is Status.SATISFIABLE:
        if not eval_boolean(formula, outcome.assignment):
            raise AssertionError("refusing to print an assignment that does not verify")
        out.write("s SATISFIABLE\n")
        out.write("\n".join(format_model(outcome.assignment)) + "\n")
        return EXIT_SAT
    out.write("s UNKNOWN\n")
    return EXIT_UNKNOWN


def cmd_gen(args) -> int:
    try:
        InstanceSpec(args.n, args.m, args.k, args.seed, args.planted)
    except ValueError as e:
        print(f"qesat: {e}", file=sys.stderr)
        return EXIT_ERROR
    if args.count < 0:
        print("qesat: count must be >= 0", file=sys.stderr)
        return EXIT_ERROR
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for i in range(args.count):
            # per-file seeds derived from the base seed, wrapped into u64
            spec = InstanceSpec(args.n, args.m, args.k, (args.seed + i) % 2**64, args.planted)
            formula = generate_random_ksat(spec)
            comment = (
                f"random {args.k}-SAT n={args.n} m={args.m} seed={spec.seed} "
                f"planted={'yes' if args.planted else 'no'}"
            )
            write_dimacs(formula, out / f"inst_{i}.cnf", comments=[comment])
    except OSError as e:
        print(f"qesat: {e}", file=sys.stderr)
        return EXIT_ERROR
    return 0


def _bench_one(job):
    path, config = job
    formula = read_dimacs(path)
    outcome = solve(formula, config)
    return {
        "instance": Path(path).name,
        "status": outcome.status.value,
        "cycles": outcome.cycles_used,
        "wall_time_ms": int(round(outcome.wall_time * 1000)),
        "seed": config.seed,
    }


def _natural_key(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def cmd_bench(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        print(f"qesat: {directory} is not a directory", file=sys.stderr)
        return EXIT_ERROR
    paths = sorted(directory.glob("*.cnf"), key=lambda p: _natural_key(p.name))
    if not paths:
        print(f"qesat: no .cnf files in {directory}", file=sys.stderr)
        return EXIT_ERROR
    seeds = args.seeds if args.seeds else [args.seed]
    try:
        jobs = [(str(p), config_from_args(args, seed=s)) for p in paths for s in seeds]
    except ValueError as e:
        print(f"qesat: {e}", file=sys.stderr)
        return EXIT_ERROR

    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(_bench_one, jobs))
        else:
            rows = [_bench_one(j) for j in jobs]
    except (OSError, DimacsError) as e:
        print(f"qesat: {e}", file=sys.stderr)
        return EXIT_ERROR
    rows.sort(key=lambda r: (_natural_key(r["instance"]), r["seed"]))

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for r in rows:
        writer.writerow([r[c] for c in BENCH_COLUMNS])
    solved = [r for r in rows if r["status"] == Status.SATISFIABLE.value]
    rate = len(solved) / len(rows)
    med_cycles = statistics.median(r["cycles"] for r in solved) if solved else ""
    med_ms = statistics.median(r["wall_time_ms"] for r in solved) if solved else ""
    # summary row: status column holds the success rate, cycles and
    # wall time hold medians over solved runs
    writer.writerow(["summary", f"{rate:.4f}", med_cycles, med_ms, ""])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qesat", description="Quantum-evolution SAT solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve a DIMACS CNF file")
    p.add_argument("path")
    p.add_argument("--trace", metavar="PATH", help="write the event trace as CSV")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate random k-SAT instances")
    p.add_argument("-n", type=int, required=True, help="variables")
    p.add_argument("-m", type=int, required=True, help="clauses")
    p.add_argument("-k", type=int, default=3, help="literals per clause")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=_u64, default=DEFAULT_SEED)
    p.add_argument("--planted", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="solve every *.cnf in a directory, CSV on stdout")
    p.add_argument("directory")
    p.add_argument("--seeds", type=_seed_list, default=None, help="comma-separated seeds")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="c %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
