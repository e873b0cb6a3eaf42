"""Command-line experiment runner.

Subcommands: evaluate one population file, run an experiment plan, sweep
concession grids, check the evaluation axioms, and re-emit stored results as
plot data. Exit codes: 0 success, 1 invariant or axiom failure, 2
configuration error. MPFAIR_OUTPUT_DIR and MPFAIR_WORKERS override the
output directory and worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .benchmarks import get_problem, load_problem_file
from .core import ConfigError, ContractError, DomainError, solution_set_from_json
from .fairness import ConcessionConfig, nash_score
from .harness import (
    ExperimentPlan,
    InvariantViolation,
    SweepGrid,
    load_sweep_file,
    run_axiom_suite,
    run_experiment,
    run_sweep,
)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpfair", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score one population file")
    p_eval.add_argument("population", help="solution-set JSON file")
    p_eval.add_argument("--problem", required=True, help="registered problem name")
    p_eval.add_argument("--config", help="concession config TOML/JSON")
    p_eval.add_argument("--problem-file", action="append", default=[], help="register problems from file")
    p_eval.add_argument("--density", type=float, default=None)
    p_eval.add_argument("--out", help="write the report JSON here instead of stdout")

    p_run = sub.add_parser("run", help="run an experiment plan")
    p_run.add_argument("plan", help="plan TOML/JSON file")
    p_run.add_argument("--workers", type=int, default=None)

    p_sweep = sub.add_parser("sweep", help="run a concession sweep")
    p_sweep.add_argument("sweep", help="sweep TOML/JSON file")

    p_ax = sub.add_parser("axioms", help="randomized checks of the four axioms")
    p_ax.add_argument("--trials", type=int, default=10_000)
    p_ax.add_argument("--seed", type=int, default=0)
    p_ax.add_argument("--out", help="write the report JSON here")

    p_emit = sub.add_parser("emit", help="re-emit stored results as plot data")
    p_emit.add_argument("input", help="sweep JSON or experiment summary.json")
    p_emit.add_argument("--format", choices=("csv", "json"), default="csv")
    p_emit.add_argument("--out", help="output file (default stdout)")
    return parser


def _cmd_evaluate(args) -> int:
    for f in args.problem_file:
        load_problem_file(f)
    problem, ref = get_problem(args.problem, args.density)
    pop = solution_set_from_json(Path(args.population).read_text())
    config = ConcessionConfig.from_file(args.config) if args.config else ConcessionConfig()
    report = nash_score(pop, ref, config)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def _cmd_run(args) -> int:
    plan = ExperimentPlan.from_file(args.plan)
    result = run_experiment(plan, workers=args.workers)
    print(result.summary_table())
    if result.errors:
        print(f"{len(result.errors)} cell(s) failed:", file=sys.stderr)
        for e in result.errors:
            print(f"  {e}", file=sys.stderr)
    if result.output_dir:
        print(f"outputs written to {result.output_dir}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = load_sweep_file(args.sweep)
    for f in spec.pop("problem_files"):
        load_problem_file(f)
    out_dir = os.environ.get("MPFAIR_OUTPUT_DIR", spec.pop("output_dir"))
    grid = run_sweep(
        spec["problem"],
        gamma_axis=spec["gamma_axis"],
        gamma_hat_axis=spec["gamma_hat_axis"],
        lambdas=spec["lambdas"],
        density=spec["density"],
    )
    empty = grid.provenance.get("empty_rows", [])
    print(
        f"sweep {grid.problem}: {grid.scores.shape[0]}x{grid.scores.shape[1]} cells, "
        f"C={grid.provenance['resolved_c']:.6g}, {len(empty)} empty row(s)"
    )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(grid.to_csv())
        (out / "sweep.json").write_text(grid.to_json())
        print(f"outputs written to {out}")
    else:
        sys.stdout.write(grid.to_csv())
    return EXIT_OK


def _cmd_axioms(args) -> int:
    report = run_axiom_suite(args.trials, seed=args.seed)
    for line in report.summary_lines():
        print(line)
    if args.out:
        Path(args.out).write_text(report.to_json())
    if not report.passed:
        witnesses = [c.counterexample for c in report.checks if c.counterexample]
        print("counterexamples:", file=sys.stderr)
        print(json.dumps(witnesses, indent=2), file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_emit(args) -> int:
    data = json.loads(Path(args.input).read_text())
    if "scores" in data:
        import numpy as np

        obj = SweepGrid(
            problem=data.get("problem", ""),
            gamma_axis=np.asarray(data["gamma"], dtype=float),
            gamma_hat_axis=np.asarray(data["gamma_hat"], dtype=float),
            scores=np.asarray(data["scores"], dtype=float),
            provenance=data.get("provenance", {}),
        )
        text = obj.to_csv() if args.format == "csv" else obj.to_json()
    elif "summary" in data:
        text = _emit_summary(data, args.format)
    else:
        raise ConfigError(f"{args.input} is neither a sweep grid nor an experiment summary")
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _emit_summary(data: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"cases": data.get("cases", []), "summary": data["summary"]}, indent=2)
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["problem", "case", "algorithm", "metric", "statistic", "value"])
    for r in data["summary"]:
        for stat in ("mean", "std"):
            writer.writerow(
                [r["problem"], r["case"], r["algorithm"], r["metric"], stat, format(float(r[stat]), ".17g")]
            )
    return buf.getvalue()


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "axioms": _cmd_axioms,
    "emit": _cmd_emit,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, ContractError, DomainError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
