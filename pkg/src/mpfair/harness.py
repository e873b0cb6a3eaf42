"""Experiment runner: batch evaluations, concession sweeps, axiom checks.

Everything here is deterministic given a master seed: per-cell seeds derive
from numpy's SeedSequence with entropy [master_seed, problem_index,
algorithm_index, repetition], cells are keyed and sorted before emission,
and machine files print floats with 17 significant digits, so identical
plans produce byte-identical outputs regardless of worker count.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import benchmarks
from .algorithms import RANKINGS, EaConfig, run_optimizer
from .benchmarks import (
    MpdmpSpec,
    ProblemInstance,
    ReferenceSet,
    get_problem,
    load_problem_file,
)
from .core import ConfigError, ContractError, SolutionSet
from .fairness import (
    ConcessionConfig,
    ConcessionContext,
    comparative_nash,
    lambda_sufficiency_bound,
    nash_scores,
)
from .metrics import default_hv_reference, hv_party, igd_party

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ExperimentPlan",
    "ExperimentResult",
    "SweepGrid",
    "AxiomCheck",
    "AxiomSuiteReport",
    "InvariantViolation",
    "BandPopulationGenerator",
    "run_experiment",
    "run_sweep",
    "run_asymmetric_sweep",
    "check_sweep_invariants",
    "run_axiom_suite",
    "emit_plot_data",
    "sweep_grid_from_csv",
    "permute_reference",
    "permute_solution_set",
    "load_sweep_file",
]

_FMT = ".17g"


class InvariantViolation(RuntimeError):
    """A post-run consistency check failed; the run's outputs are suspect."""


def _fmt(x: float) -> str:
    return format(float(x), _FMT)


def cell_seed(master_seed: int, problem_index: int, algo_index: int, repetition: int) -> int:
    """Documented splittable scheme: SeedSequence entropy [master, p, a, rep]."""
    ss = np.random.SeedSequence([int(master_seed), problem_index, algo_index, repetition])
    return int(ss.generate_state(1)[0])


# ---------------------------------------------------------------------------
# Experiment plans
# ---------------------------------------------------------------------------

_KNOWN_METRICS = ("meanIGD", "meanHV", "psi_np", "log_psi_np", "comparative")


@dataclass(frozen=True)
class ExperimentPlan:
    problems: tuple[str, ...]
    algorithms: tuple[str, ...] = ("opt_all", "opt_mpnds")
    repetitions: int = 30
    metrics: tuple[str, ...] = ("meanIGD", "meanHV", "psi_np", "log_psi_np")
    concession_grid: tuple[tuple[float, ...], ...] | None = None
    output_dir: str | None = None
    master_seed: int = 0
    density: float | None = None
    population_size: int = 100
    generations: int = 250
    gamma_hat: tuple[float, ...] | float = 0.0
    lambdas: tuple[float, ...] | float = 10.0
    c_constant: float | str = "auto"
    problem_files: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "problems", tuple(self.problems))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "problem_files", tuple(str(p) for p in self.problem_files))
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        unknown = set(self.metrics) - set(_KNOWN_METRICS)
        if unknown:
            raise ConfigError(f"unknown metrics {sorted(unknown)}; known: {_KNOWN_METRICS}")
        for a in self.algorithms:
            if a not in RANKINGS:
                raise ConfigError(f"unknown algorithm {a!r}; known: {sorted(RANKINGS)}")
        if self.concession_grid is not None:
            grid = tuple(tuple(float(g) for g in case) for case in self.concession_grid)
            object.__setattr__(self, "concession_grid", grid)

    def cases(self) -> list[tuple[float, ...] | float]:
        if self.concession_grid is not None:
            return list(self.concession_grid)
        return [self.gamma_hat]

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentPlan":
        data = dict(data)
        concession = data.pop("concession", {})
        kwargs = {}
        for key in (
            "problems",
            "algorithms",
            "repetitions",
            "metrics",
            "concession_grid",
            "output_dir",
            "master_seed",
            "density",
            "population_size",
            "generations",
            "problem_files",
        ):
            if key in data:
                kwargs[key] = data[key]
        if "gamma_hat" in concession:
            kwargs["gamma_hat"] = tuple(np.atleast_1d(concession["gamma_hat"]).astype(float))
        if "lambda" in concession:
            kwargs["lambdas"] = tuple(np.atleast_1d(concession["lambda"]).astype(float))
        if "C" in concession:
            kwargs["c_constant"] = concession["C"]
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentPlan":
        path = Path(path)
        if path.suffix.lower() == ".json":
            return cls.from_dict(json.loads(path.read_text()))
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def concession_config(self, case) -> ConcessionConfig:
        return ConcessionConfig(gamma_hat=case, lambdas=self.lambdas, c_constant=self.c_constant)


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    run_rows: list[dict]
    summary_rows: list[dict]
    cases: list[dict]
    errors: list[dict]
    output_dir: Path | None = None

    def summary_table(self) -> str:
        """Human-readable table, mean (std) in scientific notation."""
        lines = []
        for case in self.cases:
            rows = [r for r in self.summary_rows if r["case"] == case["case"]]
            if not rows:
                continue
            lines.append(f"case {case['case']} gamma_hat={case['gamma_hat']}")
            header = f"{'problem':<14}{'metric':<12}"
            for algo in self.plan.algorithms:
                header += f"{algo:>26}"
            lines.append(header)
            seen = sorted({(r["problem"], r["metric"]) for r in rows})
            for problem, metric in seen:
                line = f"{problem:<14}{metric:<12}"
                for algo in self.plan.algorithms:
                    match = [
                        r for r in rows
                        if r["problem"] == problem and r["metric"] == metric and r["algorithm"] == algo
                    ]
                    if match:
                        r = match[0]
                        star = "*" if r["winner"] else " "
                        line += f"  {r['mean']:.2E} ({r['std']:.2E}){star}"
                    else:
                        line += f"{'-':>26}"
                lines.append(line)
        return "\n".join(lines)


def _ensure_problem_files(paths: Sequence[str]):
    for p in paths:
        try:
            load_problem_file(p)
        except ConfigError as exc:
            if "already registered" not in str(exc):
                raise


def _run_cell(payload: dict) -> tuple[tuple, list]:
    """Worker entry: run one (problem, algorithm, repetition) cell."""
    _ensure_problem_files(payload["problem_files"])
    problem, _ = get_problem(payload["problem"], payload["density"])
    config = EaConfig(
        population_size=payload["population_size"],
        generations=payload["generations"],
        seed=payload["seed"],
    )
    result = run_optimizer(problem, config, ranking=RANKINGS[payload["algorithm"]])
    pop = result.solution_set
    key = (payload["problem"], payload["algorithm"], payload["repetition"])
    blocks = [pop.party_matrix(m) for m in range(1, pop.num_parties + 1)]
    return key, [pop.decision_matrix(), blocks]


def run_experiment(plan: ExperimentPlan, workers: int | None = None) -> ExperimentResult:
    """Run every (problem, algorithm, repetition) cell and aggregate metrics.

    Candidate sets do not depend on the concession thresholds, so each cell
    runs once and is re-scored for every gamma_hat case; auto-C resolves per
    (problem, case) across all compared runs. Per-cell failures are recorded
    and the run continues.
    """
    _ensure_problem_files(plan.problem_files)
    if workers is None:
        workers = int(os.environ.get("MPFAIR_WORKERS", "1"))
    out_dir = os.environ.get("MPFAIR_OUTPUT_DIR", plan.output_dir)

    tasks = []
    for pi, problem_name in enumerate(plan.problems):
        for ai, algo in enumerate(plan.algorithms):
            for rep in range(plan.repetitions):
                tasks.append(
                    {
                        "problem": problem_name,
                        "algorithm": algo,
                        "repetition": rep,
                        "density": plan.density,
                        "population_size": plan.population_size,
                        "generations": plan.generations,
                        "seed": cell_seed(plan.master_seed, pi, ai, rep),
                        "problem_files": plan.problem_files,
                    }
                )

    pops: dict[tuple, SolutionSet] = {}
    errors: list[dict] = []
    outcomes = []

    def record_failure(t, exc):
        errors.append(
            {
                "problem": t["problem"],
                "algorithm": t["algorithm"],
                "run": t["repetition"],
                "error": str(exc),
            }
        )

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(pool.submit(_run_cell, t), t) for t in tasks]
            for fut, t in futures:
                try:
                    outcomes.append(fut.result())
                except Exception as exc:  # record and continue
                    record_failure(t, exc)
    else:
        for t in tasks:
            try:
                outcomes.append(_run_cell(t))
            except Exception as exc:  # record and continue
                record_failure(t, exc)
    for key, (X, blocks) in outcomes:
        pops[key] = SolutionSet.from_arrays(X, blocks)

    cases = [
        {"case": f"gh{i}", "gamma_hat": [float(g) for g in np.atleast_1d(case)]}
        for i, case in enumerate(plan.cases())
    ]

    run_rows: list[dict] = []
    for pi, problem_name in enumerate(plan.problems):
        try:
            _, ref = get_problem(problem_name, plan.density)
        except ConfigError as exc:
            errors.append({"problem": problem_name, "algorithm": "", "run": -1, "error": str(exc)})
            continue
        context = ConcessionContext(ref)
        hv_ref = default_hv_reference(ref)
        available = [
            (algo, rep)
            for algo in plan.algorithms
            for rep in range(plan.repetitions)
            if (problem_name, algo, rep) in pops
        ]
        if not available:
            continue
        group = [pops[(problem_name, algo, rep)] for algo, rep in available]

        if "meanIGD" in plan.metrics or "meanHV" in plan.metrics:
            for (algo, rep), pop in zip(available, group):
                M = ref.num_parties
                if "meanIGD" in plan.metrics:
                    per = [igd_party(ref, pop, m) for m in range(1, M + 1)]
                    for m, v in enumerate(per, start=1):
                        run_rows.append(_row(problem_name, "", algo, rep, "IGD", f"party:{m}", v))
                    run_rows.append(
                        _row(problem_name, "", algo, rep, "meanIGD", "aggregate", float(np.mean(per)))
                    )
                if "meanHV" in plan.metrics:
                    per = [hv_party(pop, hv_ref, m) for m in range(1, M + 1)]
                    for m, v in enumerate(per, start=1):
                        run_rows.append(_row(problem_name, "", algo, rep, "HV", f"party:{m}", v))
                    run_rows.append(
                        _row(problem_name, "", algo, rep, "meanHV", "aggregate", float(np.mean(per)))
                    )

        if "psi_np" in plan.metrics or "log_psi_np" in plan.metrics:
            for case_info, case in zip(cases, plan.cases()):
                config = plan.concession_config(case)
                reports = nash_scores(group, ref, config, context=context, hv_reference=hv_ref)
                for (algo, rep), report in zip(available, reports):
                    if "psi_np" in plan.metrics:
                        run_rows.append(
                            _row(problem_name, case_info["case"], algo, rep, "psi_np", "aggregate", report.psi_np)
                        )
                    if "log_psi_np" in plan.metrics:
                        run_rows.append(
                            _row(
                                problem_name,
                                case_info["case"],
                                algo,
                                rep,
                                "log_psi_np",
                                "aggregate",
                                report.log_psi_np,
                            )
                        )

        if "comparative" in plan.metrics:
            M = ref.num_parties
            for rep in range(plan.repetitions):
                algos = [a for a in plan.algorithms if (problem_name, a, rep) in pops]
                if len(algos) < 1:
                    continue
                try:
                    G = np.array(
                        [
                            [hv_party(pops[(problem_name, a, rep)], hv_ref, m) for m in range(1, M + 1)]
                            for a in algos
                        ]
                    )
                    scores = comparative_nash(G)
                except ContractError as exc:
                    errors.append(
                        {"problem": problem_name, "algorithm": "comparative", "run": rep, "error": str(exc)}
                    )
                    continue
                for a, s in zip(algos, scores):
                    run_rows.append(_row(problem_name, "", a, rep, "comparative", "aggregate", float(s)))

    summary_rows = _aggregate(run_rows, plan)
    result = ExperimentResult(
        plan=plan,
        run_rows=run_rows,
        summary_rows=summary_rows,
        cases=cases,
        errors=errors,
        output_dir=Path(out_dir) if out_dir else None,
    )
    if out_dir:
        _write_experiment_outputs(result, Path(out_dir))
    return result


def _row(problem, case, algo, rep, metric, scope, value) -> dict:
    return {
        "problem": problem,
        "case": case,
        "algorithm": algo,
        "run": rep,
        "metric": metric,
        "scope": scope,
        "value": float(value),
    }


_LOWER_IS_BETTER = {"meanIGD", "IGD"}


def _aggregate(run_rows: list[dict], plan: ExperimentPlan) -> list[dict]:
    keys = sorted(
        {(r["problem"], r["case"], r["metric"], r["scope"]) for r in run_rows},
        key=lambda k: (k[0], k[1], k[2], k[3]),
    )
    out = []
    for problem, case, metric, scope in keys:
        if scope != "aggregate":
            continue
        per_algo = []
        for algo in plan.algorithms:
            vals = [
                r["value"]
                for r in run_rows
                if r["problem"] == problem
                and r["case"] == case
                and r["metric"] == metric
                and r["scope"] == scope
                and r["algorithm"] == algo
            ]
            if vals:
                per_algo.append((algo, float(np.mean(vals)), float(np.std(vals)), len(vals)))
        if not per_algo:
            continue
        finite = [(a, m) for a, m, _, _ in per_algo if np.isfinite(m)]
        if finite:
            if metric in _LOWER_IS_BETTER:
                best = min(finite, key=lambda t: t[1])[0]
            else:
                best = max(finite, key=lambda t: t[1])[0]
        else:
            best = per_algo[0][0]
        for algo, mean, std, count in per_algo:
            out.append(
                {
                    "problem": problem,
                    "case": case,
                    "metric": metric,
                    "algorithm": algo,
                    "mean": mean,
                    "std": std,
                    "runs": count,
                    "winner": int(algo == best),
                }
            )
    return out


def _write_experiment_outputs(result: ExperimentResult, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["problem", "case", "algorithm", "run", "metric", "scope", "value"])
        rows = sorted(
            result.run_rows,
            key=lambda r: (r["problem"], r["case"], r["metric"], r["scope"], r["algorithm"], r["run"]),
        )
        for r in rows:
            writer.writerow(
                [r["problem"], r["case"], r["algorithm"], r["run"], r["metric"], r["scope"], _fmt(r["value"])]
            )
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["problem", "case", "metric", "algorithm", "mean", "std", "runs", "winner"])
        for r in result.summary_rows:
            writer.writerow(
                [
                    r["problem"],
                    r["case"],
                    r["metric"],
                    r["algorithm"],
                    _fmt(r["mean"]),
                    _fmt(r["std"]),
                    r["runs"],
                    r["winner"],
                ]
            )
    payload = {
        "plan": asdict(result.plan),
        "cases": result.cases,
        "summary": result.summary_rows,
        "errors": result.errors,
    }
    (out_dir / "summary.json").write_text(json.dumps(payload, indent=2))
    (out_dir / "table.txt").write_text(result.summary_table() + "\n")


# ---------------------------------------------------------------------------
# Concession sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepGrid:
    """Nash scores over (intrinsic concession gamma, threshold gamma_hat)."""

    problem: str
    gamma_axis: np.ndarray
    gamma_hat_axis: np.ndarray
    scores: np.ndarray  # (len(gamma_axis), len(gamma_hat_axis))
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.gamma_axis, dtype=float)
        h = np.asarray(self.gamma_hat_axis, dtype=float)
        s = np.asarray(self.scores, dtype=float)
        for axis, label in ((g, "gamma"), (h, "gamma_hat")):
            if axis.ndim != 1 or np.any(np.diff(axis) <= 0):
                raise ConfigError(f"{label} axis must be strictly increasing")
            if np.any(axis < 0.0) or np.any(axis > 1.0):
                raise ConfigError(f"{label} axis must lie in [0, 1]")
        if s.shape != (g.size, h.size):
            raise ConfigError("scores must be a full (gamma, gamma_hat) grid")
        for arr in (g, h, s):
            arr.setflags(write=False)
        object.__setattr__(self, "gamma_axis", g)
        object.__setattr__(self, "gamma_hat_axis", h)
        object.__setattr__(self, "scores", s)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["gamma", "gamma_hat", "score"])
        for i, g in enumerate(self.gamma_axis):
            for j, h in enumerate(self.gamma_hat_axis):
                writer.writerow([_fmt(g), _fmt(h), _fmt(self.scores[i, j])])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "problem": self.problem,
                "gamma": self.gamma_axis.tolist(),
                "gamma_hat": self.gamma_hat_axis.tolist(),
                "scores": self.scores.tolist(),
                "provenance": self.provenance,
            },
            indent=2,
        )


def _chunked_min_pair(A: np.ndarray, B: np.ndarray, chunk: int = 512) -> tuple[int, int]:
    """Indices of the closest pair between point sets A and B."""
    best = (0, 0)
    best_d = np.inf
    for start in range(0, A.shape[0], chunk):
        block = A[start : start + chunk]
        d = ((block[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
        i, j = np.unravel_index(np.argmin(d), d.shape)
        if d[i, j] < best_d:
            best_d = float(d[i, j])
            best = (start + int(i), int(j))
    return best


def sweep_grid_from_csv(text: str, problem: str = "") -> SweepGrid:
    reader = csv.DictReader(io.StringIO(text))
    triples = [(float(r["gamma"]), float(r["gamma_hat"]), float(r["score"])) for r in reader]
    gs = sorted({t[0] for t in triples})
    hs = sorted({t[1] for t in triples})
    scores = np.full((len(gs), len(hs)), np.nan)
    gi = {g: i for i, g in enumerate(gs)}
    hi = {h: j for j, h in enumerate(hs)}
    for g, h, s in triples:
        scores[gi[g], hi[h]] = s
    if np.isnan(scores).any():
        raise ConfigError("sweep CSV does not cover a full rectangular grid")
    return SweepGrid(problem=problem, gamma_axis=np.array(gs), gamma_hat_axis=np.array(hs), scores=scores)


class BandPopulationGenerator:
    """Synthetic populations with a known intrinsic concession level.

    The candidate pool mixes each party's PS samples with straight-line
    interpolations between pairs of parties' PS samples (valid for the box
    decision spaces of the MPDMP family); rates are computed once. Calling
    the generator with a level gamma returns every pool point whose worst
    per-party concession rate is at most gamma, so the returned population's
    intrinsic level is the largest achievable value <= gamma, and None when
    the band is empty.
    """

    def __init__(
        self,
        problem: ProblemInstance,
        ref: ReferenceSet,
        context: ConcessionContext | None = None,
        points_per_party: int = 151,
        interpolation_levels: int = 9,
    ):
        self.problem = problem
        self.ref = ref
        self.context = context or ConcessionContext(ref)
        pools = []
        per_party = []
        for party in ref.parties:
            ps = party.ps_samples
            idx = np.unique(np.linspace(0, ps.shape[0] - 1, points_per_party).astype(int))
            per_party.append(ps[idx])
            pools.append(ps[idx])
        w = np.linspace(0.0, 1.0, interpolation_levels + 2)[1:-1]
        M = len(per_party)
        for i in range(M):
            for j in range(i + 1, M):
                a, b = per_party[i], per_party[j]
                T = min(a.shape[0], b.shape[0])
                ia = np.linspace(0, a.shape[0] - 1, T).astype(int)
                ib = np.linspace(0, b.shape[0] - 1, T).astype(int)
                for wk in w:
                    pools.append((1.0 - wk) * a[ia] + wk * b[ib])
                # anchor the pool at the closest cross-party pair so common
                # optima (coincident samples) reach concession level zero
                fa, fb = ref.parties[i].ps_samples, ref.parties[j].ps_samples
                d = _chunked_min_pair(fa, fb)
                pools.append(np.vstack([fa[d[0]], fb[d[1]], 0.5 * (fa[d[0]] + fb[d[1]])]))
        self.pool = np.vstack(pools)
        self.pool_blocks = problem.evaluate_batch(self.pool, check_bounds=False)
        pop = SolutionSet.from_arrays(self.pool, self.pool_blocks)
        self.pool_rates = self.context.rates(pop)
        self.pool_level = self.pool_rates.max(axis=1)

    def __call__(self, gamma: float) -> SolutionSet | None:
        mask = self.pool_level <= gamma
        if not mask.any():
            return None
        return SolutionSet.from_arrays(self.pool[mask], [b[mask] for b in self.pool_blocks])


def run_sweep(
    problem: ProblemInstance | str,
    generator: Callable[[float], SolutionSet | None] | None = None,
    gamma_axis: Sequence[float] = tuple(np.linspace(0.0, 1.0, 20)),
    gamma_hat_axis: Sequence[float] = tuple(np.linspace(0.0, 1.0, 20)),
    lambdas: float | Sequence[float] = 10.0,
    reference: ReferenceSet | None = None,
    density: float | None = None,
    validate: bool = True,
) -> SweepGrid:
    """Score populations of prescribed concession level against threshold grids.

    One shared C (1.1x the worst penalized loss over the whole grid) keeps
    cells comparable. Rows whose acceptable band is empty score 0 in every
    column; that is a recorded outcome, not an error.
    """
    if isinstance(problem, str):
        name = problem
        problem, reference = get_problem(problem, density)
    else:
        name = problem.name
        if reference is None:
            raise ConfigError("run_sweep needs a reference set for explicit problems")
    context = ConcessionContext(reference)
    gen = generator or BandPopulationGenerator(problem, reference, context=context)
    gamma_axis = np.asarray(list(gamma_axis), dtype=float)
    gamma_hat_axis = np.asarray(list(gamma_hat_axis), dtype=float)
    M = reference.num_parties
    lam = ConcessionConfig(gamma_hat=0.0, lambdas=lambdas).resolve(M)[1]

    row_data = []
    for g in gamma_axis:
        pop = gen(float(g))
        if pop is None:
            row_data.append(None)
            continue
        L = np.array([igd_party(reference, pop, m) for m in range(1, M + 1)])
        rates = context.rates(pop)
        row_data.append((L, rates))

    burdens = np.full((gamma_axis.size, gamma_hat_axis.size, M), np.nan)
    for i, data in enumerate(row_data):
        if data is None:
            continue
        L, rates = data
        for j, h in enumerate(gamma_hat_axis):
            pen = np.maximum(0.0, rates - h).sum(axis=0)
            burdens[i, j] = L + lam * pen
    finite = burdens[np.isfinite(burdens)]
    worst = float(finite.max()) if finite.size and finite.max() > 0 else 1.0
    C = 1.1 * worst
    scores = np.zeros((gamma_axis.size, gamma_hat_axis.size))
    for i in range(gamma_axis.size):
        for j in range(gamma_hat_axis.size):
            if np.isnan(burdens[i, j]).any():
                continue
            scores[i, j] = float(np.prod(np.maximum(0.0, C - burdens[i, j])))

    grid = SweepGrid(
        problem=name,
        gamma_axis=gamma_axis,
        gamma_hat_axis=gamma_hat_axis,
        scores=scores,
        provenance={
            "resolved_c": C,
            "lambda": lam.tolist(),
            "reference_density": reference.density,
            "empty_rows": [int(i) for i, d in enumerate(row_data) if d is None],
        },
    )
    if validate:
        check_sweep_invariants(grid)
    return grid


def check_sweep_invariants(grid: SweepGrid, rtol: float = 1e-9):
    """Fail loudly if a sweep violates the threshold-monotonicity laws.

    Along each fixed-population row, scores must be non-decreasing in the
    threshold and constant once the threshold reaches the row's intrinsic
    level.
    """
    s = grid.scores
    scale = max(float(s.max()), 1e-300)
    diffs = np.diff(s, axis=1)
    if np.any(diffs < -rtol * scale):
        i, j = np.argwhere(diffs < -rtol * scale)[0]
        raise InvariantViolation(
            f"sweep row gamma={grid.gamma_axis[i]}: score decreases as gamma_hat grows "
            f"between columns {j} and {j + 1}"
        )
    for i, g in enumerate(grid.gamma_axis):
        cols = np.flatnonzero(grid.gamma_hat_axis >= g - 1e-12)
        if cols.size > 1:
            block = s[i, cols]
            if np.any(np.abs(block - block[0]) > rtol * max(abs(block[0]), 1e-300)):
                raise InvariantViolation(
                    f"sweep row gamma={g}: scores are not constant for gamma_hat >= gamma"
                )


def run_asymmetric_sweep(
    problem: ProblemInstance | str,
    gamma: float,
    axis_1: Sequence[float],
    axis_2: Sequence[float],
    generator: Callable[[float], SolutionSet | None] | None = None,
    lambdas: float | Sequence[float] = 10.0,
    reference: ReferenceSet | None = None,
    density: float | None = None,
) -> np.ndarray:
    """Per-party threshold grid for a fixed two-party population level.

    Returns the (len(axis_1), len(axis_2)) score matrix for thresholds
    (h1, h2); shares one C across the grid like `run_sweep`.
    """
    if isinstance(problem, str):
        problem, reference = get_problem(problem, density)
    elif reference is None:
        raise ConfigError("run_asymmetric_sweep needs a reference set for explicit problems")
    if reference.num_parties != 2:
        raise ConfigError("asymmetric sweeps are defined for two-party problems")
    context = ConcessionContext(reference)
    gen = generator or BandPopulationGenerator(problem, reference, context=context)
    pop = gen(float(gamma))
    axis_1 = np.asarray(list(axis_1), dtype=float)
    axis_2 = np.asarray(list(axis_2), dtype=float)
    scores = np.zeros((axis_1.size, axis_2.size))
    if pop is None:
        return scores
    lam = ConcessionConfig(gamma_hat=0.0, lambdas=lambdas).resolve(2)[1]
    L = np.array([igd_party(reference, pop, m) for m in (1, 2)])
    rates = context.rates(pop)
    burdens = np.empty((axis_1.size, axis_2.size, 2))
    for i, h1 in enumerate(axis_1):
        for j, h2 in enumerate(axis_2):
            pen = np.maximum(0.0, rates - np.array([h1, h2])).sum(axis=0)
            burdens[i, j] = L + lam * pen
    C = 1.1 * max(float(burdens.max()), 1e-12)
    return np.prod(np.maximum(0.0, C - burdens), axis=2)


def load_sweep_file(path: str | Path) -> dict:
    """Parse a sweep description (TOML/JSON): problem, axes, lambda, density."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
    else:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)

    def axis(spec, default_num=20):
        if spec is None:
            return np.linspace(0.0, 1.0, default_num)
        if isinstance(spec, Mapping):
            return np.linspace(
                float(spec.get("start", 0.0)), float(spec.get("stop", 1.0)), int(spec.get("num", default_num))
            )
        return np.asarray(list(spec), dtype=float)

    if "problem" not in data:
        raise ConfigError(f"sweep file {path} must name a problem")
    return {
        "problem": data["problem"],
        "gamma_axis": axis(data.get("gamma")),
        "gamma_hat_axis": axis(data.get("gamma_hat")),
        "lambdas": data.get("lambda", 10.0),
        "density": data.get("density"),
        "problem_files": [str(p) for p in data.get("problem_files", [])],
        "output_dir": data.get("output_dir"),
    }


# ---------------------------------------------------------------------------
# Axiom suite
# ---------------------------------------------------------------------------


@dataclass
class AxiomCheck:
    name: str
    trials: int
    failures: int
    counterexample: dict | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class AxiomSuiteReport:
    checks: list[AxiomCheck]
    trials: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        return json.dumps(
            {
                "trials": self.trials,
                "seed": self.seed,
                "passed": self.passed,
                "checks": [
                    {
                        "name": c.name,
                        "trials": c.trials,
                        "failures": c.failures,
                        "counterexample": c.counterexample,
                    }
                    for c in self.checks
                ],
            },
            indent=2,
        )

    def summary_lines(self) -> list[str]:
        return [
            f"axiom {c.name}: {'PASS' if c.passed else 'FAIL'} "
            f"({c.trials} trials, {c.failures} counterexamples)"
            for c in self.checks
        ]


def permute_reference(ref: ReferenceSet, perm: Sequence[int]) -> ReferenceSet:
    """Reorder parties (0-based new order), renumbering ids contiguously."""
    perm = list(perm)
    parties = tuple(
        benchmarks.PartyReference(
            party_id=i + 1,
            ps_samples=ref.parties[p].ps_samples,
            pf_samples=ref.parties[p].pf_samples,
            f_min=ref.parties[p].f_min,
            f_max=ref.parties[p].f_max,
        )
        for i, p in enumerate(perm)
    )
    cross = tuple(tuple(ref.cross_pf[j][m] for m in perm) for j in perm)
    return ReferenceSet(parties=parties, cross_pf=cross, density=ref.density, provenance=dict(ref.provenance))


def permute_solution_set(pop: SolutionSet, perm: Sequence[int]) -> SolutionSet:
    """Reorder each solution's objective blocks by `perm` (0-based)."""
    X = pop.decision_matrix()
    blocks = [pop.party_matrix(m) for m in range(1, pop.num_parties + 1)]
    return SolutionSet.from_arrays(X, [blocks[p] for p in perm])


def _random_mpdmp(rng: np.random.Generator, num_parties: int) -> MpdmpSpec:
    while True:
        targets = []
        ok = True
        for _ in range(num_parties):
            pts = rng.uniform(1.0, 9.0, size=(2, 2))
            if np.linalg.norm(pts[0] - pts[1]) < 0.5:
                ok = False
                break
            targets.append(pts)
        if ok:
            return benchmarks.make_mpdmp(targets, name="axiom-instance")


def _check_a1(trials: int, rng: np.random.Generator) -> AxiomCheck:
    failures = 0
    witness = None
    for t in range(trials):
        M = int(rng.integers(2, 5))
        u = rng.uniform(0.5, 10.0, size=M)
        j = int(rng.integers(0, M))
        bumped = u.copy()
        bumped[j] += rng.uniform(1e-6, 1.0)
        if not np.prod(bumped) > np.prod(u):
            failures += 1
            witness = witness or {"trial": t, "utilities": u.tolist(), "bumped": bumped.tolist()}
    return AxiomCheck("A1-pareto-monotonicity", trials, failures, witness)


def _check_a2(trials: int, rng: np.random.Generator) -> AxiomCheck:
    instances = []
    for _ in range(4):
        spec = _random_mpdmp(rng, int(rng.integers(2, 4)))
        ref = benchmarks.sample_reference(spec, density=40.0)
        instances.append((spec.to_problem(), ref, ConcessionContext(ref)))
    perm_cache: dict[tuple[int, tuple[int, ...]], tuple[ReferenceSet, ConcessionContext]] = {}
    failures = 0
    witness = None
    for t in range(trials):
        idx = int(rng.integers(0, len(instances)))
        problem, ref, ctx = instances[idx]
        M = ref.num_parties
        X = problem.bounds[:, 0] + rng.random((8, problem.dimension)) * (
            problem.bounds[:, 1] - problem.bounds[:, 0]
        )
        pop = problem.solution_set(X)
        config = ConcessionConfig(
            gamma_hat=tuple(rng.uniform(0.0, 1.0, size=M)),
            lambdas=tuple(rng.uniform(1.0, 20.0, size=M)),
        )
        perm = tuple(int(p) for p in rng.permutation(M))
        key = (idx, perm)
        if key not in perm_cache:
            pref = permute_reference(ref, perm)
            perm_cache[key] = (pref, ConcessionContext(pref))
        pref, pctx = perm_cache[key]
        base = nash_scores([pop], ref, config, context=ctx)[0].psi_np
        permuted = nash_scores(
            [permute_solution_set(pop, perm)], pref, config.permuted(perm), context=pctx
        )[0].psi_np
        if not np.isclose(base, permuted, rtol=1e-9, atol=1e-12):
            failures += 1
            witness = witness or {
                "trial": t,
                "instance": idx,
                "perm": list(perm),
                "psi": base,
                "psi_permuted": permuted,
            }
    return AxiomCheck("A2-symmetry", trials, failures, witness)


def _check_a3(trials: int, rng: np.random.Generator) -> AxiomCheck:
    failures = 0
    witness = None
    for t in range(trials):
        M = int(rng.integers(2, 5))
        u = rng.uniform(0.5, 10.0, size=M)
        i, j = rng.choice(M, size=2, replace=False)
        if u[i] > u[j]:
            i, j = j, i
        u[j] = u[i] + rng.uniform(0.1, 5.0)  # ensure a real gap to contract
        delta = rng.uniform(0.05, 0.95) * (u[j] - u[i]) / 2.0
        contracted = u.copy()
        contracted[i] += delta
        contracted[j] -= delta
        if not np.prod(contracted) > np.prod(u):
            failures += 1
            witness = witness or {"trial": t, "utilities": u.tolist(), "contracted": contracted.tolist()}
    return AxiomCheck("A3-balance-preference", trials, failures, witness)


def _check_a4(trials: int, rng: np.random.Generator, lambda_override: float | None) -> AxiomCheck:
    failures = 0
    witness = None
    for t in range(trials):
        M = int(rng.integers(2, 5))
        u1 = rng.uniform(1.0, 10.0, size=M)
        m0 = int(rng.integers(0, M))
        mu = np.zeros(M)
        others = np.arange(M) != m0
        mu[others] = rng.uniform(0.0, 2.0, size=M - 1)
        mu[m0] = rng.uniform(-1.0, 2.0)
        phi = rng.uniform(0.05, 1.0)
        bound = lambda_sufficiency_bound(u1[m0], mu, phi, u1, m0=m0)
        lam = lambda_override if lambda_override is not None else max(bound, 0.0) * 1.01 + 1e-12
        u2 = u1.copy()
        u2[others] += rng.uniform(0.0, 1.0, size=M - 1) * mu[others]
        u2[m0] = max(0.0, u1[m0] - (mu[m0] + lam * phi))
        if not np.prod(u2) < np.prod(u1):
            failures += 1
            witness = witness or {
                "trial": t,
                "utilities_before": u1.tolist(),
                "utilities_after": u2.tolist(),
                "mu": mu.tolist(),
                "phi": phi,
                "lambda": lam,
                "bound": bound,
                "violated_party": m0,
            }
    return AxiomCheck("A4-acceptability-monotonicity", trials, failures, witness)


def run_axiom_suite(
    trials: int, seed: int = 0, a4_lambda_override: float | None = None
) -> AxiomSuiteReport:
    """Randomized checks of the four evaluation axioms.

    Each axiom gets `trials` independently seeded trials; counterexamples are
    reported with enough detail to reproduce. `a4_lambda_override` replaces
    the sufficiency-bound penalty weight (e.g. 0 shows the check failing when
    penalties are disabled).
    """
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    rngs = [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, i])))
        for i in range(4)
    ]
    checks = [
        _check_a1(trials, rngs[0]),
        _check_a2(trials, rngs[1]),
        _check_a3(trials, rngs[2]),
        _check_a4(trials, rngs[3], a4_lambda_override),
    ]
    return AxiomSuiteReport(checks=checks, trials=trials, seed=seed)


# ---------------------------------------------------------------------------
# Plot-data emission
# ---------------------------------------------------------------------------


def emit_plot_data(obj, fmt: str = "csv", path: str | Path | None = None) -> str:
    """Long-format emission for external plotting.

    SweepGrid -> (gamma, gamma_hat, score) triples; ExperimentResult -> one
    row per (problem, case, algorithm, metric, statistic). Returns the text
    and writes it to `path` when given.
    """
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown emission format {fmt!r}")
    if isinstance(obj, SweepGrid):
        text = obj.to_csv() if fmt == "csv" else obj.to_json()
    elif isinstance(obj, ExperimentResult):
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["problem", "case", "algorithm", "metric", "statistic", "value"])
            for r in obj.summary_rows:
                for stat in ("mean", "std"):
                    writer.writerow(
                        [r["problem"], r["case"], r["algorithm"], r["metric"], stat, _fmt(r[stat])]
                    )
            text = buf.getvalue()
        else:
            text = json.dumps({"cases": obj.cases, "summary": obj.summary_rows}, indent=2)
    else:
        raise ConfigError(f"cannot emit plot data for {type(obj).__name__}")
    if path is not None:
        Path(path).write_text(text)
    return text
