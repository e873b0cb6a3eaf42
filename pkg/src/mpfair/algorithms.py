"""Baseline multi-party evolutionary optimizers: OptAll and OptMPNDS.

Both are elitist (mu + lambda) genetic algorithms with SBX crossover,
polynomial mutation, and binary tournament selection. OptAll ranks the
combined population by non-dominated sorting of the concatenated objective
vector; OptMPNDS sorts each party's objectives separately and ranks by the
sum of per-party front indices, so the intersection of all parties' first
fronts is exactly the rank-0 layer. Ties break on crowding distance in the
concatenated objective space. Runs are deterministic given a seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .benchmarks import ProblemInstance
from .core import (
    ConfigError,
    SolutionSet,
    nondominated_mask,
    solution_set_to_csv,
    solution_set_to_json,
)

__all__ = [
    "EaConfig",
    "RankedPopulation",
    "OptimizerResult",
    "fast_nondominated_ranks",
    "multiparty_ranks",
    "crowding_distances",
    "run_optimizer",
    "opt_all",
    "opt_mpnds",
    "save_run",
]


@dataclass(frozen=True)
class EaConfig:
    population_size: int = 100
    generations: int = 250
    crossover_eta: float = 20.0
    crossover_prob: float = 0.9
    mutation_eta: float = 20.0
    mutation_prob: float | None = None  # None -> 1/n at run time
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise ConfigError("population_size must be even and at least 4")
        if self.generations < 1:
            raise ConfigError("generations must be at least 1")
        for p in (self.crossover_prob, self.mutation_prob):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ConfigError("operator probabilities must lie in [0, 1]")

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RankedPopulation:
    """Final population with front indices and crowding distances."""

    decisions: np.ndarray
    party_objectives: tuple[np.ndarray, ...]
    ranks: np.ndarray
    crowding: np.ndarray

    def solution_set(self) -> SolutionSet:
        return SolutionSet.from_arrays(self.decisions, list(self.party_objectives))


@dataclass(frozen=True)
class OptimizerResult:
    solution_set: SolutionSet  # joint non-dominated subset of the final pop
    final_population: RankedPopulation
    front_history: tuple[np.ndarray, ...] | None  # archived joint fronts per generation
    seed: int


def fast_nondominated_ranks(F: np.ndarray) -> np.ndarray:
    """Front index per row of F (0 = non-dominated), minimization."""
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    ranks = np.full(n, -1, dtype=int)
    remaining = np.ones(n, dtype=bool)
    r = 0
    while remaining.any():
        idx = np.flatnonzero(remaining)
        sub = dom[np.ix_(idx, idx)]
        front = idx[sub.sum(axis=0) == 0]
        ranks[front] = r
        remaining[front] = False
        r += 1
    return ranks


def multiparty_ranks(party_blocks: list[np.ndarray]) -> np.ndarray:
    """Sum of per-party front indices; 0 iff first-front for every party."""
    return np.sum([fast_nondominated_ranks(F) for F in party_blocks], axis=0)


def crowding_distances(F: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    """Per-front crowding distance (boundary points get inf)."""
    F = np.asarray(F, dtype=float)
    d = np.zeros(F.shape[0])
    for r in np.unique(ranks):
        members = np.flatnonzero(ranks == r)
        if members.size <= 2:
            d[members] = np.inf
            continue
        for k in range(F.shape[1]):
            order = members[np.argsort(F[members, k], kind="stable")]
            lo, hi = F[order[0], k], F[order[-1], k]
            d[order[0]] = d[order[-1]] = np.inf
            if hi > lo:
                gaps = (F[order[2:], k] - F[order[:-2], k]) / (hi - lo)
                d[order[1:-1]] += gaps
    return d


def _sbx_pairs(P1, P2, lo, hi, eta, prob, rng):
    u = rng.random(P1.shape)
    beta = np.where(
        u <= 0.5, (2.0 * u) ** (1.0 / (eta + 1.0)), (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))
    )
    do = rng.random(P1.shape[0]) < prob
    c1 = np.where(do[:, None], 0.5 * ((1 + beta) * P1 + (1 - beta) * P2), P1)
    c2 = np.where(do[:, None], 0.5 * ((1 - beta) * P1 + (1 + beta) * P2), P2)
    return np.clip(c1, lo, hi), np.clip(c2, lo, hi)


def _polynomial_mutation(X, lo, hi, eta, prob, rng):
    u = rng.random(X.shape)
    delta = np.where(
        u < 0.5, (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0, 1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0))
    )
    mask = rng.random(X.shape) < prob
    return np.clip(np.where(mask, X + delta * (hi - lo), X), lo, hi)


def _tournament(rng, ranks, crowding, count):
    a = rng.integers(0, ranks.size, size=count)
    b = rng.integers(0, ranks.size, size=count)
    better_b = (ranks[b] < ranks[a]) | ((ranks[b] == ranks[a]) & (crowding[b] > crowding[a]))
    return np.where(better_b, b, a)


def _rank_population(party_blocks, joint, ranking):
    if ranking == "joint":
        ranks = fast_nondominated_ranks(joint)
    elif ranking == "multiparty":
        ranks = multiparty_ranks(party_blocks)
    else:
        raise ConfigError(f"unknown ranking mode {ranking!r}")
    return ranks, crowding_distances(joint, ranks)


def run_optimizer(
    problem: ProblemInstance,
    config: EaConfig,
    ranking: str = "joint",
    track_history: bool = False,
) -> OptimizerResult:
    """Elitist GA loop shared by OptAll and OptMPNDS (see module docstring)."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    n = problem.dimension
    N = config.population_size
    pm = config.mutation_prob if config.mutation_prob is not None else 1.0 / n

    X = lo + rng.random((N, n)) * (hi - lo)
    blocks = problem.evaluate_batch(X)
    joint = np.hstack(blocks)
    ranks, crowd = _rank_population(blocks, joint, ranking)

    archive_F = None
    history: list[np.ndarray] = []
    if track_history:
        archive_F = joint[nondominated_mask(joint)].copy()
        history.append(archive_F.copy())

    for _ in range(config.generations):
        parents = _tournament(rng, ranks, crowd, N)
        P = X[parents]
        c1, c2 = _sbx_pairs(
            P[0::2], P[1::2], lo, hi, config.crossover_eta, config.crossover_prob, rng
        )
        children = np.vstack([c1, c2])
        children = _polynomial_mutation(children, lo, hi, config.mutation_eta, pm, rng)
        cblocks = problem.evaluate_batch(children)

        union_X = np.vstack([X, children])
        union_blocks = [np.vstack([b, cb]) for b, cb in zip(blocks, cblocks)]
        union_joint = np.hstack(union_blocks)
        union_ranks, union_crowd = _rank_population(union_blocks, union_joint, ranking)

        order = np.lexsort((-union_crowd, union_ranks))
        keep = order[:N]
        X = union_X[keep]
        blocks = [b[keep] for b in union_blocks]
        joint = union_joint[keep]
        # survivor ranks/crowding are recomputed on the trimmed population so
        # rank 0 means non-dominated within it, not within the union
        ranks, crowd = _rank_population(blocks, joint, ranking)

        if track_history:
            pool = np.vstack([archive_F, joint])
            archive_F = pool[nondominated_mask(pool)].copy()
            history.append(archive_F.copy())

    final = RankedPopulation(
        decisions=X, party_objectives=tuple(blocks), ranks=ranks, crowding=crowd
    )
    mask = nondominated_mask(joint)
    subset = SolutionSet.from_arrays(X[mask], [b[mask] for b in blocks])
    return OptimizerResult(
        solution_set=subset,
        final_population=final,
        front_history=tuple(history) if track_history else None,
        seed=config.seed,
    )


def opt_all(problem: ProblemInstance, config: EaConfig) -> SolutionSet:
    """NSGA-II on the concatenated objective vector of all parties."""
    return run_optimizer(problem, config, ranking="joint").solution_set


def opt_mpnds(problem: ProblemInstance, config: EaConfig) -> SolutionSet:
    """NSGA-II with multi-party layer-intersection ranking."""
    return run_optimizer(problem, config, ranking="multiparty").solution_set


ALGORITHMS = {"opt_all": opt_all, "opt_mpnds": opt_mpnds}
RANKINGS = {"opt_all": "joint", "opt_mpnds": "multiparty"}


def save_run(
    pop: SolutionSet, path: str | Path, problem_name: str, config: EaConfig, fmt: str = "json"
) -> Path:
    """Persist a population (JSON or flat CSV) plus a run-metadata sidecar."""
    path = Path(path)
    if fmt == "json":
        path.write_text(solution_set_to_json(pop))
    elif fmt == "csv":
        path.write_text(solution_set_to_csv(pop))
    else:
        raise ConfigError(f"unknown population format {fmt!r}")
    sidecar = path.with_suffix(path.suffix + ".meta.json")
    sidecar.write_text(
        json.dumps(
            {"problem": problem_name, "seed": config.seed, "config_hash": config.config_hash()},
            indent=2,
        )
    )
    return sidecar
