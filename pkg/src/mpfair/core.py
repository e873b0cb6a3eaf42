"""Domain types and Pareto-dominance primitives shared by every other module.

A candidate solution for a multi-party problem carries one decision vector and
one objective block per party (decision maker). All objectives are
minimization-oriented. Types are immutable after construction and all
operations here are pure functions, so they are safe to call from any number
of workers without coordination.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ContractError",
    "ConfigError",
    "DomainError",
    "DominanceRelation",
    "PartySpec",
    "ObjectiveBlock",
    "Solution",
    "SolutionSet",
    "weakly_dominates",
    "dominates_party",
    "dominates_multiparty",
    "weakly_dominates_multiparty",
    "nondominated_mask",
    "nondominated_filter",
    "solution_set_to_json",
    "solution_set_from_json",
    "solution_set_to_csv",
    "solution_set_from_csv",
]


class ContractError(ValueError):
    """An operation was called with inputs that violate its contract."""


class ConfigError(ValueError):
    """A configuration value (spec, thresholds, file input) is invalid."""


class DomainError(ValueError):
    """A decision vector lies outside the feasible box."""


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


class DominanceRelation(Enum):
    DOMINATES = "dominates"
    WEAKLY_DOMINATES = "weakly_dominates"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


@dataclass(frozen=True)
class PartySpec:
    """One decision maker: contiguous 1-based id and its objective count."""

    party_id: int
    num_objectives: int
    objective_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.party_id < 1:
            raise ContractError(f"party_id must be >= 1, got {self.party_id}")
        if self.num_objectives < 1:
            raise ContractError("every party needs at least one objective")
        if self.objective_labels is not None and len(self.objective_labels) != self.num_objectives:
            raise ContractError("objective_labels length must match num_objectives")


@dataclass(frozen=True)
class ObjectiveBlock:
    """Objective values of one solution as seen by one party."""

    party_id: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(np.atleast_1d(self.values)))
        if self.values.ndim != 1:
            raise ContractError("objective values must be a flat vector")
        if not np.all(np.isfinite(self.values)):
            raise ContractError(
                f"objective values for party {self.party_id} must be finite, got {self.values}"
            )


@dataclass(frozen=True)
class Solution:
    """A decision vector together with its per-party objective blocks."""

    decision: np.ndarray
    objectives: tuple[ObjectiveBlock, ...]

    def __post_init__(self):
        object.__setattr__(self, "decision", _freeze(np.atleast_1d(self.decision)))
        object.__setattr__(self, "objectives", tuple(self.objectives))
        ids = [b.party_id for b in self.objectives]
        if not ids:
            raise ContractError("a solution needs at least one objective block")
        if ids != list(range(1, len(ids) + 1)):
            raise ContractError(f"party ids must be contiguous from 1, got {ids}")

    @property
    def num_parties(self) -> int:
        return len(self.objectives)

    def block(self, party_id: int) -> ObjectiveBlock:
        try:
            return self.objectives[party_id - 1]
        except IndexError:
            raise ContractError(f"no objective block for party {party_id}") from None

    def joint_values(self) -> np.ndarray:
        """All parties' objective values concatenated in party order."""
        return np.concatenate([b.values for b in self.objectives])


class SolutionSet:
    """An ordered candidate set of solutions sharing one party structure."""

    def __init__(self, solutions: Iterable[Solution]):
        self._solutions = tuple(solutions)
        if self._solutions:
            first = self._solutions[0]
            shape = tuple(len(b.values) for b in first.objectives)
            n = len(first.decision)
            for s in self._solutions[1:]:
                if tuple(len(b.values) for b in s.objectives) != shape or len(s.decision) != n:
                    raise ContractError("all solutions in a set must share one party structure")

    @classmethod
    def from_arrays(cls, decisions: np.ndarray, party_objectives: Sequence[np.ndarray]) -> "SolutionSet":
        """Build a set from a (N, n) decision matrix and per-party (N, K_m) blocks."""
        decisions = np.atleast_2d(np.asarray(decisions, dtype=float))
        blocks = [np.atleast_2d(np.asarray(f, dtype=float)) for f in party_objectives]
        for m, f in enumerate(blocks, start=1):
            if f.shape[0] != decisions.shape[0]:
                raise ContractError(f"party {m} objective rows do not match decision rows")
        sols = []
        for i in range(decisions.shape[0]):
            objs = tuple(
                ObjectiveBlock(party_id=m, values=f[i]) for m, f in enumerate(blocks, start=1)
            )
            sols.append(Solution(decision=decisions[i], objectives=objs))
        return cls(sols)

    def __len__(self) -> int:
        return len(self._solutions)

    def __iter__(self):
        return iter(self._solutions)

    def __getitem__(self, i) -> Solution:
        return self._solutions[i]

    @property
    def solutions(self) -> tuple[Solution, ...]:
        return self._solutions

    @property
    def num_parties(self) -> int:
        self.require_nonempty()
        return self._solutions[0].num_parties

    def require_nonempty(self):
        if not self._solutions:
            raise ContractError("operation requires a non-empty solution set")

    def decision_matrix(self) -> np.ndarray:
        self.require_nonempty()
        return np.array([s.decision for s in self._solutions])

    def party_matrix(self, party_id: int) -> np.ndarray:
        """Objective values of every solution for one party, shape (N, K_m)."""
        self.require_nonempty()
        return np.array([s.block(party_id).values for s in self._solutions])

    def joint_matrix(self) -> np.ndarray:
        """Concatenated objective values, shape (N, sum of K_m)."""
        self.require_nonempty()
        return np.array([s.joint_values() for s in self._solutions])

    def subset(self, indices: Sequence[int]) -> "SolutionSet":
        return SolutionSet(self._solutions[i] for i in indices)


# ---------------------------------------------------------------------------
# Dominance relations
# ---------------------------------------------------------------------------


def _check_comparable(a: ObjectiveBlock, b: ObjectiveBlock):
    if a.party_id != b.party_id:
        raise ContractError(f"cannot compare blocks of parties {a.party_id} and {b.party_id}")
    if len(a.values) != len(b.values):
        raise ContractError("cannot compare objective vectors of different lengths")


def weakly_dominates(a: ObjectiveBlock, b: ObjectiveBlock, tol: float = 0.0) -> bool:
    """True iff a <= b componentwise for the shared party (all-equal counts).

    `tol` is an absolute slack for noisy evaluators; the default 0 compares
    exact floating-point values.
    """
    _check_comparable(a, b)
    return bool(np.all(a.values <= b.values + tol))


def dominates_party(a: ObjectiveBlock, b: ObjectiveBlock, tol: float = 0.0) -> DominanceRelation:
    """Classify the party-wise dominance relation between two blocks.

    Returns DOMINATES iff a <= b componentwise with at least one strict
    inequality, EQUAL iff componentwise equal, INCOMPARABLE otherwise. With
    exact arithmetic the WEAKLY_DOMINATES member is never produced (weak
    dominance with no strict component is equality); use `weakly_dominates`
    for the boolean <= relation.
    """
    _check_comparable(a, b)
    le = a.values <= b.values + tol
    lt = a.values < b.values - tol
    if np.all(np.abs(a.values - b.values) <= tol):
        return DominanceRelation.EQUAL
    if np.all(le):
        return DominanceRelation.DOMINATES if np.any(lt) else DominanceRelation.WEAKLY_DOMINATES
    return DominanceRelation.INCOMPARABLE


def _check_same_structure(a: Solution, b: Solution):
    if a.num_parties != b.num_parties:
        raise ContractError("solutions have different party counts")
    for ba, bb in zip(a.objectives, b.objectives):
        _check_comparable(ba, bb)


def weakly_dominates_multiparty(a: Solution, b: Solution, tol: float = 0.0) -> bool:
    """True iff a weakly dominates b for every party."""
    _check_same_structure(a, b)
    return all(weakly_dominates(ba, bb, tol) for ba, bb in zip(a.objectives, b.objectives))


def dominates_multiparty(a: Solution, b: Solution, tol: float = 0.0) -> bool:
    """True iff a weakly dominates b for every party and strictly for one.

    Equivalent to Pareto dominance on the concatenated objective vector.
    """
    _check_same_structure(a, b)
    strict = False
    for ba, bb in zip(a.objectives, b.objectives):
        rel = dominates_party(ba, bb, tol)
        if rel is DominanceRelation.INCOMPARABLE:
            return False
        if rel is DominanceRelation.DOMINATES:
            strict = True
    return strict


def nondominated_mask(F: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Boolean mask of rows of F not Pareto-dominated by any other row.

    Minimization orientation. Duplicate rows are all retained: a row only
    falls when some other row is <= everywhere and < somewhere.
    """
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    keep = np.ones(n, dtype=bool)
    idx = np.arange(n)
    for i in range(n):
        if not keep[i]:
            continue
        others = keep.copy()
        others[i] = False
        if not others.any():
            continue
        cand = F[others]
        dominated = np.all(cand <= F[i] + tol, axis=1) & np.any(cand < F[i] - tol, axis=1)
        if dominated.any():
            keep[i] = False
            continue
        # rows dominated by i can never re-enter; prune them now
        rows = idx[others][np.all(F[i] <= cand + tol, axis=1) & np.any(F[i] < cand - tol, axis=1)]
        keep[rows] = False
    return keep


def nondominated_filter(
    pop: SolutionSet, scope: str = "joint", party: int | None = None, tol: float = 0.0
) -> SolutionSet:
    """Maximal subset of `pop` with no member dominated under the chosen relation.

    Args:
        pop: non-empty candidate set.
        scope: "party" (relation of one party, requires `party`),
            "multiparty" (weak everywhere + strict somewhere across parties),
            or "joint" (Pareto dominance on the concatenated vector).
        party: 1-based party id for scope="party".

    Input order is preserved among survivors and duplicates are retained.
    """
    pop.require_nonempty()
    if scope == "party":
        if party is None:
            raise ContractError("scope='party' requires a party id")
        F = pop.party_matrix(party)
    elif scope == "joint":
        F = pop.joint_matrix()
    elif scope == "multiparty":
        # multi-party dominance coincides with dominance on the concatenation
        # (weak everywhere == every component <=; strict for one party ==
        # strict in one component); keep the explicit pairwise path so the
        # equivalence stays testable against the joint route.
        sols = pop.solutions
        keep = [
            not any(
                dominates_multiparty(other, s, tol) for j, other in enumerate(sols) if j != i
            )
            for i, s in enumerate(sols)
        ]
        return pop.subset([i for i, k in enumerate(keep) if k])
    else:
        raise ContractError(f"unknown scope {scope!r}")
    mask = nondominated_mask(F, tol)
    return pop.subset(list(np.flatnonzero(mask)))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_FLOAT_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), _FLOAT_FMT)


def solution_set_to_json(pop: SolutionSet) -> str:
    """Serialize to a JSON array of {"decision": [...], "objectives": [...]}."""
    records = [
        {
            "decision": [float(v) for v in s.decision],
            "objectives": [
                {"party": b.party_id, "values": [float(v) for v in b.values]}
                for b in s.objectives
            ],
        }
        for s in pop
    ]
    return json.dumps(records, indent=2)


def solution_set_from_json(text: str) -> SolutionSet:
    records = json.loads(text)
    if not isinstance(records, list):
        raise ContractError("expected a JSON array of solutions")
    sols = []
    for rec in records:
        blocks = tuple(
            ObjectiveBlock(party_id=int(o["party"]), values=np.array(o["values"], dtype=float))
            for o in rec["objectives"]
        )
        sols.append(Solution(decision=np.array(rec["decision"], dtype=float), objectives=blocks))
    return SolutionSet(sols)


def _csv_header(pop: SolutionSet) -> list[str]:
    first = pop.solutions[0]
    cols = [f"x{i + 1}" for i in range(len(first.decision))]
    for b in first.objectives:
        cols += [f"f{b.party_id}_{k + 1}" for k in range(len(b.values))]
    return cols


def solution_set_to_csv(pop: SolutionSet) -> str:
    """Flat CSV, one row per solution: x1..xn, f1_1..f1_K1, f2_1, ...

    Floats are printed with 17 significant digits so the round-trip is
    bit-exact for finite doubles.
    """
    pop.require_nonempty()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_csv_header(pop))
    for s in pop:
        row = [_fmt(v) for v in s.decision]
        for b in s.objectives:
            row += [_fmt(v) for v in b.values]
        writer.writerow(row)
    return buf.getvalue()


def solution_set_from_csv(text: str) -> SolutionSet:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    n = sum(1 for c in header if c.startswith("x"))
    party_sizes: dict[int, int] = {}
    for c in header[n:]:
        m, _ = c[1:].split("_")
        party_sizes[int(m)] = party_sizes.get(int(m), 0) + 1
    sols = []
    for row in reader:
        if not row:
            continue
        vals = [float(v) for v in row]
        decision = np.array(vals[:n])
        offset = n
        blocks = []
        for m in sorted(party_sizes):
            k = party_sizes[m]
            blocks.append(ObjectiveBlock(party_id=m, values=np.array(vals[offset : offset + k])))
            offset += k
        sols.append(Solution(decision=decision, objectives=tuple(blocks)))
    return SolutionSet(sols)
