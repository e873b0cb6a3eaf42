"""Classical per-party indicators and their mean aggregations.

IGD variants use brute-force nearest-neighbour scans (reference sets stay in
the low thousands, so no spatial index). Hypervolume is exact: a dimension
sweep for two objectives and recursive slicing for three or more.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .benchmarks import ReferenceSet
from .core import ContractError, SolutionSet, nondominated_mask

__all__ = [
    "MetricValue",
    "HvReference",
    "igd",
    "igd_party",
    "igd_multiparty",
    "hypervolume",
    "hv_party",
    "mean_igd",
    "mean_hv",
    "default_hv_reference",
    "append_metrics_csv",
]


@dataclass(frozen=True)
class MetricValue:
    """One scored indicator: scope is "aggregate" or "party:<id>"."""

    name: str
    scope: str
    value: float


@dataclass(frozen=True)
class HvReference:
    """Per-party hypervolume reference points, in party-id order."""

    points: tuple[np.ndarray, ...]

    def __post_init__(self):
        pts = tuple(np.asarray(p, dtype=float) for p in self.points)
        for p in pts:
            p.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def point(self, party_id: int) -> np.ndarray:
        return self.points[party_id - 1]


def default_hv_reference(ref: ReferenceSet, margin: float = 1.1) -> HvReference:
    """Componentwise f_max scaled by `margin` (recorded in every report)."""
    return HvReference(points=tuple(p.f_max * margin for p in ref.parties))


# ---------------------------------------------------------------------------
# Inverted generational distance
# ---------------------------------------------------------------------------


def igd(reference_points: np.ndarray, points: np.ndarray) -> float:
    """Mean Euclidean distance from each reference point to its nearest point."""
    R = np.atleast_2d(np.asarray(reference_points, dtype=float))
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if R.size == 0 or P.size == 0:
        raise ContractError("IGD requires non-empty reference and candidate sets")
    if R.shape[1] != P.shape[1]:
        raise ContractError("reference and candidate points must share a dimension")
    mins = np.empty(R.shape[0])
    step = max(1, 2_000_000 // max(1, P.shape[0]))
    for start in range(0, R.shape[0], step):
        block = R[start : start + step]
        d = np.sqrt(((block[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
        mins[start : start + block.shape[0]] = d.min(axis=1)
    return float(mins.mean())


def igd_party(pf: ReferenceSet | np.ndarray, pop: SolutionSet, party: int) -> float:
    """IGD of the population against one party's reference front."""
    pop.require_nonempty()
    R = pf.party(party).pf_samples if isinstance(pf, ReferenceSet) else np.asarray(pf)
    return igd(R, pop.party_matrix(party))


def igd_multiparty(refs: ReferenceSet | Sequence[np.ndarray], pop: SolutionSet) -> float:
    """Multi-party IGD: per-pair distance is the sum of per-party norms.

    `refs` is either a ReferenceSet (its pooled PS samples become the joint
    reference) or a list of per-party image arrays with aligned rows, so each
    reference point carries every party's objective coordinates.
    """
    pop.require_nonempty()
    blocks = refs.joint_reference() if isinstance(refs, ReferenceSet) else [
        np.atleast_2d(np.asarray(b, dtype=float)) for b in refs
    ]
    if len(blocks) != pop.num_parties:
        raise ContractError("joint reference must carry one block per party")
    rows = {b.shape[0] for b in blocks}
    if len(rows) != 1:
        raise ContractError("joint reference blocks must align row-wise")
    (n_ref,) = rows
    if n_ref == 0:
        raise ContractError("IGD requires a non-empty reference set")
    total = np.zeros((n_ref, len(pop)))
    for m, R in enumerate(blocks, start=1):
        P = pop.party_matrix(m)
        if R.shape[1] != P.shape[1]:
            raise ContractError(f"party {m} reference has the wrong objective count")
        total += np.sqrt(((R[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
    return float(total.min(axis=1).mean())


def mean_igd(refs: ReferenceSet, pop: SolutionSet) -> float:
    """Arithmetic mean of per-party IGD values."""
    pop.require_nonempty()
    vals = [igd_party(refs, pop, m) for m in range(1, refs.num_parties + 1)]
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# Hypervolume
# ---------------------------------------------------------------------------


def _hv_2d(F: np.ndarray, r: np.ndarray) -> float:
    order = np.lexsort((F[:, 1], F[:, 0]))
    best_f2 = r[1]
    total = 0.0
    for f1, f2 in F[order]:
        if f2 < best_f2:
            total += (r[0] - f1) * (best_f2 - f2)
            best_f2 = f2
    return total


def _hv_recursive(F: np.ndarray, r: np.ndarray) -> float:
    """WFG-style slicing: sum of exclusive contributions against limit sets."""
    if F.shape[0] == 0:
        return 0.0
    if F.shape[1] == 2:
        return _hv_2d(F, r)
    if F.shape[0] == 1:
        return float(np.prod(r - F[0]))
    total = 0.0
    for k in range(F.shape[0]):
        p = F[k]
        inclusive = float(np.prod(r - p))
        limit = np.maximum(p, F[k + 1 :])
        if limit.shape[0]:
            limit = limit[nondominated_mask(limit)]
        total += inclusive - _hv_recursive(limit, r)
    return total


def hypervolume(points: np.ndarray, reference_point: np.ndarray) -> float:
    """Lebesgue measure of the boxes [p, r]; points beyond r contribute zero."""
    F = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.asarray(reference_point, dtype=float).reshape(-1)
    if F.shape[1] != r.shape[0]:
        raise ContractError("reference point dimension must match the objectives")
    F = F[np.all(F < r, axis=1)]
    if F.shape[0] == 0:
        return 0.0
    F = F[nondominated_mask(F)]
    if F.shape[1] == 1:
        return float(r[0] - F[:, 0].min())
    F = F[np.argsort(F[:, 0])]
    return float(_hv_recursive(F, r))


def hv_party(pop: SolutionSet, ref: HvReference, party: int) -> float:
    """Hypervolume of the population in one party's objective space."""
    pop.require_nonempty()
    return hypervolume(pop.party_matrix(party), ref.point(party))


def mean_hv(pop: SolutionSet, refs: HvReference) -> float:
    """Arithmetic mean of per-party hypervolumes."""
    pop.require_nonempty()
    vals = [hv_party(pop, refs, m) for m in range(1, len(refs.points) + 1)]
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

_CSV_FIELDS = ("problem", "algorithm", "run", "metric", "scope", "value")


def append_metrics_csv(path: str | Path, rows: Sequence[dict]) -> None:
    """Append metric rows (problem, algorithm, run, metric, scope, value)."""
    path = Path(path)
    new_file = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS, lineterminator="\n")
        if new_file:
            writer.writeheader()
        for row in rows:
            out = dict(row)
            out["value"] = format(float(row["value"]), ".17g")
            writer.writerow(out)
