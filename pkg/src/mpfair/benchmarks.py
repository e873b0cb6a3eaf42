"""Built-in multi-party distance-minimization problems and reference sets.

The MPDMP family shares one 2-D decision space; each party minimizes the
Euclidean distances from the decision point to its own target points. For
two targets the party's Pareto set is exactly the closed segment between
them, so reference sets are sampled analytically instead of approximated
numerically. Externally defined problems plug in through the same
ProblemInstance / ReferenceSet contracts and the name registry.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError
from scipy.stats import qmc

from .core import (
    ConfigError,
    ContractError,
    DomainError,
    PartySpec,
    SolutionSet,
    nondominated_mask,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "MpdmpSpec",
    "ProblemInstance",
    "PartyReference",
    "ReferenceSet",
    "evaluate",
    "sample_reference",
    "mpdmp_case1",
    "mpdmp_case2",
    "make_mpdmp",
    "register_problem",
    "register_external_problem",
    "get_problem",
    "available_problems",
    "load_problem_file",
    "reference_to_csv",
    "estimate_objective_bounds",
]

DEFAULT_BOUNDS = ((0.0, 10.0), (0.0, 10.0))
DEFAULT_DENSITY = 500.0
_MAX_REFERENCE_SAMPLES = 30_000


@dataclass(frozen=True)
class MpdmpSpec:
    """Target geometry of one distance-minimization problem.

    parties maps 1-based party ids to (K_m, 2) target arrays; every party
    needs at least two targets and all targets must lie inside the bounds.
    """

    parties: tuple[tuple[int, np.ndarray], ...]
    bounds: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_BOUNDS))
    name: str = "mpdmp"

    def __post_init__(self):
        bounds = np.asarray(self.bounds, dtype=float)
        if bounds.shape != (2, 2):
            raise ConfigError("MPDMP bounds must be a (2, 2) [lo, hi] box")
        if np.any(bounds[:, 0] >= bounds[:, 1]):
            raise ConfigError("each bound must satisfy lo < hi")
        object.__setattr__(self, "bounds", bounds)
        parties = []
        for party_id, targets in self.parties:
            targets = np.asarray(targets, dtype=float)
            if targets.ndim != 2 or targets.shape[1] != 2:
                raise ConfigError(f"party {party_id} targets must be points in the plane")
            if targets.shape[0] < 2:
                raise ConfigError(f"party {party_id} needs at least two targets")
            inside = (targets >= bounds[:, 0]) & (targets <= bounds[:, 1])
            if not inside.all():
                raise ConfigError(f"party {party_id} has targets outside the bounds")
            parties.append((int(party_id), targets))
        ids = [p for p, _ in parties]
        if ids != list(range(1, len(ids) + 1)):
            raise ConfigError(f"party ids must be contiguous from 1, got {ids}")
        object.__setattr__(self, "parties", tuple(parties))

    @property
    def num_parties(self) -> int:
        return len(self.parties)

    def targets(self, party_id: int) -> np.ndarray:
        return self.parties[party_id - 1][1]

    def party_specs(self) -> tuple[PartySpec, ...]:
        return tuple(
            PartySpec(party_id=p, num_objectives=t.shape[0]) for p, t in self.parties
        )

    def to_problem(self) -> "ProblemInstance":
        return ProblemInstance(
            name=self.name,
            dimension=2,
            bounds=self.bounds,
            parties=self.party_specs(),
            batch_evaluator=_MpdmpEvaluator(self),
        )


@dataclass(frozen=True)
class _MpdmpEvaluator:
    """Picklable batch evaluator: per-party distances to each target."""

    spec: MpdmpSpec

    def __call__(self, X: np.ndarray) -> list[np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = []
        for _, targets in self.spec.parties:
            diff = X[:, None, :] - targets[None, :, :]
            out.append(np.sqrt(np.sum(diff * diff, axis=2)))
        return out


@dataclass(frozen=True)
class ProblemInstance:
    """A named multi-party problem: box bounds plus a batch objective evaluator.

    batch_evaluator maps an (N, n) decision matrix to a list of M arrays of
    shape (N, K_m), one per party in id order.
    """

    name: str
    dimension: int
    bounds: np.ndarray
    parties: tuple[PartySpec, ...]
    batch_evaluator: Callable[[np.ndarray], Sequence[np.ndarray]]

    def __post_init__(self):
        bounds = np.asarray(self.bounds, dtype=float)
        if bounds.shape != (self.dimension, 2):
            raise ConfigError("bounds must have shape (dimension, 2)")
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_parties(self) -> int:
        return len(self.parties)

    def contains(self, X: np.ndarray, atol: float = 1e-9) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return np.all((X >= lo - atol) & (X <= hi + atol), axis=1)

    def evaluate_batch(self, X: np.ndarray, check_bounds: bool = True) -> list[np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dimension:
            raise ContractError(
                f"decision vectors must have dimension {self.dimension}, got {X.shape[1]}"
            )
        if check_bounds and not self.contains(X).all():
            raise DomainError(f"decision vector outside the bounds of {self.name}")
        blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in self.batch_evaluator(X)]
        if len(blocks) != self.num_parties:
            raise ContractError("evaluator returned the wrong number of party blocks")
        for spec, block in zip(self.parties, blocks):
            if block.shape != (X.shape[0], spec.num_objectives):
                raise ContractError(
                    f"party {spec.party_id} block has shape {block.shape}, "
                    f"expected {(X.shape[0], spec.num_objectives)}"
                )
        return blocks

    def solution_set(self, X: np.ndarray) -> SolutionSet:
        return SolutionSet.from_arrays(np.atleast_2d(X), self.evaluate_batch(X))


def evaluate(spec: MpdmpSpec, x: np.ndarray) -> list[np.ndarray]:
    """Objective blocks of a single point: distance to each party target."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (2,):
        raise ContractError("MPDMP decision vectors live in the plane")
    lo, hi = spec.bounds[:, 0], spec.bounds[:, 1]
    if np.any(x < lo) or np.any(x > hi):
        raise DomainError(f"point {x} outside bounds {spec.bounds.tolist()}")
    return [b[0] for b in _MpdmpEvaluator(spec)(x[None, :])]


# ---------------------------------------------------------------------------
# Reference sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartyReference:
    """Discretized Pareto set/front of one party plus its objective bounds."""

    party_id: int
    ps_samples: np.ndarray  # (S, n) decision-space points on the party's PS
    pf_samples: np.ndarray  # (S, K_m) their own-objective images
    f_min: np.ndarray  # (K_m,) objective lower bounds over the feasible box
    f_max: np.ndarray  # (K_m,)

    def __post_init__(self):
        for name in ("ps_samples", "pf_samples", "f_min", "f_max"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.ps_samples.shape[0] != self.pf_samples.shape[0]:
            raise ConfigError("ps_samples and pf_samples must align row-wise")
        if np.any(self.f_min >= self.f_max):
            raise ConfigError(
                f"party {self.party_id} objective bounds are degenerate: "
                f"f_min={self.f_min}, f_max={self.f_max}"
            )


@dataclass(frozen=True)
class ReferenceSet:
    """Per-party Pareto samples plus cross-party objective images.

    cross_pf[j][m] holds F_{m+1} evaluated on party j+1's ps_samples; entry
    cross_pf[j][j] equals parties[j].pf_samples. The cross images feed the
    concession-rate normalizers without re-running evaluators.
    """

    parties: tuple[PartyReference, ...]
    cross_pf: tuple[tuple[np.ndarray, ...], ...]
    density: float | None = None
    provenance: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        frozen = tuple(
            tuple(np.ascontiguousarray(a, dtype=float) for a in row) for row in self.cross_pf
        )
        for row in frozen:
            for a in row:
                a.setflags(write=False)
        object.__setattr__(self, "cross_pf", frozen)
        object.__setattr__(self, "provenance", dict(self.provenance))
        M = len(self.parties)
        if len(self.cross_pf) != M or any(len(row) != M for row in self.cross_pf):
            raise ConfigError("cross_pf must be an M x M table of objective images")

    @property
    def num_parties(self) -> int:
        return len(self.parties)

    def party(self, party_id: int) -> PartyReference:
        return self.parties[party_id - 1]

    def objective_ranges(self, party_id: int) -> np.ndarray:
        p = self.party(party_id)
        return p.f_max - p.f_min

    def joint_reference(self) -> list[np.ndarray]:
        """Pooled PS samples of all parties as aligned per-party image blocks."""
        return [
            np.vstack([self.cross_pf[j][m] for j in range(self.num_parties)])
            for m in range(self.num_parties)
        ]

    def pooled_ps(self) -> np.ndarray:
        return np.vstack([p.ps_samples for p in self.parties])

    def validate_nondominated(self) -> bool:
        """Check each party's pf_samples are mutually non-dominated."""
        return all(bool(nondominated_mask(p.pf_samples).all()) for p in self.parties)

    @classmethod
    def from_problem(
        cls,
        problem: ProblemInstance,
        ps_samples: Sequence[np.ndarray],
        f_min: Sequence[np.ndarray] | None = None,
        f_max: Sequence[np.ndarray] | None = None,
        density: float | None = None,
        provenance: Mapping[str, object] | None = None,
        bounds_seed: int = 0,
    ) -> "ReferenceSet":
        """Evaluate cross-party images; estimate missing bounds by LHS."""
        M = problem.num_parties
        if len(ps_samples) != M:
            raise ConfigError("need one PS sample array per party")
        prov = dict(provenance or {})
        if f_min is None or f_max is None:
            f_min, f_max = estimate_objective_bounds(problem, seed=bounds_seed)
            prov.setdefault("bounds_method", "latin-hypercube")
            prov.setdefault("bounds_samples", _LHS_SAMPLES)
        cross = []
        for ps in ps_samples:
            ps = np.atleast_2d(np.asarray(ps, dtype=float))
            cross.append(tuple(problem.evaluate_batch(ps)))
        parties = tuple(
            PartyReference(
                party_id=spec.party_id,
                ps_samples=np.atleast_2d(np.asarray(ps_samples[j], dtype=float)),
                pf_samples=cross[j][j],
                f_min=np.asarray(f_min[j], dtype=float),
                f_max=np.asarray(f_max[j], dtype=float),
            )
            for j, spec in enumerate(problem.parties)
        )
        return cls(parties=parties, cross_pf=tuple(cross), density=density, provenance=prov)


_LHS_SAMPLES = 100_000


def estimate_objective_bounds(
    problem: ProblemInstance, samples: int = _LHS_SAMPLES, seed: int = 0
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Latin-hypercube estimate of per-objective min/max over the box."""
    sampler = qmc.LatinHypercube(d=problem.dimension, seed=seed)
    unit = sampler.random(samples)
    X = qmc.scale(unit, problem.bounds[:, 0], problem.bounds[:, 1])
    blocks = problem.evaluate_batch(X, check_bounds=False)
    return [b.min(axis=0) for b in blocks], [b.max(axis=0) for b in blocks]


def _corner_f_max(targets: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    corners = np.array(
        [[lo_hi[i] for lo_hi, i in zip(bounds, bits)] for bits in ((0, 0), (0, 1), (1, 0), (1, 1))]
    )
    diff = corners[:, None, :] - targets[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2)).max(axis=0)


def _segment_samples(a: np.ndarray, b: np.ndarray, density: float) -> np.ndarray:
    length = float(np.linalg.norm(b - a))
    if length == 0.0:
        raise ConfigError(f"coincident targets {a} produce a degenerate Pareto segment")
    n = max(2, int(round(length * density)) + 1)
    t = np.linspace(0.0, 1.0, n)
    return a[None, :] + t[:, None] * (b - a)[None, :]


def _hull_samples(targets: np.ndarray, density: float) -> np.ndarray:
    """Uniform samples of the targets' convex hull (vertices, edges, grid)."""
    try:
        hull = ConvexHull(targets)
    except QhullError:
        # collinear targets: the Pareto set degenerates to the spanning segment
        d = np.linalg.norm(targets[:, None, :] - targets[None, :, :], axis=2)
        i, j = np.unravel_index(np.argmax(d), d.shape)
        return _segment_samples(targets[i], targets[j], density)
    verts = targets[hull.vertices]
    pieces = [verts]
    for k in range(len(verts)):
        seg = _segment_samples(verts[k], verts[(k + 1) % len(verts)], density)
        pieces.append(seg[1:-1])
    lo = targets.min(axis=0)
    hi = targets.max(axis=0)
    nx = int(round((hi[0] - lo[0]) * density)) + 1
    ny = int(round((hi[1] - lo[1]) * density)) + 1
    if nx * ny > _MAX_REFERENCE_SAMPLES:
        raise ConfigError(
            f"hull sampling at density {density} would need {nx * ny} grid points; "
            "reduce the density for parties with more than two targets"
        )
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], nx), np.linspace(lo[1], hi[1], ny))
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    tri = Delaunay(verts)
    pieces.append(grid[tri.find_simplex(grid) >= 0])
    return np.vstack(pieces)


def _segment_intersection(a0, a1, b0, b1) -> np.ndarray | None:
    """Proper intersection point of two closed segments, None if parallel."""
    d1 = a1 - a0
    d2 = b1 - b0
    det = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(det) < 1e-12:
        return None
    rhs = b0 - a0
    t = (rhs[0] * d2[1] - rhs[1] * d2[0]) / det
    u = (rhs[0] * d1[1] - rhs[1] * d1[0]) / det
    if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
        return a0 + t * d1
    return None


def _insert_on_segment(ps: np.ndarray, a0: np.ndarray, a1: np.ndarray, point: np.ndarray) -> np.ndarray:
    length2 = float(np.dot(a1 - a0, a1 - a0))
    t = float(np.dot(point - a0, a1 - a0)) / length2
    ts = np.dot(ps - a0, a1 - a0) / length2
    if np.min(np.abs(ts - t)) < 1e-12:
        return ps
    idx = int(np.searchsorted(ts, t))
    return np.insert(ps, idx, point, axis=0)


def sample_reference(spec: MpdmpSpec, density: float = DEFAULT_DENSITY) -> ReferenceSet:
    """Analytic Pareto-set sampling for an MPDMP at `density` samples per unit length.

    Two-target parties sample the closed segment between the targets and
    additionally carry the exact point of any pairwise segment intersection,
    so strictly common optima survive discretization. Parties with more
    targets sample the targets' convex hull and keep the party-wise
    non-dominated images. Objective bounds are exact: f_min = 0 (targets are
    feasible) and f_max is the largest distance from the target to a corner
    of the box.
    """
    if density <= 0:
        raise ConfigError("density must be positive")
    problem = spec.to_problem()
    ps_per_party = []
    for party_id, targets in spec.parties:
        if targets.shape[0] == 2:
            ps = _segment_samples(targets[0], targets[1], density)
        else:
            ps = _hull_samples(targets, density)
            images = problem.evaluate_batch(ps)[party_id - 1]
            ps = ps[nondominated_mask(images)]
        ps_per_party.append(ps)
    segment_parties = [i for i, (_, t) in enumerate(spec.parties) if t.shape[0] == 2]
    for ii, i in enumerate(segment_parties):
        for j in segment_parties[ii + 1 :]:
            ti, tj = spec.parties[i][1], spec.parties[j][1]
            cross = _segment_intersection(ti[0], ti[1], tj[0], tj[1])
            if cross is not None:
                ps_per_party[i] = _insert_on_segment(ps_per_party[i], ti[0], ti[1], cross)
                ps_per_party[j] = _insert_on_segment(ps_per_party[j], tj[0], tj[1], cross)
    f_min = [np.zeros(t.shape[0]) for _, t in spec.parties]
    f_max = [_corner_f_max(t, spec.bounds) for _, t in spec.parties]
    return ReferenceSet.from_problem(
        problem,
        ps_per_party,
        f_min=f_min,
        f_max=f_max,
        density=density,
        provenance={"bounds_method": "corner-exact", "problem": spec.name},
    )


def reference_to_csv(ref: ReferenceSet) -> str:
    """Export PS samples and own-objective images: party, px, py, f1, f2, ..."""
    n = ref.parties[0].ps_samples.shape[1]
    kmax = max(p.pf_samples.shape[1] for p in ref.parties)
    dec_cols = ["px", "py"][:n] if n <= 2 else [f"px{i + 1}" for i in range(n)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["party", *dec_cols, *[f"f{k + 1}" for k in range(kmax)]])
    for p in ref.parties:
        for x, f in zip(p.ps_samples, p.pf_samples):
            row = [p.party_id, *[format(v, ".17g") for v in x], *[format(v, ".17g") for v in f]]
            row += [""] * (kmax - len(f))
            writer.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Built-in cases and the problem registry
# ---------------------------------------------------------------------------


def mpdmp_case1() -> MpdmpSpec:
    """Disjoint Pareto sets: two parallel target segments, no common optimum."""
    return MpdmpSpec(
        name="case1",
        parties=(
            (1, np.array([[1.0, 1.0], [3.0, 3.0]])),
            (2, np.array([[3.0, 1.0], [5.0, 3.0]])),
        ),
    )


def mpdmp_case2() -> MpdmpSpec:
    """Intersecting Pareto sets: the two segments cross at (3, 2)."""
    return MpdmpSpec(
        name="case2",
        parties=(
            (1, np.array([[1.0, 1.0], [5.0, 3.0]])),
            (2, np.array([[2.0, 3.0], [4.0, 1.0]])),
        ),
    )


def make_mpdmp(
    targets_by_party: Sequence[np.ndarray],
    bounds: Sequence[Sequence[float]] = DEFAULT_BOUNDS,
    name: str = "mpdmp",
) -> MpdmpSpec:
    """Convenience constructor: party ids assigned in the given order."""
    return MpdmpSpec(
        name=name,
        bounds=np.asarray(bounds, dtype=float),
        parties=tuple((m + 1, np.asarray(t, dtype=float)) for m, t in enumerate(targets_by_party)),
    )


@dataclass
class _RegistryEntry:
    problem: ProblemInstance | None
    reference: ReferenceSet | None
    spec: MpdmpSpec | None
    default_density: float


_REGISTRY: dict[str, _RegistryEntry] = {}
_REFERENCE_CACHE: dict[tuple[str, float], ReferenceSet] = {}


def _ensure_builtins():
    for factory in (mpdmp_case1, mpdmp_case2):
        spec = factory()
        if spec.name not in _REGISTRY:
            _REGISTRY[spec.name] = _RegistryEntry(
                problem=None, reference=None, spec=spec, default_density=DEFAULT_DENSITY
            )


def register_problem(
    spec: MpdmpSpec, name: str | None = None, default_density: float = DEFAULT_DENSITY
) -> str:
    """Register an MPDMP spec; its reference set is sampled on first use."""
    _ensure_builtins()
    name = name or spec.name
    if name in _REGISTRY:
        raise ConfigError(f"problem name {name!r} is already registered")
    _REGISTRY[name] = _RegistryEntry(
        problem=None, reference=None, spec=spec, default_density=default_density
    )
    return name


def register_external_problem(
    problem: ProblemInstance, reference: ReferenceSet, name: str | None = None
) -> str:
    """Register an externally defined problem with its reference set.

    The reference must structurally match the problem (party count, objective
    counts, decision dimension) and its pf_samples must reproduce the
    evaluator's output on the stored PS samples.
    """
    _ensure_builtins()
    name = name or problem.name
    if name in _REGISTRY:
        raise ConfigError(f"problem name {name!r} is already registered")
    if reference.num_parties != problem.num_parties:
        raise ConfigError("reference party count does not match the problem")
    for spec, party in zip(problem.parties, reference.parties):
        if party.ps_samples.shape[1] != problem.dimension:
            raise ConfigError("reference PS samples have the wrong decision dimension")
        if party.pf_samples.shape[1] != spec.num_objectives:
            raise ConfigError(
                f"party {spec.party_id} reference has {party.pf_samples.shape[1]} objectives, "
                f"expected {spec.num_objectives}"
            )
    for spec, party in zip(problem.parties, reference.parties):
        probe = party.ps_samples[: min(50, party.ps_samples.shape[0])]
        images = problem.evaluate_batch(probe, check_bounds=False)[spec.party_id - 1]
        if not np.allclose(images, party.pf_samples[: probe.shape[0]], atol=1e-9, rtol=1e-9):
            raise ConfigError(
                f"party {spec.party_id} pf_samples disagree with the evaluator on its PS samples"
            )
    _REGISTRY[name] = _RegistryEntry(
        problem=problem, reference=reference, spec=None, default_density=DEFAULT_DENSITY
    )
    return name


def get_problem(name: str, density: float | None = None) -> tuple[ProblemInstance, ReferenceSet]:
    """Resolve a registered problem and its reference set by name."""
    _ensure_builtins()
    if name not in _REGISTRY:
        raise ConfigError(f"unknown problem {name!r}; registered: {sorted(_REGISTRY)}")
    entry = _REGISTRY[name]
    if entry.spec is not None:
        d = float(density if density is not None else entry.default_density)
        key = (name, d)
        if key not in _REFERENCE_CACHE:
            _REFERENCE_CACHE[key] = sample_reference(entry.spec, d)
        return entry.spec.to_problem(), _REFERENCE_CACHE[key]
    return entry.problem, entry.reference


def available_problems() -> list[str]:
    _ensure_builtins()
    return sorted(_REGISTRY)


def _reset_registry():
    """Test hook: drop everything except the built-ins."""
    _REGISTRY.clear()
    _REFERENCE_CACHE.clear()
    _ensure_builtins()


def load_problem_file(path: str | Path) -> str:
    """Register an MPDMP described in a TOML or JSON file; returns its name.

    Expected keys: name, optional bounds (2x2), optional density, and a list
    of parties each carrying a `targets` list of [x, y] points.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
    else:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    try:
        parties = data["party"] if "party" in data else data["parties"]
        spec = make_mpdmp(
            [np.asarray(p["targets"], dtype=float) for p in parties],
            bounds=data.get("bounds", DEFAULT_BOUNDS),
            name=data.get("name", path.stem),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed problem file {path}: {exc}") from exc
    return register_problem(spec, default_density=float(data.get("density", DEFAULT_DENSITY)))
