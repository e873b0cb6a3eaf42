"""Concession rates, acceptability penalties, and the Nash-product score.

The pipeline: each party's loss (per-party IGD by default) plus a penalty for
population members whose concession rate exceeds that party's threshold is
turned into a utility C - (L + lambda * penalty); the evaluation score is the
product of utilities across parties. Balanced outcomes beat lopsided ones at
equal total utility, and sufficiently large penalty weights make swapping an
acceptable solution for an unacceptable one strictly lower the score.
"""

from __future__ import annotations

import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .benchmarks import ReferenceSet
from .core import ConfigError, ContractError, Solution, SolutionSet
from .metrics import HvReference, default_hv_reference, hv_party, igd_party, mean_hv, mean_igd

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ConcessionConfig",
    "ConcessionContext",
    "ConcessionProfile",
    "EvaluationReport",
    "deviation",
    "normalizer",
    "concession_rate",
    "acceptable_region_membership",
    "penalty",
    "nash_score",
    "nash_scores",
    "lambda_sufficiency_bound",
    "comparative_nash",
]

DEFAULT_LAMBDA = 10.0


@dataclass(frozen=True)
class ConcessionConfig:
    """Per-party concession thresholds, penalty weights, and the constant C.

    gamma_hat entries live in [0, 1]; lambdas must be positive (default 10,
    which exceeds the sufficiency bound on all built-in benchmarks).
    c_constant is a positive number or "auto", which resolves to 1.1x the
    worst penalized loss across the compared candidate sets.
    """

    gamma_hat: tuple[float, ...] | float = 0.0
    lambdas: tuple[float, ...] | float = DEFAULT_LAMBDA
    c_constant: float | str = "auto"

    def __post_init__(self):
        gh = np.atleast_1d(np.asarray(self.gamma_hat, dtype=float))
        if np.any(gh < 0.0) or np.any(gh > 1.0):
            raise ConfigError(f"gamma_hat must lie in [0, 1], got {gh}")
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        if np.any(lam <= 0.0):
            raise ConfigError(f"penalty weights must be positive, got {lam}")
        if isinstance(self.c_constant, str):
            if self.c_constant != "auto":
                raise ConfigError("c_constant must be a positive number or 'auto'")
        elif float(self.c_constant) <= 0.0:
            raise ConfigError("c_constant must be positive")
        object.__setattr__(self, "gamma_hat", tuple(float(g) for g in gh))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in lam))

    def resolve(self, num_parties: int) -> tuple[np.ndarray, np.ndarray]:
        """Broadcast thresholds and weights to one entry per party."""

        def expand(values, label):
            arr = np.asarray(values, dtype=float)
            if arr.size == 1:
                return np.full(num_parties, float(arr.reshape(-1)[0]))
            if arr.size != num_parties:
                raise ConfigError(f"{label} needs 1 or {num_parties} entries, got {arr.size}")
            return arr.astype(float)

        return expand(self.gamma_hat, "gamma_hat"), expand(self.lambdas, "lambda")

    def permuted(self, perm: Sequence[int]) -> "ConcessionConfig":
        """Reorder per-party entries by `perm` (0-based new order)."""
        gh = np.atleast_1d(np.asarray(self.gamma_hat, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        gh = gh if gh.size == 1 else gh[list(perm)]
        lam = lam if lam.size == 1 else lam[list(perm)]
        return ConcessionConfig(
            gamma_hat=tuple(gh), lambdas=tuple(lam), c_constant=self.c_constant
        )

    @classmethod
    def from_dict(cls, data: Mapping) -> "ConcessionConfig":
        kwargs = {}
        if "gamma_hat" in data:
            kwargs["gamma_hat"] = tuple(np.atleast_1d(data["gamma_hat"]).astype(float))
        if "lambda" in data:
            kwargs["lambdas"] = tuple(np.atleast_1d(data["lambda"]).astype(float))
        elif "lambdas" in data:
            kwargs["lambdas"] = tuple(np.atleast_1d(data["lambdas"]).astype(float))
        if "C" in data:
            kwargs["c_constant"] = data["C"]
        elif "c_constant" in data:
            kwargs["c_constant"] = data["c_constant"]
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ConcessionConfig":
        path = Path(path)
        if path.suffix.lower() == ".json":
            return cls.from_dict(json.loads(path.read_text()))
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def as_dict(self) -> dict:
        return {
            "gamma_hat": list(np.atleast_1d(self.gamma_hat)),
            "lambda": list(np.atleast_1d(self.lambdas)),
            "C": self.c_constant,
        }


@dataclass(frozen=True)
class ConcessionProfile:
    """Raw deviations D, normalizers Delta, rates gamma, violations phi."""

    deviations: np.ndarray  # (N, M)
    normalizers: np.ndarray  # (M,)
    rates: np.ndarray  # (N, M)
    violations: np.ndarray  # (N, M)


class ConcessionContext:
    """Precomputed per-party normalizers and vectorized rate evaluation.

    Build one per reference set and reuse it: the normalizer Delta_m scans
    every other party's PS samples, which is the expensive part.
    """

    _CHUNK = 512

    def __init__(self, ref: ReferenceSet):
        self.ref = ref
        M = ref.num_parties
        self.ranges = [ref.party(m).f_max - ref.party(m).f_min for m in range(1, M + 1)]
        for m, rng in enumerate(self.ranges, start=1):
            if np.any(rng <= 0.0):
                raise ConfigError(f"party {m} has degenerate objective bounds")
        deltas = np.zeros(M)
        for m in range(M):
            worst = 0.0
            for j in range(M):
                if j == m:
                    continue
                dev = self._deviation_batch(ref.cross_pf[j][m], m)
                worst = max(worst, float(dev.max()))
            deltas[m] = worst
        self.deltas = deltas
        self.degenerate = deltas == 0.0
        if self.degenerate.any():
            flagged = [m + 1 for m in np.flatnonzero(self.degenerate)]
            warnings.warn(
                f"normalizer Delta is zero for parties {flagged}: every other party's "
                "Pareto set lies inside theirs; rates there are 0 on those sets",
                stacklevel=2,
            )

    def _deviation_batch(self, F: np.ndarray, m: int) -> np.ndarray:
        """D_m for objective rows F (N, K_m): min over PS samples of the
        normalized worst-component excess, clamped at zero."""
        pf = self.ref.party(m + 1).pf_samples
        rng = self.ranges[m]
        F = np.atleast_2d(np.asarray(F, dtype=float))
        out = np.empty(F.shape[0])
        for start in range(0, F.shape[0], self._CHUNK):
            block = F[start : start + self._CHUNK]
            delta = ((block[:, None, :] - pf[None, :, :]) / rng).max(axis=2)
            out[start : start + block.shape[0]] = delta.min(axis=1)
        return np.maximum(out, 0.0)

    def deviations(self, pop: SolutionSet) -> np.ndarray:
        pop.require_nonempty()
        M = self.ref.num_parties
        return np.column_stack(
            [self._deviation_batch(pop.party_matrix(m + 1), m) for m in range(M)]
        )

    def rates(self, pop: SolutionSet) -> np.ndarray:
        """Concession rates gamma (N, M); unclamped above 1 for points off
        the joint non-dominated set, 0/0 resolves to 0 for degenerate
        normalizers."""
        return self.rates_from_deviations(self.deviations(pop))

    def rates_from_deviations(self, D: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            g = D / self.deltas
        g = np.where(D == 0.0, 0.0, g)
        return g

    def profile(self, pop: SolutionSet, config: ConcessionConfig) -> ConcessionProfile:
        D = self.deviations(pop)
        g = self.rates_from_deviations(D)
        gamma_hat, _ = config.resolve(self.ref.num_parties)
        phi = np.maximum(0.0, g - gamma_hat)
        return ConcessionProfile(
            deviations=D, normalizers=self.deltas.copy(), rates=g, violations=phi
        )


def _singleton(x: Solution) -> SolutionSet:
    return SolutionSet([x])


def deviation(x: Solution, ref: ReferenceSet, m: int) -> float:
    """Normalized worst-component deviation of x from party m's Pareto set."""
    return float(ConcessionContext(ref).deviations(_singleton(x))[0, m - 1])


def normalizer(ref: ReferenceSet, m: int) -> float:
    """Delta_m: the worst deviation any other party's PS point incurs vs m."""
    return float(ConcessionContext(ref).deltas[m - 1])


def concession_rate(x: Solution, ref: ReferenceSet, m: int) -> float:
    """gamma_m(x) = D_m(x) / Delta_m."""
    return float(ConcessionContext(ref).rates(_singleton(x))[0, m - 1])


def acceptable_region_membership(
    x: Solution,
    ref: ReferenceSet,
    config: ConcessionConfig,
    mode: str = "strict",
    context: ConcessionContext | None = None,
) -> tuple[np.ndarray, bool]:
    """Per-party acceptability flags gamma_m(x) <= gamma_hat_m plus the joint flag.

    mode="strict" additionally requires x not to be dominated, in the joint
    concatenated-objective sense, by any sampled reference point (the sampled
    stand-in for membership of the joint non-dominated set). mode="relaxed"
    judges arbitrary points by their rates alone.
    """
    if mode not in ("strict", "relaxed"):
        raise ContractError(f"unknown membership mode {mode!r}")
    ctx = context or ConcessionContext(ref)
    gamma_hat, _ = config.resolve(ref.num_parties)
    rates = ctx.rates(_singleton(x))[0]
    per_dm = rates <= gamma_hat
    joint = bool(per_dm.all())
    if joint and mode == "strict":
        pool = np.hstack(ref.joint_reference())
        fx = x.joint_values()
        dominated = np.any(np.all(pool <= fx, axis=1) & np.any(pool < fx, axis=1))
        joint = not bool(dominated)
    return per_dm, joint


def penalty(
    pop: SolutionSet,
    ref: ReferenceSet,
    config: ConcessionConfig,
    context: ConcessionContext | None = None,
) -> np.ndarray:
    """Total non-consensus penalty per party: sum over the population of
    max(0, gamma_m(x) - gamma_hat_m)."""
    ctx = context or ConcessionContext(ref)
    return ctx.profile(pop, config).violations.sum(axis=0)


# ---------------------------------------------------------------------------
# Nash-product scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationReport:
    """Per-party losses/penalties/utilities and the aggregate scores."""

    losses: tuple[float, ...]
    penalties: tuple[float, ...]
    utilities: tuple[float, ...]
    psi_np: float
    log_psi_np: float
    mean_igd: float
    mean_hv: float
    resolved_c: float
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        data = {
            "losses": list(self.losses),
            "penalties": list(self.penalties),
            "utilities": list(self.utilities),
            "psi_np": self.psi_np,
            "log_psi_np": self.log_psi_np,
            "mean_igd": self.mean_igd,
            "mean_hv": self.mean_hv,
            "resolved_c": self.resolved_c,
            "provenance": self.provenance,
        }
        return json.dumps(data, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        data = json.loads(text)
        return cls(
            losses=tuple(data["losses"]),
            penalties=tuple(data["penalties"]),
            utilities=tuple(data["utilities"]),
            psi_np=data["psi_np"],
            log_psi_np=data["log_psi_np"],
            mean_igd=data["mean_igd"],
            mean_hv=data["mean_hv"],
            resolved_c=data["resolved_c"],
            provenance=data.get("provenance", {}),
        )


LossMetric = Callable[[ReferenceSet, SolutionSet, int], float]


def _resolve_loss_metric(loss_metric, hv_ref: HvReference) -> tuple[LossMetric, str]:
    if callable(loss_metric):
        return loss_metric, getattr(loss_metric, "__name__", "custom")
    if loss_metric == "igd":
        return (lambda ref, pop, m: igd_party(ref, pop, m)), "igd"
    if loss_metric == "one_minus_hv":

        def loss(ref: ReferenceSet, pop: SolutionSet, m: int) -> float:
            box = float(np.prod(hv_ref.point(m) - ref.party(m).f_min))
            return 1.0 - hv_party(pop, hv_ref, m) / box

        return loss, "one_minus_hv"
    raise ConfigError(f"unknown loss metric {loss_metric!r}")


def nash_scores(
    pops: Sequence[SolutionSet],
    ref: ReferenceSet,
    config: ConcessionConfig,
    loss_metric: LossMetric | str = "igd",
    hv_reference: HvReference | None = None,
    context: ConcessionContext | None = None,
) -> list[EvaluationReport]:
    """Score a comparison group of candidate sets with one shared constant C.

    With c_constant="auto", C resolves to 1.1x the largest penalized loss
    across the whole group, so every utility stays positive and relative
    comparisons are unaffected. With an explicit C, utilities clamp at zero;
    if that zeroes out every set in a multi-set comparison the comparison is
    vacuous and a ConfigError suggests auto-C instead.
    """
    if not pops:
        raise ContractError("need at least one candidate set")
    M = ref.num_parties
    gamma_hat, lambdas = config.resolve(M)
    ctx = context or ConcessionContext(ref)
    hv_ref = hv_reference or default_hv_reference(ref)
    loss_fn, loss_name = _resolve_loss_metric(loss_metric, hv_ref)

    burdens = []
    stats = []
    for pop in pops:
        pop.require_nonempty()
        L = np.array([loss_fn(ref, pop, m) for m in range(1, M + 1)])
        if np.any(L < 0):
            raise ContractError("loss metric values must be nonnegative")
        pen = ctx.profile(pop, config).violations.sum(axis=0)
        burdens.append(L + lambdas * pen)
        stats.append((L, pen, mean_igd(ref, pop), mean_hv(pop, hv_ref)))

    if config.c_constant == "auto":
        worst = max(float(b.max()) for b in burdens)
        C = 1.1 * worst if worst > 0 else 1.0
    else:
        C = float(config.c_constant)

    reports = []
    for burden, (L, pen, migd, mhv) in zip(burdens, stats):
        u = np.maximum(0.0, C - burden)
        psi = float(np.prod(u))
        log_psi = float(np.sum(np.log(u))) if np.all(u > 0) else float("-inf")
        reports.append(
            EvaluationReport(
                losses=tuple(float(v) for v in L),
                penalties=tuple(float(v) for v in pen),
                utilities=tuple(float(v) for v in u),
                psi_np=psi,
                log_psi_np=log_psi,
                mean_igd=float(migd),
                mean_hv=float(mhv),
                resolved_c=float(C),
                provenance={
                    "config": config.as_dict(),
                    "resolved_c": float(C),
                    "loss_metric": loss_name,
                    "reference_density": ref.density,
                    "hv_reference": [p.tolist() for p in hv_ref.points],
                    "reference_provenance": dict(ref.provenance),
                },
            )
        )
    if (
        config.c_constant != "auto"
        and len(reports) > 1
        and all(r.psi_np == 0.0 for r in reports)
    ):
        raise ConfigError(
            f"C={C} drives every compared candidate set to zero utility; "
            "increase C or use c_constant='auto'"
        )
    return reports


def nash_score(
    pop: SolutionSet,
    ref: ReferenceSet,
    config: ConcessionConfig,
    loss_metric: LossMetric | str = "igd",
    hv_reference: HvReference | None = None,
    context: ConcessionContext | None = None,
) -> EvaluationReport:
    """Score one candidate set (a singleton comparison group)."""
    return nash_scores([pop], ref, config, loss_metric, hv_reference, context)[0]


def lambda_sufficiency_bound(
    u_m0: float,
    mu_values: Sequence[float],
    phi_m0: float,
    lower_bounds: Sequence[float],
    m0: int = 0,
) -> float:
    """Penalty-weight bound above which an acceptable-to-unacceptable swap
    strictly lowers the Nash product.

    Args:
        u_m0: utility of the violated party before the swap.
        mu_values: per-party swap effects, length M; entry m0 is the loss
            increase of the violated party, the others are the largest
            possible utility gains of the remaining parties.
        phi_m0: the swapped-in point's acceptability violation (> 0).
        lower_bounds: positive utility lower bounds for the other parties
            (entry m0 is ignored).
        m0: index of the violated party.
    """
    mu = np.asarray(mu_values, dtype=float)
    lb = np.asarray(lower_bounds, dtype=float)
    if mu.shape != lb.shape:
        raise ContractError("mu_values and lower_bounds must have equal length")
    if phi_m0 <= 0.0:
        raise ContractError("the bound is undefined without a positive violation")
    others = np.arange(mu.size) != m0
    if np.any(lb[others] <= 0.0):
        raise ContractError("utility lower bounds must be positive")
    if np.any(mu[others] < 0.0):
        raise ContractError("utility gains of unaffected parties must be nonnegative")
    growth = float(np.prod(1.0 + mu[others] / lb[others]))
    return (u_m0 * (1.0 - 1.0 / growth) - mu[m0]) / phi_m0


def comparative_nash(gain_values: np.ndarray) -> np.ndarray:
    """Reference-free comparative score for a group of candidate sets.

    gain_values has one row per candidate set and one column per party,
    holding a strictly positive gain-type metric (e.g. hypervolume). Each
    column is normalized by its best value, so utilities land in (0, 1] and
    the returned score is their product per row. Scaling any party's column
    leaves the scores unchanged; a singleton group scores exactly 1.
    """
    G = np.atleast_2d(np.asarray(gain_values, dtype=float))
    if G.size == 0:
        raise ContractError("need at least one candidate set and one party")
    if np.any(G <= 0.0) or not np.all(np.isfinite(G)):
        raise ContractError("comparative gains must be finite and strictly positive")
    return np.prod(G / G.max(axis=0, keepdims=True), axis=1)
