"""Fairness-aware evaluation of multi-party multi-objective optimization.

Candidate solution sets are scored per decision maker (IGD, hypervolume),
turned into utilities with concession-based penalties, and aggregated with a
Nash product that rewards balanced, mutually acceptable outcomes. Includes
the distance-minimization benchmark family, reference-set sampling, and two
baseline evolutionary optimizers (OptAll, OptMPNDS).
"""

from .core import (
    ConfigError,
    ContractError,
    DomainError,
    DominanceRelation,
    ObjectiveBlock,
    PartySpec,
    Solution,
    SolutionSet,
    dominates_multiparty,
    dominates_party,
    nondominated_filter,
    solution_set_from_csv,
    solution_set_from_json,
    solution_set_to_csv,
    solution_set_to_json,
    weakly_dominates,
    weakly_dominates_multiparty,
)
from .benchmarks import (
    MpdmpSpec,
    PartyReference,
    ProblemInstance,
    ReferenceSet,
    available_problems,
    evaluate,
    get_problem,
    load_problem_file,
    make_mpdmp,
    mpdmp_case1,
    mpdmp_case2,
    reference_to_csv,
    register_external_problem,
    register_problem,
    sample_reference,
)
from .metrics import (
    HvReference,
    MetricValue,
    append_metrics_csv,
    default_hv_reference,
    hv_party,
    hypervolume,
    igd,
    igd_multiparty,
    igd_party,
    mean_hv,
    mean_igd,
)
from .fairness import (
    ConcessionConfig,
    ConcessionContext,
    ConcessionProfile,
    EvaluationReport,
    acceptable_region_membership,
    comparative_nash,
    concession_rate,
    deviation,
    lambda_sufficiency_bound,
    nash_score,
    nash_scores,
    normalizer,
    penalty,
)
from .algorithms import (
    EaConfig,
    OptimizerResult,
    RankedPopulation,
    opt_all,
    opt_mpnds,
    run_optimizer,
    save_run,
)
from .harness import (
    AxiomSuiteReport,
    BandPopulationGenerator,
    ExperimentPlan,
    ExperimentResult,
    InvariantViolation,
    SweepGrid,
    check_sweep_invariants,
    emit_plot_data,
    run_asymmetric_sweep,
    run_axiom_suite,
    run_experiment,
    run_sweep,
)

__version__ = "0.1.0"
