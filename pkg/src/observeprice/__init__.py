"""Online three-sided market with an observe-then-price mechanism.

Mediators hold ordered lists of users with service costs, advertisers bring
identical slots at a per-slot value, and entities arrive in uniform random
order. The mechanism observes a prefix of arrivals, freezes one price per
side from the observed sub-market, and then greedily assigns whenever both
sides clear their price. The package bundles the exact offline optimum, the
mechanism engine, economic property checks (budget balance, individual
rationality, truthfulness sweeps), and the measurement experiments behind
the competitive-ratio and event-frequency guarantees.
"""

from .market import (
    MICRO,
    AdvertiserSpec,
    Assignment,
    EntityId,
    Instance,
    MarketError,
    MarketView,
    MediatorSpec,
    Money,
    ReportProfile,
    SlotRef,
    TieKey,
    UserRef,
    ValidationReport,
    advertiser_id,
    compare_keys,
    from_units,
    gain_from_trade,
    mediator_id,
    random_tie_order,
    report_view,
    true_view,
    validate_instance,
)
from .canonical import (
    CanonicalAssignment,
    brute_force_optimal_gft,
    canonical_assignment,
    optimal_gain,
    tau,
)
from .mechanism import (
    VARIANTS,
    ArrivalEvent,
    MechanismConfig,
    MechanismOutcome,
    Thresholds,
    Trade,
    ceil_minus_cbrt,
    compute_thresholds,
    derive_r,
    dummy_thresholds,
    injected_thresholds,
    run_mechanism,
    sample_observation_count,
    threshold_keys_from_amounts,
    truthful_run,
)
from .verify import (
    CheckResult,
    DeviationCase,
    DeviationVerdict,
    SweepResult,
    UtilityTrajectory,
    all_players,
    check_budget_balance,
    check_continuous_ir,
    check_observed_never_trade,
    check_online_legality,
    check_pay_targets_monotone,
    check_surplus_invariant,
    deviation_test,
    final_utility,
    generate_misreports,
    incentive_sweep,
    truthful_sweep,
    utility_trajectory,
)
from .analysis import (
    DiagnosticSets,
    EventFlags,
    EventFrequencyResult,
    RatioPoint,
    analytic_bound,
    competitive_ratio_bound,
    competitive_ratio_experiment,
    compute_diagnostic_sets,
    event_frequency_experiment,
    event_probability_bound,
    wilson_interval,
)
from .generate import (
    DistSpec,
    GenerationError,
    GeneratorConfig,
    constant,
    generate_instance,
    lognormal,
    matched_family,
    uniform,
)
from .serialize import (
    ParseError,
    fraction_from_text,
    fraction_to_text,
    instance_from_text,
    instance_to_text,
    money_from_text,
    money_to_text,
    replay_run_report,
    reports_from_text,
    reports_to_text,
    run_report_from_text,
    run_report_to_text,
)

__version__ = "0.1.0"

__all__ = [
    "AdvertiserSpec",
    "ArrivalEvent",
    "Assignment",
    "CanonicalAssignment",
    "CheckResult",
    "DeviationCase",
    "DeviationVerdict",
    "DiagnosticSets",
    "DistSpec",
    "EntityId",
    "EventFlags",
    "EventFrequencyResult",
    "GenerationError",
    "GeneratorConfig",
    "Instance",
    "MICRO",
    "MarketError",
    "MarketView",
    "MechanismConfig",
    "MechanismOutcome",
    "MediatorSpec",
    "Money",
    "ParseError",
    "RatioPoint",
    "ReportProfile",
    "SlotRef",
    "SweepResult",
    "Thresholds",
    "TieKey",
    "Trade",
    "UserRef",
    "UtilityTrajectory",
    "VARIANTS",
    "ValidationReport",
    "advertiser_id",
    "all_players",
    "analytic_bound",
    "brute_force_optimal_gft",
    "canonical_assignment",
    "ceil_minus_cbrt",
    "check_budget_balance",
    "check_continuous_ir",
    "check_observed_never_trade",
    "check_online_legality",
    "check_pay_targets_monotone",
    "check_surplus_invariant",
    "compare_keys",
    "competitive_ratio_bound",
    "competitive_ratio_experiment",
    "compute_diagnostic_sets",
    "compute_thresholds",
    "constant",
    "derive_r",
    "deviation_test",
    "dummy_thresholds",
    "event_frequency_experiment",
    "event_probability_bound",
    "final_utility",
    "fraction_from_text",
    "fraction_to_text",
    "from_units",
    "gain_from_trade",
    "generate_instance",
    "generate_misreports",
    "incentive_sweep",
    "injected_thresholds",
    "instance_from_text",
    "instance_to_text",
    "lognormal",
    "matched_family",
    "mediator_id",
    "money_from_text",
    "money_to_text",
    "optimal_gain",
    "random_tie_order",
    "replay_run_report",
    "report_view",
    "reports_from_text",
    "reports_to_text",
    "run_mechanism",
    "run_report_from_text",
    "run_report_to_text",
    "sample_observation_count",
    "tau",
    "threshold_keys_from_amounts",
    "true_view",
    "truthful_run",
    "truthful_sweep",
    "uniform",
    "utility_trajectory",
    "validate_instance",
    "wilson_interval",
]
