"""Evolutionary search for proof-assistant tactic scripts."""

from .archive import (
    DiversitySummary,
    GenerationStats,
    ProofArchive,
    ProofRecord,
    ReportSink,
    RunReport,
    diversity_summary,
    random_search_probability,
)
from .evaluation import (
    Backend,
    BackendUnavailable,
    EvalCache,
    EvalOutcome,
    FailureKind,
    Individual,
    Population,
    ScriptResult,
    StepResult,
    StepStatus,
    assign_fitness,
    check_repeat_rules,
    evaluate,
    evaluate_population,
)
from .genome import (
    Chromosome,
    EAConfig,
    EvoproofError,
    TacticBase,
    TacticEntry,
    TheoremStatement,
    load_tactic_base,
    load_theorem,
    parse_tactic_base,
    parse_theorem,
    render_script,
    serialize_tactic_base,
    validate,
)
from .operators import (
    RandomSource,
    crossover,
    evolve,
    initialize,
    mutate,
    rank,
    select_parent,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendUnavailable",
    "Chromosome",
    "DiversitySummary",
    "EAConfig",
    "EvalCache",
    "EvalOutcome",
    "EvoproofError",
    "FailureKind",
    "GenerationStats",
    "Individual",
    "Population",
    "ProofArchive",
    "ProofRecord",
    "ProofSearch",
    "RandomSource",
    "ReportSink",
    "RunReport",
    "ScriptResult",
    "StepResult",
    "StepStatus",
    "TacticBase",
    "TacticEntry",
    "TheoremStatement",
    "assign_fitness",
    "check_repeat_rules",
    "crossover",
    "diversity_summary",
    "evaluate",
    "evaluate_population",
    "evolve",
    "initialize",
    "load_tactic_base",
    "load_theorem",
    "mutate",
    "parse_tactic_base",
    "parse_theorem",
    "random_search_probability",
    "rank",
    "render_script",
    "select_parent",
    "serialize_tactic_base",
    "validate",
    "__version__",
]


def __getattr__(name: str):
    # ProofSearch pulls in scikit-learn; load it only when asked for
    if name == "ProofSearch":
        from .estimator import ProofSearch

        return ProofSearch
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
