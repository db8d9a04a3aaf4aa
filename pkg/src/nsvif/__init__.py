"""Neuro-symbolic verification of instruction following.

Decomposes an instruction into constraints, checks each with the cheapest
sound method available (builtin checkers, generated programs, or judge
prompts), and composes per-constraint verdicts through a logic formula.
Ships with a benchmark synthesizer, an eval harness, a multi-turn repair
loop, a command line client, and an HTTP service.
"""

__version__ = "0.1.0"

from .evalharness import (
    Metrics,
    Prediction,
    breakdown_by_complexity,
    evaluate_verifier,
)
from .formula import (
    Formula,
    FormulaError,
    conjunction,
    emit_solver_text,
    evaluate_formula,
    format_formula,
    parse_formula,
    strict_conjunction_verdict,
    truth_table_satisfiable,
)
from .gateway import (
    CassetteStore,
    ChatRequest,
    ChatResponse,
    Gateway,
    GatewayError,
    LiveTransport,
    ReplayMissError,
)
from .model import (
    BenchItem,
    CheckResult,
    Constraint,
    TokenUsage,
    VerificationReport,
    normalize_constraint_id,
    validate_bench_item,
    validate_constraint,
)
from .pipeline import (
    FormulationPlan,
    PipelineError,
    PlanModule,
    UncheckedConstraintError,
    VerifierPipeline,
)
from .repair import (
    RepairTranscript,
    RepairTurn,
    render_feedback,
    repair_until_sat,
)
from .scripted import ScriptedTransport, TemplateWriter
from .synth import (
    COMPLEXITY_GROUPS,
    TopicGroup,
    ValuePools,
    compute_stats,
    default_pools,
    load_pools,
    read_dataset,
    synthesize_dataset,
    validate_pools,
    write_dataset,
)
from .config import RunConfig, build_gateway, build_pipeline, load_config

__all__ = [
    "__version__",
    "BenchItem",
    "CassetteStore",
    "ChatRequest",
    "ChatResponse",
    "CheckResult",
    "COMPLEXITY_GROUPS",
    "Constraint",
    "Formula",
    "FormulaError",
    "FormulationPlan",
    "Gateway",
    "GatewayError",
    "Metrics",
    "PipelineError",
    "PlanModule",
    "Prediction",
    "RepairTranscript",
    "RepairTurn",
    "ReplayMissError",
    "RunConfig",
    "ScriptedTransport",
    "TemplateWriter",
    "TokenUsage",
    "TopicGroup",
    "UncheckedConstraintError",
    "ValuePools",
    "VerificationReport",
    "VerifierPipeline",
    "breakdown_by_complexity",
    "build_gateway",
    "build_pipeline",
    "compute_stats",
    "conjunction",
    "default_pools",
    "emit_solver_text",
    "evaluate_formula",
    "evaluate_verifier",
    "format_formula",
    "load_config",
    "load_pools",
    "normalize_constraint_id",
    "parse_formula",
    "read_dataset",
    "render_feedback",
    "repair_until_sat",
    "strict_conjunction_verdict",
    "synthesize_dataset",
    "truth_table_satisfiable",
    "validate_bench_item",
    "validate_constraint",
    "validate_pools",
    "write_dataset",
    "LiveTransport",
]
