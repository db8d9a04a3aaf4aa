"""HTTP service over the verifier, synthesizer, eval harness, and repair loop.

Handlers are plain functions over pydantic models so the command line can
call them in-process; the FastAPI app is a thin routing layer on top.
"""

from __future__ import annotations

from typing import Any, Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .config import ConfigError, RunConfig, build_gateway, build_pipeline
from .evalharness import (
    breakdown_by_complexity,
    evaluate_verifier,
    metrics_to_dict,
)
from .formula import FormulaError, format_formula, parse_formula
from .gateway import ChatRequest, GatewayError
from .model import (
    BenchItem,
    Constraint,
    bench_item_from_dict,
    bench_item_to_dict,
    validate_constraint,
)
from .pipeline import PipelineError, VerifierPipeline
from .prompts import GENERATION_SYSTEM, generation_user
from .repair import RepairError, repair_until_sat, transcript_to_dict
from .synth import (
    COMPLEXITY_GROUPS,
    SynthesisError,
    compute_stats,
    default_pools,
    load_pools,
    synthesize_dataset,
    validate_pools,
)

_CORE_ERRORS = (
    PipelineError,
    GatewayError,
    FormulaError,
    SynthesisError,
    RepairError,
    ConfigError,
    ValueError,
)


class ConstraintModel(BaseModel):
    id: str
    kind: Literal["logic", "semantic"]
    taxonomy: str
    summary: str = ""
    params: dict[str, Any] = Field(default_factory=dict)

    def to_core(self) -> Constraint:
        constraint = Constraint(
            id=self.id,
            kind=self.kind,
            taxonomy=self.taxonomy,
            summary=self.summary,
            params=dict(self.params),
        )
        problems = validate_constraint(constraint)
        if problems:
            raise HTTPException(status_code=422, detail="; ".join(problems))
        return constraint


class CheckResultModel(BaseModel):
    constraint_id: str
    verdict: bool
    method: str
    evidence: str
    attempts: int


class UsageModel(BaseModel):
    input_tokens: int = 0
    output_tokens: int = 0


class VerifyRequest(BaseModel):
    instruction: str
    output: str
    mode: Literal["standard", "strict"] | None = None
    constraints: list[ConstraintModel] | None = None
    formula: str | None = None


class VerifyResponse(BaseModel):
    overall: Literal["sat", "unsat"]
    formula: str
    assignment: dict[str, bool]
    results: list[CheckResultModel]
    violated: list[str]
    explanation: str
    usage: UsageModel


class SynthRequest(BaseModel):
    seed: int = 0
    pools_path: str | None = None
    complexities: list[int] | None = None


class SynthResponse(BaseModel):
    items: list[dict[str, Any]]
    stats: dict[str, Any]


class EvalRequest(BaseModel):
    items: list[dict[str, Any]]
    verifier: Literal["pipeline", "baseline"] = "pipeline"
    mode: Literal["standard", "strict"] | None = None


class PredictionModel(BaseModel):
    item_id: str
    complexity: int
    label: str
    predicted: str | None
    error: str | None = None


class EvalResponse(BaseModel):
    metrics: dict[str, Any]
    by_complexity: dict[str, dict[str, Any]]
    predictions: list[PredictionModel]


class RepairRequest(BaseModel):
    instruction: str
    budget: int | None = None
    feedback_mode: Literal["detailed", "boolean"] = "detailed"


class RepairResponse(BaseModel):
    outcome: Literal["converged", "budget_exhausted"]
    iterations: int
    final_output: str
    turns: list[dict[str, Any]]


class HealthResponse(BaseModel):
    status: str
    version: str
    backend: str


def _pipeline(config: RunConfig) -> VerifierPipeline:
    return build_pipeline(config, build_gateway(config))


def handle_verify(config: RunConfig, request: VerifyRequest) -> VerifyResponse:
    constraints = (
        [c.to_core() for c in request.constraints]
        if request.constraints is not None
        else None
    )
    formula = None
    if request.formula is not None:
        formula = parse_formula(request.formula)
    report = _pipeline(config).verify(
        request.instruction,
        request.output,
        mode=request.mode,
        constraints=constraints,
        formula=formula,
    )
    return VerifyResponse(
        overall=report.overall,
        formula=format_formula(report.formula),
        assignment=dict(report.assignment),
        results=[
            CheckResultModel(
                constraint_id=r.constraint_id,
                verdict=r.verdict,
                method=r.method,
                evidence=r.evidence,
                attempts=r.attempts,
            )
            for r in report.results
        ],
        violated=list(report.violated),
        explanation=report.explanation,
        usage=UsageModel(
            input_tokens=report.usage.input_tokens,
            output_tokens=report.usage.output_tokens,
        ),
    )


def handle_synth(config: RunConfig, request: SynthRequest) -> SynthResponse:
    pools = load_pools(request.pools_path) if request.pools_path else default_pools()
    problems = validate_pools(pools)
    if problems:
        raise HTTPException(status_code=422, detail="; ".join(problems[:10]))
    groups = COMPLEXITY_GROUPS
    if request.complexities is not None:
        wanted = set(request.complexities)
        groups = tuple(g for g in COMPLEXITY_GROUPS if g.complexity in wanted)
        if not groups:
            raise HTTPException(status_code=422, detail="no matching complexity levels")
    items = synthesize_dataset(
        pools, seed=request.seed, groups=groups, regen_budget=config.regen_budget
    )
    return SynthResponse(
        items=[bench_item_to_dict(item) for item in items],
        stats=compute_stats(items),
    )


def handle_eval(config: RunConfig, request: EvalRequest) -> EvalResponse:
    items = [bench_item_from_dict(data) for data in request.items]
    pipeline = _pipeline(config)
    if request.verifier == "baseline":

        def verdict_of(item: BenchItem) -> str:
            return pipeline.baseline_judge(item.instruction, item.output)

    else:

        def verdict_of(item: BenchItem) -> str:
            return pipeline.verify(
                item.instruction, item.output, mode=request.mode
            ).overall

    metrics, predictions = evaluate_verifier(items, verdict_of)
    return EvalResponse(
        metrics=metrics_to_dict(metrics),
        by_complexity={
            str(level): metrics_to_dict(group)
            for level, group in breakdown_by_complexity(predictions).items()
        },
        predictions=[
            PredictionModel(
                item_id=p.item_id,
                complexity=p.complexity,
                label=p.label,
                predicted=p.predicted,
                error=p.error,
            )
            for p in predictions
        ],
    )


def handle_repair(config: RunConfig, request: RepairRequest) -> RepairResponse:
    gateway = build_gateway(config)
    pipeline = build_pipeline(config, gateway)

    def generate(instruction: str, history: Any) -> str:
        response = gateway.complete(
            ChatRequest(
                model=config.model,
                system=GENERATION_SYSTEM,
                user=generation_user(instruction, list(history)),
                temperature=config.temperature,
            )
        )
        return response.text

    def verify(instruction: str, output: str) -> Any:
        return pipeline.verify(instruction, output)

    transcript = repair_until_sat(
        request.instruction,
        generate,
        verify,
        budget=request.budget if request.budget is not None else config.repair_budget,
        feedback_mode=request.feedback_mode,
    )
    data = transcript_to_dict(transcript)
    return RepairResponse(
        outcome=transcript.outcome,
        iterations=transcript.iterations,
        final_output=transcript.final_output,
        turns=data["turns"],
    )


def create_app(config: RunConfig | None = None) -> FastAPI:
    run_config = config or RunConfig()
    app = FastAPI(title="nsvif", version=__version__)
    app.state.config = run_config

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(
            status="ok", version=__version__, backend=run_config.backend
        )

    @app.post("/verify", response_model=VerifyResponse)
    def verify(request: VerifyRequest) -> VerifyResponse:
        try:
            return handle_verify(run_config, request)
        except _CORE_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/synth", response_model=SynthResponse)
    def synth(request: SynthRequest) -> SynthResponse:
        try:
            return handle_synth(run_config, request)
        except _CORE_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/eval", response_model=EvalResponse)
    def run_eval(request: EvalRequest) -> EvalResponse:
        try:
            return handle_eval(run_config, request)
        except _CORE_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/repair", response_model=RepairResponse)
    def repair(request: RepairRequest) -> RepairResponse:
        try:
            return handle_repair(run_config, request)
        except _CORE_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    return app
