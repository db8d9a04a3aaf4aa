"""The verification pipeline: formulate, build checkers, run them, solve.

Verification treats an (instruction, output) pair as a constraint
satisfaction problem. Formulation decomposes the instruction into one
constraint per verifier module; checker building routes each module to a
builtin checker when the constraint matches a known template, to a generated
Python program for other mechanical constraints, or to a model judge for
semantic ones; running executes that route with a bounded
retry-then-fallback ladder; solving composes the per-constraint verdicts
through the formula into one overall sat/unsat report.
"""

from __future__ import annotations

import json
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Literal, Sequence

from . import prompts
from .formula import (
    Formula,
    FormulaError,
    conjunction,
    emit_solver_text,
    evaluate_formula,
    format_formula,
    parse_formula,
    strict_conjunction_verdict,
    variables,
)
from .gateway import ChatRequest, ChatResponse, Gateway, usage_total
from .model import (
    LOGIC_TAXONOMIES,
    CheckResult,
    Constraint,
    TokenUsage,
    VerificationReport,
    normalize_constraint_id,
)
from .templates import parse_instruction
from .textchecks import ParameterError, run_builtin

Mode = Literal["standard", "strict"]

DEFAULT_RUNNER_COMMAND = "python3 {file}"
DEFAULT_REFLECTION_BUDGET = 3
DEFAULT_PARSE_RETRIES = 2
DEFAULT_CHECKER_TIMEOUT = 10.0


class PipelineError(Exception):
    """Base class for pipeline failures."""


class FormulationError(PipelineError):
    """The instruction could not be decomposed into constraints."""


class CheckerBuildError(PipelineError):
    """A verifier module could not be produced for a constraint."""


class JudgeError(PipelineError):
    """A judging call produced no usable verdict."""


class UncheckedConstraintError(PipelineError):
    """Every route for one constraint failed, so no verdict exists."""

    def __init__(self, constraint_id: str, detail: str):
        super().__init__(f"constraint {constraint_id!r} could not be checked: {detail}")
        self.constraint_id = constraint_id


class MissingResultError(PipelineError):
    def __init__(self, constraint_id: str):
        super().__init__(f"no check result for constraint {constraint_id!r}")
        self.constraint_id = constraint_id


@dataclass(frozen=True)
class PlanModule:
    module_type: Literal["symbolic", "neural"]
    purpose: str = ""
    constraints_addressed: str = ""
    module_specification: str = ""
    input_output: str = ""

    def as_dict(self) -> dict[str, str]:
        return {
            "module_type": self.module_type,
            "purpose": self.purpose,
            "constraints_addressed": self.constraints_addressed,
            "module_specification": self.module_specification,
            "input_output": self.input_output,
        }


@dataclass(frozen=True)
class FormulationPlan:
    constraints: tuple[Constraint, ...]
    formula: Formula
    modules: tuple[PlanModule, ...]


@dataclass(frozen=True)
class BuiltinRoute:
    taxonomy: str
    params: dict[str, Any]


@dataclass(frozen=True)
class GeneratedRoute:
    program: str


@dataclass(frozen=True)
class JudgeRoute:
    prompt: str


@dataclass(frozen=True)
class CheckerSpec:
    constraint_id: str
    route: BuiltinRoute | GeneratedRoute | JudgeRoute
    reflection_budget: int = DEFAULT_REFLECTION_BUDGET
    # Context carried for reflection retries and the judge fallback.
    summary: str = ""
    build_user: str = ""


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def extract_json_object(text: str) -> dict[str, Any]:
    """Parse a JSON object from a model reply, tolerating fences and prose."""
    candidates = [text.strip()]
    fence = _FENCE_RE.search(text)
    if fence:
        candidates.append(fence.group(1).strip())
    start = text.find("{")
    end = text.rfind("}")
    if start != -1 and end > start:
        candidates.append(text[start : end + 1])
    last_error = "no JSON object in reply"
    for candidate in candidates:
        if not candidate:
            continue
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError as exc:
            last_error = str(exc)
            continue
        if isinstance(obj, dict):
            return obj
        last_error = f"top-level JSON value is {type(obj).__name__}, not an object"
    raise ValueError(last_error)


_PROMPT_VAR_RE = re.compile(
    r"prompt\s*=\s*(?:\"\"\"|''')(.*?)(?:\"\"\"|''')", re.DOTALL
)


def extract_prompt_variable(module_text: str) -> str:
    """The triple-quoted judge prompt; falls back to the whole text."""
    match = _PROMPT_VAR_RE.search(module_text)
    if match:
        return match.group(1).strip()
    return module_text.strip()


_FIRST_ALPHA_RE = re.compile(r"[A-Za-z]+")


def parse_yes_no(text: str) -> bool | None:
    """Judge replies decode by their first alphabetic token."""
    match = _FIRST_ALPHA_RE.search(text)
    if match is None:
        return None
    token = match.group().casefold()
    if token == "yes":
        return True
    if token == "no":
        return False
    return None


# Ordered dispatch signatures: first hit wins. More specific families come
# first because template lines for heading-exempt constraints all mention
# "title and subsection title lines".
_SIGNATURES: tuple[tuple[str, Callable[[str], bool]], ...] = (
    ("words_per_sentence", lambda t: "words per sentence" in t or ("sentence" in t and "word" in t)),
    ("even_odd_word_count", lambda t: "even/odd" in t or ("even" in t and "odd" in t) or "parity" in t),
    ("subsection_bookend", lambda t: ("repetition" in t or "start and end" in t) and ("on subsections" in t or "each subsection" in t)),
    ("response_bookend", lambda t: "repetition" in t or "start and end" in t),
    ("total_word_count", lambda t: "word count" in t),
    ("keyword_exclusion", lambda t: "keyword" in t and "exclu" in t),
    ("keyword_inclusion", lambda t: "keyword" in t),
    ("subsection_titles", lambda t: "subsection" in t),
    ("response_title", lambda t: "title" in t),
    ("writing_tone", lambda t: "tone" in t),
    ("writing_topic", lambda t: "topic" in t),
)


def match_signature(module: PlanModule) -> str | None:
    text = " ".join(
        (module.constraints_addressed, module.module_specification, module.purpose)
    ).lower()
    for taxonomy, predicate in _SIGNATURES:
        if predicate(text):
            return taxonomy
    return None


class VerifierPipeline:
    def __init__(
        self,
        gateway: Gateway | None = None,
        *,
        model: str = "default",
        temperature: float = 0.2,
        mode: Mode = "standard",
        reflection_budget: int = DEFAULT_REFLECTION_BUDGET,
        parse_retries: int = DEFAULT_PARSE_RETRIES,
        runner_command: str = DEFAULT_RUNNER_COMMAND,
        checker_timeout: float = DEFAULT_CHECKER_TIMEOUT,
    ):
        if mode not in ("standard", "strict"):
            raise PipelineError(f"unknown verdict mode {mode!r}")
        if reflection_budget < 1:
            raise PipelineError("reflection budget must be at least 1")
        if parse_retries < 0:
            raise PipelineError("parse retries must be non-negative")
        self.gateway = gateway
        self.model = model
        self.temperature = temperature
        self.mode: Mode = mode
        self.reflection_budget = reflection_budget
        self.parse_retries = parse_retries
        self.runner_command = runner_command
        self.checker_timeout = checker_timeout

    # -- model plumbing ------------------------------------------------

    def _complete(
        self, system: str, user: str, tally: list[ChatResponse] | None
    ) -> ChatResponse:
        if self.gateway is None:
            raise PipelineError("this operation requires a model gateway")
        request = ChatRequest(
            model=self.model, system=system, user=user, temperature=self.temperature
        )
        response = self.gateway.complete(request)
        if tally is not None:
            tally.append(response)
        return response

    def _call_json(
        self,
        system: str,
        user: str,
        tally: list[ChatResponse] | None,
        error_cls: type[PipelineError],
        validate: Callable[[dict[str, Any]], str | None] | None = None,
    ) -> dict[str, Any]:
        attempt_user = user
        last_error = ""
        for attempt in range(1, self.parse_retries + 2):
            response = self._complete(system, attempt_user, tally)
            try:
                obj = extract_json_object(response.text)
            except ValueError as exc:
                last_error = str(exc)
                attempt_user = prompts.parse_retry_user(user, last_error, attempt)
                continue
            if validate is not None:
                problem = validate(obj)
                if problem is not None:
                    last_error = problem
                    attempt_user = prompts.parse_retry_user(user, problem, attempt)
                    continue
            return obj
        raise error_cls(
            f"no usable reply after {self.parse_retries + 1} attempts: {last_error}"
        )

    # -- formulation ---------------------------------------------------

    def formulate(
        self,
        instruction: str,
        output: str,
        *,
        constraints: Sequence[Constraint] | None = None,
        formula: Formula | None = None,
        _tally: list[ChatResponse] | None = None,
    ) -> FormulationPlan:
        """Decompose the instruction into constraints plus a formula.

        When constraints are declared up front the model is bypassed
        entirely; the formula defaults to the conjunction of all constraint
        ids in either path.
        """
        if not instruction.strip():
            raise FormulationError("instruction is empty")
        if constraints is not None:
            return self._plan_from_declared(list(constraints), formula)

        def validate(obj: dict[str, Any]) -> str | None:
            workflow = obj.get("workflow")
            if not isinstance(workflow, list) or not workflow:
                return "workflow must be a non-empty array"
            for entry in workflow:
                if not isinstance(entry, dict):
                    return "workflow entries must be objects"
                module_type = str(entry.get("module_type", "")).strip().lower()
                if module_type not in ("symbolic", "neural"):
                    return f"unknown module_type {entry.get('module_type')!r}"
            return None

        envelope = self._call_json(
            prompts.FORMULATION_SYSTEM,
            prompts.formulation_user(instruction, output),
            _tally,
            FormulationError,
            validate,
        )
        modules: list[PlanModule] = []
        for entry in envelope["workflow"]:
            modules.append(
                PlanModule(
                    module_type=str(entry.get("module_type", "")).strip().lower(),
                    purpose=str(entry.get("purpose", "")),
                    constraints_addressed=str(entry.get("constraints_addressed", "")),
                    module_specification=str(entry.get("module_specification", "")),
                    input_output=str(entry.get("input_output", "")),
                )
            )

        template_params = {}
        for taxonomy, params in parse_instruction(instruction):
            template_params.setdefault(taxonomy, params)

        constraints_out: list[Constraint] = []
        taken: set[str] = set()
        for module in modules:
            summary = (
                module.constraints_addressed.strip()
                or module.purpose.strip()
                or module.module_specification.strip()
            )
            if not summary:
                raise FormulationError("a workflow module describes no constraint")
            constraint_id = normalize_constraint_id(summary, taken)
            taken.add(constraint_id)
            taxonomy = match_signature(module)
            params: dict[str, Any] = {}
            if taxonomy is not None and taxonomy in template_params:
                params = dict(template_params[taxonomy])
            else:
                taxonomy = None
            kind = "logic" if module.module_type == "symbolic" else "semantic"
            constraints_out.append(
                Constraint(
                    id=constraint_id,
                    kind=kind,
                    taxonomy=taxonomy or "custom",
                    summary=summary,
                    params=params,
                )
            )

        plan_formula = self._formula_from_envelope(envelope, constraints_out)
        return FormulationPlan(tuple(constraints_out), plan_formula, tuple(modules))

    def _plan_from_declared(
        self, constraints: list[Constraint], formula: Formula | None
    ) -> FormulationPlan:
        if not constraints:
            raise FormulationError("declared constraint list is empty")
        ids = [c.id for c in constraints]
        if len(set(ids)) != len(ids):
            raise FormulationError("declared constraint ids are not unique")
        plan_formula = formula if formula is not None else conjunction(ids)
        unknown = variables(plan_formula) - set(ids)
        if unknown:
            raise FormulationError(
                f"formula names unknown constraints: {', '.join(sorted(unknown))}"
            )
        modules = tuple(
            PlanModule(
                module_type="symbolic" if c.kind == "logic" else "neural",
                purpose=f"verify constraint {c.id}",
                constraints_addressed=c.summary,
                module_specification=c.summary,
                input_output="reads the answer, reports whether the constraint holds",
            )
            for c in constraints
        )
        return FormulationPlan(tuple(constraints), plan_formula, modules)

    def _formula_from_envelope(
        self, envelope: dict[str, Any], constraints: list[Constraint]
    ) -> Formula:
        ids = [c.id for c in constraints]
        text = envelope.get("formula")
        if isinstance(text, str) and text.strip():
            try:
                candidate = parse_formula(text)
            except FormulaError:
                candidate = None
            if candidate is not None and variables(candidate) <= set(ids):
                return candidate
        return conjunction(ids)

    # -- checker construction -------------------------------------------

    def build_checker(
        self,
        module: PlanModule,
        instruction: str,
        output: str,
        *,
        constraint: Constraint | None = None,
        formula_text: str = "",
        _tally: list[ChatResponse] | None = None,
    ) -> CheckerSpec:
        """Route one plan module to builtin, generated, or judge checking.

        Builtin routing needs no model call. The generated route asks the
        checking call for a standalone program; the judge route asks it for
        a yes/no prompt and tolerates a missing prompt variable by judging
        with the whole module text.
        """
        if constraint is None:
            constraint = self._constraint_for_module(module, instruction)
        if (
            module.module_type == "symbolic"
            and constraint.taxonomy in LOGIC_TAXONOMIES
            and constraint.params
        ):
            return CheckerSpec(
                constraint_id=constraint.id,
                route=BuiltinRoute(constraint.taxonomy, dict(constraint.params)),
                reflection_budget=self.reflection_budget,
                summary=constraint.summary,
            )

        user = prompts.checking_user(instruction, output, module.as_dict(), formula_text)

        def validate(obj: dict[str, Any]) -> str | None:
            workflow = obj.get("workflow")
            if not isinstance(workflow, list) or not workflow:
                return "workflow must be a non-empty array"
            if not isinstance(workflow[0], dict):
                return "workflow entries must be objects"
            if not str(workflow[0].get("verifier_module", "")).strip():
                return "verifier_module is empty"
            return None

        envelope = self._call_json(
            prompts.CHECKING_SYSTEM, user, _tally, CheckerBuildError, validate
        )
        module_text = str(envelope["workflow"][0]["verifier_module"])
        if module.module_type == "symbolic":
            route: BuiltinRoute | GeneratedRoute | JudgeRoute = GeneratedRoute(module_text)
        else:
            route = JudgeRoute(extract_prompt_variable(module_text))
        return CheckerSpec(
            constraint_id=constraint.id,
            route=route,
            reflection_budget=self.reflection_budget,
            summary=constraint.summary,
            build_user=user,
        )

    def _constraint_for_module(self, module: PlanModule, instruction: str) -> Constraint:
        summary = (
            module.constraints_addressed.strip()
            or module.purpose.strip()
            or module.module_specification.strip()
        )
        if not summary:
            raise CheckerBuildError("module describes no constraint")
        taxonomy = match_signature(module)
        params: dict[str, Any] = {}
        if taxonomy is not None:
            for parsed_taxonomy, parsed_params in parse_instruction(instruction):
                if parsed_taxonomy == taxonomy:
                    params = dict(parsed_params)
                    break
            else:
                taxonomy = None
        kind = "logic" if module.module_type == "symbolic" else "semantic"
        return Constraint(
            id=normalize_constraint_id(summary),
            kind=kind,
            taxonomy=taxonomy or "custom",
            summary=summary,
            params=params,
        )

    # -- checker execution ----------------------------------------------

    def run_checker(
        self,
        spec: CheckerSpec,
        output: str,
        *,
        instruction: str = "",
        _tally: list[ChatResponse] | None = None,
    ) -> CheckResult:
        if isinstance(spec.route, BuiltinRoute):
            return self._run_builtin(spec.route, output, spec.constraint_id)
        if isinstance(spec.route, GeneratedRoute):
            return self._run_generated(spec, output, instruction, _tally)
        if isinstance(spec.route, JudgeRoute):
            return self._run_judge(spec, output, instruction, _tally)
        raise PipelineError(f"unknown checker route {spec.route!r}")

    def _run_builtin(self, route: BuiltinRoute, output: str, cid: str) -> CheckResult:
        try:
            return run_builtin(route.taxonomy, route.params, output, cid)
        except ParameterError as exc:
            raise PipelineError(str(exc)) from exc

    @dataclass(frozen=True)
    class _ExecOutcome:
        verdict: str | None
        error: str

    def _execute_program(self, program: str) -> "VerifierPipeline._ExecOutcome":
        with tempfile.TemporaryDirectory(prefix="nsvif-checker-") as workdir:
            path = Path(workdir) / "checker.py"
            path.write_text(program, encoding="utf-8")
            parts = shlex.split(self.runner_command)
            args = [part.replace("{file}", str(path)) for part in parts]
            if not any("{file}" in part for part in parts):
                args.append(str(path))
            try:
                completed = subprocess.run(
                    args,
                    capture_output=True,
                    text=True,
                    timeout=self.checker_timeout,
                )
            except subprocess.TimeoutExpired:
                return self._ExecOutcome(None, f"timed out after {self.checker_timeout}s")
            except OSError as exc:
                return self._ExecOutcome(None, f"could not launch checker: {exc}")
        if completed.returncode != 0:
            tail = completed.stderr.strip().splitlines()[-3:]
            return self._ExecOutcome(
                None, f"exit code {completed.returncode}: " + " | ".join(tail)
            )
        lines = [line.strip() for line in completed.stdout.splitlines() if line.strip()]
        final = lines[-1].casefold() if lines else ""
        if final in ("sat", "unsat"):
            return self._ExecOutcome(final, "")
        return self._ExecOutcome(None, f"final output line {final!r} is not sat or unsat")

    def _run_generated(
        self,
        spec: CheckerSpec,
        output: str,
        instruction: str,
        tally: list[ChatResponse] | None,
    ) -> CheckResult:
        program = spec.route.program  # type: ignore[union-attr]
        failures: list[str] = []
        attempts = 0
        for attempt in range(1, spec.reflection_budget + 1):
            attempts = attempt
            outcome = self._execute_program(program)
            if outcome.verdict is not None:
                return CheckResult(
                    spec.constraint_id,
                    outcome.verdict == "sat",
                    "generated_checker",
                    f"generated checker printed {outcome.verdict}",
                    attempts=attempt,
                )
            failures.append(outcome.error)
            if attempt == spec.reflection_budget or not spec.build_user:
                break
            regenerated = self._reflect_program(spec, program, outcome.error, attempt, tally)
            if regenerated is None:
                break
            program = regenerated
        return self._fallback(spec, instruction, output, failures, attempts, tally)

    def _reflect_program(
        self,
        spec: CheckerSpec,
        program: str,
        error: str,
        attempt: int,
        tally: list[ChatResponse] | None,
    ) -> str | None:
        user = prompts.reflection_user(spec.build_user, program, f"attempt {attempt}: {error}")
        try:
            envelope = self._call_json(
                prompts.CHECKING_SYSTEM,
                user,
                tally,
                CheckerBuildError,
                lambda obj: None
                if isinstance(obj.get("workflow"), list)
                and obj["workflow"]
                and isinstance(obj["workflow"][0], dict)
                and str(obj["workflow"][0].get("verifier_module", "")).strip()
                else "verifier_module is empty",
            )
        except PipelineError:
            return None
        return str(envelope["workflow"][0]["verifier_module"])

    def _run_judge(
        self,
        spec: CheckerSpec,
        output: str,
        instruction: str,
        tally: list[ChatResponse] | None,
    ) -> CheckResult:
        prompt = spec.route.prompt  # type: ignore[union-attr]
        failures: list[str] = []
        attempts = 0
        user = prompt
        for attempt in range(1, spec.reflection_budget + 1):
            attempts = attempt
            response = self._complete(prompts.JUDGE_SYSTEM, user, tally)
            verdict = parse_yes_no(response.text)
            if verdict is not None:
                evidence = (
                    f"judge answered {'YES' if verdict else 'NO'}: "
                    + response.text.strip().replace("\n", " ")[:200]
                )
                return CheckResult(
                    spec.constraint_id, verdict, "llm_judge", evidence, attempts=attempt
                )
            failures.append(f"reply {response.text.strip()[:80]!r} is not YES or NO")
            user = (
                prompt
                + f"\n\nYour previous reply (attempt {attempt}) did not start with YES or NO."
                + " Reply with YES or NO only."
            )
        return self._fallback(spec, instruction, output, failures, attempts, tally)

    def _fallback(
        self,
        spec: CheckerSpec,
        instruction: str,
        output: str,
        failures: list[str],
        attempts: int,
        tally: list[ChatResponse] | None,
    ) -> CheckResult:
        """Last-resort direct judgment after the primary route is exhausted."""
        summary = spec.summary or spec.constraint_id
        detail = failures[-1] if failures else "primary route unavailable"
        try:
            response = self._complete(
                prompts.JUDGE_SYSTEM,
                prompts.fallback_judge_prompt(summary, instruction, output),
                tally,
            )
        except PipelineError as exc:
            raise UncheckedConstraintError(spec.constraint_id, str(exc)) from exc
        verdict = parse_yes_no(response.text)
        if verdict is None:
            raise UncheckedConstraintError(
                spec.constraint_id,
                f"fallback judgment {response.text.strip()[:80]!r} is not YES or NO",
            )
        return CheckResult(
            spec.constraint_id,
            verdict,
            "fallback_judge",
            f"fallback judgment {'YES' if verdict else 'NO'} after: {detail}",
            attempts=attempts + 1,
        )

    # -- solving ---------------------------------------------------------

    def solve(
        self,
        plan: FormulationPlan,
        results: Sequence[CheckResult],
        mode: Mode | None = None,
        usage: TokenUsage = TokenUsage(),
    ) -> VerificationReport:
        by_id: dict[str, CheckResult] = {}
        for result in results:
            by_id.setdefault(result.constraint_id, result)
        ordered: list[CheckResult] = []
        for constraint in plan.constraints:
            if constraint.id not in by_id:
                raise MissingResultError(constraint.id)
            ordered.append(by_id[constraint.id])
        assignment = {c.id: by_id[c.id].verdict for c in plan.constraints}
        effective: Mode = mode or self.mode
        if effective == "strict":
            overall = strict_conjunction_verdict(plan.formula, assignment)
        else:
            overall = evaluate_formula(plan.formula, assignment)
        violated = tuple(c.id for c in plan.constraints if not assignment[c.id])

        formula_text = format_formula(plan.formula)
        lines = [f"verdict: {overall}", f"formula: {formula_text}"]
        for constraint in plan.constraints:
            result = by_id[constraint.id]
            state = "true" if result.verdict else "false"
            lines.append(
                f"{constraint.id} = {state} via {result.method}: {result.evidence}"
            )
        lines.append("solver script:")
        lines.append(emit_solver_text(plan.formula, assignment))
        return VerificationReport(
            overall=overall,
            formula=plan.formula,
            assignment=assignment,
            results=tuple(ordered),
            violated=violated,
            explanation="\n".join(lines),
            usage=usage,
            constraints=plan.constraints,
        )

    # -- entry points -----------------------------------------------------

    def verify(
        self,
        instruction: str,
        output: str,
        *,
        mode: Mode | None = None,
        constraints: Sequence[Constraint] | None = None,
        formula: Formula | None = None,
    ) -> VerificationReport:
        tally: list[ChatResponse] = []
        plan = self.formulate(
            instruction, output, constraints=constraints, formula=formula, _tally=tally
        )
        formula_text = format_formula(plan.formula)
        results: list[CheckResult] = []
        for module, constraint in zip(plan.modules, plan.constraints):
            spec = self.build_checker(
                module,
                instruction,
                output,
                constraint=constraint,
                formula_text=formula_text,
                _tally=tally,
            )
            results.append(
                self.run_checker(spec, output, instruction=instruction, _tally=tally)
            )
        return self.solve(plan, results, mode=mode, usage=usage_total(tally))

    def baseline_judge(self, instruction: str, output: str) -> Literal["sat", "unsat"]:
        """One-call judgment of the whole pair, bypassing decomposition."""

        def validate(obj: dict[str, Any]) -> str | None:
            if obj.get("is_sat") in ("sat", "unsat"):
                return None
            return f"is_sat value {obj.get('is_sat')!r} is not sat or unsat"

        envelope = self._call_json(
            prompts.BASELINE_SYSTEM,
            prompts.baseline_user(instruction, output),
            None,
            JudgeError,
            validate,
        )
        return envelope["is_sat"]
