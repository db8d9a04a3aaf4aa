"""Core data types shared across the package.

A constraint is one atomic requirement extracted from an instruction. A
check result records how a single constraint was verified. A verification
report composes all the per-constraint verdicts through a formula into one
overall sat/unsat answer. A bench item is one labeled dataset entry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Literal, Mapping, NamedTuple

from .formula import Formula, format_formula, parse_formula, variables

Kind = Literal["logic", "semantic"]
Label = Literal["sat", "unsat"]
CheckMethod = Literal["builtin", "generated_checker", "llm_judge", "fallback_judge"]

# Constraint families with dedicated template renderers and builtin checkers.
# "custom" covers anything extracted from free-form instructions.
TAXONOMIES = (
    "writing_topic",
    "writing_tone",
    "keyword_inclusion",
    "keyword_exclusion",
    "response_title",
    "subsection_titles",
    "words_per_sentence",
    "even_odd_word_count",
    "response_bookend",
    "subsection_bookend",
    "total_word_count",
    "custom",
)

# Taxonomies whose satisfaction is decidable by a deterministic program.
LOGIC_TAXONOMIES = (
    "keyword_inclusion",
    "keyword_exclusion",
    "response_title",
    "subsection_titles",
    "words_per_sentence",
    "even_odd_word_count",
    "response_bookend",
    "subsection_bookend",
    "total_word_count",
)

SEMANTIC_TAXONOMIES = ("writing_topic", "writing_tone")

ID_PATTERN = re.compile(r"[a-z][a-z0-9_]*\Z")


class TokenUsage(NamedTuple):
    input_tokens: int = 0
    output_tokens: int = 0

    def __add__(self, other: object) -> "TokenUsage":  # type: ignore[override]
        if not isinstance(other, tuple) or len(other) != 2:
            return NotImplemented
        return TokenUsage(self[0] + other[0], self[1] + other[1])


@dataclass(frozen=True)
class Constraint:
    id: str
    kind: Kind
    taxonomy: str
    summary: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class CheckResult:
    constraint_id: str
    verdict: bool
    method: CheckMethod
    evidence: str
    attempts: int = 1


@dataclass(frozen=True)
class VerificationReport:
    overall: Label
    formula: Formula
    assignment: dict[str, bool]
    results: tuple[CheckResult, ...]
    violated: tuple[str, ...]
    explanation: str
    usage: TokenUsage
    constraints: tuple[Constraint, ...] = ()


@dataclass(frozen=True)
class BenchItem:
    id: str
    complexity: int
    instruction: str
    constraints: tuple[Constraint, ...]
    formula: Formula
    output: str
    label: Label
    violated: tuple[str, ...]


_WORD_RE = re.compile(r"[a-z0-9]+")
_CUT_RE = re.compile(r"[,:;.]")


def normalize_constraint_id(summary: str, taken: set[str] | None = None) -> str:
    """Derive a stable identifier from a constraint summary.

    Takes the text before the first comma/colon/semicolon/period, keeps at
    most the first five lowercase alphanumeric words joined by underscores,
    and suffixes _2, _3, ... while the result collides with `taken`.
    """
    text = summary.strip()
    if not text:
        raise ValueError("constraint summary is empty")
    head = _CUT_RE.split(text, maxsplit=1)[0]
    words = _WORD_RE.findall(head.lower())[:5]
    if not words:
        words = _WORD_RE.findall(text.lower())[:5]
    if not words:
        raise ValueError(f"constraint summary has no usable words: {summary!r}")
    base = "_".join(words)
    if not base[0].isalpha():
        base = "c_" + base
    if taken is None or base not in taken:
        return base
    counter = 2
    while f"{base}_{counter}" in taken:
        counter += 1
    return f"{base}_{counter}"


def validate_constraint(constraint: Constraint) -> list[str]:
    """Return human-readable problems; empty list means valid."""
    problems: list[str] = []
    if not ID_PATTERN.match(constraint.id):
        problems.append(f"constraint id {constraint.id!r} is not a valid identifier")
    if constraint.kind not in ("logic", "semantic"):
        problems.append(f"constraint {constraint.id}: unknown kind {constraint.kind!r}")
    if constraint.taxonomy not in TAXONOMIES:
        problems.append(
            f"constraint {constraint.id}: unknown taxonomy {constraint.taxonomy!r}"
        )
    params = constraint.params
    needs_list = {
        "keyword_inclusion": "keywords",
        "keyword_exclusion": "keywords",
        "subsection_titles": "titles",
    }
    if constraint.taxonomy in needs_list:
        key = needs_list[constraint.taxonomy]
        value = params.get(key)
        if not isinstance(value, (list, tuple)) or not value:
            problems.append(
                f"constraint {constraint.id}: {constraint.taxonomy} requires a non-empty {key} list"
            )
    if constraint.taxonomy == "response_title":
        if not isinstance(params.get("title"), str) or not params.get("title"):
            problems.append(
                f"constraint {constraint.id}: response_title requires a non-empty title"
            )
    if constraint.taxonomy == "total_word_count":
        target = params.get("target")
        if not isinstance(target, int) or target <= 0:
            problems.append(
                f"constraint {constraint.id}: total_word_count requires a positive integer target"
            )
    if constraint.taxonomy == "words_per_sentence":
        limit = params.get("max_words")
        if not isinstance(limit, int) or limit <= 0:
            problems.append(
                f"constraint {constraint.id}: words_per_sentence requires a positive integer max_words"
            )
    if constraint.taxonomy == "even_odd_word_count":
        if params.get("parity") not in ("even", "odd"):
            problems.append(
                f"constraint {constraint.id}: even_odd_word_count requires parity even or odd"
            )
    return problems


def validate_bench_item(item: BenchItem) -> list[str]:
    """Check every bench-item invariant; collects messages, never raises."""
    problems: list[str] = []
    ids = [c.id for c in item.constraints]
    if len(set(ids)) != len(ids):
        problems.append("constraint ids are not unique")
    for constraint in item.constraints:
        problems.extend(validate_constraint(constraint))
    if item.complexity != len(item.constraints):
        problems.append(
            f"complexity {item.complexity} does not match {len(item.constraints)} constraints"
        )
    if item.label not in ("sat", "unsat"):
        problems.append(f"unknown label {item.label!r}")
    if item.label == "sat" and item.violated:
        problems.append("sat item has violations")
    if item.label == "unsat" and not item.violated:
        problems.append("unsat item lists no violation")
    known = set(ids)
    for vid in item.violated:
        if vid not in known:
            problems.append(f"violated id {vid!r} is not a constraint id")
    for name in sorted(variables(item.formula)):
        if name not in known:
            problems.append(f"formula variable {name!r} is not a constraint id")
    if not item.instruction.strip():
        problems.append("instruction is empty")
    return problems


def constraint_to_dict(constraint: Constraint) -> dict[str, Any]:
    return {
        "id": constraint.id,
        "kind": constraint.kind,
        "taxonomy": constraint.taxonomy,
        "summary": constraint.summary,
        "params": dict(constraint.params),
    }


def constraint_from_dict(data: Mapping[str, Any]) -> Constraint:
    return Constraint(
        id=data["id"],
        kind=data["kind"],
        taxonomy=data["taxonomy"],
        summary=data["summary"],
        params=dict(data.get("params", {})),
    )


def check_result_to_dict(result: CheckResult) -> dict[str, Any]:
    return {
        "constraint_id": result.constraint_id,
        "verdict": result.verdict,
        "method": result.method,
        "evidence": result.evidence,
        "attempts": result.attempts,
    }


def check_result_from_dict(data: Mapping[str, Any]) -> CheckResult:
    return CheckResult(
        constraint_id=data["constraint_id"],
        verdict=bool(data["verdict"]),
        method=data["method"],
        evidence=data["evidence"],
        attempts=int(data.get("attempts", 1)),
    )


def report_to_dict(report: VerificationReport) -> dict[str, Any]:
    return {
        "overall": report.overall,
        "formula": format_formula(report.formula),
        "assignment": dict(report.assignment),
        "results": [check_result_to_dict(r) for r in report.results],
        "violated": list(report.violated),
        "explanation": report.explanation,
        "usage": {
            "input_tokens": report.usage.input_tokens,
            "output_tokens": report.usage.output_tokens,
        },
        "constraints": [constraint_to_dict(c) for c in report.constraints],
    }


def report_from_dict(data: Mapping[str, Any]) -> VerificationReport:
    usage = data.get("usage", {})
    return VerificationReport(
        overall=data["overall"],
        formula=parse_formula(data["formula"]),
        assignment={k: bool(v) for k, v in data["assignment"].items()},
        results=tuple(check_result_from_dict(r) for r in data["results"]),
        violated=tuple(data["violated"]),
        explanation=data["explanation"],
        usage=TokenUsage(
            int(usage.get("input_tokens", 0)), int(usage.get("output_tokens", 0))
        ),
        constraints=tuple(
            constraint_from_dict(c) for c in data.get("constraints", ())
        ),
    )


def bench_item_to_dict(item: BenchItem) -> dict[str, Any]:
    return {
        "id": item.id,
        "complexity": item.complexity,
        "instruction": item.instruction,
        "constraints": [constraint_to_dict(c) for c in item.constraints],
        "formula": format_formula(item.formula),
        "output": item.output,
        "label": item.label,
        "violated": list(item.violated),
    }


def bench_item_from_dict(data: Mapping[str, Any]) -> BenchItem:
    return BenchItem(
        id=data["id"],
        complexity=int(data["complexity"]),
        instruction=data["instruction"],
        constraints=tuple(constraint_from_dict(c) for c in data["constraints"]),
        formula=parse_formula(data["formula"]),
        output=data["output"],
        label=data["label"],
        violated=tuple(data["violated"]),
    )
