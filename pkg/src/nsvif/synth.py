"""Benchmark synthesis: instruction enumeration, mutation, and labeling.

Instructions are built from value pools (topic groups carry their keyword
lists, title, and subsection titles so those stay thematically consistent).
Each complexity level has a fixed set of constraint families and a fixed
item count; combinations enumerate as a Cartesian product over the
independent pools in family order and the first `cap` are kept. Rounds
alternate satisfying and violating outputs; violating outputs come from
re-generating against an instruction with one logic constraint omitted,
then labeling against the original.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from itertools import product
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .formula import Formula, conjunction
from .model import BenchItem, Constraint, bench_item_from_dict, bench_item_to_dict
from .scripted import TemplateWriter
from .templates import (
    DEFAULT_RESPONSE_BOOKEND,
    DEFAULT_SUBSECTION_BOOKEND,
    RENDER_ORDER,
    make_constraint,
    render_instruction,
)
from .textchecks import run_builtin

Generator = Callable[[str, str | None, int], str]

DEFAULT_REGEN_BUDGET = 5
DEFAULT_GROUP_CAP = 100

# Families whose omission never drives a violating round: an output that
# merely avoids extra keywords cannot demonstrate their absence.
MUTATION_INELIGIBLE = ("keyword_exclusion",)


class SynthesisError(Exception):
    pass


@dataclass(frozen=True)
class TopicGroup:
    topic: str
    include_keywords: tuple[str, ...]
    exclude_keywords: tuple[str, ...]
    title: str
    subsection_titles: tuple[str, ...]


@dataclass(frozen=True)
class ValuePools:
    topic_groups: tuple[TopicGroup, ...]
    tones: tuple[str, ...]
    word_count_targets: tuple[int, ...]
    word_count_tolerance: int = 10
    sentence_word_limits: tuple[int, ...] = (8, 11)
    parities: tuple[str, ...] = ("even", "odd")


@dataclass(frozen=True)
class ComplexityGroup:
    complexity: int
    size: int
    families: tuple[str, ...]


# Family legend per complexity level; lower levels pair a topic with a word
# count target, higher levels stack structural families and drop the count.
COMPLEXITY_GROUPS: tuple[ComplexityGroup, ...] = (
    ComplexityGroup(2, 100, ("writing_topic", "total_word_count")),
    ComplexityGroup(3, 100, ("writing_topic", "total_word_count", "writing_tone")),
    ComplexityGroup(
        4, 100, ("writing_topic", "total_word_count", "writing_tone", "keyword_inclusion")
    ),
    ComplexityGroup(
        5,
        60,
        (
            "writing_topic",
            "writing_tone",
            "keyword_inclusion",
            "keyword_exclusion",
            "response_title",
        ),
    ),
    ComplexityGroup(
        6,
        60,
        (
            "writing_topic",
            "writing_tone",
            "keyword_inclusion",
            "keyword_exclusion",
            "response_title",
            "subsection_titles",
        ),
    ),
    ComplexityGroup(
        7,
        100,
        (
            "writing_topic",
            "writing_tone",
            "keyword_inclusion",
            "keyword_exclusion",
            "response_title",
            "subsection_titles",
            "words_per_sentence",
        ),
    ),
    ComplexityGroup(
        8,
        100,
        (
            "writing_topic",
            "writing_tone",
            "keyword_inclusion",
            "keyword_exclusion",
            "response_title",
            "subsection_titles",
            "words_per_sentence",
            "even_odd_word_count",
        ),
    ),
    ComplexityGroup(
        9,
        100,
        (
            "writing_topic",
            "writing_tone",
            "keyword_inclusion",
            "keyword_exclusion",
            "response_title",
            "subsection_titles",
            "words_per_sentence",
            "even_odd_word_count",
            "response_bookend",
        ),
    ),
    ComplexityGroup(
        10,
        100,
        (
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
        ),
    ),
)

EXPECTED_TOTAL = sum(group.size for group in COMPLEXITY_GROUPS)

# Families drawn from the topic group rather than their own pool.
_TOPIC_GROUPED = (
    "keyword_inclusion",
    "keyword_exclusion",
    "response_title",
    "subsection_titles",
)


@dataclass(frozen=True)
class InstructionDraft:
    complexity: int
    constraints: tuple[Constraint, ...]
    formula: Formula
    text: str


def _axis_values(family: str, pools: ValuePools) -> list[Any] | None:
    """Independent pool values for a family; None when topic-grouped or fixed."""
    if family == "writing_topic":
        return list(pools.topic_groups)
    if family == "writing_tone":
        return list(pools.tones)
    if family == "total_word_count":
        return list(pools.word_count_targets)
    if family == "words_per_sentence":
        return list(pools.sentence_word_limits)
    if family == "even_odd_word_count":
        return list(pools.parities)
    return None


def _family_params(
    family: str, pools: ValuePools, group: TopicGroup, chosen: Mapping[str, Any]
) -> dict[str, Any]:
    if family == "writing_topic":
        return {"topic": group.topic}
    if family == "writing_tone":
        return {"tone": chosen["writing_tone"]}
    if family == "total_word_count":
        return {
            "target": chosen["total_word_count"],
            "tolerance": pools.word_count_tolerance,
        }
    if family == "keyword_inclusion":
        return {"keywords": list(group.include_keywords)}
    if family == "keyword_exclusion":
        return {"keywords": list(group.exclude_keywords)}
    if family == "response_title":
        return {"title": group.title}
    if family == "subsection_titles":
        return {"titles": list(group.subsection_titles)}
    if family == "words_per_sentence":
        return {"max_words": chosen["words_per_sentence"], "strict_less": True}
    if family == "even_odd_word_count":
        return {"parity": chosen["even_odd_word_count"]}
    if family == "response_bookend":
        return {"description": DEFAULT_RESPONSE_BOOKEND}
    if family == "subsection_bookend":
        return {"description": DEFAULT_SUBSECTION_BOOKEND}
    raise SynthesisError(f"unknown constraint family {family!r}")


def _draft(group: ComplexityGroup, pools: ValuePools, chosen: Mapping[str, Any]) -> InstructionDraft:
    topic_group: TopicGroup = chosen["writing_topic"]
    rank = {name: index for index, name in enumerate(RENDER_ORDER)}
    ordered = sorted(group.families, key=lambda f: rank[f])
    constraints = tuple(
        make_constraint(family, _family_params(family, pools, topic_group, chosen))
        for family in ordered
    )
    formula = conjunction([c.id for c in constraints])
    return InstructionDraft(
        complexity=len(constraints),
        constraints=constraints,
        formula=formula,
        text=render_instruction(constraints),
    )


def synth_group(
    group: ComplexityGroup, pools: ValuePools, cap: int = DEFAULT_GROUP_CAP
) -> list[InstructionDraft]:
    """Enumerate the first `cap` combinations for one complexity level."""
    axes: list[tuple[str, list[Any]]] = []
    for family in group.families:
        values = _axis_values(family, pools)
        if values is not None:
            if not values:
                raise SynthesisError(f"value pool for {family!r} is empty")
            axes.append((family, values))
    drafts: list[InstructionDraft] = []
    names = [name for name, _ in axes]
    for combo in product(*(values for _, values in axes)):
        chosen = dict(zip(names, combo))
        drafts.append(_draft(group, pools, chosen))
        if len(drafts) >= cap:
            break
    return drafts


def eligible_mutation_targets(draft: InstructionDraft) -> list[Constraint]:
    logic = [c for c in draft.constraints if c.kind == "logic"]
    if not logic:
        raise SynthesisError("instruction has no logic constraint to omit")
    preferred = [c for c in logic if c.taxonomy not in MUTATION_INELIGIBLE]
    return preferred or logic


def mutate_instruction(
    draft: InstructionDraft, rotation: int = 0
) -> tuple[InstructionDraft, Constraint]:
    """Omit one logic constraint, chosen by rotation over eligible targets."""
    targets = eligible_mutation_targets(draft)
    omitted = targets[rotation % len(targets)]
    kept = tuple(c for c in draft.constraints if c.id != omitted.id)
    if not kept:
        raise SynthesisError("mutation would leave no constraints")
    return (
        InstructionDraft(
            complexity=len(kept),
            constraints=kept,
            formula=conjunction([c.id for c in kept]),
            text=render_instruction(kept),
        ),
        omitted,
    )


def label_output(
    draft: InstructionDraft,
    output: str,
    semantic_overrides: Mapping[str, bool] | None = None,
) -> tuple[str, list[str]]:
    """Ground-truth label from builtin checkers over the logic constraints.

    Semantic constraints are assumed satisfied unless an override says
    otherwise, since generated outputs are produced on-topic by construction.
    """
    label, violated, _ = _label_with_evidence(draft, output, semantic_overrides)
    return label, violated


def _label_with_evidence(
    draft: InstructionDraft,
    output: str,
    semantic_overrides: Mapping[str, bool] | None = None,
) -> tuple[str, list[str], list[str]]:
    overrides = semantic_overrides or {}
    violated: list[str] = []
    evidence: list[str] = []
    for constraint in draft.constraints:
        if constraint.kind == "semantic":
            if not overrides.get(constraint.id, True):
                violated.append(constraint.id)
                evidence.append(f"{constraint.id}: overridden as unsatisfied")
            continue
        result = run_builtin(constraint.taxonomy, constraint.params, output, constraint.id)
        if not result.verdict:
            violated.append(constraint.id)
            evidence.append(f"{constraint.id}: {result.evidence}")
    label = "sat" if not violated else "unsat"
    return label, violated, evidence


def generate_labeled_outputs(
    draft: InstructionDraft,
    generator: Generator,
    target_label: str,
    *,
    regen_budget: int = DEFAULT_REGEN_BUDGET,
    rotation: int = 0,
    semantic_overrides: Mapping[str, bool] | None = None,
) -> tuple[str, str, list[str]]:
    """One output aimed at the target label, plus its honest label.

    Satisfying rounds regenerate with the failure evidence as feedback;
    violating rounds generate against a weakened instruction (no feedback,
    different attempt indices) and label against the original. When the
    budget runs out the last candidate keeps its honest label.
    """
    if target_label not in ("sat", "unsat"):
        raise SynthesisError(f"unknown target label {target_label!r}")
    prompt_draft = draft
    if target_label == "unsat":
        prompt_draft, _ = mutate_instruction(draft, rotation)
    output = ""
    label = "unsat"
    violated: list[str] = []
    feedback: str | None = None
    for attempt in range(regen_budget + 1):
        output = generator(prompt_draft.text, feedback, attempt)
        label, violated, evidence = _label_with_evidence(
            draft, output, semantic_overrides
        )
        if label == target_label:
            break
        feedback = "\n".join(evidence) if target_label == "sat" else None
    return output, label, violated


def synthesize_dataset(
    pools: ValuePools,
    *,
    seed: int = 0,
    generator: Generator | None = None,
    groups: Sequence[ComplexityGroup] = COMPLEXITY_GROUPS,
    cap: int = DEFAULT_GROUP_CAP,
    regen_budget: int = DEFAULT_REGEN_BUDGET,
) -> list[BenchItem]:
    """The full labeled benchmark, deterministic in (pools, seed, generator)."""
    writer = generator or TemplateWriter()
    items: list[BenchItem] = []
    for group in groups:
        drafts = synth_group(group, pools, cap)
        if len(drafts) < group.size:
            raise SynthesisError(
                f"pools yield {len(drafts)} combinations for complexity "
                f"{group.complexity}, need {group.size}"
            )
        for index, draft in enumerate(drafts[: group.size]):
            target = "sat" if index % 2 == 0 else "unsat"
            # index // 2 is the ordinal within same-target items, so the
            # mutation rotation walks every eligible constraint regardless
            # of how eligibility-list length aligns with index parity.
            output, label, violated = generate_labeled_outputs(
                draft,
                writer,
                target,
                regen_budget=regen_budget,
                rotation=seed + index // 2,
            )
            items.append(
                BenchItem(
                    id=f"c{group.complexity:02d}_{index:03d}",
                    complexity=group.complexity,
                    instruction=draft.text,
                    constraints=draft.constraints,
                    formula=draft.formula,
                    output=output,
                    label=label,
                    violated=tuple(violated),
                )
            )
    return items


def write_dataset(items: Iterable[BenchItem], path: str | Path) -> None:
    """One canonical JSON object per line."""
    lines = [
        json.dumps(bench_item_to_dict(item), sort_keys=True, ensure_ascii=False)
        for item in items
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dataset(path: str | Path) -> list[BenchItem]:
    items: list[BenchItem] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            items.append(bench_item_from_dict(json.loads(line)))
    return items


def _percent(numerator: int, denominator: int) -> float:
    if denominator == 0:
        return 0.0
    value = (Decimal(numerator) * 100 / Decimal(denominator)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )
    return float(value)


def compute_stats(items: Sequence[BenchItem]) -> dict[str, Any]:
    sat = sum(1 for item in items if item.label == "sat")
    unsat = len(items) - sat
    by_complexity: dict[int, int] = {}
    violations: dict[str, int] = {}
    for item in items:
        by_complexity[item.complexity] = by_complexity.get(item.complexity, 0) + 1
        for cid in item.violated:
            violations[cid] = violations.get(cid, 0) + 1
    return {
        "total": len(items),
        "sat": sat,
        "unsat": unsat,
        "sat_pct": _percent(sat, len(items)),
        "unsat_pct": _percent(unsat, len(items)),
        "by_complexity": dict(sorted(by_complexity.items())),
        "violations_by_constraint": dict(sorted(violations.items())),
    }


def pools_to_dict(pools: ValuePools) -> dict[str, Any]:
    return {
        "topic_groups": [
            {
                "topic": g.topic,
                "include_keywords": list(g.include_keywords),
                "exclude_keywords": list(g.exclude_keywords),
                "title": g.title,
                "subsection_titles": list(g.subsection_titles),
            }
            for g in pools.topic_groups
        ],
        "tones": list(pools.tones),
        "word_count_targets": list(pools.word_count_targets),
        "word_count_tolerance": pools.word_count_tolerance,
        "sentence_word_limits": list(pools.sentence_word_limits),
        "parities": list(pools.parities),
    }


def pools_from_dict(data: Mapping[str, Any]) -> ValuePools:
    groups = tuple(
        TopicGroup(
            topic=g["topic"],
            include_keywords=tuple(g["include_keywords"]),
            exclude_keywords=tuple(g["exclude_keywords"]),
            title=g["title"],
            subsection_titles=tuple(g["subsection_titles"]),
        )
        for g in data["topic_groups"]
    )
    return ValuePools(
        topic_groups=groups,
        tones=tuple(data["tones"]),
        word_count_targets=tuple(data["word_count_targets"]),
        word_count_tolerance=int(data.get("word_count_tolerance", 10)),
        sentence_word_limits=tuple(data.get("sentence_word_limits", (8, 11))),
        parities=tuple(data.get("parities", ("even", "odd"))),
    )


def load_pools(path: str | Path) -> ValuePools:
    return pools_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_pools() -> ValuePools:
    data_path = Path(__file__).parent / "data" / "default_pools.json"
    return load_pools(data_path)


def validate_pools(pools: ValuePools) -> list[str]:
    """Consistency problems that would make synthesis unsound; empty if fine.

    Topic-group text that is forced into an output (topic words, keywords,
    title, subsection titles) must not contain any of that group's excluded
    keywords as a casefolded substring, or satisfying rounds are impossible.
    """
    problems: list[str] = []
    if not pools.topic_groups:
        problems.append("no topic groups")
    if not pools.tones:
        problems.append("no tones")
    if not pools.word_count_targets:
        problems.append("no word count targets")
    if any(t <= 0 for t in pools.word_count_targets):
        problems.append("word count targets must be positive")
    if pools.word_count_tolerance < 0:
        problems.append("word count tolerance must be non-negative")
    if any(v <= 1 for v in pools.sentence_word_limits):
        problems.append("sentence word limits must exceed 1")
    if any(p not in ("even", "odd") for p in pools.parities):
        problems.append("parities must be even or odd")
    for group in pools.topic_groups:
        excluded = [k.casefold() for k in group.exclude_keywords]
        forced = [
            ("topic", group.topic),
            ("title", group.title),
            *(("include keyword", k) for k in group.include_keywords),
            *(("subsection title", t) for t in group.subsection_titles),
        ]
        for role, text in forced:
            folded = text.casefold()
            for keyword in excluded:
                if keyword in folded:
                    problems.append(
                        f"topic group {group.topic!r}: {role} {text!r} contains "
                        f"excluded keyword {keyword!r}"
                    )
        if not group.include_keywords:
            problems.append(f"topic group {group.topic!r} has no include keywords")
        if not group.subsection_titles:
            problems.append(f"topic group {group.topic!r} has no subsection titles")
    return problems
