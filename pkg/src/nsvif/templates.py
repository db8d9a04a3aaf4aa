"""Instruction templates: render constraints to instruction lines and back.

Each supported constraint family has exactly one English template line. The
renderer produces instructions as one header line plus one line per
constraint; the parser inverts those lines exactly, which is what lets the
verifier route template-shaped constraints to builtin checkers and lets the
benchmark writer read its own instructions.
"""

from __future__ import annotations

import re
from typing import Any, Iterable, Sequence

from .model import Constraint, LOGIC_TAXONOMIES

INSTRUCTION_HEADER = "Please write a piece of text considering all these constraints:"

# Rendering order: topic and tone first, then structural families, with the
# total word count line last.
RENDER_ORDER = (
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
)

DEFAULT_WORD_COUNT_TOLERANCE = 10
DEFAULT_RESPONSE_BOOKEND = "the response should start and end with the same word"
DEFAULT_SUBSECTION_BOOKEND = "each subsection should start and end with the same word"

_HEADING_SUFFIX = (
    " this does not apply to title and subsection title lines."
    " Title and subsection title lines start with at least one #."
)


class TemplateError(ValueError):
    """A constraint cannot be rendered to or parsed from a template line."""


def render_constraint_line(constraint: Constraint) -> str:
    params = constraint.params
    taxonomy = constraint.taxonomy
    if taxonomy == "writing_topic":
        return f"Please write in this topic: {params['topic']}"
    if taxonomy == "writing_tone":
        return f"Please write in this tone: {params['tone']}"
    if taxonomy == "keyword_inclusion":
        joined = ",".join(params["keywords"])
        return (
            "Include these keywords, check for string inclusion regardless of "
            f"capitalization: {joined}"
        )
    if taxonomy == "keyword_exclusion":
        joined = ",".join(params["keywords"])
        return (
            "Exclude these keywords, check for string exclusion regardless of "
            f"capitalization: {joined}"
        )
    if taxonomy == "response_title":
        return (
            "Include this as the title of the text, titles are lines that start "
            f"with only one #: {params['title']}"
        )
    if taxonomy == "subsection_titles":
        joined = ",".join(params["titles"])
        return (
            "Include these subsection titles in the text, subsection titles are "
            f"lines start with more than one #: {joined}"
        )
    if taxonomy == "words_per_sentence":
        rule = f"each sentence should have less than {params['max_words']} words."
        return (
            f"Please consider this number of words per sentence constraint: {rule},"
            + _HEADING_SUFFIX
        )
    if taxonomy == "even_odd_word_count":
        return (
            f"Please consider this even/odd word count constraint: {params['parity']}"
            + _HEADING_SUFFIX
        )
    if taxonomy == "response_bookend":
        rule = params.get("description", DEFAULT_RESPONSE_BOOKEND)
        return (
            f"Please consider this word repetition constraint on the entire response: {rule},"
            + _HEADING_SUFFIX
        )
    if taxonomy == "subsection_bookend":
        rule = params.get("description", DEFAULT_SUBSECTION_BOOKEND)
        return (
            f"Please consider this word repetition constraint on subsections of the response: {rule},"
            + _HEADING_SUFFIX
        )
    if taxonomy == "total_word_count":
        tolerance = params.get("tolerance", DEFAULT_WORD_COUNT_TOLERANCE)
        return (
            f"Please consider this word count constraint: around {params['target']} words "
            f"(within {tolerance} words difference is ok), this does not apply to title "
            "and subsection title lines, which are defined as: lines that start with at "
            "least one #."
        )
    raise TemplateError(f"no template line for taxonomy {taxonomy!r}")


def render_instruction(constraints: Sequence[Constraint]) -> str:
    if not constraints:
        raise TemplateError("cannot render an instruction with no constraints")
    order = {name: index for index, name in enumerate(RENDER_ORDER)}
    for constraint in constraints:
        if constraint.taxonomy not in order:
            raise TemplateError(f"no template line for taxonomy {constraint.taxonomy!r}")
    ranked = sorted(constraints, key=lambda c: order[c.taxonomy])
    lines = [INSTRUCTION_HEADER]
    lines.extend(render_constraint_line(c) for c in ranked)
    return "\n".join(lines)


_SUFFIX_RE = re.escape(_HEADING_SUFFIX)

_LINE_PATTERNS: tuple[tuple[str, re.Pattern[str]], ...] = (
    ("writing_topic", re.compile(r"\APlease write in this topic: (.*)\Z")),
    ("writing_tone", re.compile(r"\APlease write in this tone: (.*)\Z")),
    (
        "keyword_inclusion",
        re.compile(
            r"\AInclude these keywords, check for string inclusion regardless of "
            r"capitalization: (.*)\Z"
        ),
    ),
    (
        "keyword_exclusion",
        re.compile(
            r"\AExclude these keywords, check for string exclusion regardless of "
            r"capitalization: (.*)\Z"
        ),
    ),
    (
        "response_title",
        re.compile(
            r"\AInclude this as the title of the text, titles are lines that start "
            r"with only one #: (.*)\Z"
        ),
    ),
    (
        "subsection_titles",
        re.compile(
            r"\AInclude these subsection titles in the text, subsection titles are "
            r"lines start with more than one #: (.*)\Z"
        ),
    ),
    (
        "words_per_sentence",
        re.compile(
            r"\APlease consider this number of words per sentence constraint: "
            r"each sentence should have less than (\d+) words\.," + _SUFFIX_RE + r"\Z"
        ),
    ),
    (
        "even_odd_word_count",
        re.compile(
            r"\APlease consider this even/odd word count constraint: (even|odd)"
            + _SUFFIX_RE
            + r"\Z"
        ),
    ),
    (
        "response_bookend",
        re.compile(
            r"\APlease consider this word repetition constraint on the entire "
            r"response: (.*?)," + _SUFFIX_RE + r"\Z"
        ),
    ),
    (
        "subsection_bookend",
        re.compile(
            r"\APlease consider this word repetition constraint on subsections of "
            r"the response: (.*?)," + _SUFFIX_RE + r"\Z"
        ),
    ),
    (
        "total_word_count",
        re.compile(
            r"\APlease consider this word count constraint: around (\d+) words "
            r"\(within (\d+) words difference is ok\), this does not apply to title "
            r"and subsection title lines, which are defined as: lines that start "
            r"with at least one #\.\Z"
        ),
    ),
)


def parse_instruction_line(line: str) -> tuple[str, dict[str, Any]] | None:
    """Invert one template line to (taxonomy, params); None when unrecognized."""
    for taxonomy, pattern in _LINE_PATTERNS:
        match = pattern.match(line)
        if match is None:
            continue
        if taxonomy == "writing_topic":
            return taxonomy, {"topic": match.group(1)}
        if taxonomy == "writing_tone":
            return taxonomy, {"tone": match.group(1)}
        if taxonomy in ("keyword_inclusion", "keyword_exclusion"):
            return taxonomy, {"keywords": match.group(1).split(",")}
        if taxonomy == "response_title":
            return taxonomy, {"title": match.group(1)}
        if taxonomy == "subsection_titles":
            return taxonomy, {"titles": match.group(1).split(",")}
        if taxonomy == "words_per_sentence":
            return taxonomy, {"max_words": int(match.group(1)), "strict_less": True}
        if taxonomy == "even_odd_word_count":
            return taxonomy, {"parity": match.group(1)}
        if taxonomy in ("response_bookend", "subsection_bookend"):
            return taxonomy, {"description": match.group(1)}
        if taxonomy == "total_word_count":
            return taxonomy, {
                "target": int(match.group(1)),
                "tolerance": int(match.group(2)),
            }
    return None


def parse_instruction(text: str) -> list[tuple[str, dict[str, Any]]]:
    """All template-shaped lines of an instruction, in line order."""
    parsed: list[tuple[str, dict[str, Any]]] = []
    for line in text.split("\n"):
        hit = parse_instruction_line(line)
        if hit is not None:
            parsed.append(hit)
    return parsed


def constraint_summary(taxonomy: str, params: dict[str, Any]) -> str:
    if taxonomy == "writing_topic":
        return f"Writing topic: {params['topic']}"
    if taxonomy == "writing_tone":
        return f"Writing tone: {params['tone']}"
    if taxonomy == "keyword_inclusion":
        return "Keyword inclusion: " + ", ".join(params["keywords"])
    if taxonomy == "keyword_exclusion":
        return "Keyword exclusion: " + ", ".join(params["keywords"])
    if taxonomy == "response_title":
        return f"Response title: {params['title']}"
    if taxonomy == "subsection_titles":
        return "Subsection titles: " + ", ".join(params["titles"])
    if taxonomy == "words_per_sentence":
        return f"Words per sentence: fewer than {params['max_words']}"
    if taxonomy == "even_odd_word_count":
        return f"Word count parity: {params['parity']}"
    if taxonomy == "response_bookend":
        return "Response bookend: the response starts and ends with the same word"
    if taxonomy == "subsection_bookend":
        return "Subsection bookend: every subsection starts and ends with the same word"
    if taxonomy == "total_word_count":
        tolerance = params.get("tolerance", DEFAULT_WORD_COUNT_TOLERANCE)
        return f"Total word count: around {params['target']} words (tolerance {tolerance})"
    raise TemplateError(f"no summary for taxonomy {taxonomy!r}")


def make_constraint(taxonomy: str, params: dict[str, Any], constraint_id: str | None = None) -> Constraint:
    """Constraint with the taxonomy name as its id and a canonical summary."""
    kind = "logic" if taxonomy in LOGIC_TAXONOMIES else "semantic"
    return Constraint(
        id=constraint_id or taxonomy,
        kind=kind,
        taxonomy=taxonomy,
        summary=constraint_summary(taxonomy, params),
        params=dict(params),
    )


def constraints_from_instruction(text: str) -> list[Constraint]:
    """Template-shaped constraints extracted from an instruction, line order."""
    return [make_constraint(taxonomy, params) for taxonomy, params in parse_instruction(text)]
