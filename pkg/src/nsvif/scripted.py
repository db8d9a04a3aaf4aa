"""Deterministic offline text generation: a benchmark writer and a scripted
chat transport.

TemplateWriter composes documents that satisfy every template-shaped
constraint it can read out of an instruction, and deliberately drifts on
dimensions the instruction does not pin down (length, heading structure,
word parity, bookend words). That drift is what lets the benchmark builder
produce violating outputs by handing the writer a weakened instruction.

ScriptedTransport answers the pipeline's own prompts the way a competent,
fully deterministic model would. It exists to record replayable cassettes
and to run the whole stack offline; it is not a general model.
"""

from __future__ import annotations

import itertools
import json
import re
from typing import Any, Iterable, Sequence

from . import prompts
from .gateway import ChatRequest
from .model import LOGIC_TAXONOMIES, TokenUsage
from .templates import (
    INSTRUCTION_HEADER,
    constraint_summary,
    make_constraint,
    parse_instruction,
    render_constraint_line,
)

# Vocabulary kept clear of every exclusion list in the bundled value pools;
# composition re-filters against the instruction's own exclusions anyway.
SAFE_FILLER = (
    "plans", "notes", "ideas", "steady", "clear", "simple", "daily", "habits",
    "care", "focus", "shared", "goals", "drafts", "review", "rhythm", "steps",
)
BACKUP_FILLER = ("zinc", "onyx", "quartz", "maple", "cedar", "basalt")
ANCHORS = ("echo", "beacon", "compass", "harbor", "lantern", "meadow")
FLEX_WORDS = ("progress", "continues", "daily", "again")
GENERIC_SUBSECTIONS = ("Part One", "Part Two")

DEFAULT_SENTENCE_WORDS = 12


def _contains_any(word: str, excluded: Sequence[str]) -> bool:
    folded = word.casefold()
    return any(item in folded for item in excluded)


def _filtered(words: Iterable[str], excluded: Sequence[str], backup: Sequence[str]) -> list[str]:
    safe = [w for w in words if not _contains_any(w, excluded)]
    if safe:
        return safe
    return [w for w in backup if not _contains_any(w, excluded)] or ["item"]


def _sentence(words: Sequence[str]) -> str:
    head = words[0][0].upper() + words[0][1:]
    rest = " ".join(words[1:])
    return head + (" " + rest if rest else "") + "."


def _chunks(words: Sequence[str], size: int) -> list[list[str]]:
    return [list(words[i : i + size]) for i in range(0, len(words), size)]


class TemplateWriter:
    """Deterministic generator for template-shaped instructions.

    Calling convention: (instruction_text, feedback, attempt) -> text. The
    feedback string is ignored; variation across regeneration attempts comes
    from the attempt index, which shifts the word-parity of the output.
    """

    def __call__(
        self, instruction: str, feedback: str | None = None, attempt: int = 0
    ) -> str:
        spec: dict[str, dict[str, Any]] = {}
        for taxonomy, params in parse_instruction(instruction):
            spec.setdefault(taxonomy, params)
        if "total_word_count" in spec:
            return self._counted(spec)
        return self._structured(spec, attempt)

    def _counted(self, spec: dict[str, dict[str, Any]]) -> str:
        """Hit the word-count target exactly, counting whitespace tokens."""
        target = spec["total_word_count"]["target"]
        topic = spec.get("writing_topic", {}).get("topic", "steady work")
        tone = spec.get("writing_tone", {}).get("tone")
        keywords = spec.get("keyword_inclusion", {}).get("keywords", [])
        sentences = [f"This short essay explores {topic} in practical terms."]
        if tone:
            sentences.append(f"The voice stays {tone} from start to finish.")
        for keyword in keywords:
            sentences.append(f"The discussion covers {keyword} with simple examples.")
        count = sum(len(s.split()) for s in sentences)
        remaining = target - count
        cycle = itertools.cycle(SAFE_FILLER)
        while remaining > 14:
            words = [next(cycle) for _ in range(10)]
            sentences.append(_sentence(words))
            remaining -= 10
        if remaining > 0:
            words = [next(cycle) for _ in range(remaining)]
            sentences.append(_sentence(words))
        return "\n".join(sentences)

    def _structured(self, spec: dict[str, dict[str, Any]], attempt: int) -> str:
        include = spec.get("keyword_inclusion", {}).get("keywords", [])
        excluded = [
            k.casefold() for k in spec.get("keyword_exclusion", {}).get("keywords", [])
        ]
        title = spec.get("response_title", {}).get("title")
        subsection_titles = spec.get("subsection_titles", {}).get("titles")
        limit = spec.get("words_per_sentence", {}).get("max_words")
        parity = spec.get("even_odd_word_count", {}).get("parity")
        want_response_bookend = "response_bookend" in spec
        want_subsection_bookend = "subsection_bookend" in spec
        topic = spec.get("writing_topic", {}).get("topic")
        tone = spec.get("writing_tone", {}).get("tone")

        filler = _filtered(SAFE_FILLER, excluded, BACKUP_FILLER)
        anchors = _filtered(ANCHORS, excluded, BACKUP_FILLER)
        flex_pool = _filtered(FLEX_WORDS, excluded, filler)
        while len(flex_pool) < 4:
            flex_pool = flex_pool + flex_pool
        max_words = (limit - 1) if limit else DEFAULT_SENTENCE_WORDS
        filler_len = max_words if limit is None else max(2, min(max_words, 6))

        if subsection_titles:
            sections: list[str | None] = list(subsection_titles)
        elif want_subsection_bookend:
            sections = list(GENERIC_SUBSECTIONS)
        else:
            sections = [None]
        last = len(sections) - 1

        # Per-paragraph bookend anchors. Without the response-level bookend
        # the first and last anchors deliberately differ so the response as a
        # whole does not start and end alike by accident.
        open_anchor: list[str | None] = [None] * len(sections)
        close_anchor: list[str | None] = [None] * len(sections)
        if want_subsection_bookend:
            if want_response_bookend or len(sections) == 1:
                per_paragraph = [anchors[0]] * len(sections)
            else:
                per_paragraph = [anchors[0]] * last + [anchors[1 % len(anchors)]]
            open_anchor = list(per_paragraph)
            close_anchor = list(per_paragraph)
        elif want_response_bookend:
            open_anchor[0] = anchors[0]
            close_anchor[last] = anchors[0]

        cycle = itertools.cycle(filler)
        paragraphs: list[list[list[str]]] = []
        for index in range(len(sections)):
            sents: list[list[str]] = []
            if open_anchor[index]:
                sents.append([open_anchor[index], "opens", "this", "part"])
            elif index == 0:
                sents.append(["opening", "remarks", "set", "the", "frame"])
            if index == 0:
                for keyword in include:
                    words = ["note", *keyword.split(), "here"]
                    if len(words) > max_words:
                        words = keyword.split()
                    sents.append(words)
                if topic:
                    sents.extend(_chunks(topic.split(), max(1, max_words - 1)))
                if tone:
                    sents.append(["tone", "stays", *tone.split()[: max(1, max_words - 3)]])
            sents.append([next(cycle) for _ in range(filler_len)])
            if index == last:
                sents.append(["__flex__"])
            if close_anchor[index]:
                sents.append(["return", "to", close_anchor[index]])
            paragraphs.append(sents)

        # The flex sentence absorbs parity: the attempt index flips it so
        # regeneration can walk to the other parity, then the constraint
        # (when present) pins it.
        fixed_count = sum(
            len(words)
            for paragraph in paragraphs
            for words in paragraph
            if words != ["__flex__"]
        )
        flex_len = 2 + (attempt % 2)
        if parity in ("even", "odd"):
            wanted_odd = parity == "odd"
            if (fixed_count + flex_len) % 2 != (1 if wanted_odd else 0):
                flex_len += 1
        flex_words = flex_pool[:flex_len]

        lines: list[str] = []
        if title:
            lines.append(f"# {title}")
            lines.append("")
        for index, section in enumerate(sections):
            if section is not None:
                lines.append(f"## {section}")
            for words in paragraphs[index]:
                if words == ["__flex__"]:
                    words = flex_words
                lines.append(_sentence(words))
            if index != last:
                lines.append("")
        return "\n".join(lines)


class ScriptedTransport:
    """Deterministic transport that role-plays the model end of every prompt.

    Formulation replies decompose template instructions exactly; judge calls
    answer YES (semantic constraints are treated as satisfied); the baseline
    always answers sat; generation requests delegate to TemplateWriter.
    """

    def __init__(self) -> None:
        self.writer = TemplateWriter()

    def complete(self, request: ChatRequest) -> tuple[str, TokenUsage]:
        text = self._reply(request)
        usage = TokenUsage(
            (len(request.system) + len(request.user)) // 4, len(text) // 4
        )
        return text, usage

    def _reply(self, request: ChatRequest) -> str:
        system = request.system
        user = request.user
        if system == prompts.FORMULATION_SYSTEM:
            return self._formulation_reply(user)
        if system == prompts.CHECKING_SYSTEM:
            return self._checking_reply(user)
        if system == prompts.JUDGE_SYSTEM:
            return "YES"
        if system == prompts.BASELINE_SYSTEM:
            return json.dumps({"is_sat": "sat"})
        if system == prompts.GENERATION_SYSTEM:
            return self._generation_reply(user)
        raise ValueError("scripted transport received an unknown prompt family")

    @staticmethod
    def _between(text: str, start: str, end: str | None) -> str:
        _, _, tail = text.partition(start)
        if end is None:
            return tail
        head, _, _ = tail.partition(end)
        return head

    def _formulation_reply(self, user: str) -> str:
        instruction = self._between(user, "Here's the question:\n", "\n\nHere's the answer:\n")
        parsed = parse_instruction(instruction)
        workflow = []
        for taxonomy, params in parsed:
            constraint = make_constraint(taxonomy, params)
            workflow.append(
                {
                    "module_type": "symbolic" if taxonomy in LOGIC_TAXONOMIES else "neural",
                    "purpose": f"verify the {taxonomy.replace('_', ' ')} requirement",
                    "constraints_addressed": constraint_summary(taxonomy, params),
                    "module_specification": render_constraint_line(constraint),
                    "input_output": "reads the answer text and reports whether the requirement holds",
                }
            )
        if not workflow:
            workflow.append(
                {
                    "module_type": "neural",
                    "purpose": "verify the answer follows the instruction",
                    "constraints_addressed": "Overall compliance with the instruction",
                    "module_specification": "judge whether the answer satisfies every requirement in the instruction",
                    "input_output": "reads the answer text and reports whether it complies",
                }
            )
        envelope = {
            "reasoning_steps": ["listed each constraint line and planned one module for it"],
            "workflow": workflow,
        }
        return json.dumps(envelope, indent=2, ensure_ascii=False)

    def _checking_reply(self, user: str) -> str:
        module_json = self._between(
            user, "Here's the module plan:\n", "\n\nThe overall requirement formula is:"
        )
        module = json.loads(module_json)
        answer = self._between(user, "Here's the answer:\n", "\n\nHere's the module plan:")
        description = module.get("constraints_addressed", "the requirement")
        if module.get("module_type") == "neural":
            prompt_text = (
                "Read the answer below and decide whether it satisfies this "
                f"requirement: {description}\n\nAnswer:\n{answer}\n\n"
                "Reply YES if the requirement is satisfied, NO otherwise."
            )
            verifier = 'prompt = """' + prompt_text + '"""'
            constraint_type = "neural"
        else:
            verifier = (
                "# mechanical check placeholder\n"
                'print("sat")\n'
            )
            constraint_type = "symbolic"
        envelope = {
            "reasoning_steps": [""],
            "workflow": [
                {
                    "constraint_description": description,
                    "constraint_type": constraint_type,
                    "verifier_module": verifier,
                }
            ],
        }
        return json.dumps(envelope, indent=2, ensure_ascii=False)

    _REVISION_RE = re.compile(r"--- revision (\d+) ---")

    def _generation_reply(self, user: str) -> str:
        instruction = user.split("\n\n--- ", 1)[0]
        attempt = user.count(" output ---")
        revision = self._REVISION_RE.search(user)
        if revision:
            attempt += int(revision.group(1))
        return self.writer(instruction, None, attempt)
