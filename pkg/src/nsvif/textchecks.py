"""Document segmentation and the builtin constraint checkers.

Heading conventions: a title line's first non-space character is ``#`` and
the next character is not ``#``; a subsection title line starts with two or
more ``#``. Everything else is body text. Word-level checks strip leading
and trailing Unicode punctuation and casefold; the total word count check
deliberately counts raw whitespace-separated tokens instead, so stray
punctuation tokens count toward the total (see check_word_count).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Literal, Sequence

from .model import CheckResult


class ParameterError(ValueError):
    """A checker was invoked with arguments its contract rejects."""


@dataclass(frozen=True)
class Word:
    original: str
    folded: str


@dataclass(frozen=True)
class Line:
    text: str
    number: int  # 1-based


@dataclass(frozen=True)
class Span:
    """One subsection: its title line plus the body lines before the next heading."""

    title_line: Line
    body_lines: tuple[Line, ...]


@dataclass(frozen=True)
class DocSegments:
    title_lines: tuple[Line, ...]
    subsection_title_lines: tuple[Line, ...]
    body_lines: tuple[Line, ...]
    subsections: tuple[Span, ...]

    @property
    def title(self) -> Line | None:
        return self.title_lines[0] if self.title_lines else None


_HASH_RUN_RE = re.compile(r"#+")


def classify_line(text: str) -> Literal["title", "subsection", "body"]:
    stripped = text.lstrip()
    match = _HASH_RUN_RE.match(stripped)
    if match is None:
        return "body"
    return "title" if len(match.group()) == 1 else "subsection"


def segment_document(text: str) -> DocSegments:
    """Partition every input line into exactly one of title / subsection / body."""
    raw_lines = text.split("\n") if text else []
    titles: list[Line] = []
    subsection_titles: list[Line] = []
    body: list[Line] = []
    spans: list[Span] = []
    open_span: list[Line] | None = None
    open_title: Line | None = None

    def close_span() -> None:
        nonlocal open_span, open_title
        if open_title is not None:
            spans.append(Span(open_title, tuple(open_span or ())))
        open_span = None
        open_title = None

    for number, raw in enumerate(raw_lines, start=1):
        line = Line(raw, number)
        kind = classify_line(raw)
        if kind == "title":
            close_span()
            titles.append(line)
        elif kind == "subsection":
            close_span()
            subsection_titles.append(line)
            open_title = line
            open_span = []
        else:
            body.append(line)
            if open_span is not None:
                open_span.append(line)
    close_span()
    return DocSegments(tuple(titles), tuple(subsection_titles), tuple(body), tuple(spans))


def _strip_punct(token: str) -> str:
    start = 0
    end = len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize_words(text: str) -> list[Word]:
    """Whitespace tokens with outer punctuation stripped; empty results dropped."""
    words: list[Word] = []
    for token in text.split():
        core = _strip_punct(token)
        if core:
            words.append(Word(token, core.casefold()))
    return words


def naive_token_count(text: str) -> int:
    return len(text.split())


def body_naive_count(segments: DocSegments) -> int:
    return sum(naive_token_count(line.text) for line in segments.body_lines)


def body_words(segments: DocSegments) -> list[Word]:
    words: list[Word] = []
    for line in segments.body_lines:
        words.extend(tokenize_words(line.text))
    return words


@dataclass(frozen=True)
class Sentence:
    text: str
    words: tuple[Word, ...]


_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])(?=\s|$)")


def split_sentences(segments: DocSegments) -> list[Sentence]:
    """Sentences over body paragraphs.

    A paragraph is a maximal run of consecutive non-blank body lines; a gap
    in line numbers (a heading in between) breaks the run just like a blank
    line does. Lines of one paragraph join with a single space, then the text
    splits after any [.!?] run that is followed by whitespace or the end.
    """
    paragraphs: list[str] = []
    current: list[Line] = []
    previous_number: int | None = None
    for line in segments.body_lines:
        blank = not line.text.strip()
        contiguous = previous_number is not None and line.number == previous_number + 1
        if blank or not contiguous:
            if current:
                paragraphs.append(" ".join(l.text for l in current))
            current = []
        if not blank:
            current.append(line)
        previous_number = line.number
    if current:
        paragraphs.append(" ".join(l.text for l in current))

    sentences: list[Sentence] = []
    for paragraph in paragraphs:
        for chunk in _SENTENCE_SPLIT_RE.split(paragraph):
            words = tokenize_words(chunk)
            if words:
                sentences.append(Sentence(chunk.strip(), tuple(words)))
    return sentences


def check_keywords(
    text: str,
    keywords: Sequence[str],
    mode: Literal["include", "exclude"],
    constraint_id: str | None = None,
) -> CheckResult:
    """Casefolded substring match over the raw text (no word boundaries)."""
    if not keywords:
        raise ParameterError("keywords list is empty")
    if mode not in ("include", "exclude"):
        raise ParameterError(f"unknown keyword mode {mode!r}")
    cid = constraint_id or (
        "keyword_inclusion" if mode == "include" else "keyword_exclusion"
    )
    haystack = text.casefold()
    if mode == "include":
        missing = [k for k in keywords if k.casefold() not in haystack]
        if missing:
            return CheckResult(cid, False, "builtin", "missing keywords: " + ", ".join(missing))
        return CheckResult(cid, True, "builtin", f"all {len(keywords)} keywords present")
    found = [k for k in keywords if k.casefold() in haystack]
    if found:
        return CheckResult(cid, False, "builtin", "forbidden keywords found: " + ", ".join(found))
    return CheckResult(cid, True, "builtin", "no forbidden keywords present")


_SUBSECTION_TEXT_RE = re.compile(r"#{2,} (.*)\Z")


def check_title(
    text: str,
    expected: str | None = None,
    level: Literal["title", "subsections"] = "title",
    expected_titles: Sequence[str] | None = None,
    constraint_id: str | None = None,
) -> CheckResult:
    """Exact heading match after trimming the line.

    A response title line must equal ``"# " + expected``; a subsection title
    line must be a run of 2+ hashes, one space, then exactly the expected text.
    """
    segments = segment_document(text)
    if level == "title":
        if expected is None:
            raise ParameterError("title check requires an expected title")
        cid = constraint_id or "response_title"
        wanted = "# " + expected
        for line in segments.title_lines:
            if line.text.strip() == wanted:
                return CheckResult(cid, True, "builtin", f"title line found: {wanted}")
        return CheckResult(cid, False, "builtin", f"no title line equals {wanted!r}")
    if level == "subsections":
        if not expected_titles:
            raise ParameterError("subsection check requires expected titles")
        cid = constraint_id or "subsection_titles"
        present: set[str] = set()
        for line in segments.subsection_title_lines:
            match = _SUBSECTION_TEXT_RE.match(line.text.strip())
            if match:
                present.add(match.group(1))
        missing = [t for t in expected_titles if t not in present]
        if missing:
            return CheckResult(
                cid, False, "builtin", "missing subsection titles: " + ", ".join(missing)
            )
        return CheckResult(
            cid, True, "builtin", f"all {len(expected_titles)} subsection titles present"
        )
    raise ParameterError(f"unknown heading level {level!r}")


def check_word_count(
    segments: DocSegments,
    target: int,
    tolerance: int = 10,
    constraint_id: str | None = None,
) -> CheckResult:
    """Total word count over body lines, headings excluded.

    Counts raw whitespace-separated tokens, so a bare punctuation token such
    as a list dash counts as a word. This mirrors how instructed writers
    count; the finer punctuation-stripped tokenizer stays the basis for the
    per-sentence, parity, and bookend checks.
    """
    if target <= 0:
        raise ParameterError("word count target must be positive")
    if tolerance < 0:
        raise ParameterError("word count tolerance must be non-negative")
    cid = constraint_id or "total_word_count"
    count = body_naive_count(segments)
    verdict = abs(count - target) <= tolerance
    evidence = f"count={count}, target={target}, tolerance={tolerance}"
    return CheckResult(cid, verdict, "builtin", evidence)


def check_sentence_length(
    segments: DocSegments,
    max_words: int,
    strict_less: bool = True,
    constraint_id: str | None = None,
) -> CheckResult:
    if max_words <= 0:
        raise ParameterError("sentence word limit must be positive")
    cid = constraint_id or "words_per_sentence"
    sentences = split_sentences(segments)
    for index, sentence in enumerate(sentences, start=1):
        count = len(sentence.words)
        bad = count >= max_words if strict_less else count > max_words
        if bad:
            bound = f"< {max_words}" if strict_less else f"<= {max_words}"
            return CheckResult(
                cid,
                False,
                "builtin",
                f"sentence {index} has {count} words (limit {bound}): {sentence.text!r}",
            )
    return CheckResult(cid, True, "builtin", f"all {len(sentences)} sentences within limit")


def check_parity(
    segments: DocSegments,
    parity: Literal["even", "odd"],
    constraint_id: str | None = None,
) -> CheckResult:
    if parity not in ("even", "odd"):
        raise ParameterError(f"unknown parity {parity!r}")
    cid = constraint_id or "even_odd_word_count"
    count = len(body_words(segments))
    actual = "even" if count % 2 == 0 else "odd"
    verdict = actual == parity
    return CheckResult(
        cid, verdict, "builtin", f"body word count {count} is {actual}; expected {parity}"
    )


def run_builtin(
    taxonomy: str,
    params: dict,
    output: str,
    constraint_id: str,
) -> CheckResult:
    """Dispatch one template-family constraint to its builtin checker.

    A ParameterError from the underlying checker (or missing params) comes
    back as a failed result with the reason as evidence rather than raising:
    a constraint whose contract cannot even be applied to the document is
    counted as violated.
    """
    segments = segment_document(output)
    try:
        if taxonomy == "keyword_inclusion":
            return check_keywords(output, params["keywords"], "include", constraint_id)
        if taxonomy == "keyword_exclusion":
            return check_keywords(output, params["keywords"], "exclude", constraint_id)
        if taxonomy == "response_title":
            return check_title(output, expected=params["title"], constraint_id=constraint_id)
        if taxonomy == "subsection_titles":
            return check_title(
                output,
                level="subsections",
                expected_titles=params["titles"],
                constraint_id=constraint_id,
            )
        if taxonomy == "total_word_count":
            return check_word_count(
                segments, params["target"], params.get("tolerance", 10), constraint_id
            )
        if taxonomy == "words_per_sentence":
            return check_sentence_length(
                segments,
                params["max_words"],
                params.get("strict_less", True),
                constraint_id,
            )
        if taxonomy == "even_odd_word_count":
            return check_parity(segments, params["parity"], constraint_id)
        if taxonomy == "response_bookend":
            return check_bookend(segments, "response", constraint_id)
        if taxonomy == "subsection_bookend":
            return check_bookend(segments, "subsections", constraint_id)
    except (ParameterError, KeyError) as exc:
        return CheckResult(
            constraint_id, False, "builtin", f"checker parameter error: {exc}"
        )
    raise ParameterError(f"no builtin checker for taxonomy {taxonomy!r}")


def check_bookend(
    segments: DocSegments,
    scope: Literal["response", "subsections"],
    constraint_id: str | None = None,
) -> CheckResult:
    """First and last body word must match casefolded, per response or per subsection."""
    if scope == "response":
        cid = constraint_id or "response_bookend"
        words = body_words(segments)
        if not words:
            return CheckResult(cid, False, "builtin", "no body words to compare")
        first, last = words[0], words[-1]
        if first.folded == last.folded:
            return CheckResult(
                cid, True, "builtin", f"response starts and ends with {first.folded!r}"
            )
        return CheckResult(
            cid,
            False,
            "builtin",
            f"first word {first.folded!r} != last word {last.folded!r}",
        )
    if scope == "subsections":
        cid = constraint_id or "subsection_bookend"
        if not segments.subsections:
            raise ParameterError("document has no subsections")
        for span in segments.subsections:
            words: list[Word] = []
            for line in span.body_lines:
                words.extend(tokenize_words(line.text))
            if not words:
                return CheckResult(
                    cid,
                    False,
                    "builtin",
                    f"subsection at line {span.title_line.number} has no body words",
                )
            if words[0].folded != words[-1].folded:
                return CheckResult(
                    cid,
                    False,
                    "builtin",
                    f"subsection at line {span.title_line.number} starts with "
                    f"{words[0].folded!r} and ends with {words[-1].folded!r}",
                )
        return CheckResult(
            cid,
            True,
            "builtin",
            f"all {len(segments.subsections)} subsections start and end with the same word",
        )
    raise ParameterError(f"unknown bookend scope {scope!r}")
