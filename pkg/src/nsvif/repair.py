"""Multi-turn repair: regenerate an output until it verifies or budget ends.

Feedback comes in two shapes. Detailed feedback lists each violated
constraint with its evidence so the generator can fix specifics; boolean
feedback only says the output failed, which isolates how much the evidence
itself contributes to convergence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Literal, Sequence

from .model import VerificationReport

DEFAULT_REPAIR_BUDGET = 15
EVIDENCE_EXCERPT_CHARS = 200

FeedbackMode = Literal["detailed", "boolean"]
BOOLEAN_FEEDBACK = "The response does not satisfy the instruction. Rewrite it so every stated constraint holds."

Generate = Callable[[str, Sequence[tuple[str, str]]], str]
Verify = Callable[[str, str], VerificationReport]


class RepairError(Exception):
    pass


class RepairAborted(RepairError):
    """A generate or verify call failed; carries the transcript so far."""

    def __init__(self, message: str, transcript: "RepairTranscript") -> None:
        super().__init__(message)
        self.transcript = transcript


@dataclass(frozen=True)
class RepairTurn:
    iteration: int
    output: str
    verdict: str
    violated: tuple[str, ...]
    feedback: str | None


@dataclass(frozen=True)
class RepairTranscript:
    instruction: str
    turns: tuple[RepairTurn, ...]
    outcome: Literal["converged", "budget_exhausted"]

    @property
    def iterations(self) -> int:
        return len(self.turns)

    @property
    def final_output(self) -> str:
        return self.turns[-1].output if self.turns else ""


def render_feedback(
    report: VerificationReport, mode: FeedbackMode = "detailed"
) -> str:
    """Feedback text for a failed report; satisfied reports have none."""
    if report.overall == "sat":
        raise RepairError("cannot render repair feedback for a satisfied report")
    if mode == "boolean":
        return BOOLEAN_FEEDBACK
    if mode != "detailed":
        raise RepairError(f"unknown feedback mode {mode!r}")
    summaries = {c.id: c.summary for c in report.constraints}
    evidence = {r.constraint_id: r.evidence for r in report.results}
    lines = ["The response violates these constraints:"]
    for cid in report.violated:
        parts = [cid]
        summary = summaries.get(cid, "")
        if summary:
            parts.append(summary)
        excerpt = evidence.get(cid, "")[:EVIDENCE_EXCERPT_CHARS]
        if excerpt:
            parts.append(excerpt)
        lines.append("- " + ": ".join(parts))
    lines.append("Rewrite the response so every constraint holds.")
    return "\n".join(lines)


def repair_until_sat(
    instruction: str,
    generate: Generate,
    verify: Verify,
    *,
    budget: int = DEFAULT_REPAIR_BUDGET,
    feedback_mode: FeedbackMode = "detailed",
) -> RepairTranscript:
    """Generate, verify, and re-generate with feedback, at most `budget` turns."""
    if budget < 1:
        raise RepairError("repair budget must be at least 1")
    turns: list[RepairTurn] = []
    history: list[tuple[str, str]] = []
    for iteration in range(1, budget + 1):
        try:
            output = generate(instruction, history)
        except Exception as exc:
            raise RepairAborted(
                f"generation failed on turn {iteration}: {exc}",
                RepairTranscript(instruction, tuple(turns), "budget_exhausted"),
            ) from exc
        try:
            report = verify(instruction, output)
        except Exception as exc:
            raise RepairAborted(
                f"verification failed on turn {iteration}: {exc}",
                RepairTranscript(instruction, tuple(turns), "budget_exhausted"),
            ) from exc
        if report.overall == "sat":
            turns.append(RepairTurn(iteration, output, "sat", (), None))
            return RepairTranscript(instruction, tuple(turns), "converged")
        feedback = render_feedback(report, feedback_mode)
        turns.append(
            RepairTurn(iteration, output, "unsat", tuple(report.violated), feedback)
        )
        history.append((output, feedback))
    return RepairTranscript(instruction, tuple(turns), "budget_exhausted")


def transcript_to_dict(transcript: RepairTranscript) -> dict[str, Any]:
    return {
        "instruction": transcript.instruction,
        "outcome": transcript.outcome,
        "iterations": transcript.iterations,
        "turns": [
            {
                "iteration": turn.iteration,
                "output": turn.output,
                "verdict": turn.verdict,
                "violated": list(turn.violated),
                "feedback": turn.feedback,
            }
            for turn in transcript.turns
        ],
    }


def write_transcript(transcript: RepairTranscript, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(transcript_to_dict(transcript), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
