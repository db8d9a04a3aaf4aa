"""Prompt text for the verifier's model calls.

Three roles: the formulation call decomposes an instruction into
per-constraint verifier modules, the checking call turns one module into an
executable checker (a Python program for mechanically checkable constraints,
a yes/no judging prompt otherwise), and the baseline call asks one model to
judge the whole pair directly. Wire formats here are load-bearing: cassettes
key on the exact prompt bytes, so edits invalidate recorded fixtures.
"""

from __future__ import annotations

import json

FORMULATION_SYSTEM = """\
You decompose a writing instruction into independently checkable constraints and plan one verifier module per constraint.

Read the instruction and the candidate answer. List every explicit constraint the instruction places on the answer. For each constraint decide its module type:
- "symbolic": a short standalone Python program using only the standard library can decide it mechanically (counts, exact strings, substrings, headings, word positions).
- "neural": deciding it needs reading comprehension or judgment (topic, tone, style, factuality).

Respond with ONLY a JSON object, no prose before or after, shaped exactly like:
{
  "reasoning_steps": ["<your reasoning, step by step>"],
  "workflow": [
    {
      "module_type": "symbolic",
      "purpose": "<what this module verifies>",
      "constraints_addressed": "<the single constraint this module covers, quoted or paraphrased from the instruction>",
      "module_specification": "<precise description of the check to perform>",
      "input_output": "<what the module reads and what it reports>"
    }
  ]
}

Emit exactly one workflow entry per constraint, in the order the constraints appear in the instruction. Every constraint in the instruction must be covered by exactly one module.
"""

def formulation_user(instruction: str, output: str) -> str:
    return (
        "Here's the question:\n"
        + instruction
        + "\n\nHere's the answer:\n"
        + output
    )


CHECKING_SYSTEM = """\
You build one verifier module for one constraint.

You receive the original instruction, the candidate answer, and a module plan naming a single constraint. Produce the verifier:
- If the constraint is mechanically checkable, write a complete standalone Python program (standard library only). Embed the candidate answer in the program as a literal. The program must print exactly one final line: "sat" if the answer satisfies the constraint, "unsat" otherwise. No network, no file reads, no user input.
- If the constraint needs judgment instead, write a judging prompt for another model and assign it to a Python variable named prompt using a triple-quoted string. The prompt must contain the constraint and the candidate answer, and must instruct the judge to reply YES if the answer satisfies the constraint and NO otherwise.

Respond with ONLY a JSON object, no prose before or after, shaped exactly like:
{
  "reasoning_steps": [""],
  "workflow": [
    {
      "constraint_description": "<the constraint being verified>",
      "constraint_type": "<symbolic or neural>",
      "verifier_module": "<the Python program, or the prompt variable assignment>"
    }
  ]
}

Emit exactly one workflow entry.
"""


def checking_user(
    instruction: str,
    output: str,
    module: dict[str, str],
    formula_text: str,
) -> str:
    return (
        "Here's the question:\n"
        + instruction
        + "\n\nHere's the answer:\n"
        + output
        + "\n\nHere's the module plan:\n"
        + json.dumps(module, sort_keys=True, ensure_ascii=False, indent=2)
        + "\n\nThe overall requirement formula is: "
        + formula_text
    )


def reflection_user(previous_user: str, program_or_reply: str, error: str) -> str:
    """Follow-up request after a verifier module failed to run or parse."""
    return (
        previous_user
        + "\n\nYour previous verifier module was:\n"
        + program_or_reply
        + "\n\nIt failed with:\n"
        + error
        + "\n\nFix the problem and respond again with only the JSON object."
    )


def fallback_judge_prompt(summary: str, instruction: str, output: str) -> str:
    return (
        "Decide whether the answer satisfies one specific constraint.\n\n"
        + "Constraint: "
        + summary
        + "\n\nInstruction:\n"
        + instruction
        + "\n\nAnswer:\n"
        + output
        + "\n\nReply YES if the answer satisfies the constraint, NO otherwise. "
        + "Reply with YES or NO only."
    )


JUDGE_SYSTEM = "You are a careful verifier. Answer YES or NO only."


BASELINE_SYSTEM = """\
You judge whether an answer follows every instruction it was given.

Reply with ONLY a JSON object of the form {"is_sat": "sat"} when the answer satisfies every constraint in the instruction, or {"is_sat": "unsat"} when it misses any of them. ONLY OUTPUT THE JSON, NOTHING ELSE.

Example 1.
Instruction: Write one sentence about lighthouses and do not use the word "sea".
Answer: A lighthouse guides ships safely along rocky coastlines at night.
Reply: {"is_sat": "sat"}

Example 2.
Instruction: Write one sentence about lighthouses and do not use the word "sea".
Answer: A lighthouse stands where the sea meets the shore.
Reply: {"is_sat": "unsat"}
"""


def baseline_user(instruction: str, output: str) -> str:
    return (
        "Instruction:\n"
        + instruction
        + "\n\nAnswer:\n"
        + output
        + "\n\nReply with the JSON verdict."
    )


GENERATION_SYSTEM = (
    "You write text that satisfies every constraint in the instruction. "
    "Reply with the text only, no commentary."
)


def generation_user(instruction: str, history: list[tuple[str, str]]) -> str:
    """Repair-loop generation request carrying the full attempt history."""
    parts = [instruction]
    for index, (output, feedback) in enumerate(history, start=1):
        parts.append(f"\n\n--- attempt {index} output ---\n{output}")
        parts.append(f"\n\n--- attempt {index} feedback ---\n{feedback}")
    if history:
        parts.append(
            "\n\nWrite a new version that fixes the feedback. Reply with the text only."
        )
    return "".join(parts)


def synthesis_user(instruction: str, feedback: str | None, attempt: int) -> str:
    """Benchmark generation request; revisions ask for a changed variant."""
    if attempt == 0 and not feedback:
        return instruction
    note = feedback or "produce a noticeably different variant"
    return instruction + f"\n\n--- revision {attempt} ---\n{note}"


def parse_retry_user(previous_user: str, error: str, attempt: int) -> str:
    """Follow-up request after a reply failed JSON parsing.

    The attempt index keeps repeated retries byte-distinct, so each retry is
    a fresh request rather than a replay of the failed one.
    """
    return (
        previous_user
        + "\n\nYour previous reply could not be parsed (attempt "
        + str(attempt)
        + ": "
        + error
        + "). Respond again with only the JSON object, no prose, no code fences."
    )
