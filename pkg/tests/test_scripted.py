"""The deterministic writer and transport that power offline runs."""

from pathlib import Path

import pytest

from nsvif import prompts
from nsvif.gateway import ChatRequest, Gateway
from nsvif.model import TokenUsage
from nsvif.pipeline import VerifierPipeline, extract_json_object
from nsvif.scripted import ScriptedTransport, TemplateWriter
from nsvif.templates import make_constraint, render_instruction
from nsvif.textchecks import body_naive_count, run_builtin, segment_document

FIXTURES = Path(__file__).parent / "fixtures"


def _ok(taxonomy, params, text):
    return run_builtin(taxonomy, params, text, taxonomy).verdict


def _request(system, user):
    return ChatRequest(model="m", system=system, user=user, temperature=0.2)


class TestCountedPath:
    def setup_method(self):
        self.instruction = (
            (FIXTURES / "wordcount_example_instruction.txt").read_text().rstrip("\n")
        )
        self.text = TemplateWriter()(self.instruction)

    def test_hits_the_word_target_exactly(self):
        assert body_naive_count(segment_document(self.text)) == 540

    def test_word_count_check_passes(self):
        assert _ok("total_word_count", {"target": 540, "tolerance": 10}, self.text)

    def test_tone_is_mentioned(self):
        assert "The voice stays pessimistic from start to finish." in self.text

    def test_every_keyword_is_included(self):
        keywords = [
            "scrum",
            "kanban",
            "iterative delivery",
            "sprint velocity",
            "stakeholder feedback",
            "backlog prioritization",
            "time-to-market",
            "continuous improvement",
            "cross-functional teams",
            "adaptability",
        ]
        assert _ok("keyword_inclusion", {"keywords": keywords}, self.text)

    def test_deterministic(self):
        assert TemplateWriter()(self.instruction) == self.text


FULL_SET = [
    ("writing_topic", {"topic": "the benefits of agile project management"}),
    ("writing_tone", {"tone": "formal"}),
    ("keyword_inclusion", {"keywords": ["scrum", "sprint velocity"]}),
    ("keyword_exclusion", {"keywords": ["pert", "cmmi"]}),
    ("response_title", {"title": "A Study In Steady Delivery"}),
    ("subsection_titles", {"titles": ["Before", "During", "After"]}),
    ("words_per_sentence", {"max_words": 8, "strict_less": True}),
    ("even_odd_word_count", {"parity": "odd"}),
    ("response_bookend", {}),
    ("subsection_bookend", {}),
]


class TestStructuredPath:
    def setup_method(self):
        constraints = [make_constraint(t, p) for t, p in FULL_SET]
        self.instruction = render_instruction(constraints)
        self.text = TemplateWriter()(self.instruction)

    @pytest.mark.parametrize(
        ("taxonomy", "params"),
        [(t, p) for t, p in FULL_SET if t not in ("writing_topic", "writing_tone")],
    )
    def test_every_mechanical_constraint_holds(self, taxonomy, params):
        result = run_builtin(taxonomy, params, self.text, taxonomy)
        assert result.verdict is True, (taxonomy, result.evidence)

    def test_attempt_index_flips_parity_when_unconstrained(self):
        free = [t for t in FULL_SET if t[0] != "even_odd_word_count"]
        instruction = render_instruction([make_constraint(t, p) for t, p in free])
        writer = TemplateWriter()
        counts = [
            body_naive_count(segment_document(writer(instruction, None, a)))
            for a in (0, 1)
        ]
        assert counts[0] % 2 != counts[1] % 2

    def test_parity_constraint_pins_across_attempts(self):
        writer = TemplateWriter()
        for attempt in (0, 1, 2):
            text = writer(self.instruction, None, attempt)
            assert _ok("even_odd_word_count", {"parity": "odd"}, text)

    def test_exclusions_steer_filler_and_anchor_words(self):
        constraints = [
            make_constraint("keyword_exclusion", {"keywords": ["echo", "plans", "daily"]}),
            make_constraint("subsection_bookend", {}),
        ]
        instruction = render_instruction(constraints)
        text = TemplateWriter()(instruction)
        assert _ok("keyword_exclusion", {"keywords": ["echo", "plans", "daily"]}, text)
        assert _ok("subsection_bookend", {}, text)

    def test_generic_subsections_appear_when_only_bookend_demands_them(self):
        instruction = render_instruction([make_constraint("subsection_bookend", {})])
        text = TemplateWriter()(instruction)
        assert "## Part One" in text
        assert "## Part Two" in text


class TestScriptedTransportDispatch:
    def setup_method(self):
        self.transport = ScriptedTransport()

    def test_judge_prompts_answer_yes(self):
        text, _ = self.transport.complete(_request(prompts.JUDGE_SYSTEM, "Tone ok?"))
        assert text == "YES"

    def test_baseline_prompts_answer_sat(self):
        text, _ = self.transport.complete(_request(prompts.BASELINE_SYSTEM, "pair"))
        assert extract_json_object(text) == {"is_sat": "sat"}

    def test_unknown_prompt_family_raises(self):
        with pytest.raises(ValueError, match="unknown prompt family"):
            self.transport.complete(_request("You are a pirate.", "arr"))

    def test_usage_scales_with_text_lengths(self):
        _, usage = self.transport.complete(_request(prompts.JUDGE_SYSTEM, "x" * 400))
        assert isinstance(usage, TokenUsage)
        assert usage[0] > 0

    def test_formulation_decomposes_template_instructions(self):
        instruction = (
            (FIXTURES / "wordcount_example_instruction.txt").read_text().rstrip("\n")
        )
        user = prompts.formulation_user(instruction, "some answer")
        text, _ = self.transport.complete(_request(prompts.FORMULATION_SYSTEM, user))
        workflow = extract_json_object(text)["workflow"]
        assert [entry["module_type"] for entry in workflow] == [
            "neural",
            "neural",
            "symbolic",
            "symbolic",
        ]
        assert workflow[2]["constraints_addressed"].startswith("Keyword inclusion:")
        assert workflow[3]["constraints_addressed"].startswith("Total word count:")

    def test_formulation_of_free_text_yields_one_neural_module(self):
        user = prompts.formulation_user("Write a haiku about rain.", "some answer")
        text, _ = self.transport.complete(_request(prompts.FORMULATION_SYSTEM, user))
        workflow = extract_json_object(text)["workflow"]
        assert len(workflow) == 1
        assert workflow[0]["module_type"] == "neural"

    def test_checking_reply_for_neural_module_is_a_prompt(self):
        module = {
            "module_type": "neural",
            "purpose": "judge tone",
            "constraints_addressed": "Writing tone: formal",
            "module_specification": "judge the tone",
            "input_output": "text in, YES/NO out",
        }
        user = prompts.checking_user("instr", "answer text", module, "writing_tone")
        text, _ = self.transport.complete(_request(prompts.CHECKING_SYSTEM, user))
        verifier = extract_json_object(text)["workflow"][0]["verifier_module"]
        assert verifier.startswith('prompt = """')
        assert "Writing tone: formal" in verifier
        assert "answer text" in verifier

    def test_checking_reply_for_symbolic_module_is_a_program(self):
        module = {
            "module_type": "symbolic",
            "purpose": "check digits",
            "constraints_addressed": "the answer avoids digits",
            "module_specification": "scan for digits",
            "input_output": "text in, verdict out",
        }
        user = prompts.checking_user("instr", "answer text", module, "no_digits")
        text, _ = self.transport.complete(_request(prompts.CHECKING_SYSTEM, user))
        verifier = extract_json_object(text)["workflow"][0]["verifier_module"]
        assert 'print("sat")' in verifier

    def test_generation_delegates_to_the_writer(self):
        instruction = (
            (FIXTURES / "wordcount_example_instruction.txt").read_text().rstrip("\n")
        )
        user = prompts.generation_user(instruction, [])
        text, _ = self.transport.complete(_request(prompts.GENERATION_SYSTEM, user))
        assert body_naive_count(segment_document(text)) == 540

    def test_generation_varies_with_revision_history(self):
        instruction = render_instruction(
            [make_constraint("writing_topic", {"topic": "steady work"})]
        )
        first = prompts.generation_user(instruction, [])
        second = prompts.generation_user(instruction, [("draft one", "too samey")])
        text_a, _ = self.transport.complete(_request(prompts.GENERATION_SYSTEM, first))
        text_b, _ = self.transport.complete(_request(prompts.GENERATION_SYSTEM, second))
        assert text_a != text_b


class TestScriptedEndToEnd:
    """The live pipeline over the scripted transport, no cassette involved."""

    def _pipeline(self):
        gateway = Gateway("live", transport=ScriptedTransport())
        return VerifierPipeline(gateway, model="scripted-v1")

    def test_word_count_example_is_unsat_on_the_count(self):
        instruction = (
            (FIXTURES / "wordcount_example_instruction.txt").read_text().rstrip("\n")
        )
        output = (FIXTURES / "wordcount_example_output.txt").read_text()
        report = self._pipeline().verify(instruction, output)
        assert report.overall == "unsat"
        assert report.violated == ("total_word_count",)
        methods = {r.constraint_id: r.method for r in report.results}
        assert methods["total_word_count"] == "builtin"
        assert methods["writing_topic"] == "llm_judge"
        assert methods["writing_tone"] == "llm_judge"

    def test_sentence_example_is_unsat_on_exclusion_and_sentence_length(self):
        instruction = (
            (FIXTURES / "sentence_example_instruction.txt").read_text().rstrip("\n")
        )
        output = (FIXTURES / "sentence_example_output.txt").read_text()
        report = self._pipeline().verify(instruction, output)
        assert report.overall == "unsat"
        assert report.violated == ("keyword_exclusion", "words_per_sentence")
