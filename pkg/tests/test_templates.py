"""Template rendering and parsing: every line is frozen and invertible."""

import dataclasses
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from nsvif.model import LOGIC_TAXONOMIES, normalize_constraint_id
from nsvif.templates import (
    DEFAULT_RESPONSE_BOOKEND,
    DEFAULT_SUBSECTION_BOOKEND,
    INSTRUCTION_HEADER,
    RENDER_ORDER,
    TemplateError,
    constraint_summary,
    constraints_from_instruction,
    make_constraint,
    parse_instruction,
    parse_instruction_line,
    render_constraint_line,
    render_instruction,
)

FIXTURES = Path(__file__).parent / "fixtures"

SAMPLE_PARAMS = {
    "writing_topic": {"topic": "x"},
    "writing_tone": {"tone": "x"},
    "keyword_inclusion": {"keywords": ["x"]},
    "keyword_exclusion": {"keywords": ["x"]},
    "response_title": {"title": "x"},
    "subsection_titles": {"titles": ["x"]},
    "words_per_sentence": {"max_words": 8, "strict_less": True},
    "even_odd_word_count": {"parity": "odd"},
    "response_bookend": {},
    "subsection_bookend": {},
    "total_word_count": {"target": 500, "tolerance": 10},
}

HEADING_SUFFIX = (
    " this does not apply to title and subsection title lines."
    " Title and subsection title lines start with at least one #."
)


class TestRenderLines:
    """Each family renders to exactly one frozen English line."""

    @pytest.mark.parametrize(
        ("taxonomy", "params", "line"),
        [
            (
                "writing_topic",
                {"topic": "the benefits of agile project management"},
                "Please write in this topic: the benefits of agile project management",
            ),
            (
                "writing_tone",
                {"tone": "pessimistic"},
                "Please write in this tone: pessimistic",
            ),
            (
                "keyword_inclusion",
                {"keywords": ["scrum", "kanban"]},
                "Include these keywords, check for string inclusion regardless of "
                "capitalization: scrum,kanban",
            ),
            (
                "keyword_exclusion",
                {"keywords": ["waterfall methodology", "pert"]},
                "Exclude these keywords, check for string exclusion regardless of "
                "capitalization: waterfall methodology,pert",
            ),
            (
                "response_title",
                {"title": "The Morning Cup: Better Coffee Brewing at Home"},
                "Include this as the title of the text, titles are lines that start "
                "with only one #: The Morning Cup: Better Coffee Brewing at Home",
            ),
            (
                "subsection_titles",
                {"titles": ["Part One", "Part Two"]},
                "Include these subsection titles in the text, subsection titles are "
                "lines start with more than one #: Part One,Part Two",
            ),
            (
                "words_per_sentence",
                {"max_words": 8, "strict_less": True},
                # the trailing "words.," before the shared suffix is deliberate
                "Please consider this number of words per sentence constraint: "
                "each sentence should have less than 8 words.," + HEADING_SUFFIX,
            ),
            (
                "even_odd_word_count",
                {"parity": "even"},
                "Please consider this even/odd word count constraint: even"
                + HEADING_SUFFIX,
            ),
            (
                "response_bookend",
                {"description": DEFAULT_RESPONSE_BOOKEND},
                "Please consider this word repetition constraint on the entire "
                "response: the response should start and end with the same word,"
                + HEADING_SUFFIX,
            ),
            (
                "subsection_bookend",
                {"description": DEFAULT_SUBSECTION_BOOKEND},
                "Please consider this word repetition constraint on subsections of "
                "the response: each subsection should start and end with the same "
                "word," + HEADING_SUFFIX,
            ),
            (
                "total_word_count",
                {"target": 540, "tolerance": 10},
                "Please consider this word count constraint: around 540 words "
                "(within 10 words difference is ok), this does not apply to title "
                "and subsection title lines, which are defined as: lines that start "
                "with at least one #.",
            ),
        ],
    )
    def test_frozen_line(self, taxonomy, params, line):
        assert render_constraint_line(make_constraint(taxonomy, params)) == line

    def test_bookend_description_defaults(self):
        rendered = render_constraint_line(make_constraint("response_bookend", {}))
        assert DEFAULT_RESPONSE_BOOKEND in rendered
        rendered = render_constraint_line(make_constraint("subsection_bookend", {}))
        assert DEFAULT_SUBSECTION_BOOKEND in rendered

    def test_word_count_tolerance_defaults_to_ten(self):
        rendered = render_constraint_line(
            make_constraint("total_word_count", {"target": 500})
        )
        assert "(within 10 words difference is ok)" in rendered

    def test_unknown_taxonomy_raises(self):
        constraint = make_constraint("writing_topic", {"topic": "x"})
        bad = dataclasses.replace(constraint, taxonomy="custom")
        with pytest.raises(TemplateError):
            render_constraint_line(bad)


class TestRenderInstruction:
    def test_header_then_one_line_per_constraint(self):
        constraints = [
            make_constraint("writing_topic", {"topic": "chess"}),
            make_constraint("total_word_count", {"target": 500, "tolerance": 10}),
        ]
        lines = render_instruction(constraints).split("\n")
        assert lines[0] == INSTRUCTION_HEADER
        assert len(lines) == 3

    def test_constraints_are_sorted_into_render_order(self):
        # deliberately reversed input order
        constraints = [
            make_constraint("total_word_count", {"target": 500, "tolerance": 10}),
            make_constraint("writing_tone", {"tone": "formal"}),
            make_constraint("writing_topic", {"topic": "chess"}),
        ]
        lines = render_instruction(constraints).split("\n")
        assert lines[1].startswith("Please write in this topic:")
        assert lines[2].startswith("Please write in this tone:")
        assert lines[3].startswith("Please consider this word count constraint:")

    def test_render_order_covers_all_template_families(self):
        assert len(RENDER_ORDER) == 11
        assert RENDER_ORDER[0] == "writing_topic"
        assert RENDER_ORDER[-1] == "total_word_count"

    def test_empty_constraint_list_raises(self):
        with pytest.raises(TemplateError):
            render_instruction([])

    def test_untemplated_constraint_raises(self):
        constraint = make_constraint("writing_topic", {"topic": "x"})
        with pytest.raises(TemplateError):
            render_instruction([dataclasses.replace(constraint, taxonomy="custom")])

    def test_reproduces_word_count_example_instruction(self):
        agile = (
            "scrum,kanban,iterative delivery,sprint velocity,stakeholder feedback,"
            "backlog prioritization,time-to-market,continuous improvement,"
            "cross-functional teams,adaptability"
        )
        constraints = [
            make_constraint(
                "writing_topic",
                {"topic": "the benefits of agile project management"},
            ),
            make_constraint("writing_tone", {"tone": "pessimistic"}),
            make_constraint("keyword_inclusion", {"keywords": agile.split(",")}),
            make_constraint("total_word_count", {"target": 540, "tolerance": 10}),
        ]
        expected = (FIXTURES / "wordcount_example_instruction.txt").read_text()
        assert render_instruction(constraints) + "\n" == expected

    def test_reproduces_sentence_length_example_instruction(self):
        agile = (
            "scrum,kanban,iterative delivery,sprint velocity,stakeholder feedback,"
            "backlog prioritization,time-to-market,continuous improvement,"
            "cross-functional teams,adaptability"
        )
        excluded = (
            "waterfall methodology,gantt charts,pert,critical path method,"
            "stage-gate,prince2,heavy documentation,iso 9001,rigid scope,cmmi"
        )
        subsections = (
            "Introduction to Agile Principles,Key Advantages Over Traditional "
            "Methodologies,Enhancing Team Collaboration and Communication,Faster "
            "Delivery and Adaptability,Continuous Improvement Through Iterations,"
            "Stakeholder Engagement and Feedback,Case Studies of Agile Success"
        )
        constraints = [
            make_constraint(
                "writing_topic",
                {"topic": "the benefits of agile project management"},
            ),
            make_constraint("writing_tone", {"tone": "optimistic"}),
            make_constraint("keyword_inclusion", {"keywords": agile.split(",")}),
            make_constraint("keyword_exclusion", {"keywords": excluded.split(",")}),
            make_constraint(
                "response_title",
                {"title": "Unlocking Success: The Benefits of Agile Project Management"},
            ),
            make_constraint("subsection_titles", {"titles": subsections.split(",")}),
            make_constraint("words_per_sentence", {"max_words": 8, "strict_less": True}),
        ]
        expected = (FIXTURES / "sentence_example_instruction.txt").read_text()
        assert render_instruction(constraints) + "\n" == expected


class TestParseLines:
    def test_header_is_not_a_constraint_line(self):
        assert parse_instruction_line(INSTRUCTION_HEADER) is None

    def test_prose_is_not_a_constraint_line(self):
        assert parse_instruction_line("Write something nice about agile.") is None

    def test_near_miss_prefix_does_not_parse(self):
        assert parse_instruction_line("please write in this topic: chess") is None

    def test_topic_line_inverts(self):
        line = "Please write in this topic: beginner chess strategy"
        assert parse_instruction_line(line) == (
            "writing_topic",
            {"topic": "beginner chess strategy"},
        )

    def test_keywords_split_on_commas(self):
        line = (
            "Include these keywords, check for string inclusion regardless of "
            "capitalization: sprint velocity,time-to-market"
        )
        assert parse_instruction_line(line) == (
            "keyword_inclusion",
            {"keywords": ["sprint velocity", "time-to-market"]},
        )

    def test_title_keeps_embedded_colon(self):
        title = "Unlocking Success: The Benefits of Agile Project Management"
        line = (
            "Include this as the title of the text, titles are lines that start "
            f"with only one #: {title}"
        )
        assert parse_instruction_line(line) == ("response_title", {"title": title})

    def test_sentence_cap_parses_strict_less(self):
        line = render_constraint_line(
            make_constraint("words_per_sentence", {"max_words": 11, "strict_less": True})
        )
        assert parse_instruction_line(line) == (
            "words_per_sentence",
            {"max_words": 11, "strict_less": True},
        )

    def test_parity_only_accepts_even_or_odd(self):
        good = render_constraint_line(
            make_constraint("even_odd_word_count", {"parity": "odd"})
        )
        assert parse_instruction_line(good) == ("even_odd_word_count", {"parity": "odd"})
        bad = good.replace("odd", "prime")
        assert parse_instruction_line(bad) is None

    def test_word_count_parses_target_and_tolerance_as_ints(self):
        line = render_constraint_line(
            make_constraint("total_word_count", {"target": 560, "tolerance": 10})
        )
        assert parse_instruction_line(line) == (
            "total_word_count",
            {"target": 560, "tolerance": 10},
        )

    def test_bookend_lines_capture_description(self):
        line = render_constraint_line(make_constraint("response_bookend", {}))
        assert parse_instruction_line(line) == (
            "response_bookend",
            {"description": DEFAULT_RESPONSE_BOOKEND},
        )
        line = render_constraint_line(make_constraint("subsection_bookend", {}))
        assert parse_instruction_line(line) == (
            "subsection_bookend",
            {"description": DEFAULT_SUBSECTION_BOOKEND},
        )


_TEXT = st.text(
    alphabet=st.characters(
        min_codepoint=32, max_codepoint=126, blacklist_characters=",\\#"
    ),
    min_size=1,
    max_size=30,
).map(str.strip).filter(bool)

_PARAMS_BY_TAXONOMY = {
    "writing_topic": st.fixed_dictionaries({"topic": _TEXT}),
    "writing_tone": st.fixed_dictionaries({"tone": _TEXT}),
    "keyword_inclusion": st.fixed_dictionaries(
        {"keywords": st.lists(_TEXT, min_size=1, max_size=5)}
    ),
    "keyword_exclusion": st.fixed_dictionaries(
        {"keywords": st.lists(_TEXT, min_size=1, max_size=5)}
    ),
    "response_title": st.fixed_dictionaries({"title": _TEXT}),
    "subsection_titles": st.fixed_dictionaries(
        {"titles": st.lists(_TEXT, min_size=1, max_size=5)}
    ),
    "words_per_sentence": st.fixed_dictionaries(
        {"max_words": st.integers(min_value=2, max_value=60), "strict_less": st.just(True)}
    ),
    "even_odd_word_count": st.fixed_dictionaries(
        {"parity": st.sampled_from(["even", "odd"])}
    ),
    "response_bookend": st.fixed_dictionaries(
        {"description": st.just(DEFAULT_RESPONSE_BOOKEND)}
    ),
    "subsection_bookend": st.fixed_dictionaries(
        {"description": st.just(DEFAULT_SUBSECTION_BOOKEND)}
    ),
    "total_word_count": st.fixed_dictionaries(
        {
            "target": st.integers(min_value=1, max_value=5000),
            "tolerance": st.integers(min_value=0, max_value=99),
        }
    ),
}


@st.composite
def _constraint_sets(draw):
    taxonomies = draw(
        st.lists(
            st.sampled_from(sorted(_PARAMS_BY_TAXONOMY)),
            min_size=1,
            max_size=6,
            unique=True,
        )
    )
    return [
        make_constraint(taxonomy, draw(_PARAMS_BY_TAXONOMY[taxonomy]))
        for taxonomy in taxonomies
    ]


class TestRoundTrip:
    @given(_constraint_sets())
    def test_parse_inverts_render(self, constraints):
        text = render_instruction(constraints)
        parsed = parse_instruction(text)
        rank = {name: index for index, name in enumerate(RENDER_ORDER)}
        expected = sorted(constraints, key=lambda c: rank[c.taxonomy])
        assert [(c.taxonomy, c.params) for c in expected] == parsed

    def test_parse_instruction_keeps_line_order(self):
        text = (FIXTURES / "sentence_example_instruction.txt").read_text()
        taxonomies = [taxonomy for taxonomy, _ in parse_instruction(text)]
        assert taxonomies == [
            "writing_topic",
            "writing_tone",
            "keyword_inclusion",
            "keyword_exclusion",
            "response_title",
            "subsection_titles",
            "words_per_sentence",
        ]


class TestSummaries:
    @pytest.mark.parametrize(
        ("taxonomy", "params", "summary"),
        [
            ("writing_topic", {"topic": "chess"}, "Writing topic: chess"),
            ("writing_tone", {"tone": "formal"}, "Writing tone: formal"),
            (
                "keyword_inclusion",
                {"keywords": ["scrum", "kanban"]},
                "Keyword inclusion: scrum, kanban",
            ),
            (
                "keyword_exclusion",
                {"keywords": ["pert"]},
                "Keyword exclusion: pert",
            ),
            ("response_title", {"title": "A Plan"}, "Response title: A Plan"),
            (
                "subsection_titles",
                {"titles": ["One", "Two"]},
                "Subsection titles: One, Two",
            ),
            (
                "words_per_sentence",
                {"max_words": 8},
                "Words per sentence: fewer than 8",
            ),
            ("even_odd_word_count", {"parity": "odd"}, "Word count parity: odd"),
            (
                "response_bookend",
                {},
                "Response bookend: the response starts and ends with the same word",
            ),
            (
                "subsection_bookend",
                {},
                "Subsection bookend: every subsection starts and ends with the same word",
            ),
            (
                "total_word_count",
                {"target": 540, "tolerance": 10},
                "Total word count: around 540 words (tolerance 10)",
            ),
        ],
    )
    def test_frozen_summary(self, taxonomy, params, summary):
        assert constraint_summary(taxonomy, params) == summary

    def test_summaries_normalize_to_taxonomy_names(self):
        # parity is the one family whose summary wording differs from its
        # taxonomy name, so its derived id does too
        expected_ids = {name: name for name in RENDER_ORDER}
        expected_ids["even_odd_word_count"] = "word_count_parity"
        for taxonomy in RENDER_ORDER:
            summary = constraint_summary(taxonomy, SAMPLE_PARAMS[taxonomy])
            assert normalize_constraint_id(summary) == expected_ids[taxonomy]

    def test_unknown_taxonomy_raises(self):
        with pytest.raises(TemplateError):
            constraint_summary("custom", {})


class TestMakeConstraint:
    def test_id_defaults_to_taxonomy(self):
        constraint = make_constraint("writing_topic", {"topic": "x"})
        assert constraint.id == "writing_topic"

    def test_explicit_id_wins(self):
        constraint = make_constraint("writing_topic", {"topic": "x"}, "topic_2")
        assert constraint.id == "topic_2"

    def test_kind_follows_taxonomy_partition(self):
        for taxonomy in RENDER_ORDER:
            constraint = make_constraint(taxonomy, SAMPLE_PARAMS[taxonomy])
            expected = "logic" if taxonomy in LOGIC_TAXONOMIES else "semantic"
            assert constraint.kind == expected

    def test_params_are_copied(self):
        params = {"keywords": ["scrum"]}
        constraint = make_constraint("keyword_inclusion", params)
        params["keywords"] = ["kanban"]
        assert constraint.params == {"keywords": ["scrum"]}

    def test_constraints_from_instruction(self):
        text = (FIXTURES / "wordcount_example_instruction.txt").read_text()
        constraints = constraints_from_instruction(text)
        assert [c.id for c in constraints] == [
            "writing_topic",
            "writing_tone",
            "keyword_inclusion",
            "total_word_count",
        ]
        assert [c.kind for c in constraints] == ["semantic", "semantic", "logic", "logic"]
        assert constraints[3].params == {"target": 540, "tolerance": 10}
