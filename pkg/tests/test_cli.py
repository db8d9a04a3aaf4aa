"""Command line client: subcommands, exit codes, file outputs."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

import nsvif.cli as cli
from nsvif.config import RunConfig
from nsvif.service import create_app
from nsvif.synth import read_dataset
from nsvif.templates import make_constraint, render_instruction

FIXTURES = Path(__file__).parent / "fixtures"
EXAMPLES_CASSETTE = FIXTURES / "cassettes" / "examples"


def run_cli(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestVerifyCommand:
    def test_satisfied_output_exits_zero(self, capsys):
        instruction = render_instruction(
            [make_constraint("total_word_count", {"target": 3, "tolerance": 1})]
        )
        code, out, _ = run_cli(
            capsys,
            ["verify", "--instruction", instruction, "--output", "one two three"],
        )
        assert code == 0
        body = json.loads(out)
        assert body["overall"] == "sat"
        assert body["violated"] == []

    def test_wordcount_example_exits_one(self, capsys):
        code, out, _ = run_cli(
            capsys,
            [
                "verify",
                "--instruction-file",
                str(FIXTURES / "wordcount_example_instruction.txt"),
                "--output-file",
                str(FIXTURES / "wordcount_example_output.txt"),
            ],
        )
        assert code == 1
        body = json.loads(out)
        assert body["overall"] == "unsat"
        assert body["violated"] == ["total_word_count"]

    def test_replay_backend_reproduces_the_recorded_run(self, capsys):
        # The cassette was recorded under this model name with the trailing
        # newline stripped, so the request must match byte for byte.
        instruction = (
            (FIXTURES / "sentence_example_instruction.txt").read_text().rstrip("\n")
        )
        code, out, _ = run_cli(
            capsys,
            [
                "verify",
                "--backend",
                "replay",
                "--cassette",
                str(EXAMPLES_CASSETTE),
                "--model",
                "scripted-v1",
                "--instruction",
                instruction,
                "--output-file",
                str(FIXTURES / "sentence_example_output.txt"),
            ],
        )
        assert code == 1
        body = json.loads(out)
        assert body["overall"] == "unsat"
        assert "words_per_sentence" in body["violated"]

    def test_conflicting_text_sources_exit_two(self, capsys):
        code, _, err = run_cli(
            capsys,
            [
                "verify",
                "--instruction",
                "x",
                "--output",
                "y",
                "--output-file",
                "z.txt",
            ],
        )
        assert code == 2
        assert err.startswith("error: pass --output or --output-file, not both")

    def test_missing_output_exits_two(self, capsys):
        code, _, err = run_cli(capsys, ["verify", "--instruction", "x"])
        assert code == 2
        assert "one of --output or --output-file is required" in err

    def test_missing_config_file_exits_two(self, capsys):
        code, _, err = run_cli(
            capsys,
            [
                "verify",
                "--instruction",
                "x",
                "--output",
                "y",
                "--config",
                "no-such-config.json",
            ],
        )
        assert code == 2
        assert "cannot load config" in err

    def test_unknown_flag_raises_the_argparse_exit(self):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["verify", "--bogus"])
        assert excinfo.value.code == 2


class TestSynthCommand:
    def test_writes_jsonl_and_prints_stats(self, capsys, tmp_path):
        out_path = tmp_path / "bench.jsonl"
        code, out, _ = run_cli(
            capsys,
            ["synth", "--out", str(out_path), "--seed", "0", "--complexities", "5"],
        )
        assert code == 0
        body = json.loads(out)
        assert body["written"] == str(out_path)
        assert body["stats"]["total"] == 60
        items = read_dataset(out_path)
        assert len(items) == 60
        assert items[0].id == "c05_000"
        assert {item.label for item in items} == {"sat", "unsat"}

    def test_unmatched_complexity_exits_two(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys,
            ["synth", "--out", str(tmp_path / "x.jsonl"), "--complexities", "99"],
        )
        assert code == 2
        assert err.startswith("error: no matching complexity levels")


class TestEvalCommand:
    @pytest.fixture()
    def small_dataset(self, tmp_path):
        lines = (FIXTURES / "e2e_dataset.jsonl").read_text().splitlines()
        items = [json.loads(line) for line in lines]
        sat = [i for i in items if i["label"] == "sat"][:2]
        unsat = [i for i in items if i["label"] == "unsat"][:2]
        path = tmp_path / "subset.jsonl"
        path.write_text("\n".join(json.dumps(i) for i in sat + unsat) + "\n")
        return path

    def test_pipeline_eval_writes_reports(self, capsys, tmp_path, small_dataset):
        metrics_path = tmp_path / "metrics.json"
        predictions_path = tmp_path / "predictions.jsonl"
        code, out, _ = run_cli(
            capsys,
            [
                "eval",
                "--dataset",
                str(small_dataset),
                "--metrics-out",
                str(metrics_path),
                "--predictions-out",
                str(predictions_path),
            ],
        )
        assert code == 0
        body = json.loads(out)
        assert body["metrics"]["total"] == 4
        assert body["metrics"]["errored"] == 0
        assert body["metrics"]["pass_at_1_pct"] == 100.0
        report = json.loads(metrics_path.read_text())
        assert set(report) == {"overall", "by_complexity"}
        assert report["overall"] == body["metrics"]
        rows = [
            json.loads(line)
            for line in predictions_path.read_text().splitlines()
        ]
        assert len(rows) == 4
        assert all(row["predicted"] == row["label"] for row in rows)

    def test_baseline_eval_marks_unsat_items_wrong(self, capsys, small_dataset):
        code, out, _ = run_cli(
            capsys,
            ["eval", "--dataset", str(small_dataset), "--verifier", "baseline"],
        )
        assert code == 0
        metrics = json.loads(out)["metrics"]
        assert metrics["tp"] == 2
        assert metrics["fp"] == 2
        assert metrics["pass_at_1_pct"] == 50.0

    def test_missing_dataset_exits_two(self, capsys):
        code, _, err = run_cli(capsys, ["eval", "--dataset", "no-such.jsonl"])
        assert code == 2
        assert err.startswith("error:")


class TestRepairCommand:
    def test_converging_repair_exits_zero_and_writes_transcript(
        self, capsys, tmp_path
    ):
        transcript_path = tmp_path / "transcript.json"
        code, out, _ = run_cli(
            capsys,
            [
                "repair",
                "--instruction-file",
                str(FIXTURES / "repair_instruction.txt"),
                "--budget",
                "3",
                "--transcript-out",
                str(transcript_path),
            ],
        )
        assert code == 0
        body = json.loads(out)
        assert body["outcome"] == "converged"
        assert body["iterations"] == 1
        saved = json.loads(transcript_path.read_text())
        assert saved == body


class TestServerMode:
    @pytest.fixture()
    def routed_httpx(self, monkeypatch):
        client = TestClient(create_app(RunConfig()))

        def fake_post(url, json=None, timeout=None):
            assert url.startswith("http://svc")
            return client.post(url[len("http://svc") :], json=json)

        monkeypatch.setattr(cli.httpx, "post", fake_post)

    def test_verify_posts_to_the_server(self, capsys, routed_httpx):
        instruction = render_instruction(
            [make_constraint("total_word_count", {"target": 3, "tolerance": 1})]
        )
        code, out, _ = run_cli(
            capsys,
            [
                "verify",
                "--server",
                "http://svc",
                "--instruction",
                instruction,
                "--output",
                "one two three",
            ],
        )
        assert code == 0
        assert json.loads(out)["overall"] == "sat"

    def test_server_errors_exit_two(self, capsys, routed_httpx, tmp_path):
        code, _, err = run_cli(
            capsys,
            [
                "synth",
                "--server",
                "http://svc",
                "--out",
                str(tmp_path / "x.jsonl"),
                "--complexities",
                "99",
            ],
        )
        assert code == 2
        assert err.startswith("error: server returned 422")


class TestParserShape:
    def test_serve_defaults(self):
        args = cli.build_parser().parse_args(["serve"])
        assert args.func is cli._cmd_serve
        assert args.host == "127.0.0.1"
        assert args.port == 8000

    def test_every_subcommand_is_registered(self):
        parser = cli.build_parser()
        actions = [
            a for a in parser._actions if isinstance(a, type(parser._subparsers._group_actions[0]))
        ]
        choices = set(actions[0].choices)
        assert choices == {"verify", "synth", "eval", "repair", "serve"}
