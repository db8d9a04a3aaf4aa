"""Command line client for the verifier service.

Every subcommand builds the same request models the HTTP API accepts and
either calls the handlers in-process (default) or posts them to a running
server (--server). Exit codes: 0 satisfied/converged, 1 not satisfied,
2 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import httpx
from fastapi import HTTPException

from .config import ConfigError, RunConfig, load_config
from .evalharness import Prediction, write_predictions_jsonl
from .model import bench_item_to_dict
from .service import (
    EvalRequest,
    RepairRequest,
    SynthRequest,
    VerifyRequest,
    handle_eval,
    handle_repair,
    handle_synth,
    handle_verify,
)
from .synth import read_dataset

EXIT_SAT = 0
EXIT_UNSAT = 1
EXIT_ERROR = 2


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _text_arg(inline: str | None, file_path: str | None, name: str) -> str:
    if inline is not None and file_path is not None:
        raise ConfigError(f"pass --{name} or --{name}-file, not both")
    if inline is not None:
        return inline
    if file_path is not None:
        return _read_text(file_path)
    raise ConfigError(f"one of --{name} or --{name}-file is required")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument(
        "--backend",
        choices=["live", "replay", "record", "scripted"],
        help="completion backend (default: scripted)",
    )
    parser.add_argument("--cassette", help="cassette file or directory")
    parser.add_argument("--model", help="model name sent to the backend")
    parser.add_argument(
        "--mode",
        choices=["standard", "strict"],
        help="verdict composition mode",
    )
    parser.add_argument(
        "--server",
        help="base URL of a running service; posts there instead of running in-process",
    )


def _config_from(args: argparse.Namespace) -> RunConfig:
    return load_config(
        args.config,
        overrides={
            "backend": args.backend,
            "cassette": args.cassette,
            "model": args.model,
            "mode": args.mode,
        },
    )


def _post(server: str, route: str, payload: dict[str, Any]) -> dict[str, Any]:
    response = httpx.post(
        server.rstrip("/") + route, json=payload, timeout=600.0
    )
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise ConfigError(f"server returned {response.status_code}: {detail}")
    return response.json()


def _emit(data: dict[str, Any]) -> None:
    print(json.dumps(data, indent=2, ensure_ascii=False))


def _cmd_verify(args: argparse.Namespace) -> int:
    request = VerifyRequest(
        instruction=_text_arg(args.instruction, args.instruction_file, "instruction"),
        output=_text_arg(args.output, args.output_file, "output"),
        mode=args.mode,
    )
    if args.server:
        data = _post(args.server, "/verify", request.model_dump())
    else:
        data = handle_verify(_config_from(args), request).model_dump()
    _emit(data)
    return EXIT_SAT if data["overall"] == "sat" else EXIT_UNSAT


def _cmd_synth(args: argparse.Namespace) -> int:
    complexities = (
        [int(piece) for piece in args.complexities.split(",")]
        if args.complexities
        else None
    )
    request = SynthRequest(
        seed=args.seed, pools_path=args.pools, complexities=complexities
    )
    if args.server:
        data = _post(args.server, "/synth", request.model_dump())
    else:
        data = handle_synth(_config_from(args), request).model_dump()
    lines = [
        json.dumps(item, sort_keys=True, ensure_ascii=False) for item in data["items"]
    ]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _emit({"written": args.out, "stats": data["stats"]})
    return EXIT_SAT


def _cmd_eval(args: argparse.Namespace) -> int:
    items = read_dataset(args.dataset)
    request = EvalRequest(
        items=[bench_item_to_dict(item) for item in items],
        verifier=args.verifier,
        mode=args.mode,
    )
    if args.server:
        data = _post(args.server, "/eval", request.model_dump())
    else:
        data = handle_eval(_config_from(args), request).model_dump()
    if args.metrics_out:
        Path(args.metrics_out).write_text(
            json.dumps(
                {"overall": data["metrics"], "by_complexity": data["by_complexity"]},
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
    if args.predictions_out:
        predictions = [
            Prediction(
                item_id=p["item_id"],
                complexity=p["complexity"],
                label=p["label"],
                predicted=p["predicted"],
                error=p.get("error"),
            )
            for p in data["predictions"]
        ]
        write_predictions_jsonl(predictions, args.predictions_out)
    _emit({"metrics": data["metrics"], "by_complexity": data["by_complexity"]})
    return EXIT_SAT


def _cmd_repair(args: argparse.Namespace) -> int:
    request = RepairRequest(
        instruction=_text_arg(args.instruction, args.instruction_file, "instruction"),
        budget=args.budget,
        feedback_mode=args.feedback_mode,
    )
    if args.server:
        data = _post(args.server, "/repair", request.model_dump())
    else:
        data = handle_repair(_config_from(args), request).model_dump()
    if args.transcript_out:
        Path(args.transcript_out).write_text(
            json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    _emit(data)
    return EXIT_SAT if data["outcome"] == "converged" else EXIT_UNSAT


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_config_from(args))
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_SAT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsvif",
        description="Verify LLM outputs against instructions by constraint "
        "decomposition, per-constraint checking, and formula composition.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    verify = subparsers.add_parser(
        "verify", help="decide whether an output follows an instruction"
    )
    verify.add_argument("--instruction", help="instruction text")
    verify.add_argument("--instruction-file", help="file holding the instruction")
    verify.add_argument("--output", help="output text to check")
    verify.add_argument("--output-file", help="file holding the output")
    _add_common(verify)
    verify.set_defaults(func=_cmd_verify)

    synth = subparsers.add_parser(
        "synth", help="synthesize a labeled benchmark dataset"
    )
    synth.add_argument("--out", required=True, help="dataset JSONL path to write")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--pools", help="value pools JSON (default: bundled pools)")
    synth.add_argument(
        "--complexities", help="comma-separated complexity levels to include"
    )
    _add_common(synth)
    synth.set_defaults(func=_cmd_synth)

    evaluate = subparsers.add_parser(
        "eval", help="score a verifier against a labeled dataset"
    )
    evaluate.add_argument("--dataset", required=True, help="dataset JSONL path")
    evaluate.add_argument(
        "--verifier",
        choices=["pipeline", "baseline"],
        default="pipeline",
        help="decomposed pipeline or single-call baseline judge",
    )
    evaluate.add_argument("--metrics-out", help="write the metrics report here")
    evaluate.add_argument("--predictions-out", help="write per-item predictions here")
    _add_common(evaluate)
    evaluate.set_defaults(func=_cmd_eval)

    repair = subparsers.add_parser(
        "repair", help="regenerate an output until it verifies"
    )
    repair.add_argument("--instruction", help="instruction text")
    repair.add_argument("--instruction-file", help="file holding the instruction")
    repair.add_argument("--budget", type=int, help="maximum generation turns")
    repair.add_argument(
        "--feedback-mode", choices=["detailed", "boolean"], default="detailed"
    )
    repair.add_argument("--transcript-out", help="write the full transcript here")
    _add_common(repair)
    repair.set_defaults(func=_cmd_repair)

    serve = subparsers.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    _add_common(serve)
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except HTTPException as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # verdicts must never be guessed on failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
