"""Build the committed replay fixtures: the 20-item dataset and cassettes.

Run from the repository root. Deletes and re-records the cassette files, so
the committed fixtures always correspond to the current prompts and the
deterministic scripted transport.

    python3 scripts/record_fixtures.py
"""

from __future__ import annotations

import shutil
from pathlib import Path

from nsvif import Gateway, ScriptedTransport, VerifierPipeline, write_dataset
from nsvif.config import RunConfig
from nsvif.service import RepairRequest, handle_repair
from nsvif.synth import COMPLEXITY_GROUPS, default_pools, synthesize_dataset

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
CASSETTES = FIXTURES / "cassettes"
MODEL = "scripted-v1"

# Slices chosen so the 20-item replay set splits exactly 10 sat / 10 unsat:
# even indexes are sat rounds, so [0:5] gives 3 sat and [1:6] gives 2.
E2E_SLICES = {2: slice(0, 5), 5: slice(1, 6), 7: slice(0, 5), 10: slice(1, 6)}


def build_e2e_dataset() -> Path:
    pools = default_pools()
    groups = [g for g in COMPLEXITY_GROUPS if g.complexity in E2E_SLICES]
    items = synthesize_dataset(pools, seed=0, groups=groups)
    chosen = []
    for group in groups:
        level_items = [i for i in items if i.complexity == group.complexity]
        chosen.extend(level_items[E2E_SLICES[group.complexity]])
    sat = sum(1 for item in chosen if item.label == "sat")
    assert len(chosen) == 20 and sat == 10, (len(chosen), sat)
    path = FIXTURES / "e2e_dataset.jsonl"
    write_dataset(chosen, path)
    print(f"wrote {path} ({len(chosen)} items, {sat} sat)")
    return path


def fresh_gateway(name: str) -> Gateway:
    cassette_dir = CASSETTES / name
    if cassette_dir.exists():
        shutil.rmtree(cassette_dir)
    cassette_dir.mkdir(parents=True)
    return Gateway("record", transport=ScriptedTransport(), cassette=cassette_dir)


def record_examples() -> None:
    gateway = fresh_gateway("examples")
    pipeline = VerifierPipeline(gateway, model=MODEL)
    for tag in ("wordcount_example", "sentence_example"):
        instruction = (FIXTURES / f"{tag}_instruction.txt").read_text(
            encoding="utf-8"
        ).rstrip("\n")
        output = (FIXTURES / f"{tag}_output.txt").read_text(encoding="utf-8")
        report = pipeline.verify(instruction, output)
        print(f"examples cassette: {tag} -> {report.overall} {report.violated}")


def record_e2e(dataset_path: Path) -> None:
    from nsvif.synth import read_dataset

    gateway = fresh_gateway("e2e")
    pipeline = VerifierPipeline(gateway, model=MODEL)
    items = read_dataset(dataset_path)
    agree = 0
    for item in items:
        report = pipeline.verify(item.instruction, item.output)
        agree += report.overall == item.label
        pipeline.baseline_judge(item.instruction, item.output)
    print(f"e2e cassette: verifier agreed with labels on {agree}/{len(items)}")


def record_repair() -> None:
    gateway_dir = CASSETTES / "repair"
    if gateway_dir.exists():
        shutil.rmtree(gateway_dir)
    gateway_dir.mkdir(parents=True)
    config = RunConfig(model=MODEL, backend="record", cassette=str(gateway_dir))
    pools = default_pools()
    groups = [g for g in COMPLEXITY_GROUPS if g.complexity == 7]
    items = synthesize_dataset(pools, seed=0, groups=groups)
    instruction = items[0].instruction
    (FIXTURES / "repair_instruction.txt").write_text(
        instruction + "\n", encoding="utf-8"
    )
    response = handle_repair(config, RepairRequest(instruction=instruction))
    print(
        f"repair cassette: {response.outcome} in {response.iterations} iteration(s)"
    )


def main() -> None:
    dataset_path = build_e2e_dataset()
    record_examples()
    record_e2e(dataset_path)
    record_repair()


if __name__ == "__main__":
    main()
