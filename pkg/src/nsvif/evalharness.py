"""Scoring verifier predictions against labeled benchmark items.

The satisfied verdict is the positive class. Ratios are kept as exact
rationals and are None when their denominator is zero; items whose
verification raised are excluded from the confusion counts but recorded,
so tp + fp + fn + tn + errored always equals the number of items scored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from .model import BenchItem

Verifier = Callable[[BenchItem], str]


@dataclass(frozen=True)
class Prediction:
    item_id: str
    complexity: int
    label: str
    predicted: str | None
    error: str | None = None


@dataclass
class Metrics:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    errored: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn + self.errored

    @property
    def precision(self) -> Fraction | None:
        claimed = self.tp + self.fp
        return Fraction(self.tp, claimed) if claimed else None

    @property
    def recall(self) -> Fraction | None:
        actual = self.tp + self.fn
        return Fraction(self.tp, actual) if actual else None

    @property
    def f1(self) -> Fraction | None:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return None
        return 2 * p * r / (p + r)

    @property
    def pass_at_1(self) -> Fraction | None:
        # Accuracy of the first verdict; an errored item is a miss.
        return Fraction(self.tp + self.tn, self.total) if self.total else None

    def add(self, label: str, predicted: str | None) -> None:
        if predicted not in ("sat", "unsat"):
            self.errored += 1
        elif label == "sat":
            self.tp += 1 if predicted == "sat" else 0
            self.fn += 1 if predicted == "unsat" else 0
        else:
            self.fp += 1 if predicted == "sat" else 0
            self.tn += 1 if predicted == "unsat" else 0


def score_predictions(predictions: Iterable[Prediction]) -> Metrics:
    metrics = Metrics()
    for prediction in predictions:
        metrics.add(prediction.label, prediction.predicted)
    return metrics


def evaluate_verifier(
    items: Sequence[BenchItem], verifier: Verifier
) -> tuple[Metrics, list[Prediction]]:
    """Run the verifier over every item; a raised error becomes a recorded miss."""
    predictions: list[Prediction] = []
    for item in items:
        predicted: str | None
        error: str | None = None
        try:
            predicted = verifier(item)
        except Exception as exc:  # scored, not fatal
            predicted = None
            error = f"{type(exc).__name__}: {exc}"
        if predicted not in ("sat", "unsat"):
            if error is None:
                error = f"verdict {predicted!r} is not sat or unsat"
            predicted = None
        predictions.append(
            Prediction(
                item_id=item.id,
                complexity=item.complexity,
                label=item.label,
                predicted=predicted,
                error=error,
            )
        )
    return score_predictions(predictions), predictions


def breakdown_by_complexity(predictions: Sequence[Prediction]) -> dict[int, Metrics]:
    grouped: dict[int, Metrics] = {}
    for prediction in predictions:
        grouped.setdefault(prediction.complexity, Metrics()).add(
            prediction.label, prediction.predicted
        )
    return dict(sorted(grouped.items()))


def _fraction_fields(value: Fraction | None) -> tuple[str | None, float | None]:
    if value is None:
        return None, None
    pct = (Decimal(value.numerator) * 100 / Decimal(value.denominator)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )
    return f"{value.numerator}/{value.denominator}", float(pct)


def metrics_to_dict(metrics: Metrics) -> dict[str, Any]:
    out: dict[str, Any] = {
        "total": metrics.total,
        "tp": metrics.tp,
        "fp": metrics.fp,
        "fn": metrics.fn,
        "tn": metrics.tn,
        "errored": metrics.errored,
    }
    for name in ("precision", "recall", "f1", "pass_at_1"):
        exact, pct = _fraction_fields(getattr(metrics, name))
        out[name] = exact
        out[f"{name}_pct"] = pct
    return out


def write_metrics_report(
    metrics: Metrics,
    by_complexity: Mapping[int, Metrics],
    path: str | Path,
) -> None:
    report = {
        "overall": metrics_to_dict(metrics),
        "by_complexity": {
            str(level): metrics_to_dict(group) for level, group in by_complexity.items()
        },
    }
    Path(path).write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_predictions_jsonl(
    predictions: Iterable[Prediction], path: str | Path
) -> None:
    lines = [
        json.dumps(
            {
                "item_id": p.item_id,
                "complexity": p.complexity,
                "label": p.label,
                "predicted": p.predicted,
                "error": p.error,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        for p in predictions
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
