"""Relaxed answer matching and dataset-level accuracy.

A prediction counts as correct when it equals the gold answer after light
normalization, or when both parse as numbers and the prediction falls within
a relative tolerance (default 5%) of the gold value.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

_THOUSANDS_COMMA = re.compile(r"(?<=\d),(?=\d)")


class EmptyInput(Exception):
    pass


def normalize_answer(text: str) -> str:
    """Trim, collapse whitespace, and drop currency/percent/thousands marks."""
    out = " ".join(str(text).split())
    if out.startswith("$"):
        out = out[1:].strip()
    if out.endswith("%"):
        out = out[:-1].strip()
    return _THOUSANDS_COMMA.sub("", out)


def parse_number(text: str) -> float | None:
    """The numeric reading of an answer, or None if it has none.

    Accepts thousands separators, a leading $, and a trailing %. Non-finite
    values never count as numbers.
    """
    cleaned = normalize_answer(text)
    if not cleaned:
        return None
    try:
        value = float(cleaned)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def relaxed_match(pred: str, gold: str, tolerance: float = 0.05) -> bool:
    """Correctness of one prediction against one gold answer.

    Numeric pairs compare with relative tolerance |pred - gold| <=
    tolerance * |gold|; a gold of exactly 0 demands an exact 0. Everything
    else compares as case-insensitive normalized text.
    """
    if not 0 <= tolerance < 1:
        raise ValueError(f"tolerance must be in [0, 1), got {tolerance}")
    pred_num = parse_number(pred)
    gold_num = parse_number(gold)
    if pred_num is not None and gold_num is not None:
        if gold_num == 0:
            return pred_num == 0
        return abs(pred_num - gold_num) <= tolerance * abs(gold_num)
    return normalize_answer(pred).casefold() == normalize_answer(gold).casefold()


@dataclass
class EvalReport:
    n: int
    correct: int
    accuracy: float
    per_qa_type: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)  # (question, pred, gold)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "per_qa_type": self.per_qa_type,
            "failures": [list(f) for f in self.failures],
        }


def evaluate(items, tolerance: float = 0.05, max_failures: int = 20) -> EvalReport:
    """Score (pred, gold[, qa_type[, question]]) records.

    Raises EmptyInput when there is nothing to score. per_qa_type holds
    {"n", "correct", "accuracy"} per question category; failures keeps the
    first ``max_failures`` wrong answers for inspection.
    """
    n = 0
    correct = 0
    per_type: dict = {}
    failures = []
    for item in items:
        pred, gold = item[0], item[1]
        qa_type = item[2] if len(item) > 2 and item[2] else "unknown"
        question = item[3] if len(item) > 3 else ""
        ok = relaxed_match(pred, gold, tolerance=tolerance)
        n += 1
        bucket = per_type.setdefault(qa_type, {"n": 0, "correct": 0})
        bucket["n"] += 1
        if ok:
            correct += 1
            bucket["correct"] += 1
        elif len(failures) < max_failures:
            failures.append((question, pred, gold))
    if n == 0:
        raise EmptyInput("no prediction/gold pairs to evaluate")
    for bucket in per_type.values():
        bucket["accuracy"] = bucket["correct"] / bucket["n"]
    return EvalReport(
        n=n,
        correct=correct,
        accuracy=correct / n,
        per_qa_type=per_type,
        failures=failures,
    )
