"""Dataset packaging: figure records, the JSONL manifest, summary statistics,
stratified splits, and training-example export.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .model import ChartType
from .qa import QAPair
from .util import atomic_write_text

SEED_KEYS = ("topic_seed", "data_seed", "appearance_seed", "qa_seed")

PROMPT_TOKENS = {
    "chartqa": "<chartqa>",
    "synthetic_qa": "<synthetic_qa>",
    "both": "<chartqa><synthetic_qa>",
}
ANSWER_TOKEN = "<s_answer>"
JSON_TASK_TOKEN = "<json_parse>"


class DuplicateId(Exception):
    pass


class IOFailure(Exception):
    pass


class BadFractions(Exception):
    pass


@dataclass
class FigureRecord:
    figure_id: str
    chart_type: ChartType
    topic: str
    image_path: str
    data_path: str
    appearance_path: str
    qa: list = field(default_factory=list)  # list[QAPair]
    seeds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "figure_id": self.figure_id,
            "chart_type": self.chart_type.value,
            "topic": self.topic,
            "image_path": self.image_path,
            "data_path": self.data_path,
            "appearance_path": self.appearance_path,
            "qa": [p.to_dict() for p in self.qa],
            "seeds": {k: self.seeds[k] for k in sorted(self.seeds)},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FigureRecord":
        return cls(
            figure_id=str(obj["figure_id"]),
            chart_type=ChartType(obj["chart_type"]),
            topic=str(obj.get("topic", "")),
            image_path=str(obj["image_path"]),
            data_path=str(obj["data_path"]),
            appearance_path=str(obj.get("appearance_path", "")),
            qa=[QAPair.from_dict(q) for q in obj.get("qa", [])],
            seeds=dict(obj.get("seeds", {})),
        )


def write_manifest(records: list[FigureRecord], path: str | Path) -> int:
    """Write one JSON object per line, atomically; returns the line count.

    Key order inside each line is fixed (sorted) so reruns are diffable.
    Duplicate figure_ids abort before anything is written.
    """
    seen = set()
    for record in records:
        if record.figure_id in seen:
            raise DuplicateId(f"figure_id {record.figure_id!r} appears twice")
        seen.add(record.figure_id)
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in records]
    text = "\n".join(lines) + ("\n" if lines else "")
    try:
        atomic_write_text(path, text)
    except OSError as exc:
        raise IOFailure(f"could not write manifest {path}: {exc}") from exc
    return len(lines)


def load_manifest(path: str | Path):
    """Parse a manifest; returns (records, problems) where problems are
    (line_number, message) for lines that did not parse into a record."""
    records: list[FigureRecord] = []
    problems: list[tuple[int, str]] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"could not read manifest {path}: {exc}") from exc
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(FigureRecord.from_dict(json.loads(line)))
        except Exception as exc:
            problems.append((line_number, f"{type(exc).__name__}: {exc}"))
    return records, problems


@dataclass
class DatasetStats:
    figure_count: int
    qa_count: int
    qa_per_figure: float
    per_chart_type: dict
    per_qa_type: dict
    llm_qa_verification_pass_rate: float | None

    def to_dict(self) -> dict:
        return {
            "figure_count": self.figure_count,
            "qa_count": self.qa_count,
            "qa_per_figure": self.qa_per_figure,
            "per_chart_type": self.per_chart_type,
            "per_qa_type": self.per_qa_type,
            "llm_qa_verification_pass_rate": self.llm_qa_verification_pass_rate,
        }


def compute_stats(records: list[FigureRecord]) -> DatasetStats:
    """Aggregate counts; pass rate is None when no backend QA is present."""
    per_chart: dict = {}
    per_qa: dict = {}
    qa_count = 0
    llm_total = 0
    llm_verified = 0
    for record in records:
        per_chart[record.chart_type.value] = per_chart.get(record.chart_type.value, 0) + 1
        for pair in record.qa:
            qa_count += 1
            per_qa[pair.qa_type] = per_qa.get(pair.qa_type, 0) + 1
            if pair.source == "llm":
                llm_total += 1
                if pair.verified:
                    llm_verified += 1
    figure_count = len(records)
    return DatasetStats(
        figure_count=figure_count,
        qa_count=qa_count,
        qa_per_figure=(qa_count / figure_count) if figure_count else 0.0,
        per_chart_type=dict(sorted(per_chart.items())),
        per_qa_type=dict(sorted(per_qa.items())),
        llm_qa_verification_pass_rate=(llm_verified / llm_total) if llm_total else None,
    )


def _largest_remainder(n: int, fractions: list[float]) -> list[int]:
    """Integer sizes summing to n, proportional to fractions (ties -> earlier)."""
    exact = [n * f for f in fractions]
    sizes = [int(e) for e in exact]
    remainder = n - sum(sizes)
    order = sorted(
        range(len(fractions)), key=lambda i: (-(exact[i] - sizes[i]), i)
    )
    for i in order[:remainder]:
        sizes[i] += 1
    return sizes


def split_dataset(
    records: list[FigureRecord],
    fractions: list[float],
    rng: random.Random,
    names: list[str] | None = None,
) -> dict:
    """Shuffled, chart-type-stratified partition into len(fractions) splits.

    Within each chart type the split sizes follow the fractions to within one
    record, so no split is starved of any type. Every record lands in exactly
    one split.
    """
    if not fractions or any(f < 0 for f in fractions):
        raise BadFractions(f"fractions must be non-negative: {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise BadFractions(f"fractions must sum to 1, got {sum(fractions)}")
    if names is None:
        defaults = ["train", "val", "test"]
        names = [
            defaults[i] if i < len(defaults) else f"split{i}"
            for i in range(len(fractions))
        ]
    if len(names) != len(fractions):
        raise BadFractions("names and fractions must align")

    splits: dict = {name: [] for name in names}
    by_type: dict = {}
    for record in records:
        by_type.setdefault(record.chart_type.value, []).append(record)
    for chart_type in sorted(by_type):
        group = list(by_type[chart_type])
        rng.shuffle(group)
        sizes = _largest_remainder(len(group), list(fractions))
        start = 0
        for name, size in zip(names, sizes):
            splits[name].extend(group[start : start + size])
            start += size
    return splits


def emit_training_examples(
    records: list[FigureRecord],
    prompt_token: str = "both",
    task: str = "qa",
    data_loader=None,
) -> list[dict]:
    """Flatten records into {image_path, input_text, target_text} examples.

    task "qa": one example per QA pair, input "<token> {question} <s_answer>".
    task "json-parse": one example per figure whose target is the canonical
    chart-data JSON; requires ``data_loader(record) -> ChartData``.
    """
    if prompt_token not in PROMPT_TOKENS:
        raise ValueError(
            f"prompt_token must be one of {sorted(PROMPT_TOKENS)}, got {prompt_token!r}"
        )
    out = []
    if task == "qa":
        token = PROMPT_TOKENS[prompt_token]
        for record in records:
            for pair in record.qa:
                out.append(
                    {
                        "image_path": record.image_path,
                        "input_text": f"{token} {pair.question} {ANSWER_TOKEN}",
                        "target_text": pair.answer,
                    }
                )
        return out
    if task == "json-parse":
        if data_loader is None:
            raise ValueError("json-parse task requires a data_loader")
        from .model import canonical_json

        for record in records:
            data = data_loader(record)
            out.append(
                {
                    "image_path": record.image_path,
                    "input_text": f"{JSON_TASK_TOKEN} {ANSWER_TOKEN}",
                    "target_text": canonical_json(data),
                }
            )
        return out
    raise ValueError(f"unknown task {task!r}")
