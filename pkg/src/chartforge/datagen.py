"""Chart-data generation: few-shot prompt assembly, response parsing, and the
validate-retry loop around the chat backend.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .gateway import ChatRequest, Gateway
from .model import (
    ChartData,
    ParseFailure,
    ValidationReport,
    Violation,
    canonical_json,
    chart_data_from_dict,
    parse_chart_data,
    validate_chart_data,
)
from .model import ChartType
from .topics import CHART_TYPE_BLURBS

FEWSHOT_DIR = Path(__file__).parent / "fewshot"
DEFAULT_MAX_ATTEMPTS = 3
FEWSHOT_COUNT = 2


class StoreMissing(Exception):
    """No exemplar file for the requested chart type."""


class FewshotStore:
    """In-memory exemplar sets, one list of ChartData per chart type."""

    def __init__(self, by_type: dict[ChartType, list[ChartData]]):
        self._by_type = by_type

    @classmethod
    def load_default(cls, root: Path | None = None) -> "FewshotStore":
        root = root or FEWSHOT_DIR
        by_type: dict[ChartType, list[ChartData]] = {}
        for chart_type in ChartType:
            path = root / f"{chart_type.value}.json"
            if not path.exists():
                continue
            raw = json.loads(path.read_text(encoding="utf-8"))
            exemplars = [
                chart_data_from_dict(obj, chart_type, topic=obj.get("topic", ""))
                for obj in raw
            ]
            for i, ex in enumerate(exemplars):
                report = validate_chart_data(ex)
                if not report.ok:
                    raise ValueError(
                        f"invalid exemplar {path.name}[{i}]: {report.summary()}"
                    )
            by_type[chart_type] = exemplars
        return cls(by_type)

    def exemplars(self, chart_type: ChartType) -> list[ChartData]:
        try:
            return self._by_type[chart_type]
        except KeyError:
            raise StoreMissing(f"no exemplars for {chart_type.value}") from None

    def types(self) -> list[ChartType]:
        return sorted(self._by_type, key=lambda t: t.value)


_default_store: FewshotStore | None = None


def default_store() -> FewshotStore:
    global _default_store
    if _default_store is None:
        _default_store = FewshotStore.load_default()
    return _default_store


def select_fewshot(
    chart_type: ChartType,
    rng: random.Random,
    store: FewshotStore | None = None,
    k: int = FEWSHOT_COUNT,
) -> list[ChartData]:
    """Pick ``k`` distinct exemplars for the prompt."""
    pool = (store or default_store()).exemplars(chart_type)
    if len(pool) < k:
        raise StoreMissing(
            f"need {k} exemplars for {chart_type.value}, have {len(pool)}"
        )
    return rng.sample(pool, k)


def build_data_prompt(
    topic: str, chart_type: ChartType, exemplars: list[ChartData]
) -> ChatRequest:
    if not topic.strip():
        raise ValueError("topic must be non-empty")
    system = (
        "#stage:data\n"
        "You produce JSON chart data for synthetic statistical figures. "
        "Reply with a single JSON object and nothing else."
    )
    blocks = [
        f"Example {i + 1}:\n{canonical_json(ex)}" for i, ex in enumerate(exemplars)
    ]
    user = (
        f"Chart type: {chart_type.value}\n"
        f"This figure is {CHART_TYPE_BLURBS[chart_type]}.\n\n"
        + "\n\n".join(blocks)
        + "\n\n"
        + f"Topic: {topic}\n"
        "Produce one JSON object with the same shape as the examples: keys "
        "chart_type, title, x_label, y_label, and series (a list of objects "
        "with name, color, points). Use realistic values for the topic. "
        "Output only the JSON object."
    )
    return ChatRequest(system=system, user=user, temperature=0.8, max_tokens=2048)


@dataclass
class DataGenOutcome:
    status: str  # "ok" | "rejected"
    data: ChartData | None
    attempts: int
    last_violations: ValidationReport | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def generate_chart_data(
    topic: str,
    chart_type: ChartType,
    gateway: Gateway,
    rng: random.Random,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    store: FewshotStore | None = None,
) -> DataGenOutcome:
    """Prompt, parse, and validate chart data, retrying on bad output.

    Each attempt re-samples the exemplar pair so a stuck model sees a fresh
    prompt. Returns status "ok" only when validate_chart_data passes; after
    ``max_attempts`` failures returns status "rejected" with the last
    validation report. Gateway errors propagate to the caller.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    last_report: ValidationReport | None = None
    attempts = 0
    for _ in range(max_attempts):
        attempts += 1
        exemplars = select_fewshot(chart_type, rng, store=store)
        resp = gateway.complete(build_data_prompt(topic, chart_type, exemplars))
        try:
            data = parse_chart_data(resp.text, chart_type, topic=topic)
        except ParseFailure as exc:
            last_report = ValidationReport(
                violations=[Violation(path="$", rule="parse", message=str(exc))]
            )
            continue
        report = validate_chart_data(data)
        if report.ok:
            return DataGenOutcome(status="ok", data=data, attempts=attempts)
        last_report = report
    return DataGenOutcome(
        status="rejected", data=None, attempts=attempts, last_violations=last_report
    )
