"""Topic seeding: prompt the backend for short chart topics and keep a
deduplicated per-chart-type pool on disk.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .gateway import ChatRequest, Gateway, GatewayExhausted
from .model import ChartType
from .util import atomic_write_text

# Leading list decorations stripped when parsing model output.
BULLET_RE = re.compile(r"^\s*(?:[-*•]|\d+\s*[.):]|\(\d+\))\s*")
TRAILING_PUNCT = ".,;:!?"

MIN_TOPIC_LEN = 3
MAX_TOPIC_LEN = 120

CHART_TYPE_BLURBS = {
    ChartType.DIVERGING_BAR: "a horizontal bar chart where values extend both above and below zero",
    ChartType.V_BAR: "a vertical bar chart with one bar per category",
    ChartType.H_BAR: "a horizontal bar chart with one bar per category",
    ChartType.V_GROUPED_BAR: "a vertical bar chart with several bars grouped per category",
    ChartType.H_GROUPED_BAR: "a horizontal bar chart with several bars grouped per category",
    ChartType.V_STACKED_BAR: "a vertical bar chart with segments stacked per category",
    ChartType.H_STACKED_BAR: "a horizontal bar chart with segments stacked per category",
    ChartType.LINE: "a line chart of one or more series over a numeric x axis",
    ChartType.SCATTER: "a scatter plot of one or more series of x/y points",
    ChartType.PIE: "a pie chart splitting a whole into labeled segments",
}


@dataclass
class TopicStageConfig:
    batch_size: int = 20
    budget_factor: int = 10

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.budget_factor < 1:
            raise ValueError("budget_factor must be >= 1")


@dataclass
class TopicPool:
    chart_type: ChartType
    topics: list[str] = field(default_factory=list)
    query_count: int = 0
    duplicates_dropped: int = 0


def build_topic_prompt(
    chart_type: ChartType, batch_size: int, batch_index: int = 0
) -> ChatRequest:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    system = (
        "#stage:topic\n"
        "You propose concise real-world topics for statistical charts. "
        "Reply with a numbered list only, one topic per line."
    )
    user = (
        f"Chart type: {chart_type.value}\n"
        f"This figure is {CHART_TYPE_BLURBS[chart_type]}.\n"
        f"Propose exactly {batch_size} distinct topics that suit this chart type. "
        "Each topic should be a short noun phrase naming a measure, a subject, "
        "and a scope (for example a region or time range). "
        f"Avoid repeating earlier batches; this is batch {batch_index + 1}."
    )
    return ChatRequest(system=system, user=user, temperature=0.9)


def parse_topics(text: str) -> list[str]:
    """Extract candidate topics from a model reply, one per line.

    Strips list numbering and surrounding quotes, drops blanks and lines of
    implausible length. Does not deduplicate.
    """
    out = []
    for line in text.splitlines():
        line = BULLET_RE.sub("", line.strip()).strip()
        if len(line) >= 2 and line[0] == line[-1] and line[0] in "\"'":
            line = line[1:-1].strip()
        if MIN_TOPIC_LEN <= len(line) <= MAX_TOPIC_LEN:
            out.append(line)
    return out


def normalize_topic(topic: str) -> str:
    """Dedup key: case, runs of whitespace, and trailing punctuation ignored."""
    collapsed = " ".join(topic.split()).lower()
    return collapsed.rstrip(TRAILING_PUNCT).strip()


def dedup_topics(topics: list[str]) -> list[str]:
    """Keep the first occurrence of each topic under normalize_topic."""
    seen = set()
    out = []
    for topic in topics:
        key = normalize_topic(topic)
        if key and key not in seen:
            seen.add(key)
            out.append(topic)
    return out


def generate_topic_pool(
    chart_type: ChartType,
    target_count: int,
    gateway: Gateway,
    cfg: TopicStageConfig | None = None,
) -> TopicPool:
    """Query the backend until ``target_count`` unique topics are pooled.

    The query budget is ``budget_factor * ceil(target/batch)``; if the budget
    runs out first, the partial pool is returned. A gateway failure with an
    empty pool propagates; with a non-empty pool it also returns the partial
    result so a rerun can resume.
    """
    cfg = cfg or TopicStageConfig()
    cfg.validate()
    if target_count < 1:
        raise ValueError("target_count must be >= 1")

    pool = TopicPool(chart_type=chart_type)
    seen: set[str] = set()
    budget = cfg.budget_factor * math.ceil(target_count / cfg.batch_size)
    for batch_index in range(budget):
        if len(pool.topics) >= target_count:
            break
        req = build_topic_prompt(chart_type, cfg.batch_size, batch_index)
        try:
            resp = gateway.complete(req)
        except GatewayExhausted:
            if pool.topics:
                break
            raise
        pool.query_count += 1
        parsed = parse_topics(resp.text)
        for topic in parsed:
            key = normalize_topic(topic)
            if key and key not in seen:
                seen.add(key)
                pool.topics.append(topic)
            else:
                pool.duplicates_dropped += 1
    return pool


def save_topic_pool(pool: TopicPool, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, "\n".join(pool.topics) + ("\n" if pool.topics else ""))


def load_topics(path: str | Path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]
