"""Question generation and verification for chart figures.

Two sources of QA pairs:

- a fixed table of 26 question templates whose answers are computed directly
  from the chart data (an oracle), grouped into six categories: structure,
  retrieval, extremum, comparison, arithmetic, color;
- free-form pairs from the chat backend, which are verified by matching the
  question back onto a template, recomputing the oracle answer, and comparing
  under the same relaxed tolerance the evaluation metric uses.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .colors import nearest_color_name
from .evaluation import parse_number
from .gateway import ChatRequest, Gateway
from .model import (
    ChartData,
    ChartType,
    MULTI_BAR_TYPES,
    ParseFailure,
    SINGLE_BAR_TYPES,
    XY_TYPES,
    canonical_json,
)
from .util import extract_json_array, fmt_answer

QA_BANK_DIR = Path(__file__).parent / "qa_bank"
DEFAULT_TOLERANCE = 0.05
X_EPS = 1e-6

# Type groups used in template applicability.
LS = SINGLE_BAR_TYPES | {ChartType.DIVERGING_BAR}  # single-series labeled bars
SB = SINGLE_BAR_TYPES  # plain bars only; diverging shades its negatives
LM = MULTI_BAR_TYPES
XY = XY_TYPES
PIE = frozenset({ChartType.PIE})

CATEGORIES = ("structure", "retrieval", "extremum", "comparison", "arithmetic", "color")


class NotApplicable(Exception):
    """Template does not apply to this chart type or data shape."""


class UnboundReference(Exception):
    """Bindings name a category/series/x the data does not contain."""


@dataclass
class QATemplate:
    id: int
    category: str
    types: frozenset
    pattern: str  # question with {slot} placeholders
    rule: str  # oracle procedure name
    slots: tuple = ()

    def applies_to(self, chart_type: ChartType) -> bool:
        return chart_type in self.types

    def feasible(self, data: ChartData) -> bool:
        """Static applicability plus enough material to fill every slot."""
        if not self.applies_to(data.chart_type):
            return False
        if "category_b" in self.slots and len(data.series[0].points) < 2:
            return False
        if "series_b" in self.slots and len(data.series) < 2:
            return False
        return True


TEMPLATES: list[QATemplate] = [
    QATemplate(1, "extremum", LS | LM | XY,
               "What is the largest value shown in the figure?", "max_value"),
    QATemplate(2, "extremum", LS | LM | XY,
               "What is the smallest value shown in the figure?", "min_value"),
    QATemplate(3, "structure", LS | LM,
               "How many categories are shown in the figure?", "count_categories"),
    QATemplate(4, "structure", LM | XY,
               "How many series are shown in the figure?", "count_series"),
    QATemplate(5, "arithmetic", LS | PIE,
               "What is the sum of all values shown in the figure?", "sum_all"),
    QATemplate(6, "arithmetic", LM | XY,
               "What is the average value of the series '{series}'?", "avg_series",
               ("series",)),
    QATemplate(7, "color", LM | XY,
               "What color is the series '{series}'?", "color_of_series", ("series",)),
    QATemplate(8, "retrieval", LS,
               "What is the value of '{category}'?", "value_of_category",
               ("category",)),
    QATemplate(9, "extremum", LS,
               "Which category has the largest value?", "argmax_category"),
    QATemplate(10, "comparison", LS,
               "Is the value of '{category}' greater than the value of "
               "'{category_b}'?", "gt_categories", ("category", "category_b")),
    QATemplate(11, "arithmetic", LS,
               "What is the difference between the values of '{category}' and "
               "'{category_b}'?", "diff_categories", ("category", "category_b")),
    QATemplate(12, "color", SB,
               "What color are the bars in the figure?", "color_of_bars"),
    QATemplate(13, "retrieval", LM,
               "What is the value of the series '{series}' for '{category}'?",
               "value_series_category", ("series", "category")),
    QATemplate(14, "extremum", LM,
               "Which series has the largest value for '{category}'?",
               "argmax_series_at_category", ("category",)),
    QATemplate(15, "comparison", LM,
               "For '{category}', is the value of the series '{series}' greater "
               "than the value of the series '{series_b}'?",
               "gt_series_at_category", ("category", "series", "series_b")),
    QATemplate(16, "structure", XY,
               "How many points does the series '{series}' contain?",
               "count_points_series", ("series",)),
    QATemplate(17, "retrieval", XY,
               "What is the value of the series '{series}' at x = {x}?",
               "value_series_at_x", ("series", "x")),
    QATemplate(18, "extremum", XY,
               "At what x value does the series '{series}' reach its largest "
               "value?", "argmax_x_of_series", ("series",)),
    QATemplate(19, "comparison", XY,
               "Does the series '{series}' reach a larger maximum value than the "
               "series '{series_b}'?", "gt_max_series", ("series", "series_b")),
    QATemplate(20, "structure", PIE,
               "How many segments does the pie chart contain?", "count_categories"),
    QATemplate(21, "retrieval", PIE,
               "What value is shown for the '{category}' segment?",
               "value_of_category", ("category",)),
    QATemplate(22, "extremum", PIE,
               "Which segment of the pie chart is the largest?", "argmax_category"),
    QATemplate(23, "extremum", PIE,
               "Which segment of the pie chart is the smallest?", "argmin_category"),
    QATemplate(24, "comparison", PIE,
               "Does the '{category}' segment account for more than half of the "
               "total?", "more_than_half", ("category",)),
    QATemplate(25, "comparison", PIE,
               "Is the '{category}' segment larger than the '{category_b}' "
               "segment?", "gt_categories", ("category", "category_b")),
    QATemplate(26, "arithmetic", PIE,
               "What percentage of the total does the '{category}' segment "
               "represent?", "percent_of_total", ("category",)),
]

TEMPLATES_BY_ID = {t.id: t for t in TEMPLATES}


@dataclass
class QAPair:
    question: str
    answer: str
    qa_type: str
    source: str  # "template" | "llm"
    verified: bool
    figure_id: str = ""

    def to_dict(self) -> dict:
        return {
            "figure_id": self.figure_id,
            "question": self.question,
            "answer": self.answer,
            "qa_type": self.qa_type,
            "source": self.source,
            "verified": self.verified,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "QAPair":
        return cls(
            question=str(obj["question"]),
            answer=str(obj["answer"]),
            qa_type=str(obj.get("qa_type", "other")),
            source=str(obj.get("source", "llm")),
            verified=bool(obj.get("verified", False)),
            figure_id=str(obj.get("figure_id", "")),
        )


def applicable_templates(chart_type: ChartType) -> list[QATemplate]:
    return [t for t in TEMPLATES if t.applies_to(chart_type)]


# ---------------------------------------------------------------------------
# Oracle


def _labels(data: ChartData) -> list[str]:
    return [p.label or "" for p in data.series[0].points]


def _series_by_name(data: ChartData, name: str):
    for s in data.series:
        if s.name == name:
            return s
    raise UnboundReference(f"no series named {name!r}")


def _value_at(data: ChartData, series_index: int, label: str) -> float:
    for p in data.series[series_index].points:
        if p.label == label:
            return p.value
    raise UnboundReference(f"no category {label!r}")


def _all_values(data: ChartData) -> list[float]:
    return [p.value for s in data.series for p in s.points]


def _yes_no(flag: bool) -> str:
    return "Yes" if flag else "No"


def oracle_answer(data: ChartData, template: QATemplate, bindings: dict) -> str:
    """Compute the ground-truth answer for a bound template.

    Ties in extremum rules resolve to the first occurrence in data order.
    Raises NotApplicable for a type mismatch and UnboundReference when the
    bindings point at entities the data lacks.
    """
    if not template.applies_to(data.chart_type):
        raise NotApplicable(
            f"template {template.id} does not apply to {data.chart_type.value}"
        )
    rule = template.rule
    first = data.series[0]

    if rule == "max_value":
        return fmt_answer(max(_all_values(data)))
    if rule == "min_value":
        return fmt_answer(min(_all_values(data)))
    if rule == "count_categories":
        return str(len(first.points))
    if rule == "count_series":
        return str(len(data.series))
    if rule == "count_points_series":
        return str(len(_series_by_name(data, bindings["series"]).points))
    if rule == "sum_all":
        return fmt_answer(sum(_all_values(data)))
    if rule == "avg_series":
        series = _series_by_name(data, bindings["series"])
        return fmt_answer(sum(p.value for p in series.points) / len(series.points))
    if rule == "color_of_series":
        return nearest_color_name(_series_by_name(data, bindings["series"]).color)
    if rule == "color_of_bars":
        return nearest_color_name(first.color)
    if rule == "value_of_category":
        return fmt_answer(_value_at(data, 0, bindings["category"]))
    if rule == "argmax_category":
        values = first.values()
        return first.points[values.index(max(values))].label or ""
    if rule == "argmin_category":
        values = first.values()
        return first.points[values.index(min(values))].label or ""
    if rule == "gt_categories":
        a = _value_at(data, 0, bindings["category"])
        b = _value_at(data, 0, bindings["category_b"])
        return _yes_no(a > b)
    if rule == "diff_categories":
        a = _value_at(data, 0, bindings["category"])
        b = _value_at(data, 0, bindings["category_b"])
        return fmt_answer(abs(a - b))
    if rule == "value_series_category":
        series = _series_by_name(data, bindings["series"])
        for p in series.points:
            if p.label == bindings["category"]:
                return fmt_answer(p.value)
        raise UnboundReference(f"no category {bindings['category']!r}")
    if rule == "argmax_series_at_category":
        label = bindings["category"]
        if label not in _labels(data):
            raise UnboundReference(f"no category {label!r}")
        best_name, best = None, None
        for s in data.series:
            for p in s.points:
                if p.label == label and (best is None or p.value > best):
                    best_name, best = s.name, p.value
        return best_name or ""
    if rule == "gt_series_at_category":
        sa = _series_by_name(data, bindings["series"])
        sb = _series_by_name(data, bindings["series_b"])
        label = bindings["category"]
        va = next((p.value for p in sa.points if p.label == label), None)
        vb = next((p.value for p in sb.points if p.label == label), None)
        if va is None or vb is None:
            raise UnboundReference(f"no category {label!r}")
        return _yes_no(va > vb)
    if rule == "value_series_at_x":
        series = _series_by_name(data, bindings["series"])
        x = float(bindings["x"])
        for p in series.points:
            if p.x is not None and abs(p.x - x) <= X_EPS * max(1.0, abs(x)):
                return fmt_answer(p.value)
        raise UnboundReference(f"series {series.name!r} has no point at x={x}")
    if rule == "argmax_x_of_series":
        series = _series_by_name(data, bindings["series"])
        values = [p.value for p in series.points]
        best = series.points[values.index(max(values))]
        return fmt_answer(best.x if best.x is not None else 0.0)
    if rule == "gt_max_series":
        sa = _series_by_name(data, bindings["series"])
        sb = _series_by_name(data, bindings["series_b"])
        return _yes_no(
            max(p.value for p in sa.points) > max(p.value for p in sb.points)
        )
    if rule == "more_than_half":
        total = sum(first.values())
        return _yes_no(_value_at(data, 0, bindings["category"]) > total / 2)
    if rule == "percent_of_total":
        total = sum(first.values())
        return fmt_answer(100.0 * _value_at(data, 0, bindings["category"]) / total)
    raise NotApplicable(f"unknown rule {rule!r}")


# ---------------------------------------------------------------------------
# Template instantiation


def _draw_bindings(data: ChartData, template: QATemplate, rng: random.Random) -> dict:
    bindings: dict = {}
    labels = _labels(data)
    names = [s.name for s in data.series]
    for slot in template.slots:
        if slot == "category":
            bindings["category"] = rng.choice(labels)
        elif slot == "category_b":
            others = [l for l in labels if l != bindings["category"]]
            bindings["category_b"] = rng.choice(others)
        elif slot == "series":
            bindings["series"] = rng.choice(names)
        elif slot == "series_b":
            others = [n for n in names if n != bindings["series"]]
            bindings["series_b"] = rng.choice(others)
        elif slot == "x":
            series = _series_by_name(data, bindings["series"])
            bindings["x"] = rng.choice([p.x for p in series.points])
        else:
            raise ValueError(f"unknown slot {slot!r}")
    return bindings


def _render_question(template: QATemplate, bindings: dict) -> str:
    display = {
        k: (fmt_answer(v) if k == "x" else str(v)) for k, v in bindings.items()
    }
    return template.pattern.format(**display)


def instantiate_templates(
    data: ChartData, rng: random.Random, k: int = 4
) -> list[QAPair]:
    """Sample up to ``k`` feasible templates and produce oracle-answered pairs.

    Template pairs carry verified=True: the answer is computed, not guessed.
    """
    candidates = [t for t in TEMPLATES if t.feasible(data)]
    chosen = rng.sample(candidates, min(k, len(candidates)))
    pairs = []
    for template in chosen:
        bindings = _draw_bindings(data, template, rng)
        pairs.append(
            QAPair(
                question=_render_question(template, bindings),
                answer=oracle_answer(data, template, bindings),
                qa_type=template.category,
                source="template",
                verified=True,
            )
        )
    return pairs


# ---------------------------------------------------------------------------
# Verification (question -> template inversion -> oracle recompute)


def _template_regex(template: QATemplate) -> re.Pattern:
    parts = re.split(r"\{(\w+)\}", template.pattern)
    out = []
    for i, part in enumerate(parts):
        if i % 2 == 0:
            out.append(re.escape(part))
        elif part == "x":
            out.append(r"(?P<x>[-+]?\d+(?:\.\d+)?)")
        else:
            out.append(f"(?P<{part}>.+?)")
    return re.compile("".join(out))


_REGEX_CACHE: dict[int, re.Pattern] = {}


def _compiled(template: QATemplate) -> re.Pattern:
    if template.id not in _REGEX_CACHE:
        _REGEX_CACHE[template.id] = _template_regex(template)
    return _REGEX_CACHE[template.id]


@dataclass
class VerifyResult:
    status: str  # "pass" | "numeric-mismatch" | "label-mismatch" | "unanswerable"
    oracle_answer: str | None = None
    template_id: int | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def verify_qa(
    data: ChartData, qa: QAPair, tolerance: float = DEFAULT_TOLERANCE
) -> VerifyResult:
    """Recompute the answer for a question if it maps onto a known template.

    A question that matches no template, or that references entities absent
    from the data, is "unanswerable". Matched questions compare numerically
    under ``tolerance`` (relative to the oracle value; an oracle value of 0
    demands an exact 0) or as case-insensitive text otherwise.
    """
    question = " ".join(qa.question.split())
    for template in TEMPLATES:
        if not template.applies_to(data.chart_type):
            continue
        match = _compiled(template).fullmatch(question)
        if not match:
            continue
        bindings = {k: v.strip() for k, v in match.groupdict().items()}
        try:
            truth = oracle_answer(data, template, bindings)
        except (UnboundReference, NotApplicable):
            continue
        return VerifyResult(
            status=_compare(qa.answer, truth, tolerance),
            oracle_answer=truth,
            template_id=template.id,
        )
    return VerifyResult(status="unanswerable")


def _compare(answer: str, truth: str, tolerance: float) -> str:
    pred_num = parse_number(answer)
    truth_num = parse_number(truth)
    if pred_num is not None and truth_num is not None:
        if truth_num == 0:
            return "pass" if pred_num == 0 else "numeric-mismatch"
        ok = abs(pred_num - truth_num) <= tolerance * abs(truth_num)
        return "pass" if ok else "numeric-mismatch"
    if answer.strip().casefold() == truth.strip().casefold():
        return "pass"
    return "label-mismatch"


# ---------------------------------------------------------------------------
# Backend-generated QA


_bank_cache: dict[ChartType, list[dict]] = {}


def load_qa_bank(chart_type: ChartType, root: Path | None = None) -> list[dict]:
    """Exemplar question/answer pairs shown to the backend, ~10 per type."""
    if root is None and chart_type in _bank_cache:
        return _bank_cache[chart_type]
    path = (root or QA_BANK_DIR) / f"{chart_type.value}.json"
    entries = json.loads(path.read_text(encoding="utf-8"))
    if root is None:
        _bank_cache[chart_type] = entries
    return entries


def build_qa_prompt(data: ChartData, exemplars: list[dict]) -> ChatRequest:
    """Ask the backend for QA pairs about ``data``, guided by 2 exemplars."""
    if len(exemplars) != 2:
        raise ValueError(f"need exactly 2 exemplars, got {len(exemplars)}")
    example_lines = "\n".join(
        f"- Q: {e['question']}\n  A: {e['answer']}" for e in exemplars
    )
    system = (
        "#stage:qa\n"
        "You write question/answer pairs about a chart, using only what the "
        "chart data supports. Reply with a JSON array of objects with keys "
        "\"question\" and \"answer\"."
    )
    user = (
        f"Chart type: {data.chart_type.value}\n"
        "Here are example questions of the style we want:\n"
        f"{example_lines}\n\n"
        "Chart data:\n"
        f"{canonical_json(data)}\n\n"
        "Write 3 to 6 new question/answer pairs grounded in this data. "
        "Answers must be short: a number, a label, a color, or Yes/No. "
        "Output only the JSON array."
    )
    return ChatRequest(system=system, user=user, temperature=0.8, max_tokens=1024)


def parse_qa_response(raw: str) -> list[QAPair]:
    """Extract QA pairs from backend output; ParseFailure if none usable."""
    items = extract_json_array(raw)
    if items is None:
        raise ParseFailure("no JSON array found in QA response")
    pairs = []
    for item in items:
        if not isinstance(item, dict):
            continue
        question = item.get("question")
        answer = item.get("answer")
        if not isinstance(question, str) or not question.strip():
            continue
        if isinstance(answer, bool):
            answer = "Yes" if answer else "No"
        elif isinstance(answer, (int, float)):
            answer = fmt_answer(float(answer))
        if not isinstance(answer, str) or not answer.strip():
            continue
        pairs.append(
            QAPair(
                question=question.strip(),
                answer=answer.strip(),
                qa_type="other",
                source="llm",
                verified=False,
            )
        )
    if not pairs and items:
        raise ParseFailure("QA response array had no usable entries")
    return pairs


@dataclass
class QAStageConfig:
    mode: str = "both"  # "template" | "llm" | "both"
    k_template: int = 4
    verify: bool = True
    drop_unverified: bool = False
    tolerance: float = DEFAULT_TOLERANCE

    def validate(self) -> None:
        if self.mode not in ("template", "llm", "both"):
            raise ValueError(f"unknown qa mode {self.mode!r}")
        if self.k_template < 1:
            raise ValueError("k_template must be >= 1")
        if not 0 <= self.tolerance < 1:
            raise ValueError("tolerance must be in [0, 1)")


@dataclass
class QAGenResult:
    pairs: list = field(default_factory=list)
    llm_attempted: int = 0
    llm_kept: int = 0
    llm_verified: int = 0
    parse_failed: bool = False


def generate_for_figure(
    data: ChartData,
    rng: random.Random,
    cfg: QAStageConfig | None = None,
    gateway: Gateway | None = None,
) -> QAGenResult:
    """Produce the full QA set for one figure according to ``cfg``.

    Template mode needs no backend. LLM mode prompts once with two bank
    exemplars; pairs are verified against the oracle when cfg.verify is on,
    and unverified ones are kept (flagged) unless cfg.drop_unverified.
    """
    cfg = cfg or QAStageConfig()
    cfg.validate()
    result = QAGenResult()
    if cfg.mode in ("template", "both"):
        result.pairs.extend(instantiate_templates(data, rng, k=cfg.k_template))
    if cfg.mode in ("llm", "both"):
        if gateway is None:
            raise ValueError("llm qa mode requires a gateway")
        exemplars = rng.sample(load_qa_bank(data.chart_type), 2)
        resp = gateway.complete(build_qa_prompt(data, exemplars))
        try:
            llm_pairs = parse_qa_response(resp.text)
        except ParseFailure:
            llm_pairs = []
            result.parse_failed = True
        result.llm_attempted = len(llm_pairs)
        seen = {" ".join(p.question.split()).casefold() for p in result.pairs}
        for pair in llm_pairs:
            key = " ".join(pair.question.split()).casefold()
            if key in seen:
                continue
            seen.add(key)
            if cfg.verify:
                verdict = verify_qa(data, pair, tolerance=cfg.tolerance)
                pair.verified = verdict.passed
                if verdict.template_id is not None:
                    pair.qa_type = TEMPLATES_BY_ID[verdict.template_id].category
                if cfg.drop_unverified and not pair.verified:
                    continue
            result.pairs.append(pair)
            result.llm_kept += 1
            if pair.verified:
                result.llm_verified += 1
    return result
