"""Chart taxonomy, per-type data schemas, validation, and canonical serialization.

The JSON schema realized here is the contract between every pipeline stage:
a chart is a title, axis labels, a topic, and a list of series, where each
series carries a name, a hex color, and either labeled category points
(bar family, pie) or numeric x/y points (line, scatter).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .util import canonical_number, extract_json_object

HEX_COLOR_RE = re.compile(r"^#[0-9a-fA-F]{6}$")

MAX_POINTS_PER_SERIES = 20
SIMPLE_BAR_MIN_POINTS = 3
SIMPLE_BAR_MAX_POINTS = 12
PIE_MIN_SEGMENTS = 2
PIE_MAX_SEGMENTS = 10
MULTI_SERIES_MIN = 2
MULTI_SERIES_MAX = 6
XY_SERIES_MAX = 5


class ChartType(str, Enum):
    DIVERGING_BAR = "diverging-bar"
    V_BAR = "v-bar"
    H_BAR = "h-bar"
    V_GROUPED_BAR = "v-grouped-bar"
    H_GROUPED_BAR = "h-grouped-bar"
    V_STACKED_BAR = "v-stacked-bar"
    H_STACKED_BAR = "h-stacked-bar"
    LINE = "line"
    SCATTER = "scatter"
    PIE = "pie"

    def __str__(self) -> str:
        return self.value


SINGLE_BAR_TYPES = frozenset(
    {ChartType.DIVERGING_BAR, ChartType.V_BAR, ChartType.H_BAR}
)
GROUPED_TYPES = frozenset({ChartType.V_GROUPED_BAR, ChartType.H_GROUPED_BAR})
STACKED_TYPES = frozenset({ChartType.V_STACKED_BAR, ChartType.H_STACKED_BAR})
MULTI_BAR_TYPES = GROUPED_TYPES | STACKED_TYPES
XY_TYPES = frozenset({ChartType.LINE, ChartType.SCATTER})
LABELED_TYPES = SINGLE_BAR_TYPES | MULTI_BAR_TYPES | {ChartType.PIE}


def uses_labels(chart_type: ChartType) -> bool:
    """Bar family and pie carry labeled category points; line/scatter are x/y."""
    return chart_type in LABELED_TYPES


class ParseFailure(Exception):
    """Model output could not be mapped onto the chart data schema."""


@dataclass
class DataPoint:
    value: float
    label: str | None = None
    x: float | None = None


@dataclass
class Series:
    name: str
    color: str
    points: list[DataPoint]

    def labels(self) -> list[str]:
        return [p.label for p in self.points if p.label is not None]

    def values(self) -> list[float]:
        return [p.value for p in self.points]


@dataclass
class ChartData:
    chart_type: ChartType
    title: str
    x_label: str
    y_label: str
    series: list[Series]
    topic: str = ""


@dataclass
class Violation:
    path: str
    rule: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, path: str, rule: str, message: str) -> None:
        self.violations.append(Violation(path, rule, message))

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{v.path}: {v.rule}" for v in self.violations)


def validate_chart_data(data: ChartData) -> ValidationReport:
    """Check every schema invariant; violations are data, not exceptions."""
    report = ValidationReport()
    ct = data.chart_type
    n_series = len(data.series)

    _check_series_count(report, ct, n_series)

    names = [s.name for s in data.series]
    if len(set(names)) != len(names):
        report.add("series", "unique-series-names", "series names must be unique")

    for i, series in enumerate(data.series):
        _check_series(report, ct, series, f"series[{i}]")

    if ct in MULTI_BAR_TYPES and n_series >= 2:
        first = data.series[0].labels()
        for i, series in enumerate(data.series[1:], start=1):
            if series.labels() != first:
                report.add(
                    f"series[{i}]",
                    "aligned-labels",
                    "grouped/stacked series must share one label sequence",
                )

    if ct is ChartType.DIVERGING_BAR and data.series:
        values = [v for s in data.series for v in s.values()]
        if not (any(v < 0 for v in values) and any(v > 0 for v in values)):
            report.add(
                "series[0].points",
                "diverging-signs",
                "diverging bars need at least one negative and one positive value",
            )

    return report


def _check_series_count(report: ValidationReport, ct: ChartType, n: int) -> None:
    if ct is ChartType.PIE and n != 1:
        report.add("series", "series-count", f"pie charts need exactly 1 series, got {n}")
    elif ct in SINGLE_BAR_TYPES and n != 1:
        report.add("series", "series-count", f"{ct} needs exactly 1 series, got {n}")
    elif ct in MULTI_BAR_TYPES and not (MULTI_SERIES_MIN <= n <= MULTI_SERIES_MAX):
        report.add(
            "series",
            "series-count",
            f"{ct} needs {MULTI_SERIES_MIN}..{MULTI_SERIES_MAX} series, got {n}",
        )
    elif ct in XY_TYPES and not (1 <= n <= XY_SERIES_MAX):
        report.add("series", "series-count", f"{ct} needs 1..{XY_SERIES_MAX} series, got {n}")


def _check_series(report: ValidationReport, ct: ChartType, series: Series, path: str) -> None:
    if not HEX_COLOR_RE.match(series.color):
        report.add(f"{path}.color", "color-hex", f"not a #RRGGBB color: {series.color!r}")

    n_points = len(series.points)
    if not (1 <= n_points <= MAX_POINTS_PER_SERIES):
        report.add(f"{path}.points", "series-points", f"series must hold 1..{MAX_POINTS_PER_SERIES} points, got {n_points}")
    if ct in (ChartType.V_BAR, ChartType.H_BAR) and not (
        SIMPLE_BAR_MIN_POINTS <= n_points <= SIMPLE_BAR_MAX_POINTS
    ):
        report.add(
            f"{path}.points",
            "point-count",
            f"simple bars need {SIMPLE_BAR_MIN_POINTS}..{SIMPLE_BAR_MAX_POINTS} points, got {n_points}",
        )
    if ct is ChartType.PIE and not (PIE_MIN_SEGMENTS <= n_points <= PIE_MAX_SEGMENTS):
        report.add(
            f"{path}.points",
            "pie-segments",
            f"pie charts need {PIE_MIN_SEGMENTS}..{PIE_MAX_SEGMENTS} segments, got {n_points}",
        )

    labeled = uses_labels(ct)
    for j, point in enumerate(series.points):
        ppath = f"{path}.points[{j}]"
        if not isinstance(point.value, (int, float)) or point.value != point.value or point.value in (float("inf"), float("-inf")):
            report.add(f"{ppath}.value", "value-finite", f"value must be finite, got {point.value!r}")
        has_label = point.label is not None
        has_x = point.x is not None
        if has_label == has_x:
            report.add(ppath, "point-form", "each point carries exactly one of label or x")
        elif labeled and not has_label:
            report.add(ppath, "point-form", f"{ct} points must be labeled categories")
        elif not labeled and not has_x:
            report.add(ppath, "point-form", f"{ct} points must carry a numeric x")
        if has_label and point.label == "":
            report.add(f"{ppath}.label", "label-empty", "labels must be non-empty")
        if ct is ChartType.PIE and isinstance(point.value, (int, float)) and not point.value > 0:
            report.add(f"{ppath}.value", "pie-positive", "pie segment values must be > 0")
        if ct in STACKED_TYPES and isinstance(point.value, (int, float)) and point.value < 0:
            report.add(f"{ppath}.value", "stacked-nonneg", "stacked bar values must be >= 0")

    labels = series.labels()
    if len(set(labels)) != len(labels):
        report.add(f"{path}.points", "unique-labels", "category labels must be unique within a series")


def chart_data_from_dict(obj: dict, chart_type: ChartType, topic: str = "") -> ChartData:
    """Map a decoded JSON object onto ChartData; unknown keys are ignored.

    Raises ParseFailure when the series/points skeleton is unusable. Anything
    softer (bad colors, wrong counts) is left for validate_chart_data.
    """
    raw_series = obj.get("series")
    if not isinstance(raw_series, list) or not raw_series:
        raise ParseFailure("missing or empty 'series' list")

    series = []
    for i, entry in enumerate(raw_series):
        if not isinstance(entry, dict):
            raise ParseFailure(f"series[{i}] is not an object")
        raw_points = entry.get("points")
        if not isinstance(raw_points, list) or not raw_points:
            raise ParseFailure(f"series[{i}] has no points")
        points = []
        for j, p in enumerate(raw_points):
            if not isinstance(p, dict) or "value" not in p:
                raise ParseFailure(f"series[{i}].points[{j}] has no value")
            try:
                value = float(p["value"])
            except (TypeError, ValueError) as exc:
                raise ParseFailure(f"series[{i}].points[{j}].value is not numeric") from exc
            label = p.get("label")
            x = p.get("x")
            points.append(
                DataPoint(
                    value=value,
                    label=None if label is None else str(label),
                    x=None if x is None else _coerce_float(x, f"series[{i}].points[{j}].x"),
                )
            )
        name = entry.get("name")
        series.append(
            Series(
                name=str(name) if name not in (None, "") else f"Series {i + 1}",
                color=str(entry.get("color", "")),
                points=points,
            )
        )

    return ChartData(
        chart_type=chart_type,
        title=str(obj.get("title", "")),
        x_label=str(obj.get("x_label", "")),
        y_label=str(obj.get("y_label", "")),
        series=series,
        topic=topic or str(obj.get("topic", "")),
    )


def _coerce_float(value, where: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ParseFailure(f"{where} is not numeric") from exc


def parse_chart_data(raw: str, chart_type: ChartType, topic: str = "") -> ChartData:
    """Extract the first JSON object from model output and map it to ChartData.

    The result is returned unvalidated; callers run validate_chart_data and
    decide whether to retry or discard.
    """
    obj = extract_json_object(raw)
    if obj is None:
        raise ParseFailure("no JSON object found in model output")
    return chart_data_from_dict(obj, chart_type, topic)


def chart_data_to_dict(data: ChartData) -> dict:
    series = []
    for s in data.series:
        points = []
        for p in s.points:
            entry: dict = {}
            if p.label is not None:
                entry["label"] = p.label
            if p.x is not None:
                entry["x"] = canonical_number(p.x)
            entry["value"] = canonical_number(p.value)
            points.append(entry)
        series.append({"name": s.name, "color": s.color, "points": points})
    return {
        "chart_type": data.chart_type.value,
        "title": data.title,
        "x_label": data.x_label,
        "y_label": data.y_label,
        "topic": data.topic,
        "series": series,
    }


def canonical_json(data: ChartData) -> str:
    """Byte-stable serialization: sorted keys, numbers at <= 6 significant digits."""
    return json.dumps(chart_data_to_dict(data), sort_keys=True, indent=2)
