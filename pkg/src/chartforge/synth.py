"""Seeded procedural generation of schema-valid chart data.

This is the content engine behind the offline mock LLM backend, and the test
suite reuses it to fuzz validators, renderers, and the QA oracle with
realistic inputs. Every result passes validate_chart_data by construction.
"""

from __future__ import annotations

import random

from .colors import SERIES_PALETTE
from .model import (
    ChartData,
    ChartType,
    DataPoint,
    Series,
    MULTI_BAR_TYPES,
    STACKED_TYPES,
)

# (axis name, labels) pools for category axes
CATEGORY_SETS: list[tuple[str, list[str]]] = [
    ("Month", ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]),
    ("Quarter", ["Q1", "Q2", "Q3", "Q4"]),
    ("Region", ["North", "South", "East", "West", "Central", "Northeast", "Southwest"]),
    ("Country", ["USA", "Germany", "Japan", "Brazil", "India", "Canada", "France", "Australia", "Kenya", "Norway"]),
    ("Department", ["Sales", "Marketing", "Engineering", "Support", "Finance", "HR", "Operations", "Legal"]),
    ("Product", ["Alpha", "Bravo", "Comet", "Delta", "Echo", "Falcon", "Gamma", "Horizon", "Ion", "Jupiter"]),
    ("Age group", ["18-24", "25-34", "35-44", "45-54", "55-64", "65+"]),
    ("Day", ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]),
    ("City", ["Oslo", "Lyon", "Porto", "Kyoto", "Austin", "Quito", "Perth", "Leeds", "Tampere", "Davao"]),
    ("Category", ["Food", "Housing", "Transport", "Health", "Leisure", "Education", "Utilities", "Savings"]),
    ("Channel", ["Online", "Retail", "Wholesale", "Direct", "Partner", "Outlet"]),
    ("Material", ["Steel", "Aluminum", "Copper", "Plastic", "Glass", "Timber", "Concrete"]),
]

SERIES_NAME_SETS: list[list[str]] = [
    ["2021", "2022", "2023", "2024", "2025"],
    ["Product A", "Product B", "Product C", "Product D", "Product E", "Product F"],
    ["Men", "Women", "Children"],
    ["Domestic", "International", "Online"],
    ["Plan", "Actual", "Forecast"],
    ["Team Red", "Team Blue", "Team Green", "Team Gold"],
    ["Branch 1", "Branch 2", "Branch 3", "Branch 4", "Branch 5", "Branch 6"],
    ["Basic", "Standard", "Premium", "Enterprise"],
]

METRICS: list[str] = [
    "Revenue (million USD)", "Units sold", "Visitors (thousands)", "Market share (%)",
    "Energy output (GWh)", "Satisfaction score", "Average price (USD)", "Response time (ms)",
    "Emissions (kt CO2)", "Enrollment", "Rainfall (mm)", "Downloads (thousands)",
    "Defect rate (%)", "Yield (tons)", "Attendance", "Budget (thousand USD)",
]

# building blocks for mock topic generation
TOPIC_MEASURES: list[str] = [
    "Monthly revenue", "Quarterly profit", "Annual growth", "Customer satisfaction",
    "Energy consumption", "Water usage", "Average commute time", "Market share",
    "Employee headcount", "Website traffic", "Production output", "Hospital wait times",
    "Average rainfall", "Adoption rate", "Ticket sales", "Subscription churn",
    "Carbon emissions", "Test scores", "Crop yield", "Shipping volume",
    "Research funding", "Vaccination coverage", "Housing prices", "Internet speeds",
    "Library visits", "Recycling rates", "Air quality index", "Tourist arrivals",
    "Loan approvals", "App downloads", "Power outages", "Broadband coverage",
]

TOPIC_SUBJECTS: list[str] = [
    "of coffee shops", "of electric vehicles", "of regional airports", "of public schools",
    "of streaming services", "of smartphone brands", "of national parks", "of tech startups",
    "of grocery chains", "of rural clinics", "of wind farms", "of book publishers",
    "of football clubs", "of city districts", "of online retailers", "of research labs",
    "of ferry routes", "of art museums", "of dairy farms", "of delivery couriers",
    "of ski resorts", "of community gardens", "of vocational colleges", "of fishing ports",
    "of game studios", "of bakeries", "of car dealerships", "of mobile carriers",
]

TOPIC_SCOPES: list[str] = [
    "by region", "over the last decade", "across age groups", "in major cities",
    "per quarter", "before and after 2020", "by customer segment", "across continents",
    "during summer months", "by product line", "in coastal areas", "under different budgets",
    "by weekday", "across income brackets", "per capita", "in emerging markets",
]


def random_topic(rng: random.Random) -> str:
    return " ".join(
        (rng.choice(TOPIC_MEASURES), rng.choice(TOPIC_SUBJECTS), rng.choice(TOPIC_SCOPES))
    )


def _magnitude(rng: random.Random) -> tuple[float, int]:
    """Pick a value scale and the decimal places that keep 6 significant digits."""
    scale = rng.choice([10, 100, 1000, 10000])
    decimals = {10: 2, 100: 2, 1000: 1, 10000: 0}[scale]
    return float(scale), decimals


def _shape_values(rng: random.Random, n: int, scale: float, decimals: int,
                  low_frac: float = 0.1) -> list[float]:
    """Values following a loose trend: rising, falling, peaked, or noisy."""
    pattern = rng.choice(["rising", "falling", "peak", "noisy"])
    lo, hi = scale * low_frac, scale
    base = [rng.uniform(lo, hi) for _ in range(n)]
    if pattern == "rising":
        base.sort()
    elif pattern == "falling":
        base.sort(reverse=True)
    elif pattern == "peak" and n >= 3:
        base.sort()
        mid = n // 2
        base = base[::2] + base[1::2][::-1]
        base[mid], base[-1] = base[-1], base[mid]
    values = [round(v, decimals) for v in base]
    # rounding at the low end can hit zero; nudge away so pie stays positive
    return [v if v > 0 else round(lo + scale * 0.01, decimals) or 1.0 for v in values]


def _pick_categories(rng: random.Random, n: int) -> tuple[str, list[str]]:
    axis, pool = rng.choice([c for c in CATEGORY_SETS if len(c[1]) >= n])
    start = rng.randrange(0, len(pool) - n + 1)
    return axis, pool[start:start + n]


def _pick_series_names(rng: random.Random, n: int) -> list[str]:
    pool = rng.choice([s for s in SERIES_NAME_SETS if len(s) >= n])
    return pool[:n]


def _pick_colors(rng: random.Random, n: int) -> list[str]:
    return rng.sample(SERIES_PALETTE, n)


def _title(rng: random.Random, topic: str | None, metric: str, axis: str) -> str:
    if topic:
        return topic[0].upper() + topic[1:]
    return f"{metric.split(' (')[0]} by {axis.lower()}"


def random_chart_data(chart_type: ChartType, rng: random.Random,
                      topic: str | None = None) -> ChartData:
    """Generate one valid ChartData for the given type."""
    metric = rng.choice(METRICS)
    scale, decimals = _magnitude(rng)

    if chart_type in (ChartType.V_BAR, ChartType.H_BAR):
        n = rng.randint(3, 12)
        axis, labels = _pick_categories(rng, n)
        values = _shape_values(rng, n, scale, decimals)
        series = [_labeled_series(metric, rng, labels, values)]
    elif chart_type is ChartType.DIVERGING_BAR:
        n = rng.randint(4, 12)
        axis, labels = _pick_categories(rng, n)
        values = [round(rng.uniform(-scale, scale), decimals) for _ in range(n)]
        values[0] = abs(values[0]) or scale * 0.1  # force one of each sign
        values[1] = -abs(values[1]) or -scale * 0.1
        series = [_labeled_series(metric, rng, labels, values)]
    elif chart_type in MULTI_BAR_TYPES:
        n_series = rng.randint(2, 4)
        n = rng.randint(3, 8)
        axis, labels = _pick_categories(rng, n)
        names = _pick_series_names(rng, n_series)
        colors = _pick_colors(rng, n_series)
        low = 0.05 if chart_type in STACKED_TYPES else 0.1
        series = [
            Series(name=names[i], color=colors[i],
                   points=[DataPoint(value=v, label=l) for l, v in
                           zip(labels, _shape_values(rng, n, scale, decimals, low))])
            for i in range(n_series)
        ]
    elif chart_type is ChartType.PIE:
        n = rng.randint(2, 10)
        axis, labels = _pick_categories(rng, n)
        values = _shape_values(rng, n, scale, decimals)
        series = [_labeled_series(metric, rng, labels, values)]
    elif chart_type is ChartType.LINE:
        n_series = rng.randint(1, 4)
        n = rng.randint(5, 16)
        start_year = rng.randint(1990, 2020)
        xs = [float(start_year + i) for i in range(n)]
        axis = "Year"
        names = _pick_series_names(rng, n_series)
        colors = _pick_colors(rng, n_series)
        series = [
            Series(name=names[i], color=colors[i],
                   points=[DataPoint(value=v, x=x) for x, v in
                           zip(xs, _shape_values(rng, n, scale, decimals))])
            for i in range(n_series)
        ]
    elif chart_type is ChartType.SCATTER:
        n_series = rng.randint(1, 3)
        n = rng.randint(8, 20)
        axis = rng.choice(["Hours", "Age", "Distance (km)", "Temperature (C)", "Score"])
        names = _pick_series_names(rng, n_series)
        colors = _pick_colors(rng, n_series)
        series = []
        for i in range(n_series):
            xs = sorted(round(rng.uniform(0, scale), decimals) for _ in range(n))
            xs = _dedupe_ascending(xs, decimals)
            ys = _shape_values(rng, len(xs), scale, decimals)
            series.append(
                Series(name=names[i], color=colors[i],
                       points=[DataPoint(value=v, x=x) for x, v in zip(xs, ys)])
            )
    else:
        raise ValueError(f"unhandled chart type {chart_type}")

    if chart_type is ChartType.PIE:
        x_label, y_label = "", ""
    elif chart_type in (ChartType.H_BAR, ChartType.H_GROUPED_BAR, ChartType.H_STACKED_BAR,
                        ChartType.DIVERGING_BAR):
        x_label, y_label = metric, axis
    else:
        x_label, y_label = axis, metric

    return ChartData(
        chart_type=chart_type,
        title=_title(rng, topic, metric, axis),
        x_label=x_label,
        y_label=y_label,
        series=series,
        topic=topic or "",
    )


def _labeled_series(metric: str, rng: random.Random, labels: list[str],
                    values: list[float]) -> Series:
    return Series(
        name=metric.split(" (")[0],
        color=rng.choice(SERIES_PALETTE),
        points=[DataPoint(value=v, label=l) for l, v in zip(labels, values)],
    )


def _dedupe_ascending(xs: list[float], decimals: int) -> list[float]:
    """Drop duplicate x positions so retrieval questions stay unambiguous."""
    out: list[float] = []
    for x in xs:
        if not out or x > out[-1]:
            out.append(x)
    return out
