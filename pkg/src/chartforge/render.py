"""Deterministic chart rendering to PNG.

Pure function of (ChartData, AppearanceSpec): no clocks, no global RNG, no
pyplot state. Rendering uses the object-oriented matplotlib API with the Agg
backend and bundled fonts, and strips the PNG metadata that would otherwise
embed a library version, so identical inputs give identical bytes anywhere.

The geometry helpers (pie_layout, stacked_spans, grouped_offsets) are exposed
so tests can check drawn shapes against independently computed coordinates.
"""

from __future__ import annotations

import io
import math
import random
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import matplotlib
from matplotlib import font_manager
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.patches import Wedge

from .appearance import FONT_DIR, FONTS, AppearanceSpec, validate_appearance
from .colors import hex_to_rgb, shade, slice_colors
from .model import (
    ChartData,
    ChartType,
    MULTI_BAR_TYPES,
    SINGLE_BAR_TYPES,
    validate_chart_data,
)
from .util import content_hash64, fmt_number

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

MARKER_CODES = {
    "circle": "o",
    "square": "s",
    "triangle-up": "^",
    "triangle-down": "v",
    "diamond": "D",
    "plus": "P",
    "x": "X",
    "star": "*",
    "pentagon": "p",
}

TITLE_LOC = {"center": "center", "middle-left": "left", "right": "right"}

TEXT_COLOR = "#1a1a1a"


class RenderError(Exception):
    pass


@dataclass
class RenderedFigure:
    png_bytes: bytes
    width: int
    height: int
    content_hash: int


_fonts_ready = False


def _ensure_fonts() -> None:
    """Register the bundled font files with matplotlib (idempotent)."""
    global _fonts_ready
    if _fonts_ready:
        return
    for _, (_, _, _, filename) in FONTS.items():
        font_manager.fontManager.addfont(str(FONT_DIR / filename))
    _fonts_ready = True


def pie_layout(values: list[float]) -> list[tuple[float, float]]:
    """Wedge angle spans in degrees, clockwise from 12 o'clock.

    Each span is (theta1, theta2) with theta1 < theta2 in the
    counterclockwise convention used by matplotlib wedges; span widths are
    proportional to the values and sum to 360.
    """
    total = sum(values)
    if total <= 0:
        raise RenderError("pie values must sum to a positive total")
    spans = []
    cumulative = 0.0
    for value in values:
        start = cumulative
        cumulative += value
        theta1 = 90.0 - 360.0 * (cumulative / total)
        theta2 = 90.0 - 360.0 * (start / total)
        spans.append((theta1, theta2))
    return spans


def stacked_spans(values_by_series: list[list[float]]) -> list[list[tuple[float, float]]]:
    """Per-category (bottom, top) spans for each series, in stack order.

    values_by_series[i][j] is series i's value at category j. For each
    category, consecutive spans abut: spans[j][i][1] == spans[j][i+1][0].
    """
    if not values_by_series:
        return []
    n_cats = len(values_by_series[0])
    out = []
    for j in range(n_cats):
        running = 0.0
        spans = []
        for series_values in values_by_series:
            bottom = running
            running += series_values[j]
            spans.append((bottom, running))
        out.append(spans)
    return out


def grouped_offsets(n_series: int, group_width: float = 0.8) -> list[tuple[float, float]]:
    """(center offset, bar width) for each series within a unit category slot."""
    bar_width = group_width / n_series
    return [
        ((i - (n_series - 1) / 2) * bar_width, bar_width) for i in range(n_series)
    ]


def _ink(seed: int) -> dict:
    """Non-data ink perturbations derived from the palette jitter seed."""
    rng = random.Random(seed)
    fig_bg = tuple(rng.uniform(0.955, 1.0) for _ in range(3))
    ax_bg = tuple(rng.uniform(0.97, 1.0) for _ in range(3))
    grid_gray = rng.uniform(0.55, 0.8)
    return {
        "fig_bg": fig_bg,
        "ax_bg": ax_bg,
        "grid": (grid_gray, grid_gray, grid_gray),
    }


def _rc(app: AppearanceSpec) -> dict:
    family, weight, style, _ = FONTS[app.font]
    return {
        "font.family": [family],
        "font.weight": weight,
        "font.style": style,
        "font.size": 10 * app.font_scale,
        "text.color": TEXT_COLOR,
        "axes.edgecolor": "#444444",
        "axes.labelcolor": TEXT_COLOR,
        "xtick.color": TEXT_COLOR,
        "ytick.color": TEXT_COLOR,
        "axes.axisbelow": True,
        "svg.hashsalt": "chartforge",
    }


def _axes_rect(data: ChartData, app: AppearanceSpec) -> list[float]:
    ct = data.chart_type
    scale = app.font_scale
    if ct == ChartType.PIE:
        top = 0.86 if app.title_mode != "absent" else 0.93
        return [0.05, 0.05, 0.90, top - 0.05]
    left = 0.10
    if ct in _HORIZONTAL_TYPES:
        max_len = max((len(p.label or "") for p in data.series[0].points), default=0)
        left = min(0.34, 0.085 + 0.011 * max_len * scale)
    if data.y_label:
        left += 0.02
    bottom = 0.12 if not data.x_label else 0.15
    if ct in _VERTICAL_LABELED and _rotate_labels(data):
        bottom += 0.05
    top = 0.88 if app.title_mode != "absent" else 0.94
    return [left, bottom, 0.96 - left, top - bottom]


_HORIZONTAL_TYPES = frozenset(
    {
        ChartType.DIVERGING_BAR,
        ChartType.H_BAR,
        ChartType.H_GROUPED_BAR,
        ChartType.H_STACKED_BAR,
    }
)
_VERTICAL_LABELED = frozenset(
    {ChartType.V_BAR, ChartType.V_GROUPED_BAR, ChartType.V_STACKED_BAR}
)


def _rotate_labels(data: ChartData) -> bool:
    labels = [p.label or "" for p in data.series[0].points]
    return len(labels) > 7 or max(map(len, labels), default=0) > 8


def render_figure(data: ChartData, app: AppearanceSpec) -> RenderedFigure:
    """Rasterize one figure. Raises RenderError on invalid input."""
    report = validate_chart_data(data)
    if not report.ok:
        raise RenderError(f"invalid chart data: {report.summary()}")
    problems = validate_appearance(app, data.chart_type)
    if problems:
        raise RenderError(f"invalid appearance: {'; '.join(problems)}")

    _ensure_fonts()
    ink = _ink(app.palette_jitter_seed)
    with matplotlib.rc_context(_rc(app)):
        fig = Figure(
            figsize=(app.width / 100, app.height / 100),
            dpi=100,
            facecolor=ink["fig_bg"],
        )
        FigureCanvasAgg(fig)
        ax = fig.add_axes(_axes_rect(data, app))
        ax.set_facecolor(ink["ax_bg"])

        drawer = _DRAWERS[data.chart_type]
        drawer(ax, data, app, ink)

        if data.chart_type != ChartType.PIE:
            _style_axes(ax, data, app, ink)
        if app.title_mode != "absent" and data.title:
            ax.set_title(
                data.title,
                loc=TITLE_LOC[app.title_mode],
                fontsize=13 * app.font_scale,
                pad=10,
            )
        if app.legend_mode != "absent":
            handles, labels = ax.get_legend_handles_labels()
            if handles:
                ax.legend(
                    handles,
                    labels,
                    loc=app.legend_mode.replace("-", " "),
                    fontsize=9 * app.font_scale,
                    framealpha=0.85,
                )

        buf = io.BytesIO()
        fig.canvas.print_png(
            buf,
            metadata={"Software": None},
            pil_kwargs={"compress_level": 1},
        )
    png = buf.getvalue()
    width, height = _png_dimensions(png)
    if (width, height) != (app.width, app.height):
        raise RenderError(
            f"canvas mismatch: wanted {app.width}x{app.height}, got {width}x{height}"
        )
    return RenderedFigure(
        png_bytes=png, width=width, height=height, content_hash=content_hash64(png)
    )


def _png_dimensions(png: bytes) -> tuple[int, int]:
    if png[:8] != PNG_SIGNATURE or png[12:16] != b"IHDR":
        raise RenderError("renderer produced a non-PNG payload")
    return struct.unpack(">II", png[16:24])


def _style_axes(ax, data: ChartData, app: AppearanceSpec, ink) -> None:
    scale = app.font_scale
    ct = data.chart_type
    if data.x_label:
        ax.set_xlabel(data.x_label, fontsize=10 * scale)
    if data.y_label:
        ax.set_ylabel(data.y_label, fontsize=10 * scale)
    ax.tick_params(labelsize=9 * scale)
    if ct in _HORIZONTAL_TYPES:
        grid_axis = "x"
    elif ct in _VERTICAL_LABELED:
        grid_axis = "y"
    else:
        grid_axis = "both"
    ax.grid(True, axis=grid_axis, color=ink["grid"], linewidth=0.7)
    if not app.spines:
        for spine in ax.spines.values():
            spine.set_visible(False)


def _annotate(ax, x, y, text, app, dx=0, dy=3, ha="center", va="bottom", size=8):
    ax.annotate(
        text,
        xy=(x, y),
        xytext=(dx, dy),
        textcoords="offset points",
        ha=ha,
        va=va,
        fontsize=size * app.font_scale,
        color=TEXT_COLOR,
    )


def _category_axis(ax, labels, data, vertical: bool) -> None:
    positions = range(len(labels))
    if vertical:
        if _rotate_labels(data):
            ax.set_xticks(positions, labels, rotation=30, ha="right")
        else:
            ax.set_xticks(positions, labels)
    else:
        ax.set_yticks(positions, labels)
        ax.invert_yaxis()  # first category reads from the top


def _draw_v_bar(ax, data, app, ink) -> None:
    series = data.series[0]
    values = series.values()
    ax.bar(range(len(values)), values, color=series.color, label=series.name, width=0.7)
    _category_axis(ax, series.labels(), data, vertical=True)
    if app.show_numbers:
        ax.margins(y=0.14)
        for i, v in enumerate(values):
            up = v >= 0
            _annotate(ax, i, v, fmt_number(v), app, dy=3 if up else -3,
                      va="bottom" if up else "top")


def _draw_h_bar(ax, data, app, ink) -> None:
    series = data.series[0]
    values = series.values()
    ax.barh(range(len(values)), values, color=series.color, label=series.name, height=0.7)
    _category_axis(ax, series.labels(), data, vertical=False)
    if app.show_numbers:
        ax.margins(x=0.14)
        for i, v in enumerate(values):
            right = v >= 0
            _annotate(ax, v, i, fmt_number(v), app, dx=3 if right else -3, dy=0,
                      ha="left" if right else "right", va="center")


def _draw_diverging_bar(ax, data, app, ink) -> None:
    series = data.series[0]
    values = series.values()
    pos_color = series.color
    neg_color = shade(series.color, 0.55)
    bar_colors = [pos_color if v >= 0 else neg_color for v in values]
    ax.barh(range(len(values)), values, color=bar_colors, height=0.7)
    ax.axvline(0, color="#555555", linewidth=1.0)
    _category_axis(ax, series.labels(), data, vertical=False)
    if app.show_numbers:
        ax.margins(x=0.16)
        for i, v in enumerate(values):
            right = v >= 0
            _annotate(ax, v, i, fmt_number(v), app, dx=3 if right else -3, dy=0,
                      ha="left" if right else "right", va="center")


def _draw_grouped(ax, data, app, ink, vertical: bool) -> None:
    labels = data.series[0].labels()
    offsets = grouped_offsets(len(data.series))
    for series, (offset, bar_width) in zip(data.series, offsets):
        positions = [j + offset for j in range(len(labels))]
        values = series.values()
        if vertical:
            ax.bar(positions, values, width=bar_width, color=series.color,
                   label=series.name)
        else:
            ax.barh(positions, values, height=bar_width, color=series.color,
                    label=series.name)
        if app.show_numbers:
            for p, v in zip(positions, values):
                if vertical:
                    up = v >= 0
                    _annotate(ax, p, v, fmt_number(v), app, dy=2 if up else -2,
                              va="bottom" if up else "top", size=7)
                else:
                    right = v >= 0
                    _annotate(ax, v, p, fmt_number(v), app, dx=2 if right else -2,
                              dy=0, ha="left" if right else "right", va="center",
                              size=7)
    if app.show_numbers:
        ax.margins(**({"y": 0.14} if vertical else {"x": 0.14}))
    _category_axis(ax, labels, data, vertical=vertical)


def _draw_stacked(ax, data, app, ink, vertical: bool) -> None:
    labels = data.series[0].labels()
    values_by_series = [s.values() for s in data.series]
    spans = stacked_spans(values_by_series)
    max_total = max((cat_spans[-1][1] for cat_spans in spans), default=0.0)
    for i, series in enumerate(data.series):
        bottoms = [spans[j][i][0] for j in range(len(labels))]
        values = values_by_series[i]
        if vertical:
            ax.bar(range(len(labels)), values, bottom=bottoms, width=0.7,
                   color=series.color, label=series.name)
        else:
            ax.barh(range(len(labels)), values, left=bottoms, height=0.7,
                    color=series.color, label=series.name)
        if app.show_numbers:
            for j, v in enumerate(values):
                # Tiny segments stay unlabeled; the text would overflow them.
                if max_total <= 0 or v < 0.045 * max_total:
                    continue
                mid = spans[j][i][0] + v / 2
                text_color = _segment_text_color(series.color)
                if vertical:
                    ax.text(j, mid, fmt_number(v), ha="center", va="center",
                            fontsize=7 * app.font_scale, color=text_color)
                else:
                    ax.text(mid, j, fmt_number(v), ha="center", va="center",
                            fontsize=7 * app.font_scale, color=text_color)
    _category_axis(ax, labels, data, vertical=vertical)


def _segment_text_color(bar_hex: str) -> str:
    r, g, b = hex_to_rgb(bar_hex)
    luminance = 0.299 * r + 0.587 * g + 0.114 * b
    return TEXT_COLOR if luminance > 140 else "#f5f5f5"


def _draw_line(ax, data, app, ink) -> None:
    marker = MARKER_CODES.get(app.marker_style)
    for series in data.series:
        xs = [p.x for p in series.points]
        ys = [p.value for p in series.points]
        ax.plot(xs, ys, color=series.color, label=series.name, linewidth=1.8,
                marker=marker, markersize=6 * app.font_scale)
        if app.show_numbers:
            for x, y in zip(xs, ys):
                _annotate(ax, x, y, fmt_number(y), app, dy=5, size=7)
    if app.show_numbers:
        ax.margins(y=0.14)


def _draw_scatter(ax, data, app, ink) -> None:
    marker = MARKER_CODES.get(app.marker_style, "o")
    for series in data.series:
        xs = [p.x for p in series.points]
        ys = [p.value for p in series.points]
        ax.scatter(xs, ys, color=series.color, label=series.name, marker=marker,
                   s=(6 * app.font_scale) ** 2)
        if app.show_numbers:
            for x, y in zip(xs, ys):
                _annotate(ax, x, y, fmt_number(y), app, dy=5, size=7)
    if app.show_numbers:
        ax.margins(y=0.14)


def _draw_pie(ax, data, app, ink) -> None:
    series = data.series[0]
    values = series.values()
    spans = pie_layout(values)
    wedge_colors = slice_colors(series.color, len(values))
    for (theta1, theta2), color, point in zip(spans, wedge_colors, series.points):
        wedge = Wedge((0, 0), 1.0, theta1, theta2, facecolor=color,
                      edgecolor="white", linewidth=1.0, label=point.label)
        ax.add_patch(wedge)
        if app.show_numbers:
            mid = math.radians((theta1 + theta2) / 2)
            ax.text(0.62 * math.cos(mid), 0.62 * math.sin(mid), fmt_number(point.value),
                    ha="center", va="center", fontsize=8 * app.font_scale,
                    color=_segment_text_color(color))
    ax.set_xlim(-1.15, 1.15)
    ax.set_ylim(-1.15, 1.15)
    ax.set_aspect("equal")
    ax.set_axis_off()


_DRAWERS = {
    ChartType.V_BAR: _draw_v_bar,
    ChartType.H_BAR: _draw_h_bar,
    ChartType.DIVERGING_BAR: _draw_diverging_bar,
    ChartType.V_GROUPED_BAR: lambda ax, d, a, i: _draw_grouped(ax, d, a, i, True),
    ChartType.H_GROUPED_BAR: lambda ax, d, a, i: _draw_grouped(ax, d, a, i, False),
    ChartType.V_STACKED_BAR: lambda ax, d, a, i: _draw_stacked(ax, d, a, i, True),
    ChartType.H_STACKED_BAR: lambda ax, d, a, i: _draw_stacked(ax, d, a, i, False),
    ChartType.LINE: _draw_line,
    ChartType.SCATTER: _draw_scatter,
    ChartType.PIE: _draw_pie,
}


@dataclass
class BatchResult:
    figures: list  # RenderedFigure | None, aligned with the input order
    errors: list  # (index, message)


def _render_item(item: tuple[ChartData, AppearanceSpec]):
    try:
        return ("ok", render_figure(item[0], item[1]))
    except Exception as exc:  # collected per index, never aborts the batch
        return ("err", f"{type(exc).__name__}: {exc}")


def render_batch(
    items: list[tuple[ChartData, AppearanceSpec]], parallelism: int = 1
) -> BatchResult:
    """Render many figures, optionally across processes.

    Output order always matches input order, so results are identical whatever
    ``parallelism`` is; failures are collected as (index, message) without
    stopping the rest of the batch.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if parallelism == 1 or len(items) <= 1:
        raw = map(_render_item, items)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            raw = list(pool.map(_render_item, items, chunksize=8))
    figures: list = []
    errors: list = []
    for index, (status, payload) in enumerate(raw):
        if status == "ok":
            figures.append(payload)
        else:
            figures.append(None)
            errors.append((index, payload))
    return BatchResult(figures=figures, errors=errors)
