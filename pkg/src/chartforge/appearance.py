"""Appearance sampling: the randomized visual-style space for rendered figures.

Every axis of variation lives here (font, scale, title placement, legend
placement, marker shape, spines, number annotations, canvas geometry) plus a
palette-jitter seed that perturbs non-data ink only. The discrete axes define
a per-chart-type combination space whose size appearance_space_size reports.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass
from pathlib import Path

from .model import ChartType, MULTI_BAR_TYPES, XY_TYPES

FONT_DIR = Path(__file__).parent / "fonts"

# key -> (family, weight, style, filename)
FONTS: dict[str, tuple[str, str, str, str]] = {
    "dejavu-sans": ("DejaVu Sans", "normal", "normal", "DejaVuSans.ttf"),
    "dejavu-sans-bold": ("DejaVu Sans", "bold", "normal", "DejaVuSans-Bold.ttf"),
    "dejavu-sans-oblique": ("DejaVu Sans", "normal", "oblique", "DejaVuSans-Oblique.ttf"),
    "dejavu-sans-mono": ("DejaVu Sans Mono", "normal", "normal", "DejaVuSansMono.ttf"),
    "dejavu-serif": ("DejaVu Serif", "normal", "normal", "DejaVuSerif.ttf"),
    "dejavu-serif-bold": ("DejaVu Serif", "bold", "normal", "DejaVuSerif-Bold.ttf"),
    "stix-general": ("STIXGeneral", "normal", "normal", "STIXGeneral.ttf"),
}
FONT_KEYS = tuple(FONTS)

FONT_SCALES = (0.85, 1.0, 1.2)
TITLE_MODES = ("absent", "center", "middle-left", "right")
LEGEND_POSITIONS = (
    "upper-left",
    "upper-center",
    "upper-right",
    "lower-left",
    "lower-center",
    "lower-right",
)
MARKER_STYLES = (
    "circle",
    "square",
    "triangle-up",
    "triangle-down",
    "diamond",
    "plus",
    "x",
    "star",
    "pentagon",
)
CANVAS_WIDTHS = (640, 800, 960)
# width / ratio is integral for every listed width.
ASPECT_RATIOS = {"4:3": 4 / 3, "16:9": 16 / 9, "1:1": 1.0}
ASPECT_KEYS = tuple(ASPECT_RATIOS)


def legend_required(chart_type: ChartType) -> bool:
    """Multi-series bars and pie are unreadable without a legend."""
    return chart_type in MULTI_BAR_TYPES or chart_type == ChartType.PIE


def marker_allowed(chart_type: ChartType) -> bool:
    return chart_type in XY_TYPES


def legend_modes(chart_type: ChartType) -> tuple[str, ...]:
    if legend_required(chart_type):
        return LEGEND_POSITIONS
    return ("absent",) + LEGEND_POSITIONS


def marker_styles(chart_type: ChartType) -> tuple[str, ...]:
    return MARKER_STYLES if marker_allowed(chart_type) else ("none",)


def canvas_size(width: int, aspect: str) -> tuple[int, int]:
    return width, round(width / ASPECT_RATIOS[aspect])


@dataclass
class AppearanceSpec:
    font: str = "dejavu-sans"
    font_scale: float = 1.0
    title_mode: str = "center"
    legend_mode: str = "absent"
    marker_style: str = "none"
    spines: bool = True
    show_numbers: bool = True
    width: int = 800
    height: int = 600
    palette_jitter_seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "AppearanceSpec":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})


def sample_appearance(chart_type: ChartType, rng: random.Random) -> AppearanceSpec:
    """Draw one appearance uniformly over the axes valid for ``chart_type``.

    Draw order is fixed so a given rng state maps to the same spec forever.
    """
    font = rng.choice(FONT_KEYS)
    scale = rng.choice(FONT_SCALES)
    title_mode = rng.choice(TITLE_MODES)
    legend_mode = rng.choice(legend_modes(chart_type))
    marker = rng.choice(marker_styles(chart_type))
    spines = rng.random() < 0.5
    show_numbers = rng.random() < 0.5
    width = rng.choice(CANVAS_WIDTHS)
    aspect = rng.choice(ASPECT_KEYS)
    w, h = canvas_size(width, aspect)
    return AppearanceSpec(
        font=font,
        font_scale=scale,
        title_mode=title_mode,
        legend_mode=legend_mode,
        marker_style=marker,
        spines=spines,
        show_numbers=show_numbers,
        width=w,
        height=h,
        palette_jitter_seed=rng.getrandbits(64),
    )


def fixed_appearance(chart_type: ChartType) -> AppearanceSpec:
    """The constant style used when appearance randomization is disabled."""
    return AppearanceSpec(
        font="dejavu-sans",
        font_scale=1.0,
        title_mode="center",
        legend_mode="upper-right" if legend_required(chart_type) else "absent",
        marker_style="circle" if marker_allowed(chart_type) else "none",
        spines=True,
        show_numbers=True,
        width=800,
        height=600,
        palette_jitter_seed=0,
    )


def appearance_space_size(chart_type: ChartType) -> int:
    """Count distinct combinations of the discrete axes for one chart type.

    The palette jitter seed is continuous-ish (64-bit) and intentionally not
    counted.
    """
    return (
        len(FONT_KEYS)
        * len(FONT_SCALES)
        * len(TITLE_MODES)
        * len(legend_modes(chart_type))
        * len(marker_styles(chart_type))
        * 2  # spines
        * 2  # show_numbers
        * (len(CANVAS_WIDTHS) * len(ASPECT_KEYS))
    )


def validate_appearance(app: AppearanceSpec, chart_type: ChartType) -> list[str]:
    """Return human-readable problems; empty means renderable."""
    problems = []
    if app.font not in FONTS:
        problems.append(f"unknown font {app.font!r}")
    if app.font_scale not in FONT_SCALES:
        problems.append(f"font_scale {app.font_scale} not in {FONT_SCALES}")
    if app.title_mode not in TITLE_MODES:
        problems.append(f"unknown title_mode {app.title_mode!r}")
    if app.legend_mode not in legend_modes(chart_type):
        problems.append(
            f"legend_mode {app.legend_mode!r} invalid for {chart_type.value}"
        )
    if app.marker_style not in marker_styles(chart_type):
        problems.append(
            f"marker_style {app.marker_style!r} invalid for {chart_type.value}"
        )
    valid_canvases = {
        canvas_size(w, a) for w in CANVAS_WIDTHS for a in ASPECT_KEYS
    }
    if (app.width, app.height) not in valid_canvases:
        problems.append(f"canvas {app.width}x{app.height} not in the allowed set")
    if not 0 <= app.palette_jitter_seed < 2**64:
        problems.append("palette_jitter_seed out of 64-bit range")
    return problems
