"""Named-color lookup used by QA generation.

Color questions are answered with one of 16 everyday color names rather than
hex strings. Anchors are representative chart-ink RGB values, not pure
primaries, so typical plotting palettes land on the intuitive name.
"""

from __future__ import annotations

import colorsys

# name -> anchor RGB; first match wins distance ties
NAMED_COLORS: list[tuple[str, tuple[int, int, int]]] = [
    ("red", (214, 39, 40)),
    ("orange", (255, 127, 14)),
    ("yellow", (244, 208, 63)),
    ("green", (44, 160, 44)),
    ("teal", (0, 128, 128)),
    ("cyan", (23, 190, 207)),
    ("blue", (31, 119, 180)),
    ("navy", (26, 42, 108)),
    ("purple", (148, 103, 189)),
    ("magenta", (197, 27, 138)),
    ("pink", (231, 119, 194)),
    ("brown", (140, 86, 75)),
    ("olive", (128, 128, 32)),
    ("gray", (127, 127, 127)),
    ("black", (20, 20, 20)),
    ("white", (245, 245, 245)),
]


def hex_to_rgb(color: str) -> tuple[int, int, int]:
    color = color.lstrip("#")
    return int(color[0:2], 16), int(color[2:4], 16), int(color[4:6], 16)


def rgb_to_hex(rgb: tuple[int, int, int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def nearest_color_name(color: str) -> str:
    """Closest of the 16 base names by squared RGB distance."""
    r, g, b = hex_to_rgb(color)
    best_name = NAMED_COLORS[0][0]
    best_dist = None
    for name, (ar, ag, ab) in NAMED_COLORS:
        dist = (r - ar) ** 2 + (g - ag) ** 2 + (b - ab) ** 2
        if best_dist is None or dist < best_dist:
            best_name, best_dist = name, dist
    return best_name


def shade(color: str, factor: float) -> str:
    """Darken (factor < 1) or lighten toward white (factor > 1)."""
    r, g, b = hex_to_rgb(color)
    if factor <= 1:
        scaled = (r * factor, g * factor, b * factor)
    else:
        t = min(factor - 1, 1.0)
        scaled = (r + (255 - r) * t, g + (255 - g) * t, b + (255 - b) * t)
    return rgb_to_hex(tuple(int(round(min(255, max(0, c)))) for c in scaled))


def slice_colors(base: str, n: int) -> list[str]:
    """Distinct wedge colors derived from one base color by hue rotation.

    The chart-data schema carries a single color per series, so pie wedges
    (which need one color each) spin the hue wheel starting at the base,
    with saturation/value clamped into a readable band.
    """
    r, g, b = hex_to_rgb(base)
    h, s, v = colorsys.rgb_to_hsv(r / 255, g / 255, b / 255)
    s = max(s, 0.35)
    v = min(max(v, 0.50), 0.90)
    out = []
    for i in range(n):
        ri, gi, bi = colorsys.hsv_to_rgb((h + i / n) % 1.0, s, v)
        out.append(rgb_to_hex((round(ri * 255), round(gi * 255), round(bi * 255))))
    return out


# pool of plausible series colors drawn on by the procedural data generator
SERIES_PALETTE: list[str] = [
    "#d62728",  # red
    "#ff7f0e",  # orange
    "#f4d03f",  # yellow
    "#2ca02c",  # green
    "#008080",  # teal
    "#17becf",  # cyan
    "#1f77b4",  # blue
    "#1a2a6c",  # navy
    "#9467bd",  # purple
    "#c51b8a",  # magenta
    "#e377c2",  # pink
    "#8c564b",  # brown
    "#808020",  # olive
    "#7f7f7f",  # gray
    "#2d3436",  # near-black
    "#5d8aa8",  # steel blue
    "#c0392b",  # brick red
    "#27ae60",  # emerald
    "#d35400",  # burnt orange
    "#6c3483",  # deep purple
]
