#!/usr/bin/env python3
"""Render one bundled exemplar per chart type under several random styles.

Writes a grid of PNGs to the output directory (default gallery/), one row
per chart type, one column per sampled appearance. Handy for eyeballing the
rendering conventions: stacked segment order, diverging baselines, legend
placement, marker shapes.

Usage:
    python3 scripts/render_gallery.py [--out DIR] [--styles N] [--seed S]
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from chartforge.appearance import fixed_appearance, sample_appearance
from chartforge.datagen import default_store
from chartforge.model import ChartType
from chartforge.render import render_figure
from chartforge.util import derive_seed


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="gallery")
    parser.add_argument("--styles", type=int, default=4, help="styles per type")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store = default_store()
    total = 0
    for index, chart_type in enumerate(ChartType):
        data = store.exemplars(chart_type)[0]
        rng = random.Random(derive_seed(args.seed, index, "gallery"))
        specs = [fixed_appearance(chart_type)] + [
            sample_appearance(chart_type, rng) for _ in range(args.styles - 1)
        ]
        for column, spec in enumerate(specs):
            figure = render_figure(data, spec)
            path = out / f"{chart_type.value}-{column}.png"
            path.write_bytes(figure.png_bytes)
            total += 1
        print(f"{chart_type.value:16s} {len(specs)} styles")
    print(f"wrote {total} images to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
