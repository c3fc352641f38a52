#!/usr/bin/env python3
"""Build a small end-to-end dataset against the mock backend and print what
came out: per-stage summaries, a few QA pairs, and a self-evaluation of the
gold answers (which should score 1.0).

Usage:
    python3 scripts/demo_pipeline.py [--out DIR] [--per-type N] [--seed S]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from chartforge.config import config_from_dict
from chartforge.dataset import load_manifest
from chartforge.model import ChartType
from chartforge.pipeline import cmd_eval, cmd_generate, cmd_stats, cmd_topics


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo-out", help="run directory")
    parser.add_argument("--per-type", type=int, default=3)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    cfg = config_from_dict(
        {
            "master_seed": args.seed,
            "output_dir": args.out,
            "counts": {ct.value: args.per_type for ct in ChartType},
            "gateway": {"mode": "mock", "mock_seed": args.seed},
        }
    )

    print(f"== topics -> {args.out}/topics/")
    topic_summary = cmd_topics(cfg)
    for chart_type, row in topic_summary.items():
        note = "reused" if row["reused"] else f"{row['queries']} queries"
        print(f"  {chart_type:16s} {row['topics']:3d} topics ({note})")

    print("== generate")
    summary = cmd_generate(cfg)
    print(f"  planned={summary.planned} completed={summary.completed}"
          f" resumed={summary.resumed} rejected={summary.data_rejected}"
          f" render_failed={summary.render_failed}")

    stats, _ = cmd_stats(args.out)
    print("== stats")
    print(f"  figures={stats.figure_count} qa={stats.qa_count}"
          f" qa_per_figure={stats.qa_per_figure:.2f}")

    records, _ = load_manifest(Path(args.out) / "manifest.jsonl")
    print("== sample QA")
    for record in records[:3]:
        print(f"  [{record.figure_id}] topic: {record.topic}")
        for pair in record.qa[:2]:
            print(f"    Q: {pair.question}")
            print(f"    A: {pair.answer}")

    # Score the gold answers against themselves as a smoke test of eval.
    preds_path = Path(args.out) / "self-predictions.jsonl"
    with preds_path.open("w", encoding="utf-8") as fh:
        for record in records:
            for pair in record.qa:
                fh.write(json.dumps({
                    "figure_id": record.figure_id,
                    "question": pair.question,
                    "prediction": pair.answer,
                }) + "\n")
    report = cmd_eval(preds_path, Path(args.out) / "manifest.jsonl")
    print(f"== self-eval accuracy: {report.accuracy:.3f} over {report.n} pairs")
    return 0


if __name__ == "__main__":
    sys.exit(main())
