"""End-to-end orchestration: topic pools, figure generation, packaging.

Every figure gets four per-stage seeds derived from (master_seed, global
figure index, stage name), so a run is reproducible against the mock backend
and individual figures can be regenerated in isolation. Stages write their
outputs under the run directory and are resumable: figures whose artifacts
all exist are loaded back instead of regenerated.

Run directory layout:

    out/
      config.json               effective configuration of the last run
      topics/<chart-type>.txt   one topic per line
      data/<type>/<id>.json     validated chart data (canonical JSON)
      appearance/<type>/<id>.json
      images/<type>/<id>.png
      qa/<type>/<id>.jsonl      one QA pair per line
      manifest.jsonl            one FigureRecord per line
      stats.json                dataset summary
      rejects.jsonl             figures dropped by validation or rendering
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .appearance import AppearanceSpec, fixed_appearance, sample_appearance
from .config import PipelineConfig
from .dataset import (
    DatasetStats,
    FigureRecord,
    compute_stats,
    emit_training_examples,
    load_manifest,
    write_manifest,
)
from .datagen import default_store, generate_chart_data
from .evaluation import EvalReport, evaluate
from .gateway import Gateway
from .model import ChartData, ChartType, chart_data_from_dict, canonical_json
from .qa import QAGenResult, QAPair, generate_for_figure
from .render import render_batch
from .topics import generate_topic_pool, load_topics, save_topic_pool
from .util import atomic_write_bytes, atomic_write_text, derive_seed

STAGE_NAMES = ("topic", "data", "appearance", "qa")


class PipelineError(Exception):
    pass


class OutputLayout:
    """Path arithmetic for one run directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def topics_path(self, chart_type: ChartType) -> Path:
        return self.root / "topics" / f"{chart_type.value}.txt"

    def data_path(self, chart_type: ChartType, figure_id: str) -> Path:
        return self.root / "data" / chart_type.value / f"{figure_id}.json"

    def appearance_path(self, chart_type: ChartType, figure_id: str) -> Path:
        return self.root / "appearance" / chart_type.value / f"{figure_id}.json"

    def image_path(self, chart_type: ChartType, figure_id: str) -> Path:
        return self.root / "images" / chart_type.value / f"{figure_id}.png"

    def qa_path(self, chart_type: ChartType, figure_id: str) -> Path:
        return self.root / "qa" / chart_type.value / f"{figure_id}.jsonl"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.jsonl"

    @property
    def stats_path(self) -> Path:
        return self.root / "stats.json"

    @property
    def rejects_path(self) -> Path:
        return self.root / "rejects.jsonl"

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    def relative(self, path: Path) -> str:
        return path.relative_to(self.root).as_posix()


def _write_effective_config(cfg: PipelineConfig, layout: OutputLayout) -> None:
    layout.root.mkdir(parents=True, exist_ok=True)
    atomic_write_text(
        layout.config_path, json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"
    )


# ---------------------------------------------------------------------------
# topics


def cmd_topics(cfg: PipelineConfig, gateway: Gateway | None = None) -> dict:
    """Build (or top up) the per-chart-type topic pools.

    A pool that already holds enough topics is left untouched; an
    insufficient or missing pool is regenerated from scratch.
    """
    cfg.validate()
    layout = OutputLayout(cfg.output_dir)
    _write_effective_config(cfg, layout)
    gateway = gateway or Gateway(cfg.gateway)
    summary: dict = {}
    for chart_type in ChartType:
        target = cfg.counts.get(chart_type.value, 0)
        if target <= 0:
            continue
        path = layout.topics_path(chart_type)
        if path.exists():
            existing = load_topics(path)
            if len(existing) >= target:
                summary[chart_type.value] = {
                    "path": str(path),
                    "topics": len(existing),
                    "queries": 0,
                    "reused": True,
                }
                continue
        pool = generate_topic_pool(chart_type, target, gateway, cfg.topics)
        save_topic_pool(pool, path)
        summary[chart_type.value] = {
            "path": str(path),
            "topics": len(pool.topics),
            "queries": pool.query_count,
            "duplicates_dropped": pool.duplicates_dropped,
            "reused": False,
        }
    return summary


# ---------------------------------------------------------------------------
# generate


@dataclass
class FigurePlan:
    figure_id: str
    chart_type: ChartType
    index: int  # global figure index, stable across runs
    topic: str
    seeds: dict


@dataclass
class GenerationSummary:
    planned: int = 0
    completed: int = 0
    resumed: int = 0
    data_rejected: int = 0
    render_failed: int = 0
    qa_parse_failures: int = 0
    failure_rate: float = 0.0
    over_threshold: bool = False
    manifest_path: str = ""
    stats: DatasetStats | None = None

    def to_dict(self) -> dict:
        out = {
            "planned": self.planned,
            "completed": self.completed,
            "resumed": self.resumed,
            "data_rejected": self.data_rejected,
            "render_failed": self.render_failed,
            "qa_parse_failures": self.qa_parse_failures,
            "failure_rate": self.failure_rate,
            "over_threshold": self.over_threshold,
            "manifest_path": self.manifest_path,
        }
        if self.stats is not None:
            out["stats"] = self.stats.to_dict()
        return out


def _assign_topic(pool: list[str], seed: int, used: set) -> str:
    """Deterministic seeded pick, linear-probing past already-used topics.

    Once the pool is exhausted topics are reused (seeded pick, no probe).
    """
    n = len(pool)
    start = seed % n
    for offset in range(n):
        j = (start + offset) % n
        if j not in used:
            used.add(j)
            return pool[j]
    return pool[start]


def _make_plans(cfg: PipelineConfig, pools: dict) -> list[FigurePlan]:
    plans = []
    index = 0
    for chart_type in ChartType:
        count = cfg.counts.get(chart_type.value, 0)
        if count <= 0:
            continue
        used: set = set()
        pool = pools[chart_type]
        for i in range(count):
            seeds = {
                f"{stage}_seed": derive_seed(cfg.master_seed, index, stage)
                for stage in STAGE_NAMES
            }
            plans.append(
                FigurePlan(
                    figure_id=f"{chart_type.value}-{i:05d}",
                    chart_type=chart_type,
                    index=index,
                    topic=_assign_topic(pool, seeds["topic_seed"], used),
                    seeds=seeds,
                )
            )
            index += 1
    return plans


def _load_pools(cfg: PipelineConfig, layout: OutputLayout) -> dict:
    pools = {}
    for chart_type in ChartType:
        if cfg.counts.get(chart_type.value, 0) <= 0:
            continue
        path = layout.topics_path(chart_type)
        if not path.exists():
            raise PipelineError(
                f"missing topic pool {path}; run the topics stage first"
            )
        topics = load_topics(path)
        if not topics:
            raise PipelineError(f"topic pool {path} is empty")
        pools[chart_type] = topics
    return pools


def _artifacts_exist(plan: FigurePlan, layout: OutputLayout) -> bool:
    return all(
        p.exists()
        for p in (
            layout.data_path(plan.chart_type, plan.figure_id),
            layout.appearance_path(plan.chart_type, plan.figure_id),
            layout.qa_path(plan.chart_type, plan.figure_id),
            layout.image_path(plan.chart_type, plan.figure_id),
        )
    )


def _load_existing(plan: FigurePlan, layout: OutputLayout) -> FigureRecord:
    data_obj = json.loads(
        layout.data_path(plan.chart_type, plan.figure_id).read_text(encoding="utf-8")
    )
    qa_pairs = [
        QAPair.from_dict(json.loads(line))
        for line in layout.qa_path(plan.chart_type, plan.figure_id)
        .read_text(encoding="utf-8")
        .splitlines()
        if line.strip()
    ]
    return FigureRecord(
        figure_id=plan.figure_id,
        chart_type=plan.chart_type,
        topic=str(data_obj.get("topic", plan.topic)),
        image_path=layout.relative(layout.image_path(plan.chart_type, plan.figure_id)),
        data_path=layout.relative(layout.data_path(plan.chart_type, plan.figure_id)),
        appearance_path=layout.relative(
            layout.appearance_path(plan.chart_type, plan.figure_id)
        ),
        qa=qa_pairs,
        seeds=plan.seeds,
    )


@dataclass
class _StageOutput:
    plan: FigurePlan
    status: str  # "ok" | "rejected"
    data: ChartData | None = None
    appearance: AppearanceSpec | None = None
    qa_result: QAGenResult | None = None
    detail: str = ""
    attempts: int = 0


def _generate_one(
    plan: FigurePlan, cfg: PipelineConfig, gateway: Gateway
) -> _StageOutput:
    data_rng = random.Random(plan.seeds["data_seed"])
    outcome = generate_chart_data(
        plan.topic,
        plan.chart_type,
        gateway,
        data_rng,
        max_attempts=cfg.max_attempts,
        store=default_store(),
    )
    if not outcome.ok:
        detail = outcome.last_violations.summary() if outcome.last_violations else ""
        return _StageOutput(
            plan=plan, status="rejected", detail=detail, attempts=outcome.attempts
        )
    if cfg.randomize_appearance:
        appearance = sample_appearance(
            plan.chart_type, random.Random(plan.seeds["appearance_seed"])
        )
    else:
        appearance = fixed_appearance(plan.chart_type)
    qa_result = generate_for_figure(
        outcome.data, random.Random(plan.seeds["qa_seed"]), cfg.qa, gateway
    )
    for pair in qa_result.pairs:
        pair.figure_id = plan.figure_id
    return _StageOutput(
        plan=plan,
        status="ok",
        data=outcome.data,
        appearance=appearance,
        qa_result=qa_result,
        attempts=outcome.attempts,
    )


def cmd_generate(cfg: PipelineConfig, gateway: Gateway | None = None) -> GenerationSummary:
    """Run data -> appearance -> QA -> render for every planned figure.

    Figures whose artifacts already exist on disk are loaded, not recomputed.
    Figures that fail data validation after retries, or fail to render, are
    logged to rejects.jsonl and excluded from the manifest; the summary flags
    when their fraction exceeds cfg.failure_threshold. Gateway errors
    propagate immediately.
    """
    cfg.validate()
    layout = OutputLayout(cfg.output_dir)
    _write_effective_config(cfg, layout)
    gateway = gateway or Gateway(cfg.gateway)

    pools = _load_pools(cfg, layout)
    plans = _make_plans(cfg, pools)
    summary = GenerationSummary(planned=len(plans))

    resumed: dict = {}
    pending: list[FigurePlan] = []
    for plan in plans:
        if _artifacts_exist(plan, layout):
            resumed[plan.figure_id] = _load_existing(plan, layout)
        else:
            pending.append(plan)
    summary.resumed = len(resumed)

    if cfg.parallelism == 1:
        outputs = [_generate_one(plan, cfg, gateway) for plan in pending]
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            outputs = list(
                pool.map(lambda plan: _generate_one(plan, cfg, gateway), pending)
            )

    rejects: list[dict] = []
    ready: list[_StageOutput] = []
    for output in outputs:
        if output.status == "ok":
            ready.append(output)
            if output.qa_result and output.qa_result.parse_failed:
                summary.qa_parse_failures += 1
        else:
            summary.data_rejected += 1
            rejects.append(
                {
                    "figure_id": output.plan.figure_id,
                    "chart_type": output.plan.chart_type.value,
                    "topic": output.plan.topic,
                    "stage": "data",
                    "attempts": output.attempts,
                    "detail": output.detail,
                }
            )

    batch = render_batch(
        [(o.data, o.appearance) for o in ready], parallelism=cfg.parallelism
    )
    records: dict = {}
    for output, figure in zip(ready, batch.figures):
        if figure is None:
            continue
        plan = output.plan
        data_path = layout.data_path(plan.chart_type, plan.figure_id)
        appearance_path = layout.appearance_path(plan.chart_type, plan.figure_id)
        qa_path = layout.qa_path(plan.chart_type, plan.figure_id)
        image_path = layout.image_path(plan.chart_type, plan.figure_id)
        for parent in {data_path.parent, appearance_path.parent, qa_path.parent, image_path.parent}:
            parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(data_path, canonical_json(output.data) + "\n")
        atomic_write_text(
            appearance_path,
            json.dumps(output.appearance.to_dict(), sort_keys=True, indent=2) + "\n",
        )
        qa_lines = [json.dumps(p.to_dict()) for p in output.qa_result.pairs]
        atomic_write_text(qa_path, "\n".join(qa_lines) + ("\n" if qa_lines else ""))
        atomic_write_bytes(image_path, figure.png_bytes)
        records[plan.figure_id] = FigureRecord(
            figure_id=plan.figure_id,
            chart_type=plan.chart_type,
            topic=plan.topic,
            image_path=layout.relative(image_path),
            data_path=layout.relative(data_path),
            appearance_path=layout.relative(appearance_path),
            qa=output.qa_result.pairs,
            seeds=plan.seeds,
        )
    for index, message in batch.errors:
        plan = ready[index].plan
        summary.render_failed += 1
        rejects.append(
            {
                "figure_id": plan.figure_id,
                "chart_type": plan.chart_type.value,
                "topic": plan.topic,
                "stage": "render",
                "detail": message,
            }
        )

    final_records = [
        resumed[plan.figure_id] if plan.figure_id in resumed else records[plan.figure_id]
        for plan in plans
        if plan.figure_id in resumed or plan.figure_id in records
    ]
    write_manifest(final_records, layout.manifest_path)
    stats = compute_stats(final_records)
    atomic_write_text(
        layout.stats_path, json.dumps(stats.to_dict(), sort_keys=True, indent=2) + "\n"
    )
    reject_lines = [json.dumps(r, sort_keys=True) for r in rejects]
    atomic_write_text(
        layout.rejects_path, "\n".join(reject_lines) + ("\n" if reject_lines else "")
    )

    failures = summary.data_rejected + summary.render_failed
    summary.completed = len(final_records)
    summary.failure_rate = failures / summary.planned if summary.planned else 0.0
    summary.over_threshold = summary.failure_rate > cfg.failure_threshold
    summary.manifest_path = str(layout.manifest_path)
    summary.stats = stats
    return summary


# ---------------------------------------------------------------------------
# stats / eval / export


def cmd_stats(target: str | Path):
    """Stats for a manifest file or a run directory containing one.

    Returns (DatasetStats, problems) where problems are unparseable lines.
    """
    path = Path(target)
    if path.is_dir():
        path = path / "manifest.jsonl"
    records, problems = load_manifest(path)
    return compute_stats(records), problems


def _flatten_gold(path: Path) -> list[dict]:
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "qa" in obj and isinstance(obj["qa"], list):  # manifest record
            rows.extend(obj["qa"])
        else:
            rows.append(obj)
    out = []
    for row in rows:
        if "question" not in row or "answer" not in row:
            raise PipelineError(f"gold row missing question/answer: {row}")
        out.append(row)
    return out


def cmd_eval(
    predictions_path: str | Path, gold_path: str | Path, tolerance: float = 0.05
) -> EvalReport:
    """Score a predictions file against gold QA pairs.

    Gold may be a manifest.jsonl or a QA JSONL. Predictions are JSONL rows
    holding "prediction" (or "answer") plus "question" and, optionally,
    "figure_id"; rows join on (figure_id, question) when both sides have ids,
    else on the question text. Gold rows with no prediction count as wrong.
    """
    gold_rows = _flatten_gold(Path(gold_path))
    by_key: dict = {}
    by_question: dict = {}
    for line in Path(predictions_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "question" not in obj:
            raise PipelineError(f"prediction row missing question: {obj}")
        value = obj.get("prediction", obj.get("answer"))
        if value is None:
            raise PipelineError(f"prediction row missing prediction: {obj}")
        value = str(value)
        if obj.get("figure_id"):
            by_key[(obj["figure_id"], obj["question"])] = value
        else:
            # Question-text fallback is only for id-less prediction files;
            # keyed rows must never leak onto other figures' identical questions.
            by_question.setdefault(obj["question"], value)
    items = []
    for row in gold_rows:
        key = (row.get("figure_id", ""), row["question"])
        pred = by_key.get(key)
        if pred is None:
            pred = by_question.get(row["question"], "")
        items.append((pred, str(row["answer"]), row.get("qa_type"), row["question"]))
    return evaluate(items, tolerance=tolerance)


def cmd_export_training(
    manifest_path: str | Path,
    output_path: str | Path,
    prompt_token: str = "both",
    task: str = "qa",
) -> int:
    """Write training examples as JSONL; returns the number of lines."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.jsonl"
    records, problems = load_manifest(manifest_path)
    if problems:
        raise PipelineError(
            f"manifest has {len(problems)} bad lines, first: {problems[0]}"
        )
    root = manifest_path.parent

    def loader(record: FigureRecord) -> ChartData:
        obj = json.loads((root / record.data_path).read_text(encoding="utf-8"))
        return chart_data_from_dict(obj, record.chart_type, obj.get("topic", ""))

    examples = emit_training_examples(
        records, prompt_token=prompt_token, task=task, data_loader=loader
    )
    lines = [json.dumps(e, sort_keys=True) for e in examples]
    atomic_write_text(Path(output_path), "\n".join(lines) + ("\n" if lines else ""))
    return len(examples)
