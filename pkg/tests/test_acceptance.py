"""End-to-end acceptance checks, one test per shipping criterion.

These are slower than the unit suite: they build a 500-figure mock dataset
(shared by several tests), rebuild it to prove byte-level reproducibility,
and render ten thousand styled figures to measure visual variety. Run with
``pytest -v tests/test_acceptance.py`` for a pass/fail line per criterion.
"""

from __future__ import annotations

import hashlib
import json
import random
import time

import pytest

from chartforge.appearance import appearance_space_size, sample_appearance
from chartforge.config import config_from_dict
from chartforge.datagen import default_store
from chartforge.dataset import (
    PROMPT_TOKENS,
    emit_training_examples,
    load_manifest,
    split_dataset,
    write_manifest,
)
from chartforge.evaluation import relaxed_match
from chartforge.model import ChartType
from chartforge.pipeline import cmd_generate, cmd_topics
from chartforge.qa import (
    TEMPLATES,
    _draw_bindings,
    instantiate_templates,
    oracle_answer,
    verify_qa,
)
from chartforge.render import render_figure
from chartforge.topics import dedup_topics

from conftest import ALL_TYPES, make_data
from reference_oracle import ref_answer

FIGURES_PER_TYPE = 50
RUN_SECONDS_LIMIT = 300.0


def run_config(out_dir, master_seed: int = 20260814):
    return config_from_dict(
        {
            "master_seed": master_seed,
            "output_dir": str(out_dir),
            "counts": {ct.value: FIGURES_PER_TYPE for ct in ChartType},
            "gateway": {"mode": "mock", "mock_seed": 77},
        }
    )


@pytest.fixture(scope="session")
def big_run(tmp_path_factory):
    """One 500-figure mock run: (run dir, generation summary, seconds)."""
    out = tmp_path_factory.mktemp("acceptance") / "run-a"
    cfg = run_config(out)
    start = time.monotonic()
    cmd_topics(cfg)
    summary = cmd_generate(cfg)
    elapsed = time.monotonic() - start
    return out, summary, elapsed


def test_c1_mock_run_is_clean_and_fast(big_run):
    _, summary, elapsed = big_run
    assert summary.planned == 500
    assert summary.completed == 500
    assert summary.data_rejected == 0
    assert summary.render_failed == 0
    assert elapsed < RUN_SECONDS_LIMIT, f"run took {elapsed:.1f}s"


def test_c2_appearance_space_and_visual_variety():
    store = default_store()
    for type_index, chart_type in enumerate(ChartType):
        assert appearance_space_size(chart_type) >= 2000, chart_type.value
        data = store.exemplars(chart_type)[0]
        rng = random.Random(9000 + type_index)
        hashes = set()
        for _ in range(1000):
            spec = sample_appearance(chart_type, rng)
            png = render_figure(data, spec).png_bytes
            hashes.add(hashlib.sha256(png).hexdigest())
        assert len(hashes) >= 500, f"{chart_type.value}: {len(hashes)} distinct"


def test_c3_qa_density_at_least_four_per_figure(big_run):
    out, _, _ = big_run
    stats = json.loads((out / "stats.json").read_text(encoding="utf-8"))
    assert stats["figure_count"] == 500
    assert stats["qa_per_figure"] >= 4.0


def test_c4_template_oracles_match_brute_force():
    rng = random.Random(31337)
    datasets = 1000
    compared = 0
    verified = 0
    for i in range(datasets):
        chart_type = ALL_TYPES[i % len(ALL_TYPES)]
        data = make_data(chart_type, 10_000 + i)
        for template in TEMPLATES:
            if not template.feasible(data):
                continue
            bindings = _draw_bindings(data, template, rng)
            got = oracle_answer(data, template, bindings)
            want = ref_answer(data, template.rule, bindings)
            assert want is not None, (chart_type.value, template.id, bindings)
            assert got == want, (chart_type.value, template.id, bindings)
            compared += 1
        pairs = instantiate_templates(
            data, random.Random(20_000 + i), k=len(TEMPLATES)
        )
        assert pairs, chart_type.value
        for pair in pairs:
            result = verify_qa(data, pair)
            assert result.status == "pass", (chart_type.value, pair.question)
            verified += 1
    assert compared >= datasets
    assert verified >= datasets


def test_c5_relaxed_accuracy_unit_cases():
    assert relaxed_match("104", "100") is True
    assert relaxed_match("106", "100") is False
    assert relaxed_match("95", "100") is True
    assert relaxed_match("100", "95") is False  # band is relative to gold
    assert relaxed_match("Electric", "electric") is True
    assert relaxed_match("YES", "Yes") is True
    assert relaxed_match("0", "0") is True
    assert relaxed_match("0.00", "0") is True
    assert relaxed_match("0.1", "0") is False  # zero gold admits no band


def test_c6_identical_configs_reproduce_bytes(big_run, tmp_path_factory):
    out_a, _, _ = big_run
    out_b = tmp_path_factory.mktemp("acceptance-rerun") / "run-b"
    cmd_topics(run_config(out_b))
    summary = cmd_generate(run_config(out_b))
    assert summary.completed == 500
    manifest_a = (out_a / "manifest.jsonl").read_bytes()
    manifest_b = (out_b / "manifest.jsonl").read_bytes()
    assert manifest_a == manifest_b
    records, _ = load_manifest(out_a / "manifest.jsonl")
    for rec in records:
        digest_a = hashlib.sha256((out_a / rec.image_path).read_bytes()).hexdigest()
        digest_b = hashlib.sha256((out_b / rec.image_path).read_bytes()).hexdigest()
        assert digest_a == digest_b, rec.figure_id


def test_c7_topic_dedup_exact_count_and_idempotent():
    base = [f"Regional survey series {i}" for i in range(40)]
    noisy = []
    for topic in base:
        noisy.extend([topic, topic.upper(), f"  {topic}.  "])
    random.Random(5).shuffle(noisy)
    deduped = dedup_topics(noisy)
    assert len(deduped) == len(base)
    assert dedup_topics(deduped) == deduped

    rng = random.Random(6)
    for _ in range(300):
        sample = [
            rng.choice(base) + rng.choice(["", ".", "  ", "!"])
            for _ in range(rng.randrange(0, 80))
        ]
        once = dedup_topics(sample)
        assert dedup_topics(once) == once
        assert len(once) <= len(base)


def test_c8_fixed_appearance_arm_and_prompt_tokens(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixed-style") / "run"
    cfg = config_from_dict(
        {
            "master_seed": 5,
            "output_dir": str(out),
            "counts": {ct.value: 2 for ct in ChartType},
            "randomize_appearance": False,
            "gateway": {"mode": "mock", "mock_seed": 5},
        }
    )
    cmd_topics(cfg)
    summary = cmd_generate(cfg)
    assert summary.completed == 20
    for chart_type in ChartType:
        specs = [
            json.loads(p.read_text(encoding="utf-8"))
            for p in sorted((out / "appearance" / chart_type.value).glob("*.json"))
        ]
        assert len(specs) == 2
        assert specs[0] == specs[1], chart_type.value

    assert PROMPT_TOKENS == {
        "chartqa": "<chartqa>",
        "synthetic_qa": "<synthetic_qa>",
        "both": "<chartqa><synthetic_qa>",
    }
    records, _ = load_manifest(out / "manifest.jsonl")
    for name, token in PROMPT_TOKENS.items():
        examples = emit_training_examples(records, prompt_token=name, task="qa")
        assert examples
        for example in examples:
            assert example["input_text"].startswith(token + " ")
            assert example["input_text"].endswith(" <s_answer>")


def test_c9_manifest_round_trip_and_stratified_splits(big_run, tmp_path_factory):
    out, _, _ = big_run
    path = out / "manifest.jsonl"
    records, problems = load_manifest(path)
    assert problems == []
    assert len(records) == 500

    copy = tmp_path_factory.mktemp("roundtrip") / "manifest.jsonl"
    write_manifest(records, copy)
    assert copy.read_bytes() == path.read_bytes()

    fractions = [0.8, 0.1, 0.1]
    names = ["train", "val", "test"]
    splits = split_dataset(records, fractions, random.Random(13), names=names)
    split_ids = [r.figure_id for name in names for r in splits[name]]
    assert sorted(split_ids) == sorted(r.figure_id for r in records)
    assert len(split_ids) == len(set(split_ids))
    for chart_type in ChartType:
        type_total = sum(1 for r in records if r.chart_type == chart_type)
        for name, fraction in zip(names, fractions):
            got = sum(1 for r in splits[name] if r.chart_type == chart_type)
            assert abs(got - fraction * type_total) <= 1, (name, chart_type.value)
