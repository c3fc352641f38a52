import random

import pytest

from chartforge.datagen import (
    FewshotStore,
    StoreMissing,
    build_data_prompt,
    default_store,
    generate_chart_data,
    select_fewshot,
)
from chartforge.gateway import Gateway, GatewayConfig
from chartforge.model import ChartType, canonical_json, validate_chart_data
from conftest import ALL_TYPES, ScriptedTransport, make_data


def scripted_gateway(outcomes) -> Gateway:
    cfg = GatewayConfig(
        mode="real",
        endpoint_url="https://backend.test",
        model="m",
        api_key_env="PATH",
        max_retries=0,
    )
    return Gateway(cfg, transport=ScriptedTransport(outcomes), sleep=lambda s: None)


class TestStore:
    def test_bundled_store_has_ten_valid_exemplars_per_type(self):
        store = default_store()
        for ct in ALL_TYPES:
            exemplars = store.exemplars(ct)
            assert len(exemplars) == 10
            for data in exemplars:
                assert data.chart_type is ct
                assert validate_chart_data(data).ok, canonical_json(data)

    def test_missing_exemplars_raise_on_access(self, tmp_path):
        empty = FewshotStore.load_default(tmp_path / "nope")
        with pytest.raises(StoreMissing):
            empty.exemplars(ChartType.PIE)

    def test_select_returns_two_distinct(self):
        rng = random.Random(3)
        picked = select_fewshot(ChartType.PIE, rng)
        assert len(picked) == 2
        assert canonical_json(picked[0]) != canonical_json(picked[1])

    def test_select_deterministic(self):
        a = select_fewshot(ChartType.LINE, random.Random(7))
        b = select_fewshot(ChartType.LINE, random.Random(7))
        assert [canonical_json(d) for d in a] == [canonical_json(d) for d in b]


class TestPrompt:
    def test_contains_marker_type_topic_and_exemplars(self):
        exemplars = select_fewshot(ChartType.SCATTER, random.Random(1))
        req = build_data_prompt("city density", ChartType.SCATTER, exemplars)
        assert "#stage:data" in req.system
        assert "scatter" in req.user
        assert "city density" in req.user
        assert req.user.count("Example") == 2
        for data in exemplars:
            assert canonical_json(data) in req.user


class TestGeneration:
    def test_first_valid_response_wins(self):
        payload = canonical_json(make_data(ChartType.V_BAR, 11))
        outcome = generate_chart_data(
            "store visits",
            ChartType.V_BAR,
            scripted_gateway([f"```json\n{payload}\n```"]),
            random.Random(0),
        )
        assert outcome.ok
        assert outcome.attempts == 1
        assert outcome.data.topic == "store visits"

    def test_retries_until_valid(self):
        good = canonical_json(make_data(ChartType.PIE, 4))
        outcome = generate_chart_data(
            "budget",
            ChartType.PIE,
            scripted_gateway(["not json at all", good]),
            random.Random(0),
            max_attempts=3,
        )
        assert outcome.ok
        assert outcome.attempts == 2

    def test_rejected_after_max_attempts_with_violations(self):
        bad = '{"title": "x", "x_label": "", "y_label": "", "series": []}'
        outcome = generate_chart_data(
            "budget",
            ChartType.PIE,
            scripted_gateway([bad, bad]),
            random.Random(0),
            max_attempts=2,
        )
        assert not outcome.ok
        assert outcome.status == "rejected"
        assert outcome.attempts == 2
        assert outcome.last_violations.violations

    def test_parse_failure_recorded_as_violation(self):
        outcome = generate_chart_data(
            "budget",
            ChartType.PIE,
            scripted_gateway(["no json", "still none"]),
            random.Random(0),
            max_attempts=2,
        )
        assert not outcome.ok
        assert any(v.rule == "parse" for v in outcome.last_violations.violations)

    def test_fresh_exemplars_each_attempt(self):
        transport = ScriptedTransport(
            ["junk", "junk", canonical_json(make_data(ChartType.LINE, 2))]
        )
        cfg = GatewayConfig(
            mode="real",
            endpoint_url="https://backend.test",
            model="m",
            api_key_env="PATH",
            max_retries=0,
        )
        gw = Gateway(cfg, transport=transport, sleep=lambda s: None)
        generate_chart_data("traffic", ChartType.LINE, gw, random.Random(5), max_attempts=3)
        prompts = [r.user for r in transport.requests]
        assert len(prompts) == 3
        assert len(set(prompts)) > 1  # exemplar resampling varies the prompt

    def test_invalid_semantics_rejected_not_crash(self):
        # all-positive data offered for a diverging chart fails validation
        wrong = canonical_json(make_data(ChartType.V_BAR, 1))
        outcome = generate_chart_data(
            "profits",
            ChartType.DIVERGING_BAR,
            scripted_gateway([wrong]),
            random.Random(0),
            max_attempts=1,
        )
        assert not outcome.ok
