import threading
import time

import pytest

from chartforge.gateway import (
    AuthError,
    ChatRequest,
    ChatResponse,
    ConfigError,
    Gateway,
    GatewayConfig,
    GatewayExhausted,
    TransientBackendError,
    classify_prompt,
)
from conftest import ScriptedTransport


def req(system="#stage:data\nwrite data", user="please") -> ChatRequest:
    return ChatRequest(system=system, user=user)


def real_cfg(**kw) -> GatewayConfig:
    base = dict(
        mode="real",
        endpoint_url="https://backend.test/v1",
        model="test-model",
        api_key_env="PATH",  # always set; avoids touching real secrets
        base_backoff_ms=10,
    )
    base.update(kw)
    return GatewayConfig(**base)


class TestRequestValidation:
    def test_empty_user_rejected(self):
        with pytest.raises(ValueError):
            ChatRequest(system="s", user="")

    def test_temperature_bounds(self):
        with pytest.raises(ValueError):
            ChatRequest(system="s", user="u", temperature=2.5)

    def test_max_tokens_positive(self):
        with pytest.raises(ValueError):
            ChatRequest(system="s", user="u", max_tokens=0)


class TestConfig:
    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            Gateway(GatewayConfig(mode="dryrun"))

    def test_real_mode_requires_endpoint_and_model(self):
        with pytest.raises(ConfigError):
            Gateway(GatewayConfig(mode="real", model="m", api_key_env="PATH"))

    def test_real_mode_requires_key_env(self, monkeypatch):
        monkeypatch.delenv("NO_SUCH_KEY_VAR", raising=False)
        with pytest.raises(ConfigError):
            Gateway(real_cfg(api_key_env="NO_SUCH_KEY_VAR"))


class TestClassifyPrompt:
    def test_reads_stage_marker(self):
        assert classify_prompt(req(system="#stage:topic\nx")) == "topic"
        assert classify_prompt(req(system="intro\n#stage:qa more")) == "qa"

    def test_defaults_to_data(self):
        assert classify_prompt(req(system="no marker at all")) == "data"
        assert classify_prompt(req(system="#stage:render")) == "data"


class TestMockMode:
    def test_deterministic_for_same_seed_and_prompt(self):
        a = Gateway(GatewayConfig(mode="mock", mock_seed=5)).complete(req())
        b = Gateway(GatewayConfig(mode="mock", mock_seed=5)).complete(req())
        assert a.text == b.text
        assert a.backend_id == "mock"

    def test_varies_with_seed_and_prompt(self):
        base = Gateway(GatewayConfig(mode="mock", mock_seed=5)).complete(req()).text
        other_seed = Gateway(GatewayConfig(mode="mock", mock_seed=6)).complete(req()).text
        other_user = (
            Gateway(GatewayConfig(mode="mock", mock_seed=5))
            .complete(req(user="something else"))
            .text
        )
        assert base != other_seed
        assert base != other_user


class TestRetryPolicy:
    def test_success_needs_no_sleep(self):
        sleeps = []
        transport = ScriptedTransport(["ok"])
        gw = Gateway(real_cfg(), transport=transport, sleep=sleeps.append)
        assert gw.complete(req()).text == "ok"
        assert sleeps == []

    def test_retries_transient_then_succeeds(self):
        sleeps = []
        transport = ScriptedTransport(
            [TransientBackendError("429"), TransientBackendError("503"), "ok"]
        )
        gw = Gateway(real_cfg(max_retries=3), transport=transport, sleep=sleeps.append)
        assert gw.complete(req()).text == "ok"
        assert len(transport.requests) == 3
        assert len(sleeps) == 2

    def test_backoff_doubles_with_bounded_jitter(self):
        sleeps = []
        transport = ScriptedTransport(
            [TransientBackendError("x")] * 3 + ["ok"]
        )
        gw = Gateway(
            real_cfg(max_retries=3, base_backoff_ms=1000),
            transport=transport,
            sleep=sleeps.append,
        )
        gw.complete(req())
        for attempt, slept in enumerate(sleeps):
            base = 1.0 * (2**attempt)
            assert 0.5 * base <= slept <= 1.5 * base

    def test_exhaustion_after_max_retries(self):
        transport = ScriptedTransport([TransientBackendError("boom")] * 3)
        gw = Gateway(real_cfg(max_retries=2), transport=transport, sleep=lambda s: None)
        with pytest.raises(GatewayExhausted):
            gw.complete(req())
        assert len(transport.requests) == 3  # initial + 2 retries

    def test_auth_error_never_retried(self):
        transport = ScriptedTransport([AuthError("401"), "never sent"])
        gw = Gateway(real_cfg(max_retries=5), transport=transport, sleep=lambda s: None)
        with pytest.raises(AuthError):
            gw.complete(req())
        assert len(transport.requests) == 1

    def test_zero_retries_mean_single_attempt(self):
        transport = ScriptedTransport([TransientBackendError("x")])
        gw = Gateway(real_cfg(max_retries=0), transport=transport, sleep=lambda s: None)
        with pytest.raises(GatewayExhausted):
            gw.complete(req())
        assert len(transport.requests) == 1


class TestConcurrencyGate:
    def test_in_flight_requests_bounded(self):
        in_flight = 0
        peak = 0
        lock = threading.Lock()

        def slow_transport(request):
            nonlocal in_flight, peak
            with lock:
                in_flight += 1
                peak = max(peak, in_flight)
            time.sleep(0.02)
            with lock:
                in_flight -= 1
            return "ok"

        gw = Gateway(real_cfg(max_concurrent_requests=2), transport=slow_transport)
        threads = [
            threading.Thread(target=lambda: gw.complete(req())) for _ in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert peak <= 2

    def test_response_carries_latency(self):
        gw = Gateway(real_cfg(), transport=ScriptedTransport(["ok"]))
        resp = gw.complete(req())
        assert isinstance(resp, ChatResponse)
        assert resp.latency_ms >= 0
