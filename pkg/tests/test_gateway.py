import json
import threading

import pytest

from bridge.errors import ConfigError, GatewayError, ReplayMissError, TransportError
from bridge.gateway import (
    CompletionRecord,
    DecodingParams,
    ModelGateway,
    RateLimiter,
    count_tokens,
    prompt_digest,
)

P = DecodingParams(temperature=0.7, max_tokens=256, n_samples=1, seed=5)


class TestDigest:
    def test_stable(self):
        assert prompt_digest("m", "hello", P) == prompt_digest("m", "hello", P)

    def test_sample_count_excluded(self):
        p1 = DecodingParams(temperature=0.7, max_tokens=256, n_samples=1, seed=5)
        p5 = DecodingParams(temperature=0.7, max_tokens=256, n_samples=5, seed=5)
        assert prompt_digest("m", "hello", p1) == prompt_digest("m", "hello", p5)

    def test_each_input_matters(self):
        base = prompt_digest("m", "hello", P)
        assert prompt_digest("m2", "hello", P) != base
        assert prompt_digest("m", "hello!", P) != base
        assert prompt_digest(
            "m", "hello", DecodingParams(0.8, 256, 1, 5)) != base
        assert prompt_digest(
            "m", "hello", DecodingParams(0.7, 257, 1, 5)) != base
        assert prompt_digest(
            "m", "hello", DecodingParams(0.7, 256, 1, None)) != base

    def test_temperature_uses_float_repr(self):
        # int 0 and float 0.0 must hash identically
        a = prompt_digest("m", "x", DecodingParams(0, 256, 1, None))
        b = prompt_digest("m", "x", DecodingParams(0.0, 256, 1, None))
        assert a == b


class TestDecodingParams:
    def test_validation(self):
        with pytest.raises(ConfigError):
            DecodingParams(temperature=2.5)
        with pytest.raises(ConfigError):
            DecodingParams(max_tokens=0)
        with pytest.raises(ConfigError):
            DecodingParams(n_samples=0)


class TestCountTokens:
    def test_reported_takes_precedence(self):
        rec = CompletionRecord("m", "d" * 64, 0, "one two three", reported_tokens=99)
        assert count_tokens(rec) == (3, 99)

    def test_estimated_when_unreported(self):
        rec = CompletionRecord("m", "d" * 64, 0, "one two three")
        words, tokens = count_tokens(rec)
        assert words == 3
        assert tokens == (3 * 1383 + 500) // 1000


def mock_gateway(entries, default=None):
    script = {"entries": entries}
    if default is not None:
        script["default"] = default
    return ModelGateway("mock", script=script)


class TestMockMode:
    def test_digest_match(self):
        digest = prompt_digest("m", "the prompt", P)
        gw = mock_gateway([{"digest": digest, "text": "scripted"}])
        recs = gw.complete_n("m", "the prompt", P)
        assert [r.text for r in recs] == ["scripted"]
        assert recs[0].prompt_digest == digest

    def test_key_substring_match(self):
        gw = mock_gateway([{"key": "majority element", "text": "hit"}])
        recs = gw.complete_n("m", "Find the majority element in a list.", P)
        assert recs[0].text == "hit"

    def test_first_match_wins(self):
        gw = mock_gateway([
            {"key": "element", "text": "first"},
            {"key": "majority element", "text": "second"},
        ])
        recs = gw.complete_n("m", "majority element task", P)
        assert recs[0].text == "first"

    def test_model_filter(self):
        gw = mock_gateway([
            {"key": "task", "model": "other", "text": "wrong"},
            {"key": "task", "model": "m", "text": "right"},
        ])
        assert gw.complete_n("m", "the task", P)[0].text == "right"

    def test_round_filter_reads_retry_header(self):
        gw = mock_gateway([
            {"key": "task", "round": 2, "text": "round two"},
            {"key": "task", "text": "round one"},
        ])
        first = gw.complete_n("m", "the task", P)[0].text
        retry = gw.complete_n("m", "# RETRY ATTEMPT 1/3\nthe task", P)[0].text
        assert first == "round one"
        assert retry == "round two"

    def test_sample_index_filter(self):
        gw = mock_gateway([
            {"key": "task", "sample_index": 1, "text": "b"},
            {"key": "task", "text": "a"},
        ])
        p2 = DecodingParams(temperature=0.7, max_tokens=256, n_samples=2, seed=5)
        recs = gw.complete_n("m", "the task", p2)
        assert [r.text for r in recs] == ["a", "b"]
        assert [r.sample_index for r in recs] == [0, 1]

    def test_entry_without_selector_never_matches(self):
        gw = mock_gateway([{"model": "m", "text": "too broad"}],
                          default="fallback")
        assert gw.complete_n("m", "anything", P)[0].text == "fallback"

    def test_default_fallback(self):
        gw = mock_gateway([{"key": "nope", "text": "x"}], default="fallback")
        assert gw.complete_n("m", "anything", P)[0].text == "fallback"

    def test_miss_without_default_raises(self):
        gw = mock_gateway([{"key": "nope", "text": "x"}])
        with pytest.raises(GatewayError):
            gw.complete_n("m", "anything", P)

    def test_reported_tokens_and_latency_pass_through(self):
        gw = mock_gateway([
            {"key": "task", "text": "t", "reported_tokens": 42, "latency": 1.5},
        ])
        rec = gw.complete_n("m", "the task", P)[0]
        assert rec.reported_tokens == 42 and rec.latency == 1.5

    def test_mock_requires_script(self):
        with pytest.raises(ConfigError):
            ModelGateway("mock")

    def test_script_loaded_from_file(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps({"entries": [{"key": "task", "text": "file"}]}),
                        encoding="utf-8")
        gw = ModelGateway("mock", script=path)
        assert gw.complete_n("m", "the task", P)[0].text == "file"

    def test_missing_script_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ModelGateway("mock", script=tmp_path / "absent.json")


PROVIDERS = {"m": {"provider": "acme", "endpoint": "https://x.test/v1"}}


def transport_returning(texts, calls=None):
    def transport(endpoint, api_key, model_id, prompt, params, n):
        if calls is not None:
            calls.append(n)
        return [(texts[i % len(texts)], None) for i in range(n)]
    return transport


class TestRecordReplay:
    def setup_env(self, monkeypatch):
        monkeypatch.setenv("BRIDGE_ACME_KEY", "k-test")

    def test_record_then_replay_round_trip(self, tmp_path, monkeypatch):
        self.setup_env(monkeypatch)
        arch = tmp_path / "arch"
        rec_gw = ModelGateway("record", providers=PROVIDERS, archive_dir=arch,
                              transport=transport_returning(["alpha"]))
        first = rec_gw.complete_n("m", "prompt", P)
        rep_gw = ModelGateway("replay", archive_dir=arch)
        second = rep_gw.complete_n("m", "prompt", P)
        assert [r.text for r in first] == [r.text for r in second] == ["alpha"]

    def test_record_serves_from_archive_without_new_call(self, tmp_path, monkeypatch):
        self.setup_env(monkeypatch)
        calls = []
        gw = ModelGateway("record", providers=PROVIDERS,
                          archive_dir=tmp_path / "arch",
                          transport=transport_returning(["a"], calls))
        gw.complete_n("m", "prompt", P)
        gw.complete_n("m", "prompt", P)
        assert len(calls) == 1

    def test_concurrent_record_coalesces(self, tmp_path, monkeypatch):
        self.setup_env(monkeypatch)
        calls = []
        lock = threading.Lock()

        def transport(endpoint, api_key, model_id, prompt, params, n):
            with lock:
                calls.append(n)
            return [("same", None)] * n

        gw = ModelGateway("record", providers=PROVIDERS,
                          archive_dir=tmp_path / "arch", transport=transport)
        threads = [threading.Thread(target=gw.complete_n, args=("m", "prompt", P))
                   for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(calls) == 1

    def test_archive_file_shape(self, tmp_path, monkeypatch):
        self.setup_env(monkeypatch)
        arch = tmp_path / "arch"
        gw = ModelGateway("record", providers=PROVIDERS, archive_dir=arch,
                          transport=transport_returning(["alpha"]))
        gw.complete_n("m", "prompt", P)
        digest = prompt_digest("m", "prompt", P)
        payload = json.loads((arch / f"{digest}.json").read_text(encoding="utf-8"))
        assert payload["model_id"] == "m"
        assert payload["prompt"] == "prompt"
        assert payload["seed"] == 5
        assert payload["records"][0]["text"] == "alpha"

    def test_replay_miss_unknown_digest(self, tmp_path):
        gw = ModelGateway("replay", archive_dir=tmp_path / "empty")
        with pytest.raises(ReplayMissError):
            gw.complete_n("m", "never recorded", P)

    def test_replay_miss_insufficient_samples(self, tmp_path, monkeypatch):
        self.setup_env(monkeypatch)
        arch = tmp_path / "arch"
        gw = ModelGateway("record", providers=PROVIDERS, archive_dir=arch,
                          transport=transport_returning(["a"]))
        gw.complete_n("m", "prompt", P)
        rep = ModelGateway("replay", archive_dir=arch)
        p3 = DecodingParams(temperature=0.7, max_tokens=256, n_samples=3, seed=5)
        with pytest.raises(ReplayMissError):
            rep.complete_n("m", "prompt", p3)

    def test_replay_serves_prefix_of_larger_archive(self, tmp_path, monkeypatch):
        self.setup_env(monkeypatch)
        arch = tmp_path / "arch"
        p3 = DecodingParams(temperature=0.7, max_tokens=256, n_samples=3, seed=5)
        gw = ModelGateway("record", providers=PROVIDERS, archive_dir=arch,
                          transport=transport_returning(["a", "b", "c"]))
        gw.complete_n("m", "prompt", p3)
        rep = ModelGateway("replay", archive_dir=arch)
        recs = rep.complete_n("m", "prompt", P)
        assert [r.text for r in recs] == ["a"]

    def test_archive_dir_required(self):
        with pytest.raises(ConfigError):
            ModelGateway("replay")
        with pytest.raises(ConfigError):
            ModelGateway("record")


class TestLiveRetry:
    def make_gateway(self, transport, sleeps):
        return ModelGateway("live", providers=PROVIDERS, transport=transport,
                            sleep=sleeps.append, max_attempts=3,
                            backoff_base=0.5)

    def test_transient_failures_retried_with_backoff(self, monkeypatch):
        monkeypatch.setenv("BRIDGE_ACME_KEY", "k")
        attempts = []
        sleeps = []

        def transport(endpoint, api_key, model_id, prompt, params, n):
            attempts.append(1)
            if len(attempts) < 3:
                raise TransportError("HTTP 503")
            return [("ok", 7)] * n

        gw = self.make_gateway(transport, sleeps)
        recs = gw.complete_n("m", "p", P)
        assert recs[0].text == "ok" and recs[0].reported_tokens == 7
        assert len(attempts) == 3
        assert sleeps == [0.5, 1.0]

    def test_exhausted_attempts_raise(self, monkeypatch):
        monkeypatch.setenv("BRIDGE_ACME_KEY", "k")
        sleeps = []

        def transport(*a, **k):
            raise TransportError("HTTP 500")

        gw = self.make_gateway(transport, sleeps)
        with pytest.raises(TransportError):
            gw.complete_n("m", "p", P)
        assert sleeps == [0.5, 1.0]

    def test_non_transport_errors_not_retried(self, monkeypatch):
        monkeypatch.setenv("BRIDGE_ACME_KEY", "k")
        attempts = []

        def transport(*a, **k):
            attempts.append(1)
            raise GatewayError("HTTP 400")

        gw = self.make_gateway(transport, [])
        with pytest.raises(GatewayError):
            gw.complete_n("m", "p", P)
        assert len(attempts) == 1

    def test_batch_limit_splits_requests(self, monkeypatch):
        monkeypatch.setenv("BRIDGE_ACME_KEY", "k")
        calls = []
        providers = {"m": {"provider": "acme", "endpoint": "https://x.test",
                           "batch_limit": 2}}
        gw = ModelGateway("live", providers=providers,
                          transport=transport_returning(["t"], calls))
        p5 = DecodingParams(temperature=0.7, max_tokens=256, n_samples=5, seed=5)
        recs = gw.complete_n("m", "p", p5)
        assert calls == [2, 2, 1]
        assert [r.sample_index for r in recs] == [0, 1, 2, 3, 4]

    def test_missing_provider_and_credential(self, monkeypatch):
        gw = ModelGateway("live", providers=PROVIDERS,
                          transport=transport_returning(["t"]))
        with pytest.raises(ConfigError):
            gw.complete_n("unknown-model", "p", P)
        monkeypatch.delenv("BRIDGE_ACME_KEY", raising=False)
        with pytest.raises(ConfigError):
            gw.complete_n("m", "p", P)

    def test_invalid_mode(self):
        with pytest.raises(ConfigError):
            ModelGateway("streaming")


class TestRateLimiter:
    def test_window_enforced_with_fake_clock(self):
        now = [0.0]
        sleeps = []

        def clock():
            return now[0]

        def sleep(dt):
            sleeps.append(dt)
            now[0] += dt

        rl = RateLimiter(2, 10.0, clock=clock, sleep=sleep)
        rl.acquire()
        rl.acquire()
        assert sleeps == []
        rl.acquire()  # third within the window must wait out the remainder
        assert sleeps == [10.0]
        assert now[0] == 10.0

    def test_expired_stamps_free_slots(self):
        now = [0.0]
        sleeps = []
        rl = RateLimiter(1, 5.0, clock=lambda: now[0], sleep=sleeps.append)
        rl.acquire()
        now[0] = 6.0
        rl.acquire()
        assert sleeps == []

    def test_validation(self):
        with pytest.raises(ConfigError):
            RateLimiter(0, 1.0)
        with pytest.raises(ConfigError):
            RateLimiter(1, 0.0)

    def test_gateway_acquires_before_transport(self, monkeypatch):
        monkeypatch.setenv("BRIDGE_ACME_KEY", "k")
        order = []

        class Probe(RateLimiter):
            def acquire(self):
                order.append("acquire")

        def transport(*a, **k):
            order.append("call")
            return [("t", None)]

        gw = ModelGateway("live", providers=PROVIDERS, transport=transport,
                          rate_limiter=Probe(1, 1.0))
        gw.complete_n("m", "p", P)
        assert order == ["acquire", "call"]
