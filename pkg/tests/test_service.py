import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest

from qac.bundle import load_bundle, save_bundle
from qac.decode import DecodeConfig
from qac.lm import NGramConfig, train_ngram
from qac.mpc import build_trie
from qac.segmentation import train_bpe
from qac.service import SuggestService, make_server
from qac.synthetic import generate_queries


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    queries = generate_queries(400, seed=23, n_words=50)
    segmenter = train_bpe(queries, vocab_size=70)
    lm = train_ngram(queries, segmenter, NGramConfig(order=3))
    trie = build_trie(queries)
    out = tmp_path_factory.mktemp("svc") / "bundle"
    save_bundle(out, segmenter, lm, trie, seed=23, config={"test": True},
                decode=DecodeConfig(beam_width=10, num_candidates=10, retrace_limit=1))
    return out


@pytest.fixture(scope="module")
def service(bundle_dir):
    svc = SuggestService()
    svc.load(bundle_dir)
    return svc


class TestHandlers:
    def test_suggest_schema(self, service):
        status, payload = service.handle_suggest({"prefix": ["t"], "n": ["2"]})
        assert status == 200
        assert payload["prefix"] == "t"
        assert payload["model"] == "lm"
        assert 1 <= len(payload["candidates"]) <= 2
        for rank, cand in enumerate(payload["candidates"], start=1):
            assert cand["rank"] == rank
            assert cand["query"].startswith("t")
        assert payload["latency_ms"] >= 0

    def test_mpc_engine(self, service):
        status, payload = service.handle_suggest({"prefix": ["t"], "model": ["mpc"]})
        assert status == 200
        assert payload["model"] == "mpc"

    def test_unloaded_is_503(self):
        empty = SuggestService()
        assert empty.handle_suggest({"prefix": ["a"]})[0] == 503
        assert empty.handle_health()[0] == 503

    def test_empty_prefix_400(self, service):
        assert service.handle_suggest({})[0] == 400
        assert service.handle_suggest({"prefix": [""]})[0] == 400
        assert service.handle_suggest({"prefix": ["   "]})[0] == 400  # empty after cleanup

    def test_overlong_prefix_400(self, service):
        assert service.handle_suggest({"prefix": ["x" * 101]})[0] == 400

    def test_n_above_beam_width_400(self, service):
        status, payload = service.handle_suggest({"prefix": ["t"], "n": ["11"]})
        assert status == 400
        assert "beam" in payload["error"]

    def test_bad_n_and_model_400(self, service):
        assert service.handle_suggest({"prefix": ["t"], "n": ["zero"]})[0] == 400
        assert service.handle_suggest({"prefix": ["t"], "model": ["llm"]})[0] == 400

    def test_prefix_normalized_server_side(self, service):
        status, payload = service.handle_suggest({"prefix": ["  T  "]})
        assert status == 200
        assert payload["normalized_prefix"] == "t"

    def test_health_metadata(self, service):
        status, payload = service.handle_health()
        assert status == 200
        assert payload["models"]["segmentation"] == "bpe"
        assert payload["models"]["lm_order"] == 3


@pytest.fixture(scope="module")
def base_url(service):
    server = make_server(service, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


class TestHttpServer:
    def _get(self, url):
        with urllib.request.urlopen(url, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode("utf-8"))

    def test_suggest_over_http(self, base_url):
        status, payload = self._get(f"{base_url}/suggest?prefix=t&n=3")
        assert status == 200
        assert len(payload["candidates"]) <= 3

    def test_health_over_http(self, base_url):
        status, payload = self._get(f"{base_url}/health")
        assert status == 200
        assert payload["status"] == "ok"

    def test_error_status_propagates(self, base_url):
        with pytest.raises(urllib.error.HTTPError) as err:
            self._get(f"{base_url}/suggest?prefix=")
        assert err.value.code == 400

    def test_unknown_path_404(self, base_url):
        with pytest.raises(urllib.error.HTTPError) as err:
            self._get(f"{base_url}/nope")
        assert err.value.code == 404

    def test_concurrent_identical_requests_identical_payloads(self, base_url):
        url = f"{base_url}/suggest?prefix=t&n=5"

        def fetch(_):
            _, payload = self._get(url)
            return json.dumps(payload["candidates"], sort_keys=True)

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(fetch, range(16)))
        assert len(set(results)) == 1

    def test_http_matches_cli_completer(self, base_url, service, bundle_dir):
        status, payload = self._get(f"{base_url}/suggest?prefix=t&n=5")
        assert status == 200
        bundle = load_bundle(bundle_dir)
        local = bundle.completer("lm", n=5)("t")
        assert [c["query"] for c in payload["candidates"]] == local.queries()
