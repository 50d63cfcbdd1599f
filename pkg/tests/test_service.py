import json

import pytest
from fastapi.testclient import TestClient

from ragx.config import AppConfig, load_config
from ragx.core import GeneratedResponse
from ragx.errors import BackendUnavailable
from ragx.service import ExplanationStore, build_state, create_app


def _config(tmp_path, corpus_dir, **service_overrides) -> AppConfig:
    payload = {
        "generator": {"id": "extractive"},
        "rag": {"corpus": str(corpus_dir), "k": 1},
    }
    if service_overrides:
        payload["service"] = service_overrides
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return load_config(path)


@pytest.fixture
def client(tmp_path, corpus_dir):
    state = build_state(_config(tmp_path, corpus_dir))
    return TestClient(create_app(state))


@pytest.fixture
def bare_client():
    # no corpus configured
    state = build_state(AppConfig())
    return TestClient(create_app(state))


SKY_BODY = {"question": "what color is the sky", "text": "the sky is blue"}


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    payload = response.json()
    assert payload["status"] == "ok"
    kinds = {b["kind"] for b in payload["backends"]}
    assert kinds == {"embedder", "generator"}
    assert all(b["reachable"] for b in payload["backends"])


def test_health_flags_unreachable_backend(tmp_path, corpus_dir):
    config = _config(tmp_path, corpus_dir)
    import dataclasses

    config = dataclasses.replace(
        config,
        generator=dataclasses.replace(
            config.generator, id="http", endpoint="http://127.0.0.1:9", model="m"
        ),
    )
    client = TestClient(create_app(build_state(config)))
    response = client.get("/api/health")
    assert response.status_code == 200
    generator = [b for b in response.json()["backends"] if b["kind"] == "generator"][0]
    assert generator["reachable"] is False


def test_query_roundtrip(client):
    response = client.post("/api/query", json={"question": "what color is the sky", "k": 1})
    assert response.status_code == 200
    payload = response.json()
    assert payload["retrieved"][0]["id"] == "sky.txt"
    assert payload["retrieved"][0]["score"] == pytest.approx(0.67082, abs=1e-5)
    assert payload["response"]["text"]


def test_query_empty_question_is_422(client):
    response = client.post("/api/query", json={"question": "   "})
    assert response.status_code == 422
    assert set(response.json()) == {"code", "message"}


def test_query_missing_question_is_400(client):
    response = client.post("/api/query", json={})
    assert response.status_code == 400
    assert response.json()["code"] == "malformed_body"


def test_query_bad_k_is_400(client):
    response = client.post("/api/query", json={"question": "q", "k": "three"})
    assert response.status_code == 400


def test_query_zero_k_is_422(client):
    response = client.post("/api/query", json={"question": "q", "k": 0})
    assert response.status_code == 422


def test_query_without_corpus_is_404(bare_client):
    response = bare_client.post("/api/query", json={"question": "q"})
    assert response.status_code == 404
    assert response.json()["code"] == "no_corpus"


def test_malformed_json_body_is_400(client):
    response = client.post(
        "/api/query", content=b"{not json", headers={"Content-Type": "application/json"}
    )
    assert response.status_code == 400


def test_explain_retrieval_adhoc(client):
    response = client.post("/api/explain/retrieval", json=SKY_BODY)
    assert response.status_code == 200
    assert "X-Explanation-Id" in response.headers
    payload = json.loads(response.content)
    assert payload["reference"]["score"] == pytest.approx(0.67082, abs=1e-5)
    assert {f["text"]: f["weight"] for f in payload["features"]}["sky"] == 1.0


def test_explain_retrieval_requires_target_field(client):
    assert client.post("/api/explain/retrieval", json={"question": "q"}).status_code == 400
    both = dict(SKY_BODY, document_id="sky.txt")
    assert client.post("/api/explain/retrieval", json=both).status_code == 400


def test_explain_retrieval_document_id(client):
    response = client.post(
        "/api/explain/retrieval",
        json={"question": "what color is the sky", "document_id": "sky.txt"},
    )
    assert response.status_code == 200
    assert json.loads(response.content)["source_text"] == "the sky is blue"


def test_explain_retrieval_unknown_document(client):
    response = client.post(
        "/api/explain/retrieval", json={"question": "q", "document_id": "nope.txt"}
    )
    assert response.status_code == 404
    assert response.json()["code"] == "unknown_document"


def test_explain_retrieval_unknown_strategy_is_400(client):
    response = client.post("/api/explain/retrieval", json=dict(SKY_BODY, strategy="bogus"))
    assert response.status_code == 400
    assert response.json()["code"] == "unknown_strategy"


def test_explain_retrieval_empty_text_is_422(client):
    response = client.post(
        "/api/explain/retrieval", json={"question": "q", "text": "   "}
    )
    assert response.status_code == 422


def test_explain_generation_via_pipeline(client):
    response = client.post(
        "/api/explain/generation", json={"question": "What is the capital of France?", "k": 1}
    )
    assert response.status_code == 200
    payload = json.loads(response.content)
    assert payload["reference"]["response"] == "Paris is the capital of France."
    weights = {f["text"]: f["weight"] for f in payload["features"]}
    assert weights["Paris is the capital of France."] == 1.0
    assert weights["Berlin is the capital of Germany."] == 0.0


def test_explain_generation_supplied_pair(client):
    prompt = "Context: Alpha beta. Gamma delta.\nQuestion: alpha?"
    response = client.post(
        "/api/explain/generation",
        json={"prompt": prompt, "reference_response": "Alpha beta."},
    )
    assert response.status_code == 200
    payload = json.loads(response.content)
    assert payload["reference"]["response"] == "Alpha beta."
    assert payload["target"] == "generation"


def test_explain_generation_include_instruction(client):
    base = client.post(
        "/api/explain/generation", json={"question": "What is the capital of France?"}
    )
    full = client.post(
        "/api/explain/generation",
        json={"question": "What is the capital of France?", "include_instruction": True},
    )
    base_texts = [f["text"] for f in json.loads(base.content)["features"]]
    full_texts = [f["text"] for f in json.loads(full.content)["features"]]
    assert "Answer using the context." not in base_texts
    assert "Answer using the context." in full_texts


def test_explain_generation_unknown_comparator_is_400(client):
    response = client.post(
        "/api/explain/generation",
        json={"question": "What is the capital of France?", "comparator": "bogus"},
    )
    assert response.status_code == 400


def test_explain_generation_requires_question_or_prompt(client):
    assert client.post("/api/explain/generation", json={}).status_code == 400


def test_perturbation_lookup(client):
    response = client.post("/api/explain/retrieval", json=SKY_BODY)
    key = response.headers["X-Explanation-Id"]
    explanation = json.loads(response.content)
    target = explanation["features"][1]

    what_if = client.post(f"/api/perturbation/{key}/1")
    assert what_if.status_code == 200
    payload = json.loads(what_if.content)
    assert payload["explanation_id"] == key
    assert payload["feature_index"] == 1
    assert payload["feature_text"] == "sky"
    assert payload["outcome"] == target["outcome"]
    assert payload["outcome"]["perturbed_text"] == "the is blue"


def test_perturbation_unknown_explanation(client):
    assert client.post("/api/perturbation/deadbeef/0").status_code == 404


def test_perturbation_unknown_feature(client):
    key = client.post("/api/explain/retrieval", json=SKY_BODY).headers["X-Explanation-Id"]
    assert client.post(f"/api/perturbation/{key}/99").status_code == 404


def test_explanation_id_is_idempotent(client):
    first = client.post("/api/explain/retrieval", json=SKY_BODY)
    second = client.post("/api/explain/retrieval", json=SKY_BODY)
    assert first.headers["X-Explanation-Id"] == second.headers["X-Explanation-Id"]
    assert first.content == second.content


def test_config_endpoint_redacts_secrets(tmp_path, corpus_dir):
    payload = {
        "embedder": {"id": "lexical"},
        "generator": {"id": "http", "endpoint": "http://x", "model": "m", "api_key": "sekret"},
        "rag": {"corpus": str(corpus_dir)},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    client = TestClient(create_app(build_state(load_config(path))))
    response = client.get("/api/config")
    assert response.status_code == 200
    body = response.text
    assert "sekret" not in body
    assert json.loads(body)["generator"]["api_key"] == "***"


def test_lru_store_evicts_oldest():
    store = ExplanationStore(capacity=2)
    from ragx import Document, Question, explain_retrieval
    from ragx.backends import LocalLexicalEmbedder

    keys = []
    for text in ("the sky is blue", "grass is green", "snow is white"):
        question = Question(id="q", text="what color")
        document = Document(id="d", text=text)
        embedder = LocalLexicalEmbedder.from_texts([question.text, text])
        keys.append(store.put(explain_retrieval(question, document, embedder)))
    assert len(store) == 2
    assert store.get(keys[0]) is None
    assert store.get(keys[1]) is not None
    assert store.get(keys[2]) is not None


def test_lru_eviction_through_service(tmp_path, corpus_dir):
    state = build_state(_config(tmp_path, corpus_dir, lru_capacity=1))
    client = TestClient(create_app(state))
    first_key = client.post("/api/explain/retrieval", json=SKY_BODY).headers["X-Explanation-Id"]
    client.post(
        "/api/explain/retrieval",
        json={"question": "is grass green", "text": "grass is green"},
    )
    assert client.post(f"/api/perturbation/{first_key}/0").status_code == 404


class _FailingGenerator:
    def __init__(self):
        from ragx.core import BackendDescriptor

        self.descriptor = BackendDescriptor(backend_id="failing", kind="generator")

    def generate(self, prompt_text) -> GeneratedResponse:
        raise BackendUnavailable("backend is down")


def test_backend_failure_maps_to_502(tmp_path, corpus_dir):
    state = build_state(_config(tmp_path, corpus_dir))
    state.generator = _FailingGenerator()
    client = TestClient(create_app(state))
    response = client.post(
        "/api/explain/generation", json={"question": "What is the capital of France?"}
    )
    assert response.status_code == 502
    assert response.json()["code"] == "backend_unavailable"


def test_generator_selection_per_request(tmp_path, corpus_dir):
    config = _config(tmp_path, corpus_dir)
    client = TestClient(create_app(build_state(config)))
    response = client.post(
        "/api/query", json={"question": "what color is the sky", "generator": "constant"}
    )
    assert response.status_code == 200
    assert response.json()["response"]["text"] == "ok"
