"""Acceptance suite: one test per primary criterion, each at its stated
tolerance, printing one pass line on success.

The oracles live in tests/oracle.py and recompute everything from first
principles (Counter-based term frequencies, explicit dot/norm arithmetic,
token-list perturbation, average-rank correlation).
"""

import json
import random
import time

import pytest
from fastapi.testclient import TestClient

from ragx import (
    Corpus,
    Document,
    ExplainerConfig,
    Question,
    RagPipeline,
    explain_generation,
    explain_rag,
    explain_retrieval,
    normalize_weights,
    to_canonical_json,
)
from ragx.backends import ExtractiveMockGenerator, LocalLexicalEmbedder
from ragx.backends.http import RETRY_BACKOFFS, OpenAIChatClient, OpenAIEmbeddingClient
from ragx.cli import main as cli_main
from ragx.config import AppConfig, load_config
from ragx.decompose import decompose_words
from ragx.errors import BackendProtocolError, BackendUnavailable
from ragx.evaluate import answer_correctness, completeness, correlate, prf1
from ragx.perturb import leave_one_out
from ragx.service import build_state, create_app

from .oracle import (
    oracle_ranking,
    oracle_retrieval_explanation,
    oracle_spearman,
)
from .test_http_backends import FakeResponse, FakeSession, _chat_payload, _embedding_payload

GOLDEN_DIR = __import__("pathlib").Path(__file__).parent / "golden"


def _accept(name):
    print(f"\nACCEPTANCE PASS: {name}")


# ---------------------------------------------------------------------------
# 1. Retrieval-explanation oracle equivalence on >= 5 fixtures, < 1 s
# ---------------------------------------------------------------------------

ORACLE_FIXTURES = [
    ("what color is the sky", "the sky is blue"),
    ("who wrote the iliad", "homer wrote the iliad and the odyssey"),
    ("capital of france", "paris is the capital city of france"),
    ("does grass grow green", "green grass grows on green hills"),
    ("how fast do cheetahs run", "cheetahs run very fast, faster than any sprinter"),
    ("is the sky big", "the sky is blue"),
]


def test_acceptance_retrieval_oracle_equivalence():
    started = time.perf_counter()
    for q_text, d_text in ORACLE_FIXTURES:
        question = Question(id="q", text=q_text)
        document = Document(id="d", text=d_text)
        embedder = LocalLexicalEmbedder.from_texts([q_text, d_text])
        explanation = explain_retrieval(question, document, embedder)

        s_d, scores, deltas, weights = oracle_retrieval_explanation(q_text, d_text)
        assert explanation.reference_score == pytest.approx(s_d, abs=1e-9)
        assert len(explanation.features) == len(scores)
        for fa, s in zip(explanation.features, scores):
            assert fa.outcome.score == pytest.approx(s, abs=1e-9), (q_text, fa.feature.text)

        lib_weights = [fa.weight for fa in explanation.features]
        assert explanation.weight_ranking() == tuple(oracle_ranking(weights))
        # exact tie structure: every pairwise order relation must agree
        for i in range(len(weights)):
            for j in range(len(weights)):
                lib_cmp = (lib_weights[i] > lib_weights[j]) - (lib_weights[i] < lib_weights[j])
                ora_cmp = (weights[i] > weights[j]) - (weights[i] < weights[j])
                assert lib_cmp == ora_cmp, (q_text, i, j)
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"oracle equivalence took {elapsed:.3f}s"
    _accept(f"retrieval oracle equivalence on {len(ORACLE_FIXTURES)} fixtures in {elapsed:.3f}s")


# ---------------------------------------------------------------------------
# 2. Sky fixture reference score and argmax feature
# ---------------------------------------------------------------------------

def test_acceptance_sky_fixture():
    question = Question(id="q", text="what color is the sky")
    document = Document(id="d", text="the sky is blue")
    embedder = LocalLexicalEmbedder.from_texts([question.text, document.text])
    explanation = explain_retrieval(question, document, embedder)

    assert explanation.reference_score == pytest.approx(0.67082, abs=1e-5)
    by_text = {fa.feature.text: fa for fa in explanation.features}
    # "sky" attains the maximum weight 1.0 ("the" and "is" tie with it:
    # plain term frequency moves the cosine equally for any single
    # query-overlap token, and the oracle confirms the tie)
    assert by_text["sky"].weight == 1.0
    top = max(fa.weight for fa in explanation.features)
    assert top == 1.0
    argmax_texts = {fa.feature.text for fa in explanation.features if fa.weight == top}
    assert "sky" in argmax_texts
    _accept("sky fixture: s_d=0.67082 +/- 1e-5, 'sky' at weight 1.0")


# ---------------------------------------------------------------------------
# 3. Generation-explanation fixture
# ---------------------------------------------------------------------------

def test_acceptance_generation_fixture():
    corpus = Corpus(
        documents=(
            Document(
                id="france",
                text="Paris is the capital of France. Berlin is the capital of Germany.",
            ),
        )
    )
    pipeline = RagPipeline(
        corpus=corpus,
        embedder=LocalLexicalEmbedder.from_corpus(corpus),
        generator=ExtractiveMockGenerator(),
    )
    result = pipeline.answer(Question(id="q", text="What is the capital of France?"), k=1)
    explanation = explain_generation(
        result.prompt, pipeline.generator, reference_response=result.response
    )
    by_text = {fa.feature.text: fa for fa in explanation.features}
    paris = by_text["Paris is the capital of France."]
    berlin = by_text["Berlin is the capital of Germany."]
    assert paris.weight == 1.0
    assert berlin.weight == 0.0
    assert paris.raw_delta == pytest.approx(1 - 2 / 3, abs=1e-6)
    _accept("generation fixture: Paris 1.0 (delta 1/3), Berlin 0.0 under token_f1")


# ---------------------------------------------------------------------------
# 4. Perturbation algebra over >= 1000 fuzzed inputs
# ---------------------------------------------------------------------------

def _random_text(rng):
    words = []
    for _ in range(rng.randint(1, 12)):
        word = "".join(rng.choice("abcdefgh,.?!") for _ in range(rng.randint(1, 6)))
        if word.strip():
            words.append(word)
    sep = lambda: rng.choice([" ", "  ", " \t ", "\n"])
    text = words[0] if words else "x"
    for w in words[1:]:
        text += sep() + w
    return text


def test_acceptance_perturbation_algebra():
    rng = random.Random(20240901)
    checked = 0
    for _ in range(1000):
        text = _random_text(rng)
        if not text.strip():
            continue
        features = decompose_words(text)
        # spans re-slice exactly
        for f in features:
            assert text[f.span[0] : f.span[1]] == f.text

        # optionally protect the first feature
        protect_first = rng.random() < 0.3
        protected = (features[0].span,) if protect_first else ()
        perturbed = leave_one_out(text, features, protected)
        unprotected = len(features) - (1 if protect_first else 0)
        assert len(perturbed) == unprotected

        # injective feature_index mapping
        indices = [p.feature_index for p in perturbed]
        assert len(set(indices)) == len(indices)

        # whitespace collapse: token multiset loses exactly the removed token
        by_index = {f.index: f for f in features}
        for p in perturbed:
            expected = [f.text for f in features]
            expected.remove(by_index[p.feature_index].text)
            assert sorted(p.text.split()) == sorted(expected)
            assert p.text == p.text.strip()
        checked += 1

    # removed feature absent at its original position (unique-token texts)
    for _ in range(1000):
        n = rng.randint(1, 10)
        text = " ".join(f"tok{i}x{rng.randint(0, 9)}{i}" for i in range(n))
        features = decompose_words(text)
        for f, p in zip(features, leave_one_out(text, features)):
            assert f.text not in p.text.split()
            start = f.span[0]
            assert p.text[start : start + len(f.text)] != f.text
    assert checked >= 600  # the generator rarely yields blank text
    _accept(f"perturbation algebra over {checked + 1000} fuzzed inputs")


# ---------------------------------------------------------------------------
# 5. Normalization properties over fuzzed delta vectors
# ---------------------------------------------------------------------------

def test_acceptance_normalization_properties():
    rng = random.Random(7311)
    for _ in range(1000):
        raw = [rng.uniform(-5, 5) for _ in range(rng.randint(1, 16))]
        weights = normalize_weights(raw)
        assert all(0.0 <= w <= 1.0 for w in weights)
        if any(d > 0 for d in raw):
            assert max(weights) == 1.0
        else:
            assert all(w == 0.0 for w in weights)
        # scale invariance: exact under powers of two, 1e-9 otherwise
        assert normalize_weights([2.0 * d for d in raw]) == weights
        c = rng.uniform(1e-3, 1e3)
        for a, b in zip(normalize_weights([c * d for d in raw]), weights):
            assert a == pytest.approx(b, abs=1e-9)
    _accept("normalization properties over 1000 fuzzed delta vectors")


# ---------------------------------------------------------------------------
# 6. Metric correctness against hand-computed tables
# ---------------------------------------------------------------------------

def test_acceptance_metric_correctness():
    assert completeness({1, 3, 5}, [1, 2, 3]) == pytest.approx(2 / 3)
    assert completeness({1, 2}, [0, 1, 2]) == 1.0
    assert completeness({1, 2}, [3, 4]) == 0.0

    assert prf1({1, 2}, {2, 3}) == (0.5, 0.5, 0.5)
    assert prf1({1, 2}, {1, 2}) == (1.0, 1.0, 1.0)
    assert prf1({1, 2}, set()) == (0.0, 0.0, 0.0)

    assert answer_correctness("Paris", "paris.") == (1, 1.0)
    exact, f1 = answer_correctness("the capital is Paris", "Paris")
    assert (exact, f1) == (0, pytest.approx(0.4))
    assert answer_correctness("", "Paris") == (0, 0.0)

    assert correlate([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0, abs=1e-9)
    assert correlate([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-9)
    assert correlate([1, 2, 3], [2, 1, 3]) == pytest.approx(0.5, abs=1e-9)

    rng = random.Random(99)
    for _ in range(50):
        n = rng.randint(3, 15)
        xs = [rng.randint(0, 6) / 3 for _ in range(n)]
        ys = [rng.randint(0, 6) / 3 for _ in range(n)]
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            continue
        assert correlate(xs, ys) == pytest.approx(oracle_spearman(xs, ys), abs=1e-9)
    _accept("metric correctness: completeness, prf1, answer_correctness, spearman")


# ---------------------------------------------------------------------------
# 7. Determinism and canonicalization (incl. golden files)
# ---------------------------------------------------------------------------

def _full_pipeline_jsons():
    corpus = Corpus(
        documents=(
            Document(id="sky", text="the sky is blue"),
            Document(
                id="france",
                text="Paris is the capital of France. Berlin is the capital of Germany.",
            ),
        )
    )
    question = Question(id="q", text="What is the capital of France?")
    embedder = LocalLexicalEmbedder.from_texts(
        [d.text for d in corpus.documents] + [question.text]
    )
    pipeline = RagPipeline(
        corpus=corpus, embedder=embedder, generator=ExtractiveMockGenerator()
    )
    result = pipeline.answer(question, k=2)
    retrievals, generation = explain_rag(result, embedder, pipeline.generator)
    return [to_canonical_json(e) for e in retrievals + [generation]]


def test_acceptance_determinism_and_canonicalization():
    first = _full_pipeline_jsons()
    second = _full_pipeline_jsons()
    assert first == second

    golden_sky = (GOLDEN_DIR / "sky_retrieval.json").read_text(encoding="utf-8")
    question = Question(id="q-sky", text="what color is the sky")
    document = Document(id="d-sky", text="the sky is blue")
    embedder = LocalLexicalEmbedder.from_texts([question.text, document.text])
    regenerated = to_canonical_json(explain_retrieval(question, document, embedder))
    assert regenerated == golden_sky

    golden_generation = (GOLDEN_DIR / "capital_generation.json").read_text(encoding="utf-8")
    corpus = Corpus(
        documents=(
            Document(
                id="france",
                text="Paris is the capital of France. Berlin is the capital of Germany.",
            ),
        )
    )
    pipeline = RagPipeline(
        corpus=corpus,
        embedder=LocalLexicalEmbedder.from_corpus(corpus),
        generator=ExtractiveMockGenerator(),
    )
    result = pipeline.answer(Question(id="q", text="What is the capital of France?"), k=1)
    explanation = explain_generation(
        result.prompt, pipeline.generator, reference_response=result.response
    )
    assert to_canonical_json(explanation) == golden_generation
    _accept("determinism: repeated runs and golden files byte-identical")


# ---------------------------------------------------------------------------
# 8. Cross-interface equality: service bytes == CLI bytes
# ---------------------------------------------------------------------------

def test_acceptance_cross_interface_equality(capsys):
    code = cli_main(
        [
            "explain",
            "retrieval",
            "what color is the sky",
            "--text",
            "the sky is blue",
            "--format",
            "json",
        ]
    )
    cli_out = capsys.readouterr().out
    assert code == 0

    client = TestClient(create_app(build_state(AppConfig())))
    response = client.post(
        "/api/explain/retrieval",
        json={"question": "what color is the sky", "text": "the sky is blue"},
    )
    assert response.status_code == 200
    assert response.content == cli_out.encode("utf-8")
    _accept("cross-interface equality: service bytes == CLI bytes")


# ---------------------------------------------------------------------------
# 9. Backend protocol conformance
# ---------------------------------------------------------------------------

def test_acceptance_backend_protocol_conformance():
    # bit-exact embeddings request
    session = FakeSession([FakeResponse(payload=_embedding_payload([[1.0, 0.0]]))])
    embedder = OpenAIEmbeddingClient("http://api.test/v1", "emb", session=session, api_key=None)
    embedder.embed(["hello world"])
    assert session.requests[0][0] == "http://api.test/v1/embeddings"
    assert session.requests[0][1] == b'{"input":["hello world"],"model":"emb"}'

    # bit-exact chat request with pinned temperature
    session = FakeSession([FakeResponse(payload=_chat_payload("y"))])
    generator = OpenAIChatClient("http://api.test/v1", "chat", session=session, api_key=None)
    generator.generate("p")
    assert session.requests[0][0] == "http://api.test/v1/chat/completions"
    body = session.requests[0][1]
    assert body == b'{"messages":[{"content":"p","role":"user"}],"model":"chat","temperature":0}'
    assert json.loads(body)["temperature"] == 0

    # retry fires on 429 / 5xx / transport, with the documented backoffs
    import requests as _requests

    for failure in (FakeResponse(status_code=429), FakeResponse(status_code=503),
                    _requests.ConnectionError("down")):
        sleeps = []
        session = FakeSession([failure, FakeResponse(payload=_chat_payload("ok"))])
        client = OpenAIChatClient(
            "http://a", "m", session=session, sleep=sleeps.append, api_key=None
        )
        assert client.generate("p").text == "ok"
        assert len(session.requests) == 2
        assert sleeps == [RETRY_BACKOFFS[0]]

    # retry never fires on plain 4xx
    sleeps = []
    session = FakeSession([FakeResponse(status_code=400, payload={"error": "bad"})])
    client = OpenAIChatClient("http://a", "m", session=session, sleep=sleeps.append, api_key=None)
    with pytest.raises(BackendProtocolError):
        client.generate("p")
    assert len(session.requests) == 1 and sleeps == []

    # exhaustion surfaces BackendUnavailable after 1 + 3 attempts
    sleeps = []
    session = FakeSession([FakeResponse(status_code=500)] * 4)
    client = OpenAIChatClient("http://a", "m", session=session, sleep=sleeps.append, api_key=None)
    with pytest.raises(BackendUnavailable):
        client.generate("p")
    assert len(session.requests) == 4
    assert sleeps == list(RETRY_BACKOFFS)
    _accept("backend protocol conformance: wire bytes, retry policy, temperature 0")
