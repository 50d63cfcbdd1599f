import math
import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ragx import Corpus, Document
from ragx.backends import (
    CachedEmbedder,
    CachedGenerator,
    ConstantGenerator,
    ExtractiveMockGenerator,
    LocalLexicalEmbedder,
    cosine,
    unit_normalize,
    zero_vector,
)
from ragx.backends.vectors import EmbeddingVector
from ragx.errors import DimensionError, EmptyCorpus, PreconditionError

from .oracle import oracle_tf_cosine, oracle_tokens


def test_vocabulary_dimension():
    emb = LocalLexicalEmbedder.from_texts(["the sky is blue"])
    assert emb.dimension == 4
    assert emb.vocabulary == ("blue", "is", "sky", "the")


def test_embed_repeated_token_concentrates_mass():
    emb = LocalLexicalEmbedder.from_texts(["the sky is blue"])
    vec = emb.embed(["the the"])[0]
    coord = emb.vocabulary.index("the")
    assert vec.values[coord] == pytest.approx(1.0)
    assert sum(v != 0.0 for v in vec.values) == 1


def test_embed_equal_mass_tokens():
    emb = LocalLexicalEmbedder.from_texts(["the sky is blue"])
    vec = emb.embed(["sky blue"])[0]
    by_token = dict(zip(emb.vocabulary, vec.values))
    assert by_token["sky"] == pytest.approx(1 / math.sqrt(2))
    assert by_token["blue"] == pytest.approx(1 / math.sqrt(2))
    assert by_token["the"] == 0.0
    assert by_token["is"] == 0.0


def test_query_document_cosine_hand_computed():
    # vocabulary spans question and document; overlap {is, the, sky}
    q = "what color is the sky"
    d = "the sky is blue"
    emb = LocalLexicalEmbedder.from_texts([q, d])
    qv, dv = emb.embed([q, d])
    expected = 3 / (math.sqrt(5) * math.sqrt(4))
    assert cosine(qv, dv) == pytest.approx(expected, abs=1e-12)
    assert cosine(qv, dv) == pytest.approx(0.67082, abs=1e-5)
    vocab = set(oracle_tokens(q)) | set(oracle_tokens(d))
    assert cosine(qv, dv) == pytest.approx(oracle_tf_cosine(q, d, vocab), abs=1e-12)


def test_embed_empty_text_is_zero_vector():
    emb = LocalLexicalEmbedder.from_texts(["the sky is blue"])
    vec = emb.embed([""])[0]
    assert vec.is_zero
    assert vec.dimension == 4


def test_embed_oov_only_is_zero_vector():
    emb = LocalLexicalEmbedder.from_texts(["the sky is blue"])
    assert emb.embed(["zebra quark"])[0].is_zero


def test_embed_deterministic_batch():
    emb = LocalLexicalEmbedder.from_texts(["the sky is blue"])
    a, b = emb.embed(["a sky", "a sky"])
    assert a == b


def test_embed_permutation_equivariance():
    emb = LocalLexicalEmbedder.from_texts(["the sky is blue", "grass is green"])
    texts = ["the sky", "grass", "is blue", ""]
    direct = emb.embed(texts)
    permuted = emb.embed(list(reversed(texts)))
    assert direct == list(reversed(permuted))


def test_embed_requires_nonempty_batch():
    emb = LocalLexicalEmbedder.from_texts(["a"])
    with pytest.raises(PreconditionError):
        emb.embed([])


def test_from_corpus_and_empty_corpus():
    corpus = Corpus(documents=(Document(id="d", text="the sky is blue"),))
    assert LocalLexicalEmbedder.from_corpus(corpus).dimension == 4
    with pytest.raises(EmptyCorpus):
        LocalLexicalEmbedder.from_texts([])
    with pytest.raises(EmptyCorpus):
        LocalLexicalEmbedder.from_texts(["?!"])


def test_cosine_identities():
    e1 = EmbeddingVector(values=(1.0, 0.0))
    e2 = EmbeddingVector(values=(0.0, 1.0))
    diag = unit_normalize([1.0, 1.0])
    assert cosine(e1, e1) == 1.0
    assert cosine(e1, e2) == 0.0
    assert cosine(diag, e1) == pytest.approx(1 / math.sqrt(2), abs=1e-9)


def test_cosine_zero_vector_convention():
    z = zero_vector(3)
    v = unit_normalize([1.0, 2.0, 2.0])
    assert cosine(z, v) == 0.0
    assert cosine(v, z) == 0.0
    assert cosine(z, z) == 0.0


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionError):
        cosine(zero_vector(2), zero_vector(3))


def test_vector_invariants():
    with pytest.raises(PreconditionError):
        EmbeddingVector(values=(0.5, 0.5))  # norm != 1 and != 0
    with pytest.raises(PreconditionError):
        EmbeddingVector(values=(float("nan"), 0.0))


finite_components = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False),
    min_size=1,
    max_size=8,
)


@given(finite_components, finite_components)
def test_cosine_symmetry_exact(a_raw, b_raw):
    size = min(len(a_raw), len(b_raw))
    a = unit_normalize(a_raw[:size])
    b = unit_normalize(b_raw[:size])
    left, right = cosine(a, b), cosine(b, a)
    assert left == right
    assert -1.0 <= left <= 1.0


@given(finite_components)
def test_cosine_self_similarity(raw):
    vec = unit_normalize(raw)
    if vec.is_zero:
        assert cosine(vec, vec) == 0.0
    else:
        assert cosine(vec, vec) == pytest.approx(1.0, abs=1e-9)


FRANCE_PROMPT = (
    "Answer using the context.\n"
    "Context: Paris is the capital of France. Berlin is the capital of Germany.\n"
    "Question: What is the capital of France?"
)


def test_mock_generator_picks_max_overlap_sentence():
    gen = ExtractiveMockGenerator()
    # first sentence shares {is, the, capital, of, france}; second only 4
    assert gen.generate(FRANCE_PROMPT).text == "Paris is the capital of France."


def test_mock_generator_tie_breaks_to_earliest():
    gen = ExtractiveMockGenerator()
    prompt = "Context: Alpha beta. Gamma delta.\nQuestion: zebra?"
    assert gen.generate(prompt).text == "Alpha beta."


def test_mock_generator_empty_question_returns_first_sentence():
    gen = ExtractiveMockGenerator()
    prompt = "Context: Alpha beta. Gamma delta.\nQuestion:"
    assert gen.generate(prompt).text == "Alpha beta."


def test_mock_generator_deterministic():
    gen = ExtractiveMockGenerator()
    assert gen.generate(FRANCE_PROMPT) == gen.generate(FRANCE_PROMPT)


def test_mock_generator_empty_context():
    gen = ExtractiveMockGenerator()
    assert gen.generate("Context:\nQuestion: anything?").text == ""


def test_constant_generator():
    gen = ConstantGenerator(text="fixed")
    assert gen.generate("whatever").text == "fixed"
    assert gen.descriptor.deterministic


class _CountingEmbedder:
    def __init__(self):
        self.inner = LocalLexicalEmbedder.from_texts(["a b c d"])
        self.descriptor = self.inner.descriptor
        self.calls = []

    def embed(self, texts):
        self.calls.append(list(texts))
        return self.inner.embed(texts)


def test_cached_embedder_dedupes():
    counting = _CountingEmbedder()
    cached = CachedEmbedder(counting)
    out = cached.embed(["a", "b", "a"])
    assert counting.calls == [["a", "b"]]
    assert out[0] == out[2]
    cached.embed(["b", "c"])
    assert counting.calls == [["a", "b"], ["c"]]


class _CountingGenerator:
    def __init__(self):
        self.inner = ConstantGenerator()
        self.descriptor = self.inner.descriptor
        self.lock = threading.Lock()
        self.count = 0

    def generate(self, prompt_text):
        with self.lock:
            self.count += 1
        return self.inner.generate(prompt_text)


def test_cached_generator_dedupes_across_threads():
    counting = _CountingGenerator()
    cached = CachedGenerator(counting)
    results = []

    def work():
        results.append(cached.generate("same prompt"))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert counting.count == 1
    assert len({r.text for r in results}) == 1
