import pytest

from ragx import Corpus, Document, Question, RagPipeline
from ragx.backends import ExtractiveMockGenerator, LocalLexicalEmbedder


@pytest.fixture
def sky_question():
    return Question(id="q-sky", text="what color is the sky")


@pytest.fixture
def sky_document():
    return Document(id="d-sky", text="the sky is blue")


@pytest.fixture
def sky_embedder(sky_question, sky_document):
    # ad-hoc convention: vocabulary covers both sides of the pair
    return LocalLexicalEmbedder.from_texts([sky_question.text, sky_document.text])


@pytest.fixture
def france_corpus():
    return Corpus(
        documents=(
            Document(
                id="france",
                text="Paris is the capital of France. Berlin is the capital of Germany.",
            ),
        )
    )


@pytest.fixture
def france_pipeline(france_corpus):
    embedder = LocalLexicalEmbedder.from_corpus(france_corpus)
    return RagPipeline(
        corpus=france_corpus,
        embedder=embedder,
        generator=ExtractiveMockGenerator(),
    )


@pytest.fixture
def corpus_dir(tmp_path):
    root = tmp_path / "corpus"
    root.mkdir()
    (root / "sky.txt").write_text("the sky is blue", encoding="utf-8")
    (root / "grass.txt").write_text("grass is green", encoding="utf-8")
    (root / "france.txt").write_text(
        "Paris is the capital of France. Berlin is the capital of Germany.",
        encoding="utf-8",
    )
    return root
