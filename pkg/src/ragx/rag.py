"""Minimal open-book QA pipeline: ingest, index, retrieve, prompt, answer.

Search is exhaustive cosine over an in-memory index; corpora here are
desk-scale and the reference score must be exact, so no ANN structure.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .core import BackendDescriptor, Document, GeneratedResponse, Prompt, Question, Span
from .errors import (
    DuplicateId,
    EmptyCorpus,
    IngestError,
    PreconditionError,
    TemplateError,
)
from .backends.base import Embedder, Generator
from .backends.vectors import EmbeddingVector, cosine

DEFAULT_TEMPLATE = "Answer using the context.\nContext: {context}\nQuestion: {question}"
DEFAULT_K = 3

_CONTEXT_PH = "{context}"
_QUESTION_PH = "{question}"

INDEX_FORMAT = "ragx-index"
INDEX_VERSION = 1


@dataclass(frozen=True)
class Corpus:
    documents: Tuple[Document, ...]

    def __post_init__(self):
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateId(f"duplicate document ids: {dupes}")

    def __len__(self) -> int:
        return len(self.documents)

    def get(self, doc_id: str) -> Optional[Document]:
        for d in self.documents:
            if d.id == doc_id:
                return d
        return None


@dataclass(frozen=True)
class VectorIndex:
    entries: Tuple[Tuple[str, EmbeddingVector], ...]
    embedder_descriptor: BackendDescriptor
    documents: Tuple[Document, ...]

    def __post_init__(self):
        dims = {v.dimension for _, v in self.entries}
        if len(dims) > 1:
            raise PreconditionError(f"index vectors disagree on dimension: {sorted(dims)}")

    def document(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.id == doc_id:
                return d
        raise KeyError(doc_id)


@dataclass(frozen=True)
class RagResult:
    question: Question
    retrieved: Tuple[Tuple[Document, float], ...]
    prompt: Prompt
    response: GeneratedResponse


def _read_jsonl_documents(path: Path, rel_id: str) -> List[Document]:
    docs = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict) or "id" not in record or "text" not in record:
            raise IngestError(f"{path}:{lineno}: record needs 'id' and 'text' fields")
        metadata = record.get("metadata", {})
        if not isinstance(metadata, dict):
            raise IngestError(f"{path}:{lineno}: metadata must be an object")
        try:
            docs.append(
                Document(
                    id=str(record["id"]),
                    text=str(record["text"]),
                    metadata={str(k): str(v) for k, v in metadata.items()},
                )
            )
        except PreconditionError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}") from exc
    return docs


def ingest(path) -> Corpus:
    """Load a corpus from a .txt/.jsonl file or a directory of them.

    .txt files become one document each (id = path relative to the ingest
    root); .jsonl files carry one ``{"id","text","metadata"?}`` per line.
    Documents are ordered lexicographically by id.
    """
    root = Path(path)
    if not root.exists():
        raise IngestError(f"path does not exist: {root}")
    if root.is_file():
        files = [(root, root.name)]
    else:
        files = sorted(
            (p, p.relative_to(root).as_posix())
            for p in root.rglob("*")
            if p.is_file() and p.suffix in (".txt", ".jsonl")
        )
    docs: List[Document] = []
    for file_path, rel_id in files:
        if file_path.suffix == ".jsonl":
            docs.extend(_read_jsonl_documents(file_path, rel_id))
        elif file_path.suffix == ".txt":
            try:
                text = file_path.read_text(encoding="utf-8")
            except OSError as exc:
                raise IngestError(f"cannot read {file_path}: {exc}") from exc
            try:
                docs.append(Document(id=rel_id, text=text, metadata={"source": str(file_path)}))
            except PreconditionError as exc:
                raise IngestError(f"{file_path}: {exc}") from exc
        else:
            raise IngestError(f"unsupported corpus file type: {file_path}")
    docs.sort(key=lambda d: d.id)
    seen = set()
    for d in docs:
        if d.id in seen:
            raise DuplicateId(f"duplicate document id: {d.id!r}")
        seen.add(d.id)
    return Corpus(documents=tuple(docs))


def build_index(corpus: Corpus, embedder: Embedder) -> VectorIndex:
    if not corpus.documents:
        raise EmptyCorpus("cannot index an empty corpus")
    vectors = embedder.embed([d.text for d in corpus.documents])
    return VectorIndex(
        entries=tuple((d.id, v) for d, v in zip(corpus.documents, vectors)),
        embedder_descriptor=embedder.descriptor,
        documents=corpus.documents,
    )


def search(
    index: VectorIndex, question: Question, k: int, embedder: Embedder
) -> List[Tuple[Document, float]]:
    """Top-k documents by cosine against the question, ties by id ascending."""
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    if embedder.descriptor != index.embedder_descriptor:
        raise PreconditionError(
            f"index was built with backend {index.embedder_descriptor.backend_id!r}/"
            f"{index.embedder_descriptor.model_name!r}, not "
            f"{embedder.descriptor.backend_id!r}/{embedder.descriptor.model_name!r}"
        )
    q_vec = embedder.embed([question.text])[0]
    scored = [(doc_id, cosine(q_vec, vec)) for doc_id, vec in index.entries]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [(index.document(doc_id), score) for doc_id, score in scored[:k]]


def compose_prompt(
    template: str,
    question: Question,
    docs: Sequence[Document],
    protect_instruction: bool = True,
) -> Prompt:
    """Render the prompt template; protected spans cover everything that is
    not substituted content when ``protect_instruction`` is on."""
    for placeholder in (_CONTEXT_PH, _QUESTION_PH):
        if template.count(placeholder) != 1:
            raise TemplateError(f"template must contain {placeholder} exactly once")

    context_text = "\n".join(d.text for d in docs)
    slots = sorted(
        [
            (template.index(_CONTEXT_PH), _CONTEXT_PH, context_text),
            (template.index(_QUESTION_PH), _QUESTION_PH, question.text),
        ]
    )

    rendered_parts: List[str] = []
    substituted: List[Span] = []
    cursor = 0
    out_len = 0
    for pos, placeholder, value in slots:
        literal = template[cursor:pos]
        rendered_parts.append(literal)
        out_len += len(literal)
        substituted.append((out_len, out_len + len(value)))
        rendered_parts.append(value)
        out_len += len(value)
        cursor = pos + len(placeholder)
    rendered_parts.append(template[cursor:])
    rendered = "".join(rendered_parts)

    protected: Tuple[Span, ...] = ()
    if protect_instruction:
        spans: List[Span] = []
        prev_end = 0
        for start, end in substituted:
            if start > prev_end:
                spans.append((prev_end, start))
            prev_end = max(prev_end, end)
        if len(rendered) > prev_end:
            spans.append((prev_end, len(rendered)))
        protected = tuple(spans)

    warnings = ("empty_context",) if not docs else ()
    return Prompt(
        instruction=template,
        context_blocks=tuple((d.id, d.text) for d in docs),
        question_text=question.text,
        rendered=rendered,
        protected_spans=protected,
        warnings=warnings,
    )


def save_index(index: VectorIndex, path) -> None:
    """Persist as a one-line JSON header followed by little-endian float32
    vectors in entry order."""
    dim = index.entries[0][1].dimension if index.entries else 0
    header = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "embedder": index.embedder_descriptor.to_json_dict(),
        "dimension": dim,
        "ids": [doc_id for doc_id, _ in index.entries],
        "documents": {
            d.id: {"text": d.text, "metadata": dict(d.metadata)} for d in index.documents
        },
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8"))
        fh.write(b"\n")
        for _, vec in index.entries:
            fh.write(struct.pack(f"<{dim}f", *vec.values))


def load_index(path) -> VectorIndex:
    try:
        with open(path, "rb") as fh:
            header_line = fh.readline()
            blob = fh.read()
    except OSError as exc:
        raise IngestError(f"cannot read index {path}: {exc}") from exc
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IngestError(f"{path}: invalid index header: {exc}") from exc
    if header.get("format") != INDEX_FORMAT or header.get("version") != INDEX_VERSION:
        raise IngestError(f"{path}: not a {INDEX_FORMAT} v{INDEX_VERSION} file")
    dim = int(header["dimension"])
    ids = list(header["ids"])
    expected = dim * len(ids) * 4
    if len(blob) != expected:
        raise IngestError(f"{path}: vector payload is {len(blob)} bytes, expected {expected}")
    entries = []
    for i, doc_id in enumerate(ids):
        values = struct.unpack_from(f"<{dim}f", blob, i * dim * 4)
        entries.append((doc_id, EmbeddingVector(values=tuple(float(v) for v in values))))
    documents = tuple(
        Document(id=doc_id, text=record["text"], metadata=dict(record.get("metadata", {})))
        for doc_id, record in sorted(header["documents"].items())
    )
    return VectorIndex(
        entries=tuple(entries),
        embedder_descriptor=BackendDescriptor.from_json_dict(header["embedder"]),
        documents=documents,
    )


@dataclass
class RagPipeline:
    """Retriever + generator wired through a template; the object under
    explanation."""

    corpus: Corpus
    embedder: Embedder
    generator: Generator
    template: str = DEFAULT_TEMPLATE
    protect_instruction: bool = True
    index: Optional[VectorIndex] = None

    def __post_init__(self):
        if self.index is None:
            self.index = build_index(self.corpus, self.embedder)

    def answer(self, question: Question, k: int = DEFAULT_K) -> RagResult:
        retrieved = search(self.index, question, k, self.embedder)
        prompt = compose_prompt(
            self.template,
            question,
            [doc for doc, _ in retrieved],
            protect_instruction=self.protect_instruction,
        )
        response = self.generator.generate(prompt.rendered)
        return RagResult(
            question=question,
            retrieved=tuple(retrieved),
            prompt=prompt,
            response=response,
        )
