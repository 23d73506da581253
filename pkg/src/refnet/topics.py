"""Topic classification of reference contexts.

Each context window is embedded, compared to the eight topic vectors by
cosine similarity, and labeled with every topic whose score clears its
threshold (multi-label; zero labels is allowed). Two providers ship: a
remote embedding-service client and a deterministic offline lexicon
provider, so the classifier runs without network access.
"""

from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import requests

from .dataset import ReferenceSet
from .errors import FetchError, IntegrityError, UndefinedSimilarityError
from .matching import ReferenceRecord

TOPIC_LABELS = ("ethics", "politics", "religion", "mathematics", "science", "art", "metaphysics", "epistemology")

DEFAULT_THRESHOLD = 0.35

ENDPOINT_ENV = "REFNET_EMBED_ENDPOINT"
API_KEY_ENV = "REFNET_EMBED_API_KEY"

_TOKEN_RE = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class EmbeddingVector:
    dim: int
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if len(self.values) != self.dim:
            raise ValueError(f"expected {self.dim} values, got {len(self.values)}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding values must be finite")

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)


@dataclass(frozen=True)
class TopicConfig:
    labels: tuple[str, ...] = TOPIC_LABELS
    threshold: Mapping[str, float] = field(default_factory=lambda: {l: DEFAULT_THRESHOLD for l in TOPIC_LABELS})
    provider_id: str = "lexicon"
    prompts: Mapping[str, str] = field(default_factory=dict)  # optional per-topic prompt expansion

    def __post_init__(self) -> None:
        if tuple(self.labels) != TOPIC_LABELS:
            raise ValueError(f"labels must be exactly {TOPIC_LABELS} in order")
        missing = [l for l in self.labels if l not in self.threshold]
        if missing:
            raise ValueError(f"thresholds missing for labels: {missing}")


@dataclass(frozen=True)
class ClassifiedReference:
    record_id: str
    scores: Mapping[str, float]
    labels: frozenset[str]


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """a.b / (|a||b|), in [-1, 1] up to rounding."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.is_zero() or b.is_zero():
        raise UndefinedSimilarityError("cosine similarity is undefined for the zero vector")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    norm = math.sqrt(sum(x * x for x in a.values)) * math.sqrt(sum(y * y for y in b.values))
    return dot / norm


class EmbeddingProvider:
    """Deterministic map from text to a fixed-dimension vector."""

    provider_id: str = "base"

    def embed(self, text: str) -> EmbeddingVector:
        raise NotImplementedError

    def embed_many(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self.embed(t) for t in texts]

    def topic_vector(self, label: str, prompt: str | None = None) -> EmbeddingVector:
        """Topic vectors default to embedding the bare label term."""
        return self.embed(prompt or label)


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class LexiconProvider(EmbeddingProvider):
    """Offline provider over shipped topic word lists.

    Document vectors are term frequencies over the union vocabulary of all
    lexicons, L2-normalized; a context sharing no vocabulary with any lexicon
    embeds to the zero vector. Topic vectors are uniform over each topic's
    own lexicon (equivalently, the embedding of the lexicon itself), unless
    ``topic_mode="label"`` forces the generic bare-label behaviour.
    """

    provider_id = "lexicon"

    def __init__(self, lexicon_dir: Path | None = None, topic_mode: str = "lexicon"):
        if topic_mode not in ("lexicon", "label"):
            raise ValueError("topic_mode must be 'lexicon' or 'label'")
        self.topic_mode = topic_mode
        self.lexicons: dict[str, tuple[str, ...]] = {}
        for label in TOPIC_LABELS:
            words = _load_lexicon(label, lexicon_dir)
            if not words:
                raise ValueError(f"lexicon for {label!r} is empty")
            self.lexicons[label] = words
        self.vocab: tuple[str, ...] = tuple(sorted({w for words in self.lexicons.values() for w in words}))
        self._index = {w: i for i, w in enumerate(self.vocab)}

    @property
    def dim(self) -> int:
        return len(self.vocab)

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        counts = [0.0] * self.dim
        for token in _tokenize(text):
            idx = self._index.get(token)
            if idx is not None:
                counts[idx] += 1.0
        norm = math.sqrt(sum(c * c for c in counts))
        if norm > 0:
            counts = [c / norm for c in counts]
        return EmbeddingVector(dim=self.dim, values=tuple(counts))

    def topic_vector(self, label: str, prompt: str | None = None) -> EmbeddingVector:
        if self.topic_mode == "label" or prompt is not None:
            return super().topic_vector(label, prompt)
        if label not in self.lexicons:
            raise ValueError(f"unknown topic label {label!r}")
        return self.embed(" ".join(self.lexicons[label]))


def _load_lexicon(label: str, lexicon_dir: Path | None) -> tuple[str, ...]:
    if lexicon_dir is not None:
        raw = (lexicon_dir / f"{label}.txt").read_text(encoding="utf-8")
    else:
        raw = resources.files("refnet").joinpath(f"lexicons/{label}.txt").read_text(encoding="utf-8")
    words = []
    for line in raw.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            words.append(line)
    return tuple(dict.fromkeys(words))


class RemoteEmbeddingProvider(EmbeddingProvider):
    """Client for an embedding service speaking
    ``POST {texts: [...]} -> {vectors: [[...]]}``.

    Endpoint and API key come from the environment; batches are capped and
    sent with bounded retries.
    """

    provider_id = "remote"

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        *,
        batch_size: int = 32,
        session: requests.Session | None = None,
        max_retries: int = 3,
        backoff_s: float = 0.5,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not self.endpoint:
            raise ValueError(f"no embedding endpoint configured (set {ENDPOINT_ENV})")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.batch_size = max(1, batch_size)
        self.session = session or requests.Session()
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self._dim: int | None = None

    def _post_batch(self, texts: list[str]) -> list[list[float]]:
        import time as _time

        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self.session.post(self.endpoint, json={"texts": texts}, headers=headers, timeout=120)
                resp.raise_for_status()
                vectors = resp.json()["vectors"]
                if len(vectors) != len(texts):
                    raise ValueError(f"provider returned {len(vectors)} vectors for {len(texts)} texts")
                return vectors
            except (requests.RequestException, ValueError, KeyError) as exc:
                last = exc
                if attempt < self.max_retries:
                    _time.sleep(self.backoff_s * (2**attempt))
        raise FetchError(f"embedding service failed after {self.max_retries + 1} attempts: {last}")

    def embed_many(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        for t in texts:
            if not t:
                raise ValueError("cannot embed empty text")
        out: list[EmbeddingVector] = []
        for i in range(0, len(texts), self.batch_size):
            for values in self._post_batch(list(texts[i : i + self.batch_size])):
                vec = EmbeddingVector(dim=len(values), values=tuple(float(v) for v in values))
                if self._dim is None:
                    self._dim = vec.dim
                elif vec.dim != self._dim:
                    raise ValueError(f"provider dimension changed: {self._dim} -> {vec.dim}")
                out.append(vec)
        return out

    def embed(self, text: str) -> EmbeddingVector:
        return self.embed_many([text])[0]


def classify_reference(
    record: ReferenceRecord, config: TopicConfig, provider: EmbeddingProvider
) -> ClassifiedReference:
    """Score one context against every topic and apply the threshold rule."""
    return classify_contexts([(record.record_id, record.context)], config, provider)[0]


def classify_contexts(
    items: Sequence[tuple[str, str]], config: TopicConfig, provider: EmbeddingProvider
) -> list[ClassifiedReference]:
    """Classify (record_id, context) pairs; output order follows the input."""
    for _, context in items:
        if not context:
            raise ValueError("cannot classify an empty context")
    topic_vectors = {label: provider.topic_vector(label, config.prompts.get(label)) for label in config.labels}
    doc_vectors = provider.embed_many([context for _, context in items])
    out: list[ClassifiedReference] = []
    for (record_id, _), doc in zip(items, doc_vectors):
        if doc.is_zero():
            # No shared vocabulary with any topic: unclassifiable, not an error.
            scores = {label: 0.0 for label in config.labels}
        else:
            scores = {label: cosine_similarity(doc, topic_vectors[label]) for label in config.labels}
        labels = frozenset(label for label in config.labels if scores[label] >= config.threshold[label])
        out.append(ClassifiedReference(record_id=record_id, scores=scores, labels=labels))
    return out


def classify_references(
    records: Sequence[ReferenceRecord], config: TopicConfig, provider: EmbeddingProvider
) -> list[ClassifiedReference]:
    return classify_contexts([(r.record_id, r.context) for r in records], config, provider)


def build_topic_subsets(
    classified: Iterable[ClassifiedReference], base: ReferenceSet
) -> dict[str, ReferenceSet]:
    """Per-topic subsets of the base set; subsets may overlap or be empty."""
    by_id = {c.record_id: c for c in classified}
    missing = [r.record_id for r in base.records if r.record_id not in by_id]
    if missing:
        raise IntegrityError(f"classification does not cover base records: {missing[:5]}...")
    subsets: dict[str, ReferenceSet] = {}
    for label in TOPIC_LABELS:
        members = (r for r in base.records if label in by_id[r.record_id].labels)
        subsets[label] = ReferenceSet.from_records(f"topic:{label}", members)
    return subsets


CLASSIFIED_CSV_FIELDS = ["record_id", *TOPIC_LABELS, "labels"]


def write_classified_csv(path: Path, classified: Iterable[ClassifiedReference]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(CLASSIFIED_CSV_FIELDS)
        for c in classified:
            row = [c.record_id]
            row.extend(f"{c.scores[label]:.6f}" for label in TOPIC_LABELS)
            row.append(";".join(label for label in TOPIC_LABELS if label in c.labels))
            writer.writerow(row)


def read_classified_csv(path: Path) -> list[ClassifiedReference]:
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            labels = frozenset(l for l in row["labels"].split(";") if l)
            scores = {label: float(row[label]) for label in TOPIC_LABELS}
            out.append(ClassifiedReference(record_id=row["record_id"], scores=scores, labels=labels))
    return out
