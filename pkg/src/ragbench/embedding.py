"""Embedding providers and vector similarity.

Two providers share one interface: a remote client speaking the common
``/v1/embeddings`` HTTP shape, and a deterministic character-trigram hashing
embedder that makes every retrieval test reproducible without a network.
All vectors are post-normalized to unit Euclidean norm on ingestion, so
similarity search reduces to a dot product.
"""

from __future__ import annotations

import hashlib
import os
from typing import Protocol, Sequence

import httpx
import numpy as np

from .errors import InputError, ProviderError
from .remote import post_json


class EmbeddingProvider(Protocol):
    kind: str
    dimension: int | None

    @property
    def fingerprint(self) -> str: ...

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def normalize(vector: np.ndarray) -> np.ndarray:
    """Scale to unit Euclidean norm; invariant under positive scaling."""
    vector = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise InputError("cannot normalize a zero vector")
    return vector / norm


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a| |b|), clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise InputError("cosine similarity is undefined for a zero vector")
    value = float(np.dot(a, b) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))


def embed_batch(provider: EmbeddingProvider, texts: Sequence[str]) -> list[np.ndarray]:
    """One unit vector per text, order-preserving."""
    texts = list(texts)
    if not texts:
        raise InputError("texts must be non-empty")
    for i, text in enumerate(texts):
        if not text:
            raise InputError(f"text at position {i} is empty")
    return provider.embed(texts)


class DeterministicEmbedder:
    """Seeded character-trigram hashing into a fixed number of buckets.

    The same input text yields an identical vector in any process, which is
    what retrieval tests and byte-identical index persistence rely on.
    """

    kind = "deterministic-test"

    def __init__(self, dimension: int = 256, seed: int = 0):
        if dimension <= 0:
            raise InputError("dimension must be positive")
        self.dimension = dimension
        self.seed = seed
        self._key = f"trigram-{seed}".encode("utf-8")

    @property
    def fingerprint(self) -> str:
        return f"det-trigram:d{self.dimension}:s{self.seed}"

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), key=self._key, digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dimension

    def _vector(self, text: str) -> np.ndarray:
        counts = np.zeros(self.dimension, dtype=np.float64)
        if len(text) < 3:
            counts[self._bucket(text)] += 1.0
        else:
            for i in range(len(text) - 2):
                counts[self._bucket(text[i : i + 3])] += 1.0
        return normalize(counts)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._vector(text) for text in texts]


class RemoteEmbedder:
    """Client for an embeddings-over-HTTP service (``/embeddings`` shape).

    Requests are batched (64 texts max per call) with bounded exponential
    backoff. Configure via EMBED_BASE_URL, EMBED_API_KEY, EMBED_MODEL.
    """

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        dimension: int | None = None,
        batch_size: int = 64,
        max_attempts: int = 3,
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.dimension = dimension
        self.batch_size = batch_size
        self.max_attempts = max_attempts
        self._client = client or httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls, **kwargs) -> "RemoteEmbedder":
        base_url = os.environ.get("EMBED_BASE_URL", "")
        model = os.environ.get("EMBED_MODEL", "")
        if not base_url or not model:
            raise ProviderError("EMBED_BASE_URL and EMBED_MODEL must be set")
        return cls(base_url, model, api_key=os.environ.get("EMBED_API_KEY", ""), **kwargs)

    @property
    def fingerprint(self) -> str:
        dim = f":d{self.dimension}" if self.dimension else ""
        return f"remote:{self.model}{dim}"

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        vectors: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = list(texts[start : start + self.batch_size])
            body = post_json(
                self._client,
                f"{self.base_url}/embeddings",
                {"model": self.model, "input": chunk},
                self._headers(),
                max_attempts=self.max_attempts,
            )
            data = body.get("data")
            if not isinstance(data, list) or len(data) != len(chunk):
                raise ProviderError("embedding response does not match the input batch")
            data = sorted(data, key=lambda item: item.get("index", 0))
            for item in data:
                vector = normalize(np.asarray(item["embedding"], dtype=np.float64))
                if self.dimension is None:
                    self.dimension = int(vector.shape[0])
                elif vector.shape[0] != self.dimension:
                    raise ProviderError("embedding dimension changed mid-stream")
                vectors.append(vector)
        return vectors
