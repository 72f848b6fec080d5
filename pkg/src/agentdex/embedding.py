"""Embedding providers: deterministic feature hashing plus an HTTP client.

Both providers return unit-normalized float32 vectors of a fixed dimension, so
cosine similarity downstream is always a plain dot product.
"""

from __future__ import annotations

import hashlib
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .core import (
    DEFAULT_DIM,
    ConfigError,
    InputError,
    ProviderError,
    normalize,
    tokenize,
)

ENV_EMBED_URL = "GRAIL_EMBED_URL"

_SEED_MASK = (1 << 64) - 1


@runtime_checkable
class Embedder(Protocol):
    """Anything that maps text to unit vectors of a fixed dimension."""

    dim: int

    def embed(self, text: str) -> np.ndarray: ...

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]: ...


@dataclass(frozen=True)
class EmbedderSpec:
    """Declarative choice of provider; see ``build_embedder``."""

    kind: str = "deterministic"
    dim: int = DEFAULT_DIM
    seed: int = 0
    endpoint_url: str = ""
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.kind not in ("deterministic", "external"):
            raise ConfigError(f"unknown embedder kind {self.kind!r}")
        if self.dim < 1:
            raise ConfigError("dim must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.kind == "external" and not self.endpoint_url:
            raise ConfigError("external embedder requires endpoint_url")


class HashingEmbedder:
    """Seeded feature-hashing embedder: tokenize, hash unigrams and bigrams to
    signed buckets, accumulate, normalize.

    A pure function of ``(seed, dim, text)``: the hash is keyed blake2b, so
    vectors are reproducible across runs and platforms. Lexical overlap between
    texts shows up as cosine similarity, which is what makes offline benchmark
    rankings meaningful without model weights.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0) -> None:
        if dim < 1:
            raise ConfigError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self._key = (seed & _SEED_MASK).to_bytes(8, "big")
        # feature -> (bucket, sign); the memo is a pure cache, safe under the GIL
        self._slots: dict[str, tuple[int, float]] = {}

    def _slot(self, feature: str) -> tuple[int, float]:
        slot = self._slots.get(feature)
        if slot is None:
            digest = hashlib.blake2b(feature.encode("utf-8"), key=self._key, digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            slot = (value % self.dim, 1.0 if value >> 63 else -1.0)
            self._slots[feature] = slot
        return slot

    def _features(self, text: str) -> Counter[str]:
        tokens = tokenize(text)
        if not tokens:
            # non-empty text with no alphanumeric tokens still embeds deterministically
            return Counter({text.strip(): 1})
        feats = Counter(tokens)
        feats.update(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
        return feats

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise InputError("cannot embed empty text")
        vec = np.zeros(self.dim, dtype=np.float64)
        for feature, count in self._features(text).items():
            bucket, sign = self._slot(feature)
            vec[bucket] += sign * count
        if not vec.any():
            # signed counts cancelled out; fall back to a whole-text bucket
            bucket, sign = self._slot("\x00" + text.strip())
            vec[bucket] = sign
        return normalize(vec, self.dim)

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        for i, text in enumerate(texts):
            if not text.strip():
                raise InputError(f"texts[{i}] is empty")
        return [self.embed(text) for text in texts]


class ExternalEmbedder:
    """Client for a remote embedding service.

    Wire contract: ``POST {endpoint}/embed`` with ``{"texts": [...]}`` returns
    ``{"vectors": [[...], ...]}``. Responses are normalized client-side, so the
    service does not have to return unit vectors. Retries use exponential
    backoff and give up after ``retries`` attempts.
    """

    def __init__(
        self,
        endpoint_url: str,
        dim: int = DEFAULT_DIM,
        batch_size: int = 32,
        retries: int = 3,
        backoff_s: float = 0.1,
        max_inflight: int = 4,
        timeout_s: float = 10.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        if not endpoint_url:
            raise ConfigError("endpoint_url must be non-empty")
        self.dim = dim
        self.batch_size = batch_size
        self.retries = retries
        self.backoff_s = backoff_s
        self._url = endpoint_url.rstrip("/") + "/embed"
        self._limiter = threading.Semaphore(max_inflight)
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def _post(self, texts: list[str]) -> list[list[float]]:
        last_error = "no attempt made"
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff_s * (2 ** (attempt - 1)))
            try:
                with self._limiter:
                    response = self._client.post(self._url, json={"texts": texts})
            except httpx.HTTPError as exc:
                last_error = str(exc)
                continue
            if response.status_code == 200:
                body = response.json()
                vectors = body.get("vectors")
                if not isinstance(vectors, list) or len(vectors) != len(texts):
                    raise ProviderError(
                        f"embedding endpoint returned {len(vectors) if isinstance(vectors, list) else 'no'} "
                        f"vectors for {len(texts)} texts"
                    )
                return vectors
            last_error = f"HTTP {response.status_code}"
        raise ProviderError(
            f"embedding endpoint failed after {self.retries} attempts: {last_error}"
        )

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        for i, text in enumerate(texts):
            if not text.strip():
                raise InputError(f"texts[{i}] is empty")
        out: list[np.ndarray] = []
        texts = list(texts)
        for start in range(0, len(texts), self.batch_size):
            chunk = texts[start : start + self.batch_size]
            out.extend(normalize(v, self.dim) for v in self._post(chunk))
        return out


def build_embedder(spec: EmbedderSpec, transport: httpx.BaseTransport | None = None) -> Embedder:
    if spec.kind == "deterministic":
        return HashingEmbedder(dim=spec.dim, seed=spec.seed)
    return ExternalEmbedder(
        spec.endpoint_url, dim=spec.dim, batch_size=spec.batch_size, transport=transport
    )


def embedder_from_env(dim: int = DEFAULT_DIM, seed: int = 0) -> Embedder:
    """External provider when GRAIL_EMBED_URL is set, deterministic otherwise."""
    url = os.environ.get(ENV_EMBED_URL, "").strip()
    if url:
        return ExternalEmbedder(url, dim=dim)
    return HashingEmbedder(dim=dim, seed=seed)
