"""Query-to-tag prediction behind a pluggable contract.

The built-in ``LexicalTagger`` is a deterministic stand-in for a trained
predictor: it scores every vocabulary tag by token overlap with the query. A
remote predictor can be dropped in through ``ExternalTagger`` without touching
the rest of the pipeline, and ``OracleTagger`` answers with the ground-truth
agent's tags so re-ranking quality can be measured in isolation.
"""

from __future__ import annotations

import os
import threading
from collections import defaultdict
from dataclasses import dataclass
from time import perf_counter
from typing import Iterable, Mapping, Protocol, runtime_checkable

import httpx

from .core import InputError, NotReadyError, ProviderError, canonical_tag, tokenize

ENV_SLM_URL = "GRAIL_SLM_URL"


@dataclass(frozen=True)
class TagPrediction:
    """Ranked (tag, score) pairs; scores in [0, 1], sorted descending."""

    tags: tuple[tuple[str, float], ...]
    elapsed_ms: float

    def tag_names(self) -> list[str]:
        return [tag for tag, _ in self.tags]


@runtime_checkable
class TagPredictor(Protocol):
    def predict_tags(self, query: str, max_tags: int = 5) -> TagPrediction: ...


class LexicalTagger:
    """Closed-set tag scoring by token overlap.

    ``score(tag) = |query tokens ∩ tag tokens (synonym-expanded)| / |tag tokens|``
    clamped to 1.0, ties broken alphabetically. A pure function of
    (query, vocabulary, synonym dictionary).
    """

    def __init__(self, vocabulary: Iterable[str], synonyms: Mapping[str, str] | None = None) -> None:
        self._synonyms = {
            canonical_tag(alias): canonical_tag(target) for alias, target in (synonyms or {}).items()
        }
        vocab = sorted({canonical_tag(t) for t in vocabulary if canonical_tag(t)})
        self._tag_tokens: dict[str, frozenset[str]] = {}
        expanded: dict[str, set[str]] = {}
        for tag in vocab:
            tokens = frozenset(tokenize(tag))
            self._tag_tokens[tag] = tokens
            expanded[tag] = set(tokens)
        for alias, target in self._synonyms.items():
            if target in expanded:
                expanded[target].update(tokenize(alias))
        # token -> tags mentioning it, so scoring touches only plausible tags
        self._token_to_tags: dict[str, list[str]] = defaultdict(list)
        for tag, tokens in expanded.items():
            for token in tokens:
                self._token_to_tags[token].append(tag)
        self._expanded = {tag: frozenset(tokens) for tag, tokens in expanded.items()}

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(self._tag_tokens)

    def predict_tags(self, query: str, max_tags: int = 5) -> TagPrediction:
        start = perf_counter()
        if not self._tag_tokens:
            raise NotReadyError("tag vocabulary is empty")
        if not query.strip():
            raise InputError("query must be non-empty")
        if max_tags < 1:
            raise InputError("max_tags must be positive")
        query_tokens = set(tokenize(query))
        candidates: set[str] = set()
        for token in query_tokens:
            candidates.update(self._token_to_tags.get(token, ()))
        scored: list[tuple[str, float]] = []
        for tag in candidates:
            hits = len(query_tokens & self._expanded[tag])
            if hits:
                scored.append((tag, min(1.0, hits / len(self._tag_tokens[tag]))))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        elapsed = (perf_counter() - start) * 1000.0
        return TagPrediction(tags=tuple(scored[:max_tags]), elapsed_ms=elapsed)


class OracleTagger:
    """Answers with the truth agent's tags for known benchmark queries.

    Used to force the ground-truth agent into the candidate set so re-ranker
    quality can be measured independently of predictor quality. Unknown queries
    get an empty prediction.
    """

    def __init__(self, truth_tags_by_query: Mapping[str, Iterable[str]]) -> None:
        self._tags = {
            query: tuple(sorted({canonical_tag(t) for t in tags}))
            for query, tags in truth_tags_by_query.items()
        }

    def predict_tags(self, query: str, max_tags: int = 5) -> TagPrediction:
        start = perf_counter()
        tags = self._tags.get(query, ())
        pairs = tuple((tag, 1.0) for tag in tags[:max_tags])
        return TagPrediction(tags=pairs, elapsed_ms=(perf_counter() - start) * 1000.0)


class ExternalTagger:
    """Client for a remote tag-prediction service.

    Wire contract: ``POST {endpoint}/predict_tags`` with
    ``{"query": ..., "max_tags": k}`` returns
    ``{"tags": [{"tag": ..., "score": ...}, ...]}``. Predictions outside the
    vocabulary are dropped and counted in ``dropped_out_of_vocabulary``: the
    output set stays closed no matter what the service returns.
    """

    def __init__(
        self,
        endpoint_url: str,
        vocabulary: Iterable[str],
        deadline_s: float = 0.35,
        max_inflight: int = 2,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self._url = endpoint_url.rstrip("/") + "/predict_tags"
        self._vocab = frozenset(canonical_tag(t) for t in vocabulary)
        self._limiter = threading.Semaphore(max_inflight)
        self._client = httpx.Client(timeout=deadline_s, transport=transport)
        self.dropped_out_of_vocabulary = 0

    def predict_tags(self, query: str, max_tags: int = 5) -> TagPrediction:
        start = perf_counter()
        if not self._vocab:
            raise NotReadyError("tag vocabulary is empty")
        if not query.strip():
            raise InputError("query must be non-empty")
        try:
            with self._limiter:
                response = self._client.post(self._url, json={"query": query, "max_tags": max_tags})
        except httpx.HTTPError as exc:
            raise ProviderError(f"tag predictor unreachable: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(f"tag predictor returned HTTP {response.status_code}")
        seen: set[str] = set()
        pairs: list[tuple[str, float]] = []
        for item in response.json().get("tags", []):
            tag = canonical_tag(str(item.get("tag", "")))
            if tag in seen:
                continue
            if tag not in self._vocab:
                self.dropped_out_of_vocabulary += 1
                continue
            seen.add(tag)
            score = min(1.0, max(0.0, float(item.get("score", 0.0))))
            pairs.append((tag, score))
        pairs.sort(key=lambda pair: (-pair[1], pair[0]))
        elapsed = (perf_counter() - start) * 1000.0
        return TagPrediction(tags=tuple(pairs[:max_tags]), elapsed_ms=elapsed)


def tagger_from_env(vocabulary: Iterable[str], synonyms: Mapping[str, str] | None = None) -> TagPredictor:
    """External predictor when GRAIL_SLM_URL is set, lexical baseline otherwise."""
    url = os.environ.get(ENV_SLM_URL, "").strip()
    if url:
        return ExternalTagger(url, vocabulary)
    return LexicalTagger(vocabulary, synonyms)
