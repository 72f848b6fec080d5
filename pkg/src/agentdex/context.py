"""Context index: one dense vector per agent over a query-expanded pseudo-doc.

Short descriptions and user queries rarely share vocabulary, so each agent's
description is concatenated with a handful of synthetic queries before
embedding. Expansion never rewrites the description: the pseudo-doc always
starts with it verbatim.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .core import AgentCard, BuildError, DimensionError, InputError, ProviderError, tokenize
from .embedding import Embedder

logger = logging.getLogger(__name__)

DEFAULT_MAX_SYN = 5


@dataclass(frozen=True)
class PseudoDoc:
    """An agent's description extended with synthetic queries."""

    agent_id: str
    text: str
    synthetic_queries: tuple[str, ...] = ()


@runtime_checkable
class QueryGenerator(Protocol):
    def generate(self, description: str, tags: Sequence[str], n: int) -> list[str]: ...


class NullGenerator:
    """No expansion: the pseudo-doc is the description itself."""

    def generate(self, description: str, tags: Sequence[str], n: int) -> list[str]:
        return []


class TemplateGenerator:
    """Offline synthetic-query source.

    Renders fixed question templates over the agent's own tags and the longer
    description tokens. Deterministic per agent (seeded from the description
    and tags), and phrased differently from any benchmark query template so
    expansion text stays independent of evaluation text.
    """

    _TEMPLATES = (
        "which agent can handle {a} {b}",
        "help with {a} in {c}",
        "looking for {b} support across {c}",
        "{a} and {b} tooling recommendations",
        "best agent for {c} {a} work",
        "who takes care of {b} requests",
    )

    def generate(self, description: str, tags: Sequence[str], n: int) -> list[str]:
        tokens = [t for t in tokenize(description) if len(t) >= 5]
        words: list[str] = []
        for tag in tags:
            words.extend(tokenize(tag))
        if not words:
            words = tokens[:4] or ["general"]
        digest = hashlib.blake2b(
            ("\x1f".join([description, *tags])).encode("utf-8"), digest_size=8
        ).digest()
        rng = random.Random(int.from_bytes(digest, "big"))
        fillers = tokens or words
        queries = []
        for i in range(n):
            template = self._TEMPLATES[i % len(self._TEMPLATES)]
            queries.append(
                template.format(
                    a=rng.choice(words), b=rng.choice(words), c=rng.choice(fillers)
                )
            )
        return queries


class ExternalQueryGenerator:
    """Client for a remote generator.

    Wire contract: ``POST {endpoint}/gen_queries`` with
    ``{"description": ..., "tags": [...], "n": k}`` returns
    ``{"queries": [...]}``.
    """

    def __init__(
        self,
        endpoint_url: str,
        timeout_s: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self._url = endpoint_url.rstrip("/") + "/gen_queries"
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def generate(self, description: str, tags: Sequence[str], n: int) -> list[str]:
        try:
            response = self._client.post(
                self._url, json={"description": description, "tags": list(tags), "n": n}
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"query generator unreachable: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(f"query generator returned HTTP {response.status_code}")
        queries = response.json().get("queries", [])
        return [str(q) for q in queries]


def expand(
    agent: AgentCard,
    generator: QueryGenerator | None = None,
    max_syn: int = DEFAULT_MAX_SYN,
    stats: dict[str, int] | None = None,
) -> PseudoDoc:
    """Build the agent's pseudo-doc: description first, synthetic queries after.

    Generator failures degrade to zero synthetic queries and bump the
    ``generator_failures`` counter in ``stats`` instead of failing the build.
    """
    description = agent.description.strip()
    if not description:
        raise InputError(f"agent {agent.id!r}: description must be non-empty")
    queries: list[str] = []
    if generator is not None and max_syn > 0:
        try:
            raw = generator.generate(description, agent.tags, max_syn)
            queries = [q.strip() for q in raw if q and q.strip()][:max_syn]
        except Exception as exc:  # degraded expansion is better than no index
            logger.warning("synthetic-query generator failed for %s: %s", agent.id, exc)
            if stats is not None:
                stats["generator_failures"] = stats.get("generator_failures", 0) + 1
            queries = []
    text = description if not queries else description + " " + " ".join(queries)
    return PseudoDoc(agent_id=agent.id, text=text, synthetic_queries=tuple(queries))


class ContextIndex:
    """One unit vector per agent with exact top-k search.

    Vectors are stored as float32 rows; searches score against a float64 copy
    so dot products accumulate at full precision. Frozen after build.
    """

    def __init__(self, ids: Sequence[str], matrix: np.ndarray, dim: int) -> None:
        self.ids: tuple[str, ...] = tuple(ids)
        self.dim = dim
        self.matrix = np.asarray(matrix, dtype=np.float32).reshape(len(self.ids), dim)
        self.matrix.setflags(write=False)
        self._scan = self.matrix.astype(np.float64)
        self._scan.setflags(write=False)
        self._slot = {agent_id: i for i, agent_id in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self._slot

    def vector_for(self, agent_id: str) -> np.ndarray:
        return self.matrix[self._slot[agent_id]]

    def _check_query(self, v_q: np.ndarray) -> np.ndarray:
        v_q = np.asarray(v_q, dtype=np.float64)
        if v_q.shape != (self.dim,):
            raise DimensionError(f"query has shape {v_q.shape}, index dimension is {self.dim}")
        return v_q

    def scores_for(self, agent_ids: Sequence[str], v_q: np.ndarray) -> np.ndarray:
        """Context scores for an explicit candidate list, one batched product."""
        v_q = self._check_query(v_q)
        if not agent_ids:
            return np.zeros(0, dtype=np.float64)
        rows = np.fromiter((self._slot[a] for a in agent_ids), dtype=np.int64, count=len(agent_ids))
        return self._scan[rows] @ v_q

    def search(self, v_q: np.ndarray, k: int) -> list[tuple[str, float]]:
        """Exact top-k by dot product; ties broken by agent id ascending."""
        v_q = self._check_query(v_q)
        if k < 1:
            raise InputError("k must be positive")
        n = len(self.ids)
        if n == 0:
            return []
        scores = self._scan @ v_q
        if k >= n:
            pool = range(n)
        else:
            kth = np.partition(scores, n - k)[n - k]
            pool = np.flatnonzero(scores >= kth)
        ranked = sorted(pool, key=lambda i: (-scores[i], self.ids[i]))[: min(k, n)]
        return [(self.ids[i], float(scores[i])) for i in ranked]


class ApproxContextSearch:
    """Optional cluster-pruned search layer over a :class:`ContextIndex`.

    Rows are grouped around seeded spherical k-means centroids; a query scans
    only the ``n_probe`` closest clusters. Exact search stays the default --
    this layer is for corpora large enough that a full scan no longer fits the
    latency budget, and it is expected to keep recall at 0.95 or better
    against exact search before being enabled.
    """

    def __init__(
        self,
        index: ContextIndex,
        n_clusters: int | None = None,
        n_probe: int | None = None,
        replicas: int = 2,
        seed: int = 0,
        iterations: int = 8,
    ) -> None:
        self.index = index
        vectors = index.matrix.astype(np.float64)
        n = len(index)
        if n == 0:
            self.centroids = np.zeros((0, index.dim), dtype=np.float64)
            self.buckets: list[np.ndarray] = []
            self.n_probe = 0
            return
        n_clusters = min(n_clusters or max(1, int(round(n ** 0.5))), n)
        self.n_probe = min(n_clusters, n_probe or max(1, -(-2 * n_clusters // 3)))
        replicas = min(max(1, replicas), n_clusters)
        rng = np.random.default_rng(seed)
        centroids = vectors[rng.choice(n, size=n_clusters, replace=False)].copy()
        assignment = np.zeros(n, dtype=np.int64)
        for _ in range(iterations):
            assignment = np.argmax(vectors @ centroids.T, axis=1)
            for cluster in range(n_clusters):
                members = vectors[assignment == cluster]
                if len(members):
                    mean = members.mean(axis=0)
                    norm = float(np.linalg.norm(mean))
                    if norm > 0.0:
                        centroids[cluster] = mean / norm
        self.centroids = centroids
        # spill each row into its `replicas` closest clusters: near-boundary
        # rows stay findable without probing everything
        sims = vectors @ centroids.T
        top = np.argsort(-sims, axis=1, kind="stable")[:, :replicas]
        self.buckets = [np.flatnonzero((top == c).any(axis=1)) for c in range(n_clusters)]

    def search(self, v_q: np.ndarray, k: int) -> list[tuple[str, float]]:
        v_q = self.index._check_query(v_q)
        if k < 1:
            raise InputError("k must be positive")
        if not self.buckets:
            return []
        probe = np.argsort(-(self.centroids @ v_q), kind="stable")[: self.n_probe]
        rows = [self.buckets[c] for c in probe if len(self.buckets[c])]
        if not rows:
            return []
        pool = np.unique(np.concatenate(rows))
        scores = self.index._scan[pool] @ v_q
        ranked = sorted(
            range(len(pool)), key=lambda i: (-scores[i], self.index.ids[pool[i]])
        )[: min(k, len(pool))]
        return [(self.index.ids[pool[i]], float(scores[i])) for i in ranked]


def build_context(
    agents: Sequence[AgentCard],
    pseudo_docs: Sequence[PseudoDoc],
    embedder: Embedder,
) -> ContextIndex:
    """Embed one pseudo-doc per agent, in agent order."""
    if len(agents) != len(pseudo_docs):
        raise BuildError(
            f"{len(agents)} agents but {len(pseudo_docs)} pseudo-docs; need exactly one each"
        )
    for agent, doc in zip(agents, pseudo_docs):
        if agent.id != doc.agent_id:
            raise BuildError(f"pseudo-doc order mismatch at agent {agent.id!r}")
        if not doc.text.startswith(agent.description.strip()):
            raise BuildError(f"pseudo-doc for {agent.id!r} does not start with its description")
    dim = embedder.dim
    if not agents:
        return ContextIndex((), np.zeros((0, dim), dtype=np.float32), dim)
    vectors = embedder.embed_batch([doc.text for doc in pseudo_docs])
    for vec in vectors:
        if vec.shape != (dim,):
            raise BuildError(f"embedder returned shape {vec.shape}, expected ({dim},)")
    return ContextIndex([a.id for a in agents], np.vstack(vectors), dim)
