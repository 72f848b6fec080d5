"""End-to-end discovery: tag prediction, query embedding, hybrid recall,
example-level re-ranking, fusion, and top-K selection.

The engine is immutable once built and safe to query from many threads. Tag
prediction and query embedding have no data dependency, so they run
concurrently, as do the two recall paths. Every ordering decision ties off as
(final score descending, agent id ascending), which keeps results
deterministic regardless of scheduling.
"""

from __future__ import annotations

import logging
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from time import perf_counter
from typing import Mapping, Sequence

import numpy as np

from .context import (
    ApproxContextSearch,
    ContextIndex,
    NullGenerator,
    QueryGenerator,
    TemplateGenerator,
    build_context,
    expand,
)
from .core import (
    AgentCard,
    BuildError,
    ConfigError,
    EngineConfig,
    EngineError,
    InputError,
    ProviderError,
    ScoredAgent,
    fuse_scores,
)
from .embedding import Embedder, HashingEmbedder
from .intent import IntentIndex, build_intent
from .sparse import TagPostings, build_sparse
from .tagging import TagPredictor, tagger_from_env

logger = logging.getLogger(__name__)

STAGES = ("predict", "embed", "recall_sparse", "recall_dense", "rerank", "total")


@dataclass(frozen=True)
class DiscoveryResult:
    """Ranked agents plus candidate counts and per-stage timings (ms)."""

    ranked: tuple[ScoredAgent, ...]
    candidates_sparse: int
    candidates_dense: int
    candidates_total: int
    timings: dict[str, float]
    degraded: bool = False
    mode: str = "full"
    snapshot_id: str = ""


class DiscoveryBatchError(EngineError):
    """One or more queries in a batch failed; the rest were still processed."""

    def __init__(self, failures: list[tuple[int, Exception]], results: list[DiscoveryResult | None]):
        self.failures = failures
        self.results = results
        summary = ", ".join(f"[{i}] {exc}" for i, exc in failures[:5])
        super().__init__(f"{len(failures)} of {len(results)} queries failed: {summary}")


class DiscoveryEngine:
    """Frozen tri-index bundle with the online discovery procedure.

    Build once with :meth:`build`; afterwards every structure is read-only.
    The plain (description-only) context index is kept alongside the expanded
    one so the pooled/dense-only baselines can be served per request.
    """

    def __init__(
        self,
        agents: Sequence[AgentCard],
        config: EngineConfig,
        sparse: TagPostings,
        ctx: ContextIndex,
        ctx_plain: ContextIndex,
        intent: IntentIndex,
        embedder: Embedder,
        tagger: TagPredictor,
        expansion_stats: Mapping[str, int] | None = None,
        approx: ApproxContextSearch | None = None,
    ) -> None:
        self.agents: dict[str, AgentCard] = {a.id: a for a in agents}
        self.agent_order: tuple[str, ...] = tuple(a.id for a in agents)
        self.config = config
        self.sparse = sparse
        self.ctx = ctx
        self.ctx_plain = ctx_plain
        self.intent = intent
        self.embedder = embedder
        self.tagger = tagger
        self.expansion_stats = dict(expansion_stats or {})
        self.approx = approx
        self.snapshot_id = uuid.uuid4().hex
        self._pool = ThreadPoolExecutor(
            max_workers=max(2, config.workers), thread_name_prefix="discover"
        )

    # ------------------------------------------------------------------ build

    @classmethod
    def build(
        cls,
        agents: Sequence[AgentCard],
        config: EngineConfig | None = None,
        embedder: Embedder | None = None,
        tagger: TagPredictor | None = None,
        synonyms: Mapping[str, str] | None = None,
        generator: QueryGenerator | None = None,
        approx_search: bool = False,
    ) -> "DiscoveryEngine":
        """Construct all three indices from a corpus of agent cards.

        Defaults: deterministic embedder, template query generator, and a
        lexical tagger over the corpus tag vocabulary. ``approx_search``
        enables the cluster-pruned dense recall layer on the expanded context
        index (the description-only index always scans exactly).
        """
        config = config or EngineConfig()
        if not agents:
            raise BuildError("cannot build an engine over zero agents")
        embedder = embedder or HashingEmbedder(dim=config.dim)
        if embedder.dim != config.dim:
            raise BuildError(f"embedder dim {embedder.dim} != config dim {config.dim}")
        generator = generator if generator is not None else TemplateGenerator()

        sparse = build_sparse(agents, synonyms)
        if tagger is None:
            # lexical baseline, or the external predictor when GRAIL_SLM_URL is set
            tagger = tagger_from_env(sparse.vocabulary, synonyms)

        expansion_stats: dict[str, int] = {}
        docs = [expand(a, generator, config.max_syn, expansion_stats) for a in agents]
        plain_docs = [expand(a, NullGenerator()) for a in agents]
        ctx = build_context(agents, docs, embedder)
        ctx_plain = build_context(agents, plain_docs, embedder)
        intent = build_intent(agents, embedder)
        approx = ApproxContextSearch(ctx) if approx_search else None
        logger.info(
            "built indices: %d agents, %d tags, dim %d", len(agents), len(sparse), config.dim
        )
        return cls(
            agents, config, sparse, ctx, ctx_plain, intent, embedder, tagger, expansion_stats,
            approx,
        )

    # --------------------------------------------------------------- plumbing

    @property
    def num_agents(self) -> int:
        return len(self.agent_order)

    @property
    def num_tags(self) -> int:
        return len(self.sparse)

    def sparse_candidates(self, tags: Sequence[str]) -> set[str]:
        ids = self.sparse.lookup(tags)
        cap = self.config.sparse_cap
        if cap is not None and len(ids) > cap:
            ids = set(sorted(ids)[:cap])
        return ids

    def _timed_predict(self, query: str) -> tuple[tuple[str, ...], float, bool]:
        start = perf_counter()
        try:
            prediction = self.tagger.predict_tags(query, max_tags=5)
            tags = tuple(prediction.tag_names())
            degraded = False
        except ProviderError as exc:
            logger.warning("tag predictor failed, falling back to dense-only: %s", exc)
            tags, degraded = (), True
        return tags, (perf_counter() - start) * 1000.0, degraded

    def _timed_embed(self, query: str) -> tuple[np.ndarray, float]:
        start = perf_counter()
        vec = self.embedder.embed(query)
        return vec, (perf_counter() - start) * 1000.0

    # --------------------------------------------------------------- discover

    def discover(
        self,
        query: str,
        *,
        mode: str | None = None,
        final_k: int | None = None,
    ) -> DiscoveryResult:
        """Run the online pipeline for one query.

        ``mode`` and ``final_k`` override the built config per call; the
        indices themselves are shared across modes.
        """
        mode = mode or self.config.mode
        if mode not in ("full", "no_maxsim", "no_slm", "mdr"):
            raise ConfigError(f"unknown mode {mode!r}")
        final_k = self.config.final_k if final_k is None else final_k
        if final_k < 1:
            raise InputError("final_k must be positive")
        if not query.strip():
            raise InputError("query must be non-empty")

        start_total = perf_counter()
        timings = dict.fromkeys(STAGES, 0.0)
        use_sparse = mode in ("full", "no_maxsim")

        embed_future = self._pool.submit(self._timed_embed, query)
        predict_future = self._pool.submit(self._timed_predict, query) if use_sparse else None

        v_q, timings["embed"] = embed_future.result()
        tags: tuple[str, ...] = ()
        degraded = False
        if predict_future is not None:
            tags, timings["predict"], degraded = predict_future.result()
        q64 = np.asarray(v_q, dtype=np.float64)

        ctx_index = self.ctx_plain if mode == "mdr" else self.ctx
        dense_search = (
            self.approx.search if (self.approx is not None and mode != "mdr") else ctx_index.search
        )

        def _dense() -> tuple[list[tuple[str, float]], float]:
            t0 = perf_counter()
            hits = dense_search(q64, self.config.dense_top_k)
            return hits, (perf_counter() - t0) * 1000.0

        dense_future = self._pool.submit(_dense)
        if use_sparse:
            t0 = perf_counter()
            sparse_ids = self.sparse_candidates(tags)
            timings["recall_sparse"] = (perf_counter() - t0) * 1000.0
        else:
            sparse_ids = set()
        dense_hits, timings["recall_dense"] = dense_future.result()
        dense_ids = {agent_id for agent_id, _ in dense_hits}

        t0 = perf_counter()
        candidates = sorted(sparse_ids | dense_ids)
        if self.config.rerank_cap is not None:
            candidates = candidates[: self.config.rerank_cap]

        ctx_scores = ctx_index.scores_for(candidates, q64)
        if mode == "mdr":
            res_scores = np.zeros(len(candidates), dtype=np.float64)
            alpha = 1.0  # ranking by context alone
        elif mode == "no_maxsim":
            res_scores = self.intent.mean_pool_batch(candidates, q64)
            alpha = self.config.alpha
        else:
            res_scores = self.intent.max_sim_batch(candidates, q64)
            alpha = self.config.alpha

        scored = []
        for agent_id, ctx_score, res_score in zip(candidates, ctx_scores, res_scores):
            origin = frozenset(
                name
                for name, members in (("sparse", sparse_ids), ("dense", dense_ids))
                if agent_id in members
            )
            scored.append(
                ScoredAgent(
                    agent_id=agent_id,
                    context_score=float(ctx_score),
                    resonance_score=float(res_score),
                    final_score=fuse_scores(alpha, float(ctx_score), float(res_score)),
                    origin=origin,
                )
            )
        scored.sort(key=lambda s: (-s.final_score, s.agent_id))
        ranked = tuple(scored[:final_k])
        timings["rerank"] = (perf_counter() - t0) * 1000.0
        timings["total"] = (perf_counter() - start_total) * 1000.0

        return DiscoveryResult(
            ranked=ranked,
            candidates_sparse=len(sparse_ids),
            candidates_dense=len(dense_ids),
            candidates_total=len(candidates),
            timings=timings,
            degraded=degraded,
            mode=mode,
            snapshot_id=self.snapshot_id,
        )

    def discover_batch(
        self,
        queries: Sequence[str],
        *,
        mode: str | None = None,
        final_k: int | None = None,
    ) -> list[DiscoveryResult]:
        """Sequential batch, element-wise equal to scalar calls.

        Failing queries do not stop the batch; they are collected and raised
        together as :class:`DiscoveryBatchError` after every query has run.
        """
        results: list[DiscoveryResult | None] = []
        failures: list[tuple[int, Exception]] = []
        for i, query in enumerate(queries):
            try:
                results.append(self.discover(query, mode=mode, final_k=final_k))
            except EngineError as exc:
                failures.append((i, exc))
                results.append(None)
        if failures:
            raise DiscoveryBatchError(failures, results)
        return results  # type: ignore[return-value]
