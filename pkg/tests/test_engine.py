from __future__ import annotations

import random

import numpy as np
import pytest

from agentdex import (
    BuildError,
    ConfigError,
    DiscoveryBatchError,
    DiscoveryEngine,
    EngineConfig,
    HashingEmbedder,
    InputError,
    fuse_scores,
)
from agentdex.core import ProviderError
from agentdex.tagging import TagPrediction
from tests.conftest import make_card


class EmptyTagger:
    def predict_tags(self, query, max_tags=5):
        return TagPrediction(tags=(), elapsed_ms=0.0)


class ExplodingTagger:
    def predict_tags(self, query, max_tags=5):
        raise ProviderError("predictor offline")


def effective_alpha(engine, mode):
    return 1.0 if mode == "mdr" else engine.config.alpha


class TestBuild:
    def test_zero_agents_rejected(self):
        with pytest.raises(BuildError):
            DiscoveryEngine.build([], EngineConfig(dim=32))

    def test_dim_mismatch_rejected(self, hand_agents):
        with pytest.raises(BuildError):
            DiscoveryEngine.build(
                hand_agents, EngineConfig(dim=64), embedder=HashingEmbedder(dim=32)
            )

    def test_duplicate_ids_rejected(self, hand_agents):
        with pytest.raises(BuildError):
            DiscoveryEngine.build(
                hand_agents + [make_card("alpha", ["x"])],
                EngineConfig(dim=32),
                embedder=HashingEmbedder(dim=32),
            )

    def test_counts(self, small_engine, small_corpus):
        assert small_engine.num_agents == len(small_corpus.agents)
        assert small_engine.num_tags == len(small_engine.sparse.vocabulary)


class TestDiscover:
    def test_singleton_corpus(self):
        agent = make_card("only", ["solo-tag"], examples=["do the solo thing"])
        engine = DiscoveryEngine.build([agent], EngineConfig(dim=64), embedder=HashingEmbedder(64))
        result = engine.discover("anything at all")
        assert [s.agent_id for s in result.ranked] == ["only"]
        scored = result.ranked[0]
        assert scored.final_score == fuse_scores(
            0.5, scored.context_score, scored.resonance_score
        )

    def test_verbatim_example_resonance_one(self, small_engine, small_corpus):
        agent = small_corpus.agents[5]
        result = small_engine.discover(agent.examples[0], final_k=50)
        scored = {s.agent_id: s for s in result.ranked}
        assert agent.id in scored
        assert scored[agent.id].resonance_score == pytest.approx(1.0, abs=1e-6)

    def test_empty_query_rejected(self, small_engine):
        with pytest.raises(InputError):
            small_engine.discover("   ")

    def test_unknown_mode_rejected(self, small_engine):
        with pytest.raises(ConfigError):
            small_engine.discover("q", mode="bogus")

    def test_final_k_truncates(self, small_engine, small_corpus):
        result = small_engine.discover(small_corpus.queries[0].text, final_k=3)
        assert len(result.ranked) <= 3

    def test_ranked_sorted_and_fused(self, small_engine, small_corpus):
        for mode in ("full", "no_maxsim", "no_slm", "mdr"):
            result = small_engine.discover(small_corpus.queries[1].text, mode=mode)
            alpha = effective_alpha(small_engine, mode)
            keys = [(-s.final_score, s.agent_id) for s in result.ranked]
            assert keys == sorted(keys)
            for scored in result.ranked:
                assert scored.final_score == fuse_scores(
                    alpha, scored.context_score, scored.resonance_score
                )
                assert -1.0 <= scored.context_score <= 1.0
                assert -1.0 <= scored.resonance_score <= 1.0

    def test_candidate_counts(self, small_engine, small_corpus):
        result = small_engine.discover(small_corpus.queries[2].text)
        assert result.candidates_total <= result.candidates_sparse + result.candidates_dense
        assert result.candidates_dense <= small_engine.config.dense_top_k

    def test_union_matches_paths(self, small_engine, small_corpus):
        rng = random.Random(31)
        queries = rng.sample(list(small_corpus.queries), 30)
        for record in queries:
            result = small_engine.discover(record.text, final_k=10_000)
            tags = small_engine.tagger.predict_tags(record.text, max_tags=5).tag_names()
            sparse_ids = small_engine.sparse_candidates(tags)
            vq = small_engine.embedder.embed(record.text).astype(np.float64)
            dense_ids = {
                aid for aid, _ in small_engine.ctx.search(vq, small_engine.config.dense_top_k)
            }
            assert {s.agent_id for s in result.ranked} == sparse_ids | dense_ids

    def test_origin_flags(self, small_engine, small_corpus):
        result = small_engine.discover(small_corpus.queries[0].text, final_k=200)
        for scored in result.ranked:
            assert scored.origin <= {"sparse", "dense"}
            assert scored.origin

    def test_timings_shape_and_invariant(self, small_engine, small_corpus):
        result = small_engine.discover(small_corpus.queries[0].text)
        assert set(result.timings) == {
            "predict", "embed", "recall_sparse", "recall_dense", "rerank", "total"
        }
        t = result.timings
        assert t["total"] >= max(t["predict"], t["embed"]) + t["rerank"] - 1e-6

    def test_empty_prediction_equals_no_slm(self, small_corpus):
        config = EngineConfig(dim=128, dense_top_k=20)
        embedder = HashingEmbedder(dim=128, seed=3)
        engine = DiscoveryEngine.build(
            small_corpus.agents, config, embedder=embedder, tagger=EmptyTagger()
        )
        for record in small_corpus.queries[:25]:
            full = engine.discover(record.text, mode="full")
            dense_only = engine.discover(record.text, mode="no_slm")
            assert [s.agent_id for s in full.ranked] == [s.agent_id for s in dense_only.ranked]

    def test_predictor_failure_degrades_to_dense(self, small_corpus):
        config = EngineConfig(dim=128, dense_top_k=20)
        embedder = HashingEmbedder(dim=128, seed=3)
        engine = DiscoveryEngine.build(
            small_corpus.agents, config, embedder=embedder, tagger=ExplodingTagger()
        )
        record = small_corpus.queries[0]
        degraded = engine.discover(record.text)
        assert degraded.degraded is True
        dense_only = engine.discover(record.text, mode="no_slm")
        assert [s.agent_id for s in degraded.ranked] == [s.agent_id for s in dense_only.ranked]

    def test_mdr_ranks_by_context_alone(self, small_engine, small_corpus):
        result = small_engine.discover(small_corpus.queries[3].text, mode="mdr")
        assert result.candidates_sparse == 0
        for scored in result.ranked:
            assert scored.resonance_score == 0.0
            assert scored.final_score == scored.context_score

    def test_dense_top_k_monotonicity(self, small_corpus):
        embedder = HashingEmbedder(dim=128, seed=3)
        engines = {
            k: DiscoveryEngine.build(
                small_corpus.agents,
                EngineConfig(dim=128, dense_top_k=k),
                embedder=embedder,
            )
            for k in (5, 20, 80)
        }
        for record in small_corpus.queries[:15]:
            best = [engines[k].discover(record.text).ranked[0].final_score for k in (5, 20, 80)]
            assert best[0] <= best[1] + 1e-12
            assert best[1] <= best[2] + 1e-12

    def test_rank_order_invariant_under_positive_rescaling(self):
        rng = random.Random(9)
        for _ in range(50):
            table = [
                (f"a{i}", rng.uniform(-1, 1), rng.uniform(-1, 1)) for i in range(20)
            ]
            alpha = rng.random()
            scale = rng.uniform(0.1, 10.0)
            base = sorted(table, key=lambda row: (-fuse_scores(alpha, row[1], row[2]), row[0]))
            scaled = sorted(
                table,
                key=lambda row: (-fuse_scores(alpha, scale * row[1], scale * row[2]), row[0]),
            )
            assert [r[0] for r in base] == [r[0] for r in scaled]

    def test_sparse_cap(self, small_corpus):
        embedder = HashingEmbedder(dim=128, seed=3)
        capped = DiscoveryEngine.build(
            small_corpus.agents, EngineConfig(dim=128, sparse_cap=5), embedder=embedder
        )
        result = capped.discover(small_corpus.queries[0].text)
        assert result.candidates_sparse <= 5

    def test_rerank_cap(self, small_corpus):
        embedder = HashingEmbedder(dim=128, seed=3)
        capped = DiscoveryEngine.build(
            small_corpus.agents, EngineConfig(dim=128, rerank_cap=7), embedder=embedder
        )
        result = capped.discover(small_corpus.queries[0].text, final_k=100)
        assert result.candidates_total <= 7

    def test_snapshot_id_present(self, small_engine, small_corpus):
        result = small_engine.discover(small_corpus.queries[0].text)
        assert result.snapshot_id == small_engine.snapshot_id != ""


def test_default_tagger_honors_env(monkeypatch, hand_agents):
    from agentdex.tagging import ENV_SLM_URL, ExternalTagger, LexicalTagger

    monkeypatch.delenv(ENV_SLM_URL, raising=False)
    engine = DiscoveryEngine.build(
        hand_agents, EngineConfig(dim=32), embedder=HashingEmbedder(dim=32)
    )
    assert isinstance(engine.tagger, LexicalTagger)
    monkeypatch.setenv(ENV_SLM_URL, "http://slm")
    engine = DiscoveryEngine.build(
        hand_agents, EngineConfig(dim=32), embedder=HashingEmbedder(dim=32)
    )
    assert isinstance(engine.tagger, ExternalTagger)


class TestDiscoverBatch:
    def test_empty(self, small_engine):
        assert small_engine.discover_batch([]) == []

    def test_matches_scalar_calls(self, small_engine, small_corpus):
        texts = [q.text for q in small_corpus.queries[:5]]
        batch = small_engine.discover_batch(texts)
        for text, result in zip(texts, batch):
            scalar = small_engine.discover(text)
            assert [s.agent_id for s in scalar.ranked] == [s.agent_id for s in result.ranked]

    def test_failure_carries_index_and_continues(self, small_engine, small_corpus):
        texts = [small_corpus.queries[0].text, "   ", small_corpus.queries[1].text]
        with pytest.raises(DiscoveryBatchError) as excinfo:
            small_engine.discover_batch(texts)
        error = excinfo.value
        assert [i for i, _ in error.failures] == [1]
        assert error.results[0] is not None
        assert error.results[2] is not None

    def test_full_benchmark_batch_populates_timings(self, small_engine, small_corpus):
        results = small_engine.discover_batch([q.text for q in small_corpus.queries])
        assert len(results) == len(small_corpus.queries)
        for result in results:
            assert result.timings["total"] > 0.0
            assert result.timings["rerank"] >= 0.0
