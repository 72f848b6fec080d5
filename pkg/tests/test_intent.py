from __future__ import annotations

import numpy as np
import pytest

from agentdex import HashingEmbedder, build_intent, max_sim, mean_pool_raw_dot, mean_pool_sim
from agentdex.core import DimensionError
from tests.conftest import make_card


def basis(dim, k):
    vec = np.zeros(dim, dtype=np.float64)
    vec[k] = 1.0
    return vec


class TestBuildIntent:
    def test_three_examples_three_rows(self):
        embedder = HashingEmbedder(dim=64, seed=1)
        agent = make_card("x", ["t"], examples=["one thing", "two things", "three things"])
        index = build_intent([agent], embedder)
        assert index["x"].rows.shape == (3, 64)

    def test_zero_examples_valid(self):
        embedder = HashingEmbedder(dim=64)
        agent = make_card("x", ["t"], examples=())
        index = build_intent([agent], embedder)
        assert index["x"].rows.shape == (0, 64)
        assert max_sim(basis(64, 0), index["x"]) == 0.0

    def test_rows_match_embedder(self):
        embedder = HashingEmbedder(dim=64, seed=4)
        agent = make_card("x", ["t"], examples=["alpha beta", "gamma delta"])
        index = build_intent([agent], embedder)
        assert np.array_equal(index["x"].rows[0], embedder.embed("alpha beta"))
        assert np.array_equal(index["x"].rows[1], embedder.embed("gamma delta"))

    def test_rebuild_bitwise_identical(self):
        agents = [make_card("x", ["t"], examples=["case one", "case two"])]
        a = build_intent(agents, HashingEmbedder(dim=64, seed=9))
        b = build_intent(agents, HashingEmbedder(dim=64, seed=9))
        assert np.array_equal(a.rows, b.rows)

    def test_rows_unit_norm(self, small_corpus):
        embedder = HashingEmbedder(dim=96, seed=2)
        index = build_intent(list(small_corpus.agents[:40]), embedder)
        norms = np.linalg.norm(index.rows.astype(np.float64), axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-5)


class TestMaxSim:
    def test_perfect_match_row(self):
        rows = np.vstack([basis(16, 0), basis(16, 1)])
        assert max_sim(basis(16, 0), rows) == pytest.approx(1.0)

    def test_orthogonal(self):
        rows = basis(16, 0).reshape(1, -1)
        assert max_sim(basis(16, 1), rows) == pytest.approx(0.0)

    def test_orthogonal_basis_max_vs_mean(self):
        for m in (2, 4, 8):
            rows = np.eye(16)[:m]
            query = basis(16, m - 1)
            assert max_sim(query, rows) == pytest.approx(1.0)
            assert mean_pool_raw_dot(query, rows) == pytest.approx(1.0 / m)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            max_sim(basis(8, 0), np.ones((2, 16)))

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            rows = rng.standard_normal((3, 12))
            rows /= np.linalg.norm(rows, axis=1, keepdims=True)
            query = rng.standard_normal(12)
            query /= np.linalg.norm(query)
            assert -1.0 <= max_sim(query, rows) <= 1.0


class TestMeanPool:
    def test_single_row_identity(self):
        rows = basis(16, 2).reshape(1, -1)
        assert mean_pool_sim(basis(16, 2), rows) == pytest.approx(1.0)

    def test_raw_dot_quarter(self):
        rows = np.eye(16)[:4]
        assert mean_pool_raw_dot(basis(16, 2), rows) == pytest.approx(0.25)

    def test_raw_dot_sixteenth(self):
        rows = np.eye(16)
        assert mean_pool_raw_dot(basis(16, 3), rows) == pytest.approx(0.0625)

    def test_empty_matrix(self):
        empty = np.zeros((0, 16))
        assert mean_pool_sim(basis(16, 0), empty) == 0.0
        assert mean_pool_raw_dot(basis(16, 0), empty) == 0.0

    def test_cancelling_rows(self):
        rows = np.vstack([basis(16, 0), -basis(16, 0)])
        assert mean_pool_sim(basis(16, 0), rows) == 0.0


class TestProperties:
    def test_dominance_max_at_least_raw_mean(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            m = rng.integers(1, 8)
            rows = rng.standard_normal((m, 24))
            rows /= np.linalg.norm(rows, axis=1, keepdims=True)
            query = rng.standard_normal(24)
            query /= np.linalg.norm(query)
            assert max_sim(query, rows) >= mean_pool_raw_dot(query, rows) - 1e-12

    def test_appending_rows_never_decreases_max(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            rows = rng.standard_normal((3, 24))
            rows /= np.linalg.norm(rows, axis=1, keepdims=True)
            extra = rng.standard_normal((2, 24))
            extra /= np.linalg.norm(extra, axis=1, keepdims=True)
            query = rng.standard_normal(24)
            query /= np.linalg.norm(query)
            assert max_sim(query, np.vstack([rows, extra])) >= max_sim(query, rows) - 1e-12


class TestBatch:
    @pytest.fixture()
    def index(self):
        embedder = HashingEmbedder(dim=64, seed=3)
        agents = [
            make_card("a", ["t"], examples=["first case", "second case"]),
            make_card("b", ["t"], examples=()),
            make_card("c", ["t"], examples=["third case", "fourth case", "fifth case"]),
        ]
        return build_intent(agents, embedder), embedder

    def test_max_sim_batch_matches_scalar(self, index):
        idx, embedder = index
        query = embedder.embed("second case").astype(np.float64)
        batch = idx.max_sim_batch(["a", "b", "c"], query)
        for agent_id, got in zip(["a", "b", "c"], batch):
            assert got == pytest.approx(max_sim(query, idx[agent_id]), abs=1e-12)

    def test_mean_pool_batch_matches_scalar(self, index):
        idx, embedder = index
        query = embedder.embed("fourth case").astype(np.float64)
        batch = idx.mean_pool_batch(["a", "b", "c"], query)
        for agent_id, got in zip(["a", "b", "c"], batch):
            assert got == pytest.approx(mean_pool_sim(query, idx[agent_id]), abs=1e-12)

    def test_empty_candidates(self, index):
        idx, embedder = index
        query = embedder.embed("x y").astype(np.float64)
        assert idx.max_sim_batch([], query).size == 0
        assert idx.mean_pool_batch([], query).size == 0

    def test_example_count(self, index):
        idx, _ = index
        assert idx.example_count("a") == 2
        assert idx.example_count("b") == 0
        assert idx.example_count("c") == 3

    def test_dim_mismatch(self, index):
        idx, _ = index
        with pytest.raises(DimensionError):
            idx.max_sim_batch(["a"], np.ones(7))
