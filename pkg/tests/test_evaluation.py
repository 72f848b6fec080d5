from __future__ import annotations

import random
from time import perf_counter

import pytest

from agentdex import (
    DiscoveryEngine,
    EngineConfig,
    HashingEmbedder,
    InputError,
    dilution_table,
    latency_report,
    mrr_at_k,
    recall_at_k,
    run_ablation,
)
from agentdex.evaluation import (
    check_assertion,
    dilution_to_csv,
    report_to_csv,
    report_to_dict,
    report_to_table,
    write_reports,
)


def brute_force_metrics(results, truths, k):
    """Independent implementation: explicit rank search per query."""
    hits = 0
    reciprocal = 0.0
    for ranked, truth in zip(results, truths):
        rank = None
        for position, agent_id in enumerate(ranked, start=1):
            if agent_id == truth:
                rank = position
                break
        if rank is not None and rank <= k:
            hits += 1
            reciprocal += 1.0 / rank
    n = len(truths)
    return (100.0 * hits / n if n else 0.0), (reciprocal / n if n else 0.0)


class TestMetrics:
    def test_recall_rank_one(self):
        assert recall_at_k([["a"]], ["a"], 1) == 100.0

    def test_recall_truth_absent(self):
        assert recall_at_k([[f"x{i}" for i in range(10)]], ["truth"], 10) == 0.0

    def test_recall_hand_enumerated(self):
        results = [
            ["t"] + [f"x{i}" for i in range(9)],            # rank 1
            ["x0", "x1", "t"] + [f"y{i}" for i in range(7)],  # rank 3
            [f"x{i}" for i in range(10)] + ["t"],             # rank 11
            ["x0", "t"] + [f"y{i}" for i in range(8)],        # rank 2
        ]
        truths = ["t"] * 4
        assert recall_at_k(results, truths, 10) == pytest.approx(75.0)
        assert mrr_at_k(results, truths, 10) == pytest.approx(11 / 24)

    def test_mrr_rank_two(self):
        assert mrr_at_k([["x", "t"]], ["t"], 10) == pytest.approx(0.5)

    def test_mrr_beyond_cutoff(self):
        ranked = [f"x{i}" for i in range(10)] + ["t"]
        assert mrr_at_k([ranked], ["t"], 10) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            recall_at_k([["a"]], ["a", "b"], 1)
        with pytest.raises(InputError):
            mrr_at_k([], ["a"], 1)

    def test_k_positive(self):
        with pytest.raises(InputError):
            recall_at_k([["a"]], ["a"], 0)

    def test_matches_independent_oracle_on_random_instances(self):
        rng = random.Random(99)
        for _ in range(50):
            n_agents = rng.randint(1, 30)
            n_queries = rng.randint(1, 20)
            ids = [f"a{i}" for i in range(n_agents)]
            results, truths = [], []
            for _ in range(n_queries):
                ranked = rng.sample(ids, rng.randint(0, n_agents))
                results.append(ranked)
                # sometimes truth is absent entirely
                truths.append(rng.choice(ids + ["missing"]))
            k = rng.randint(1, 40)  # may exceed the corpus size
            expected_recall, expected_mrr = brute_force_metrics(results, truths, k)
            assert recall_at_k(results, truths, k) == expected_recall
            assert mrr_at_k(results, truths, k) == expected_mrr


class TestDilution:
    def test_single_capability(self):
        (row,) = dilution_table([1], dim=16)
        assert row.mean_pool_raw_dot == pytest.approx(1.0, abs=1e-12)
        assert row.max_sim == pytest.approx(1.0, abs=1e-12)

    def test_quarter_and_sixteenth(self):
        rows = {row.m: row for row in dilution_table([4, 16], dim=64)}
        assert rows[4].mean_pool_raw_dot == pytest.approx(0.25, abs=1e-12)
        assert rows[16].mean_pool_raw_dot == pytest.approx(0.0625, abs=1e-12)
        assert rows[4].max_sim == pytest.approx(1.0, abs=1e-12)

    def test_product_identity(self):
        for row in dilution_table([1, 2, 4, 8, 16, 64], dim=128):
            assert row.mean_pool_raw_dot * row.m == pytest.approx(1.0, abs=1e-9)

    def test_m_larger_than_dim(self):
        with pytest.raises(InputError):
            dilution_table([65], dim=64)

    def test_m_positive(self):
        with pytest.raises(InputError):
            dilution_table([0], dim=64)

    def test_csv(self):
        text = dilution_to_csv(dilution_table([1, 2], dim=8))
        assert text.splitlines()[0] == "m,mean_pool_raw_dot,max_sim"
        assert len(text.splitlines()) == 3


class TestLatencyReport:
    def test_single_result(self, small_engine, small_corpus):
        result = small_engine.discover(small_corpus.queries[0].text)
        report = latency_report([result])
        assert report.total_mean_ms == pytest.approx(result.timings["total"])
        assert report.query_count == 1

    def test_budget_flagging(self, small_engine, small_corpus):
        result = small_engine.discover(small_corpus.queries[0].text)
        report = latency_report([result], budget_ms=0.0)
        assert report.over_budget == 1
        report = latency_report([result], budget_ms=10_000.0)
        assert report.over_budget == 0


@pytest.fixture(scope="module")
def ablation_report(small_engine_module, queries_module):
    return run_ablation(small_engine_module, queries_module, warmup=2)


@pytest.fixture(scope="module")
def small_engine_module():
    from agentdex import TaxonomySpec, generate

    corpus = generate(TaxonomySpec(seed=7, num_industries=2))
    engine = DiscoveryEngine.build(
        corpus.agents, EngineConfig(dim=128, dense_top_k=20), embedder=HashingEmbedder(128, 3)
    )
    return engine


@pytest.fixture(scope="module")
def queries_module():
    from agentdex import TaxonomySpec, generate

    return generate(TaxonomySpec(seed=7, num_industries=2)).queries[:90]


class TestAblation:
    def test_single_mode(self, small_engine_module, queries_module):
        report = run_ablation(small_engine_module, queries_module, modes=["full"], warmup=0)
        assert len(report.rows) == 1
        assert report.rows[0].mode == "full"
        assert report.rows[0].drop_r10 is None

    def test_rows_and_invariants(self, ablation_report):
        assert [row.mode for row in ablation_report.rows] == ["full", "no_maxsim", "no_slm", "mdr"]
        for row in ablation_report.rows:
            assert row.recall_at_1 <= row.recall_at_10
            assert 0.0 <= row.mrr_at_10 <= 1.0
            assert row.mrr_at_10 >= row.recall_at_1 / 100.0 - 1e-9

    def test_full_dominates_pooled(self, ablation_report):
        rows = {row.mode: row for row in ablation_report.rows}
        assert rows["full"].recall_at_10 >= rows["no_maxsim"].recall_at_10
        assert rows["full"].mrr_at_10 >= rows["mdr"].mrr_at_10

    def test_drop_column(self, ablation_report):
        rows = {row.mode: row for row in ablation_report.rows}
        assert rows["no_maxsim"].drop_r10 == pytest.approx(
            rows["full"].recall_at_10 - rows["no_maxsim"].recall_at_10
        )

    def test_query_counts_equal(self, ablation_report, queries_module):
        assert ablation_report.query_count == len(queries_module)

    def test_deterministic(self, small_engine_module, queries_module):
        a = run_ablation(small_engine_module, queries_module, modes=["full", "mdr"], warmup=0)
        b = run_ablation(small_engine_module, queries_module, modes=["full", "mdr"], warmup=0)
        for row_a, row_b in zip(a.rows, b.rows):
            assert row_a.recall_at_1 == row_b.recall_at_1
            assert row_a.recall_at_10 == row_b.recall_at_10
            assert row_a.mrr_at_10 == row_b.mrr_at_10

    def test_failed_mode_row(self, small_engine_module, queries_module):
        report = run_ablation(small_engine_module, queries_module, modes=["bogus", "full"], warmup=0)
        assert report.rows[0].failed is True
        assert report.rows[1].failed is False

    def test_slm_sort_baseline(self, small_engine_module, queries_module):
        report = run_ablation(
            small_engine_module, queries_module, modes=["full", "slm_sort"], warmup=0
        )
        rows = {row.mode: row for row in report.rows}
        assert rows["slm_sort"].recall_at_10 <= rows["full"].recall_at_10


class TestReports:
    def test_dict_and_csv(self, ablation_report):
        payload = report_to_dict(ablation_report)
        assert len(payload["rows"]) == 4
        csv_text = report_to_csv(ablation_report)
        assert csv_text.splitlines()[0].startswith("mode,")
        assert len(csv_text.splitlines()) == 5

    def test_table_alignment(self, ablation_report):
        table = report_to_table(ablation_report)
        lines = table.splitlines()
        assert len({len(line) for line in lines if line}) <= 2  # header + rows same width
        assert "full" in lines[2]

    def test_write_reports_with_figures(self, ablation_report, tmp_path):
        written = write_reports(ablation_report, tmp_path, figures=True)
        names = {path.name for path in written}
        assert {
            "report.json", "report.csv", "report.txt", "metrics.png", "latency_stages.png"
        } <= names
        for path in written:
            assert path.exists() and path.stat().st_size > 0


class TestAssertions:
    def test_pass_and_fail(self, ablation_report):
        passed, _ = check_assertion(ablation_report, "full.recall_at_10>=0")
        assert passed
        failed, _ = check_assertion(ablation_report, "full.recall_at_10>=101")
        assert not failed

    def test_operators(self, ablation_report):
        assert check_assertion(ablation_report, "full.mrr_at_10<=1.0")[0]
        assert check_assertion(ablation_report, "full.recall_at_1>-1")[0]

    def test_bad_expressions(self, ablation_report):
        for expression in ("nonsense", "full.recall_at_10", "ghost.recall_at_10>=1", "full.bogus>=1"):
            with pytest.raises(InputError):
                check_assertion(ablation_report, expression)


def test_dilution_runtime_under_a_second():
    start = perf_counter()
    dilution_table([1, 2, 4, 8, 16, 64], dim=384)
    assert perf_counter() - start < 1.0
