from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from agentdex.cli import main


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    runner = CliRunner()
    result = runner.invoke(main, ["gen", "--seed", "7", "--industries", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def test_gen_writes_expected_counts(corpus_dir):
    agents = (corpus_dir / "agents.jsonl").read_text().strip().splitlines()
    queries = (corpus_dir / "queries.jsonl").read_text().strip().splitlines()
    assert len(agents) == 120
    assert len(queries) == 360


def test_gen_deterministic(tmp_path):
    runner = CliRunner()
    for sub in ("one", "two"):
        result = runner.invoke(
            main, ["gen", "--seed", "9", "--industries", "2", "--out", str(tmp_path / sub)]
        )
        assert result.exit_code == 0
    assert (tmp_path / "one" / "agents.jsonl").read_bytes() == (
        tmp_path / "two" / "agents.jsonl"
    ).read_bytes()


def test_index_reports_counts(corpus_dir):
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["index", "--agents", str(corpus_dir / "agents.jsonl"), "--dim", "128", "--json"],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["agents"] == 120
    assert payload["tags"] > 0


def test_query_finds_keyword_truth(corpus_dir):
    queries = [
        json.loads(line) for line in (corpus_dir / "queries.jsonl").read_text().splitlines()
    ]
    keyword = next(q for q in queries if q["intent"] == "keyword")
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "query",
            "--agents", str(corpus_dir / "agents.jsonl"),
            "--query", keyword["query"],
            "--dim", "128",
            "--k", "3",
            "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["results"][0]["id"] == keyword["agent_id"]


def test_dilution_table_and_files(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main, ["dilution", "--m-values", "1,4,16", "--dim", "64", "--out", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    assert "0.250000000" in result.output
    assert (tmp_path / "dilution.csv").exists()
    assert (tmp_path / "dilution.json").exists()
    assert (tmp_path / "dilution.png").exists()


def test_stats_outputs(corpus_dir, tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "stats",
            "--agents", str(corpus_dir / "agents.jsonl"),
            "--queries", str(corpus_dir / "queries.jsonl"),
            "--out", str(tmp_path),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "unique tags" in result.output
    assert (tmp_path / "stats.json").exists()
    assert (tmp_path / "tag_frequency.csv").exists()
    assert (tmp_path / "tag_frequency.png").exists()


def test_eval_with_assertions(corpus_dir, tmp_path):
    runner = CliRunner()
    base = [
        "eval",
        "--agents", str(corpus_dir / "agents.jsonl"),
        "--queries", str(corpus_dir / "queries.jsonl"),
        "--dim", "128",
        "--modes", "full,mdr",
        "--warmup", "0",
        "--out", str(tmp_path),
    ]
    result = runner.invoke(main, base + ["--assert", "full.recall_at_10>=10"])
    assert result.exit_code == 0, result.output
    assert "PASS full.recall_at_10" in result.output
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "report.csv").exists()
    assert (tmp_path / "metrics.png").exists()

    failing = runner.invoke(main, base + ["--assert", "full.recall_at_10>=101"])
    assert failing.exit_code == 1
    assert "FAIL" in failing.output


def test_eval_no_figures(corpus_dir, tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "eval",
            "--agents", str(corpus_dir / "agents.jsonl"),
            "--queries", str(corpus_dir / "queries.jsonl"),
            "--dim", "128",
            "--modes", "full",
            "--warmup", "0",
            "--no-figures",
            "--out", str(tmp_path),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "report.json").exists()
    assert not (tmp_path / "metrics.png").exists()
