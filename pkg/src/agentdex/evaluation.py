"""Retrieval metrics, the ablation grid, latency decomposition, and the
pooled-score decay table.

Ranks are 1-based; a truth agent missing from the ranked list counts as rank
infinity. Reports can be emitted as JSON, CSV, and an aligned plain-text
table.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from time import perf_counter
from typing import Sequence

import numpy as np

from .core import EngineError, InputError, QueryRecord
from .engine import STAGES, DiscoveryEngine, DiscoveryResult

ABLATION_MODES = ("full", "no_maxsim", "no_slm", "mdr")
DEFAULT_WARMUP = 20
DEFAULT_BUDGET_MS = 400.0


# --------------------------------------------------------------------- metrics


def _check_aligned(results: Sequence[Sequence[str]], truths: Sequence[str]) -> None:
    if len(results) != len(truths):
        raise InputError(f"{len(results)} result lists but {len(truths)} truth ids")


def recall_at_k(results: Sequence[Sequence[str]], truths: Sequence[str], k: int) -> float:
    """Percentage of queries whose truth id appears in the top-k."""
    _check_aligned(results, truths)
    if k < 1:
        raise InputError("k must be positive")
    if not truths:
        return 0.0
    hits = sum(1 for ranked, truth in zip(results, truths) if truth in list(ranked)[:k])
    return 100.0 * hits / len(truths)


def mrr_at_k(results: Sequence[Sequence[str]], truths: Sequence[str], k: int = 10) -> float:
    """Mean reciprocal rank truncated at k; rank > k contributes 0."""
    _check_aligned(results, truths)
    if k < 1:
        raise InputError("k must be positive")
    if not truths:
        return 0.0
    total = 0.0
    for ranked, truth in zip(results, truths):
        top = list(ranked)[:k]
        if truth in top:
            total += 1.0 / (top.index(truth) + 1)
    return total / len(truths)


# --------------------------------------------------------------- latency report


@dataclass(frozen=True)
class StageStats:
    mean_ms: float
    p50_ms: float
    p95_ms: float


@dataclass(frozen=True)
class LatencyReport:
    stages: dict[str, StageStats]
    total_mean_ms: float
    over_budget: int
    budget_ms: float
    query_count: int


def latency_report(results: Sequence[DiscoveryResult], budget_ms: float = DEFAULT_BUDGET_MS) -> LatencyReport:
    """Per-stage mean/p50/p95 plus a count of queries over the latency budget."""
    stages: dict[str, StageStats] = {}
    for stage in STAGES:
        values = np.array([r.timings.get(stage, 0.0) for r in results], dtype=np.float64)
        if values.size == 0:
            stages[stage] = StageStats(0.0, 0.0, 0.0)
        else:
            stages[stage] = StageStats(
                mean_ms=float(values.mean()),
                p50_ms=float(np.percentile(values, 50)),
                p95_ms=float(np.percentile(values, 95)),
            )
    totals = [r.timings.get("total", 0.0) for r in results]
    return LatencyReport(
        stages=stages,
        total_mean_ms=float(np.mean(totals)) if totals else 0.0,
        over_budget=sum(1 for t in totals if t > budget_ms),
        budget_ms=budget_ms,
        query_count=len(results),
    )


# ----------------------------------------------------------------- decay table


@dataclass(frozen=True)
class DilutionRow:
    m: int
    mean_pool_raw_dot: float
    max_sim: float


def dilution_table(m_values: Sequence[int], dim: int = 384) -> list[DilutionRow]:
    """Score a query against m mutually orthogonal capability vectors.

    The query equals one of the vectors, so the best single-row match is
    exactly 1 while the raw dot with the pooled mean is exactly 1/m: pooling m
    distinct capabilities into one vector decays the match linearly in m.
    """
    rows = []
    for m in m_values:
        if m < 1:
            raise InputError(f"m must be positive, got {m}")
        if m > dim:
            raise InputError(f"m={m} exceeds dim={dim}; orthogonal construction impossible")
        basis = np.eye(dim, dtype=np.float64)[:m]
        query = basis[0]
        raw = float(query @ basis.mean(axis=0))
        best = float(np.max(basis @ query))
        rows.append(DilutionRow(m=m, mean_pool_raw_dot=raw, max_sim=best))
    return rows


# ------------------------------------------------------------------- ablation


@dataclass(frozen=True)
class ModeRow:
    mode: str
    recall_at_1: float
    recall_at_10: float
    mrr_at_10: float
    latency_mean_ms: float
    latency_p95_ms: float
    stage_means: dict[str, float]
    drop_r10: float | None = None
    failed: bool = False
    error: str = ""


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ModeRow, ...]
    query_count: int
    config: dict = field(default_factory=dict)


def _ranked_ids(result: DiscoveryResult) -> list[str]:
    return [scored.agent_id for scored in result.ranked]


def evaluate_mode(
    engine: DiscoveryEngine,
    queries: Sequence[QueryRecord],
    mode: str,
    warmup: int = DEFAULT_WARMUP,
) -> ModeRow:
    """Run one mode over the full query set; the first queries re-run untimed
    as warm-up so cold caches do not skew latency numbers."""
    for record in queries[: min(warmup, len(queries))]:
        engine.discover(record.text, mode=mode)
    ranked_lists: list[list[str]] = []
    results: list[DiscoveryResult] = []
    for record in queries:
        result = engine.discover(record.text, mode=mode)
        results.append(result)
        ranked_lists.append(_ranked_ids(result))
    truths = [record.truth_agent_id for record in queries]
    latency = latency_report(results)
    return ModeRow(
        mode=mode,
        recall_at_1=recall_at_k(ranked_lists, truths, 1),
        recall_at_10=recall_at_k(ranked_lists, truths, 10),
        mrr_at_10=mrr_at_k(ranked_lists, truths, 10),
        latency_mean_ms=latency.total_mean_ms,
        latency_p95_ms=latency.stages["total"].p95_ms,
        stage_means={stage: latency.stages[stage].mean_ms for stage in STAGES},
    )


def _evaluate_slm_sort(
    engine: DiscoveryEngine,
    queries: Sequence[QueryRecord],
    shuffle_seed: int,
) -> ModeRow:
    """Sparse-only baseline: tag lookup, then a seeded random order."""
    rng = random.Random(shuffle_seed)
    ranked_lists: list[list[str]] = []
    totals: list[float] = []
    k = engine.config.final_k
    for record in queries:
        start = perf_counter()
        tags = engine.tagger.predict_tags(record.text, max_tags=5).tag_names()
        candidates = sorted(engine.sparse_candidates(tags))
        rng.shuffle(candidates)
        ranked_lists.append(candidates[:k])
        totals.append((perf_counter() - start) * 1000.0)
    truths = [record.truth_agent_id for record in queries]
    means = dict.fromkeys(STAGES, 0.0)
    means["total"] = float(np.mean(totals)) if totals else 0.0
    return ModeRow(
        mode="slm_sort",
        recall_at_1=recall_at_k(ranked_lists, truths, 1),
        recall_at_10=recall_at_k(ranked_lists, truths, 10),
        mrr_at_10=mrr_at_k(ranked_lists, truths, 10),
        latency_mean_ms=means["total"],
        latency_p95_ms=float(np.percentile(totals, 95)) if totals else 0.0,
        stage_means=means,
    )


def run_ablation(
    engine: DiscoveryEngine,
    queries: Sequence[QueryRecord],
    modes: Sequence[str] = ABLATION_MODES,
    warmup: int = DEFAULT_WARMUP,
    shuffle_seed: int = 0,
) -> EvalReport:
    """One row per mode over an identical query set.

    A failing mode is reported as a failed row and the run continues. The
    ``drop_r10`` column is each row's recall-at-10 gap against the ``full``
    row, when present.
    """
    rows: list[ModeRow] = []
    for mode in modes:
        try:
            if mode == "slm_sort":
                rows.append(_evaluate_slm_sort(engine, queries, shuffle_seed))
            else:
                rows.append(evaluate_mode(engine, queries, mode, warmup=warmup))
        except EngineError as exc:
            empty = dict.fromkeys(STAGES, 0.0)
            rows.append(
                ModeRow(
                    mode=mode,
                    recall_at_1=0.0,
                    recall_at_10=0.0,
                    mrr_at_10=0.0,
                    latency_mean_ms=0.0,
                    latency_p95_ms=0.0,
                    stage_means=empty,
                    failed=True,
                    error=str(exc),
                )
            )
    full_r10 = next((row.recall_at_10 for row in rows if row.mode == "full" and not row.failed), None)
    if full_r10 is not None:
        rows = [
            row
            if row.mode == "full" or row.failed
            else replace(row, drop_r10=full_r10 - row.recall_at_10)
            for row in rows
        ]
    config = engine.config
    return EvalReport(
        rows=tuple(rows),
        query_count=len(queries),
        config={
            "alpha": config.alpha,
            "dense_top_k": config.dense_top_k,
            "final_k": config.final_k,
            "dim": config.dim,
            "max_syn": config.max_syn,
            "agents": engine.num_agents,
            "tags": engine.num_tags,
        },
    )


# -------------------------------------------------------------------- reports


def report_to_dict(report: EvalReport) -> dict:
    return {
        "query_count": report.query_count,
        "config": report.config,
        "rows": [
            {
                "mode": row.mode,
                "recall_at_1": row.recall_at_1,
                "recall_at_10": row.recall_at_10,
                "mrr_at_10": row.mrr_at_10,
                "latency_mean_ms": row.latency_mean_ms,
                "latency_p95_ms": row.latency_p95_ms,
                "stage_means": row.stage_means,
                "drop_r10": row.drop_r10,
                "failed": row.failed,
                "error": row.error,
            }
            for row in report.rows
        ],
    }


def report_to_csv(report: EvalReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        ["mode", "recall_at_1", "recall_at_10", "mrr_at_10", "latency_mean_ms", "latency_p95_ms", "drop_r10"]
    )
    for row in report.rows:
        writer.writerow(
            [
                row.mode,
                f"{row.recall_at_1:.2f}",
                f"{row.recall_at_10:.2f}",
                f"{row.mrr_at_10:.4f}",
                f"{row.latency_mean_ms:.2f}",
                f"{row.latency_p95_ms:.2f}",
                "" if row.drop_r10 is None else f"{row.drop_r10:.2f}",
            ]
        )
    return buffer.getvalue()


def report_to_table(report: EvalReport) -> str:
    headers = ["mode", "R@1", "R@10", "MRR@10", "mean ms", "p95 ms", "drop R@10"]
    lines = []
    for row in report.rows:
        if row.failed:
            lines.append([row.mode, "failed", "-", "-", "-", "-", row.error[:40]])
            continue
        lines.append(
            [
                row.mode,
                f"{row.recall_at_1:.2f}",
                f"{row.recall_at_10:.2f}",
                f"{row.mrr_at_10:.4f}",
                f"{row.latency_mean_ms:.2f}",
                f"{row.latency_p95_ms:.2f}",
                "-" if row.drop_r10 is None else f"{row.drop_r10:+.2f}",
            ]
        )
    widths = [max(len(str(cell)) for cell in column) for column in zip(headers, *lines)]
    def fmt(cells: Sequence[str]) -> str:
        return "  ".join(str(cell).ljust(width) for cell, width in zip(cells, widths))
    out = [fmt(headers), fmt(["-" * w for w in widths])]
    out.extend(fmt(line) for line in lines)
    return "\n".join(out)


def dilution_to_csv(rows: Sequence[DilutionRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["m", "mean_pool_raw_dot", "max_sim"])
    for row in rows:
        writer.writerow([row.m, f"{row.mean_pool_raw_dot:.12f}", f"{row.max_sim:.12f}"])
    return buffer.getvalue()


def write_reports(
    report: EvalReport,
    out_dir: str | Path,
    figures: bool = True,
) -> list[Path]:
    """Write report.json / report.csv (and figures) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    json_path = out / "report.json"
    json_path.write_text(json.dumps(report_to_dict(report), indent=2), encoding="utf-8")
    written.append(json_path)
    csv_path = out / "report.csv"
    csv_path.write_text(report_to_csv(report), encoding="utf-8")
    written.append(csv_path)
    table_path = out / "report.txt"
    table_path.write_text(report_to_table(report) + "\n", encoding="utf-8")
    written.append(table_path)
    if figures:
        from . import figures as fig

        written.append(fig.save_metric_bars(report, out / "metrics.png"))
        written.append(fig.save_latency_stages(report, out / "latency_stages.png"))
    return written


# --------------------------------------------------------------- assertions


def check_assertion(report: EvalReport, expression: str) -> tuple[bool, str]:
    """Evaluate a bound like ``full.recall_at_10>=60`` against a report.

    Grammar: ``<mode>.<metric><op><value>`` with op in {>=, <=, >, <, ==} and
    metric one of recall_at_1, recall_at_10, mrr_at_10, latency_mean_ms,
    latency_p95_ms.
    """
    for op in (">=", "<=", "==", ">", "<"):
        if op in expression:
            left, right = expression.split(op, 1)
            break
    else:
        raise InputError(f"assertion {expression!r} has no comparison operator")
    try:
        mode, metric = left.strip().split(".", 1)
        bound = float(right.strip())
    except ValueError as exc:
        raise InputError(f"cannot parse assertion {expression!r}: {exc}") from exc
    row = next((r for r in report.rows if r.mode == mode), None)
    if row is None:
        raise InputError(f"assertion {expression!r}: no row for mode {mode!r}")
    if not hasattr(row, metric):
        raise InputError(f"assertion {expression!r}: unknown metric {metric!r}")
    value = float(getattr(row, metric))
    passed = {
        ">=": value >= bound,
        "<=": value <= bound,
        ">": value > bound,
        "<": value < bound,
        "==": value == bound,
    }[op]
    return passed, f"{mode}.{metric}={value:.4f} {op} {bound}"
