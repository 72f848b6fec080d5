"""Figure rendering for the report path.

Charts are written next to the delimited reports; everything uses the Agg
backend so rendering works headlessly.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

if TYPE_CHECKING:
    from .benchgen import CorpusStats
    from .evaluation import DilutionRow, EvalReport


def save_metric_bars(report: "EvalReport", path: str | Path) -> Path:
    """Grouped bars of R@1 / R@10 / MRR@10 per mode."""
    rows = [r for r in report.rows if not r.failed]
    modes = [r.mode for r in rows]
    x = range(len(rows))
    width = 0.28
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar([i - width for i in x], [r.recall_at_1 for r in rows], width, label="R@1 (%)")
    ax.bar(list(x), [r.recall_at_10 for r in rows], width, label="R@10 (%)")
    ax.bar([i + width for i in x], [r.mrr_at_10 * 100 for r in rows], width, label="MRR@10 (x100)")
    ax.set_xticks(list(x))
    ax.set_xticklabels(modes)
    ax.set_ylabel("score")
    ax.set_title(f"Retrieval metrics over {report.query_count} queries")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_latency_stages(report: "EvalReport", path: str | Path) -> Path:
    """Stacked per-stage mean latency per mode."""
    rows = [r for r in report.rows if not r.failed]
    stages = ("predict", "embed", "recall_sparse", "recall_dense", "rerank")
    fig, ax = plt.subplots(figsize=(7, 4))
    bottoms = [0.0] * len(rows)
    for stage in stages:
        values = [r.stage_means.get(stage, 0.0) for r in rows]
        ax.bar([r.mode for r in rows], values, bottom=bottoms, label=stage)
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax.set_ylabel("mean latency (ms)")
    ax.set_title("Latency decomposition by stage")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_dilution_curve(rows: Sequence["DilutionRow"], path: str | Path) -> Path:
    """Pooled-score decay (1/m) against the constant best-example match."""
    ms = [r.m for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ms, [r.mean_pool_raw_dot for r in rows], "o-", label="mean-pool raw dot")
    ax.plot(ms, [r.max_sim for r in rows], "s--", label="best example match")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("distinct capabilities m")
    ax.set_ylabel("score for a perfectly matching query")
    ax.set_title("Pooling decay vs example-level matching")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_tag_rank_curve(stats: "CorpusStats", path: str | Path) -> Path:
    """Log-frequency tag rank curve (long-tail profile of the corpus)."""
    ranks = [point[0] for point in stats.rank_curve]
    log_freqs = [point[2] for point in stats.rank_curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ranks, log_freqs, lw=1.2)
    ax.set_xlabel("tag rank")
    ax.set_ylabel("log10(frequency)")
    ax.set_title(f"Tag frequency profile ({stats.unique_tags} unique tags)")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
