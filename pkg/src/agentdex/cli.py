"""Command line interface.

Subcommands: gen, index, serve, query, eval, dilution, stats. Report-style
commands write delimited output (JSON/CSV) and render matching figures when
``--out`` is given. Exit codes: 0 clean, 1 failed assertion or runtime error,
2 configuration error, 3 bind failure.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import click

from .benchgen import TaxonomySpec, corpus_stats, generate, load_corpus, write_corpus
from .core import ConfigError, EngineConfig, EngineError
from .embedding import embedder_from_env
from .engine import DiscoveryEngine
from .evaluation import (
    ABLATION_MODES,
    check_assertion,
    dilution_table,
    dilution_to_csv,
    report_to_table,
    run_ablation,
    write_reports,
)
from .service import ENV_BIND, ApiConfig, create_app
from .sparse import load_synonyms


def _engine_options(fn):
    fn = click.option("--alpha", type=float, default=0.5, show_default=True)(fn)
    fn = click.option("--dense-top-k", type=int, default=50, show_default=True)(fn)
    fn = click.option("--final-k", type=int, default=10, show_default=True)(fn)
    fn = click.option("--dim", type=int, default=384, show_default=True)(fn)
    fn = click.option("--max-syn", type=int, default=5, show_default=True)(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True, help="Embedder seed.")(fn)
    fn = click.option("--synonyms", type=click.Path(exists=True, dir_okay=False), default=None)(fn)
    return fn


def _build_engine(agents_path, synonyms, alpha, dense_top_k, final_k, dim, max_syn, seed, mode="full"):
    corpus = load_corpus(agents_path)
    config = EngineConfig(
        alpha=alpha, dense_top_k=dense_top_k, final_k=final_k, dim=dim, max_syn=max_syn, mode=mode
    )
    synonym_map = load_synonyms(synonyms) if synonyms else None
    embedder = embedder_from_env(dim=dim, seed=seed)
    return DiscoveryEngine.build(corpus.agents, config, embedder=embedder, synonyms=synonym_map)


@click.group()
def main() -> None:
    """In-memory agent discovery: generate corpora, build indices, query, evaluate."""


@main.command()
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--industries", type=int, default=8, show_default=True)
@click.option("--subdomains", type=int, default=6, show_default=True)
@click.option("--agents-per-subdomain", type=int, default=10, show_default=True)
@click.option("--examples-per-agent", type=int, default=3, show_default=True)
@click.option("--queries-per-agent", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True)
def gen(seed, industries, subdomains, agents_per_subdomain, examples_per_agent, queries_per_agent, out):
    """Generate a synthetic corpus as agents.jsonl + queries.jsonl."""
    spec = TaxonomySpec(
        seed=seed,
        num_industries=industries,
        subdomains_per_industry=subdomains,
        agents_per_subdomain=agents_per_subdomain,
        examples_per_agent=examples_per_agent,
        queries_per_agent=queries_per_agent,
    )
    corpus = generate(spec)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    agents_path = out_dir / "agents.jsonl"
    queries_path = out_dir / "queries.jsonl"
    write_corpus(corpus, agents_path, queries_path)
    click.echo(f"wrote {len(corpus.agents)} agents to {agents_path}")
    click.echo(f"wrote {len(corpus.queries)} queries to {queries_path}")


@main.command()
@click.option("--agents", "agents_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_engine_options
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable output.")
def index(agents_path, synonyms, alpha, dense_top_k, final_k, dim, max_syn, seed, as_json):
    """Build all three indices once and report corpus / vocabulary sizes."""
    from time import perf_counter

    start = perf_counter()
    engine = _build_engine(agents_path, synonyms, alpha, dense_top_k, final_k, dim, max_syn, seed)
    build_ms = (perf_counter() - start) * 1000.0
    payload = {
        "agents": engine.num_agents,
        "tags": engine.num_tags,
        "dim": engine.config.dim,
        "build_ms": round(build_ms, 2),
        "expansion_failures": engine.expansion_stats.get("generator_failures", 0),
    }
    if as_json:
        click.echo(json.dumps(payload))
    else:
        for key, value in payload.items():
            click.echo(f"{key}: {value}")


@main.command()
@click.option("--agents", "agents_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--query", "query_text", required=True)
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--mode", type=click.Choice(["full", "no_maxsim", "no_slm", "mdr"]), default="full")
@_engine_options
@click.option("--json", "as_json", is_flag=True)
def query(agents_path, query_text, k, mode, synonyms, alpha, dense_top_k, final_k, dim, max_syn, seed, as_json):
    """Rank agents for one query."""
    engine = _build_engine(agents_path, synonyms, alpha, dense_top_k, final_k, dim, max_syn, seed)
    result = engine.discover(query_text, mode=mode, final_k=k)
    if as_json:
        click.echo(
            json.dumps(
                {
                    "results": [
                        {
                            "id": s.agent_id,
                            "name": engine.agents[s.agent_id].name,
                            "final": s.final_score,
                            "ctx": s.context_score,
                            "res": s.resonance_score,
                        }
                        for s in result.ranked
                    ],
                    "timings": result.timings,
                    "candidates": result.candidates_total,
                }
            )
        )
        return
    click.echo(f"candidates: {result.candidates_total} "
               f"(sparse {result.candidates_sparse}, dense {result.candidates_dense})")
    click.echo(f"{'rank':<5}{'id':<10}{'final':>9}{'ctx':>9}{'res':>9}  name")
    for rank, scored in enumerate(result.ranked, start=1):
        click.echo(
            f"{rank:<5}{scored.agent_id:<10}{scored.final_score:>9.4f}"
            f"{scored.context_score:>9.4f}{scored.resonance_score:>9.4f}"
            f"  {engine.agents[scored.agent_id].name}"
        )


@main.command(name="eval")
@click.option("--agents", "agents_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--modes", default=",".join(ABLATION_MODES), show_default=True)
@click.option("--warmup", type=int, default=20, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.option("--assert", "assertions", multiple=True,
              help="Bound like 'full.recall_at_10>=60'; exit 1 when violated.")
@_engine_options
def eval_cmd(agents_path, queries_path, modes, warmup, out, figures, assertions,
             synonyms, alpha, dense_top_k, final_k, dim, max_syn, seed):
    """Run the ablation grid over a labeled query set."""
    corpus = load_corpus(agents_path, queries_path)
    config = EngineConfig(
        alpha=alpha, dense_top_k=dense_top_k, final_k=final_k, dim=dim, max_syn=max_syn
    )
    synonym_map = load_synonyms(synonyms) if synonyms else None
    embedder = embedder_from_env(dim=dim, seed=seed)
    engine = DiscoveryEngine.build(corpus.agents, config, embedder=embedder, synonyms=synonym_map)
    mode_list = [m.strip() for m in modes.split(",") if m.strip()]
    report = run_ablation(engine, corpus.queries, mode_list, warmup=warmup)
    click.echo(report_to_table(report))
    if out:
        for path in write_reports(report, out, figures=figures):
            click.echo(f"wrote {path}")
    failed = []
    for expression in assertions:
        passed, detail = check_assertion(report, expression)
        click.echo(("PASS " if passed else "FAIL ") + detail)
        if not passed:
            failed.append(expression)
    if failed:
        raise SystemExit(1)


@main.command()
@click.option("--m-values", default="1,2,4,8,16,64", show_default=True)
@click.option("--dim", type=int, default=384, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--figures/--no-figures", default=True, show_default=True)
def dilution(m_values, dim, out, figures):
    """Tabulate pooled-score decay vs best-example match for growing m."""
    ms = [int(v) for v in m_values.split(",") if v.strip()]
    rows = dilution_table(ms, dim=dim)
    click.echo(f"{'m':>6}  {'mean_pool_raw_dot':>18}  {'max_sim':>8}")
    for row in rows:
        click.echo(f"{row.m:>6}  {row.mean_pool_raw_dot:>18.9f}  {row.max_sim:>8.6f}")
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "dilution.csv").write_text(dilution_to_csv(rows), encoding="utf-8")
        (out_dir / "dilution.json").write_text(
            json.dumps([row.__dict__ for row in rows], indent=2), encoding="utf-8"
        )
        click.echo(f"wrote {out_dir / 'dilution.csv'}")
        if figures:
            from . import figures as fig

            click.echo(f"wrote {fig.save_dilution_curve(rows, out_dir / 'dilution.png')}")


@main.command()
@click.option("--agents", "agents_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--queries", "queries_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--figures/--no-figures", default=True, show_default=True)
def stats(agents_path, queries_path, out, figures):
    """Tag frequency profile of a corpus."""
    corpus = load_corpus(agents_path, queries_path)
    report = corpus_stats(corpus)
    click.echo(f"agents: {report.num_agents}")
    click.echo(f"queries: {report.num_queries}")
    click.echo(f"unique tags: {report.unique_tags}")
    click.echo(f"agents per tag: max {report.agents_per_tag_max}, "
               f"mean {report.agents_per_tag_mean:.2f}")
    click.echo("top tags:")
    for tag, freq in report.top_tags(10):
        click.echo(f"  {tag:<32}{freq:>6}")
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "stats.json").write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
        curve_csv = "rank,frequency,log10_frequency\n" + "\n".join(
            f"{rank},{freq},{logf:.6f}" for rank, freq, logf in report.rank_curve
        )
        (out_dir / "tag_frequency.csv").write_text(curve_csv + "\n", encoding="utf-8")
        click.echo(f"wrote {out_dir / 'stats.json'}")
        if figures:
            from . import figures as fig

            click.echo(f"wrote {fig.save_tag_rank_curve(report, out_dir / 'tag_frequency.png')}")


@main.command()
@click.option("--agents", "agents_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Stage this corpus and build before serving.")
@click.option("--bind", default=None, help="host:port (or set GRAIL_BIND).")
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--deadline", type=float, default=2.0, show_default=True)
@_engine_options
def serve(agents_path, bind, port, host, deadline, synonyms, alpha, dense_top_k, final_k, dim, max_syn, seed):
    """Run the HTTP service."""
    import uvicorn

    bind = bind or os.environ.get(ENV_BIND, "")
    if bind:
        host, _, port_text = bind.partition(":")
        port = int(port_text or port)
    engine_config = EngineConfig(
        alpha=alpha, dense_top_k=dense_top_k, final_k=final_k, dim=dim, max_syn=max_syn
    )
    api_config = ApiConfig(host=host, port=port, deadline_s=deadline, engine_config=engine_config)
    synonym_map = load_synonyms(synonyms) if synonyms else None
    app = create_app(api_config, embedder=embedder_from_env(dim=dim, seed=seed))
    if agents_path:
        corpus = load_corpus(agents_path)
        state = app.state.service
        with state.lock:
            state.staged.extend(corpus.agents)
            state.staged_ids.update(a.id for a in corpus.agents)
        engine = DiscoveryEngine.build(
            corpus.agents, engine_config,
            embedder=embedder_from_env(dim=dim, seed=seed), synonyms=synonym_map,
        )
        state.snapshot = engine
        click.echo(f"serving {engine.num_agents} agents ({engine.num_tags} tags)")
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    except OSError as exc:
        click.echo(f"bind failure on {host}:{port}: {exc}", err=True)
        raise SystemExit(3)


def entrypoint() -> None:
    try:
        main(standalone_mode=True)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        raise SystemExit(2)
    except EngineError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(1)


if __name__ == "__main__":
    entrypoint()
