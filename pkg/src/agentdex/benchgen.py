"""Seeded synthetic corpus generator plus loaders for real corpus files.

Corpora follow a three-level taxonomy: industries split into disjoint
sub-domains, each populated with agents holding a niche of their own. Tag
lists are hierarchical (1 industry tag, 3 sub-domain tags, 1-4 functional
tags), sub-domain tag sets never overlap within an industry, and every agent
gets one query per intent style. All text is assembled from fixed word pools
with one seeded RNG consumed in canonical order, so equal seeds give
byte-identical output.

Query styles and what resolves them:

* capability -- functional-tag vocabulary, present in the description and the
  first usage example;
* scenario -- a pain phrase that appears in exactly one usage example and
  nowhere else in the agent's metadata, so only example-level matching can
  separate the agent from its sub-domain peers;
* keyword -- the functional tags verbatim, solvable by exact tag lookup.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .core import (
    AgentCard,
    BuildError,
    InputError,
    IntegrityError,
    ParseError,
    QueryRecord,
    agent_from_json_dict,
    agent_to_json_dict,
    tokenize,
)

# --------------------------------------------------------------------- pools
# The pools are pairwise disjoint and avoid every template filler word, so a
# token seen in a query maps to exactly one vocabulary level.

INDUSTRY_ADJECTIVES = (
    "environmental", "quantum", "maritime", "agricultural", "biomedical",
    "aerospace", "automotive", "financial", "hospitality", "industrial",
    "forensic", "geospatial", "renewable", "culinary", "athletic",
    "municipal", "pharmaceutical", "textile", "veterinary", "broadcast",
)

INDUSTRY_NOUNS = (
    "science", "computing", "logistics", "engineering", "analytics",
    "insurance", "robotics", "media", "commerce", "diagnostics",
    "manufacturing", "tourism",
)

SUBDOMAIN_TERMS = (
    "auditing", "forecasting", "onboarding", "telemetry", "procurement",
    "inventory", "claims", "payroll", "licensing", "inspection",
    "calibration", "dispatch", "routing", "intake", "triage",
    "renewals", "invoicing", "underwriting", "settlement", "attestation",
    "benchmarking", "budgeting", "cataloging", "certification", "chargebacks",
    "clearances", "consignment", "credentialing", "curation", "customs",
    "decommissioning", "deduplication", "depreciation", "digitization", "disclosures",
    "enrollment", "escalations", "estimating", "ticketing", "fulfillment",
    "grading", "hedging", "immunization", "indexing", "instrumentation",
    "irrigation", "leasing", "localization", "maintenance", "mediation",
    "metering", "migration", "moderation", "notarization", "packaging",
    "patching", "permitting", "provisioning", "quarantine", "quoting",
    "rationing", "rebates", "recalls", "registrations", "remittance",
    "rostering", "salvage", "sampling", "sanitation", "sequencing",
    "servicing", "staffing", "staging", "sterilization", "stocktaking",
    "subrogation", "surveying", "tasking", "tendering", "titling",
    "tolling", "traceability", "transcription", "valuation", "warehousing",
    "waitlisting", "winterization", "zoning", "scheduling", "bookings",
    "manifests", "vetting", "appeals", "recertification", "crediting",
    "allotments",
)

FUNCTION_VERBS = (
    "optimize", "reconcile", "summarize", "classify", "automate",
    "draft", "verify", "merge", "cleanse", "enrich",
    "extract", "convert", "annotate", "deduplicate", "prioritize",
    "monitor", "translate", "compress", "redact", "anonymize",
    "reformat", "synchronize", "escalate", "forecast", "simulate",
    "visualize", "validate", "stream", "archive", "restore",
    "encrypt", "parse",
)

FUNCTION_ADJECTIVES = (
    "adaptive", "batched", "federated", "granular", "incremental",
    "layered", "modular", "nested", "predictive", "recursive",
    "resilient", "scalable", "staged", "tiered", "unified",
    "versioned", "weighted", "asynchronous", "compliant", "hierarchical",
    "immutable", "localized", "multilingual", "offline", "portable",
    "redundant", "regional", "seasonal", "zoned", "curated",
    "rotating", "mirrored", "delegated", "expiring", "itemized",
    "threaded",
)

FUNCTION_NOUNS = (
    "ledgers", "invoices", "waivers", "charters", "dockets",
    "vouchers", "appraisals", "blueprints", "bulletins", "citations",
    "contracts", "datasets", "deeds", "digests", "dossiers",
    "gazettes", "glossaries", "itineraries", "journals", "lexicons",
    "logbooks", "mandates", "memos", "notices", "payouts",
    "petitions", "playbooks", "portfolios", "premiums", "prospectuses",
    "quotas", "receipts", "refunds", "registries", "scorecards",
    "stipends", "syllabi", "testimonies", "transcripts", "warranties",
)

PAIN_ADJECTIVES = (
    "tangled", "stalled", "leaking", "drifting", "duplicated",
    "orphaned", "mislabeled", "backdated", "fragmented", "expired",
    "unsigned", "misfiled", "overdue", "conflicting", "untracked",
    "garbled", "misrouted", "unbalanced", "frozen", "skipped",
    "detached", "inverted", "truncated", "stranded", "clogged",
    "lopsided", "unmerged", "scattered", "overlapping", "missing",
    "stale", "corrupted", "unlinked", "shadowed", "lagging",
    "double", "phantom", "broken", "looping", "dangling",
    "muddled", "spiraling", "creeping", "bloated", "crooked",
    "patchy", "brittle", "noisy", "sticky", "jumbled",
    "warped", "faded", "cracked", "bent", "torn", "rusty",
)

PAIN_MIDS = (
    "rollover", "handback", "mismatch", "carryover", "shortfall",
    "overrun", "writeoff", "holdover", "crossover", "turnback",
    "slippage", "residue", "remainder", "variance", "discrepancy",
    "leftover", "backfill", "rework", "redo", "reentry",
    "restatement", "rekeying", "relabel", "recount", "retry",
    "reissue", "resubmission", "reprint", "rescan", "reupload",
    "misprint", "misread", "miscount", "miscue", "misstep",
    "glitch", "hiccup", "logjam", "pileup", "bottleneck",
    "dropout", "blackout", "brownout", "washout", "fallout",
    "spillover", "churn", "drag", "bloat", "sprawl",
    "clutter", "debris",
)

PAIN_TAILS = (
    "spikes", "loops", "gaps", "piles", "knots",
    "jams", "snags", "drips", "skews", "lags",
    "stacks", "queues", "drifts", "leaks", "bursts",
    "waves", "spirals", "tangles", "clumps", "streaks",
    "ripples", "clusters", "pockets", "trails", "heaps",
    "surges", "flurries", "cascades",
)

NAME_SUFFIXES = ("Desk", "Pilot", "Mate", "Works", "Hub", "Studio", "Line", "Forge")

FILLER_SENTENCES = (
    "Requests come in through a shared queue and responses land back in the same thread.",
    "It connects to existing trackers, keeps records tidy, and reports progress on a fixed cadence.",
    "Teams hand over recurring chores and get consistent, reviewable output in return.",
    "Every run leaves a clear record so coworkers can follow what changed and why.",
    "Typical engagements range from quick one-off lookups to standing weekly deliverables.",
    "Handovers stay small because the agent keeps its own working notes current.",
    "New coworkers can delegate to it on day one without extra setup or training.",
    "Output arrives in plain files that slot straight into the usual review tools.",
)

# Scenario queries share a backbone ("team ... backlog ... office") with every
# agent's scenario example; only the pain words single one agent out, and the
# query carries two of the three pain words while the example carries all
# three. That keeps the pain phrase decisive for example-level matching but
# thin enough that pooling the examples buries it.
SCENARIO_QUERY_VERBS = (
    "struggles with", "is stuck on", "keeps hitting",
    "wastes hours on", "trips over", "drowns in",
)

SCENARIO_QUERY_TEMPLATE = (
    "our {ind} team {verb} the {pa} {pm} around {sub} "
    "and the backlog at the office keeps growing"
)

SCENARIO_EXAMPLE_TEMPLATE = (
    "Help our {ind} team with the {pa} {pm} {pt} around {sub} "
    "and clear the backlog at the office."
)

EXTRA_EXAMPLE_TEMPLATES = (
    "Walk through how to {fv} {fa} {fn} for {sub} ahead of the {ind} cycle.",
    "Assemble the quarterly packet and {fv} {fa} {fn} for the {sub} leads.",
    "Whenever the {sub} calendar resets, {fv} {fa} {fn} and file the result.",
)


@dataclass(frozen=True)
class TaxonomySpec:
    """Shape of a synthetic corpus; total agents = industries x subdomains x slots."""

    seed: int = 42
    num_industries: int = 8
    subdomains_per_industry: int = 6
    agents_per_subdomain: int = 10
    examples_per_agent: int = 3
    queries_per_agent: int = 3

    def __post_init__(self) -> None:
        for name in (
            "num_industries",
            "subdomains_per_industry",
            "agents_per_subdomain",
            "examples_per_agent",
            "queries_per_agent",
        ):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be a positive integer")

    @property
    def total_agents(self) -> int:
        return self.num_industries * self.subdomains_per_industry * self.agents_per_subdomain

    @property
    def total_queries(self) -> int:
        return self.total_agents * self.queries_per_agent


@dataclass(frozen=True)
class GeneratedCorpus:
    agents: tuple[AgentCard, ...]
    queries: tuple[QueryRecord, ...]
    taxonomy: dict[str, dict[str, tuple[str, ...]]] = field(default_factory=dict)


def _phrase(slug: str) -> str:
    return slug.replace("-", " ")


def _description(
    rng: random.Random,
    name: str,
    ind_words: str,
    sub_tags: Sequence[str],
    func_slugs: Sequence[str],
) -> str:
    sentences = [
        f"{name} focuses on {sub_tags[0]}, {sub_tags[1]}, and {sub_tags[2]} for the {ind_words} sector.",
        f"It can {_phrase(func_slugs[0])} without manual effort.",
    ]
    for slug in func_slugs[1:]:
        sentences.append(f"The service also covers {_phrase(slug)} on demand.")
    text = " ".join(sentences)
    while len(text.split()) < 50:
        text += " " + FILLER_SENTENCES[rng.randrange(len(FILLER_SENTENCES))]
    words = len(text.split())
    if not 50 <= words <= 100:
        raise BuildError(f"description for {name!r} has {words} words, outside 50-100")
    return text


def _examples(
    rng: random.Random,
    count: int,
    ind_words: str,
    sub_tags: Sequence[str],
    func_slugs: Sequence[str],
    pain: str,
    scenario_example: str,
) -> list[str]:
    verb, adj, noun = func_slugs[0].split("-")
    pool = [
        f"Draft a plan to {verb} {adj} {noun} for the {sub_tags[0]} group and log the outcome.",
        scenario_example,
        f"Prepare the {sub_tags[2]} checklist so the team can {verb} {adj} {noun} before the {ind_words} review.",
    ]
    for template in EXTRA_EXAMPLE_TEMPLATES:
        if len(pool) >= count:
            break
        slug = func_slugs[rng.randrange(len(func_slugs))]
        extra_verb, extra_adj, extra_noun = slug.split("-")
        pool.append(
            template.format(
                fv=extra_verb, fa=extra_adj, fn=extra_noun, sub=sub_tags[1], ind=ind_words
            )
        )
    if count > len(pool):
        raise InputError(f"examples_per_agent={count} exceeds the {len(pool)} available templates")
    return pool[:count]


def generate(spec: TaxonomySpec) -> GeneratedCorpus:
    """Generate a corpus; fully deterministic in ``spec.seed``."""
    industries_pool = [f"{a}-{n}" for a in INDUSTRY_ADJECTIVES for n in INDUSTRY_NOUNS]
    if spec.num_industries > len(industries_pool):
        raise InputError(
            f"num_industries={spec.num_industries} exceeds the {len(industries_pool)} available names"
        )
    tags_needed = spec.subdomains_per_industry * 3
    if tags_needed > len(SUBDOMAIN_TERMS):
        raise InputError(
            f"{spec.subdomains_per_industry} subdomains need {tags_needed} tags, "
            f"pool has {len(SUBDOMAIN_TERMS)}"
        )

    rng = random.Random(spec.seed)
    rng.shuffle(industries_pool)
    industries = industries_pool[: spec.num_industries]

    func_pool = [
        f"{v}-{a}-{n}" for v in FUNCTION_VERBS for a in FUNCTION_ADJECTIVES for n in FUNCTION_NOUNS
    ]
    rng.shuffle(func_pool)
    pain_pool = [f"{a} {m} {t}" for a in PAIN_ADJECTIVES for m in PAIN_MIDS for t in PAIN_TAILS]
    rng.shuffle(pain_pool)
    func_cursor = 0
    pain_cursor = 0

    agents: list[AgentCard] = []
    queries: list[QueryRecord] = []
    taxonomy: dict[str, dict[str, tuple[str, ...]]] = {}
    seen_examples: set[str] = set()

    for industry in industries:
        ind_words = _phrase(industry)
        sub_tag_pool = rng.sample(SUBDOMAIN_TERMS, tags_needed)
        sub_map: dict[str, tuple[str, ...]] = {}
        for sub_index in range(spec.subdomains_per_industry):
            sub_tags = sub_tag_pool[sub_index * 3 : sub_index * 3 + 3]
            agent_ids: list[str] = []
            for _slot in range(spec.agents_per_subdomain):
                agent_id = f"a{len(agents):05d}"
                n_func = rng.randint(1, 4)
                if func_cursor + n_func > len(func_pool):
                    raise InputError("functional tag pool exhausted; reduce corpus size")
                func_slugs = func_pool[func_cursor : func_cursor + n_func]
                func_cursor += n_func
                if pain_cursor >= len(pain_pool):
                    raise InputError("pain phrase pool exhausted; reduce corpus size")
                pain = pain_pool[pain_cursor]
                pain_cursor += 1

                _, adj, noun = func_slugs[0].split("-")
                name = f"{adj.title()} {noun.title()} {NAME_SUFFIXES[rng.randrange(len(NAME_SUFFIXES))]}"
                tags = (industry, *sub_tags, *func_slugs)

                pain_adj, pain_mid, pain_tail = pain.split(" ")
                verb = SCENARIO_QUERY_VERBS[rng.randrange(len(SCENARIO_QUERY_VERBS))]
                scenario_query = SCENARIO_QUERY_TEMPLATE.format(
                    ind=ind_words, verb=verb, pa=pain_adj, pm=pain_mid, sub=sub_tags[1]
                )
                scenario_example = SCENARIO_EXAMPLE_TEMPLATE.format(
                    ind=ind_words, pa=pain_adj, pm=pain_mid, pt=pain_tail, sub=sub_tags[1]
                )

                description = _description(rng, name, ind_words, sub_tags, func_slugs)
                examples = _examples(
                    rng,
                    spec.examples_per_agent,
                    ind_words,
                    sub_tags,
                    func_slugs,
                    pain,
                    scenario_example,
                )
                for example in examples:
                    if example in seen_examples:
                        raise BuildError(f"duplicate example generated: {example!r}")
                    seen_examples.add(example)

                card = AgentCard(
                    id=agent_id,
                    name=name,
                    description=description,
                    tags=tags,
                    examples=tuple(examples),
                )
                if not 5 <= len(card.tags) <= 8:
                    raise BuildError(f"agent {agent_id}: {len(card.tags)} tags, outside 5-8")
                agents.append(card)
                agent_ids.append(agent_id)

                for q_index in range(spec.queries_per_agent):
                    intent = ("capability", "scenario", "keyword")[q_index % 3]
                    if intent == "capability":
                        slug = func_slugs[q_index % n_func]
                        verb, fadj, fnoun = slug.split("-")
                        text = (
                            f"I need an agent that can {verb} {fadj} {fnoun} "
                            f"for {sub_tags[0]} in {ind_words}"
                        )
                    elif intent == "scenario":
                        text = scenario_query
                    else:
                        text = f"{' '.join(func_slugs)} {sub_tags[0]}"
                        query_tokens = set(tokenize(text))
                        for slug in func_slugs:
                            if not set(tokenize(slug)) <= query_tokens:
                                raise BuildError(
                                    f"keyword query for {agent_id} is missing tokens of {slug!r}"
                                )
                    queries.append(QueryRecord(text=text, truth_agent_id=agent_id, intent=intent))
            sub_map[sub_tags[0]] = tuple(agent_ids)
        taxonomy[industry] = sub_map

    return GeneratedCorpus(agents=tuple(agents), queries=tuple(queries), taxonomy=taxonomy)


# ----------------------------------------------------------------------- i/o


def write_corpus(corpus: GeneratedCorpus, agents_path: str | Path, queries_path: str | Path) -> None:
    """Write agents.jsonl / queries.jsonl; output is byte-stable for a corpus."""
    with open(agents_path, "w", encoding="utf-8") as fh:
        for agent in corpus.agents:
            fh.write(json.dumps(agent_to_json_dict(agent), ensure_ascii=False) + "\n")
    with open(queries_path, "w", encoding="utf-8") as fh:
        for query in corpus.queries:
            fh.write(
                json.dumps(
                    {"query": query.text, "agent_id": query.truth_agent_id, "intent": query.intent},
                    ensure_ascii=False,
                )
                + "\n"
            )


def _read_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from exc
            yield line_no, raw


def load_corpus(agents_path: str | Path, queries_path: str | Path | None = None) -> GeneratedCorpus:
    """Load a corpus from JSONL files, checking referential integrity."""
    agents: list[AgentCard] = []
    ids: set[str] = set()
    for line_no, raw in _read_jsonl(agents_path):
        try:
            card = agent_from_json_dict(raw, fallback_id=f"auto-{line_no:05d}")
        except InputError as exc:
            raise ParseError(f"{agents_path}:{line_no}: {exc}") from exc
        if card.id in ids:
            raise IntegrityError(f"{agents_path}:{line_no}: duplicate agent id {card.id!r}")
        ids.add(card.id)
        agents.append(card)

    queries: list[QueryRecord] = []
    if queries_path is not None:
        for line_no, raw in _read_jsonl(queries_path):
            try:
                record = QueryRecord(
                    text=str(raw["query"]),
                    truth_agent_id=str(raw["agent_id"]),
                    intent=str(raw["intent"]),
                )
            except (KeyError, TypeError) as exc:
                raise ParseError(f"{queries_path}:{line_no}: missing or invalid field {exc}") from exc
            except InputError as exc:
                raise ParseError(f"{queries_path}:{line_no}: {exc}") from exc
            if record.truth_agent_id not in ids:
                raise IntegrityError(
                    f"{queries_path}:{line_no}: query references unknown agent "
                    f"{record.truth_agent_id!r}"
                )
            queries.append(record)

    return GeneratedCorpus(agents=tuple(agents), queries=tuple(queries), taxonomy={})


# ---------------------------------------------------------------------- stats


@dataclass(frozen=True)
class CorpusStats:
    num_agents: int
    num_queries: int
    unique_tags: int
    tag_frequencies: dict[str, int]
    rank_curve: tuple[tuple[int, int, float], ...]  # (rank, frequency, log10 frequency)
    agents_per_tag_max: int
    agents_per_tag_mean: float

    def top_tags(self, n: int = 10) -> list[tuple[str, int]]:
        return sorted(self.tag_frequencies.items(), key=lambda kv: (-kv[1], kv[0]))[:n]

    def to_dict(self) -> dict:
        return {
            "num_agents": self.num_agents,
            "num_queries": self.num_queries,
            "unique_tags": self.unique_tags,
            "agents_per_tag_max": self.agents_per_tag_max,
            "agents_per_tag_mean": self.agents_per_tag_mean,
            "top_tags": self.top_tags(20),
            "rank_curve": [list(point) for point in self.rank_curve],
        }


def corpus_stats(corpus: GeneratedCorpus) -> CorpusStats:
    """Tag frequency profile of a corpus; raises on an empty one."""
    if not corpus.agents:
        raise InputError("corpus has no agents")
    counts: Counter[str] = Counter()
    for agent in corpus.agents:
        counts.update(agent.tags)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    curve = tuple(
        (rank, freq, math.log10(freq)) for rank, (_tag, freq) in enumerate(ordered, start=1)
    )
    frequencies = [freq for _tag, freq in ordered]
    return CorpusStats(
        num_agents=len(corpus.agents),
        num_queries=len(corpus.queries),
        unique_tags=len(counts),
        tag_frequencies=dict(counts),
        rank_curve=curve,
        agents_per_tag_max=max(frequencies),
        agents_per_tag_mean=sum(frequencies) / len(frequencies),
    )
