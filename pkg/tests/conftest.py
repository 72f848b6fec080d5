from __future__ import annotations

import pytest

from agentdex import (
    AgentCard,
    DiscoveryEngine,
    EngineConfig,
    HashingEmbedder,
    TaxonomySpec,
    generate,
)


def make_card(agent_id: str, tags, examples=(), description="", name=""):
    return AgentCard(
        id=agent_id,
        name=name or agent_id,
        description=description or f"{agent_id} handles {' and '.join(tags)} work for partner teams.",
        tags=tuple(tags),
        examples=tuple(examples),
    )


@pytest.fixture(scope="session")
def small_corpus():
    return generate(TaxonomySpec(seed=7, num_industries=2))


@pytest.fixture(scope="session")
def small_engine(small_corpus):
    config = EngineConfig(dim=128, dense_top_k=20)
    return DiscoveryEngine.build(
        small_corpus.agents, config, embedder=HashingEmbedder(dim=128, seed=3)
    )


@pytest.fixture()
def hand_agents():
    return [
        make_card(
            "alpha",
            ["hr", "workday", "onboarding"],
            examples=["Draft an onboarding workflow call", "Summarize employee records"],
        ),
        make_card(
            "bravo",
            ["hr", "payroll"],
            examples=["Reconcile the payroll ledger at month end"],
        ),
        make_card(
            "charlie",
            ["security", "audit-logs"],
            examples=["Scan audit logs for anomalies"],
        ),
    ]
