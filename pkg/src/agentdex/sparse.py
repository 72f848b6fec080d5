"""Inverted tag index: canonical tag -> sorted agent postings, with synonyms.

Synonyms are applied on both sides: alias tags are folded into their canonical
form at build time, and incoming lookup tags are canonicalized the same way.
That keeps the round-trip guarantee (every agent is reachable through each of
its own tags) even when either side uses an alias.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import AgentCard, BuildError, ParseError, canonical_tag


@dataclass(frozen=True)
class TagPostings:
    """Frozen postings map; read-concurrent without locks after build."""

    postings: dict[str, tuple[str, ...]]
    synonyms: dict[str, str] = field(default_factory=dict)

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(self.postings)

    def canonical(self, tag: str) -> str:
        tag = canonical_tag(tag)
        return self.synonyms.get(tag, tag)

    def lookup(self, tags: Iterable[str]) -> set[str]:
        """Union of postings over the canonicalized input tags (OR logic).

        Unknown tags contribute nothing; an empty input yields an empty set.
        """
        out: set[str] = set()
        for tag in tags:
            out.update(self.postings.get(self.canonical(tag), ()))
        return out

    def __len__(self) -> int:
        return len(self.postings)


def build_sparse(agents: Sequence[AgentCard], synonyms: Mapping[str, str] | None = None) -> TagPostings:
    """Build the inverted index; raises ``BuildError`` on duplicate agent ids."""
    alias_map = {canonical_tag(a): canonical_tag(c) for a, c in (synonyms or {}).items()}
    seen: set[str] = set()
    buckets: dict[str, set[str]] = {}
    for agent in agents:
        if agent.id in seen:
            raise BuildError(f"duplicate agent id {agent.id!r}")
        seen.add(agent.id)
        for tag in agent.tags:
            key = alias_map.get(tag, tag)
            buckets.setdefault(key, set()).add(agent.id)
    postings = {tag: tuple(sorted(ids)) for tag, ids in sorted(buckets.items())}
    return TagPostings(postings=postings, synonyms=alias_map)


def load_synonyms(path: str | Path) -> dict[str, str]:
    """Read a JSON object of {"alias": "canonical", ...}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in raw.items()
    ):
        raise ParseError(f"{path}: synonym file must be a JSON object of string -> string")
    return {canonical_tag(k): canonical_tag(v) for k, v in raw.items()}
