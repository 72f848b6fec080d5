"""Core domain types, configuration, and score arithmetic shared by every module."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

DEFAULT_DIM = 384
MODES = ("full", "no_maxsim", "no_slm", "mdr")
INTENTS = ("capability", "scenario", "keyword")

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EngineError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(EngineError):
    """Invalid configuration value."""


class InputError(EngineError):
    """Caller-supplied value violates an operation precondition."""


class DimensionError(EngineError):
    """Vector length does not match the corpus dimension."""


class DegenerateVectorError(EngineError):
    """Zero-norm input cannot be normalized."""


class BuildError(EngineError):
    """Index construction failed."""


class NotReadyError(EngineError):
    """Operation requires a built index or a loaded vocabulary."""


class ProviderError(EngineError):
    """An external provider failed after exhausting its retry budget."""


class ParseError(EngineError):
    """Malformed corpus file."""


class IntegrityError(EngineError):
    """Cross-references within a corpus do not resolve."""


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens; the one tokenizer used across the package."""
    return _TOKEN_RE.findall(text.lower())


def canonical_tag(tag: str) -> str:
    """Tags are compared as lowercase, whitespace-trimmed symbols."""
    return tag.strip().lower()


def fuse_scores(alpha: float, ctx: float, res: float) -> float:
    """Blend a broad context score with a specific-intent score.

    ``alpha`` weights the context side; ``1 - alpha`` weights the intent side.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * ctx + (1.0 - alpha) * res


def normalize(values: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Return ``values`` scaled to unit Euclidean norm as a float32 vector.

    Raises ``DimensionError`` when ``dim`` is given and does not match, and
    ``DegenerateVectorError`` for zero or non-finite input.
    """
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {vec.shape[0]}")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateVectorError("cannot normalize a zero or non-finite vector")
    return (vec / norm).astype(np.float32)


def is_unit(vec: np.ndarray, tol: float = 1e-5) -> bool:
    return abs(float(np.linalg.norm(np.asarray(vec, dtype=np.float64))) - 1.0) <= tol


@dataclass(frozen=True)
class AgentCard:
    """One agent's identity plus the metadata all three indices are built from.

    Tags are canonicalized (lowercased, trimmed) at construction; examples are
    trimmed. Instances are immutable and safe to share across threads.
    """

    id: str
    name: str
    description: str
    tags: tuple[str, ...]
    examples: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.id.strip():
            raise InputError("agent id must be non-empty")
        tags = tuple(canonical_tag(t) for t in self.tags)
        if not tags:
            raise InputError(f"agent {self.id!r}: at least one tag is required")
        if any(not t for t in tags):
            raise InputError(f"agent {self.id!r}: tags must be non-empty after trimming")
        if len(set(tags)) != len(tags):
            raise InputError(f"agent {self.id!r}: duplicate tags after canonicalization")
        examples = tuple(e.strip() for e in self.examples)
        if any(not e for e in examples):
            raise InputError(f"agent {self.id!r}: examples must be non-empty after trimming")
        object.__setattr__(self, "tags", tags)
        object.__setattr__(self, "examples", examples)


def agent_from_json_dict(raw: dict[str, Any], fallback_id: str | None = None) -> AgentCard:
    """Parse the wire representation of an agent card.

    Keys are "Name", "Description", "Tags", "Examples" and optionally "Id"; when
    "Id" is absent ``fallback_id`` is assigned.
    """
    if not isinstance(raw, dict):
        raise InputError(f"agent card must be a JSON object, got {type(raw).__name__}")
    agent_id = raw.get("Id", fallback_id)
    if agent_id is None:
        raise InputError("agent card has no 'Id' and no fallback id was provided")
    name = raw.get("Name", "")
    description = raw.get("Description", "")
    tags = raw.get("Tags", [])
    examples = raw.get("Examples", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise InputError(f"agent {agent_id!r}: 'Tags' must be an array of strings")
    if not isinstance(examples, list) or not all(isinstance(e, str) for e in examples):
        raise InputError(f"agent {agent_id!r}: 'Examples' must be an array of strings")
    if not isinstance(name, str) or not isinstance(description, str):
        raise InputError(f"agent {agent_id!r}: 'Name' and 'Description' must be strings")
    return AgentCard(
        id=str(agent_id),
        name=name,
        description=description,
        tags=tuple(tags),
        examples=tuple(examples),
    )


def agent_to_json_dict(card: AgentCard) -> dict[str, Any]:
    return {
        "Id": card.id,
        "Name": card.name,
        "Description": card.description,
        "Tags": list(card.tags),
        "Examples": list(card.examples),
    }


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for recall and re-ranking.

    ``alpha`` is the fusion weight between the context score and the
    example-match score; ``dense_top_k`` sizes the dense recall path;
    ``final_k`` caps the ranked output. ``sparse_cap`` / ``rerank_cap`` bound
    the sparse candidate set and the re-rank set (unlimited by default).
    """

    alpha: float = 0.5
    dense_top_k: int = 50
    final_k: int = 10
    dim: int = DEFAULT_DIM
    mode: str = "full"
    max_syn: int = 5
    sparse_cap: int | None = None
    rerank_cap: int | None = None
    workers: int = 2

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        for name in ("dense_top_k", "final_k", "dim", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.max_syn < 0:
            raise ConfigError("max_syn must be >= 0")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("sparse_cap", "rerank_cap"):
            cap = getattr(self, name)
            if cap is not None and cap < 1:
                raise ConfigError(f"{name} must be positive when set")


@dataclass(frozen=True)
class ScoredAgent:
    """One ranked candidate with its score decomposition."""

    agent_id: str
    context_score: float
    resonance_score: float
    final_score: float
    origin: frozenset[str] = frozenset()


@dataclass(frozen=True)
class QueryRecord:
    """A benchmark query with its ground-truth agent and intent category."""

    text: str
    truth_agent_id: str
    intent: str

    def __post_init__(self) -> None:
        if self.intent not in INTENTS:
            raise InputError(f"intent must be one of {INTENTS}, got {self.intent!r}")
