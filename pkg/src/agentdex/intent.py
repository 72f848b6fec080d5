"""Intent index: per-agent matrices of usage-example embeddings.

Each example keeps its own row instead of being averaged away, so a query that
matches one specific capability scores highly no matter how many unrelated
examples the agent carries. Matrices are packed contiguously with an offset
table; re-ranking a candidate set is one batched matrix product plus a
segmented max.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import AgentCard, BuildError, DimensionError
from .embedding import Embedder


@dataclass(frozen=True)
class ExampleMatrix:
    """Unit-vector rows, one per usage example; may be empty."""

    agent_id: str
    rows: np.ndarray  # (m, d) float32


def _as_rows(rows: np.ndarray, v_q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v_q = np.asarray(v_q, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or (rows.size and rows.shape[1] != v_q.shape[0]):
        raise DimensionError(
            f"example rows have shape {rows.shape}, query has dimension {v_q.shape[0]}"
        )
    return rows, v_q


def max_sim(v_q: np.ndarray, matrix: ExampleMatrix | np.ndarray) -> float:
    """Best single-example match: max over rows of dot(v_q, row); 0.0 if empty."""
    rows = matrix.rows if isinstance(matrix, ExampleMatrix) else matrix
    rows, v_q = _as_rows(rows, v_q)
    if rows.shape[0] == 0:
        return 0.0
    return float(np.max(rows @ v_q))


def mean_pool_raw_dot(v_q: np.ndarray, matrix: ExampleMatrix | np.ndarray) -> float:
    """Dot of the query with the unnormalized mean of the rows; 0.0 if empty.

    This is the quantity that decays like 1/m when a query matches exactly one
    of m mutually orthogonal examples.
    """
    rows = matrix.rows if isinstance(matrix, ExampleMatrix) else matrix
    rows, v_q = _as_rows(rows, v_q)
    if rows.shape[0] == 0:
        return 0.0
    return float(rows.mean(axis=0) @ v_q)


def mean_pool_sim(v_q: np.ndarray, matrix: ExampleMatrix | np.ndarray) -> float:
    """Cosine between the query and the re-normalized mean of the rows.

    Used by the pooled-similarity ablation; 0.0 for an empty matrix or a mean
    that cancels to zero.
    """
    rows = matrix.rows if isinstance(matrix, ExampleMatrix) else matrix
    rows, v_q = _as_rows(rows, v_q)
    if rows.shape[0] == 0:
        return 0.0
    mean = rows.mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        return 0.0
    return float(mean @ v_q) / norm


class IntentIndex:
    """Packed example matrices for all agents; frozen after build."""

    def __init__(self, ids: Sequence[str], offsets: np.ndarray, rows: np.ndarray, dim: int) -> None:
        self.ids: tuple[str, ...] = tuple(ids)
        self.dim = dim
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.rows = np.asarray(rows, dtype=np.float32).reshape(-1, dim)
        self.rows.setflags(write=False)
        self.offsets.setflags(write=False)
        self._rows64 = self.rows.astype(np.float64)
        self._rows64.setflags(write=False)
        self._slot = {agent_id: i for i, agent_id in enumerate(self.ids)}
        # pooled means are precomputed so the ablation re-rank is also one product
        means = np.zeros((len(self.ids), dim), dtype=np.float64)
        counts = np.diff(self.offsets)
        for i, (start, stop) in enumerate(zip(self.offsets[:-1], self.offsets[1:])):
            if stop > start:
                means[i] = self._rows64[start:stop].mean(axis=0)
        self._means = means
        self._mean_norms = np.linalg.norm(means, axis=1)
        self._counts = counts

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self._slot

    def __iter__(self) -> Iterator[str]:
        return iter(self.ids)

    def __getitem__(self, agent_id: str) -> ExampleMatrix:
        i = self._slot[agent_id]
        start, stop = self.offsets[i], self.offsets[i + 1]
        return ExampleMatrix(agent_id=agent_id, rows=self.rows[start:stop])

    def example_count(self, agent_id: str) -> int:
        return int(self._counts[self._slot[agent_id]])

    def _check_query(self, v_q: np.ndarray) -> np.ndarray:
        v_q = np.asarray(v_q, dtype=np.float64)
        if v_q.shape != (self.dim,):
            raise DimensionError(f"query has shape {v_q.shape}, index dimension is {self.dim}")
        return v_q

    def max_sim_batch(self, agent_ids: Sequence[str], v_q: np.ndarray) -> np.ndarray:
        """max_sim for each candidate; zero-example agents score 0.0."""
        v_q = self._check_query(v_q)
        out = np.zeros(len(agent_ids), dtype=np.float64)
        if not agent_ids:
            return out
        slots = [self._slot[a] for a in agent_ids]
        spans = [(i, self.offsets[s], self.offsets[s + 1]) for i, s in enumerate(slots)]
        spans = [(i, start, stop) for i, start, stop in spans if stop > start]
        if not spans:
            return out
        gathered = np.concatenate([np.arange(start, stop) for _, start, stop in spans])
        sims = self._rows64[gathered] @ v_q
        cursor = 0
        for i, start, stop in spans:
            width = int(stop - start)
            out[i] = sims[cursor : cursor + width].max()
            cursor += width
        return out

    def mean_pool_batch(self, agent_ids: Sequence[str], v_q: np.ndarray) -> np.ndarray:
        """Re-normalized mean-pool cosine for each candidate; 0.0 when empty."""
        v_q = self._check_query(v_q)
        if not agent_ids:
            return np.zeros(0, dtype=np.float64)
        slots = np.fromiter((self._slot[a] for a in agent_ids), dtype=np.int64, count=len(agent_ids))
        dots = self._means[slots] @ v_q
        norms = self._mean_norms[slots]
        safe = norms > 0.0
        out = np.zeros(len(agent_ids), dtype=np.float64)
        out[safe] = dots[safe] / norms[safe]
        return out


def build_intent(agents: Sequence[AgentCard], embedder: Embedder) -> IntentIndex:
    """One example matrix per agent; agents without examples get empty ones."""
    dim = embedder.dim
    offsets = [0]
    texts: list[str] = []
    for agent in agents:
        texts.extend(agent.examples)
        offsets.append(len(texts))
    if texts:
        vectors = embedder.embed_batch(texts)
        for vec in vectors:
            if vec.shape != (dim,):
                raise BuildError(f"embedder returned shape {vec.shape}, expected ({dim},)")
        rows = np.vstack(vectors)
    else:
        rows = np.zeros((0, dim), dtype=np.float32)
    return IntentIndex([a.id for a in agents], np.asarray(offsets), rows, dim)
