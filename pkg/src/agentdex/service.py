"""HTTP surface: agent registration, index building, and discovery.

Index snapshots are immutable engines swapped atomically on rebuild: a request
resolves the active snapshot once and runs entirely against it, so no request
ever observes a partially built index. Staged agents accumulate until the next
build; rebuilding while serving is allowed.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, replace
from time import perf_counter
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .core import AgentCard, ConfigError, EngineConfig, EngineError, agent_from_json_dict
from .embedding import Embedder, HashingEmbedder
from .engine import DiscoveryEngine
from .tagging import TagPredictor

logger = logging.getLogger(__name__)

ENV_BIND = "GRAIL_BIND"
MIN_DEADLINE_S = 0.4  # must not undercut the per-query discovery budget


@dataclass(frozen=True)
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    body_limit_bytes: int = 1 << 20
    deadline_s: float = 2.0
    engine_config: EngineConfig = EngineConfig()

    def __post_init__(self) -> None:
        if self.deadline_s < MIN_DEADLINE_S:
            raise ConfigError(f"deadline_s must be >= {MIN_DEADLINE_S}, got {self.deadline_s}")
        if self.body_limit_bytes < 1:
            raise ConfigError("body_limit_bytes must be positive")


class _ServiceState:
    """Staging area plus the active snapshot; single-writer, many readers."""

    def __init__(self, config: ApiConfig, embedder: Embedder | None, tagger: TagPredictor | None):
        self.config = config
        self.embedder = embedder
        self.tagger = tagger
        self.lock = threading.Lock()
        self.staged: list[AgentCard] = []
        self.staged_ids: set[str] = set()
        self.auto_counter = 0
        self.snapshot: DiscoveryEngine | None = None
        self.started_at = time.monotonic()


class DiscoverRequest(BaseModel):
    query: str
    k: int | None = None
    mode: str | None = None


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(
    config: ApiConfig | None = None,
    embedder: Embedder | None = None,
    tagger: TagPredictor | None = None,
) -> FastAPI:
    """Build the application; inject an embedder/tagger to override the
    defaults chosen at build time (deterministic embedder, lexical tagger)."""
    config = config or ApiConfig()
    state = _ServiceState(config, embedder, tagger)
    app = FastAPI(title="agentdex", version="0.1.0")
    app.state.service = state

    @app.middleware("http")
    async def limit_body(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and int(length) > config.body_limit_bytes:
            return _error(413, f"body exceeds {config.body_limit_bytes} bytes")
        return await call_next(request)

    @app.post("/v1/agents")
    async def register_agents(request: Request):
        try:
            raw = await request.json()
        except Exception:
            return _error(400, "malformed JSON body")
        items = raw if isinstance(raw, list) else [raw]
        accepted = 0
        rejected: list[dict[str, Any]] = []
        with state.lock:
            for index, item in enumerate(items):
                try:
                    state.auto_counter += 1
                    card = agent_from_json_dict(item, fallback_id=f"auto-{state.auto_counter:05d}")
                except EngineError as exc:
                    rejected.append({"index": index, "reason": str(exc), "code": 400})
                    continue
                if card.id in state.staged_ids:
                    rejected.append({"index": index, "reason": "duplicate id", "code": 409})
                    continue
                state.staged.append(card)
                state.staged_ids.add(card.id)
                accepted += 1
        return {"accepted": accepted, "rejected": rejected}

    @app.delete("/v1/agents")
    def clear_staged():
        with state.lock:
            count = len(state.staged)
            state.staged.clear()
            state.staged_ids.clear()
        return {"cleared": count}

    @app.post("/v1/index/build")
    async def build_index(request: Request):
        try:
            body = await request.json() if await request.body() else {}
        except Exception:
            return _error(400, "malformed JSON body")
        if not isinstance(body, dict):
            return _error(400, "config overrides must be a JSON object")
        overrides = {
            key: body[key]
            for key in ("alpha", "dense_top_k", "final_k", "dim", "mode", "max_syn")
            if key in body
        }
        with state.lock:
            if not state.staged:
                return _error(409, "no agents staged; POST /v1/agents first")
            agents = list(state.staged)
        try:
            seed = int(body.get("seed", 0))
            engine_config = replace(config.engine_config, **overrides)
            embedder = state.embedder or HashingEmbedder(dim=engine_config.dim, seed=seed)
            start = perf_counter()
            engine = DiscoveryEngine.build(
                agents, engine_config, embedder=embedder, tagger=state.tagger
            )
            build_ms = (perf_counter() - start) * 1000.0
        except (ConfigError, TypeError, ValueError) as exc:
            return _error(400, f"invalid config override: {exc}")
        except EngineError as exc:
            logger.exception("index build failed")
            return _error(500, f"index build failed: {exc}")
        state.snapshot = engine  # atomic swap; in-flight requests keep the old one
        return {
            "agents": engine.num_agents,
            "tags": engine.num_tags,
            "build_ms": build_ms,
            "snapshot_id": engine.snapshot_id,
        }

    @app.post("/v1/discover")
    def discover(body: DiscoverRequest):
        snapshot = state.snapshot
        if snapshot is None:
            return _error(503, "index not built yet")
        if not body.query.strip():
            return _error(400, "query must be non-empty")
        start = perf_counter()
        try:
            result = snapshot.discover(body.query, mode=body.mode, final_k=body.k)
        except (ConfigError, EngineError) as exc:
            return _error(400, str(exc))
        if perf_counter() - start > config.deadline_s:
            return _error(504, f"discovery exceeded the {config.deadline_s}s deadline")
        timings = dict(result.timings)
        timings["snapshot_id"] = snapshot.snapshot_id
        return {
            "results": [
                {
                    "id": scored.agent_id,
                    "name": snapshot.agents[scored.agent_id].name,
                    "final": scored.final_score,
                    "ctx": scored.context_score,
                    "res": scored.resonance_score,
                }
                for scored in result.ranked
            ],
            "timings": timings,
            "degraded": result.degraded,
            "snapshot_id": snapshot.snapshot_id,
        }

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.get("/v1/stats")
    def stats():
        snapshot = state.snapshot
        return {
            "agents": snapshot.num_agents if snapshot else 0,
            "tags": snapshot.num_tags if snapshot else 0,
            "dim": snapshot.config.dim if snapshot else state.config.engine_config.dim,
            "mode": snapshot.config.mode if snapshot else state.config.engine_config.mode,
            "uptime_s": time.monotonic() - state.started_at,
            "staged": len(state.staged),
            "snapshot_id": snapshot.snapshot_id if snapshot else "",
        }

    return app
