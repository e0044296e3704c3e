"""Live annotation service: a human takes the place of the simulated voter.

Each session owns a warm-started urn network. The service samples a pair of
alternatives from the session's urn, the client posts the human's choice, and
the session applies the same regression update as the batch learner. Sessions
are in-memory; the transcript is flushed to CSV when a session is deleted.
Mutation is off by default so annotators only see on-policy updates.
"""

from __future__ import annotations

import csv
import os
import threading
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import neural, online
from .environment import Environment, load_environment
from .online import ApaConfig
from .schemas import (
    AlternativeCard,
    AnswerRequest,
    AnswerResponse,
    QueryResponse,
    ServiceInfo,
    SessionClosed,
    SessionCreated,
    SessionCreateRequest,
    SessionState,
)


@dataclass
class ServiceConfig:
    environment_path: Optional[str] = None
    n_alternatives: int = 3
    embedding_dim: int = 4
    urn_scale: float = 100.0
    learning_rate: float = 0.05
    mutation_rate: float = 0.0  # off by default for human sessions
    warm_start_iters: int = 500
    hidden_sizes: Tuple[int, int] = (32, 32)
    seed: int = 0
    transcript_dir: Optional[str] = None


@dataclass
class Session:
    id: str
    params: neural.MlpParams
    cfg: ApaConfig
    embedding_mode: str
    fixed_embedding: np.ndarray
    rng: np.random.Generator
    pending: Optional[Tuple[int, int]] = None
    pending_x: Optional[np.ndarray] = None
    pending_n: Optional[np.ndarray] = None
    answer_count: int = 0
    history: List[np.ndarray] = field(default_factory=list)
    transcript: List[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def lottery_at(self, x: np.ndarray) -> np.ndarray:
        n = neural.forward(self.params, x)
        total = n.sum()
        if total <= 1e-12:
            raise online.CollapsedUrnError("collapsed urn")
        return n / total


def _alternative_cards(env: Optional[Environment], n_alternatives: int) -> List[AlternativeCard]:
    if env is not None:
        return [
            AlternativeCard(id=a.id, x=a.x, y=a.y, label=f"alternative {a.id}")
            for a in env.alternatives
        ]
    return [
        AlternativeCard(id=a, x=float(a), y=0.0, label=f"alternative {a}")
        for a in range(n_alternatives)
    ]


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    env: Optional[Environment] = None
    if config.environment_path:
        env = load_environment(config.environment_path)
    n_alternatives = env.n_alternatives if env else config.n_alternatives
    embedding_dim = env.embedding_dim if env else config.embedding_dim
    cards = _alternative_cards(env, n_alternatives)

    app = FastAPI(title="preference annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: Dict[str, Session] = {}
    session_counter = {"n": 0}
    registry_lock = threading.Lock()

    def default_embedding() -> np.ndarray:
        e = np.zeros(embedding_dim)
        e[0] = 1.0
        return e

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    def parse_embedding(raw: Optional[str], session: Session) -> np.ndarray:
        if session.embedding_mode == "fixed" or raw is None:
            return session.fixed_embedding
        values = np.array([float(v) for v in raw.split(",")])
        if values.shape != (embedding_dim,):
            raise HTTPException(status_code=422, detail="bad embedding dimension")
        return values

    @app.get("/info", response_model=ServiceInfo)
    def info() -> ServiceInfo:
        return ServiceInfo(
            n_alternatives=n_alternatives,
            embedding_dim=embedding_dim,
            alternatives=cards,
        )

    @app.post("/sessions", response_model=SessionCreated)
    def create_session(body: SessionCreateRequest) -> SessionCreated:
        with registry_lock:
            session_counter["n"] += 1
            counter = session_counter["n"]
        if body.embedding is not None:
            embedding = np.asarray(body.embedding, dtype=float)
            if embedding.shape != (embedding_dim,):
                raise HTTPException(status_code=422, detail="bad embedding dimension")
        else:
            embedding = default_embedding()
        mutation = config.mutation_rate if body.mutation_rate is None else body.mutation_rate
        cfg = ApaConfig(
            n_alternatives=n_alternatives,
            embedding_dim=embedding_dim,
            urn_scale=config.urn_scale,
            mutation_rate=mutation,
            learning_rate=config.learning_rate,
            n_steps=0,
            warm_start_iters=config.warm_start_iters,
            hidden_sizes=tuple(config.hidden_sizes),
            seed=config.seed + counter,
        )
        rng = np.random.default_rng(cfg.seed)
        params = neural.mlp_init(cfg.layer_sizes(), "relu_nonneg", rng)
        params = online.warm_start(params, cfg, lambda r: embedding, rng)
        session = Session(
            id=uuid.uuid4().hex,
            params=params,
            cfg=cfg,
            embedding_mode=body.embedding_mode,
            fixed_embedding=embedding,
            rng=rng,
        )
        sessions[session.id] = session
        lottery = session.lottery_at(embedding)
        return SessionCreated(
            session_id=session.id,
            embedding_mode=session.embedding_mode,
            n_alternatives=n_alternatives,
            lottery=[float(v) for v in lottery],
            answer_count=0,
        )

    @app.get("/sessions/{session_id}/query", response_model=QueryResponse)
    def get_query(session_id: str, embedding: Optional[str] = None) -> QueryResponse:
        session = get_session(session_id)
        with session.lock:
            if session.pending is None:
                x = parse_embedding(embedding, session)
                n = neural.forward(session.params, x)
                if n.sum() <= 1e-12:
                    raise HTTPException(status_code=500, detail="collapsed urn")
                p = n / n.sum()
                session.pending = online.sample_pair(p, session.rng)
                session.pending_x = x
                session.pending_n = n
            a1, a2 = session.pending
            lottery = session.pending_n / session.pending_n.sum()
            return QueryResponse(
                session_id=session.id,
                a1=cards[a1],
                a2=cards[a2],
                lottery=[float(v) for v in lottery],
                answer_count=session.answer_count,
            )

    @app.post("/sessions/{session_id}/answer", response_model=AnswerResponse)
    def post_answer(session_id: str, body: AnswerRequest) -> AnswerResponse:
        session = get_session(session_id)
        with session.lock:
            if session.pending is None:
                raise HTTPException(status_code=409, detail="no pending query")
            a1, a2 = session.pending
            if body.winner not in (a1, a2):
                raise HTTPException(status_code=422, detail="winner not in pending pair")
            winner = body.winner
            loser = a2 if winner == a1 else a1
            x = session.pending_x
            n = session.pending_n
            session.params = online.urn_regression_update(
                session.params, x, n, winner, loser, session.cfg.learning_rate
            )
            if session.rng.random() < session.cfg.mutation_rate:
                p = n / n.sum()
                cum = np.cumsum(p)
                mut_loser = min(
                    int(np.searchsorted(cum, session.rng.random() * cum[-1], side="right")),
                    n_alternatives - 1,
                )
                mut_winner = int(session.rng.integers(0, n_alternatives))
                session.params = online.urn_regression_update(
                    session.params, x, n, mut_winner, mut_loser, session.cfg.learning_rate
                )
            session.answer_count += 1
            session.transcript.append(
                {
                    "t": session.answer_count,
                    "a1": a1,
                    "a2": a2,
                    "winner": winner,
                    "p": (n / n.sum()).tolist(),
                }
            )
            session.pending = None
            session.pending_x = None
            session.pending_n = None
            lottery = session.lottery_at(x)
            session.history.append(lottery)
            return AnswerResponse(
                session_id=session.id,
                lottery=[float(v) for v in lottery],
                answer_count=session.answer_count,
            )

    @app.get("/sessions/{session_id}/state", response_model=SessionState)
    def get_state(session_id: str) -> SessionState:
        session = get_session(session_id)
        with session.lock:
            lottery = session.lottery_at(
                session.pending_x if session.pending_x is not None else session.fixed_embedding
            )
            return SessionState(
                session_id=session.id,
                lottery=[float(v) for v in lottery],
                answer_count=session.answer_count,
                history_length=len(session.history),
                pending=session.pending is not None,
            )

    @app.delete("/sessions/{session_id}", response_model=SessionClosed)
    def close_session(session_id: str) -> SessionClosed:
        session = get_session(session_id)
        with session.lock:
            path = None
            if config.transcript_dir and session.transcript:
                os.makedirs(config.transcript_dir, exist_ok=True)
                path = os.path.join(config.transcript_dir, f"session_{session.id}.csv")
                with open(path, "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(
                        ["t", "a1", "a2", "winner"]
                        + [f"p_{a}" for a in range(n_alternatives)]
                    )
                    for rec in session.transcript:
                        writer.writerow(
                            [rec["t"], rec["a1"], rec["a2"], rec["winner"]]
                            + ["%.17g" % v for v in rec["p"]]
                        )
            count = session.answer_count
        del sessions[session_id]
        return SessionClosed(session_id=session_id, answer_count=count, transcript_path=path)

    return app
