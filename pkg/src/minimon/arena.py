"""HTTP arena: one human plays battles against any configured agent.

Sessions are persisted as replayable snapshots (seed + decision history), so a
service restart loses nothing and a finished session can be reproduced from
its file alone. The human only ever sees the same asymmetric projection an
agent gets; the opponent's bench and move list stay hidden until the battle
ends.
"""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .agents import build_agent, prompt_templates_hash, state_view
from .engine import ActionDecision, Battle
from .errors import BattleFinishedError, IllegalActionError, MinimonError
from .gateway import Gateway, load_gateway
from .model import (
    PokemonSpec,
    TypeChart,
    default_chart,
    default_roster,
    load_roster_file,
    load_type_chart_file,
)
from .runner import derive_seed, draw_team

HUMAN = "A"
OPPONENT = "B"

PHASE_AWAITING_HUMAN = "awaiting_human"
PHASE_AWAITING_REPLACEMENT = "awaiting_replacement"
PHASE_RESOLVING = "resolving"
PHASE_FINISHED = "finished"


class ArenaError(MinimonError):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


@dataclass
class ArenaConfig:
    session_dir: Path
    roster: list[PokemonSpec] = field(default_factory=lambda: list(default_roster()))
    chart: TypeChart = field(default_factory=default_chart)
    gateway: Gateway | None = None
    session_ttl_hours: float = 24.0
    max_turns: int = 100
    clock: object = time.time
    web_dir: Path | None = None  # static browser client, mounted at /

    @classmethod
    def from_paths(
        cls,
        session_dir: str | Path,
        roster_path: str | None = None,
        chart_path: str | None = None,
        gateway_config: str | None = None,
        web_dir: str | None = None,
        **kwargs,
    ) -> "ArenaConfig":
        return cls(
            session_dir=Path(session_dir),
            roster=list(load_roster_file(roster_path)) if roster_path else list(default_roster()),
            chart=load_type_chart_file(chart_path) if chart_path else default_chart(),
            gateway=load_gateway(gateway_config) if gateway_config else None,
            web_dir=Path(web_dir) if web_dir else None,
            **kwargs,
        )


def _opponent_spec(opponent: str, thinking: bool) -> str:
    opponent = opponent.strip()
    if opponent in ("random", "heuristic"):
        return opponent
    if opponent.startswith("llm:"):
        if "thinking=" in opponent:  # an explicit setting wins over the flag
            return opponent
        return f"{opponent},thinking={'on' if thinking else 'off'}"
    return f"llm:{opponent},thinking={'on' if thinking else 'off'}"


class Session:
    def __init__(self, config: ArenaConfig, session_id: str, opponent: str, thinking: bool, seed: int):
        self.config = config
        self.session_id = session_id
        self.opponent = opponent
        self.thinking = thinking
        self.seed = seed
        self.rating: int | None = None
        self.created_at = config.clock()
        self.updated_at = self.created_at
        self.history: list[dict] = []
        self.lock = threading.RLock()
        try:
            self.agent = build_agent(_opponent_spec(opponent, thinking), config.chart, config.gateway)
        except ValueError as exc:
            raise ArenaError(422, "unknown-agent", str(exc)) from exc
        team_rng = random.Random(derive_seed(seed, "teams"))
        team_human = draw_team(config.roster, team_rng)
        team_opponent = draw_team(config.roster, team_rng)
        self.battle = Battle(
            team_human,
            team_opponent,
            config.chart,
            seed=derive_seed(seed, "battle"),
            max_turns=config.max_turns,
            battle_id=session_id,
            agent_names={HUMAN: "human", OPPONENT: opponent},
            prompt_hash=prompt_templates_hash(),
        )
        self.agent_rng = random.Random(derive_seed(seed, "agent", 0))

    # -- phase & views --------------------------------------------------------

    @property
    def phase(self) -> str:
        if self.battle.finished:
            return PHASE_FINISHED
        if self.battle.needs_replacement(HUMAN):
            return PHASE_AWAITING_REPLACEMENT
        return PHASE_AWAITING_HUMAN

    def legal_payload(self) -> list[dict]:
        if self.battle.finished:
            return []
        if self.battle.needs_replacement(HUMAN):
            return [d.to_dict() for d in self.battle.replacement_actions(HUMAN)]
        return [d.to_dict() for d in self.battle.legal_actions(HUMAN)]

    def view_payload(self) -> dict:
        return state_view(self.battle.state, HUMAN).to_dict()

    def redacted_record(self, record) -> dict:
        payload = record.to_dict()
        if not self.battle.finished:
            payload["sides"][OPPONENT].pop("available_moves", None)
        return payload

    def result_payload(self) -> dict | None:
        if not self.battle.finished:
            return None
        winner = self.battle.winner
        return {
            "winner": "human" if winner == HUMAN else ("opponent" if winner == OPPONENT else None),
            "draw": winner is None,
            "turns": self.battle.turns_completed,
        }

    # -- mutations -------------------------------------------------------------

    def _opponent_replacement(self) -> None:
        if not self.battle.needs_replacement(OPPONENT):
            return
        legal = self.battle.replacement_actions(OPPONENT)
        view = state_view(self.battle.state, OPPONENT)
        decision, telem = self.agent.decide(view, legal, self.agent_rng)
        telem_dict = telem.to_dict() if telem and telem.any() else None
        self.battle.replace(OPPONENT, decision.value, telemetry=telem_dict)
        self.history.append(
            {"type": "replace", "side": OPPONENT, "to": decision.value, "telemetry": telem_dict}
        )

    def submit(self, decision: ActionDecision):
        if self.battle.finished:
            raise ArenaError(409, "battle-finished", "the battle is over")
        if self.battle.needs_replacement(HUMAN):
            if decision.action != "switch":
                raise ArenaError(422, "illegal-action", "a replacement switch is required")
            try:
                self.battle.replace(HUMAN, decision.value)
            except IllegalActionError as exc:
                raise ArenaError(422, "illegal-action", exc.reason) from exc
            self.history.append({"type": "replace", "side": HUMAN, "to": decision.value, "telemetry": None})
            self.updated_at = self.config.clock()
            return None

        legal = self.battle.legal_actions(HUMAN)
        if decision not in legal:
            reason = f"{decision.action} {decision.value!r} is not legal now"
            raise ArenaError(422, "illegal-action", reason)

        # The opponent decides from its own view, blind to the human's choice.
        opp_view = state_view(self.battle.state, OPPONENT)
        opp_legal = self.battle.legal_actions(OPPONENT)
        opp_decision, opp_telem = self.agent.decide(opp_view, opp_legal, self.agent_rng)
        telem_dict = opp_telem.to_dict() if opp_telem and opp_telem.any() else None
        try:
            record = self.battle.submit_turn(
                decision, opp_decision, telemetry={OPPONENT: telem_dict}
            )
        except (IllegalActionError, BattleFinishedError) as exc:
            raise ArenaError(422, "illegal-action", str(exc)) from exc
        self.history.append(
            {
                "type": "turn",
                "human": decision.to_dict(),
                "opponent": opp_decision.to_dict(),
                "opponent_telemetry": telem_dict,
            }
        )
        self._opponent_replacement()
        self.updated_at = self.config.clock()
        return record

    # -- persistence -----------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "session_id": self.session_id,
            "opponent": self.opponent,
            "thinking": self.thinking,
            "seed": self.seed,
            "rating": self.rating,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "history": self.history,
        }

    @classmethod
    def restore(cls, config: ArenaConfig, snapshot: dict) -> "Session":
        session = cls(
            config,
            session_id=snapshot["session_id"],
            opponent=snapshot["opponent"],
            thinking=snapshot.get("thinking", False),
            seed=snapshot["seed"],
        )
        session.created_at = snapshot.get("created_at", session.created_at)
        session.updated_at = snapshot.get("updated_at", session.updated_at)
        session.rating = snapshot.get("rating")
        for event in snapshot.get("history", []):
            session._apply_event(event)
        session.history = list(snapshot.get("history", []))
        # the stored decisions were already played; future agent draws continue
        # from a stream derived from how far the battle has come
        session.agent_rng = random.Random(derive_seed(session.seed, "agent", len(session.history)))
        return session

    def _apply_event(self, event: dict) -> None:
        if event["type"] == "turn":
            self.battle.submit_turn(
                ActionDecision(**event["human"]),
                ActionDecision(**event["opponent"]),
                telemetry={OPPONENT: event.get("opponent_telemetry")},
            )
        elif event["type"] == "replace":
            self.battle.replace(event["side"], event["to"], telemetry=event.get("telemetry"))
        else:
            raise ArenaError(500, "corrupt-session", f"unknown event {event['type']!r}")


class SessionStore:
    def __init__(self, config: ArenaConfig):
        self.config = config
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        config.session_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.config.session_dir / f"{session_id}.json"

    def _expired(self, updated_at: float) -> bool:
        ttl_s = self.config.session_ttl_hours * 3600.0
        return self.config.clock() - updated_at > ttl_s

    def create(self, opponent: str, thinking: bool, seed: int | None) -> Session:
        session_id = uuid.uuid4().hex[:12]
        if seed is None:
            seed = random.getrandbits(48)
        session = Session(self.config, session_id, opponent, thinking, seed)
        with self._lock:
            self.sessions[session_id] = session
        self.save(session)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self.sessions.get(session_id)
        if session is None:
            path = self._path(session_id)
            if not path.exists():
                raise ArenaError(404, "unknown-session", f"no session {session_id!r}")
            snapshot = json.loads(path.read_text(encoding="utf-8"))
            session = Session.restore(self.config, snapshot)
            with self._lock:
                session = self.sessions.setdefault(session_id, session)
        if self._expired(session.updated_at):
            self.drop(session_id)
            raise ArenaError(404, "unknown-session", f"session {session_id!r} expired")
        return session

    def save(self, session: Session) -> None:
        self._path(session.session_id).write_text(
            json.dumps(session.snapshot(), sort_keys=True, indent=2), encoding="utf-8"
        )

    def drop(self, session_id: str) -> None:
        with self._lock:
            self.sessions.pop(session_id, None)
        path = self._path(session_id)
        if path.exists():
            path.unlink()


class CreateSessionBody(BaseModel):
    opponent: str
    thinking: bool = False
    seed: int | None = None


class ActionBody(BaseModel):
    action: str
    value: str


class FeedbackBody(BaseModel):
    rating: int


def create_app(config: ArenaConfig) -> FastAPI:
    app = FastAPI(title="battle arena", version="0.1.0")
    # the browser client may be served from any static host
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(config)
    app.state.store = store

    @app.exception_handler(ArenaError)
    async def arena_error_handler(request: Request, exc: ArenaError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": str(exc)})

    @app.get("/api/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = store.create(body.opponent, body.thinking, body.seed)
        with session.lock:
            return {
                "session_id": session.session_id,
                "view": session.view_payload(),
                "legal": session.legal_payload(),
                "phase": session.phase,
            }

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return {
                "view": session.view_payload(),
                "legal": session.legal_payload(),
                "phase": session.phase,
                "result": session.result_payload(),
            }

    @app.post("/api/sessions/{session_id}/actions")
    def submit_action(session_id: str, body: ActionBody):
        session = store.get(session_id)
        with session.lock:
            record = session.submit(ActionDecision(action=body.action, value=body.value))
            store.save(session)
            return {
                "view": session.view_payload(),
                "turn": session.redacted_record(record) if record is not None else None,
                "legal": session.legal_payload(),
                "phase": session.phase,
                "result": session.result_payload(),
            }

    @app.get("/api/sessions/{session_id}/log")
    def get_log(session_id: str):
        session = store.get(session_id)
        with session.lock:
            finished = session.battle.finished
            payload = {
                "turns": [session.redacted_record(r) for r in session.battle.records],
                "finished": finished,
            }
            if finished:
                payload["teams"] = session.battle.header()["teams"]
                payload["result"] = session.result_payload()
            return payload

    @app.post("/api/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: FeedbackBody):
        session = store.get(session_id)
        if not 1 <= body.rating <= 5:
            raise ArenaError(422, "invalid-rating", "rating must be between 1 and 5")
        with session.lock:
            session.rating = body.rating
            store.save(session)
            return {"stored": True, "rating": body.rating}

    if config.web_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.web_dir, html=True), name="web")

    return app
