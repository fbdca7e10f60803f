"""Decision-makers: random baseline, type-aware heuristic, and the LLM agent.

The LLM agent renders a system prompt (rules + type chart + JSON protocol) and
a per-turn battle-state prompt, then parses the reply through a retry ladder.
After the retry budget is spent it falls back to the heuristic so a battle can
never stall on a misbehaving model.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .engine import (
    ActionDecision,
    BattleState,
    FALLBACK_MOVE,
    move_multiplier,
    other_side,
)
from .errors import GatewayError, ParseFailure
from .model import TypeChart

_TEMPLATE_NAMES = ("battle_system.txt", "battle_state.txt", "movegen_system.txt", "judge_system.txt")


@lru_cache(maxsize=None)
def load_prompt(name: str) -> str:
    return resources.files("minimon.prompts").joinpath(name).read_text(encoding="utf-8")


def prompt_templates_hash() -> str:
    """Short digest of all prompt assets, embedded in battle-log headers."""
    digest = hashlib.sha256()
    for name in _TEMPLATE_NAMES:
        digest.update(load_prompt(name).encode("utf-8"))
    return digest.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Telemetry


@dataclass(frozen=True)
class DecisionTelemetry:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: int = 0
    retries_used: int = 0
    fallback_applied: bool = False

    def any(self) -> bool:
        return bool(
            self.prompt_tokens
            or self.completion_tokens
            or self.latency_ms
            or self.retries_used
            or self.fallback_applied
        )

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "latency_ms": self.latency_ms,
            "retries_used": self.retries_used,
            "fallback_applied": self.fallback_applied,
        }


ZERO_TELEMETRY = DecisionTelemetry()


# ---------------------------------------------------------------------------
# State views (the asymmetric projection every agent and the human UI see)


@dataclass(frozen=True)
class MoveView:
    name: str
    move_type: str
    power: int
    accuracy: int
    pp_remaining: int
    pp_max: int


@dataclass(frozen=True)
class BattlerView:
    name: str
    ptype: str
    hp: int
    max_hp: int
    status: str | None
    moves: tuple[MoveView, ...] = ()


@dataclass(frozen=True)
class TeamMemberView:
    name: str
    ptype: str
    hp: int
    max_hp: int
    status: str | None
    active: bool
    moves: tuple[MoveView, ...] = ()


@dataclass(frozen=True)
class StateView:
    """What one side may know: its own team in full, only the opponent's active."""

    own: BattlerView
    opponent: BattlerView
    team: tuple[TeamMemberView, ...]
    turn_number: int

    def to_dict(self) -> dict:
        def move_dict(m: MoveView) -> dict:
            return {
                "name": m.name,
                "type": m.move_type,
                "power": m.power,
                "accuracy": m.accuracy,
                "pp_remaining": m.pp_remaining,
                "pp_max": m.pp_max,
            }

        return {
            "turn_number": self.turn_number,
            "own": {
                "name": self.own.name,
                "type": self.own.ptype,
                "hp": self.own.hp,
                "max_hp": self.own.max_hp,
                "status": self.own.status,
                "moves": [move_dict(m) for m in self.own.moves],
            },
            "opponent": {
                "name": self.opponent.name,
                "type": self.opponent.ptype,
                "hp": self.opponent.hp,
                "max_hp": self.opponent.max_hp,
                "status": self.opponent.status,
            },
            "team": [
                {
                    "name": t.name,
                    "type": t.ptype,
                    "hp": t.hp,
                    "max_hp": t.max_hp,
                    "status": t.status,
                    "active": t.active,
                }
                for t in self.team
            ],
        }


def _move_views(battler) -> tuple[MoveView, ...]:
    return tuple(
        MoveView(
            name=m.name,
            move_type=m.move_type,
            power=m.power,
            accuracy=m.accuracy,
            pp_remaining=left,
            pp_max=m.pp,
        )
        for m, left in zip(battler.spec.moves, battler.pp)
    )


def state_view(state: BattleState, side: str) -> StateView:
    """Project the battle state for one side; never leaks the opponent's bench or moves."""
    own_side = state.side(side)
    opp_active = state.side(other_side(side)).active
    own_active = own_side.active
    return StateView(
        own=BattlerView(
            name=own_active.spec.name,
            ptype=own_active.spec.ptype,
            hp=own_active.current_hp,
            max_hp=own_active.max_hp,
            status=own_active.status,
            moves=_move_views(own_active),
        ),
        opponent=BattlerView(
            name=opp_active.spec.name,
            ptype=opp_active.spec.ptype,
            hp=opp_active.current_hp,
            max_hp=opp_active.max_hp,
            status=opp_active.status,
        ),
        team=tuple(
            TeamMemberView(
                name=b.spec.name,
                ptype=b.spec.ptype,
                hp=b.current_hp,
                max_hp=b.max_hp,
                status=b.status,
                active=i == own_side.active_index,
                moves=_move_views(b),
            )
            for i, b in enumerate(own_side.battlers)
        ),
        turn_number=state.turn_number,
    )


# ---------------------------------------------------------------------------
# Prompt construction


def render_type_chart_text(chart: TypeChart) -> str:
    """One line per non-neutral matchup, sorted for stable output."""
    lines = [
        f"- {attacker} vs {defender}: {value:.1f}x"
        for (attacker, defender), value in sorted(chart.entries.items())
    ]
    return "\n".join(lines)


def build_system_prompt(chart: TypeChart) -> str:
    return load_prompt("battle_system.txt").format(TYPE_CHART_TEXT=render_type_chart_text(chart))


def serialize_state_view(view: StateView) -> str:
    """Fill the battle-state template; byte-identical output for equal views."""
    team_lines = []
    for member in view.team:
        marker = " [active]" if member.active else (" [fainted]" if member.hp == 0 else "")
        team_lines.append(
            f"- {member.name} ({member.ptype}): HP {member.hp}/{member.max_hp}, "
            f"Status: {member.status or 'None'}{marker}"
        )
    move_lines = [
        f"- {m.name} (Type: {m.move_type}, Power: {m.power}, Accuracy: {m.accuracy}%, "
        f"PP: {m.pp_remaining}/{m.pp_max})"
        for m in view.own.moves
    ]
    if not any(m.pp_remaining > 0 for m in view.own.moves):
        move_lines.append(
            f"- {FALLBACK_MOVE.name} (Type: {FALLBACK_MOVE.move_type}, "
            f"Power: {FALLBACK_MOVE.power}, Accuracy: {FALLBACK_MOVE.accuracy}%, PP: unlimited)"
        )
    return load_prompt("battle_state.txt").format(
        own_name=view.own.name,
        own_type=view.own.ptype,
        own_hp=view.own.hp,
        own_max_hp=view.own.max_hp,
        own_status=view.own.status or "None",
        opp_name=view.opponent.name,
        opp_type=view.opponent.ptype,
        opp_hp=view.opponent.hp,
        opp_max_hp=view.opponent.max_hp,
        opp_status=view.opponent.status or "None",
        team_text="\n".join(team_lines),
        moves_text="\n".join(move_lines),
    )


# ---------------------------------------------------------------------------
# Reply parsing

_FENCE_RE = re.compile(r"```[a-zA-Z]*\s*\n?(.*?)```", re.DOTALL)


def _try_loads(text: str):
    try:
        return json.loads(text)
    except (ValueError, RecursionError):
        return None


def _balanced_spans(text: str, open_char: str, close_char: str):
    """Yield balanced bracket spans, respecting JSON string quoting."""
    start = text.find(open_char)
    while start != -1:
        depth = 0
        in_string = False
        escape = False
        for i in range(start, len(text)):
            c = text[i]
            if in_string:
                if escape:
                    escape = False
                elif c == "\\":
                    escape = True
                elif c == '"':
                    in_string = False
            elif c == '"':
                in_string = True
            elif c == open_char:
                depth += 1
            elif c == close_char:
                depth -= 1
                if depth == 0:
                    yield text[start : i + 1]
                    break
        start = text.find(open_char, start + 1)


def extract_json_object(raw: str) -> dict | None:
    """Direct parse, fenced block, or first balanced object embedded in prose."""
    candidates = [raw.strip()]
    candidates.extend(m.strip() for m in _FENCE_RE.findall(raw))
    for candidate in candidates:
        value = _try_loads(candidate)
        if isinstance(value, dict):
            return value
    for span in _balanced_spans(raw, "{", "}"):
        value = _try_loads(span)
        if isinstance(value, dict):
            return value
    return None


def parse_action_json(raw: str, legal: list[ActionDecision]) -> ActionDecision:
    """Turn a model reply into one of the legal decisions or raise ``ParseFailure``."""
    if not isinstance(raw, str) or not raw.strip():
        raise ParseFailure("empty response")
    obj = extract_json_object(raw)
    if obj is None:
        raise ParseFailure("malformed response: no JSON object found")
    lowered = {str(k).lower(): v for k, v in obj.items()}
    missing = [k for k in ("action", "value") if k not in lowered]
    if missing:
        raise ParseFailure(f"missing keys: {', '.join(missing)}")
    action = str(lowered["action"]).strip().lower()
    if action not in ("move", "switch"):
        raise ParseFailure(f"unknown action {lowered['action']!r}")
    value = str(lowered["value"]).strip()
    for decision in legal:
        if decision.action == action and decision.value.casefold() == value.casefold():
            return decision
    raise ParseFailure(
        f"illegal value: {action} {value!r} is not one of "
        f"{[f'{d.action}:{d.value}' for d in legal]}"
    )


# ---------------------------------------------------------------------------
# Agents


class RandomAgent:
    """Uniform pick among the active battler's usable moves; switches only when forced."""

    kind = "random"

    def decide(self, view: StateView, legal: list[ActionDecision], rng: random.Random):
        moves = [d for d in legal if d.action == "move"]
        pool = moves if moves else legal
        return rng.choice(pool), ZERO_TELEMETRY


class HeuristicAgent:
    """Greedy expected damage with the published switching rules.

    Picks the move maximizing power * accuracy * type multiplier. Switches to
    the best-matchup teammate when every own move is resisted and a teammate
    has a super-effective option, or when the active battler is under a
    quarter of its HP and any teammate still stands. Ties keep list order.
    """

    kind = "heuristic"

    def __init__(self, chart: TypeChart):
        self.chart = chart

    def _multiplier(self, move_type: str, defender_type: str) -> float:
        if move_type not in self.chart.types:
            return 1.0
        from .model import effectiveness

        return effectiveness(self.chart, move_type, defender_type)

    def _best_switch(self, view: StateView, switches: list[ActionDecision]) -> ActionDecision:
        def best_mult(decision: ActionDecision) -> float:
            member = next(t for t in view.team if t.name == decision.value)
            mults = [
                self._multiplier(m.move_type, view.opponent.ptype)
                for m in member.moves
                if m.pp_remaining > 0
            ]
            return max(mults, default=0.0)

        best = switches[0]
        best_value = best_mult(best)
        for candidate in switches[1:]:
            value = best_mult(candidate)
            if value > best_value:
                best, best_value = candidate, value
        return best

    def decide(self, view: StateView, legal: list[ActionDecision], rng: random.Random):
        moves = [d for d in legal if d.action == "move"]
        switches = [d for d in legal if d.action == "switch"]
        if not moves:
            return self._best_switch(view, switches), ZERO_TELEMETRY

        move_views = {m.name: m for m in view.own.moves}
        scored: list[tuple[float, float, ActionDecision]] = []
        for decision in moves:
            mv = move_views.get(decision.value)
            if mv is None and decision.value == FALLBACK_MOVE.name:
                mv = MoveView(
                    name=FALLBACK_MOVE.name,
                    move_type=FALLBACK_MOVE.move_type,
                    power=FALLBACK_MOVE.power,
                    accuracy=FALLBACK_MOVE.accuracy,
                    pp_remaining=1,
                    pp_max=1,
                )
            mult = self._multiplier(mv.move_type, view.opponent.ptype)
            scored.append((mv.power * (mv.accuracy / 100.0) * mult, mult, decision))

        if switches:
            all_resisted = all(mult < 1.0 for _, mult, _ in scored)
            def teammate_has_edge(decision: ActionDecision) -> bool:
                member = next(t for t in view.team if t.name == decision.value)
                return any(
                    self._multiplier(m.move_type, view.opponent.ptype) > 1.0
                    for m in member.moves
                    if m.pp_remaining > 0
                )

            low_hp = view.own.hp * 4 < view.own.max_hp
            if (all_resisted and any(teammate_has_edge(s) for s in switches)) or low_hp:
                return self._best_switch(view, switches), ZERO_TELEMETRY

        best_score = max(score for score, _, _ in scored)
        for score, _, decision in scored:
            if score == best_score:  # ties keep move-list order
                return decision, ZERO_TELEMETRY


class LlmAgent:
    """Prompts a chat model for each decision and parses its strict-JSON reply."""

    kind = "llm"

    def __init__(
        self,
        gateway,
        model: str,
        chart: TypeChart,
        thinking: bool = False,
        max_retries: int = 3,
        max_output_tokens: int = 1024,
    ):
        self.gateway = gateway
        self.model = model
        self.chart = chart
        self.thinking = thinking
        self.max_retries = max_retries
        self.max_output_tokens = max_output_tokens
        self._system_prompt = build_system_prompt(chart)
        self._heuristic = HeuristicAgent(chart)

    def decide(self, view: StateView, legal: list[ActionDecision], rng: random.Random):
        from .gateway import CompletionRequest

        base_prompt = serialize_state_view(view)
        prompt = base_prompt
        prompt_tokens = completion_tokens = latency_ms = 0
        failures = 0
        while failures <= self.max_retries:
            try:
                result = self.gateway.complete(
                    CompletionRequest(
                        model=self.model,
                        system_prompt=self._system_prompt,
                        user_prompt=prompt,
                        thinking=self.thinking,
                        max_output_tokens=self.max_output_tokens,
                    )
                )
            except GatewayError as exc:
                failures += 1
                prompt = base_prompt
                reason = f"provider error: {exc}"
            else:
                prompt_tokens += result.prompt_tokens
                completion_tokens += result.completion_tokens
                latency_ms += result.latency_ms
                try:
                    decision = parse_action_json(result.text, legal)
                except ParseFailure as exc:
                    failures += 1
                    reason = exc.reason
                else:
                    return decision, DecisionTelemetry(
                        prompt_tokens=prompt_tokens,
                        completion_tokens=completion_tokens,
                        latency_ms=latency_ms,
                        retries_used=failures,
                    )
            if failures <= self.max_retries:
                prompt = (
                    base_prompt
                    + f"\n\nYour previous response was invalid: {reason}. "
                    + "Answer only with the JSON object as specified in the system prompt."
                )
        decision, _ = self._heuristic.decide(view, legal, rng)
        return decision, DecisionTelemetry(
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_ms=latency_ms,
            retries_used=self.max_retries,
            fallback_applied=True,
        )


# ---------------------------------------------------------------------------
# Agent spec mini-grammar: random | heuristic | llm:<model>[,thinking=on|off]


def parse_agent_spec(spec: str) -> dict:
    spec = spec.strip()
    if spec in ("random", "heuristic"):
        return {"kind": spec}
    if spec.startswith("llm:"):
        rest = spec[len("llm:"):]
        parts = [p.strip() for p in rest.split(",") if p.strip()]
        if not parts or not parts[0]:
            raise ValueError(f"agent spec {spec!r} is missing a model name")
        out = {"kind": "llm", "model": parts[0], "thinking": False}
        for part in parts[1:]:
            if part == "thinking=on":
                out["thinking"] = True
            elif part == "thinking=off":
                out["thinking"] = False
            else:
                raise ValueError(f"unknown agent option {part!r} in {spec!r}")
        return out
    raise ValueError(f"unknown agent spec {spec!r} (expected random, heuristic, or llm:<model>)")


def build_agent(spec: str, chart: TypeChart, gateway=None):
    parsed = parse_agent_spec(spec)
    if parsed["kind"] == "random":
        return RandomAgent()
    if parsed["kind"] == "heuristic":
        return HeuristicAgent(chart)
    if gateway is None:
        raise ValueError(f"agent spec {spec!r} needs a provider gateway")
    return LlmAgent(gateway, parsed["model"], chart, thinking=parsed["thinking"])
