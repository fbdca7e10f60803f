"""Battle orchestration: drives agents turn by turn and produces JSONL logs.

Seeds are derived with a stable hash so any battle inside a larger run can be
replayed in isolation. The engine and each agent get independent random
streams; replaying the logged decisions therefore reproduces the engine's
rolls exactly regardless of how many draws the agents consumed.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .engine import (
    ActionDecision,
    Battle,
    FALLBACK_MOVE,
    DEFAULT_MAX_TURNS,
    SIDES,
    move_multiplier,
    other_side,
)
from .model import PokemonSpec, Team, TypeChart


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary labels; never uses Python's salted hash."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def draw_team(roster: list[PokemonSpec] | tuple[PokemonSpec, ...], rng: random.Random) -> Team:
    """Pick three distinct roster members; order matters (first leads)."""
    return Team(members=tuple(rng.sample(list(roster), 3)))


@dataclass
class SideTotals:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: int = 0
    retries_used: int = 0
    fallbacks: int = 0
    decisions: int = 0

    def add(self, telemetry) -> None:
        if telemetry is None:
            return
        self.prompt_tokens += telemetry.prompt_tokens
        self.completion_tokens += telemetry.completion_tokens
        self.latency_ms += telemetry.latency_ms
        self.retries_used += telemetry.retries_used
        self.fallbacks += 1 if telemetry.fallback_applied else 0
        self.decisions += 1

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "total_tokens": self.total_tokens,
            "latency_ms": self.latency_ms,
            "retries_used": self.retries_used,
            "fallbacks": self.fallbacks,
            "decisions": self.decisions,
        }


@dataclass
class BattleResult:
    battle_id: str
    seed: int
    winner: str | None        # side id, None on a draw
    turns: int
    header: dict
    records: list
    alignment: dict[str, tuple[int, int]]  # side -> (aligned, advantaged)
    totals: dict[str, SideTotals]
    final_hp: dict[str, dict[str, int]]

    @property
    def draw(self) -> bool:
        return self.winner is None

    def alignment_fraction(self, side: str) -> float | None:
        aligned, advantaged = self.alignment[side]
        return aligned / advantaged if advantaged else None

    def log_lines(self) -> list[str]:
        dump = lambda obj: json.dumps(obj, sort_keys=True, separators=(",", ":"))
        lines = [dump(self.header)]
        lines.extend(dump(r.to_dict()) for r in self.records)
        return lines


def write_battle_log(result: BattleResult, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(result.log_lines()) + "\n", encoding="utf-8")


def _decision_alignment(battle: Battle, side: str, decision: ActionDecision) -> tuple[int, int]:
    """(aligned, advantaged) contribution of one decision, computed online."""
    if decision.action != "move":
        return (0, 0)
    attacker = battle.state.side(side).active
    defender_type = battle.state.side(other_side(side)).active.spec.ptype
    usable = attacker.usable_moves() or [FALLBACK_MOVE]
    mults = {m.name: move_multiplier(battle.chart, m, defender_type) for m in usable}
    if decision.value == FALLBACK_MOVE.name:
        mults.setdefault(FALLBACK_MOVE.name, 1.0)
    if not any(v > 1.0 for v in mults.values()):
        return (0, 0)
    return (1 if mults.get(decision.value, 1.0) > 1.0 else 0, 1)


def run_battle(
    agent_a,
    agent_b,
    team_a: Team,
    team_b: Team,
    chart: TypeChart,
    seed: int,
    max_turns: int = DEFAULT_MAX_TURNS,
    battle_id: str = "battle",
    agent_names: dict[str, str] | None = None,
    prompt_hash: str | None = None,
) -> BattleResult:
    """Run one battle to completion (win or draw at ``max_turns``)."""
    from .agents import state_view  # local import: agents depends on engine

    battle = Battle(
        team_a,
        team_b,
        chart,
        seed=seed,
        max_turns=max_turns,
        battle_id=battle_id,
        agent_names=agent_names,
        prompt_hash=prompt_hash,
    )
    agents = {"A": agent_a, "B": agent_b}
    agent_rngs = {side: random.Random(derive_seed(seed, "agent", side)) for side in SIDES}
    totals = {side: SideTotals() for side in SIDES}
    alignment = {side: [0, 0] for side in SIDES}

    while not battle.finished:
        decisions: dict[str, ActionDecision] = {}
        telemetry: dict[str, dict | None] = {}
        for side in SIDES:
            view = state_view(battle.state, side)
            legal = battle.legal_actions(side)
            decision, telem = agents[side].decide(view, legal, agent_rngs[side])
            decisions[side] = decision
            telemetry[side] = telem.to_dict() if telem and telem.any() else None
            totals[side].add(telem)
            aligned, advantaged = _decision_alignment(battle, side, decision)
            alignment[side][0] += aligned
            alignment[side][1] += advantaged
        battle.submit_turn(decisions["A"], decisions["B"], telemetry)
        for side in SIDES:
            if battle.needs_replacement(side):
                view = state_view(battle.state, side)
                legal = battle.replacement_actions(side)
                decision, telem = agents[side].decide(view, legal, agent_rngs[side])
                totals[side].add(telem)
                battle.replace(
                    side,
                    decision.value,
                    telemetry=telem.to_dict() if telem and telem.any() else None,
                )

    final_hp = {
        side: {b.spec.name: b.current_hp for b in battle.state.side(side).battlers}
        for side in SIDES
    }
    return BattleResult(
        battle_id=battle.battle_id,
        seed=seed,
        winner=battle.winner,
        turns=battle.turns_completed,
        header=battle.header(),
        records=battle.records,
        alignment={side: tuple(alignment[side]) for side in SIDES},
        totals=totals,
        final_hp=final_hp,
    )
