"""Shared fixtures: tiny spec builders and scripted agents for deterministic battles."""

from __future__ import annotations

import json

from minimon.agents import ZERO_TELEMETRY
from minimon.engine import ActionDecision
from minimon.model import MoveDef, PokemonSpec, StatBlock, Team, load_type_chart


def stats(hp=100, atk=80, def_=70, spa=75, spd=65, spe=90) -> StatBlock:
    return StatBlock(hp=hp, atk=atk, def_=def_, spa=spa, spd=spd, spe=spe)


def move(name="Jab", move_type="Normal", power=40, accuracy=100, category="Physical", pp=30, effect=None) -> MoveDef:
    return MoveDef(name=name, move_type=move_type, power=power, accuracy=accuracy,
                   category=category, pp=pp, effect=effect)


def spec(name="Testmon", ptype="Normal", st=None, moves=None) -> PokemonSpec:
    return PokemonSpec(
        name=name,
        ptype=ptype,
        stats=st or stats(),
        moves=tuple(moves or [move()]),
    )


def team(*specs: PokemonSpec) -> Team:
    return Team(members=tuple(specs))


def simple_team(prefix: str, ptype="Normal", st=None, moves=None) -> Team:
    return team(*(spec(f"{prefix}{i}", ptype=ptype, st=st, moves=moves) for i in range(1, 4)))


# A compact chart with an immunity, used where the default chart has none.
TEST_CHART = load_type_chart(json.dumps({
    "types": ["Normal", "Fire", "Water", "Grass", "Electric", "Ground"],
    "multipliers": [
        {"attacker": "Fire", "defender": "Water", "value": 0.5},
        {"attacker": "Fire", "defender": "Grass", "value": 2.0},
        {"attacker": "Water", "defender": "Fire", "value": 2.0},
        {"attacker": "Water", "defender": "Grass", "value": 0.5},
        {"attacker": "Grass", "defender": "Water", "value": 2.0},
        {"attacker": "Grass", "defender": "Fire", "value": 0.5},
        {"attacker": "Electric", "defender": "Water", "value": 2.0},
        {"attacker": "Electric", "defender": "Ground", "value": 0.0},
        {"attacker": "Ground", "defender": "Electric", "value": 2.0}
    ],
}))


class ScriptedAgent:
    """Plays back a fixed decision list; falls back to the first legal action."""

    kind = "scripted"

    def __init__(self, decisions: list[ActionDecision] | None = None):
        self.decisions = list(decisions or [])
        self._index = 0

    def decide(self, view, legal, rng):
        while self._index < len(self.decisions):
            decision = self.decisions[self._index]
            self._index += 1
            if any(d == decision for d in legal):
                return decision, ZERO_TELEMETRY
        return legal[0], ZERO_TELEMETRY


class FirstLegalAgent:
    """Always takes the first legal action (the active battler's first move)."""

    kind = "first-legal"

    def decide(self, view, legal, rng):
        return legal[0], ZERO_TELEMETRY


class PassiveAgent:
    """Switches back and forth whenever possible; attacks only when cornered.

    Deals almost no damage, so it reliably loses to anything competent.
    """

    kind = "passive"

    def decide(self, view, legal, rng):
        switches = [d for d in legal if d.action == "switch"]
        if switches:
            return switches[0], ZERO_TELEMETRY
        moves = [d for d in legal if d.action == "move"]
        return moves[0], ZERO_TELEMETRY
