"""Deterministic turn resolution: damage, accuracy, criticals, status, switching, fainting.

A battle is driven by one seeded ``random.Random``; with teams, seed, and the
decision sequence fixed, the final state and every turn record are identical
bit for bit. The random stream is consumed in a fixed documented order per
turn: switch tiebreak, move-order tiebreak, then per executed move accuracy,
paralysis, crit, variance, and effect chance.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .errors import BattleFinishedError, IllegalActionError, RosterError
from .model import MoveDef, PokemonSpec, Team, TypeChart, effectiveness, pokemon_to_dict

SIDES = ("A", "B")
LEVEL = 50
CRIT_CHANCE = 1 / 16
CRIT_MULTIPLIER = 1.5
PARALYSIS_IMMOBILIZE_CHANCE = 0.25
PARALYSIS_SPEED_DIVISOR = 2
POISON_HP_DIVISOR = 8
VARIANCE_LOW = 0.85
VARIANCE_HIGH = 1.0
DEFAULT_MAX_TURNS = 100

# Last-resort move once every regular move is out of uses; it never runs out
# and it is typeless, so the chart is never consulted for it.
FALLBACK_MOVE = MoveDef(
    name="Exhausted Strike",
    move_type="Typeless",
    power=40,
    accuracy=100,
    category="Physical",
    pp=1,
    effect=None,
)


def other_side(side: str) -> str:
    return "B" if side == "A" else "A"


@dataclass(frozen=True)
class ActionDecision:
    """What an agent wants to do this turn: use a move or switch battlers."""

    action: str  # "move" | "switch"
    value: str   # move name or teammate name

    def to_dict(self) -> dict:
        return {"action": self.action, "value": self.value}


def decision_to_json(decision: ActionDecision) -> str:
    return json.dumps(decision.to_dict())


@dataclass
class BattlerState:
    spec: PokemonSpec
    current_hp: int
    status: str | None = None
    pp: list[int] = field(default_factory=list)

    @classmethod
    def fresh(cls, spec: PokemonSpec) -> "BattlerState":
        return cls(spec=spec, current_hp=spec.stats.hp, pp=[m.pp for m in spec.moves])

    @property
    def fainted(self) -> bool:
        return self.current_hp == 0

    @property
    def max_hp(self) -> int:
        return self.spec.stats.hp

    def effective_speed(self) -> int:
        spe = self.spec.stats.spe
        if self.status == "paralyze":
            spe //= PARALYSIS_SPEED_DIVISOR
        return spe

    def usable_moves(self) -> list[MoveDef]:
        return [m for m, left in zip(self.spec.moves, self.pp) if left > 0]

    def pp_of(self, move_name: str) -> int | None:
        for move, left in zip(self.spec.moves, self.pp):
            if move.name == move_name:
                return left
        return None


@dataclass
class SideState:
    battlers: list[BattlerState]
    active_index: int = 0

    @property
    def active(self) -> BattlerState:
        return self.battlers[self.active_index]

    @property
    def living(self) -> list[BattlerState]:
        return [b for b in self.battlers if not b.fainted]

    def bench(self) -> list[BattlerState]:
        return [b for i, b in enumerate(self.battlers) if i != self.active_index and not b.fainted]

    def wiped(self) -> bool:
        return not self.living

    def index_of(self, name: str) -> int | None:
        for i, b in enumerate(self.battlers):
            if b.spec.name == name:
                return i
        return None


@dataclass
class BattleState:
    sides: dict[str, SideState]
    chart: TypeChart
    turn_number: int = 1
    rng_seed: int = 0
    finished: str | None = None  # winning side once one team is wiped

    def side(self, side: str) -> SideState:
        return self.sides[side]


@dataclass
class SideTurn:
    """One side's half of a turn record."""

    active: str
    action: ActionDecision
    available_moves: tuple[str, ...]
    executed: bool = False
    accuracy_roll: int | None = None
    hit: bool = False
    crit: bool = False
    damage: int = 0
    immobilized: bool = False
    pp_spent: bool = False
    status_applied: str | None = None
    poison_damage: int = 0
    active_after: str = ""
    hp_after: int = 0
    telemetry: dict | None = None

    def to_dict(self) -> dict:
        return {
            "active": self.active,
            "action": self.action.to_dict(),
            "available_moves": list(self.available_moves),
            "executed": self.executed,
            "accuracy_roll": self.accuracy_roll,
            "hit": self.hit,
            "crit": self.crit,
            "damage": self.damage,
            "immobilized": self.immobilized,
            "pp_spent": self.pp_spent,
            "status_applied": self.status_applied,
            "poison_damage": self.poison_damage,
            "active_after": self.active_after,
            "hp_after": self.hp_after,
            "telemetry": self.telemetry,
        }


@dataclass
class TurnRecord:
    turn_number: int
    sides: dict[str, SideTurn]
    replacements: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "turn": self.turn_number,
            "sides": {s: st.to_dict() for s, st in sorted(self.sides.items())},
            "replacements": self.replacements,
        }


def move_multiplier(chart: TypeChart, move: MoveDef, defender_type: str) -> float:
    """Type multiplier for a move; the typeless fallback is always neutral."""
    if move.name == FALLBACK_MOVE.name or move.move_type not in chart.types:
        return 1.0
    return effectiveness(chart, move.move_type, defender_type)


def compute_damage(
    attacker: BattlerState,
    defender: BattlerState,
    move: MoveDef,
    chart: TypeChart,
    is_crit: bool,
    variance_roll: float,
) -> int:
    """Level-scaled damage; always >= 1 on a hit unless the defender is immune."""
    stats_a, stats_d = attacker.spec.stats, defender.spec.stats
    if move.category == "Physical":
        a, d = stats_a.atk, stats_d.def_
    else:
        a, d = stats_a.spa, stats_d.spd
    type_mult = move_multiplier(chart, move, defender.spec.ptype)
    if type_mult == 0.0:
        return 0
    base = math.floor(2 * LEVEL / 5 + 2) * move.power * a / d / 50 + 2
    crit_mult = CRIT_MULTIPLIER if is_crit else 1.0
    damage = math.floor(base * type_mult * crit_mult * variance_roll)
    return max(damage, 1)


def legal_actions(state: BattleState, side: str) -> list[ActionDecision]:
    """All moves with uses left plus switches to living teammates; never empty."""
    if state.finished is not None:
        raise BattleFinishedError("battle is finished")
    side_state = state.side(side)
    active = side_state.active
    actions: list[ActionDecision] = []
    usable = active.usable_moves()
    if usable:
        actions.extend(ActionDecision("move", m.name) for m in usable)
    else:
        actions.append(ActionDecision("move", FALLBACK_MOVE.name))
    actions.extend(ActionDecision("switch", b.spec.name) for b in side_state.bench())
    return actions


def replacement_actions(state: BattleState, side: str) -> list[ActionDecision]:
    """Switch-only choices offered after the active battler faints."""
    return [ActionDecision("switch", b.spec.name) for b in state.side(side).bench()]


def _check_legal(state: BattleState, side: str, decision: ActionDecision) -> None:
    side_state = state.side(side)
    active = side_state.active
    if decision.action == "move":
        if decision.value == FALLBACK_MOVE.name:
            if active.usable_moves():
                raise IllegalActionError(side, "fallback move is only legal with no uses left")
            return
        left = active.pp_of(decision.value)
        if left is None:
            raise IllegalActionError(side, f"{active.spec.name} does not know {decision.value!r}")
        if left <= 0:
            raise IllegalActionError(side, f"{decision.value!r} has no uses left")
    elif decision.action == "switch":
        idx = side_state.index_of(decision.value)
        if idx is None:
            raise IllegalActionError(side, f"no teammate named {decision.value!r}")
        if idx == side_state.active_index:
            raise IllegalActionError(side, f"{decision.value!r} is already active")
        if side_state.battlers[idx].fainted:
            raise IllegalActionError(side, f"{decision.value!r} has fainted")
    else:
        raise IllegalActionError(side, f"unknown action {decision.action!r}")


def _speed_order(state: BattleState, sides: list[str], rng: random.Random) -> list[str]:
    """Descending effective speed; an exact tie is settled by one coin flip."""
    if len(sides) < 2:
        return sides
    a, b = sides
    spe_a = state.side(a).active.effective_speed()
    spe_b = state.side(b).active.effective_speed()
    if spe_a > spe_b:
        return [a, b]
    if spe_b > spe_a:
        return [b, a]
    return [a, b] if rng.random() < 0.5 else [b, a]


def _find_move(active: BattlerState, name: str) -> MoveDef:
    if name == FALLBACK_MOVE.name:
        return FALLBACK_MOVE
    move = active.spec.move_named(name)
    if move is None:  # guarded by _check_legal
        raise IllegalActionError("?", f"unknown move {name!r}")
    return move


def _maybe_finish(state: BattleState) -> None:
    for side in SIDES:
        if state.side(side).wiped():
            state.finished = other_side(side)
            return


def resolve_turn(
    state: BattleState,
    decision_a: ActionDecision,
    decision_b: ActionDecision,
    rng: random.Random,
    telemetry: dict[str, dict | None] | None = None,
) -> tuple[BattleState, TurnRecord]:
    """Resolve one simultaneous turn in place and append nothing: the caller owns the log.

    Switches resolve before any move; moves run in descending effective speed
    of the post-switch actives. A battler that faints before acting forfeits
    its action. Poison ticks at end of turn, faster side first.
    """
    if state.finished is not None:
        raise BattleFinishedError("battle is finished")
    decisions = {"A": decision_a, "B": decision_b}
    telemetry = telemetry or {}
    for side in SIDES:
        _check_legal(state, side, decisions[side])

    record = TurnRecord(turn_number=state.turn_number, sides={})
    for side in SIDES:
        active = state.side(side).active
        usable = active.usable_moves()
        available = tuple(m.name for m in usable) if usable else (FALLBACK_MOVE.name,)
        record.sides[side] = SideTurn(
            active=active.spec.name,
            action=decisions[side],
            available_moves=available,
            telemetry=telemetry.get(side),
        )

    # Voluntary switches happen first, in speed order of the outgoing actives.
    switchers = [s for s in SIDES if decisions[s].action == "switch"]
    for side in _speed_order(state, switchers, rng):
        side_state = state.side(side)
        side_state.active_index = side_state.index_of(decisions[side].value)

    movers = [s for s in SIDES if decisions[s].action == "move"]
    for side in _speed_order(state, movers, rng):
        entry = record.sides[side]
        attacker = state.side(side).active
        defender = state.side(other_side(side)).active
        if attacker.fainted:
            continue  # fainted before acting; the action is forfeit
        move = _find_move(attacker, decisions[side].value)

        entry.accuracy_roll = rng.randint(1, 100)
        entry.hit = entry.accuracy_roll <= move.accuracy
        if attacker.status == "paralyze":
            entry.immobilized = rng.random() < PARALYSIS_IMMOBILIZE_CHANCE
        if entry.immobilized:
            entry.hit = False
            continue  # no use consumed: the move was never carried out
        entry.executed = True
        if move.name != FALLBACK_MOVE.name:
            for i, m in enumerate(attacker.spec.moves):
                if m.name == move.name:
                    attacker.pp[i] -= 1
                    entry.pp_spent = True
                    break
        if not entry.hit:
            continue
        entry.crit = rng.random() < CRIT_CHANCE
        variance = rng.uniform(VARIANCE_LOW, VARIANCE_HIGH)
        damage = compute_damage(attacker, defender, move, state.chart, entry.crit, variance)
        # recorded damage is HP actually removed, so logs reconcile exactly
        entry.damage = min(damage, defender.current_hp)
        defender.current_hp -= entry.damage
        if move.effect is not None and not defender.fainted and defender.status is None:
            effect_name, chance = move.effect
            if rng.randint(1, 100) <= chance:
                defender.status = effect_name
                entry.status_applied = effect_name

    # End-of-turn poison, faster active first so a double knockout cannot
    # happen: the battle ends the moment one side runs out of battlers.
    if not any(state.side(s).wiped() for s in SIDES):
        order = sorted(
            SIDES, key=lambda s: (-state.side(s).active.effective_speed(), s)
        )
        for side in order:
            active = state.side(side).active
            if active.fainted or active.status != "poison":
                continue
            tick = min(active.max_hp // POISON_HP_DIVISOR, active.current_hp)
            active.current_hp -= tick
            record.sides[side].poison_damage = tick
            if state.side(side).wiped():
                break

    for side in SIDES:
        active = state.side(side).active
        record.sides[side].active_after = active.spec.name
        record.sides[side].hp_after = active.current_hp

    _maybe_finish(state)
    state.turn_number += 1
    return state, record


class Battle:
    """Owns one battle: state, RNG, the turn log, and forced replacements."""

    def __init__(
        self,
        team_a: Team,
        team_b: Team,
        chart: TypeChart,
        seed: int,
        max_turns: int = DEFAULT_MAX_TURNS,
        battle_id: str = "battle",
        agent_names: dict[str, str] | None = None,
        prompt_hash: str | None = None,
    ):
        for label, team in (("A", team_a), ("B", team_b)):
            problems = team.problems()
            for member in team.members:
                if member.ptype not in chart.types:
                    problems.append(f"{member.name}: unknown type {member.ptype!r}")
            if problems:
                raise RosterError(f"team {label} invalid: {'; '.join(problems)}")
        self.chart = chart
        self.max_turns = max_turns
        self.battle_id = battle_id
        self.agent_names = agent_names or {"A": "A", "B": "B"}
        self.prompt_hash = prompt_hash
        self.seed = seed
        self.state = BattleState(
            sides={
                "A": SideState([BattlerState.fresh(m) for m in team_a.members]),
                "B": SideState([BattlerState.fresh(m) for m in team_b.members]),
            },
            chart=chart,
            rng_seed=seed,
        )
        self.rng = random.Random(seed)
        self.records: list[TurnRecord] = []

    # -- queries ------------------------------------------------------------

    @property
    def turns_completed(self) -> int:
        return len(self.records)

    @property
    def winner(self) -> str | None:
        return self.state.finished

    @property
    def draw(self) -> bool:
        return self.state.finished is None and self.turns_completed >= self.max_turns

    @property
    def finished(self) -> bool:
        return self.state.finished is not None or self.draw

    def needs_replacement(self, side: str) -> bool:
        side_state = self.state.side(side)
        return side_state.active.fainted and bool(side_state.bench())

    def legal_actions(self, side: str) -> list[ActionDecision]:
        if self.draw:
            raise BattleFinishedError("battle ended in a draw")
        return legal_actions(self.state, side)

    def replacement_actions(self, side: str) -> list[ActionDecision]:
        return replacement_actions(self.state, side)

    # -- mutations ----------------------------------------------------------

    def submit_turn(
        self,
        decision_a: ActionDecision,
        decision_b: ActionDecision,
        telemetry: dict[str, dict | None] | None = None,
    ) -> TurnRecord:
        if self.finished:
            raise BattleFinishedError("battle is finished")
        for side in SIDES:
            if self.needs_replacement(side):
                raise IllegalActionError(side, "a replacement must be chosen first")
        _, record = resolve_turn(self.state, decision_a, decision_b, self.rng, telemetry)
        self.records.append(record)
        return record

    def replace(self, side: str, name: str, telemetry: dict | None = None) -> None:
        """Bring in a replacement after a faint; consumes no turn."""
        if not self.needs_replacement(side):
            raise IllegalActionError(side, "no replacement is pending")
        side_state = self.state.side(side)
        idx = side_state.index_of(name)
        if idx is None:
            raise IllegalActionError(side, f"no teammate named {name!r}")
        if side_state.battlers[idx].fainted:
            raise IllegalActionError(side, f"{name!r} has fainted")
        if idx == side_state.active_index:
            raise IllegalActionError(side, f"{name!r} is already active")
        side_state.active_index = idx
        if self.records:
            self.records[-1].replacements[side] = {"to": name, "telemetry": telemetry}

    # -- log ----------------------------------------------------------------

    def header(self) -> dict:
        teams = {
            side: [pokemon_to_dict(b.spec) for b in self.state.side(side).battlers]
            for side in SIDES
        }
        return {
            "battle_id": self.battle_id,
            "seed": self.seed,
            "teams": teams,
            "chart_version": self.chart.version,
            "agents": self.agent_names,
            "max_turns": self.max_turns,
            "prompt_templates": self.prompt_hash,
        }
