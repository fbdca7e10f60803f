"""Core domain model: stat blocks, moves, battlers, teams, and the type chart.

Everything here is immutable after construction and safe to share across
threads. Validation is deliberately split from construction: loaders raise on
structurally unusable documents, while semantic problems (bad ranges, unknown
types, oversized move lists) are collected into reports so callers can show
them all at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import ChartInvariantError, ChartParseError, RosterError, UnknownTypeError

ALLOWED_MULTIPLIERS = (0.0, 0.5, 1.0, 2.0)
EFFECT_NAMES = ("poison", "paralyze")
CATEGORIES = ("Physical", "Special")
TEAM_SIZE = 3
MAX_MOVES = 3


def _data_text(name: str) -> str:
    return resources.files("minimon.data").joinpath(name).read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# Type chart


@dataclass(frozen=True)
class TypeChart:
    """Attack-type vs defend-type damage multipliers.

    ``entries`` holds only non-neutral pairs; any pair of known types that is
    absent resolves to 1.0.
    """

    types: tuple[str, ...]
    entries: dict[tuple[str, str], float] = field(default_factory=dict)
    version: str = "1"

    def to_document(self) -> dict:
        multipliers = [
            {"attacker": a, "defender": d, "value": v}
            for (a, d), v in sorted(self.entries.items())
        ]
        return {"version": self.version, "types": list(self.types), "multipliers": multipliers}

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2) + "\n"


def effectiveness(chart: TypeChart, attack_type: str, defender_type: str) -> float:
    """Damage multiplier of ``attack_type`` against ``defender_type``."""
    if attack_type not in chart.types:
        raise UnknownTypeError(f"unknown attacking type {attack_type!r}")
    if defender_type not in chart.types:
        raise UnknownTypeError(f"unknown defending type {defender_type!r}")
    return chart.entries.get((attack_type, defender_type), 1.0)


def load_type_chart(document: str | dict) -> TypeChart:
    """Parse and validate a chart document (JSON text or an already-parsed dict)."""
    if isinstance(document, str):
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ChartParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    else:
        raw = document

    if not isinstance(raw, dict):
        raise ChartParseError("chart document must be a JSON object")
    types = raw.get("types")
    if not isinstance(types, list) or not types:
        raise ChartParseError("chart must declare a non-empty 'types' list")
    if not all(isinstance(t, str) and t for t in types):
        raise ChartParseError("'types' entries must be non-empty strings")
    if len(set(types)) != len(types):
        raise ChartParseError("'types' entries must be unique")

    multipliers = raw.get("multipliers", [])
    if not isinstance(multipliers, list):
        raise ChartParseError("'multipliers' must be a list")

    type_set = set(types)
    entries: dict[tuple[str, str], float] = {}
    bad: list[str] = []
    for i, item in enumerate(multipliers):
        if not isinstance(item, dict) or not {"attacker", "defender", "value"} <= set(item):
            raise ChartParseError(f"multiplier #{i} must be an object with attacker/defender/value")
        attacker, defender, value = item["attacker"], item["defender"], item["value"]
        if attacker not in type_set:
            bad.append(f"#{i}: unknown attacker {attacker!r}")
            continue
        if defender not in type_set:
            bad.append(f"#{i}: unknown defender {defender!r}")
            continue
        if not isinstance(value, (int, float)) or float(value) not in ALLOWED_MULTIPLIERS:
            bad.append(f"#{i}: multiplier {value!r} not in {list(ALLOWED_MULTIPLIERS)}")
            continue
        key = (attacker, defender)
        if key in entries:
            bad.append(f"#{i}: duplicate pair {attacker}->{defender}")
            continue
        entries[key] = float(value)
    if bad:
        raise ChartInvariantError("invalid multipliers", bad)

    # Neutral pairs are implicit; storing them would only bloat round-trips.
    entries = {k: v for k, v in entries.items() if v != 1.0}
    version = str(raw.get("version", "1"))
    return TypeChart(types=tuple(types), entries=entries, version=version)


def load_type_chart_file(path) -> TypeChart:
    with open(path, "r", encoding="utf-8") as fh:
        return load_type_chart(fh.read())


@lru_cache(maxsize=1)
def default_chart() -> TypeChart:
    return load_type_chart(_data_text("type_chart.json"))


# ---------------------------------------------------------------------------
# Battler model


@dataclass(frozen=True)
class StatBlock:
    hp: int
    atk: int
    def_: int
    spa: int
    spd: int
    spe: int

    def problems(self) -> list[str]:
        out = []
        for name in ("hp", "atk", "def_", "spa", "spd", "spe"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                out.append(f"stat {name.rstrip('_')} must be an integer >= 1, got {value!r}")
        return out


@dataclass(frozen=True)
class MoveDef:
    name: str
    move_type: str
    power: int
    accuracy: int
    category: str
    pp: int
    effect: tuple[str, int] | None = None

    def problems(self) -> list[str]:
        out = []
        if not self.name:
            out.append("move name must be non-empty")
        if not isinstance(self.power, int) or self.power < 0:
            out.append(f"move {self.name!r}: power must be an integer >= 0")
        if not isinstance(self.accuracy, int) or not 1 <= self.accuracy <= 100:
            out.append(f"move {self.name!r}: accuracy must be in [1, 100]")
        if not isinstance(self.pp, int) or self.pp < 1:
            out.append(f"move {self.name!r}: pp must be an integer >= 1")
        if self.category not in CATEGORIES:
            out.append(f"move {self.name!r}: category must be one of {list(CATEGORIES)}")
        if self.effect is not None:
            name, chance = self.effect
            if name not in EFFECT_NAMES:
                out.append(f"move {self.name!r}: unknown effect {name!r}")
            if not isinstance(chance, int) or not 1 <= chance <= 100:
                out.append(f"move {self.name!r}: effect chance must be in [1, 100]")
        return out


@dataclass(frozen=True)
class PokemonSpec:
    name: str
    ptype: str
    stats: StatBlock
    moves: tuple[MoveDef, ...]

    def move_named(self, name: str) -> MoveDef | None:
        for move in self.moves:
            if move.name == name:
                return move
        return None


@dataclass(frozen=True)
class Team:
    members: tuple[PokemonSpec, ...]

    def problems(self) -> list[str]:
        out = []
        if len(self.members) != TEAM_SIZE:
            out.append(f"team must have exactly {TEAM_SIZE} members, got {len(self.members)}")
        names = [m.name for m in self.members]
        if len(set(names)) != len(names):
            out.append(f"team member names must be unique: {names}")
        return out


# ---------------------------------------------------------------------------
# Roster serialization

_STAT_KEYS = ("hp", "atk", "def", "spa", "spd", "spe")


def move_from_dict(raw: dict) -> MoveDef:
    try:
        effect = raw.get("effect")
        if effect is not None:
            effect = (str(effect[0]), int(effect[1]))
        return MoveDef(
            name=str(raw["name"]),
            move_type=str(raw["type"]),
            power=int(raw["power"]),
            accuracy=int(raw["accuracy"]),
            category=str(raw["category"]),
            pp=int(raw["pp"]),
            effect=effect,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise RosterError(f"unusable move entry {raw!r}: {exc}") from exc


def move_to_dict(move: MoveDef) -> dict:
    return {
        "name": move.name,
        "type": move.move_type,
        "power": move.power,
        "accuracy": move.accuracy,
        "category": move.category,
        "pp": move.pp,
        "effect": list(move.effect) if move.effect else None,
    }


def pokemon_from_dict(raw: dict) -> PokemonSpec:
    try:
        stats_raw = raw["stats"]
        atk = int(stats_raw["atk"])
        def_ = int(stats_raw["def"])
        stats = StatBlock(
            hp=int(stats_raw["hp"]),
            atk=atk,
            def_=def_,
            # Rosters may predate the physical/special split; fall back to the
            # plain attacking/defending stats.
            spa=int(stats_raw.get("spa", atk)),
            spd=int(stats_raw.get("spd", def_)),
            spe=int(stats_raw["spe"]),
        )
        moves = tuple(move_from_dict(m) for m in raw["moves"])
        return PokemonSpec(name=str(raw["name"]), ptype=str(raw["type"]), stats=stats, moves=moves)
    except (KeyError, TypeError) as exc:
        raise RosterError(f"unusable roster entry {raw.get('name', raw)!r}: {exc}") from exc


def pokemon_to_dict(spec: PokemonSpec) -> dict:
    return {
        "name": spec.name,
        "type": spec.ptype,
        "stats": {
            "hp": spec.stats.hp,
            "atk": spec.stats.atk,
            "def": spec.stats.def_,
            "spa": spec.stats.spa,
            "spd": spec.stats.spd,
            "spe": spec.stats.spe,
        },
        "moves": [move_to_dict(m) for m in spec.moves],
    }


def load_roster(document: str | list) -> list[PokemonSpec]:
    if isinstance(document, str):
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as exc:
            raise RosterError(f"invalid JSON: {exc}") from exc
    else:
        raw = document
    if not isinstance(raw, list):
        raise RosterError("roster document must be a JSON array")
    return [pokemon_from_dict(item) for item in raw]


def load_roster_file(path) -> list[PokemonSpec]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_roster(fh.read())


@lru_cache(maxsize=1)
def default_roster() -> tuple[PokemonSpec, ...]:
    return tuple(load_roster(_data_text("roster.json")))


def validate_roster(roster: list[PokemonSpec], chart: TypeChart) -> list[str]:
    """Collect every invariant violation; an empty report means the roster is valid."""
    report: list[str] = []
    seen: set[str] = set()
    for spec in roster:
        if spec.name in seen:
            report.append(f"duplicate name {spec.name!r}")
        seen.add(spec.name)
        if spec.ptype not in chart.types:
            report.append(f"{spec.name}: unknown type {spec.ptype!r}")
        if not 1 <= len(spec.moves) <= MAX_MOVES:
            report.append(f"{spec.name}: must have 1-{MAX_MOVES} moves, got {len(spec.moves)}")
        report.extend(f"{spec.name}: {p}" for p in spec.stats.problems())
        for move in spec.moves:
            report.extend(f"{spec.name}: {p}" for p in move.problems())
            if move.move_type not in chart.types:
                report.append(f"{spec.name}: move {move.name!r} has unknown type {move.move_type!r}")
    return report
