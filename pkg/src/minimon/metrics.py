"""Battle-log analytics: win rates, battle length, type alignment, and aggregates.

Everything here works from persisted JSONL logs (or in-memory results) and is
independent of the engine's own bookkeeping, so online counters can be checked
against an offline recomputation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean, pstdev

from .engine import FALLBACK_MOVE
from .errors import MinimonError
from .model import TypeChart, effectiveness

SIDES = ("A", "B")


class MalformedLogError(MinimonError):
    pass


@dataclass
class BattleLog:
    """A parsed JSONL battle log: one header line, then one record per turn."""

    header: dict
    records: list[dict]

    @classmethod
    def from_lines(cls, lines: list[str]) -> "BattleLog":
        rows = []
        for i, line in enumerate(lines):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise MalformedLogError(f"line {i + 1}: {exc}") from exc
        if not rows or "battle_id" not in rows[0]:
            raise MalformedLogError("missing header line")
        return cls(header=rows[0], records=rows[1:])

    @classmethod
    def load(cls, path: str | Path) -> "BattleLog":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh.readlines())

    @property
    def turns(self) -> int:
        return len(self.records)

    def team_of(self, side: str) -> list[dict]:
        try:
            return self.header["teams"][side]
        except KeyError as exc:
            raise MalformedLogError(f"header lacks team for side {side}") from exc

    def final_hp(self) -> dict[str, dict[str, int]]:
        """Replay hp per battler from per-turn records."""
        hp = {
            side: {member["name"]: member["stats"]["hp"] for member in self.team_of(side)}
            for side in SIDES
        }
        for record in self.records:
            for side in SIDES:
                entry = record["sides"][side]
                hp[side][entry["active_after"]] = entry["hp_after"]
        return hp

    def outcome(self) -> tuple[str | None, int]:
        """(winner side or None for a draw, completed turns) derived from the log."""
        hp = self.final_hp()
        wiped = [side for side in SIDES if all(v == 0 for v in hp[side].values())]
        if len(wiped) == 1:
            return ("B" if wiped[0] == "A" else "A"), self.turns
        return None, self.turns


@dataclass(frozen=True)
class LogResult:
    """Minimal result shape shared with in-memory battle results."""

    winner: str | None
    turns: int

    @classmethod
    def from_log(cls, log: BattleLog) -> "LogResult":
        winner, turns = log.outcome()
        return cls(winner=winner, turns=turns)


# ---------------------------------------------------------------------------
# Aggregates

ABSENT = None


def mean_std(values: list[float]) -> tuple[float, float] | None:
    """(mean, population std); absent for an empty sample."""
    if not values:
        return None
    return fmean(values), pstdev(values)


def aggregate(samples: dict[str, list[float]]) -> dict[str, tuple[float, float] | None]:
    return {tag: mean_std(list(values)) for tag, values in samples.items()}


@dataclass(frozen=True)
class WinRate:
    fraction: float | None  # wins / decided; absent with no decided battles
    wins: int
    losses: int
    draws: int
    total: int

    def to_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "wins": self.wins,
            "losses": self.losses,
            "draws": self.draws,
            "total": self.total,
        }


def win_rate(results, side: str) -> WinRate:
    """Wins over decided battles; draws are reported separately, never counted."""
    wins = losses = draws = total = 0
    for result in results:
        winner = getattr(result, "winner", None)
        total += 1
        if winner is None:
            draws += 1
        elif winner == side:
            wins += 1
        else:
            losses += 1
    decided = wins + losses
    return WinRate(
        fraction=wins / decided if decided else None,
        wins=wins,
        losses=losses,
        draws=draws,
        total=total,
    )


def turns_to_win(results, side: str) -> tuple[float, float] | None:
    """(mean, population std) of battle length over this side's wins only."""
    lengths = [float(r.turns) for r in results if getattr(r, "winner", None) == side]
    return mean_std(lengths)


# ---------------------------------------------------------------------------
# Type alignment, recomputed from the log alone


def _move_types(team: list[dict]) -> dict[str, dict[str, str]]:
    return {
        member["name"]: {m["name"]: m["type"] for m in member["moves"]}
        for member in team
    }


def alignment_counts(log: BattleLog, chart: TypeChart, side: str) -> tuple[int, int]:
    """(aligned, advantaged) move turns for one side, from the log alone."""
    own_moves = _move_types(log.team_of(side))
    opp = "B" if side == "A" else "A"
    opp_types = {member["name"]: member["type"] for member in log.team_of(opp)}
    aligned = advantaged = 0
    for record in log.records:
        entry = record["sides"][side]
        action = entry["action"]
        if action["action"] != "move":
            continue
        defender_type = opp_types.get(record["sides"][opp]["active"])
        if defender_type is None:
            raise MalformedLogError(f"unknown opposing battler in turn {record['turn']}")
        attacker_moves = own_moves.get(entry["active"])
        if attacker_moves is None:
            raise MalformedLogError(f"unknown battler {entry['active']!r} in turn {record['turn']}")

        def multiplier(move_name: str) -> float:
            if move_name == FALLBACK_MOVE.name:
                return 1.0
            move_type = attacker_moves.get(move_name)
            if move_type is None:
                raise MalformedLogError(f"unknown move {move_name!r} in turn {record['turn']}")
            return effectiveness(chart, move_type, defender_type)

        if not any(multiplier(name) > 1.0 for name in entry["available_moves"]):
            continue
        advantaged += 1
        if multiplier(action["value"]) > 1.0:
            aligned += 1
    return aligned, advantaged


def type_alignment(log: BattleLog, chart: TypeChart, side: str) -> float | None:
    aligned, advantaged = alignment_counts(log, chart, side)
    return aligned / advantaged if advantaged else None


# ---------------------------------------------------------------------------
# Directory-level reporting


def load_logs(directory: str | Path) -> list[BattleLog]:
    paths = sorted(Path(directory).rglob("*.jsonl"))
    return [BattleLog.load(p) for p in paths]


def summarize_logs(logs: list[BattleLog], chart: TypeChart) -> dict:
    """Per agent-pairing metrics over a directory of battle logs."""
    groups: dict[tuple[str, str], list[BattleLog]] = {}
    for log in logs:
        agents = log.header.get("agents", {})
        key = (agents.get("A", "A"), agents.get("B", "B"))
        groups.setdefault(key, []).append(log)

    out = {}
    for (agent_a, agent_b), group in sorted(groups.items()):
        results = [LogResult.from_log(log) for log in group]
        counts = {side: [0, 0] for side in SIDES}
        for log in group:
            for side in SIDES:
                a, d = alignment_counts(log, chart, side)
                counts[side][0] += a
                counts[side][1] += d
        alignment = {
            side: (counts[side][0] / counts[side][1] if counts[side][1] else None)
            for side in SIDES
        }
        tw = {side: turns_to_win(results, side) for side in SIDES}
        out[f"{agent_a} vs {agent_b}"] = {
            "battles": len(group),
            "win_rate": {side: win_rate(results, side).to_dict() for side in SIDES},
            "turns_to_win": {
                side: {"mean": tw[side][0], "std": tw[side][1]} if tw[side] else None
                for side in SIDES
            },
            "type_alignment": alignment,
        }
    return out


def render_summary(summary: dict) -> str:
    lines = []
    for pairing, data in summary.items():
        lines.append(pairing)
        lines.append(f"  battles: {data['battles']}")
        for side in SIDES:
            wr = data["win_rate"][side]
            frac = f"{wr['fraction']:.3f}" if wr["fraction"] is not None else "-"
            ttw = data["turns_to_win"][side]
            ttw_text = f"{ttw['mean']:.1f}±{ttw['std']:.1f}" if ttw else "-"
            al = data["type_alignment"][side]
            al_text = f"{al:.3f}" if al is not None else "-"
            lines.append(
                f"  side {side}: win_rate {frac} "
                f"(W{wr['wins']}-L{wr['losses']}-D{wr['draws']}), "
                f"turns_to_win {ttw_text}, alignment {al_text}"
            )
    return "\n".join(lines)
