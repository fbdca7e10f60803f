"""Round-robin scheduler: every entrant pair plays a fixed number of battles.

Per-battle seeds are derived from the tournament seed plus the pairing and
index, so any single battle can be replayed in isolation. Completed battles
are checkpointed to disk; an interrupted run resumes without replaying them.
"""

from __future__ import annotations

import json
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from statistics import fmean

from .agents import build_agent, prompt_templates_hash
from .model import (
    PokemonSpec,
    TypeChart,
    default_chart,
    default_roster,
    load_roster_file,
    load_type_chart_file,
)
from .runner import derive_seed, draw_team, run_battle, write_battle_log

TEAM_DRAW_POLICY = "independent-per-battle"


@dataclass(frozen=True)
class TournamentSpec:
    entrants: tuple[str, ...]
    battles_per_pair: int
    seed: int
    roster: str | None = None
    chart: str | None = None
    max_turns: int = 100

    @classmethod
    def from_dict(cls, raw: dict) -> "TournamentSpec":
        entrants = tuple(raw.get("entrants", ()))
        if len(entrants) < 2:
            raise ValueError("a tournament needs at least two entrants")
        if len(set(entrants)) != len(entrants):
            raise ValueError("entrant specs must be unique")
        battles = int(raw.get("battles_per_pair", 0))
        if battles < 1:
            raise ValueError("battles_per_pair must be >= 1")
        return cls(
            entrants=entrants,
            battles_per_pair=battles,
            seed=int(raw.get("seed", 0)),
            roster=raw.get("roster"),
            chart=raw.get("chart"),
            max_turns=int(raw.get("max_turns", 100)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "TournamentSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class BattleOutcome:
    pair: tuple[str, str]
    index: int
    winner: str | None = None  # entrant spec string, None on draw or failure
    turns: int = 0
    tokens: dict[str, int] = field(default_factory=dict)
    failure: str | None = None

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "index": self.index,
            "winner": self.winner,
            "turns": self.turns,
            "tokens": self.tokens,
            "failure": self.failure,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "BattleOutcome":
        return cls(
            pair=tuple(raw["pair"]),
            index=raw["index"],
            winner=raw.get("winner"),
            turns=raw.get("turns", 0),
            tokens=raw.get("tokens", {}),
            failure=raw.get("failure"),
        )


@dataclass
class TournamentReport:
    spec: TournamentSpec
    outcomes: list[BattleOutcome]

    @property
    def failures(self) -> list[BattleOutcome]:
        return [o for o in self.outcomes if o.failure is not None]

    def completed(self) -> list[BattleOutcome]:
        return [o for o in self.outcomes if o.failure is None]

    def wld(self, a: str, b: str) -> tuple[int, int, int]:
        wins = losses = draws = 0
        for outcome in self.completed():
            if set(outcome.pair) != {a, b}:
                continue
            if outcome.winner == a:
                wins += 1
            elif outcome.winner == b:
                losses += 1
            else:
                draws += 1
        return wins, losses, draws

    def tokens(self, a: str, b: str) -> int:
        return sum(
            o.tokens.get(a, 0) for o in self.completed() if set(o.pair) == {a, b}
        )

    def mean_turns(self, a: str, b: str) -> float | None:
        turns = [o.turns for o in self.completed() if set(o.pair) == {a, b}]
        return fmean(turns) if turns else None

    def to_dict(self) -> dict:
        entrants = list(self.spec.entrants)
        def matrix(fn):
            return {
                a: {b: fn(a, b) for b in entrants if b != a}
                for a in entrants
            }

        return {
            "seed": self.spec.seed,
            "entrants": entrants,
            "battles_per_pair": self.spec.battles_per_pair,
            "max_turns": self.spec.max_turns,
            "team_draws": TEAM_DRAW_POLICY,
            "wld": matrix(lambda a, b: list(self.wld(a, b))),
            "tokens": matrix(self.tokens),
            "mean_turns": matrix(self.mean_turns),
            "battles_completed": len(self.completed()),
            "failures": [o.to_dict() for o in self.failures],
        }


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9.=-]+", "-", name).strip("-") or "entrant"


def run_tournament(
    spec: TournamentSpec,
    gateway=None,
    out_dir: str | Path | None = None,
    parallel: int = 1,
    agent_factory=None,
    roster: list[PokemonSpec] | None = None,
    chart: TypeChart | None = None,
) -> TournamentReport:
    """Play every pairing, checkpointing per battle; failures are recorded, never fatal."""
    if chart is None:
        chart = load_type_chart_file(spec.chart) if spec.chart else default_chart()
    if roster is None:
        roster = list(load_roster_file(spec.roster)) if spec.roster else list(default_roster())
    if agent_factory is None:
        agent_factory = lambda entrant: build_agent(entrant, chart, gateway)

    out_path = Path(out_dir) if out_dir is not None else None
    checkpoint_path = out_path / "checkpoint.jsonl" if out_path else None
    done: dict[tuple[tuple[str, str], int], BattleOutcome] = {}
    if checkpoint_path and checkpoint_path.exists():
        for line in checkpoint_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                outcome = BattleOutcome.from_dict(json.loads(line))
                done[(outcome.pair, outcome.index)] = outcome

    pairs = list(combinations(spec.entrants, 2))
    jobs = [
        (pair, index)
        for pair in pairs
        for index in range(spec.battles_per_pair)
        if (pair, index) not in done
    ]

    checkpoint_lock = threading.Lock()

    def record(outcome: BattleOutcome) -> None:
        done[(outcome.pair, outcome.index)] = outcome
        if checkpoint_path:
            with checkpoint_lock:
                checkpoint_path.parent.mkdir(parents=True, exist_ok=True)
                with checkpoint_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(outcome.to_dict(), sort_keys=True) + "\n")

    def play(pair: tuple[str, str], index: int) -> BattleOutcome:
        a, b = pair
        battle_seed = derive_seed(spec.seed, a, b, index)
        battle_id = f"{slug(a)}_vs_{slug(b)}_{index:03d}"
        try:
            import random as _random

            team_rng = _random.Random(derive_seed(battle_seed, "teams"))
            team_a = draw_team(roster, team_rng)
            team_b = draw_team(roster, team_rng)
            result = run_battle(
                agent_factory(a),
                agent_factory(b),
                team_a,
                team_b,
                chart,
                seed=battle_seed,
                max_turns=spec.max_turns,
                battle_id=battle_id,
                agent_names={"A": a, "B": b},
                prompt_hash=prompt_templates_hash(),
            )
            if out_path is not None:
                log_path = out_path / "logs" / f"{slug(a)}_vs_{slug(b)}" / f"{battle_id}.jsonl"
                write_battle_log(result, log_path)
            winner = {"A": a, "B": b}.get(result.winner)
            return BattleOutcome(
                pair=pair,
                index=index,
                winner=winner,
                turns=result.turns,
                tokens={a: result.totals["A"].total_tokens, b: result.totals["B"].total_tokens},
            )
        except Exception as exc:  # a broken battle must not sink the tournament
            return BattleOutcome(pair=pair, index=index, failure=f"{type(exc).__name__}: {exc}")

    if parallel > 1 and jobs:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = {job: pool.submit(play, *job) for job in jobs}
        for job in jobs:
            record(futures[job].result())
    else:
        for job in jobs:
            record(play(*job))

    outcomes = [
        done[(pair, index)]
        for pair in pairs
        for index in range(spec.battles_per_pair)
        if (pair, index) in done
    ]
    report = TournamentReport(spec=spec, outcomes=outcomes)
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "report.json").write_text(render_report(report, "json"), encoding="utf-8")
        (out_path / "report.txt").write_text(render_report(report, "text"), encoding="utf-8")
    return report


def _render_matrix(entrants: list[str], cell) -> str:
    names = list(entrants)
    rows = []
    for a in names:
        rows.append([a] + [cell(a, b) if a != b else "--" for b in names])
    header = [""] + names
    widths = [
        max(len(header[i]), *(len(row[i]) for row in rows)) for i in range(len(header))
    ]
    lines = ["  ".join(header[i].ljust(widths[i]) for i in range(len(header))).rstrip()]
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(row))).rstrip())
    return "\n".join(lines)


def render_report(report: TournamentReport, fmt: str = "text") -> str:
    """Three matrices (W-L-D, token totals, mean turns) as JSON or aligned text."""
    if fmt == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    spec = report.spec
    entrants = list(spec.entrants)
    lines = [
        f"Round-robin tournament (seed {spec.seed}, {spec.battles_per_pair} battles per pair)",
        f"Teams: {TEAM_DRAW_POLICY} draws of 3 from the shared roster",
        f"Battles completed: {len(report.completed())}"
        + (f", failed: {len(report.failures)}" if report.failures else ""),
        "",
        "W-L-D (row vs column):",
        _render_matrix(entrants, lambda a, b: "{}-{}-{}".format(*report.wld(a, b))),
        "",
        "Total tokens (row entrant, within pairing):",
        _render_matrix(entrants, lambda a, b: str(report.tokens(a, b))),
        "",
        "Mean turns:",
        _render_matrix(
            entrants,
            lambda a, b: f"{report.mean_turns(a, b):.1f}" if report.mean_turns(a, b) is not None else "-",
        ),
    ]
    return "\n".join(lines) + "\n"
