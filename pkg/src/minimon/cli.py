"""Command-line entry point: battles, tournaments, move generation/evaluation,
metric reports, and the arena service."""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click

from . import metrics
from .agents import build_agent, prompt_templates_hash
from .errors import MinimonError
from .evaluation import JudgeFailure, evaluate_batch, judge_move, render_batch_stats
from .forge import generate_moves, make_context, outcome_to_lines, outcomes_from_lines
from .gateway import UsageLedger, load_gateway
from .model import (
    default_chart,
    default_roster,
    load_roster_file,
    load_type_chart_file,
)
from .runner import derive_seed, draw_team, run_battle, write_battle_log
from .tournament import TournamentSpec, render_report, run_tournament


def _chart(path: str | None):
    return load_type_chart_file(path) if path else default_chart()


def _roster(path: str | None):
    return list(load_roster_file(path)) if path else list(default_roster())


def _gateway(config: str | None, ledger: UsageLedger | None = None):
    if config is None:
        return None
    return load_gateway(config, ledger=ledger)


def _emit(data: dict, as_json: bool, text_renderer=None):
    if as_json:
        click.echo(json.dumps(data, sort_keys=True, indent=2))
    elif text_renderer is not None:
        click.echo(text_renderer(data))
    else:
        click.echo(json.dumps(data, sort_keys=True, indent=2))


@click.group()
def cli():
    """Deterministic monster battles with pluggable agents."""


@cli.command()
@click.option("--agent-a", required=True, help="random | heuristic | llm:<model>[,thinking=on|off]")
@click.option("--agent-b", required=True, help="random | heuristic | llm:<model>[,thinking=on|off]")
@click.option("--battles", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--max-turns", default=100, show_default=True, type=int)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="write one JSONL log per battle")
@click.option("--roster", "roster_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--chart", "chart_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="provider config (needed for llm agents)")
@click.option("--json", "as_json", is_flag=True, default=False)
def battle(agent_a, agent_b, battles, seed, max_turns, out, roster_path, chart_path, config_path, as_json):
    """Run seeded battles between two agents and print a summary."""
    chart = _chart(chart_path)
    roster = _roster(roster_path)
    gateway = _gateway(config_path)
    wins = {"A": 0, "B": 0, None: 0}
    turns_won = {"A": [], "B": []}
    alignment = {"A": [0, 0], "B": [0, 0]}
    tokens = {"A": 0, "B": 0}
    latency = {"A": 0, "B": 0}
    for i in range(battles):
        team_rng = random.Random(derive_seed(seed, "teams", i))
        team_a = draw_team(roster, team_rng)
        team_b = draw_team(roster, team_rng)
        result = run_battle(
            build_agent(agent_a, chart, gateway),
            build_agent(agent_b, chart, gateway),
            team_a,
            team_b,
            chart,
            seed=derive_seed(seed, "battle", i),
            max_turns=max_turns,
            battle_id=f"battle_{i:04d}",
            agent_names={"A": agent_a, "B": agent_b},
            prompt_hash=prompt_templates_hash(),
        )
        wins[result.winner] += 1
        if result.winner in turns_won:
            turns_won[result.winner].append(float(result.turns))
        for side in ("A", "B"):
            alignment[side][0] += result.alignment[side][0]
            alignment[side][1] += result.alignment[side][1]
            tokens[side] += result.totals[side].total_tokens
            latency[side] += result.totals[side].latency_ms
        if out:
            write_battle_log(result, Path(out) / f"{result.battle_id}.jsonl")

    decided = wins["A"] + wins["B"]
    ttw = {side: metrics.mean_std(turns_won[side]) for side in ("A", "B")}
    summary = {
        "agents": {"A": agent_a, "B": agent_b},
        "battles": battles,
        "seed": seed,
        "wins": {"A": wins["A"], "B": wins["B"], "draws": wins[None]},
        "win_rate": {
            side: (wins[side] / decided if decided else None) for side in ("A", "B")
        },
        "turns_to_win": {
            side: ({"mean": ttw[side][0], "std": ttw[side][1]} if ttw[side] else None)
            for side in ("A", "B")
        },
        "type_alignment": {
            side: (alignment[side][0] / alignment[side][1] if alignment[side][1] else None)
            for side in ("A", "B")
        },
        "total_tokens": tokens,
        "total_latency_ms": latency,
    }

    def text(data: dict) -> str:
        lines = [
            f"{data['agents']['A']} (A) vs {data['agents']['B']} (B): "
            f"{data['battles']} battles, seed {data['seed']}",
            f"wins: A {data['wins']['A']}, B {data['wins']['B']}, draws {data['wins']['draws']}",
        ]
        for side in ("A", "B"):
            rate = data["win_rate"][side]
            rate_text = f"{rate:.3f}" if rate is not None else "-"
            ttw_entry = data["turns_to_win"][side]
            ttw_text = f"{ttw_entry['mean']:.1f}" if ttw_entry else "-"
            align = data["type_alignment"][side]
            align_text = f"{align:.3f}" if align is not None else "-"
            lines.append(
                f"side {side}: win_rate {rate_text}, turns_to_win {ttw_text}, alignment {align_text}"
            )
        return "\n".join(lines)

    _emit(summary, as_json, text)


@cli.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--parallel", default=1, show_default=True, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True, default=False)
def tournament(spec_path, out, parallel, config_path, as_json):
    """Run a round-robin tournament from a spec file."""
    spec = TournamentSpec.from_file(spec_path)
    gateway = _gateway(config_path)
    report = run_tournament(spec, gateway=gateway, out_dir=out, parallel=parallel)
    click.echo(render_report(report, "json" if as_json else "text"), nl=False)


@cli.command()
@click.option("--model", required=True)
@click.option("--pokemon", "pokemon_name", required=True)
@click.option("--batch", default=1, show_default=True, type=click.Choice(["1", "4"]))
@click.option("--trials", default=1, show_default=True, type=int)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="candidate dump JSONL")
@click.option("--roster", "roster_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--chart", "chart_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, default=False)
def movegen(model, pokemon_name, batch, trials, out, roster_path, chart_path, config_path, as_json):
    """Generate move candidates for one roster member."""
    chart = _chart(chart_path)
    roster = _roster(roster_path)
    try:
        pokemon = next(p for p in roster if p.name == pokemon_name)
    except StopIteration:
        raise click.UsageError(f"{pokemon_name!r} is not in the roster")
    gateway = _gateway(config_path)
    ctx = make_context(pokemon, chart, int(batch))
    lines = []
    parsed = failures = 0
    tokens = 0
    for trial in range(trials):
        outcome = generate_moves(gateway, ctx, model=model)
        parsed += len(outcome.candidates)
        failures += 1 if outcome.failures else 0
        tokens += outcome.total_tokens
        lines.extend(outcome_to_lines(outcome, trial=trial))
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
    requested = trials * int(batch)
    summary = {
        "model": model,
        "pokemon": pokemon_name,
        "batch_size": int(batch),
        "trials": trials,
        "requested": requested,
        "parsed": parsed,
        "validity_pct": 100.0 * parsed / requested if requested else None,
        "trials_with_failures": failures,
        "total_tokens": tokens,
        "dump": out,
    }
    _emit(summary, as_json, lambda d: (
        f"{d['model']} x {d['pokemon']}: {d['parsed']}/{d['requested']} candidates "
        f"({d['validity_pct']:.1f}% valid), tokens {d['total_tokens']}"
    ))


@cli.command()
@click.option("--in", "dump_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--judge", "judge_model", default=None, help="judge model name (needs --config)")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="evaluation dump JSONL")
@click.option("--roster", "roster_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--chart", "chart_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True, default=False)
def moveeval(dump_path, judge_model, out, roster_path, chart_path, config_path, as_json):
    """Evaluate a candidate dump: rule findings plus optional judge scores."""
    chart = _chart(chart_path)
    roster = {p.name: p for p in _roster(roster_path)}
    with open(dump_path, "r", encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    outcomes = outcomes_from_lines(lines, roster)

    gateway = _gateway(config_path) if judge_model else None
    if judge_model and gateway is None:
        raise click.UsageError("--judge requires --config")

    judge_cache = {}

    def judge_fn(move, owner):
        if judge_model is None:
            return None
        key = (owner.name, move.name, move.power, move.accuracy)
        if key not in judge_cache:
            try:
                judge_cache[key] = judge_move(gateway, move, judge_model)
            except JudgeFailure:
                judge_cache[key] = None
        return judge_cache[key]

    stats = evaluate_batch(outcomes, chart, judge_fn=judge_fn if judge_model else None)
    if out:
        from .evaluation import evaluate_move

        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for outcome in outcomes:
                for move in outcome.candidates:
                    report = evaluate_move(move, outcome.pokemon, chart)
                    entry = {
                        "model": outcome.model,
                        "pokemon": outcome.pokemon.name,
                        "move": {
                            "name": move.name, "type": move.move_type, "power": move.power,
                            "accuracy": move.accuracy, "category": move.category,
                            "pp": move.pp, "effect": list(move.effect) if move.effect else None,
                        },
                        "report": report.to_dict(),
                    }
                    score = judge_fn(move, outcome.pokemon)
                    entry["judge_score"] = score.to_dict() if score else None
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")
    if as_json:
        click.echo(json.dumps(stats.to_dict(), sort_keys=True, indent=2))
    else:
        click.echo(render_batch_stats(stats))


@cli.command()
@click.option("--logs", "logs_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--chart", "chart_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True, default=False)
def report(logs_dir, chart_path, as_json):
    """Compute win-rate, battle-length, and alignment metrics from battle logs."""
    chart = _chart(chart_path)
    logs = metrics.load_logs(logs_dir)
    if not logs:
        raise click.UsageError(f"no .jsonl battle logs under {logs_dir}")
    summary = metrics.summarize_logs(logs, chart)
    if as_json:
        click.echo(json.dumps(summary, sort_keys=True, indent=2))
    else:
        click.echo(metrics.render_summary(summary))


@cli.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--session-dir", default="./arena-sessions", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--web", "web_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="also serve a static browser client from this directory")
@click.option("--roster", "roster_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--chart", "chart_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def serve(port, host, session_dir, web_dir, roster_path, chart_path, config_path):
    """Serve the human-vs-agent arena API."""
    import uvicorn

    from .arena import ArenaConfig, create_app

    config = ArenaConfig.from_paths(
        session_dir=session_dir,
        roster_path=roster_path,
        chart_path=chart_path,
        gateway_config=config_path,
        web_dir=web_dir,
    )
    uvicorn.run(create_app(config), host=host, port=port)


def main(argv=None):
    """Exit codes: 0 success, 1 usage error, 2 runtime failure."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        sys.exit(1)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except (MinimonError, ValueError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
