"""Move generation: prompt construction, strict-array parsing, and the retry loop."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .agents import load_prompt
from .errors import GatewayError, ParseFailure
from .gateway import CompletionRequest
from .model import MoveDef, PokemonSpec, TypeChart, effectiveness

_FENCE_RE = re.compile(r"```[a-zA-Z]*\s*\n?(.*?)```", re.DOTALL)
_REQUIRED_FIELDS = ("name", "power", "accuracy", "type", "category", "effect", "PP")


@dataclass(frozen=True)
class GenerationContext:
    pokemon: PokemonSpec
    advantageous_matchups: tuple[str, ...]
    batch_size: int


def make_context(pokemon: PokemonSpec, chart: TypeChart, batch_size: int) -> GenerationContext:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    matchups = tuple(
        t for t in chart.types if effectiveness(chart, pokemon.ptype, t) == 2.0
    )
    return GenerationContext(pokemon=pokemon, advantageous_matchups=matchups, batch_size=batch_size)


def build_generation_prompt(ctx: GenerationContext) -> tuple[str, str]:
    """(system, user): the fixed designer brief plus the battler-specific ask."""
    system = load_prompt("movegen_system.txt")
    stats = ctx.pokemon.stats
    if stats.spa > stats.atk:
        orientation = (
            f"Its Special Attack ({stats.spa}) is higher than its Attack ({stats.atk}), "
            "so Special moves are preferred."
        )
    elif stats.atk > stats.spa:
        orientation = (
            f"Its Attack ({stats.atk}) is higher than its Special Attack ({stats.spa}), "
            "so Physical moves are preferred."
        )
    else:
        orientation = (
            f"Its Attack and Special Attack are equal ({stats.atk}), "
            "so either category fits."
        )
    matchups = ", ".join(ctx.advantageous_matchups) if ctx.advantageous_matchups else "none"
    plural = "moves" if ctx.batch_size != 1 else "move"
    user = (
        f"Design {ctx.batch_size} new {plural} for this Pokemon.\n\n"
        f"Pokemon: {ctx.pokemon.name}\n"
        f"Type: {ctx.pokemon.ptype}\n"
        f"Attack: {stats.atk}\n"
        f"Special Attack: {stats.spa}\n"
        f"Speed: {stats.spe}\n"
        f"Advantageous type matchups: {matchups}\n"
        f"{orientation}\n\n"
        f"Return ONLY a JSON array containing exactly {ctx.batch_size} {plural}."
    )
    return system, user


def render_candidate(move: MoveDef) -> dict:
    """The generation wire shape (uppercase PP, effect as a pair or null)."""
    return {
        "name": move.name,
        "power": move.power,
        "accuracy": move.accuracy,
        "type": move.move_type,
        "category": move.category,
        "effect": list(move.effect) if move.effect else None,
        "PP": move.pp,
    }


def _as_int(value, label: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{label} must be a number")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"{label} must be a whole number")
        value = int(value)
    return value


def _candidate_from_obj(obj: dict) -> MoveDef:
    missing = [key for key in _REQUIRED_FIELDS if key not in obj]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    if not isinstance(obj["name"], str) or not obj["name"].strip():
        raise ValueError("name must be a non-empty string")
    if not isinstance(obj["type"], str):
        raise ValueError("type must be a string")
    if not isinstance(obj["category"], str):
        raise ValueError("category must be a string")
    effect = obj["effect"]
    if effect is not None:
        if not isinstance(effect, list) or len(effect) != 2 or not isinstance(effect[0], str):
            raise ValueError("effect must be null or [name, chance]")
        effect = (effect[0], _as_int(effect[1], "effect chance"))
    return MoveDef(
        name=obj["name"].strip(),
        move_type=obj["type"],
        power=_as_int(obj["power"], "power"),
        accuracy=_as_int(obj["accuracy"], "accuracy"),
        category=obj["category"],
        pp=_as_int(obj["PP"], "PP"),
        effect=effect,
    )


def parse_move_array(raw: str, expected_count: int) -> list[MoveDef]:
    """Strict parse of a generation reply: a JSON array (bare or fenced) of
    exactly ``expected_count`` complete move objects.

    On failure the raised ``ParseFailure`` carries per-element diagnostics and
    whatever elements did parse, so exhausted retries can still salvage them.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise ParseFailure("empty response")
    candidates = [raw.strip()]
    candidates.extend(m.strip() for m in _FENCE_RE.findall(raw))
    data = None
    for candidate in candidates:
        try:
            value = json.loads(candidate)
        except (ValueError, RecursionError):
            continue
        if isinstance(value, list):
            data = value
            break
    if data is None:
        raise ParseFailure("expected a JSON array")

    moves: list[MoveDef] = []
    diagnostics: list[str] = []
    for i, element in enumerate(data):
        if not isinstance(element, dict):
            diagnostics.append(f"element #{i}: not an object")
            continue
        try:
            moves.append(_candidate_from_obj(element))
        except ValueError as exc:
            diagnostics.append(f"element #{i}: {exc}")
    if len(data) != expected_count:
        raise ParseFailure(
            f"count mismatch: got {len(data)}, expected {expected_count}",
            diagnostics=diagnostics,
            salvaged=moves,
        )
    if diagnostics:
        raise ParseFailure(
            f"{len(diagnostics)} invalid element(s)",
            diagnostics=diagnostics,
            salvaged=moves,
        )
    return moves


@dataclass
class GenerationOutcome:
    pokemon: PokemonSpec
    model: str
    batch_size: int
    requested: int
    candidates: list[MoveDef] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: int = 0
    retries_used: int = 0

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


def generate_moves(
    gateway,
    ctx: GenerationContext,
    model: str,
    retries: int = 3,
    max_output_tokens: int = 2048,
) -> GenerationOutcome:
    """One generation trial: call, parse, retry on failure, salvage at the end."""
    system, user = build_generation_prompt(ctx)
    outcome = GenerationOutcome(
        pokemon=ctx.pokemon, model=model, batch_size=ctx.batch_size, requested=ctx.batch_size
    )
    salvaged: list[MoveDef] = []
    prompt = user
    failures = 0
    while failures <= retries:
        try:
            result = gateway.complete(
                CompletionRequest(
                    model=model,
                    system_prompt=system,
                    user_prompt=prompt,
                    max_output_tokens=max_output_tokens,
                )
            )
        except GatewayError as exc:
            failures += 1
            outcome.failures.append(f"provider error: {exc}")
            prompt = user
            continue
        outcome.prompt_tokens += result.prompt_tokens
        outcome.completion_tokens += result.completion_tokens
        outcome.latency_ms += result.latency_ms
        try:
            outcome.candidates = parse_move_array(result.text, ctx.batch_size)
            outcome.retries_used = failures
            return outcome
        except ParseFailure as exc:
            failures += 1
            salvaged = list(exc.salvaged)
            outcome.failures.append(exc.reason)
            outcome.failures.extend(exc.diagnostics)
            prompt = (
                user
                + f"\n\nYour previous response was invalid: {exc.reason}. "
                + "Return ONLY the JSON array in the required format."
            )
    outcome.candidates = salvaged
    outcome.retries_used = retries
    return outcome


# ---------------------------------------------------------------------------
# Candidate dumps (JSONL): one line per parsed candidate or per failed trial


def outcome_to_lines(outcome: GenerationOutcome, trial: int) -> list[dict]:
    base = {
        "pokemon": outcome.pokemon.name,
        "model": outcome.model,
        "batch_size": outcome.batch_size,
        "trial": trial,
        "requested": outcome.requested,
        "tokens": {
            "prompt_tokens": outcome.prompt_tokens,
            "completion_tokens": outcome.completion_tokens,
        },
        "retries_used": outcome.retries_used,
    }
    lines = []
    for move in outcome.candidates:
        lines.append({**base, "candidate": render_candidate(move), "failure": None})
    if outcome.failures:
        lines.append({**base, "candidate": None, "failure": "; ".join(outcome.failures)})
    if not lines:  # zero candidates and, unusually, zero recorded failures
        lines.append({**base, "candidate": None, "failure": "no candidates"})
    return lines


def outcomes_from_lines(lines: list[dict], roster: dict[str, PokemonSpec]) -> list[GenerationOutcome]:
    """Rebuild per-trial outcomes from a candidate dump."""
    grouped: dict[tuple, GenerationOutcome] = {}
    seen_tokens: set[tuple] = set()
    for line in lines:
        key = (line["model"], line["pokemon"], line["trial"])
        if key not in grouped:
            name = line["pokemon"]
            if name not in roster:
                raise ValueError(f"dump references unknown roster member {name!r}")
            grouped[key] = GenerationOutcome(
                pokemon=roster[name],
                model=line["model"],
                batch_size=line["batch_size"],
                requested=line.get("requested", line["batch_size"]),
            )
        outcome = grouped[key]
        if key not in seen_tokens:
            tokens = line.get("tokens") or {}
            outcome.prompt_tokens = tokens.get("prompt_tokens", 0)
            outcome.completion_tokens = tokens.get("completion_tokens", 0)
            outcome.retries_used = line.get("retries_used", 0)
            seen_tokens.add(key)
        if line.get("candidate"):
            obj = line["candidate"]
            effect = obj.get("effect")
            outcome.candidates.append(
                MoveDef(
                    name=obj["name"],
                    move_type=obj["type"],
                    power=int(obj["power"]),
                    accuracy=int(obj["accuracy"]),
                    category=obj["category"],
                    pp=int(obj["PP"]),
                    effect=(effect[0], int(effect[1])) if effect else None,
                )
            )
        if line.get("failure"):
            outcome.failures.append(line["failure"])
    return [grouped[key] for key in sorted(grouped)]
