"""Dual move evaluation: deterministic balance checking plus an LLM judge.

The deterministic side is a pure function from (move, owner, chart) to a
report of coded findings and a 0-100 score; it never calls out. The judge
side prompts a model for creativity/originality on a 0-10 scale, keeps the
raw numbers, and reports halved 0-5 values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from statistics import fmean

from .agents import extract_json_object, load_prompt
from .errors import GatewayError, JudgeFailure, ParseFailure
from .forge import GenerationOutcome, render_candidate
from .gateway import CompletionRequest
from .model import CATEGORIES, EFFECT_NAMES, MoveDef, PokemonSpec, TypeChart

POWER_RANGE = (15, 150)
ACCURACY_RANGE = (30, 100)
PP_RANGE = (5, 40)
EFFECT_CHANCE_RANGE = (10, 30)
LOW_ACCURACY_BAND = (30, 50)  # inclusive-exclusive; legal but suspicious
BALANCED_SCORE_MIN = 70
WARNING_WEIGHT = 10

VIOLATION_CODES = (
    "power-out-of-range",
    "accuracy-out-of-range",
    "pp-out-of-range",
    "effect-chance-out-of-range",
    "category-invalid",
    "effect-unknown",
    "type-mismatch",
)
WARNING_CODES = (
    "expected-power-high",
    "effect-power-high",
    "pp-high-for-power",
    "pp-high-for-very-high-power",
    "low-accuracy-band",
    "category-stat-mismatch",
)


@dataclass(frozen=True)
class EvalConfig:
    """The tunable trade-off limits; everything else is a hard rule."""

    expected_power_limit: float = 105.0
    expected_power_limit_with_effect: float = 90.0


DEFAULT_EVAL_CONFIG = EvalConfig()


@dataclass(frozen=True)
class Finding:
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


@dataclass
class EvaluationReport:
    violations: list[Finding]
    warnings: list[Finding]
    score: int
    balanced: bool

    def to_dict(self) -> dict:
        return {
            "violations": [f.to_dict() for f in self.violations],
            "warnings": [f.to_dict() for f in self.warnings],
            "score": self.score,
            "balanced": self.balanced,
        }


@lru_cache(maxsize=1)
def default_complementary() -> dict[str, tuple[str, ...]]:
    text = resources.files("minimon.data").joinpath("complementary_types.json").read_text("utf-8")
    return {k: tuple(v) for k, v in json.loads(text).items()}


def evaluate_move(
    move: MoveDef,
    owner: PokemonSpec,
    chart: TypeChart,
    config: EvalConfig = DEFAULT_EVAL_CONFIG,
    complementary: dict[str, tuple[str, ...]] | None = None,
) -> EvaluationReport:
    """Pure rule check: hard-bound violations, soft-trade-off warnings, 0-100 score."""
    complementary = default_complementary() if complementary is None else complementary
    violations: list[Finding] = []
    warnings: list[Finding] = []

    def violation(code: str, message: str) -> None:
        violations.append(Finding(code, message))

    def warning(code: str, message: str) -> None:
        warnings.append(Finding(code, message))

    if not POWER_RANGE[0] <= move.power <= POWER_RANGE[1]:
        violation("power-out-of-range", f"power {move.power} outside {list(POWER_RANGE)}")
    if not ACCURACY_RANGE[0] <= move.accuracy <= ACCURACY_RANGE[1]:
        violation("accuracy-out-of-range", f"accuracy {move.accuracy} outside {list(ACCURACY_RANGE)}")
    if not PP_RANGE[0] <= move.pp <= PP_RANGE[1]:
        violation("pp-out-of-range", f"PP {move.pp} outside {list(PP_RANGE)}")
    if move.effect is not None:
        effect_name, chance = move.effect
        if not EFFECT_CHANCE_RANGE[0] <= chance <= EFFECT_CHANCE_RANGE[1]:
            violation(
                "effect-chance-out-of-range",
                f"effect chance {chance} outside {list(EFFECT_CHANCE_RANGE)}",
            )
        if effect_name not in EFFECT_NAMES:
            violation("effect-unknown", f"unknown effect {effect_name!r}")
    if move.category not in CATEGORIES:
        violation("category-invalid", f"category {move.category!r} not in {list(CATEGORIES)}")
    allowed_types = (owner.ptype,) + complementary.get(owner.ptype, ())
    if move.move_type not in allowed_types:
        violation(
            "type-mismatch",
            f"type {move.move_type!r} is neither {owner.ptype!r} nor complementary "
            f"({', '.join(complementary.get(owner.ptype, ())) or 'none'})",
        )

    expected_power = move.power * move.accuracy / 100.0
    if expected_power > config.expected_power_limit:
        warning(
            "expected-power-high",
            f"expected power {expected_power:.1f} exceeds {config.expected_power_limit:g}",
        )
    if move.effect is not None and expected_power > config.expected_power_limit_with_effect:
        warning(
            "effect-power-high",
            f"expected power {expected_power:.1f} exceeds "
            f"{config.expected_power_limit_with_effect:g} for an effect move",
        )
    if move.power >= 100 and move.pp > 15:
        warning("pp-high-for-power", f"power {move.power} should cap PP at 15, got {move.pp}")
    if move.power >= 130 and move.pp > 10:
        warning("pp-high-for-very-high-power", f"power {move.power} should cap PP at 10, got {move.pp}")
    if LOW_ACCURACY_BAND[0] <= move.accuracy < LOW_ACCURACY_BAND[1]:
        warning("low-accuracy-band", f"accuracy {move.accuracy} sits in the suspect 30-49 band")
    if move.category in CATEGORIES:
        stats = owner.stats
        stronger = "Physical" if stats.atk > stats.spa else "Special" if stats.spa > stats.atk else None
        if stronger is not None and move.category != stronger:
            warning(
                "category-stat-mismatch",
                f"{move.category} move on a battler whose stronger attacking stat is {stronger}",
            )

    score = max(0, 100 - WARNING_WEIGHT * len(warnings))
    return EvaluationReport(
        violations=violations,
        warnings=warnings,
        score=score,
        balanced=not violations and score >= BALANCED_SCORE_MIN,
    )


# ---------------------------------------------------------------------------
# LLM judge


@dataclass(frozen=True)
class JudgeScore:
    creativity: float   # raw 0-10
    originality: float  # raw 0-10
    overall: float      # the judge's own overall, raw 0-10
    verdict: str        # approve | revise | reject
    deviation: float    # |overall - mean(creativity, originality)|
    raw_scale: str = "0-10"

    @property
    def creativity_normalized(self) -> float:
        return self.creativity / 2.0

    @property
    def originality_normalized(self) -> float:
        return self.originality / 2.0

    @property
    def overall_normalized(self) -> float:
        return self.overall / 2.0

    @property
    def recomputed_overall(self) -> float:
        return (self.creativity + self.originality) / 2.0

    def to_dict(self) -> dict:
        return {
            "creativity": self.creativity,
            "originality": self.originality,
            "overall": self.overall,
            "verdict": self.verdict,
            "deviation": self.deviation,
            "raw_scale": self.raw_scale,
            "normalized": {
                "creativity": self.creativity_normalized,
                "originality": self.originality_normalized,
                "overall": self.overall_normalized,
            },
        }


def build_judge_prompt(move: MoveDef) -> tuple[str, str]:
    system = load_prompt("judge_system.txt").format()
    user = "Evaluate this move:\n" + json.dumps(render_candidate(move), indent=2)
    return system, user


def _parse_judge_reply(raw: str) -> JudgeScore:
    obj = extract_json_object(raw)
    if obj is None:
        raise ParseFailure("no JSON object in judge reply")
    lowered = {str(k).lower(): v for k, v in obj.items()}
    missing = [k for k in ("creativity", "originality", "overall_score", "verdict") if k not in lowered]
    if missing:
        raise ParseFailure(f"judge reply missing: {', '.join(missing)}")

    def clamp(value, label: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseFailure(f"judge {label} must be a number")
        return min(10.0, max(0.0, float(value)))

    creativity = clamp(lowered["creativity"], "creativity")
    originality = clamp(lowered["originality"], "originality")
    overall = clamp(lowered["overall_score"], "overall_score")
    verdict = str(lowered["verdict"]).strip().lower()
    if verdict not in ("approve", "revise", "reject"):
        raise ParseFailure(f"unknown verdict {lowered['verdict']!r}")
    deviation = abs(overall - (creativity + originality) / 2.0)
    return JudgeScore(
        creativity=creativity,
        originality=originality,
        overall=overall,
        verdict=verdict,
        deviation=deviation,
    )


def judge_move(gateway, move: MoveDef, judge_model: str, max_retries: int = 3) -> JudgeScore:
    """Score a move with the judge model; parse deviations are retried, never patched."""
    system, user = build_judge_prompt(move)
    prompt = user
    failures = 0
    last = "no attempts made"
    while failures <= max_retries:
        try:
            result = gateway.complete(
                CompletionRequest(
                    model=judge_model,
                    system_prompt=system,
                    user_prompt=prompt,
                    max_output_tokens=512,
                )
            )
        except GatewayError as exc:
            failures += 1
            last = f"provider error: {exc}"
            prompt = user
            continue
        try:
            return _parse_judge_reply(result.text)
        except ParseFailure as exc:
            failures += 1
            last = exc.reason
            prompt = user + f"\n\nYour previous response was invalid: {exc.reason}. Return STRICT JSON ONLY."
    raise JudgeFailure(f"judge failed after {max_retries} retries: {last}")


# ---------------------------------------------------------------------------
# Batch statistics


@dataclass
class ModelStats:
    requested: int = 0
    parsed: int = 0
    balanced: int = 0
    judged: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    creativity: list[float] = field(default_factory=list)
    originality: list[float] = field(default_factory=list)
    overall_judge: list[float] = field(default_factory=list)
    overall_recomputed: list[float] = field(default_factory=list)

    @property
    def validity_pct(self) -> float | None:
        return 100.0 * self.parsed / self.requested if self.requested else None

    @property
    def balanced_pct(self) -> float | None:
        return 100.0 * self.balanced / self.requested if self.requested else None

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_dict(self) -> dict:
        mean = lambda xs: fmean(xs) if xs else None
        return {
            "requested": self.requested,
            "parsed": self.parsed,
            "balanced": self.balanced,
            "validity_pct": self.validity_pct,
            "balanced_pct": self.balanced_pct,
            "judged": self.judged,
            "creativity_mean": mean(self.creativity),
            "originality_mean": mean(self.originality),
            "overall_judge_mean": mean(self.overall_judge),
            "overall_recomputed_mean": mean(self.overall_recomputed),
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "total_tokens": self.total_tokens,
        }


@dataclass
class BatchStats:
    per_model: dict[str, ModelStats]

    def to_dict(self) -> dict:
        return {model: stats.to_dict() for model, stats in sorted(self.per_model.items())}


def evaluate_batch(
    outcomes: list[GenerationOutcome],
    chart: TypeChart,
    judge_fn=None,
    config: EvalConfig = DEFAULT_EVAL_CONFIG,
) -> BatchStats:
    """Roll generation outcomes into per-model validity/balance/judge statistics.

    ``judge_fn(move, owner) -> JudgeScore | None`` is optional; creativity and
    originality means (reported on the 0-5 scale) cover judged candidates only.
    """
    per_model: dict[str, ModelStats] = {}
    for outcome in outcomes:
        stats = per_model.setdefault(outcome.model, ModelStats())
        stats.requested += outcome.requested
        stats.parsed += len(outcome.candidates)
        stats.prompt_tokens += outcome.prompt_tokens
        stats.completion_tokens += outcome.completion_tokens
        for move in outcome.candidates:
            report = evaluate_move(move, outcome.pokemon, chart, config=config)
            if report.balanced:
                stats.balanced += 1
            if judge_fn is not None:
                score = judge_fn(move, outcome.pokemon)
                if score is not None:
                    stats.judged += 1
                    stats.creativity.append(score.creativity_normalized)
                    stats.originality.append(score.originality_normalized)
                    stats.overall_judge.append(score.overall_normalized)
                    stats.overall_recomputed.append(score.recomputed_overall / 2.0)
    return BatchStats(per_model=per_model)


def render_batch_stats(stats: BatchStats) -> str:
    """Aligned text table, one row per model."""
    headers = ["model", "validity%", "balanced%", "creativity", "originality", "overall", "tokens"]
    rows = []
    fmt_pct = lambda v: f"{v:.1f}" if v is not None else "-"
    fmt_mean = lambda v: f"{v:.2f}" if v is not None else "-"
    for model, ms in sorted(stats.per_model.items()):
        d = ms.to_dict()
        rows.append(
            [
                model,
                fmt_pct(d["validity_pct"]),
                fmt_pct(d["balanced_pct"]),
                fmt_mean(d["creativity_mean"]),
                fmt_mean(d["originality_mean"]),
                fmt_mean(d["overall_judge_mean"]),
                str(d["total_tokens"]),
            ]
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)
