import json
import random

import pytest

from minimon.errors import ParseFailure
from minimon.forge import (
    GenerationContext,
    build_generation_prompt,
    generate_moves,
    make_context,
    outcome_to_lines,
    outcomes_from_lines,
    parse_move_array,
    render_candidate,
)
from minimon.gateway import Gateway, MockProvider, UsageLedger
from minimon.model import MoveDef, default_chart, default_roster

from helpers import spec, stats

VOLT_BURST_REPLY = json.dumps(
    [
        {
            "name": "Volt Burst",
            "power": 85,
            "accuracy": 70,
            "type": "Electric",
            "category": "Special",
            "effect": ["paralyze", 20],
            "PP": 15,
        }
    ]
)


def electric_ctx(batch_size=1) -> GenerationContext:
    pikachu = next(p for p in default_roster() if p.ptype == "Electric")
    return make_context(pikachu, default_chart(), batch_size)


def valid_batch_reply(n: int) -> str:
    moves = []
    for i in range(n):
        moves.append(
            {
                "name": f"Gen Move {i}",
                "power": 60 + i,
                "accuracy": 95,
                "type": "Electric",
                "category": "Special",
                "effect": None,
                "PP": 20,
            }
        )
    return json.dumps(moves)


class TestGenerationContext:
    def test_matchups_derived_from_chart(self):
        ctx = electric_ctx()
        assert set(ctx.advantageous_matchups) == {"Water", "Flying"}

    def test_batch_size_validated(self):
        pikachu = next(p for p in default_roster() if p.ptype == "Electric")
        with pytest.raises(ValueError):
            make_context(pikachu, default_chart(), 0)


class TestBuildGenerationPrompt:
    def test_system_contains_ranges(self):
        system, _ = build_generation_prompt(electric_ctx())
        assert "Power: 15-150" in system
        assert "PP: 5-40" in system
        assert "Return ONLY a valid JSON array" in system

    def test_user_requests_batch_size(self):
        _, user = build_generation_prompt(electric_ctx(batch_size=4))
        assert "exactly 4 moves" in user

    def test_user_states_special_preference_for_high_spa(self):
        _, user = build_generation_prompt(electric_ctx())
        assert "Special moves are preferred" in user

    def test_user_states_physical_preference_for_high_atk(self):
        bruiser = spec("Bruiser", ptype="Normal", st=stats(atk=120, spa=40))
        ctx = make_context(bruiser, default_chart(), 1)
        _, user = build_generation_prompt(ctx)
        assert "Physical moves are preferred" in user

    def test_user_lists_matchups(self):
        _, user = build_generation_prompt(electric_ctx())
        assert "Water" in user and "Flying" in user


class TestParseMoveArray:
    def test_volt_burst_example(self):
        moves = parse_move_array(VOLT_BURST_REPLY, 1)
        assert moves == [
            MoveDef(
                name="Volt Burst",
                move_type="Electric",
                power=85,
                accuracy=70,
                category="Special",
                pp=15,
                effect=("paralyze", 20),
            )
        ]

    def test_fenced_array(self):
        moves = parse_move_array(f"```json\n{valid_batch_reply(2)}\n```", 2)
        assert len(moves) == 2

    def test_count_mismatch(self):
        with pytest.raises(ParseFailure) as err:
            parse_move_array(valid_batch_reply(3), 4)
        assert "count mismatch" in str(err.value)
        assert len(err.value.salvaged) == 3

    def test_missing_field_named(self):
        broken = json.loads(valid_batch_reply(1))
        del broken[0]["PP"]
        with pytest.raises(ParseFailure) as err:
            parse_move_array(json.dumps(broken), 1)
        assert any("PP" in d for d in err.value.diagnostics)

    def test_object_instead_of_array(self):
        with pytest.raises(ParseFailure) as err:
            parse_move_array('{"name": "X"}', 1)
        assert "array" in str(err.value)

    def test_prose_is_rejected(self):
        with pytest.raises(ParseFailure):
            parse_move_array("Here are some great moves for you!", 1)

    def test_bad_effect_shape(self):
        broken = json.loads(valid_batch_reply(1))
        broken[0]["effect"] = ["poison"]
        with pytest.raises(ParseFailure) as err:
            parse_move_array(json.dumps(broken), 1)
        assert any("effect" in d for d in err.value.diagnostics)

    def test_non_integral_number_rejected(self):
        broken = json.loads(valid_batch_reply(1))
        broken[0]["power"] = 60.5
        with pytest.raises(ParseFailure):
            parse_move_array(json.dumps(broken), 1)

    def test_integral_float_accepted(self):
        tweaked = json.loads(valid_batch_reply(1))
        tweaked[0]["power"] = 60.0
        moves = parse_move_array(json.dumps(tweaked), 1)
        assert moves[0].power == 60

    def test_salvages_valid_elements(self):
        batch = json.loads(valid_batch_reply(4))
        del batch[2]["name"]
        with pytest.raises(ParseFailure) as err:
            parse_move_array(json.dumps(batch), 4)
        assert len(err.value.salvaged) == 3

    def test_field_deletion_fuzz_never_accepts_incomplete(self):
        rng = random.Random(7)
        fields = ["name", "power", "accuracy", "type", "category", "effect", "PP"]
        for _ in range(300):
            batch = json.loads(valid_batch_reply(1))
            for field in rng.sample(fields, rng.randint(1, len(fields))):
                del batch[0][field]
            with pytest.raises(ParseFailure):
                parse_move_array(json.dumps(batch), 1)

    def test_round_trip_render_and_parse(self):
        original = parse_move_array(VOLT_BURST_REPLY, 1)[0]
        again = parse_move_array(json.dumps([render_candidate(original)]), 1)[0]
        assert again == original


class TestGenerateMoves:
    def test_valid_four_array(self):
        gateway = Gateway([MockProvider([valid_batch_reply(4)])])
        outcome = generate_moves(gateway, electric_ctx(batch_size=4), model="mock")
        assert len(outcome.candidates) == 4
        assert outcome.failures == []
        assert outcome.retries_used == 0

    def test_prose_then_valid_counts_one_retry(self):
        gateway = Gateway([MockProvider(["let me think about this...", valid_batch_reply(4)])])
        outcome = generate_moves(gateway, electric_ctx(batch_size=4), model="mock")
        assert len(outcome.candidates) == 4
        assert outcome.retries_used == 1
        assert outcome.failures  # the first failure is still on record

    def test_all_malformed_records_failure(self):
        gateway = Gateway([MockProvider(["nope"] * 10)])
        outcome = generate_moves(gateway, electric_ctx(batch_size=4), model="mock")
        assert outcome.candidates == []
        assert outcome.failures
        assert outcome.retries_used == 3

    def test_partial_batch_salvaged_after_retries(self):
        batch = json.loads(valid_batch_reply(4))
        del batch[1]["power"]
        reply = json.dumps(batch)
        gateway = Gateway([MockProvider([reply] * 10)])
        outcome = generate_moves(gateway, electric_ctx(batch_size=4), model="mock")
        assert len(outcome.candidates) == 3
        assert outcome.failures

    def test_telemetry_matches_ledger_delta(self):
        ledger = UsageLedger()
        gateway = Gateway(
            [MockProvider(["garbage", valid_batch_reply(1)])], ledger=ledger
        )
        before = ledger.summary("mock")["total_tokens"]
        outcome = generate_moves(gateway, electric_ctx(), model="mock")
        after = ledger.summary("mock")["total_tokens"]
        assert outcome.total_tokens == after - before

    def test_transport_errors_recorded(self):
        gateway = Gateway([MockProvider([{"error": "transport"}, valid_batch_reply(1)])])
        outcome = generate_moves(gateway, electric_ctx(), model="mock")
        assert len(outcome.candidates) == 1
        assert any("provider error" in f for f in outcome.failures)


class TestDumpRoundTrip:
    def test_lines_round_trip(self):
        gateway = Gateway([MockProvider([valid_batch_reply(2), "junk"] , cycle=True)])
        outcomes = [
            generate_moves(gateway, electric_ctx(batch_size=2), model="mock"),
        ]
        lines = []
        for i, outcome in enumerate(outcomes):
            lines.extend(outcome_to_lines(outcome, trial=i))
        roster = {p.name: p for p in default_roster()}
        rebuilt = outcomes_from_lines(lines, roster)
        assert len(rebuilt) == 1
        assert rebuilt[0].candidates == outcomes[0].candidates
        assert rebuilt[0].requested == outcomes[0].requested
        assert rebuilt[0].prompt_tokens == outcomes[0].prompt_tokens

    def test_failed_trial_keeps_requested_count(self):
        gateway = Gateway([MockProvider(["junk"] * 4)])
        outcome = generate_moves(gateway, electric_ctx(batch_size=4), model="mock")
        lines = outcome_to_lines(outcome, trial=0)
        assert len(lines) == 1
        assert lines[0]["candidate"] is None
        assert lines[0]["requested"] == 4
