import json

import pytest

from minimon.errors import ChartInvariantError, ChartParseError, RosterError, UnknownTypeError
from minimon.model import (
    ALLOWED_MULTIPLIERS,
    MoveDef,
    PokemonSpec,
    StatBlock,
    Team,
    default_chart,
    default_roster,
    effectiveness,
    load_roster,
    load_type_chart,
    pokemon_from_dict,
    pokemon_to_dict,
    validate_roster,
)


class TestEffectiveness:
    def test_quoted_matchups(self):
        chart = default_chart()
        assert effectiveness(chart, "Water", "Fire") == 2.0
        assert effectiveness(chart, "Water", "Grass") == 0.5
        assert effectiveness(chart, "Fire", "Water") == 0.5
        assert effectiveness(chart, "Fire", "Grass") == 2.0

    def test_neutral_default(self):
        assert effectiveness(default_chart(), "Normal", "Normal") == 1.0

    def test_unknown_type_errors(self):
        chart = default_chart()
        with pytest.raises(UnknownTypeError):
            effectiveness(chart, "Dragon", "Fire")
        with pytest.raises(UnknownTypeError):
            effectiveness(chart, "Fire", "Dragon")

    def test_total_over_type_set(self):
        chart = default_chart()
        for attacker in chart.types:
            for defender in chart.types:
                value = effectiveness(chart, attacker, defender)
                assert value in ALLOWED_MULTIPLIERS


class TestLoadTypeChart:
    def test_default_chart_loads(self):
        chart = default_chart()
        assert {"Fire", "Water", "Grass", "Electric", "Flying", "Normal", "Poison"} <= set(chart.types)

    def test_round_trip(self):
        chart = default_chart()
        again = load_type_chart(chart.to_json())
        assert again == chart

    def test_empty_type_list_is_parse_error(self):
        with pytest.raises(ChartParseError):
            load_type_chart(json.dumps({"types": [], "multipliers": []}))

    def test_bad_multiplier_is_invariant_error(self):
        doc = {
            "types": ["Fire", "Water"],
            "multipliers": [{"attacker": "Fire", "defender": "Water", "value": 3.0}],
        }
        with pytest.raises(ChartInvariantError) as err:
            load_type_chart(json.dumps(doc))
        assert "3.0" in str(err.value)

    def test_malformed_json_reports_position(self):
        with pytest.raises(ChartParseError) as err:
            load_type_chart('{"types": [,]}')
        assert err.value.line == 1

    def test_unknown_type_in_multiplier(self):
        doc = {
            "types": ["Fire"],
            "multipliers": [{"attacker": "Fire", "defender": "Ghost", "value": 2.0}],
        }
        with pytest.raises(ChartInvariantError):
            load_type_chart(json.dumps(doc))

    def test_duplicate_pair_rejected(self):
        doc = {
            "types": ["Fire", "Water"],
            "multipliers": [
                {"attacker": "Fire", "defender": "Water", "value": 0.5},
                {"attacker": "Fire", "defender": "Water", "value": 2.0},
            ],
        }
        with pytest.raises(ChartInvariantError):
            load_type_chart(json.dumps(doc))

    def test_immunity_allowed_in_data(self):
        doc = {
            "types": ["Electric", "Ground"],
            "multipliers": [{"attacker": "Electric", "defender": "Ground", "value": 0.0}],
        }
        chart = load_type_chart(json.dumps(doc))
        assert effectiveness(chart, "Electric", "Ground") == 0.0


def _spec(name="Testmon", ptype="Fire", moves=None, **stat_overrides):
    stats = dict(hp=100, atk=80, def_=70, spa=75, spd=65, spe=90)
    stats.update(stat_overrides)
    moves = moves or [MoveDef("Jab", "Normal", 40, 100, "Physical", 30)]
    return PokemonSpec(name=name, ptype=ptype, stats=StatBlock(**stats), moves=tuple(moves))


class TestValidateRoster:
    def test_default_roster_is_valid(self):
        assert validate_roster(list(default_roster()), default_chart()) == []

    def test_four_moves_reported(self):
        moves = [MoveDef(f"M{i}", "Normal", 40, 100, "Physical", 30) for i in range(4)]
        report = validate_roster([_spec(moves=moves)], default_chart())
        assert any("1-3 moves" in entry for entry in report)

    def test_unknown_type_reported(self):
        report = validate_roster([_spec(ptype="Dragon")], default_chart())
        assert any("unknown type 'Dragon'" in entry for entry in report)

    def test_duplicate_names_reported(self):
        report = validate_roster([_spec(), _spec()], default_chart())
        assert any("duplicate name" in entry for entry in report)

    def test_bad_stat_reported(self):
        report = validate_roster([_spec(hp=0)], default_chart())
        assert any("hp" in entry for entry in report)

    def test_bad_move_fields_reported(self):
        bad = MoveDef("Odd", "Normal", -5, 150, "Weird", 0, effect=("burn", 200))
        report = validate_roster([_spec(moves=[bad])], default_chart())
        text = "\n".join(report)
        assert "power" in text
        assert "accuracy" in text
        assert "pp" in text
        assert "category" in text
        assert "burn" in text

    def test_unknown_move_type_reported(self):
        bad = MoveDef("Hex", "Ghost", 40, 100, "Special", 10)
        report = validate_roster([_spec(moves=[bad])], default_chart())
        assert any("unknown type 'Ghost'" in entry for entry in report)


class TestRosterSerialization:
    def test_pokemon_round_trip(self):
        for spec in default_roster():
            assert pokemon_from_dict(pokemon_to_dict(spec)) == spec

    def test_roster_round_trip_through_json(self):
        roster = list(default_roster())
        text = json.dumps([pokemon_to_dict(s) for s in roster])
        assert load_roster(text) == roster

    def test_missing_spa_spd_default_to_atk_def(self):
        raw = {
            "name": "Oldmon",
            "type": "Normal",
            "stats": {"hp": 100, "atk": 81, "def": 62, "spe": 50},
            "moves": [
                {"name": "Jab", "type": "Normal", "power": 40, "accuracy": 100,
                 "category": "Physical", "pp": 30, "effect": None}
            ],
        }
        spec = pokemon_from_dict(raw)
        assert spec.stats.spa == 81
        assert spec.stats.spd == 62

    def test_malformed_roster_raises(self):
        with pytest.raises(RosterError):
            load_roster("not json")
        with pytest.raises(RosterError):
            load_roster(json.dumps({"not": "a list"}))
        with pytest.raises(RosterError):
            load_roster(json.dumps([{"name": "X"}]))


class TestTeam:
    def test_team_size_enforced(self):
        team = Team(members=(_spec("A"), _spec("B")))
        assert any("exactly 3" in p for p in team.problems())

    def test_unique_names_enforced(self):
        team = Team(members=(_spec("A"), _spec("A"), _spec("B")))
        assert any("unique" in p for p in team.problems())

    def test_valid_team(self):
        team = Team(members=(_spec("A"), _spec("B"), _spec("C")))
        assert team.problems() == []
