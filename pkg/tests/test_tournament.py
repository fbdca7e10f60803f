import json
from pathlib import Path

import pytest

from minimon.agents import HeuristicAgent, RandomAgent, build_agent
from minimon.gateway import Gateway, MockProvider, UsageLedger
from minimon.model import default_chart
from minimon.tournament import (
    BattleOutcome,
    TournamentReport,
    TournamentSpec,
    render_report,
    run_tournament,
)

from helpers import PassiveAgent


def make_spec(entrants=("heuristic", "random"), battles=4, seed=11, **kwargs):
    return TournamentSpec.from_dict(
        {"entrants": list(entrants), "battles_per_pair": battles, "seed": seed, **kwargs}
    )


def scripted_factory(chart, gateway=None):
    def factory(entrant: str):
        if entrant == "passive":
            return PassiveAgent()
        return build_agent(entrant, chart, gateway)

    return factory


class TestSpec:
    def test_requires_two_entrants(self):
        with pytest.raises(ValueError):
            make_spec(entrants=("random",))

    def test_requires_unique_entrants(self):
        with pytest.raises(ValueError):
            make_spec(entrants=("random", "random"))

    def test_requires_positive_battles(self):
        with pytest.raises(ValueError):
            make_spec(battles=0)

    def test_from_file(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(
            json.dumps({"entrants": ["random", "heuristic"], "battles_per_pair": 2, "seed": 5}),
            encoding="utf-8",
        )
        spec = TournamentSpec.from_file(path)
        assert spec.battles_per_pair == 2


class TestRunTournament:
    def test_strong_beats_passive_ten_zero(self):
        chart = default_chart()
        spec = make_spec(entrants=("heuristic", "passive"), battles=10, seed=3)
        report = run_tournament(spec, agent_factory=scripted_factory(chart), chart=chart)
        assert report.wld("heuristic", "passive") == (10, 0, 0)
        assert report.wld("passive", "heuristic") == (0, 10, 0)

    def test_total_battle_count(self):
        spec = make_spec(entrants=("random", "heuristic", "passive"), battles=2, seed=9)
        report = run_tournament(spec, agent_factory=scripted_factory(default_chart()))
        assert len(report.outcomes) == 6  # C(3,2) * 2

    def test_transpose_identity(self):
        spec = make_spec(entrants=("random", "heuristic", "passive"), battles=4, seed=21)
        report = run_tournament(spec, agent_factory=scripted_factory(default_chart()))
        for a in spec.entrants:
            for b in spec.entrants:
                if a == b:
                    continue
                wins_a, losses_a, draws_a = report.wld(a, b)
                wins_b, losses_b, draws_b = report.wld(b, a)
                assert wins_a == losses_b
                assert losses_a == wins_b
                assert draws_a == draws_b

    def test_mean_turns_symmetric(self):
        spec = make_spec(battles=3, seed=2)
        report = run_tournament(spec, agent_factory=scripted_factory(default_chart()))
        assert report.mean_turns("random", "heuristic") == report.mean_turns("heuristic", "random")

    def test_byte_identical_reports_across_runs(self, tmp_path):
        chart = default_chart()

        def run_once(where):
            ledger = UsageLedger()
            gateway = Gateway(
                [MockProvider(['{"action":"move","value":"Thunderbolt"}', "junk"], cycle=True)],
                ledger=ledger,
            )
            spec = make_spec(entrants=("random", "llm:mock-model"), battles=3, seed=77)
            run_tournament(spec, gateway=gateway, out_dir=where)
            return (where / "report.json").read_bytes(), (where / "report.txt").read_bytes()

        first = run_once(tmp_path / "one")
        second = run_once(tmp_path / "two")
        assert first == second

    def test_token_matrix_consistent_with_ledger(self):
        ledger = UsageLedger()
        gateway = Gateway(
            [MockProvider(["garbage"], cycle=True)],
            ledger=ledger,
        )
        spec = make_spec(entrants=("random", "llm:mock-model"), battles=2, seed=5)
        report = run_tournament(spec, gateway=gateway)
        matrix_total = sum(
            report.tokens(a, b)
            for a in spec.entrants
            for b in spec.entrants
            if a != b
        )
        ledger_total = ledger.summary("mock-model")["total_tokens"]
        assert matrix_total == ledger_total
        assert matrix_total > 0

    def test_resume_skips_completed_battles(self, tmp_path):
        chart = default_chart()
        spec = make_spec(battles=3, seed=13)
        out = tmp_path / "run"
        report1 = run_tournament(spec, agent_factory=scripted_factory(chart), out_dir=out)
        checkpoint = (out / "checkpoint.jsonl").read_text(encoding="utf-8")
        assert len(checkpoint.splitlines()) == 3

        calls = []

        def counting_factory(entrant):
            calls.append(entrant)
            return scripted_factory(chart)(entrant)

        report2 = run_tournament(spec, agent_factory=counting_factory, out_dir=out)
        assert calls == []  # nothing replayed
        assert [o.to_dict() for o in report2.outcomes] == [o.to_dict() for o in report1.outcomes]

    def test_partial_checkpoint_resumes_remainder(self, tmp_path):
        chart = default_chart()
        spec = make_spec(battles=4, seed=13)
        out = tmp_path / "run"
        full = run_tournament(spec, agent_factory=scripted_factory(chart), out_dir=out)
        lines = (out / "checkpoint.jsonl").read_text(encoding="utf-8").splitlines()

        out2 = tmp_path / "resumed"
        out2.mkdir()
        (out2 / "checkpoint.jsonl").write_text("\n".join(lines[:2]) + "\n", encoding="utf-8")
        resumed = run_tournament(spec, agent_factory=scripted_factory(chart), out_dir=out2)
        assert [o.to_dict() for o in resumed.outcomes] == [o.to_dict() for o in full.outcomes]

    def test_failures_recorded_not_fatal(self):
        chart = default_chart()

        class Exploder:
            calls = 0

            def decide(self, view, legal, rng):
                raise RuntimeError("boom")

        def factory(entrant):
            if entrant == "exploder":
                return Exploder()
            return build_agent(entrant, chart, None)

        spec = make_spec(entrants=("exploder", "random"), battles=2, seed=1)
        report = run_tournament(spec, agent_factory=factory)
        assert len(report.failures) == 2
        assert all("boom" in f.failure for f in report.failures)
        assert report.wld("exploder", "random") == (0, 0, 0)

    def test_parallel_matches_sequential(self, tmp_path):
        chart = default_chart()
        spec = make_spec(entrants=("random", "heuristic", "passive"), battles=2, seed=31)
        seq = run_tournament(spec, agent_factory=scripted_factory(chart))
        par = run_tournament(spec, agent_factory=scripted_factory(chart), parallel=4)
        assert render_report(seq, "json") == render_report(par, "json")

    def test_logs_written_per_battle(self, tmp_path):
        spec = make_spec(battles=2, seed=41)
        run_tournament(spec, agent_factory=scripted_factory(default_chart()), out_dir=tmp_path)
        logs = list((tmp_path / "logs").rglob("*.jsonl"))
        assert len(logs) == 2


class TestRenderReport:
    def test_empty_report_renders(self):
        spec = make_spec()
        report = TournamentReport(spec=spec, outcomes=[])
        text = render_report(report, "text")
        assert "W-L-D" in text
        assert "--" in text
        data = json.loads(render_report(report, "json"))
        assert data["battles_completed"] == 0

    def test_text_matrix_shape(self):
        spec = make_spec(entrants=("random", "heuristic"), battles=1, seed=2)
        outcomes = [
            BattleOutcome(pair=("random", "heuristic"), index=0, winner="heuristic", turns=9,
                          tokens={"random": 0, "heuristic": 0}),
        ]
        text = render_report(TournamentReport(spec=spec, outcomes=outcomes), "text")
        assert "0-1-0" in text  # random row vs heuristic column
        assert "1-0-0" in text
        assert "9.0" in text

    def test_unknown_format_rejected(self):
        report = TournamentReport(spec=make_spec(), outcomes=[])
        with pytest.raises(ValueError):
            render_report(report, "yaml")

    def test_golden_text_report(self):
        spec = make_spec(entrants=("heuristic", "random", "passive"), battles=3, seed=2468)
        report = run_tournament(spec, agent_factory=scripted_factory(default_chart()))
        golden = (Path(__file__).parent / "data" / "tournament_report_golden.txt").read_text(
            encoding="utf-8"
        )
        assert render_report(report, "text") == golden
