import json

import pytest

from chainplace.cli import main
from chainplace.io import document_to_instance, dumps, instance_to_document, plan_to_document
from chainplace.model import PlacementPlan
from chainplace.scenario import ScenarioSpec, generate
from chainplace.solver import solve_exact


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


TINY = [
    "--servers", "2", "--users", "1", "--existing", "1", "--new", "1",
    "--set", "vnf_types=2", "--set", "chain_length_range=[1,2]",
]


@pytest.fixture
def tiny_file(tmp_path, capsys):
    path = tmp_path / "tiny.json"
    code, _, _ = run(capsys, "generate", *TINY, "--seed", "5", "-o", str(path))
    assert code == 0
    return path


class TestGenerate:
    def test_scenario_row_has_six_requests(self, tmp_path, capsys):
        path = tmp_path / "s1.json"
        code, _, _ = run(capsys, "generate", "--scenario", "1", "--seed", "3", "-o", str(path))
        assert code == 0
        doc = json.loads(path.read_text())
        assert len(doc["requests"]) == 6
        assert doc["format_version"] == "1"

    def test_repeat_runs_are_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(capsys, "generate", *TINY, "--seed", "5", "-o", str(a))
        run(capsys, "generate", *TINY, "--seed", "5", "-o", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_single_new_request_offline_instance(self, capsys):
        code, out, _ = run(
            capsys, "generate", "--servers", "2", "--users", "1",
            "--existing", "0", "--new", "1", "--seed", "1",
        )
        assert code == 0
        doc = json.loads(out)
        assert len(doc["requests"]) == 1
        assert doc["snapshot"]["deployed"] == []

    def test_env_seed_is_used(self, tmp_path, capsys, monkeypatch):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        monkeypatch.setenv("CHAINPLACE_SEED", "5")
        run(capsys, "generate", *TINY, "-o", str(a))
        monkeypatch.delenv("CHAINPLACE_SEED")
        run(capsys, "generate", *TINY, "--seed", "5", "-o", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestSolve:
    def test_solve_writes_report_and_exits_zero(self, tiny_file, capsys):
        code, out, _ = run(capsys, "solve", str(tiny_file))
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "optimal"
        assert doc["stats"]["wall_time_s"] == 0.0
        assert set(doc["breakdown"]["micro"]) == {
            "hosting_delta", "migration", "instantiation", "routing_delta", "total",
        }

    def test_oracle_flag_verifies_agreement(self, tiny_file, capsys):
        code, out, _ = run(capsys, "solve", str(tiny_file), "--oracle")
        assert code == 0
        assert json.loads(out)["oracle_match"] is True

    def test_export_mps_writes_model_not_solution(self, tiny_file, tmp_path, capsys):
        target = tmp_path / "model.mps"
        code, _, _ = run(capsys, "solve", str(tiny_file), "--export", "mps", "-o", str(target))
        assert code == 0
        text = target.read_text()
        assert text.startswith("* chainplace MPS export")
        assert "ENDATA" in text

    def test_export_lp(self, tiny_file, capsys):
        code, out, _ = run(capsys, "solve", str(tiny_file), "--export", "lp")
        assert code == 0
        assert out.startswith("\\ chainplace LP export") and out.rstrip().endswith("End")

    def test_infeasible_instance_exits_two(self, tmp_path, capsys):
        inst = generate(
            ScenarioSpec(seed=5, n_servers=2, n_user_groups=1,
                         existing_requests=0, new_requests=1,
                         overrides={"vnf_types": 1, "chain_length_range": [1, 1],
                                    "delay_budget_ms_range": [0, 0]})
        )
        path = tmp_path / "doomed.json"
        path.write_text(dumps(instance_to_document(inst)))
        code, _, _ = run(capsys, "solve", str(path))
        assert code == 2

    def test_unreadable_instance_exits_one(self, tmp_path, capsys):
        path = tmp_path / "garbage.json"
        path.write_text("{}")
        code, _, _ = run(capsys, "solve", str(path))
        assert code == 1


class TestCompare:
    def test_range_produces_rows_per_scenario_and_case(self, capsys):
        code, out, _ = run(
            capsys, "compare", "--scenario", "1..3", "--reduced", "--seed", "3",
            "--set", "vnf_types=2",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert len(lines) == 1 + 6
        for line in lines[1:]:
            fields = line.split(",")
            assert fields[3] in ("online", "no_reuse")

    def test_dominance_in_csv(self, capsys):
        code, out, _ = run(capsys, "compare", "--scenario", "3", "--reduced", "--seed", "3")
        assert code == 0
        header, online, scratch = out.strip().split("\n")
        assert int(online.split(",")[4]) <= int(scratch.split(",")[4])

    def test_reruns_are_byte_identical(self, capsys):
        args = ("compare", "--scenario", "3", "--reduced", "--seed", "3")
        _, first, _ = run(capsys, *args)
        _, second, _ = run(capsys, *args)
        assert first == second

    def test_json_format(self, capsys):
        code, out, _ = run(
            capsys, "compare", "--scenario", "2", "--reduced", "--seed", "3",
            "--format", "json",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["reports"][0]["scenario"] == 2
        assert doc["reports"][0]["gap_micro"] >= 0


class TestCheck:
    def test_solver_plan_checks_out(self, tiny_file, tmp_path, capsys):
        instance = document_to_instance(json.loads(tiny_file.read_text()))
        result = solve_exact(instance)
        plan_path = tmp_path / "plan.json"
        plan_path.write_text(dumps(plan_to_document(result.plan)))
        code, out, _ = run(capsys, "check", str(tiny_file), str(plan_path))
        assert code == 0
        doc = json.loads(out)
        assert doc["feasible"] is True
        assert doc["breakdown"]["micro"]["total"] == result.breakdown.total

    def test_doubled_content_server_is_reported(self, tiny_file, tmp_path, capsys):
        instance = document_to_instance(json.loads(tiny_file.read_text()))
        plan = solve_exact(instance).plan
        rid = instance.requests[0].id
        other = next(s for s in instance.network.servers
                     if (rid, s) not in plan.content_server)
        doubled = PlacementPlan(
            content_server=plan.content_server | {(rid, other)},
            deployment=plan.deployment,
            assignment=plan.assignment,
            routes=plan.routes,
        )
        plan_path = tmp_path / "plan.json"
        plan_path.write_text(dumps(plan_to_document(doubled)))
        code, out, _ = run(capsys, "check", str(tiny_file), str(plan_path))
        assert code == 2
        doc = json.loads(out)
        assert any(v["constraint"] == "6" for v in doc["violations"])


class TestUsage:
    def test_unknown_subcommand_exits_one(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 1

    def test_bad_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["solve", "--bogus"])
        assert err.value.code == 1
