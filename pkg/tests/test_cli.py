import csv
import json

import pytest

from patrolplan.cli import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, main
from patrolplan.scenario import generate_scenario, load_scenario, save_scenario


@pytest.fixture
def scen_file(tmp_path):
    return str(save_scenario(generate_scenario(2, k=4), tmp_path / "s.json"))


def test_gen(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["gen", "--seed", "5", "--points", "6", "--uavs", "3", "--out", str(out)]) == EXIT_OK
    sc = load_scenario(out)
    assert sc.k == 6 and sc.n_uavs == 3


def test_assign_and_route(tmp_path, scen_file):
    a = tmp_path / "a.csv"
    assert main(["assign", "--scenario", scen_file, "--strategy", "region", "--out", str(a)]) == EXIT_OK
    rows = list(csv.reader(open(a)))
    assert rows[0] == ["point_id", "uav"] and len(rows) == 5
    r = tmp_path / "r.csv"
    assert main(["route", "--scenario", scen_file, "--out", str(r)]) == EXIT_OK
    rows = list(csv.reader(open(r)))
    assert rows[0] == ["uav", "rank", "point_id"]
    assert sorted(int(x[2]) for x in rows[1:]) == [1, 2, 3, 4]


def test_assign_to_stdout(scen_file, capsys):
    assert main(["assign", "--scenario", scen_file]) == EXIT_OK
    assert capsys.readouterr().out.startswith("point_id,uav")


def test_run_and_render(tmp_path, scen_file, capsys):
    out = tmp_path / "run"
    assert main(["run", "--scenario", scen_file, "--slots", "6", "--out", str(out)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["strategy"] == "ebtas" and len(summary["uavs"]) == 2
    for name in ("trajectories.csv", "report.csv", "trajectories.svg", "speed_rate_uav1.svg"):
        assert (out / name).exists()
    (out / "trajectories.svg").unlink()
    assert main(["render", "--scenario", scen_file, "--out", str(out)]) == EXIT_OK
    assert (out / "trajectories.svg").exists()


def test_plan_writes_csv_only(tmp_path, scen_file):
    out = tmp_path / "plan"
    assert main(["plan", "--scenario", scen_file, "--slots", "6", "--strategy", "shortest", "--out", str(out)]) == EXIT_OK
    assert (out / "report.csv").exists() and not (out / "trajectories.svg").exists()


def test_compare(tmp_path, capsys):
    out = tmp_path / "cmp"
    code = main(["compare", "--points", "4", "--seeds", "2", "--slots", "6", "--strategy", "region",
                 "--strategy", "shortest", "--out", str(out)])
    assert code == EXIT_OK
    agg = json.loads(capsys.readouterr().out)
    assert set(agg) == {"region", "shortest"} and agg["region"]["runs"] == 2
    assert (out / "comparison.csv").exists() and (out / "summary.csv").exists()


def test_bad_scenario_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["assign", "--scenario", str(bad)]) == EXIT_ERROR
    assert "line 1 column" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["assign", "--scenario", str(tmp_path / "nope.json")]) == EXIT_ERROR


def test_bad_slots(scen_file, tmp_path):
    assert main(["plan", "--scenario", scen_file, "--slots", "1", "--out", str(tmp_path / "x")]) == EXIT_ERROR


def test_infeasible_exit_code(scen_file, tmp_path, monkeypatch, capsys):
    import patrolplan.cli as cli
    from patrolplan.trajectory import SegmentInfeasible

    def boom(*a, **k):
        raise SegmentInfeasible("uav 1: segment unprocessable")

    monkeypatch.setattr(cli, "run_strategy", boom)
    assert main(["plan", "--scenario", scen_file, "--out", str(tmp_path / "o")]) == EXIT_INFEASIBLE
    assert "infeasible: uav 1" in capsys.readouterr().err
