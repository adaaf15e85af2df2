"""End-to-end command-line workflows and exit codes."""
import json

import pytest

from ccsched import cli


def write_scenario(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def two_ap_scenario(tmp_path):
    return write_scenario(tmp_path, {"topology": {"builtin": "two_ap"}})


def test_enumerate_solve_pipeline(tmp_path, two_ap_scenario, capsys):
    atoms_path = str(tmp_path / "atoms.csv")
    assert cli.main(["enumerate", "--scenario", two_ap_scenario,
                     "--out", atoms_path]) == 0
    assert "11 maximal rate vectors" in capsys.readouterr().out

    sol_path = str(tmp_path / "pf.json")
    assert cli.main(["solve", "--atoms", atoms_path, "--objective", "pf",
                     "--out", sol_path]) == 0
    doc = json.loads((tmp_path / "pf.json").read_text())
    assert doc["geometric_mean"] == pytest.approx(0.46, abs=0.01)
    assert doc["goodput"] == pytest.approx(
        [0.62, 0.25, 0.42, 0.83, 0.42, 0.42], abs=0.01
    )

    hf_path = str(tmp_path / "hf.json")
    assert cli.main(["solve", "--atoms", atoms_path, "--objective", "hf",
                     "--out", hf_path]) == 0
    hf = json.loads((tmp_path / "hf.json").read_text())
    assert hf["min_rate"] == pytest.approx(3 / 7, abs=0.005)


def test_simulate_and_report(tmp_path, capsys):
    scenario = write_scenario(
        tmp_path,
        {
            "topology": {"builtin": "two_ap"},
            "scheduler": "exact",
            "slots": 300,
            "v_param": 50,
        },
    )
    trace = str(tmp_path / "trace.csv")
    summary = str(tmp_path / "summary.json")
    assert cli.main(["simulate", "--scenario", scenario, "--out", trace,
                     "--summary", summary]) == 0
    docs = json.loads((tmp_path / "summary.json").read_text())
    assert docs[0]["scheduler"] == "exact"
    header = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert header == "slot,user_id,inst_rate,goodput,queue"

    out_dir = str(tmp_path / "report")
    assert cli.main(["report", "--summary", summary, "--trace", trace,
                     "--out-dir", out_dir]) == 0
    produced = {p.name for p in (tmp_path / "report").iterdir()}
    assert "summary_trial0_cdf.csv" in produced
    assert "trace_trajectory.csv" in produced


def test_sweep_command(tmp_path):
    scenario = write_scenario(
        tmp_path,
        {
            "topology": {"mode": "hex", "rings": 0, "radius": 1.0,
                         "r_trans": 1.0, "r_inter": 1.2},
            "users": {"ppp_density": 1.5},
            "cache": {"profiles": 5, "gamma": "1/5"},
            "scheduler": "heuristic",
            "slots": 50,
            "master_seed": 3,
        },
    )
    out = str(tmp_path / "table.csv")
    assert cli.main(["sweep", "--scenario", scenario, "--var", "L",
                     "--values", "1,5,7", "--out", out]) == 0
    rows = (tmp_path / "table.csv").read_text().splitlines()
    assert rows[0].startswith("variable,value,scheduler")
    assert any(",7," in row and "replication" not in row for row in rows)


def test_invalid_scenario_exit_code(tmp_path, capsys):
    bad = write_scenario(tmp_path, {"topology": {"builtin": "two_ap"},
                                    "objective": "maximize-vibes"})
    assert cli.main(["simulate", "--scenario", bad]) == cli.EXIT_INVALID
    assert "invalid scenario" in capsys.readouterr().err


def test_cap_exceeded_exit_code(tmp_path, capsys):
    scenario = write_scenario(
        tmp_path,
        {
            "topology": {"mode": "hex", "rings": 1, "radius": 1.0,
                         "r_trans": 1.0, "r_inter": 1.2},
            "users": {"ppp_density": 4.0},
            "cache": {"profiles": 4, "gamma": "1/2"},
            "scheduler": "exact",
            "enumeration_cap": 20,
            "slots": 10,
        },
    )
    assert cli.main(["simulate", "--scenario", scenario]) == cli.EXIT_CAP
    assert "cap" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert cli.main(["simulate", "--scenario",
                     str(tmp_path / "nope.json")]) == cli.EXIT_INVALID


def test_static_scenario_rejects_trace_output(tmp_path):
    scenario = write_scenario(
        tmp_path, {"topology": {"builtin": "two_ap"}, "scheduler": "static"}
    )
    assert cli.main(["simulate", "--scenario", scenario,
                     "--out", str(tmp_path / "t.csv")]) == cli.EXIT_INVALID
    assert cli.main(["simulate", "--scenario", scenario,
                     "--summary", str(tmp_path / "s.json")]) == 0
