import os

from src.cli import build_parser, main, spec_from_args


def test_scenarios_command(capsys):
    assert main(["scenarios"]) == 0
    out = capsys.readouterr().out
    assert "steane-cnot" in out and "resource-sweep" in out


def test_run_scenario_writes_reports(tmp_path, capsys):
    code = main(["run", "--scenario", "steane-identity", "--seed", "0", "--out", str(tmp_path)])
    assert code == 0
    assert "PASSED" in capsys.readouterr().out
    written = os.listdir(tmp_path / "steane-identity")
    assert {name.rsplit(".", 1)[1] for name in written} == {"json", "csv", "txt"}


def test_spec_from_circuit_file(tmp_path):
    path = tmp_path / "bell.circ"
    path.write_text("WIRES 2\nH 1\nCNOT 1 2\nOUT 2 2\n")
    args = build_parser().parse_args(["run", "--circuit", str(path), "--s", "1", "--levels", "1",
                                      "--inputs", "0,0", "--adversary", "z-spray", "--corrupt", "3"])
    spec = spec_from_args(args)
    assert spec.scenario == "bell"
    assert (spec.network.s, spec.network.levels) == (1, 1)
    assert spec.inputs == ["0", "0"]
    assert spec.adversary.name == "z-spray" and spec.adversary.corrupt == [3]
    assert spec.seeds == [0]


def test_scenario_overrides_keep_the_rest():
    args = build_parser().parse_args(["run", "--scenario", "steane-cnot", "--seeds", "2", "--backend", "sv"])
    spec = spec_from_args(args)
    assert spec.seeds == [0, 1]
    assert spec.network.backend == "sv" and spec.network.s == 2
    assert spec.inputs == ["+", "0"]


def test_budget_command(tmp_path, capsys):
    path = tmp_path / "t.circ"
    path.write_text("WIRES 1\nT 1\nOUT 1 1\n")
    assert main(["budget", "--circuit", str(path), "--s", "2"]) == 0
    assert "kappa = 8" in capsys.readouterr().out


def test_bad_circuit_is_a_usage_error(tmp_path):
    path = tmp_path / "broken.circ"
    path.write_text("WIRES 1\nTOFFOLI 1\n")
    assert main(["budget", "--circuit", str(path)]) == 2
    assert main(["run", "--circuit", str(tmp_path / "absent.circ"), "--out", str(tmp_path)]) == 2
