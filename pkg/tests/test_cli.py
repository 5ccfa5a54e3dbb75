"""CLI behaviour: exit codes, file outputs, and the summary format."""
import numpy as np
import pytest

from flexsat.cli import main
from flexsat.scenarios import get_builtin
from flexsat.schemas import scenario_to_yaml


def run_cli(*argv) -> int:
    return main(list(argv))


def test_run_writes_csv_and_summary(tmp_path, capsys):
    code = run_cli("run", "C1", "--t-final", "0.5", "--out", str(tmp_path))
    assert code == 0
    out = capsys.readouterr().out
    assert "scenario: C1" in out
    assert "[metrics]" in out
    assert "energy_violations=0" in out
    csv_path = tmp_path / "C1.csv"
    summary_path = tmp_path / "C1_summary.txt"
    assert csv_path.exists() and summary_path.exists()
    header = csv_path.read_text().splitlines()[0]
    assert header.startswith("t,ql1,ql2")
    assert "settle_time=" in summary_path.read_text()


def test_run_metrics_block_parseable(tmp_path, capsys):
    assert run_cli("run", "C1", "--t-final", "0.2", "--out", str(tmp_path)) == 0
    out = capsys.readouterr().out
    block = out.split("[metrics]\n", 1)[1]
    kv = dict(line.split("=", 1) for line in block.strip().splitlines()
              if "=" in line)
    assert kv["scenario"] == "C1"
    assert float(kv["final_time"]) == pytest.approx(0.2)
    assert float(kv["max_abs_u_1"]) <= 1.2
    assert kv["settle_time"] == "inf"


def test_run_no_csv(tmp_path, capsys):
    code = run_cli("run", "C1", "--t-final", "0.1", "--no-csv",
                   "--out", str(tmp_path))
    assert code == 0
    assert not (tmp_path / "C1.csv").exists()
    assert (tmp_path / "C1_summary.txt").exists()


def test_run_env_out_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FLEXSAT_OUT_DIR", str(tmp_path / "envout"))
    assert run_cli("run", "OPENLOOP", "--t-final", "0.1") == 0
    assert (tmp_path / "envout" / "OPENLOOP.csv").exists()


def test_run_unknown_scenario_exit_2(tmp_path, capsys):
    code = run_cli("run", "C9", "--out", str(tmp_path))
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_run_without_ref_exit_2(tmp_path, capsys):
    assert run_cli("run", "--out", str(tmp_path)) == 2


def test_run_bad_actuator_exit_2(tmp_path, capsys):
    code = run_cli("run", "C1", "--actuator", "bogus", "--out", str(tmp_path))
    assert code == 2


def test_run_failing_gains_exit_3(tmp_path, capsys):
    s = get_builtin("C1")
    bad = scenario_to_yaml(s).replace("r_cl:\n  - - 10.0", "r_cl:\n  - - 1.0")
    assert "- - 1.0" in bad
    path = tmp_path / "weak.yaml"
    path.write_text(bad)
    code = run_cli("run", str(path), "--t-final", "0.1", "--out", str(tmp_path))
    assert code == 3
    assert "link damping condition" in capsys.readouterr().err
    # override lets it through
    code2 = run_cli("run", str(path), "--t-final", "0.1", "--out", str(tmp_path),
                    "--override-certificates")
    assert code2 == 0


def test_run_divergence_exit_4(tmp_path, capsys):
    code = run_cli("run", "C1", "--integrator", "euler", "--dt", "0.5",
                   "--t-final", "400", "--out", str(tmp_path))
    assert code == 4
    assert "error:" in capsys.readouterr().err


def test_run_actuator_override_applied(tmp_path, capsys):
    code = run_cli("run", "C3", "--actuator", "deadzone:0.12",
                   "--t-final", "0.5", "--out", str(tmp_path))
    assert code == 0
    assert "actuator: deadzone" in capsys.readouterr().out


def test_run_all(tmp_path, capsys):
    code = run_cli("run", "--all", "--t-final", "0.1", "--out", str(tmp_path))
    assert code == 0
    for name in ("C1", "C2", "C3", "INT", "PI", "OPENLOOP"):
        assert (tmp_path / f"{name}.csv").exists(), name


def test_run_file_scenario(tmp_path, capsys):
    s = get_builtin("C2").with_overrides(t_final=0.2)
    path = tmp_path / "mine.yaml"
    path.write_text(scenario_to_yaml(s))
    code = run_cli("run", "mine", "--scenario-dir", str(tmp_path),
                   "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "C2.csv").exists()


def test_run_malformed_file_exit_2(tmp_path, capsys):
    path = tmp_path / "broken.yaml"
    path.write_text("controller: {type: nonsense}\n")
    assert run_cli("run", str(path), "--out", str(tmp_path)) == 2
    assert "error:" in capsys.readouterr().err


def test_analyze_output(capsys):
    assert run_cli("analyze", "C1") == 0
    out = capsys.readouterr().out
    assert "certificate report for C1" in out
    assert "condition_block = [[3.39141" in out
    assert "overall: PASS" in out


def test_analyze_show_matrices(capsys):
    assert run_cli("analyze", "INT", "--show-matrices") == 0
    out = capsys.readouterr().out
    assert "linearization =" in out
    assert "A_sigma =" in out


def test_analyze_failing_scenario_still_exit_0(capsys):
    # analysis reports FAIL lines but exits cleanly
    assert run_cli("analyze", "C3") == 0
    assert "overall: FAIL" in capsys.readouterr().out


def test_analyze_unknown_exit_2(capsys):
    assert run_cli("analyze", "C9") == 2


def test_list_builtins(capsys):
    assert run_cli("list") == 0
    out = capsys.readouterr().out
    for name in ("C1", "C2", "C3", "INT", "PI", "OPENLOOP"):
        assert name in out
    assert "saturated_integral" in out


def test_list_with_scenario_dir(tmp_path, capsys):
    (tmp_path / "extra.yaml").write_text(scenario_to_yaml(get_builtin("C1")))
    (tmp_path / "broken.yaml").write_text("name: [oops\n")
    assert run_cli("list", "--scenario-dir", str(tmp_path)) == 0
    captured = capsys.readouterr()
    assert "(file)" in captured.out
    assert "(invalid)" in captured.err


def test_csv_from_cli_matches_direct_run(tmp_path, capsys):
    from flexsat.simulation import simulate
    assert run_cli("run", "C1", "--t-final", "0.3", "--out", str(tmp_path)) == 0
    data = np.loadtxt(tmp_path / "C1.csv", delimiter=",", skiprows=1)
    s = get_builtin("C1").with_overrides(t_final=0.3)
    traj = simulate(s.plant, s.controller, s.actuator, s.x0, s.sim)
    assert np.array_equal(data[:, 1:13], traj.states)
