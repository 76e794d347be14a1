import json
import subprocess
import sys

import pytest

from hybridinv.cli import main

INV_ARGS = ["simulate", "--id", "ex_inverter", "--x0", "3.013,0", "--q0", "0", "--horizon", "0.02,2000"]


def test_catalog_listing(capsys):
    assert main(["catalog"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8
    assert lines[0].startswith("ex_finite_escape")


def test_catalog_json(tmp_path):
    out = tmp_path / "cat.json"
    assert main(["catalog", "--json", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert [r["id"] for r in rows][-1] == "ex_inverter"
    assert "compliant" in rows[-1]["variants"]


def test_simulate_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "inv.csv"
    assert main([*INV_ARGS, "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == "t,j,x_1,x_2,x_3,flag"
    assert text.endswith("\n")
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["termination"] == "HorizonReached"
    assert summary["J"] > 0
    assert "HorizonReached" in capsys.readouterr().out


def test_simulate_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*INV_ARGS, "--out", str(a)]) == 0
    assert main([*INV_ARGS, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".json").read_bytes() == b.with_suffix(".json").read_bytes()


def test_simulate_to_stdout(capsys):
    assert main(["simulate", "--id", "ex_wfi_circle", "--horizon", "10,3"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("t,j,x_1,x_2,flag\n")


def test_simulate_overrides(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["simulate", "--id", "ex_wfi_circle", "--horizon", "1,0", "--out", str(out),
                 "solver.dt_max=0.25"]) == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) <= 10


def test_simulate_disturbed_with_constant_disturbance(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["simulate", "--id", "ex_oscillator_disturbed", "--x0", "-0.5,0.1", "--wd", "-0.7853981633974483",
                 "--horizon", "1,1", "--out", str(out)]) == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["jumps"][0]["w_d"] == [pytest.approx(-0.7853981633974483)]


def test_no_solution_exits_1(capsys):
    assert main(["simulate", "--id", "ex_finite_escape", "--x0", "-5,-5"]) == 1
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["simulate", "--id", "nope"],
    ["simulate", "--id", "ex_finite_escape", "--x0", "1,2,3"],
    ["simulate", "--id", "ex_finite_escape", "solver.nonsense=1"],
    ["simulate", "--id", "ex_finite_escape", "dt_max=1"],
    ["check", "--id", "ex_finite_escape", "--theorem", "fi"],
    ["check", "--id", "ex_finite_escape", "--theorem", "fi", "--set", "Z"],
    ["check", "--id", "ex_finite_escape", "--theorem", "ly"],
    ["simulate", "--id", "ex_finite_escape", "--variant", "other"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == 2


def test_check_prints_table_and_writes_json(tmp_path, capsys):
    out, txt = tmp_path / "r.json", tmp_path / "r.txt"
    assert main(["check", "--id", "ex_oscillator_nominal", "--set", "K1", "--theorem", "fi",
                 "--out", str(out), "--text", str(txt)]) == 0
    printed = capsys.readouterr().out
    assert "fi.2" in printed and printed == txt.read_text()
    assert json.loads(out.read_text())["overall"] == "SampledPass"


def test_check_variant_and_mode(capsys):
    assert main(["check", "--id", "ex_finite_escape", "--variant", "restricted", "--set", "K",
                 "--theorem", "fi"]) == 0
    assert main(["check", "--id", "ex_gamma_corner", "--set", "K", "--theorem", "fi", "--mode", "alt"]) == 0
    out = capsys.readouterr().out
    assert "fi.2''s" in out and "Violated" in out


def test_export_then_check_scenario(tmp_path, capsys):
    sc = tmp_path / "gamma.json"
    assert main(["export", "--id", "ex_gamma_corner", "--out", str(sc)]) == 0
    out = tmp_path / "r.json"
    assert main(["check", "--scenario", str(sc), "--set", "K", "--theorem", "fi", "--mode", "alt",
                 "--out", str(out)]) == 0
    verdicts = {e["id"]: e["verdict"] for e in json.loads(out.read_text())["entries"]}
    assert verdicts["fi.2''s"] == "Violated"


def test_bad_scenario_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "dim": 2,\n  "C": {"box": }\n}')
    assert main(["check", "--scenario", str(bad), "--set", "K", "--theorem", "fi"]) == 2
    assert f"{bad}:3:16:" in capsys.readouterr().err


def test_missing_scenario_file(tmp_path, capsys):
    assert main(["simulate", "--scenario", str(tmp_path / "none.json")]) == 2


def test_plot_output(tmp_path):
    pytest.importorskip("matplotlib")
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    args = ["simulate", "--id", "ex_wfi_circle", "--horizon", "10,5", "--out", str(tmp_path / "c.csv")]
    assert main([*args, "--plot", str(a)]) == 0
    assert main([*args, "--plot", str(b)]) == 0
    data = a.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert data == b.read_bytes()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "hybridinv", "catalog"], capture_output=True, text=True)
    assert r.returncode == 0 and "ex_inverter" in r.stdout
