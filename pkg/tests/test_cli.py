import copy
import csv
import json
from pathlib import Path

import pytest

from deformed_riccati import cli
from deformed_riccati.errors import IoError

from helpers import ORACLE

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _cfg(name="fix1"):
    return json.loads((CONFIGS / f"{name}.json").read_text())


def test_fix1_full_pipeline_exit_0(tmp_path):
    report = cli.run_pipeline(_cfg(), tmp_path)
    assert report.exit_code == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["admissibility"]["pass_hyp2"] is True
    assert data["verify"]["contour_independence"]["pass"] is True
    z = complex(*map(float, data["resonances"][0]["value"]))
    assert abs(z - ORACLE["fix1_root"]) < 1e-12


def test_numbers_serialized_with_17_digits():
    report = cli.run_pipeline(_cfg())
    adm = report.data["admissibility"]
    assert isinstance(adm["d"], str) and abs(float(adm["d"]) - 1.0) < 1e-12
    for key in ("d", "v_k", "omega", "r_bound"):
        assert adm[key] == format(float(adm[key]), ".17g")


def test_malformed_config_exit_2():
    cfg = _cfg()
    cfg["model"]["alpha"], cfg["model"]["beta"] = 2.0, 0.0
    assert cli.run_pipeline(cfg).exit_code == 2
    bad = _cfg()
    del bad["contour"]
    assert cli.run_pipeline(bad).exit_code == 2
    bad = _cfg()
    bad["model"]["a"] = [[2.5]]
    assert cli.run_pipeline(bad).exit_code == 2


def test_inadmissible_without_force_exit_3():
    cfg = _cfg()
    cfg["model"]["b"] = cfg["model"]["c"] = [[[0.3]]]
    report = cli.run_pipeline(cfg)
    assert report.exit_code == 3 and report.data["admissibility"]["pass_vk"] is False


def test_forced_run_is_not_silent_success():
    cfg = _cfg()
    cfg["model"]["b"] = cfg["model"]["c"] = [[[0.3]]]
    cfg["solver"]["force"] = True
    cfg["tasks"] = ["solve"]
    report = cli.run_pipeline(cfg)
    assert report.exit_code == 3
    assert report.data["solve"]["right_root"]["certified"] is False


def test_no_convergence_exit_4():
    cfg = _cfg()
    cfg["solver"]["max_iter"] = 2
    assert cli.run_pipeline(cfg).exit_code == 4


def test_sweep_trajectory(tmp_path):
    cfg = json.loads((CONFIGS / "fix1_sweep.json").read_text())
    cfg["tasks"] = ["sweep"]
    report = cli.run_pipeline(cfg, tmp_path)
    rows = list(csv.reader((tmp_path / "trajectory.csv").open()))
    assert rows[0] == ["g", "index", "re", "im", "certified"]
    assert rows[1] == ["0", "0", "1", "0", "true"]
    assert abs(float(rows[2][3]) - ORACLE["fix1_root_g005"].imag) < 1e-12
    assert abs(float(rows[3][3]) - ORACLE["fix1_root"].imag) < 1e-12
    assert rows[4][1:] == ["", "", "", "skipped"] and float(rows[4][0]) == 0.3
    assert report.exit_code == 3


def test_sweep_function_rows():
    model = cli.build_model(cli.normalize_config(_cfg("fix1_sweep")))
    from helpers import lower_semicircle
    rows = cli.sweep(model, lower_semicircle(), [0.0])
    assert rows == [(0.0, 0, 1.0, 0.0, True)]


def test_plot_data_files(tmp_path):
    cli.run_pipeline(_cfg(), tmp_path)
    contour_rows = list(csv.reader((tmp_path / "contour.csv").open()))
    assert contour_rows[0] == ["re", "im"] and len(contour_rows) == 1025
    res = list(csv.reader((tmp_path / "resonances.csv").open()))
    assert res[0] == ["re", "im", "class"] and len(res) == 2 and res[1][2] == "resonance"
    sig = list(csv.reader((tmp_path / "sigma_a.csv").open()))
    assert sig[1] == ["1", "0"]


def test_plot_data_g0_boundary(tmp_path):
    cli.run_pipeline(_cfg("fix0"), tmp_path)
    res = list(csv.reader((tmp_path / "resonances.csv").open()))
    assert res[1] == ["1", "0", "boundary"]


def test_missing_output_directory(tmp_path):
    report = cli.run_pipeline(_cfg())
    with pytest.raises(IoError):
        cli.emit_plot_data(report, tmp_path / "missing")
    assert not (tmp_path / "missing").exists()


def test_omega_grid(tmp_path):
    cfg = _cfg()
    cfg["tasks"] = ["check"]
    cfg["outputs"] = {"omega_grid": 5}
    cli.run_pipeline(cfg, tmp_path)
    rows = list(csv.reader((tmp_path / "omega_grid.csv").open()))
    assert rows[0] == ["re", "im", "class"] and len(rows) == 26
    assert {r[2] for r in rows[1:]} <= {"inside", "outside", "boundary"}


def test_csv_report_format(tmp_path):
    cli.run_pipeline(_cfg(), tmp_path, "csv")
    rows = dict(csv.reader((tmp_path / "report.csv").open()))
    assert rows["admissibility.pass_hyp2"] == "true"


def test_main_commands(tmp_path, capsys):
    cfg = str(CONFIGS / "fix1.json")
    assert cli.main(["check", "--config", cfg]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "solve" not in out and out["admissibility"]["pass"] is True
    assert cli.main(["verify", "--config", cfg, "--out", str(tmp_path), "--nodes", "48", "--tol", "1e-11"]) == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["quadrature"]["order"] == 48
    assert cli.main(["solve", "--config", str(tmp_path / "nope.json")]) == 2
    assert cli.main(["check", "--config", cfg, "--out", str(tmp_path / "nope")]) == 2


def test_run_does_not_mutate_config():
    cfg = _cfg()
    before = copy.deepcopy(cfg)
    cli.run_pipeline(cfg)
    assert cfg == before


def test_complex_entries_accepted():
    cfg = _cfg()
    cfg["model"]["a"] = [[[1.0, 0.0]]]
    cfg["model"]["b"] = [[[[0.1, 0.0]]]]
    cfg["tasks"] = ["solve"]
    report = cli.run_pipeline(cfg)
    assert report.exit_code == 0
