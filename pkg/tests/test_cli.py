import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from wide_solver import io as wio
from wide_solver.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, _threads, main
from wide_solver.config import from_dict, load_config, schema

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def raw(name):
    return json.loads((CONFIGS / name).read_text())


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


@pytest.fixture(scope="module")
def wave_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("wave") / "run"
    assert main(["solve", "--config", str(CONFIGS / "wave_mode1.json"), "--out", str(out)]) == EXIT_OK
    return out


def test_solve_golden(wave_run):
    for name in ("field.csv", "energy.csv", "approx_energy.csv", "report.json"):
        assert (wave_run / name).is_file()
    report = json.loads((wave_run / "report.json").read_text())
    assert report["checks_passed"] and report["stats"]["status"] == "converged"
    assert report["functional"]["value"] == pytest.approx(0.07829309177801526, rel=1e-9)
    assert report["functional"]["value"] <= report["functional"]["competitor"]
    assert set(report["checks"]) == {"minimality", "level_bound", "energy_inequality", "F_monotone"}
    t, x, w = wio.read_field(wave_run / "field.csv")
    assert w.shape == (401, 64)
    inside = t <= 0.75
    assert np.max(np.abs(w[inside] - np.outer(np.cos(t[inside]), np.sin(x)))) < 0.05


def test_csv_layout(wave_run):
    text = (wave_run / "energy.csv").read_bytes()
    assert b"\r" not in text
    header, first = text.decode().splitlines()[:2]
    assert header == ",".join(wio.ENERGY_COLUMNS)
    assert all("e" in v for v in first.split(","))
    cols, _ = wio.read_csv(wave_run / "approx_energy.csv")
    assert cols == wio.APPROX_COLUMNS


def test_guard_violation_exits_2(tmp_path, capsys):
    data = raw("wave_mode1.json")
    data["time"]["dt"] = 0.01
    assert main(["solve", "--config", write_config(tmp_path, data), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "dt <= min(eps)/10" in capsys.readouterr().err


@pytest.mark.parametrize("change,needle", [
    ({"preset": "heat-equation"}, "heat-equation"),
    ({"eps": [0.05, 0.1]}, "strictly decreasing"),
    ({"eps": 0.5}, "T/max(eps)"),
    ({"eps": 0.02, "time": {"horizon": 1.0, "dt": 0.002}}, "T/min(eps)"),
    ({"window": 2.0}, "window <= T"),
    ({"bogus": 1}, "bogus"),
])
def test_invalid_configs_exit_2(tmp_path, capsys, change, needle):
    data = raw("wave_mode1.json")
    data.update(change)
    assert main(["solve", "--config", write_config(tmp_path, data), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert needle in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG
    assert main(["solve"]) == EXIT_CONFIG


@pytest.fixture(scope="module")
def wave_sweep_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep") / "run"
    code = main(["sweep", "--config", str(CONFIGS / "wave_sweep.json"), "--out", str(out)])
    return code, out


def test_sweep_slope(wave_sweep_run):
    code, out = wave_sweep_run
    assert code == EXIT_OK
    with open(out / "convergence.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == wio.CONVERGENCE_COLUMNS
    assert all(r["status"] == "converged" for r in rows)
    slope = float(rows[0]["slope"])
    assert slope >= 0.8
    errors = [float(r["error"]) for r in rows]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    assert len(list(out.glob("eps_*/field.csv"))) == 4
    report = json.loads((out / "report.json").read_text())
    assert report["oracle"] == "exact" and report["slope"] == pytest.approx(slope)


def test_single_eps_sweep_has_empty_slope(tmp_path):
    data = raw("wave_mode1.json")
    out = tmp_path / "o"
    assert main(["sweep", "--config", write_config(tmp_path, data), "--out", str(out)]) == EXIT_OK
    line = (out / "convergence.csv").read_text().splitlines()[1]
    assert line.endswith(",")
    solo = tmp_path / "solo"
    assert main(["solve", "--config", write_config(tmp_path, data), "--out", str(solo)]) == EXIT_OK
    entry = next(out.glob("eps_*"))
    assert (entry / "field.csv").read_bytes() == (solo / "field.csv").read_bytes()


def test_failing_sweep_exits_3(tmp_path):
    data = raw("wave_sweep.json")
    data["solver"] = {"tol": 1e-14, "max_iter": 1}
    out = tmp_path / "o"
    assert main(["sweep", "--config", write_config(tmp_path, data), "--out", str(out)]) == EXIT_SOLVER
    lines = (out / "convergence.csv").read_text().splitlines()[1:]
    assert len(lines) == 4
    assert all("failed:max-iterations" in l for l in lines)


def test_solver_failure_exits_3(tmp_path):
    data = raw("wave_mode1.json")
    data["solver"] = {"tol": 1e-14, "max_iter": 1}
    assert main(["solve", "--config", write_config(tmp_path, data), "--out", str(tmp_path / "o")]) == EXIT_SOLVER


def test_nonlinear_sweep_uses_leapfrog(tmp_path):
    data = raw("nlw_sweep.json")
    data["eps"] = [0.2, 0.1]
    out = tmp_path / "o"
    assert main(["sweep", "--config", write_config(tmp_path, data), "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "report.json").read_text())["oracle"] == "leapfrog"


def test_gradcheck(tmp_path, capsys):
    assert main(["gradcheck", "--seed", "7", "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "gradcheck.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    assert len(rows) == 13 and "plaplace-wave(3,4)" in [r[0] for r in rows]
    worst = max(float(v) for r in rows for v in r[1:])
    assert worst <= 1e-6
    assert "FAIL" not in capsys.readouterr().out


def test_presets(capsys):
    assert main(["presets"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("wave", "sine-gordon", "kirchhoff", "fractional-wave"):
        assert name in out


def test_plotdata_zero_run(tmp_path):
    run = tmp_path / "zero"
    assert main(["solve", "--config", str(CONFIGS / "zero_data.json"), "--out", str(run)]) == EXIT_OK
    assert main(["plotdata", str(run)]) == EXIT_OK
    field = np.loadtxt(run / "field.dat")
    energy = np.loadtxt(run / "energy.dat")
    assert field.shape[1] == 3 and np.all(field[:, 2] == 0)
    assert energy.shape[1] == 2 and np.all(energy[:, 1] == 0)


def test_compare_round_trip(tmp_path, wave_run, capsys):
    copy = tmp_path / "copy"
    shutil.copytree(wave_run, copy)
    assert main(["compare", str(wave_run), str(copy), "--tol", "0", "--out", str(tmp_path)]) == EXIT_OK
    result = json.loads((tmp_path / "compare.json").read_text())
    assert result["spacetime_l2"] == 0.0
    assert all(result[f]["identical"] for f in ("field.csv", "energy.csv", "approx_energy.csv"))


def test_compare_detects_difference(tmp_path, wave_run):
    other = tmp_path / "other"
    data = raw("wave_mode1.json")
    data["eps"] = 0.1
    assert main(["solve", "--config", write_config(tmp_path, data), "--out", str(other)]) == EXIT_OK
    assert main(["compare", str(wave_run), str(other), "--tol", "1e-6", "--out", str(tmp_path)]) == EXIT_CHECK
    assert json.loads((tmp_path / "compare.json").read_text())["spacetime_l2"] > 1e-3


def test_compare_bad_inputs(tmp_path, wave_run):
    assert main(["compare", str(wave_run), str(tmp_path / "missing")]) == EXIT_CONFIG
    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "field.csv").write_text("t,x,w\n1,2\n")
    assert main(["compare", str(wave_run), str(broken)]) == EXIT_CONFIG
    assert main(["plotdata", str(tmp_path / "missing")]) == EXIT_CONFIG


def test_reproducible_outputs(tmp_path):
    cfg = str(CONFIGS / "random_klein_gordon.json")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "--config", cfg, "--out", str(a), "--seed", "11"]) == EXIT_OK
    assert main(["solve", "--config", cfg, "--out", str(b), "--seed", "11", "--threads", "2"]) == EXIT_OK
    for name in ("field.csv", "energy.csv", "approx_energy.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    assert main(["solve", "--config", cfg, "--out", str(c), "--seed", "12"]) == EXIT_OK
    assert (a / "field.csv").read_bytes() != (c / "field.csv").read_bytes()


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("WIDE_SOLVER_THREADS", "3")
    assert _threads(None) == 3 and _threads(2) == 2
    monkeypatch.setenv("WIDE_SOLVER_THREADS", "many")
    assert _threads(None) == 1


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_validate(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.problem().constraints.grid.nodes == cfg.raw["domain"]["nodes"]


def test_file_profile(tmp_path):
    np.savetxt(tmp_path / "w0.txt", np.sin(np.linspace(0, 2 * np.pi, 64, endpoint=False)))
    data = raw("wave_mode1.json")
    data["initial"]["position"] = {"profile": "file", "path": "w0.txt"}
    cfg = from_dict(data, tmp_path)
    assert np.allclose(cfg.problem().constraints.w0.values, np.sin(cfg.grid().x))
    data["initial"]["position"] = {"profile": "file", "path": "absent.txt"}
    with pytest.raises(Exception, match="cannot read"):
        from_dict(data, tmp_path)


def test_schema_ships_with_package():
    s = schema()
    assert "preset" in s["required"]
