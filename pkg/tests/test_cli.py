import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from tomoent.cli import (
    EXIT_CONFIG,
    EXIT_CONVERGENCE,
    EXIT_DEGENERATE,
    EXIT_OK,
    main,
    run_indicators,
    sidecar_config,
)
from tomoent.config import load_config
from tomoent.indicators import CSV_COLUMNS, read_indicator_csv
from tomoent.validation import logistic_series

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

TINY = {
    "name": "tiny",
    "model": "atom_field",
    "params": {"omega_f": 1.0, "omega_a": 1.0, "gamma": 1.0, "g": 2.0},
    "initial_state": {"kind": "cs", "alpha_a": 0.5},
    "cutoffs": {"a": 10},
    "time": {"dt": 0.05, "n_steps": 6},
    "angles": {"n_a": 3},
    "grid": {"x_max": 8.0, "n_points": 65},
    "seed": 0,
    "output": {"directory": "out"},
}


def write_config(tmp_path, name="tiny.yaml", **changes):
    data = {**TINY, **changes}
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def write_column_csv(path, **columns):
    names = list(columns)
    rows = np.column_stack([columns[n] for n in names])
    np.savetxt(path, rows, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    return path


@pytest.fixture
def evolved(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "run"
    assert main(["evolve-indicators", str(cfg), "-o", str(out)]) == EXIT_OK
    return out


def test_evolve_outputs(evolved):
    csv = evolved / "tiny_indicators.csv"
    cols = read_indicator_csv(csv)
    assert tuple(cols) == CSV_COLUMNS
    assert cols["t"].size == 6
    assert np.allclose(cols["t"], 0.05 * np.arange(6))
    assert cols["svne"][0] < 1e-10 and cols["svne"][-1] > 0
    for name in ("tiny_run.yaml", "tiny_indicators.png", "plot_tiny_indicators.py"):
        assert (evolved / name).exists(), name


def test_evolve_rerun_byte_identical(evolved, tmp_path):
    again = tmp_path / "again"
    assert main(["evolve-indicators", str(tmp_path / "tiny.yaml"), "-o", str(again), "--no-figures"]) == 0
    assert (again / "tiny_indicators.csv").read_bytes() == (evolved / "tiny_indicators.csv").read_bytes()
    assert (again / "tiny_run.yaml").read_bytes() == (evolved / "tiny_run.yaml").read_bytes()


def test_sidecar_round_trip(evolved, tmp_path):
    side = sidecar_config(evolved / "tiny_indicators.csv")
    direct = load_config(tmp_path / "tiny.yaml")
    assert side.dt_physical == pytest.approx(direct.dt_physical)
    assert side.rate == 2.0
    assert sidecar_config(tmp_path / "nothing_here.csv") is None


def test_overrides_and_steps(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "o"
    code = main(["evolve-indicators", str(cfg), "-o", str(out), "--no-figures",
                 "--n-steps", "3", "--set", "angles.n_a=2"])
    assert code == EXIT_OK
    assert read_indicator_csv(out / "tiny_indicators.csv")["t"].size == 3
    assert yaml.safe_load((out / "tiny_run.yaml").read_text())["angles"]["n_a"] == 2


def test_output_defaults_to_config_directory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write_config(tmp_path)
    assert main(["evolve-indicators", str(cfg), "--no-figures", "--n-steps", "2"]) == EXIT_OK
    assert (tmp_path / "out" / "tiny_indicators.csv").exists()


@pytest.mark.parametrize(
    "changes",
    [{"model": "dicke"}, {"time": {"dt": -1.0, "n_steps": 2}}, {"extra_key": 1}],
)
def test_config_errors_exit_2(tmp_path, changes, capsys):
    assert main(["evolve-indicators", str(write_config(tmp_path, **changes))]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["evolve-indicators", str(tmp_path / "none.yaml")]) == EXIT_CONFIG


def test_bad_scale_exit_2(tmp_path):
    assert main(["evolve-indicators", str(write_config(tmp_path)), "--scale", "huge"]) == EXIT_CONFIG


def test_cutoff_leak_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, initial_state={"kind": "cs", "alpha_a": 3.0})
    assert main(["evolve-indicators", str(cfg), "-o", str(tmp_path / "o")]) == EXIT_CONVERGENCE
    assert "cutoff" in capsys.readouterr().err


def test_grid_too_small_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, grid={"x_max": 2.0, "n_points": 33})
    assert main(["evolve-indicators", str(cfg), "-o", str(tmp_path / "o")]) == EXIT_CONVERGENCE
    assert "time step 0" in capsys.readouterr().err


def test_constant_series_exit_4(tmp_path, capsys):
    csv = write_column_csv(tmp_path / "flat.csv", t=np.arange(2000.0), d1=np.full(2000, 0.3))
    assert main(["timeseries", str(csv), "--no-figures"]) == EXIT_DEGENERATE
    assert "degenerate" in capsys.readouterr().err


def test_short_series_exit_4(evolved):
    assert main(["timeseries", str(evolved / "tiny_indicators.csv"), "--no-figures"]) == EXIT_DEGENERATE


def test_missing_column_exit_2(tmp_path):
    csv = write_column_csv(tmp_path / "x.csv", t=np.arange(5.0), d1=np.arange(5.0))
    assert main(["timeseries", str(csv), "--column", "d9"]) == EXIT_CONFIG
    assert main(["spectrum", str(tmp_path / "missing.csv")]) == EXIT_CONFIG


def test_timeseries_logistic(tmp_path, capsys):
    x = logistic_series()
    csv = write_column_csv(tmp_path / "logistic_indicators.csv", t=np.arange(x.size), d1=x)
    assert main(["timeseries", str(csv), "--dt", "1", "--freq-unit", "1"]) == EXIT_OK
    fit = dict(tok.split("=") for tok in (tmp_path / "logistic_d1_fit.txt").read_text().split())
    assert abs(float(fit["lambda_inf"]) - math.log(2)) < 0.1 * math.log(2)
    assert fit["tau"] == "1"
    lyap = np.genfromtxt(tmp_path / "logistic_d1_lyapunov.csv", delimiter=",", names=True)
    assert lyap["L"].size == 14
    for name in ("logistic_d1_lyapunov.png", "logistic_d1_spectrum.png",
                 "plot_logistic_d1_lyapunov.py", "plot_logistic_d1_spectrum.py"):
        assert (tmp_path / name).exists(), name
    assert "lambda_inf=" in capsys.readouterr().out


def test_spectrum_uses_sidecar_units(evolved):
    assert main(["spectrum", str(evolved / "tiny_indicators.csv"), "--column", "svne", "--no-figures"]) == 0
    spec = np.genfromtxt(evolved / "tiny_svne_spectrum.csv", delimiter=",", names=True)
    dt_phys = 0.05 * math.pi / 2.0
    # six samples: frequencies k / (6 dt) for k = 0..3, divided by g = 2
    assert np.allclose(spec["f"], np.arange(4) / (6 * dt_phys) / 2.0)


def test_plots_scripts_run(evolved, tmp_path):
    csv = evolved / "tiny_indicators.csv"
    (evolved / "tiny_indicators.png").unlink()
    assert main(["plots", str(csv), "--scripts-only"]) == EXIT_OK
    assert not (evolved / "tiny_indicators.png").exists()
    script = evolved / "plot_tiny_indicators.py"
    env = {**os.environ, "MPLBACKEND": "Agg"}
    # run from elsewhere: the script must locate its CSV relative to itself
    subprocess.run([sys.executable, str(script)], check=True, cwd=tmp_path, env=env, capture_output=True)
    assert (evolved / "tiny_indicators.png").stat().st_size > 1000


def test_plots_errors(tmp_path):
    assert main(["plots", str(tmp_path / "none.csv")]) == EXIT_CONFIG
    odd = write_column_csv(tmp_path / "odd.csv", a=np.arange(3.0), b=np.arange(3.0))
    assert main(["plots", str(odd)]) == EXIT_CONFIG


def test_validate_quick(capsys):
    assert main(["validate", "--quick"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "tomoent.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for sub in ("evolve-indicators", "timeseries", "spectrum", "plots", "validate"):
        assert sub in res.stdout


def test_strong_coupling_desk_run(tmp_path):
    """Shipped g = 100 config, 200 steps: d2 never exceeds d1 and t = 0 is a product state."""
    cols = read_indicator_csv(run_indicators(load_config(CONFIG_DIR / "af_coherent_strong_coupling.yaml"), tmp_path))
    assert cols["t"].size == 200
    assert np.all(cols["d2"] <= cols["d1"] + 1e-12)
    assert abs(cols["svne"][0]) < 1e-9 and abs(cols["sle"][0]) < 1e-9
