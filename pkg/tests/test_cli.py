import csv
import math
import shutil
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from sqha.cli import main
from sqha.config import ExperimentConfig
from sqha.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run_cli(command, config, out, *extra):
    return main([command, "--config", str(config), "--out", str(out), *extra])


def write_cfg(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_vqu_cosine_summary(tmp_path):
    assert run_cli("vqu", CONFIGS / "vqu_cosine.ini", tmp_path) == 0
    summary = dict(rows(tmp_path / "summary.csv")[1:])
    assert float(summary["mean_vqu"]) == pytest.approx(2 * math.pi**2, rel=1e-6)
    assert float(summary["min_vqu"]) == pytest.approx(2 * math.pi**2, rel=1e-6)
    assert float(summary["max_vqu"]) == pytest.approx(2 * math.pi**2, rel=1e-6)
    assert rows(tmp_path / "vqu.csv")[0] == ["q", "value"]
    assert (tmp_path / "force.csv").exists() and (tmp_path / "manifest.ini").exists()


def test_eigencheck_energies(tmp_path):
    cfg = CONFIGS.joinpath("eigencheck.ini").read_text().replace("periods = 1", "periods = 0.1")
    assert run_cli("eigencheck", write_cfg(tmp_path, cfg), tmp_path / "o") == 0
    table = rows(tmp_path / "o" / "eigencheck.csv")
    assert table[0] == ["n", "E_n", "max_vqu_deviation", "stationarity_drift"]
    energies = [float(r[1]) for r in table[1:]]
    assert energies == pytest.approx([0.5, 1.5, 2.5, 3.5, 4.5, 5.5], rel=1e-8)
    assert all(float(r[2]) < 1e-5 for r in table[1:])


def test_evolve_outputs(tmp_path):
    assert run_cli("evolve", CONFIGS / "evolve_ho.ini", tmp_path) == 0
    ts = rows(tmp_path / "timeseries.csv")
    assert ts[0] == ["t", "norm", "energy", "max_residual", "rms_deltaS"]
    assert len(ts) == 12
    assert all(abs(float(r[1]) - 1) < 1e-8 for r in ts[1:])
    assert rows(tmp_path / "trajectories.csv")[0] == ["t", "q_1", "q_2", "q_3"]
    assert len(list((tmp_path / "snapshots").glob("psi_*.csv"))) == 11


def test_stochastic_rerun_byte_identical(tmp_path):
    cfg = CONFIGS / "evolve_stochastic.ini"
    assert run_cli("evolve", cfg, tmp_path / "a") == 0
    assert run_cli("evolve", cfg, tmp_path / "b") == 0
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert names == ["ensemble.csv", "timeseries.csv", "trajectories.csv"]
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    assert run_cli("evolve", cfg, tmp_path / "c", "--seed", "8") == 0
    assert (tmp_path / "a" / "ensemble.csv").read_bytes() != (tmp_path / "c" / "ensemble.csv").read_bytes()


def test_manifest_reproduces_outputs(tmp_path):
    cfg = CONFIGS / "evolve_stochastic.ini"
    assert run_cli("evolve", cfg, tmp_path / "a", "--seed", "123", "--conserve-mass", "false") == 0
    manifest = (tmp_path / "a" / "manifest.ini").read_text()
    assert "seed = 123" in manifest and "conserve_mass = false" in manifest
    assert "config_sha256 = " in manifest
    replay = write_cfg(tmp_path, manifest, "replay.ini")
    assert run_cli("evolve", replay, tmp_path / "b") == 0
    for p in (tmp_path / "a").glob("*.csv"):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_noise_check_covariance(tmp_path):
    cfg = CONFIGS.joinpath("noise_check.ini").read_text().replace("samples = 2000", "samples = 400")
    assert run_cli("noise-check", write_cfg(tmp_path, cfg), tmp_path / "o") == 0
    table = rows(tmp_path / "o" / "covariance.csv")
    assert table[0] == ["separation", "separation_over_lambda_c", "empirical", "theory", "ratio"]
    assert [float(r[1]) for r in table[1:]] == pytest.approx([0, 0.5, 1, 2])
    assert float(table[1][4]) == pytest.approx(1, abs=0.05)


def test_lambda_q_row(tmp_path):
    assert run_cli("lambda-q", CONFIGS / "lambda_q.ini", tmp_path) == 0
    table = rows(tmp_path / "lambda_q.csv")
    assert table[0] == ["lambda_q", "typology", "k_fit", "fit_residual"]
    assert float(table[1][0]) == pytest.approx(0.22503530172284188, rel=1e-4)
    assert table[1][1] == "weak"


def test_report(tmp_path):
    assert run_cli("report", CONFIGS / "report.ini", tmp_path) == 0
    table = rows(tmp_path / "report.csv")
    rec = dict(zip(table[0], table[1]))
    assert rec["regime"] == "stochastic-quantum"
    assert float(rec["T_c"]) == pytest.approx(2.6754617651875416e-4, rel=1e-9)
    assert "regime" in (tmp_path / "report.txt").read_text()


def test_seed_required_for_stochastic(tmp_path, capsys):
    text = CONFIGS.joinpath("evolve_stochastic.ini").read_text().replace("seed = 7\n", "")
    assert run_cli("evolve", write_cfg(tmp_path, text), tmp_path / "o") == 2
    assert "seed" in capsys.readouterr().err


@pytest.mark.parametrize("edit,field", [
    (("n_points = 801", "n_points = lots"), "grid.n_points"),
    (("dt = 0.005", "dt = 0.005\nstep = 3"), "evolution.step"),
    (("kind = gaussian", "kind = plane"), "state.kind"),
    (("sigma = 0.7071067811865476", "sigma = -1"), "state.sigma"),
])
def test_config_errors_exit_2(tmp_path, capsys, edit, field):
    text = CONFIGS.joinpath("evolve_ho.ini").read_text().replace(*edit)
    assert run_cli("evolve", write_cfg(tmp_path, text), tmp_path / "o") == 2
    assert field in capsys.readouterr().err


def test_subcommand_mismatch_exit_2(tmp_path):
    assert run_cli("vqu", CONFIGS / "evolve_ho.ini", tmp_path) == 2


def test_numerical_abort_exit_3(tmp_path, capsys):
    text = CONFIGS.joinpath("evolve_stochastic.ini").read_text().replace("mu = 1e-28", "mu = 1")
    assert run_cli("evolve", write_cfg(tmp_path, text), tmp_path / "o") == 3
    assert "numerical abort" in capsys.readouterr().err


def test_console_script_version():
    exe = shutil.which("sqha")
    cmd = [exe] if exe else [sys.executable, "-m", "sqha.cli"]
    out = subprocess.run(cmd + ["--version"], capture_output=True, text=True, check=True)
    assert out.stdout.startswith("sqha ")


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.ini")))
def test_config_roundtrip_idempotent(name):
    cfg = ExperimentConfig.from_file(CONFIGS / name)
    once = cfg.to_text()
    again = ExperimentConfig.from_text(once)
    assert again.to_text() == once
    assert again.digest() == cfg.digest()


@given(dt=st.floats(1e-6, 10, allow_nan=False), n=st.integers(1, 10**6),
       b=st.booleans(), xs=st.lists(st.floats(-1e3, 1e3, allow_nan=False), max_size=5))
@settings(max_examples=60, deadline=None)
def test_config_roundtrip_property(dt, n, b, xs):
    cfg = ExperimentConfig()
    cfg.set("evolution", "dt", dt)
    cfg.set("evolution", "n_steps", n)
    cfg.set("evolution", "snapshots", "yes" if b else "off")
    cfg.set("evolution", "trajectories", ", ".join(repr(x) for x in xs))
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back.sections == cfg.sections
    assert back.get_float("evolution", "dt") == dt
    assert back.get_floats("evolution", "trajectories") == xs


def test_config_rejects_unknowns():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[nonsense]\na = 1\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[grid]\nx_min = nan\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("[grid\n")
