import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qzeno.cli import SWEEP_PAIRS, main, run_points
from qzeno.config import RunConfig, load_config
from qzeno.errors import ConfigurationError
from qzeno.output import TRUNCATION_MARKER
from qzeno.shorttime import golden_rule, rate_projective
from qzeno.spectra import SpectralDensity


def read_csv(path):
    lines = path.read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    cols = body[0].split(",")
    rows = [ln.split(",") for ln in body[1:]]
    return cols, rows, lines


def numeric(rows):
    return np.array([[float(v) for v in r] for r in rows])


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out)])
    return code, out


# --- output format ------------------------------------------------------------------

def test_header_records_version_and_config(tmp_path):
    code, out = run(tmp_path, "rate", "--kind", "ohmic", "--tau-min", "1e-3",
                    "--tau-max", "1", "--n-points", "5")
    assert code == 0
    cols, rows, lines = read_csv(out)
    assert lines[0].startswith("# qzeno ") and lines[0].endswith(" rate")
    cfg = json.loads(lines[1][len("# config: "):])
    assert cfg["spectrum"]["kind"] == "ohmic"
    assert cfg["sweep"]["points"] == 5
    assert len(rows) == 5
    assert all("e" in v for v in rows[0])


def test_rerun_is_byte_identical(tmp_path):
    args = ("rate", "--kind", "hydrogenic", "--gamma", "0.5", "--theta", "1.0",
            "--tau-min", "1e-4", "--tau-max", "1", "--n-points", "6")
    _, out = run(tmp_path, *args, "--threads", "3")
    first = out.read_bytes()
    run(tmp_path, *args, "--threads", "3")
    assert out.read_bytes() == first
    _, out = run(tmp_path, *args)
    assert read_csv(out)[1] == [ln.split(",") for ln in first.decode().splitlines()
                                if not ln.startswith("#")][1:]


def test_json_output(tmp_path):
    code, out = run(tmp_path, "spectrum", "--kind", "ohmic", "--points", "11",
                    "--format", "json", name="s.json")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["columns"] == ["omega", "G"]
    assert len(doc["rows"]) == 11
    assert doc["header"]["config"]["spectrum"]["kind"] == "ohmic"
    assert doc["truncated"] is False


# --- exit codes -----------------------------------------------------------------------

def test_argparse_error_exit_code():
    with pytest.raises(SystemExit) as err:
        main(["fig", "9"])
    assert err.value.code == 2


def test_domain_error_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "rate", "--tau", "-1")
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path):
    code, _ = run(tmp_path, "spectrum", "--config", str(tmp_path / "missing.yaml"))
    assert code == 2


def test_resource_exit_code(tmp_path):
    code, _ = run(tmp_path, "oracle", "modesum", "--K", "100000", "--N", "100000")
    assert code == 4


def test_invalid_sweep_pair_lists_valid_pairs(tmp_path, capsys):
    code, _ = run(tmp_path, "sweep", "--quantity", "rate_pmp", "--variable", "gamma")
    assert code == 2
    err = capsys.readouterr().err
    for quantity in SWEEP_PAIRS:
        assert quantity in err


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "qzeno", "--version"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("qzeno ")


# --- configuration ------------------------------------------------------------------

def test_load_config_resolves_relative_paths(tmp_path):
    (tmp_path / "g.csv").write_text("omega,G\n0.5,0.0\n1.0,0.0\n2.0,0.0\n")
    (tmp_path / "run.yaml").write_text(
        "spectrum: {kind: tabulated, table: g.csv}\n"
        "schedule: {tau: 0.2, gamma: 0.4}\n"
        "sweep: {points: 7, min: 1e-3, max: 1.0}\n")
    cfg = load_config(tmp_path / "run.yaml")
    assert cfg.spectrum.table == str(tmp_path / "g.csv")
    assert cfg.schedule.gamma == 0.4
    assert len(cfg.sweep.values()) == 7


@pytest.mark.parametrize("text", [
    "spectrum: {kind: lorentzian}\n",
    "sweep: {min: 2.0, max: 1.0}\n",
    "sweep: {points: 1}\n",
    "schedule: {tau: 0.1, colour: red}\n",
    "extras: {}\n",
    "spectrum: {kind: tabulated, table: nowhere.csv}\n",
    "output: {format: xml}\n",
])
def test_invalid_configs(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_dotted_overrides():
    cfg = RunConfig().with_(**{"sweep.points": 9, "schedule.gamma": 0.2, "threads": None})
    assert cfg.sweep.points == 9 and cfg.schedule.gamma == 0.2 and cfg.threads == 1


# --- sweeps ---------------------------------------------------------------------------

def test_zero_spectrum_sweep_is_zero(tmp_path):
    (tmp_path / "g.csv").write_text("omega,G\n0.5,0.0\n1.0,0.0\n2.0,0.0\n")
    (tmp_path / "run.yaml").write_text(
        "spectrum: {kind: tabulated, table: g.csv}\n"
        "sweep: {quantity: rate_projective, points: 4, min: 1e-3, max: 1.0}\n")
    code, out = run(tmp_path, "sweep", "--config", str(tmp_path / "run.yaml"))
    assert code == 0
    cols, rows, _ = read_csv(out)
    assert cols == ["tau", "rate_projective"]
    assert np.all(numeric(rows)[:, 1] == 0.0)


def test_gamma_sweep_endpoint_is_projective(tmp_path):
    (tmp_path / "run.yaml").write_text(
        "spectrum: {kind: hydrogenic}\nschedule: {tau: 0.01}\n"
        "sweep: {quantity: rate_measured, variable: gamma, grid: linear, min: 0.0, max: 0.9, points: 10}\n")
    code, out = run(tmp_path, "sweep", "--config", str(tmp_path / "run.yaml"))
    assert code == 0
    data = numeric(read_csv(out)[1])
    ref = rate_projective(SpectralDensity.hydrogenic(549.5), 0.01)
    assert data[0, 1] == pytest.approx(ref, rel=1e-10)
    assert np.all(np.abs(np.diff(data[:, 1])) < 0.5 * data[:, 1].max())


def test_anti_zeno_crossing(tmp_path):
    code, out = run(tmp_path, "rate", "--kind", "hydrogenic", "--tau-min", "1e-5",
                    "--tau-max", "1e3", "--n-points", "41")
    assert code == 0
    data = numeric([r[:3] for r in read_csv(out)[1]])
    rgr = golden_rule(SpectralDensity.hydrogenic(549.5))
    above = data[:, 1] > rgr
    assert not above[0] and above.any()


# --- figures ---------------------------------------------------------------------------

def test_fig3_filter_peaks_at_zero(tmp_path):
    code, out = run(tmp_path, "fig", "3")
    assert code == 0
    cols, rows, _ = read_csv(out)
    data = numeric(rows)
    inner = np.abs(data[:, 0]) < math.pi  # h is 2 pi periodic
    eta = data[inner, 0]
    col = data[inner, cols.index("h_0.8_0.000000")]
    assert abs(eta[np.argmax(col)]) < 1e-12
    half = col > 0.5 * (col.max() + col.min())
    width = np.ptp(eta[half])
    assert 0.3 * math.acos(0.8) < width < 3 * math.acos(0.8)
    assert "sinc2" in cols


def test_fig_rejects_unknown_number():
    with pytest.raises(SystemExit):
        main(["fig", "8"])


# --- worker pool -------------------------------------------------------------------

def test_run_points_order_and_truncation():
    rows, trunc = run_points(lambda x: x * x, range(20), 4)
    assert rows == [x * x for x in range(20)] and not trunc

    def fn(x):
        if x == 5:
            raise KeyboardInterrupt
        return x

    rows, trunc = run_points(fn, range(10), 1)
    assert rows == [0, 1, 2, 3, 4] and trunc
    rows, trunc = run_points(fn, range(10), 3)
    assert rows == [0, 1, 2, 3, 4] and trunc


def test_truncated_csv_has_marker(tmp_path, monkeypatch):
    import qzeno.cli as cli

    real = cli.rate_projective
    calls = {"n": 0}

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] == 3:
            raise KeyboardInterrupt
        return real(*a, **k)

    monkeypatch.setattr(cli, "rate_projective", flaky)
    code, out = run(tmp_path, "rate", "--method", "projective", "--kind", "ohmic",
                    "--tau-min", "1e-3", "--tau-max", "1", "--n-points", "6")
    assert code == 0
    text = out.read_text()
    assert text.rstrip().endswith(TRUNCATION_MARKER)
    assert len(read_csv(out)[1]) == 2 + 0  # marker line is a comment
