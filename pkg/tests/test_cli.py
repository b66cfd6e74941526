import csv
import json
import math
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from mirrorless.cli import (CHI_COLUMNS, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, GAIN_COLUMNS,
                            REDUCED_COLUMNS, main, run)
from mirrorless.config import (PRESETS, load_config, load_config_text, rb85_defaults,
                               serialize, transition_frequencies)
from mirrorless.errors import ConfigError
from mirrorless.model import SidebandSet, eta_coefficient, rabi_from_power

TWO_PI = 2 * math.pi

SMALL = """\
command = gain-spectrum
medium.atom = rb85
medium.number_density_m3 = 1e16
medium.slab_length_cm = 5
medium.temperature_K = 0
medium.ground_decay_kHz = 1
drive.forward.rabi_MHz = 5
drive.forward.detuning_MHz = 0
drive.backward.rabi_MHz = 5
drive.backward.detuning_MHz = 500
scan.omega0.reference = hfs
scan.omega0.start_kHz = -20
scan.omega0.stop_kHz = 20
scan.omega0.count = 101
"""

THRESHOLD = """\
# reduced model with delta_a pinned to zero
command = threshold
medium.atom = rb85
medium.number_density_m3 = 1e16
medium.slab_length_cm = 5
medium.temperature_K = 0
medium.ground_decay_rad_s = 0
drive.forward.rabi_MHz = 5
drive.forward.detuning_MHz = 0
drive.backward.rabi_MHz = 5
drive.backward.detuning_MHz = 500
reduced.mismatch = none
threshold.swept = number_density
threshold.low_m3 = 1e15
threshold.high_m3 = 1e18
threshold.count = 5
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def without(text, key):
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith(key))


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# --- config validation ------------------------------------------------------------------

def test_missing_slab_length_names_key(tmp_path, capsys):
    cfg = write(tmp_path, without(SMALL, "medium.slab_length"))
    assert main(["gain-spectrum", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert "medium.slab_length_m" in capsys.readouterr().err
    with pytest.raises(ConfigError, match="medium.slab_length_m"):
        load_config(cfg)


@pytest.mark.parametrize("line", [
    "medium.colour = red",                      # unknown key
    "medium.slab_length_MHz = 5",               # unit of the wrong dimension
    "medium.slab_length_furlong = 5",           # unknown unit
    "medium.slab_length = 5",                   # missing unit suffix
    "scan.omega0.count = 0",                    # empty grid
    "quadrature_method = simpson",
    "seed.slot = 5",
])
def test_invalid_entries_exit_2(tmp_path, line):
    text = SMALL if "slab_length" not in line else without(SMALL, "medium.slab_length")
    cfg = write(tmp_path, text + line + "\n")
    assert main(["gain-spectrum", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_reversed_grid_rejected(tmp_path):
    text = SMALL.replace("start_kHz = -20", "start_kHz = 30")
    with pytest.raises(ConfigError, match="scan.omega0"):
        load_config_text(text)


def test_bad_flags_exit_2(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["gain-spectrum", "--config", str(cfg), "--quadrature-order", "1",
                 "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert main(["gain-spectrum", "--config", str(cfg), "--tolerance", "-1",
                 "--out-dir", str(tmp_path)]) == EXIT_CONFIG
    assert main(["gain-spectrum", "--preset", "nope", "--out-dir", str(tmp_path)]) == EXIT_CONFIG


# --- presets ---------------------------------------------------------------------------

def test_fig2a_preset_expansion():
    cfg = load_config(preset="fig2a")
    rb = rb85_defaults()
    assert cfg.medium.temperature == pytest.approx(92 + 273.15)
    assert cfg.medium.slab_length == pytest.approx(0.05)
    assert cfg.medium.ground_decay == pytest.approx(TWO_PI * 50e3)
    a_d1 = rb["linewidth"]["a"]
    a_d2 = rb["linewidth"]["a'"]
    assert cfg.forward.rabi == pytest.approx(
        rabi_from_power(10e-3, 1.5e-3, a_d1, rb["saturation_intensity"]["a"]), rel=1e-12)
    assert cfg.backward.rabi == pytest.approx(
        rabi_from_power(2.5e-3, 1.5e-3, a_d2, rb["saturation_intensity"]["a'"]), rel=1e-12)
    # 800 MHz red of the upper ground level (F = 3) on D1, 2 GHz blue of F = 2 on D2
    w = transition_frequencies(cfg.medium)
    drv = cfg.drive
    assert drv.carrier_forward - w["c-a"] == pytest.approx(-TWO_PI * 800e6, rel=1e-6)
    assert drv.carrier_backward - w["b-a'"] == pytest.approx(TWO_PI * 2e9, rel=1e-6)
    assert w["c-a"] < w["b-a"] and w["c-a'"] < w["b-a'"]
    assert abs(w["b-a"] - w["b-a'"]) > TWO_PI * 1e12       # different lines
    assert any("number_density" in a for a in cfg.assumptions)
    assert any("seed" in a for a in cfg.assumptions)


def test_preset_overridden_by_file(tmp_path):
    cfg = write(tmp_path, "medium.slab_length_cm = 3\n")
    assert load_config(cfg, preset="fig2a").medium.slab_length == pytest.approx(0.03)
    assert PRESETS["fig2a"]["medium.slab_length_cm"] == "5"


@pytest.mark.parametrize("text,preset", [(SMALL, None), (THRESHOLD, None), ("", "fig2a")])
def test_serialize_roundtrip(text, preset):
    cfg = load_config_text(text, preset=preset)
    again = load_config_text(serialize(cfg))
    assert again == cfg
    assert serialize(again) == serialize(cfg)


# --- runs ----------------------------------------------------------------------------------

def test_gain_spectrum_row_count(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["gain-spectrum", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = read_rows(tmp_path / "run_gain_spectrum.csv")
    assert tuple(rows[0]) == GAIN_COLUMNS
    assert len(rows) == 102
    # locale independent, fixed format
    for r in rows[1:]:
        assert "," not in r[0] and float(r[0]) > 0
        assert r[6] in ("true", "false")


def test_outputs_are_deterministic(tmp_path):
    cfg = write(tmp_path, SMALL)
    for d in ("a", "b"):
        assert main(["gain-spectrum", "--config", str(cfg), "--out-dir", str(tmp_path / d)]) == 0
    for name in ("run_gain_spectrum.csv", "run_gain_spectrum_summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma = json.loads((tmp_path / "a" / "run_manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "run_manifest.json").read_text())
    ma.pop("timestamp"), mb.pop("timestamp")
    assert ma == mb


def test_summary_is_derived_from_csv(tmp_path):
    cfg = write(tmp_path, SMALL)
    main(["gain-spectrum", "--config", str(cfg), "--out-dir", str(tmp_path)])
    with open(tmp_path / "run_gain_spectrum.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    summary = json.loads((tmp_path / "run_gain_spectrum_summary.json").read_text())
    w0 = [float(r["omega0_rad_s"]) for r in rows]
    sig = [float(r["sigma_min"]) for r in rows]
    i = int(np.argmin(sig))
    assert summary["sigma_min"] == sig[i] and summary["sigma_min_omega0_rad_s"] == w0[i]
    for k in range(1, 5):
        g = [float(r[f"gain_slot{k}_db"]) for r in rows]
        j = int(np.argmax(g))
        assert summary[f"peak_gain_slot{k}_db"] == g[j]
        assert summary[f"peak_gain_slot{k}_omega0_rad_s"] == w0[j]
    assert summary["rows"] == len(rows)
    assert summary["oscillating_omega0_rad_s"] == [
        float(r["omega0_rad_s"]) for r in rows if r["oscillating"] == "true"]


def test_manifest_lists_existing_outputs(tmp_path):
    cfg = load_config_text(SMALL)
    manifest = run(cfg, tmp_path)
    assert manifest.exit_status == EXIT_OK
    assert len(manifest.outputs) == 3
    for name in manifest.outputs:
        assert (tmp_path / name).is_file()
    data = json.loads((tmp_path / "run_manifest.json").read_text())
    assert data["config"]["medium.slab_length_m"] == "0.05"
    assert data["backend"] in ("compiled", "python")
    assert data["exit_status"] == 0 and data["timestamp"]


def test_threshold_at_quarter_wave(tmp_path):
    cfg_path = write(tmp_path, THRESHOLD)
    assert main(["threshold", "--config", str(cfg_path), "--out-dir", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "run_threshold_result.csv", newline="") as fh:
        (res,) = list(csv.DictReader(fh))
    n_th = float(res["threshold_value"])
    w0 = float(res["omega0_rad_s"])
    # independent closed form: s = sqrt(eta1 |eta4|) |Omega_B| / (|Delta_B| |Omega_F|)
    cfg = load_config(cfg_path)
    med, drv = cfg.medium, cfg.drive
    k = SidebandSet.from_drive(drv, w0).k_z()
    eta1 = eta_coefficient(k[1], n_th, med.wavelengths["b-a"], med.radiative_rates["b-a"])
    eta4 = eta_coefficient(k[4], n_th, med.wavelengths["c-a'"], med.radiative_rates["c-a'"])
    s = math.sqrt(eta1 * abs(eta4)) * abs(drv.rabi_backward) / (
        abs(drv.detuning_backward) * abs(drv.rabi_forward))
    assert s * med.slab_length == pytest.approx(math.pi / 2, rel=1e-6)
    assert float(res["s_abs_times_length"]) == pytest.approx(math.pi / 2, rel=1e-6)
    rows = read_rows(tmp_path / "run_threshold.csv")
    assert len(rows) == 1 + 5


def test_threshold_not_found_exits_3(tmp_path):
    text = THRESHOLD.replace("high_m3 = 1e18", "high_m3 = 2e15")
    cfg = write(tmp_path, text)
    assert main(["threshold", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_RUNTIME
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["exit_status"] == EXIT_RUNTIME and manifest["message"]


def test_unreadable_scheme_exits_3(tmp_path):
    cfg = write(tmp_path, SMALL + f"scheme = {tmp_path / 'missing.txt'}\n")
    assert main(["gain-spectrum", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_RUNTIME
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["exit_status"] == EXIT_RUNTIME
    assert "missing.txt" in manifest["message"]


def test_reduced_analytic_and_chi_dump(tmp_path):
    cfg = write(tmp_path, SMALL.replace("count = 101", "count = 11"))
    assert main(["reduced-analytic", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "run_reduced_analytic.csv")
    assert tuple(rows[0]) == REDUCED_COLUMNS and len(rows) == 12
    assert main(["chi-dump", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "run_chi_dump.csv")
    assert tuple(rows[0]) == CHI_COLUMNS and len(rows) == 12
    assert all(r[-2] == "true" and r[-1] == "" for r in rows[1:])


def test_flags_override_config(tmp_path):
    cfg = write(tmp_path, SMALL.replace("temperature_K = 0", "temperature_K = 300")
                .replace("count = 101", "count = 3"))
    assert main(["chi-dump", "--config", str(cfg), "--quadrature-order", "8",
                 "--tolerance", "1e-3", "--out-dir", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["config"]["quadrature_order"] == "8"
    assert manifest["config"]["tolerance.onset"] == "0.001"


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, SMALL.replace("count = 101", "count = 3"))
    proc = subprocess.run([sys.executable, "-m", "mirrorless.cli", "gain-spectrum", "--config",
                           str(cfg), "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "run_gain_spectrum.csv").exists()
