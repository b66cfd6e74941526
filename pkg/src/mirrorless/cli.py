"""Command-line front end.

    mirrorless gain-spectrum --preset fig2a --out-dir out/
    mirrorless threshold --config run.cfg --out-dir out/

Each run writes ``<prefix>_<command>.csv`` (header plus one row per grid
point), ``<prefix>_<command>_summary.json`` computed from the CSV rows
only, and ``<prefix>_manifest.json``.  Exit codes: 0 success, 2 config
validation failure, 3 runtime or convergence failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, RunConfig, load_config, serialize
from .errors import ConfigError, MirrorlessError
from .kernels import BACKEND
from .propagation import gain_spectrum
from .reduced import (apply_sweep, closed_form_gain, find_threshold, geometric_k,
                      normalized_residual, phase_matched_offset, reduced_coefficients)
from .susceptibility import chi_doppler, load_scheme, reduced_scheme

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

GAIN_COLUMNS = ("omega0_rad_s", "gain_slot1_db", "gain_slot2_db", "gain_slot3_db",
                "gain_slot4_db", "sigma_min", "oscillating", "error")


@dataclass
class RunManifest:
    config: dict
    version: str
    timestamp: str
    outputs: list = field(default_factory=list)
    exit_status: int = EXIT_OK
    message: str = ""
    assumptions: tuple = ()
    backend: str = BACKEND

    def to_json(self):
        return json.dumps({
            "config": self.config, "version": self.version, "timestamp": self.timestamp,
            "outputs": self.outputs, "exit_status": self.exit_status,
            "message": self.message, "assumptions": list(self.assumptions),
            "backend": self.backend}, indent=2, sort_keys=True) + "\n"


class RuntimeFailure(MirrorlessError):
    """Systemic failure: outputs may be incomplete; exit code 3."""


# ---------------------------------------------------------------------------
# formatting


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _flag(b):
    return "true" if b else "false"


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n",
                          encoding="utf-8")


def _json_num(x):
    # JSON has no nan/inf; keep them as strings
    return x if math.isfinite(x) else _num(x)


def _config_echo(cfg):
    out = {}
    for line in serialize(cfg).splitlines():
        key, _, value = line.partition(" = ")
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# commands


def _scheme(cfg):
    if cfg.scheme == "builtin:fig2":
        return load_scheme()
    if cfg.scheme == "builtin:reduced":
        return reduced_scheme()
    try:
        return load_scheme(cfg.scheme)
    except (OSError, MirrorlessError) as exc:
        raise RuntimeFailure(f"scheme {cfg.scheme!r} unreadable: {exc}") from exc


def _mismatch_pair(cfg, drive, w0):
    if cfg.mismatch == "geometric":
        return geometric_k(drive, w0)
    return 0.0, 0.0


def run_gain_spectrum(cfg, path):
    scheme = _scheme(cfg)
    seed = np.zeros(4, dtype=complex)
    seed[cfg.seed_slot - 1] = 1.0
    rows = gain_spectrum(scheme, cfg.medium, cfg.drive, cfg.omega0_grid(), seed=seed,
                         quadrature_order=cfg.quadrature_order, tol=cfg.onset_tolerance,
                         quadrature_method=cfg.quadrature_method)
    _write_csv(path, GAIN_COLUMNS, [
        [_num(r.omega0), *(_num(g) for g in r.gains_db), _num(r.sigma_min),
         _flag(r.oscillating), r.error] for r in rows])
    return ""


def summarize_gain_spectrum(rows):
    w0 = np.array([float(r["omega0_rad_s"]) for r in rows])
    sig = np.array([float(r["sigma_min"]) for r in rows])
    osc = [float(r["omega0_rad_s"]) for r in rows if r["oscillating"] == "true"]
    out = {"rows": len(rows), "oscillating_rows": len(osc), "oscillating_omega0_rad_s": osc,
           "error_rows": sum(1 for r in rows if r["error"])}
    finite = np.isfinite(sig)
    if finite.any():
        i = int(np.argmin(np.where(finite, sig, np.inf)))
        out["sigma_min"] = float(sig[i])
        out["sigma_min_omega0_rad_s"] = float(w0[i])
    for k in range(1, 5):
        g = np.array([float(r[f"gain_slot{k}_db"]) for r in rows])
        ok = np.isfinite(g)
        if ok.any():
            i = int(np.argmax(np.where(ok, g, -np.inf)))
            out[f"peak_gain_slot{k}_db"] = float(g[i])
            out[f"peak_gain_slot{k}_omega0_rad_s"] = float(w0[i])
    return out


THRESHOLD_COLUMNS = ("swept_value", "omega0_rad_s", "residual_re", "residual_im",
                     "s_re_per_m", "s_im_per_m", "error")
RESULT_COLUMNS = ("swept", "threshold_value", "omega0_rad_s", "residual_abs",
                  "s_re_per_m", "s_im_per_m", "s_abs_times_length", "converged", "message")


def _reduced_point(cfg, medium, drive, w0):
    k11, k41 = _mismatch_pair(cfg, drive, w0)
    return reduced_coefficients(medium, drive, w0, k11, k41)


def run_threshold(cfg, path):
    medium, drive = cfg.medium, cfg.drive
    mismatch = "geometric" if cfg.mismatch == "geometric" else None
    rows = []
    for p in cfg.threshold_values():
        try:
            med, drv = apply_sweep(medium, drive, cfg.threshold_swept, float(p))
            w0 = phase_matched_offset(med, drv, mismatch)
            co = _reduced_point(cfg, med, drv, w0)
            res = normalized_residual(co, med.slab_length)
            rows.append([_num(p), _num(w0), _num(res.real), _num(res.imag),
                         _num(co.s.real), _num(co.s.imag), ""])
        except MirrorlessError as exc:
            rows.append([_num(p)] + ["nan"] * 5 + [type(exc).__name__])
    _write_csv(path, THRESHOLD_COLUMNS, rows)

    report = find_threshold(medium, drive, cfg.threshold_swept,
                            (cfg.threshold_bracket.start, cfg.threshold_bracket.stop),
                            mismatch=mismatch, tol=cfg.threshold_tolerance)
    s = complex(math.nan, math.nan)
    length = medium.slab_length
    if math.isfinite(report.threshold_value):
        med, drv = apply_sweep(medium, drive, cfg.threshold_swept, report.threshold_value)
        s = _reduced_point(cfg, med, drv, report.pulled_frequency_at_threshold).s
        length = med.slab_length
    result_path = path.with_name(path.stem + "_result.csv")
    _write_csv(result_path, RESULT_COLUMNS, [[
        report.swept, _num(report.threshold_value), _num(report.pulled_frequency_at_threshold),
        _num(report.residual_at_threshold), _num(s.real), _num(s.imag), _num(abs(s) * length),
        _flag(report.converged), report.message]])
    return "" if report.converged else f"threshold: {report.message}"


def summarize_threshold(rows, result_rows):
    r = result_rows[0]
    residual = np.array([float(x["residual_re"]) for x in rows])
    sign_changes = int(np.sum(np.diff(np.sign(residual[np.isfinite(residual)])) != 0))
    return {"rows": len(rows), "swept": r["swept"],
            "threshold_value": _json_num(float(r["threshold_value"])),
            "omega0_rad_s": _json_num(float(r["omega0_rad_s"])),
            "residual_abs": _json_num(float(r["residual_abs"])),
            "s_abs_times_length": _json_num(float(r["s_abs_times_length"])),
            "converged": r["converged"] == "true", "message": r["message"],
            "residual_sign_changes_on_grid": sign_changes,
            "error_rows": sum(1 for x in rows if x["error"])}


REDUCED_COLUMNS = ("omega0_rad_s", "a11_re", "a11_im", "a14_re", "a14_im", "a41_re", "a41_im",
                   "a44_re", "a44_im", "delta_a_re", "delta_a_im", "s_re", "s_im",
                   "residual_re", "residual_im", "gain_db", "at_threshold", "error")


def run_reduced_analytic(cfg, path):
    medium, drive = cfg.medium, cfg.drive
    rows = []
    for w0 in cfg.omega0_grid():
        try:
            co = _reduced_point(cfg, medium, drive, float(w0))
            res = normalized_residual(co, medium.slab_length)
            g = closed_form_gain(co, medium.slab_length)
            gain_db = 20.0 * math.log10(abs(g.gain)) if g.gain != 0 and not g.at_threshold \
                else math.inf if g.at_threshold else -math.inf
            vals = [co.a11, co.a14, co.a41, co.a44, co.delta_a, co.s, res]
            rows.append([_num(w0)] + [_num(part) for v in vals for part in (v.real, v.imag)]
                        + [_num(gain_db), _flag(g.at_threshold), ""])
        except MirrorlessError as exc:
            rows.append([_num(w0)] + ["nan"] * 15 + ["false", type(exc).__name__])
    _write_csv(path, REDUCED_COLUMNS, rows)
    return ""


def summarize_reduced(rows):
    w0 = np.array([float(r["omega0_rad_s"]) for r in rows])
    g = np.array([float(r["gain_db"]) for r in rows])
    out = {"rows": len(rows), "at_threshold_rows": sum(r["at_threshold"] == "true" for r in rows),
           "error_rows": sum(1 for r in rows if r["error"])}
    ok = np.isfinite(g)
    if ok.any():
        i = int(np.argmax(np.where(ok, g, -np.inf)))
        out["peak_gain_db"] = float(g[i])
        out["peak_gain_omega0_rad_s"] = float(w0[i])
    return out


CHI_COLUMNS = (("omega0_rad_s",)
               + tuple(f"chi_{m}{n}_{p}" for m in range(1, 5) for n in range(1, 5)
                       for p in ("re", "im"))
               + tuple(f"mismatch_{m}_per_m" for m in range(1, 5)) + ("converged", "error"))


def run_chi_dump(cfg, path):
    scheme = _scheme(cfg)
    rows = []
    for w0 in cfg.omega0_grid():
        try:
            cm = chi_doppler(scheme, cfg.medium, cfg.drive, float(w0), cfg.quadrature_order,
                             method=cfg.quadrature_method)
            rows.append([_num(w0)]
                        + [_num(part) for v in cm.chi.ravel() for part in (v.real, v.imag)]
                        + [_num(np.real(k)) for k in cm.mismatch]
                        + [_flag(cm.converged), ""])
        except MirrorlessError as exc:
            rows.append([_num(w0)] + ["nan"] * 36 + ["false", type(exc).__name__])
    _write_csv(path, CHI_COLUMNS, rows)
    return ""


def summarize_chi(rows):
    mags = []
    for r in rows:
        vals = [complex(float(r[f"chi_{m}{n}_re"]), float(r[f"chi_{m}{n}_im"]))
                for m in range(1, 5) for n in range(1, 5)]
        mags.append(max(abs(v) for v in vals))
    mags = np.array(mags)
    ok = np.isfinite(mags)
    return {"rows": len(rows), "error_rows": sum(1 for r in rows if r["error"]),
            "max_abs_chi": float(mags[ok].max()) if ok.any() else "nan"}


_RUNNERS = {"gain-spectrum": run_gain_spectrum, "threshold": run_threshold,
            "reduced-analytic": run_reduced_analytic, "chi-dump": run_chi_dump}


def _summary(cfg, path):
    rows = _read_csv(path)
    if cfg.command == "gain-spectrum":
        return summarize_gain_spectrum(rows)
    if cfg.command == "threshold":
        return summarize_threshold(rows, _read_csv(path.with_name(path.stem + "_result.csv")))
    if cfg.command == "reduced-analytic":
        return summarize_reduced(rows)
    return summarize_chi(rows)


def run(cfg: RunConfig, out_dir=".") -> RunManifest:
    """Execute ``cfg.command`` and write CSV, JSON summary and manifest into ``out_dir``."""
    out = Path(out_dir)
    manifest = RunManifest(config=_config_echo(cfg), version=__version__,
                           timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
                           assumptions=cfg.assumptions)
    stem = f"{cfg.prefix}_{cfg.command.replace('-', '_')}"
    csv_path = out / f"{stem}.csv"
    try:
        out.mkdir(parents=True, exist_ok=True)
        message = _RUNNERS[cfg.command](cfg, csv_path)
        outputs = [csv_path]
        if cfg.command == "threshold":
            outputs.append(csv_path.with_name(csv_path.stem + "_result.csv"))
        summary_path = out / f"{stem}_summary.json"
        _write_json(summary_path, _summary(cfg, csv_path))
        outputs.append(summary_path)
        manifest.outputs = [p.name for p in outputs]
        if message:
            manifest.exit_status, manifest.message = EXIT_RUNTIME, message
    except (RuntimeFailure, OSError, MirrorlessError, FloatingPointError) as exc:
        manifest.exit_status = EXIT_RUNTIME
        manifest.message = f"{type(exc).__name__}: {exc}"
        manifest.outputs = []
    manifest_path = out / f"{cfg.prefix}_manifest.json"
    try:
        manifest.outputs.append(manifest_path.name)
        manifest_path.write_text(manifest.to_json(), encoding="utf-8")
    except OSError as exc:
        manifest.exit_status = EXIT_RUNTIME
        manifest.message = f"cannot write manifest: {exc}"
    return manifest


def build_parser():
    parser = argparse.ArgumentParser(prog="mirrorless", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--out-dir", type=Path, default=Path("."))
        p.add_argument("--preset", help="builtin preset name (e.g. fig2a)")
        p.add_argument("--quadrature-order", type=int)
        p.add_argument("--tolerance", type=float,
                       help="onset tolerance (gain-spectrum) or residual tolerance (threshold)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.preset)
        changes = {"command": args.command}
        if args.quadrature_order is not None:
            if args.quadrature_order < 2:
                raise ConfigError("quadrature_order", "must be >= 2")
            changes["quadrature_order"] = args.quadrature_order
        if args.tolerance is not None:
            if not args.tolerance > 0:
                raise ConfigError("tolerance", "must be > 0")
            key = "threshold_tolerance" if args.command == "threshold" else "onset_tolerance"
            changes[key] = args.tolerance
        cfg = replace(cfg, **changes)
        if cfg.command == "threshold" and cfg.threshold_bracket is None:
            raise ConfigError("threshold.low", "threshold command needs threshold.low_* "
                                               "and threshold.high_*")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = run(cfg, args.out_dir)
    if manifest.exit_status != EXIT_OK:
        print(f"run failed: {manifest.message}", file=sys.stderr)
    return manifest.exit_status


if __name__ == "__main__":
    sys.exit(main())
