"""Run configuration: flat ``key = value`` files with unit-suffixed keys.

Every physical quantity is written as ``<path>_<unit>``, e.g.
``medium.slab_length_cm = 5`` or ``drive.forward.detuning_MHz = -800``.
Frequencies given in Hz/kHz/MHz/GHz are cyclic and converted to rad/s.
Values are normalized to SI (angular frequencies in rad/s) on load, and
:func:`serialize` writes the canonical SI form, so that
``load_config_text(serialize(cfg)) == cfg``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from .constants import CONSTANTS, load_atomic_data, parse_key_values
from .errors import ConfigError, InvalidArgumentError
from .model import TRANSITIONS, DriveSpec, MediumSpec, rabi_from_power
from .susceptibility import QUADRATURE_METHODS

COMMANDS = ("gain-spectrum", "threshold", "reduced-analytic", "chi-dump")
BUILTIN_SCHEMES = ("builtin:fig2", "builtin:reduced")
SWEEPS = {"rabi_backward": "angular", "number_density": "density", "slab_length": "length"}

_TWO_PI = 2.0 * math.pi
UNITS = {
    "angular": {"rad_s": 1.0, "Hz": _TWO_PI, "kHz": _TWO_PI * 1e3,
                "MHz": _TWO_PI * 1e6, "GHz": _TWO_PI * 1e9},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "density": {"m3": 1.0, "cm3": 1e6},
    "temperature": {"K": 1.0, "C": 1.0},
    "power": {"W": 1.0, "mW": 1e-3},
    "intensity": {"W_m2": 1.0, "mW_cm2": 10.0},
    "mass": {"kg": 1.0, "amu": CONSTANTS.atomic_mass_unit},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
}
CANONICAL = {"angular": "rad_s", "length": "m", "density": "m3", "temperature": "K",
             "power": "W", "intensity": "W_m2", "mass": "kg", "angle": "rad"}

_QUANTITIES = {
    "medium.number_density": "density",
    "medium.slab_length": "length",
    "medium.temperature": "temperature",
    "medium.atomic_mass": "mass",
    "medium.hyperfine_splitting": "angular",
    "medium.ground_decay": "angular",
    "drive.beam_angle": "angle",
    "scan.omega0.start": "angular",
    "scan.omega0.stop": "angular",
}
for _t in TRANSITIONS:
    _QUANTITIES[f"medium.radiative_rate.{_t}"] = "angular"
    _QUANTITIES[f"medium.wavelength.{_t}"] = "length"
for _d in ("forward", "backward"):
    for _name, _dim in (("rabi", "angular"), ("rabi_phase", "angle"), ("power", "power"),
                        ("spot_diameter", "length"), ("detuning", "angular"),
                        ("saturation_intensity", "intensity")):
        _QUANTITIES[f"drive.{_d}.{_name}"] = _dim
del _t, _d, _name, _dim

_PLAIN = {"command", "scheme", "preset", "quadrature_order", "quadrature_method", "tolerance.onset",
          "tolerance.threshold", "scan.omega0.count", "scan.omega0.reference",
          "threshold.swept", "threshold.count", "reduced.mismatch", "seed.slot",
          "output.prefix", "medium.atom", "provenance.preset"}

REQUIRED_MEDIUM = ("number_density", "slab_length", "temperature", "ground_decay")


@dataclass(frozen=True)
class BeamSettings:
    """One drive beam: half-Rabi magnitude and phase, detuning from its primary leg."""

    rabi: float
    phase: float
    detuning: float


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if not isinstance(self.count, int) or self.count < 1:
            raise InvalidArgumentError("grid count must be an integer >= 1")
        if not self.start <= self.stop:
            raise InvalidArgumentError("grid start must be <= stop")

    def values(self):
        if self.count == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    """Validated run description; all quantities SI / rad/s."""

    command: str
    medium: MediumSpec
    forward: BeamSettings
    backward: BeamSettings
    beam_angle: float
    scheme: str
    omega0: Grid
    omega0_reference: str = "zero"
    threshold_swept: str = "number_density"
    threshold_bracket: Grid = None
    mismatch: str = "geometric"
    seed_slot: int = 1
    quadrature_order: int = 64
    quadrature_method: str = "adaptive"
    onset_tolerance: float = 1e-6
    threshold_tolerance: float = 1e-9
    prefix: str = "run"
    preset: str = ""
    assumptions: tuple = field(default_factory=tuple)

    @property
    def drive(self) -> DriveSpec:
        med = self.medium
        omega = transition_frequencies(med)
        f, b = self.forward, self.backward
        return DriveSpec(
            rabi_forward=f.rabi * complex(math.cos(f.phase), math.sin(f.phase)),
            rabi_backward=b.rabi * complex(math.cos(b.phase), math.sin(b.phase)),
            detuning_forward=f.detuning, detuning_backward=b.detuning,
            carrier_forward=omega[PRIMARY["forward"]] + f.detuning,
            carrier_backward=omega[PRIMARY["backward"]] + b.detuning,
            beam_angle=self.beam_angle)

    def omega0_grid(self):
        offset = self.medium.hyperfine_splitting if self.omega0_reference == "hfs" else 0.0
        return self.omega0.values() + offset

    def threshold_values(self):
        return self.threshold_bracket.values()


PRIMARY = MappingProxyType({"forward": "c-a", "backward": "b-a'"})


def transition_frequencies(medium):
    """Angular transition frequencies of the four legs from their wavelengths."""
    c = CONSTANTS.speed_of_light
    return {t: _TWO_PI * c / medium.wavelengths[t] for t in TRANSITIONS}


# ---------------------------------------------------------------------------
# presets


def rb85_defaults(data=None):
    """Atomic defaults for the Rb-85 D1 (a) / D2 (a') double-Lambda scheme.

    ``b`` is the F=2 and ``c`` the F=3 ground level; ground hyperfine shifts
    of ``-(I+1)/(2I+1)`` and ``I/(2I+1)`` of the splitting (I = 5/2) place
    the legs around the line centroids.  Excited hyperfine structure is
    ignored.  Radiative rates are half the natural linewidths.
    """
    data = load_atomic_data() if data is None else data
    c = CONSTANTS.speed_of_light
    hfs = _TWO_PI * float(data["rb85.hyperfine_splitting_Hz"])
    spin = 2.5
    lower, upper = -(spin + 1) / (2 * spin + 1) * hfs, spin / (2 * spin + 1) * hfs
    lines = {"a": "rb85.d1", "a'": "rb85.d2"}
    wavelengths, rates, isat = {}, {}, {}
    for e, key in lines.items():
        centroid = _TWO_PI * c / float(data[key + ".wavelength_m"])
        width = _TWO_PI * float(data[key + ".natural_linewidth_Hz"])
        isat[e] = float(data[key + ".isat_mW_cm2"]) * 10.0
        for g, shift in (("b", lower), ("c", upper)):
            wavelengths[f"{g}-{e}"] = _TWO_PI * c / (centroid - shift)
            rates[f"{g}-{e}"] = width / 2.0
    return dict(hyperfine_splitting=hfs, wavelengths=wavelengths, radiative_rates=rates,
                atomic_mass=float(data["rb85.mass_amu"]) * CONSTANTS.atomic_mass_unit,
                saturation_intensity=isat,
                linewidth={e: 2.0 * rates[f"b-{e}"] for e in lines})


PRESETS = {
    "fig2a": {
        "command": "gain-spectrum",
        "scheme": "builtin:fig2",
        "medium.atom": "rb85",
        "medium.temperature_C": "92",
        "medium.slab_length_cm": "5",
        "medium.number_density_m3": "2.0e18",
        "medium.ground_decay_kHz": "50",
        "drive.forward.power_mW": "10",
        "drive.forward.spot_diameter_mm": "1.5",
        "drive.forward.detuning_MHz": "-800",
        "drive.backward.power_mW": "2.5",
        "drive.backward.spot_diameter_mm": "1.5",
        "drive.backward.detuning_MHz": "2000",
        "scan.omega0.reference": "hfs",
        "scan.omega0.start_MHz": "-2",
        "scan.omega0.stop_MHz": "2",
        "scan.omega0.count": "201",
        "seed.slot": "1",
    },
}

PRESET_ASSUMPTIONS = {
    "fig2a": (
        "medium.number_density: assumed 2.0e18 m^-3, the Rb-85 share of the saturated "
        "vapor density at 92 C; not a reported value",
        "seed: unit forward anti-Stokes (slot 1) input; the seed level is not reported",
        "medium.ground_decay: 2 pi x 50 kHz, read from the quoted transit broadening",
        "medium.slab_length: 5 cm, the quoted typical cell length",
        "drive Rabi frequencies: peak intensity of a Gaussian beam with the quoted "
        "spot size taken as 1/e^2 diameter, two-level saturation intensity",
    ),
}


# ---------------------------------------------------------------------------
# parsing


def _split_unit(key):
    """``(quantity, dimension, unit)`` for a unit-suffixed key, else ``None``."""
    candidates = [q for q in _QUANTITIES if key.startswith(q + "_")]
    for quantity in candidates:
        dim = _QUANTITIES[quantity]
        unit = key[len(quantity) + 1:]
        if unit in UNITS[dim]:
            return quantity, dim, unit
    if candidates:
        quantity = max(candidates, key=len)
        dim = _QUANTITIES[quantity]
        raise ConfigError(key, f"unit {key[len(quantity) + 1:]!r} is not a {dim} unit "
                               f"(use one of {', '.join(UNITS[dim])})")
    return None


def _convert(key, dim, unit, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(key, "value must be finite")
    if dim == "temperature" and unit == "C":
        return value + 273.15
    return value * UNITS[dim][unit]


def _threshold_key(key):
    for end in ("low", "high"):
        stem = f"threshold.{end}_"
        if key.startswith(stem):
            return end, key[len(stem):]
    return None


def normalize(entries):
    """Resolve unit suffixes: ``{quantity: SI value}`` plus plain text entries."""
    values, plain, threshold = {}, {}, {}
    for key, text in entries.items():
        if key in _PLAIN:
            plain[key] = text
            continue
        tk = _threshold_key(key)
        if tk is not None:
            threshold[tk[0]] = (key, tk[1], text)
            continue
        split = _split_unit(key)
        if split is None:
            raise ConfigError(key, "unknown key")
        quantity, dim, unit = split
        if quantity in values:
            raise ConfigError(key, f"{quantity} given more than once")
        values[quantity] = _convert(key, dim, unit, text)
    return values, plain, threshold


def _int(plain, key, default):
    if key not in plain:
        return default
    try:
        return int(plain[key])
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {plain[key]!r}") from None


def _float(plain, key, default):
    if key not in plain:
        return default
    try:
        return float(plain[key])
    except ValueError:
        raise ConfigError(key, f"expected a number, got {plain[key]!r}") from None


def _require(values, quantity, dim):
    if quantity not in values:
        raise ConfigError(f"{quantity}_{CANONICAL[dim]}", "missing required key")
    return values[quantity]


def _beam(values, direction, atom):
    base = f"drive.{direction}"
    excited = "a" if PRIMARY[direction].endswith("-a") else "a'"
    rabi = values.get(base + ".rabi")
    if rabi is None:
        if base + ".power" not in values:
            raise ConfigError(f"{base}.rabi_rad_s",
                              f"missing required key (or give {base}.power_mW "
                              f"and {base}.spot_diameter_mm)")
        diameter = _require(values, base + ".spot_diameter", "length")
        isat = values.get(base + ".saturation_intensity")
        if isat is None:
            if atom is None:
                raise ConfigError(f"{base}.saturation_intensity_W_m2", "missing required key")
            isat = atom["saturation_intensity"][excited]
        width = atom["linewidth"][excited] if atom else None
        if width is None:
            raise ConfigError(f"{base}.rabi_rad_s", "power conversion needs medium.atom")
        try:
            rabi = rabi_from_power(values[base + ".power"], diameter, width, isat)
        except InvalidArgumentError as exc:
            raise ConfigError(f"{base}.power_W", str(exc)) from None
    elif base + ".power" in values:
        raise ConfigError(f"{base}.power_W", "give either rabi or power, not both")
    if rabi < 0:
        raise ConfigError(f"{base}.rabi_rad_s", "must be >= 0")
    detuning = _require(values, base + ".detuning", "angular")
    return BeamSettings(float(rabi), float(values.get(base + ".rabi_phase", 0.0)), float(detuning))


def _medium(values, atom):
    kwargs = {}
    for name in REQUIRED_MEDIUM:
        dim = _QUANTITIES["medium." + name]
        kwargs[name] = _require(values, "medium." + name, dim)
    for name in ("atomic_mass", "hyperfine_splitting"):
        if "medium." + name in values:
            kwargs[name] = values["medium." + name]
        elif atom is not None:
            kwargs[name] = atom[name]
        else:
            raise ConfigError(f"medium.{name}_{CANONICAL[_QUANTITIES['medium.' + name]]}",
                              "missing required key (or set medium.atom = rb85)")
    for table, dim in (("radiative_rate", "angular"), ("wavelength", "length")):
        out = {}
        for t in TRANSITIONS:
            q = f"medium.{table}.{t}"
            if q in values:
                out[t] = values[q]
            elif atom is not None:
                out[t] = atom[table + "s"][t]
            else:
                raise ConfigError(f"{q}_{CANONICAL[dim]}", "missing required key")
        kwargs[table + "s"] = out
    try:
        return MediumSpec(**kwargs)
    except InvalidArgumentError as exc:
        raise ConfigError("medium", str(exc)) from None


def build_config(entries, preset=None):
    """Validate a flat ``{key: text}`` mapping into a :class:`RunConfig`.

    Preset entries (from ``preset`` or the ``preset`` key) are applied
    first and overridden key by key; overriding a quantity in a different
    unit replaces the preset value.
    """
    entries = dict(entries)
    name = preset or entries.get("preset")
    base = {}
    if name:
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r} (known: {', '.join(PRESETS)})")
        base = dict(PRESETS[name])
        overridden = set()
        for key in entries:
            split = _split_unit(key) if key not in _PLAIN else None
            if split is not None:
                overridden.add(split[0])
        for key in list(base):
            split = _split_unit(key) if key not in _PLAIN else None
            if split is not None and split[0] in overridden:
                del base[key]
    base.update(entries)
    base.pop("preset", None)
    label = base.pop("provenance.preset", None) or name
    if label and label not in PRESETS:
        raise ConfigError("provenance.preset", f"unknown preset {label!r}")
    values, plain, threshold = normalize(base)

    command = plain.get("command")
    if command is None:
        raise ConfigError("command", "missing required key")
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")

    atom_name = plain.get("medium.atom")
    if atom_name not in (None, "rb85"):
        raise ConfigError("medium.atom", f"unknown atom {atom_name!r} (known: rb85)")
    atom = rb85_defaults() if atom_name == "rb85" else None
    medium = _medium(values, atom)
    forward = _beam(values, "forward", atom)
    backward = _beam(values, "backward", atom)

    scheme = plain.get("scheme", "builtin:fig2")
    reference = plain.get("scan.omega0.reference", "zero")
    if reference not in ("zero", "hfs"):
        raise ConfigError("scan.omega0.reference", "must be 'zero' or 'hfs'")
    try:
        count = _int(plain, "scan.omega0.count", 1)
        start = values.get("scan.omega0.start", 0.0)
        omega0 = Grid(start, values.get("scan.omega0.stop", start), count)
    except InvalidArgumentError as exc:
        raise ConfigError("scan.omega0", str(exc)) from None

    swept = plain.get("threshold.swept", "number_density")
    if swept not in SWEEPS:
        raise ConfigError("threshold.swept", f"must be one of {', '.join(SWEEPS)}")
    bracket = None
    if threshold:
        dim = SWEEPS[swept]
        bounds = {}
        for end in ("low", "high"):
            if end not in threshold:
                raise ConfigError(f"threshold.{end}_{CANONICAL[dim]}", "missing required key")
            key, unit, text = threshold[end]
            if unit not in UNITS[dim]:
                raise ConfigError(key, f"unit {unit!r} is not a {dim} unit")
            bounds[end] = _convert(key, dim, unit, text)
        try:
            bracket = Grid(bounds["low"], bounds["high"], _int(plain, "threshold.count", 11))
        except InvalidArgumentError as exc:
            raise ConfigError("threshold", str(exc)) from None
    elif command == "threshold":
        raise ConfigError(f"threshold.low_{CANONICAL[SWEEPS[swept]]}", "missing required key")
    mismatch = plain.get("reduced.mismatch", "geometric")
    if mismatch not in ("geometric", "none"):
        raise ConfigError("reduced.mismatch", "must be 'geometric' or 'none'")

    seed_slot = _int(plain, "seed.slot", 1)
    if seed_slot not in (1, 2, 3, 4):
        raise ConfigError("seed.slot", "must be 1, 2, 3 or 4")
    order = _int(plain, "quadrature_order", 64)
    if order < 2:
        raise ConfigError("quadrature_order", "must be >= 2")
    method = plain.get("quadrature_method", "adaptive")
    if method not in QUADRATURE_METHODS:
        raise ConfigError("quadrature_method", f"must be one of {', '.join(QUADRATURE_METHODS)}")
    onset = _float(plain, "tolerance.onset", 1e-6)
    thr_tol = _float(plain, "tolerance.threshold", 1e-9)
    if not onset > 0 or not thr_tol > 0:
        raise ConfigError("tolerance.onset" if not onset > 0 else "tolerance.threshold",
                          "must be > 0")
    angle = values.get("drive.beam_angle", 0.0)
    if not abs(angle) < math.pi / 2:
        raise ConfigError("drive.beam_angle_rad", "|angle| must be < pi/2")
    prefix = plain.get("output.prefix", "run")
    if not prefix or any(ch in prefix for ch in "/\\"):
        raise ConfigError("output.prefix", "must be a plain file-name stem")

    return RunConfig(
        command=command, medium=medium, forward=forward, backward=backward,
        beam_angle=angle, scheme=scheme, omega0=omega0, omega0_reference=reference,
        threshold_swept=swept, threshold_bracket=bracket, mismatch=mismatch,
        seed_slot=seed_slot, quadrature_order=order, quadrature_method=method,
        onset_tolerance=onset,
        threshold_tolerance=thr_tol, prefix=prefix, preset=label or "",
        assumptions=PRESET_ASSUMPTIONS.get(label, ()) if label else ())


def load_config_text(text, source="<string>", preset=None):
    try:
        entries = parse_key_values(text, source)
    except InvalidArgumentError as exc:
        raise ConfigError(source, str(exc)) from None
    return build_config(entries, preset)


def load_config(path=None, preset=None):
    """Read and validate a config file; ``path=None`` needs a ``preset``."""
    if path is None:
        if not preset:
            raise ConfigError("config", "no config file and no preset given")
        return build_config({}, preset)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return load_config_text(text, str(path), preset)


def _fmt(x):
    return repr(float(x))


def serialize(cfg: RunConfig) -> str:
    """Canonical SI text of ``cfg``; reloading it gives an equal config."""
    med = cfg.medium
    lines = [
        f"command = {cfg.command}",
        f"scheme = {cfg.scheme}",
        f"medium.number_density_m3 = {_fmt(med.number_density)}",
        f"medium.slab_length_m = {_fmt(med.slab_length)}",
        f"medium.temperature_K = {_fmt(med.temperature)}",
        f"medium.atomic_mass_kg = {_fmt(med.atomic_mass)}",
        f"medium.hyperfine_splitting_rad_s = {_fmt(med.hyperfine_splitting)}",
        f"medium.ground_decay_rad_s = {_fmt(med.ground_decay)}",
    ]
    for t in TRANSITIONS:
        lines.append(f"medium.radiative_rate.{t}_rad_s = {_fmt(med.radiative_rates[t])}")
    for t in TRANSITIONS:
        lines.append(f"medium.wavelength.{t}_m = {_fmt(med.wavelengths[t])}")
    for d, beam in (("forward", cfg.forward), ("backward", cfg.backward)):
        lines += [f"drive.{d}.rabi_rad_s = {_fmt(beam.rabi)}",
                  f"drive.{d}.rabi_phase_rad = {_fmt(beam.phase)}",
                  f"drive.{d}.detuning_rad_s = {_fmt(beam.detuning)}"]
    lines += [
        f"drive.beam_angle_rad = {_fmt(cfg.beam_angle)}",
        f"scan.omega0.reference = {cfg.omega0_reference}",
        f"scan.omega0.start_rad_s = {_fmt(cfg.omega0.start)}",
        f"scan.omega0.stop_rad_s = {_fmt(cfg.omega0.stop)}",
        f"scan.omega0.count = {cfg.omega0.count}",
        f"threshold.swept = {cfg.threshold_swept}",
        f"reduced.mismatch = {cfg.mismatch}",
    ]
    if cfg.threshold_bracket is not None:
        unit = CANONICAL[SWEEPS[cfg.threshold_swept]]
        lines += [f"threshold.low_{unit} = {_fmt(cfg.threshold_bracket.start)}",
                  f"threshold.high_{unit} = {_fmt(cfg.threshold_bracket.stop)}",
                  f"threshold.count = {cfg.threshold_bracket.count}"]
    lines += [
        f"seed.slot = {cfg.seed_slot}",
        f"quadrature_order = {cfg.quadrature_order}",
        f"quadrature_method = {cfg.quadrature_method}",
        f"tolerance.onset = {_fmt(cfg.onset_tolerance)}",
        f"tolerance.threshold = {_fmt(cfg.threshold_tolerance)}",
        f"output.prefix = {cfg.prefix}",
    ]
    if cfg.preset:
        lines.append(f"provenance.preset = {cfg.preset}")
    return "\n".join(lines) + "\n"
