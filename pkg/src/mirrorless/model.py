"""Domain types and closed-form scalar quantities.

Unit conventions
----------------
* Frequencies, detunings, decay rates, Rabi frequencies: angular (rad/s).
* Lengths in meters, densities in m^-3.
* Rabi frequencies are half-Rabi values, ``Omega = mu * E / (2 hbar)``, the
  normalization in which the two-photon light shift reads
  ``(|Omega_F|^2 - |Omega_B|^2) / Delta_B``.
* Radiative rates ``gamma_i`` are per-transition dipole (amplitude) decay
  rates, i.e. half the Einstein A coefficient.  With this reading the
  coupling constant ``eta_i`` and the density-matrix model share one
  normalization.
* Internally fields are written ``E e^{-i(nu t - k z)}`` with signed
  ``k_z`` (forward = +z).  Coefficients quoted in the two-field closed form
  use the opposite carrier convention; :mod:`mirrorless.susceptibility`
  does the mapping.

Slots
-----
Four weak sidebands, ``1``: forward anti-Stokes (nu_F + w0), ``2``: backward
anti-Stokes (nu_B + w0), ``3``: forward Stokes (nu_F - w0), ``4``: backward
Stokes (nu_B - w0).  Slots 3 and 4 enter the state vector conjugated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .constants import C_LIGHT
from .errors import DivisionDomainError, InvalidArgumentError

TRANSITIONS = ("b-a", "c-a", "b-a'", "c-a'")
"""Optical transitions of the double-Lambda scheme.

``b`` is the lower and ``c`` the upper ground hyperfine level; ``a`` and
``a'`` are the two excited levels.
"""

SLOTS = (1, 2, 3, 4)
CONJUGATED = MappingProxyType({1: False, 2: False, 3: True, 4: True})
DIRECTION = MappingProxyType({1: +1, 2: -1, 3: +1, 4: -1})
# transition whose wavelength/decay rate defines eta for each slot
SLOT_TRANSITION = MappingProxyType({1: "b-a", 2: "b-a'", 3: "c-a", 4: "c-a'"})


def _finite(name, value):
    if not np.all(np.isfinite(value)):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class MediumSpec:
    number_density: float
    slab_length: float
    temperature: float
    atomic_mass: float
    hyperfine_splitting: float
    ground_decay: float
    radiative_rates: dict = field(default_factory=dict)
    wavelengths: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("number_density", "slab_length", "temperature", "atomic_mass",
                     "hyperfine_splitting", "ground_decay"):
            _finite(name, getattr(self, name))
        if self.number_density < 0:
            raise InvalidArgumentError("number_density must be >= 0")
        if self.slab_length <= 0:
            raise InvalidArgumentError("slab_length must be > 0")
        if self.temperature < 0:
            raise InvalidArgumentError("temperature must be >= 0")
        if self.atomic_mass <= 0:
            raise InvalidArgumentError("atomic_mass must be > 0")
        if self.hyperfine_splitting <= 0:
            raise InvalidArgumentError("hyperfine_splitting must be > 0")
        if self.ground_decay < 0:
            raise InvalidArgumentError("ground_decay must be >= 0")
        for label, table in (("radiative_rates", self.radiative_rates),
                             ("wavelengths", self.wavelengths)):
            missing = set(TRANSITIONS) - set(table)
            if missing:
                raise InvalidArgumentError(f"{label} missing transitions {sorted(missing)}")
            for t in TRANSITIONS:
                _finite(f"{label}[{t}]", table[t])
                if table[t] <= 0:
                    raise InvalidArgumentError(f"{label}[{t}] must be > 0")
            object.__setattr__(self, label, MappingProxyType(
                {t: float(table[t]) for t in TRANSITIONS}))
        lam = self.wavelengths
        for upper in ("a", "a'"):
            l1, l2 = lam["b-" + upper], lam["c-" + upper]
            if abs(l1 - l2) >= 0.01 * min(l1, l2):
                raise InvalidArgumentError(
                    f"legs b-{upper} and c-{upper} differ by more than 1% in wavelength")

    def replace(self, **changes):
        kwargs = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kwargs.update(changes)
        kwargs["radiative_rates"] = dict(kwargs["radiative_rates"])
        kwargs["wavelengths"] = dict(kwargs["wavelengths"])
        return MediumSpec(**kwargs)

    @property
    def doppler_velocity(self):
        """1-D Maxwellian velocity spread sqrt(k_B T / m) in m/s."""
        from .constants import CONSTANTS
        return math.sqrt(CONSTANTS.boltzmann * self.temperature / self.atomic_mass)


@dataclass(frozen=True)
class DriveSpec:
    rabi_forward: complex
    rabi_backward: complex
    detuning_forward: float
    detuning_backward: float
    carrier_forward: float
    carrier_backward: float
    beam_angle: float = 0.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            _finite(name, getattr(self, name))
        object.__setattr__(self, "rabi_forward", complex(self.rabi_forward))
        object.__setattr__(self, "rabi_backward", complex(self.rabi_backward))
        if self.carrier_forward <= 0 or self.carrier_backward <= 0:
            raise InvalidArgumentError("carrier frequencies must be > 0")
        if not abs(self.beam_angle) < math.pi / 2:
            raise InvalidArgumentError("|beam_angle| must be < pi/2")

    def replace(self, **changes):
        kwargs = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kwargs.update(changes)
        return DriveSpec(**kwargs)


@dataclass(frozen=True)
class SidebandSet:
    """The four weak sidebands at Raman offset ``raman_offset``."""

    raman_offset: float
    carrier_forward: float
    carrier_backward: float
    beam_angle: float = 0.0

    conjugated = CONJUGATED
    direction = DIRECTION

    def __post_init__(self):
        if not np.real(self.raman_offset) > 0:
            raise InvalidArgumentError("raman_offset must be > 0")
        if np.any(np.real(list(self.frequencies.values())) <= 0):
            raise InvalidArgumentError("slot frequencies must be positive")

    @classmethod
    def from_drive(cls, drive, raman_offset):
        return cls(raman_offset, drive.carrier_forward, drive.carrier_backward,
                   drive.beam_angle)

    @property
    def frequencies(self):
        w0 = self.raman_offset
        return {1: self.carrier_forward + w0, 2: self.carrier_backward + w0,
                3: self.carrier_forward - w0, 4: self.carrier_backward - w0}

    def k_z(self, c=C_LIGHT):
        """Signed z wavevectors of the slots (1/m)."""
        cos_t = math.cos(self.beam_angle)
        f = self.frequencies
        return {s: DIRECTION[s] * f[s] / c * (1.0 if DIRECTION[s] > 0 else cos_t)
                for s in SLOTS}

    def drive_k_z(self, c=C_LIGHT):
        """Signed z wavevectors of the forward and backward drives."""
        return (self.carrier_forward / c,
                -self.carrier_backward * math.cos(self.beam_angle) / c)


def eta_coefficient(k_z, number_density, wavelength, gamma):
    """Coupling constant ``k_z * 3/(8 pi^2) * N * lambda^3 * gamma``."""
    for name, v in (("k_z", k_z), ("number_density", number_density),
                    ("wavelength", wavelength), ("gamma", gamma)):
        _finite(name, v)
    if number_density < 0:
        raise InvalidArgumentError("number_density must be >= 0")
    if wavelength <= 0 or gamma <= 0:
        raise InvalidArgumentError("wavelength and gamma must be > 0")
    return k_z * 3.0 / (8.0 * math.pi ** 2) * number_density * wavelength ** 3 * gamma


def slot_eta(medium, slot, k_z):
    t = SLOT_TRANSITION[slot]
    return eta_coefficient(k_z, medium.number_density, medium.wavelengths[t],
                           medium.radiative_rates[t])


def light_shift(rabi_forward, rabi_backward, detuning_backward):
    if detuning_backward == 0:
        raise DivisionDomainError("light shift needs a nonzero backward detuning")
    return (abs(rabi_forward) ** 2 - abs(rabi_backward) ** 2) / detuning_backward


def geometric_mismatch(raman_offset, beam_angle=0.0, c=C_LIGHT):
    """z-projection of ``k_F + k_B - k_1 - k_4`` with forward fields along +z.

    Only the sideband offsets survive, so the result is
    ``-w0 (1 + cos(theta)) / c``; collinear beams give ``-2 w0 / c``.
    """
    _finite("raman_offset", raman_offset)
    _finite("beam_angle", beam_angle)
    return -raman_offset * (1.0 + math.cos(beam_angle)) / c


def stabilization_coefficient(eta_1, rabi_forward, c=C_LIGHT):
    """Dimensionless frequency-pulling coefficient ``c * eta_1 / |Omega_F|^2``."""
    if rabi_forward == 0:
        raise DivisionDomainError("stabilization coefficient needs Omega_F != 0")
    return c * eta_1 / abs(rabi_forward) ** 2


def rabi_from_power(power, spot_diameter, linewidth, saturation_intensity):
    """Half-Rabi frequency (rad/s) of a Gaussian beam on a two-level line.

    Parameters
    ----------
    power : float
        Beam power in W.
    spot_diameter : float
        1/e^2 diameter in m; peak intensity is ``2 P / (pi w^2)``.
    linewidth : float
        Natural linewidth (Einstein A) in rad/s.
    saturation_intensity : float
        In W/m^2.
    """
    if power < 0 or spot_diameter <= 0 or saturation_intensity <= 0:
        raise InvalidArgumentError("power >= 0, spot_diameter > 0, I_sat > 0 required")
    w = spot_diameter / 2.0
    intensity = 2.0 * power / (math.pi * w * w)
    return 0.5 * linewidth * math.sqrt(intensity / (2.0 * saturation_intensity))
