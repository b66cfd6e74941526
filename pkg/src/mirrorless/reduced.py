"""Closed-form two-field model: forward anti-Stokes (slot 1) and backward
Stokes (slot 4) coupled through the ground-state coherence.

Coefficients follow the carrier convention of the closed-form theory.  The
coupling constants are evaluated with signed ``(k_i)_z`` so that
``a14 * a41 > 0`` and ``s = sqrt(a14 a41 - delta_a^2)`` is real in the
oscillating regime.  The +z propagation generator consistent with that
choice is ``[[a11, a14], [-a41, a44]]`` (see :func:`generator`); its
boundary-value solution is exactly :func:`closed_form_gain`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .constants import C_LIGHT
from .errors import DivisionDomainError, InvalidArgumentError
from .model import DriveSpec, MediumSpec, SidebandSet, light_shift, slot_eta

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ReducedCoefficients:
    a11: complex
    a14: complex
    a41: complex
    a44: complex
    delta_a: complex
    s: complex
    k11: float = 0.0
    k41: float = 0.0

    @classmethod
    def from_entries(cls, a11, a14, a41, a44, k11=0.0, k41=0.0):
        a11, a14, a41, a44 = (complex(x) for x in (a11, a14, a41, a44))
        delta_a = (a11 - a44) / 2.0
        s = cmath.sqrt(a14 * a41 - delta_a * delta_a)
        return cls(a11, a14, a41, a44, delta_a, s, float(k11), float(k41))

    @property
    def mean(self):
        return (self.a11 + self.a44) / 2.0

    def with_branch(self, sign):
        """Same coefficients with ``s`` replaced by ``sign * s``."""
        return ReducedCoefficients(self.a11, self.a14, self.a41, self.a44,
                                   self.delta_a, sign * self.s, self.k11, self.k41)


class ClosedFormGain(NamedTuple):
    gain: Optional[complex]
    at_threshold: bool


@dataclass(frozen=True)
class ThresholdReport:
    swept: str
    threshold_value: float
    residual_at_threshold: float
    pulled_frequency_at_threshold: float
    bracket: tuple
    converged: bool
    message: str = ""


def geometric_k(drive, raman_offset, c=C_LIGHT):
    """Residual mismatches ``(k11, k41)`` of the collinear/angled geometry.

    ``k11 - k41 = w0 (1 + cos theta) / c``, the closed-form-convention value
    of ``[k_F + k_B - k_1 - k_4]_z``.
    """
    return raman_offset / c, -raman_offset * math.cos(drive.beam_angle) / c


def reduced_coefficients(medium: MediumSpec, drive: DriveSpec, raman_offset: float,
                         k11: float = 0.0, k41: float = 0.0) -> ReducedCoefficients:
    om_f, om_b, det_b = drive.rabi_forward, drive.rabi_backward, drive.detuning_backward
    if om_f == 0:
        raise DivisionDomainError("reduced model needs Omega_F != 0")
    if det_b == 0:
        raise DivisionDomainError("reduced model needs Delta_B != 0")
    kz = SidebandSet.from_drive(drive, raman_offset).k_z()
    eta1 = slot_eta(medium, 1, kz[1])
    eta4 = slot_eta(medium, 4, kz[4])
    f2 = abs(om_f) ** 2
    bracket = (medium.ground_decay + 1j * (raman_offset - medium.hyperfine_splitting)
               + 1j * (abs(om_b) ** 2 - f2) / det_b)
    a11 = -eta1 * bracket / f2 - 1j * k11
    a14 = 1j * eta1 * om_b * om_f / (det_b * f2)
    a41 = 1j * eta4 * om_b.conjugate() * om_f.conjugate() / (det_b * f2)
    a44 = -1j * k41
    return ReducedCoefficients.from_entries(a11, a14, a41, a44, k11, k41)


def generator(coeffs: ReducedCoefficients) -> np.ndarray:
    """2x2 +z propagation matrix acting on ``[E1, E4*]``."""
    return np.array([[coeffs.a11, coeffs.a14], [-coeffs.a41, coeffs.a44]], dtype=complex)


def _sin_over_s(s, L):
    x = s * L
    if abs(x) < 1e-4:
        return L * (1.0 - x * x / 6.0 + x ** 4 / 120.0)
    return cmath.sin(x) / s


def scaled_residual(coeffs: ReducedCoefficients, L: float):
    """``(r, q)`` with ``cos(sL) - delta_a sin(sL)/s = r * exp(q)``.

    ``q = |Im(sL)|`` keeps ``r`` bounded for strongly evanescent ``s``; the
    phase of the residual is carried by ``r`` alone.
    """
    x = coeffs.s * L
    q = abs(x.imag)
    if abs(x) < 1e-4 or q < 30.0:
        return cmath.cos(x) - coeffs.delta_a * _sin_over_s(coeffs.s, L), 0.0
    ep = cmath.exp(1j * x - q)
    em = cmath.exp(-1j * x - q)
    return (ep + em) / 2.0 - coeffs.delta_a * (ep - em) / (2j * coeffs.s), q


def normalized_residual(coeffs: ReducedCoefficients, L: float) -> complex:
    """``-D / s = cos(sL) - delta_a sin(sL)/s``; entire and branch-free."""
    r, q = scaled_residual(coeffs, L)
    if q == 0.0:
        return r
    if q > 700.0:
        inf = math.inf
        return complex(math.copysign(inf, r.real) if r.real else 0.0,
                       math.copysign(inf, r.imag) if r.imag else 0.0)
    return r * math.exp(q)


def closed_form_gain(coeffs: ReducedCoefficients, L: float, eps: float = 1e-12) -> ClosedFormGain:
    """Field gain ``E1(L)/seed``.

    ``exp(mL) * s / (s cos(sL) - delta_a sin(sL))`` with ``m`` the mean of
    the diagonal coefficients, so an empty medium has unit gain.
    """
    if not L > 0:
        raise InvalidArgumentError("L must be > 0")
    r, q = scaled_residual(coeffs, L)
    if q == 0.0 and abs(r) < eps:
        return ClosedFormGain(None, True)
    if q > 0.0 and abs(r) < eps * math.exp(-min(q, 700.0)):
        return ClosedFormGain(None, True)
    return ClosedFormGain(cmath.exp(coeffs.mean * L - q) / r, False)


def oscillation_residual(coeffs: ReducedCoefficients, L: float) -> complex:
    if not L > 0:
        raise InvalidArgumentError("L must be > 0")
    s = coeffs.s
    return coeffs.delta_a * cmath.sin(s * L) - s * cmath.cos(s * L)


def strong_coupling(medium: MediumSpec, drive: DriveSpec, raman_offset: Optional[float] = None) -> bool:
    w0 = medium.hyperfine_splitting if raman_offset is None else raman_offset
    kz = SidebandSet.from_drive(drive, w0).k_z()
    eta1 = abs(slot_eta(medium, 1, kz[1]))
    eta4 = abs(slot_eta(medium, 4, kz[4]))
    lhs = eta4 * abs(drive.rabi_forward * drive.rabi_backward)
    rhs = eta1 * medium.ground_decay * abs(drive.detuning_backward)
    return lhs > rhs


def pulled_frequency(medium: MediumSpec, drive: DriveSpec,
                     delta_k, kappa: float, c: float = C_LIGHT) -> float:
    """Oscillation frequency from ``kappa (w0 - w_hfs - xi) + c dk(w0) = 0``.

    ``delta_k`` is the closed-form-convention mismatch ``k11 - k41`` (1/m):
    a number, or a callable of ``w0`` (e.g. :func:`collinear_mismatch`).
    """
    if kappa == 0:
        raise DivisionDomainError("kappa must be nonzero")
    if not kappa > 0:
        raise InvalidArgumentError("kappa must be > 0")
    target = medium.hyperfine_splitting + light_shift(
        drive.rabi_forward, drive.rabi_backward, drive.detuning_backward)
    if not callable(delta_k):
        return target - c * delta_k / kappa

    def f(w0):
        return kappa * (w0 - target) + c * delta_k(w0)

    # the mismatch is slowly varying: widen a bracket around the target
    span = abs(c * delta_k(target) / kappa) + 1.0
    for _ in range(60):
        lo, hi = target - span, target + span
        if f(lo) * f(hi) <= 0:
            return brentq(f, lo, hi, xtol=1e-12 * abs(target) + 1e-12, rtol=4 * np.finfo(float).eps)
        span *= 2.0
    raise InvalidArgumentError("no pulled frequency found")


def collinear_mismatch(beam_angle=0.0, c=C_LIGHT) -> Callable[[float], float]:
    """``w0 -> w0 (1 + cos theta)/c``, the mismatch in the closed-form convention."""
    factor = (1.0 + math.cos(beam_angle)) / c
    return lambda w0: w0 * factor


SWEEPABLE = ("rabi_backward", "number_density", "slab_length")


def apply_sweep(medium, drive, swept, value):
    if swept == "rabi_backward":
        phase = drive.rabi_backward / abs(drive.rabi_backward) if drive.rabi_backward else 1.0
        return medium, drive.replace(rabi_backward=value * phase)
    if swept == "number_density":
        return medium.replace(number_density=value), drive
    if swept == "slab_length":
        return medium.replace(slab_length=value), drive
    raise InvalidArgumentError(f"cannot sweep {swept!r}; choose from {SWEEPABLE}")


def _mismatch(mismatch, drive, w0):
    if mismatch is None:
        return 0.0, 0.0
    if mismatch == "geometric":
        return geometric_k(drive, w0)
    if callable(mismatch):
        return mismatch(w0)
    k11, k41 = mismatch
    return k11, k41


def phase_matched_offset(medium, drive, mismatch=None,
                         window_halfwidth=TWO_PI * 5e6):
    """Raman offset with ``Im(delta_a) = 0`` inside the window around ``w_hfs + xi``.

    Falls back to the minimizer of ``|Im(delta_a)|`` when the window holds
    no root.
    """
    center = medium.hyperfine_splitting + light_shift(
        drive.rabi_forward, drive.rabi_backward, drive.detuning_backward)
    lo, hi = center - window_halfwidth, center + window_halfwidth

    def im_da(w0):
        k11, k41 = _mismatch(mismatch, drive, w0)
        return reduced_coefficients(medium, drive, w0, k11, k41).delta_a.imag

    f_lo, f_hi = im_da(lo), im_da(hi)
    if f_lo == 0:
        return lo
    if f_lo * f_hi < 0:
        return brentq(im_da, lo, hi, xtol=1e-14 * abs(center), rtol=4 * np.finfo(float).eps)
    res = minimize_scalar(lambda w: abs(im_da(w)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * abs(center)})
    return float(res.x)


def find_threshold(medium: MediumSpec, drive_template: DriveSpec, swept: str, bracket,
                   mismatch=None, tol: float = 1e-9,
                   window_halfwidth: float = TWO_PI * 5e6, n_scan: int = 33) -> ThresholdReport:
    """Locate the first oscillation onset along one swept parameter.

    Inner solve: phase matching over the Raman offset (``Im delta_a = 0``),
    where ``-D/s`` is real.  Outer solve: ``Re(-D/s)`` is sampled at
    ``n_scan`` points across ``bracket`` and the first sign change from
    the low end is refined by Brent's method.  ``mismatch`` is ``None``
    (no residual mismatch), ``"geometric"``, a ``(k11, k41)`` pair, or a
    callable of ``w0``.
    """
    low, high = (float(b) for b in bracket)
    if not low < high:
        raise InvalidArgumentError("bracket must satisfy low < high")
    if swept not in SWEEPABLE:
        raise InvalidArgumentError(f"cannot sweep {swept!r}; choose from {SWEEPABLE}")
    if n_scan < 2:
        raise InvalidArgumentError("n_scan must be >= 2")

    def evaluate(p):
        med, drv = apply_sweep(medium, drive_template, swept, p)
        w0 = phase_matched_offset(med, drv, mismatch, window_halfwidth)
        k11, k41 = _mismatch(mismatch, drv, w0)
        coeffs = reduced_coefficients(med, drv, w0, k11, k41)
        # positive rescaling keeps the sign used for bracketing
        r, q = scaled_residual(coeffs, med.slab_length)
        return (r if q == 0.0 else normalized_residual(coeffs, med.slab_length)), w0, r

    points = np.linspace(low, high, n_scan)
    values = [evaluate(p)[2] for p in points]
    lo = hi = None
    for i in range(n_scan - 1):
        if values[i].real == 0:
            lo = hi = points[i]
            break
        if values[i].real * values[i + 1].real < 0:
            lo, hi = points[i], points[i + 1]
            break
    if lo is None:
        floor = min(abs(v) for v in values)
        return ThresholdReport(swept, math.nan, floor, math.nan, (low, high), False,
                               "no threshold in bracket")
    if lo == hi:
        p_star = lo
    else:
        p_star = brentq(lambda p: evaluate(p)[2].real, lo, hi,
                        xtol=1e-15 * max(abs(lo), abs(hi)), rtol=4 * np.finfo(float).eps,
                        maxiter=200)
    resid, w0, _ = evaluate(p_star)
    residual = abs(resid)
    return ThresholdReport(swept, p_star, residual, w0, (low, high), residual < tol,
                           "" if residual < tol else "residual above tolerance")
