"""Linear four-sideband slab problem.

The state vector is ``w = [E1, E2, E3*, E4*]`` with each component
multiplied by its residual grating phase ``exp(i K_m z)``; in that frame
the generator is z-independent and the transfer matrix over the slab is
an exact matrix exponential.  Forward slots (1, 3) are fixed at ``z = 0``
and backward slots (2, 4) at ``z = L``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import expm
from scipy.optimize import newton

from .errors import InvalidArgumentError, MirrorlessError
from .model import CONJUGATED, DIRECTION, SLOTS, DriveSpec, MediumSpec, SidebandSet
from .susceptibility import CouplingMatrix, LevelScheme, chi_doppler

log = logging.getLogger(__name__)

FORWARD = (0, 2)
BACKWARD = (1, 3)
ONSET_TOL = 1e-6


class SaturatedError(MirrorlessError, FloatingPointError):
    """Transfer matrix overflowed; the point is far above threshold."""


@dataclass(frozen=True)
class PropagationSystem:
    generator: np.ndarray
    slab_length: float
    directions: tuple = tuple(DIRECTION[s] for s in SLOTS)
    mismatch: np.ndarray = field(default_factory=lambda: np.zeros(4))


@dataclass(frozen=True)
class FieldProfile:
    """Sideband amplitudes on a z grid.

    ``amplitudes[m-1]`` is the physical envelope of slot ``m`` (never
    conjugated); :attr:`state` gives the conjugation-mapped vector.
    """

    z: np.ndarray
    amplitudes: np.ndarray
    seed: np.ndarray

    @property
    def state(self):
        out = self.amplitudes.copy()
        for m in (3, 4):
            out[m - 1] = np.conj(out[m - 1])
        return out

    def outputs(self):
        """Output amplitudes: forward slots at z = L, backward slots at z = 0."""
        a = self.amplitudes
        return np.array([a[0, -1], a[1, 0], a[2, -1], a[3, 0]])


@dataclass(frozen=True)
class OnsetIndicator:
    sigma_min: float
    oscillating: bool
    metadata: dict = field(default_factory=dict)


def generator_matrix(chi: CouplingMatrix, sidebands: SidebandSet) -> np.ndarray:
    """``M_mn = i K_m delta_mn + f_m chi_mn`` with ``f_m = +-i k_m / 2``.

    Unconjugated rows take ``+i k_m/2``, conjugated rows ``-i k_m/2``;
    ``k_m`` is the signed slot wavevector.
    """
    if not np.isclose(chi.raman_offset, sidebands.raman_offset, rtol=1e-14, atol=0):
        raise InvalidArgumentError("chi and sidebands evaluated at different Raman offsets")
    k = sidebands.k_z()
    f = np.array([(-1j if CONJUGATED[m] else 1j) * k[m] / 2.0 for m in SLOTS])
    return np.diag(1j * chi.mismatch) + f[:, None] * chi.chi


def assemble_system(chi: CouplingMatrix, sidebands: SidebandSet, slab_length: float) -> PropagationSystem:
    if not slab_length > 0:
        raise InvalidArgumentError("slab_length must be > 0")
    M = generator_matrix(chi, sidebands)
    return PropagationSystem(M, slab_length, mismatch=np.asarray(chi.mismatch))


def two_field_system(coeffs, slab_length: float) -> PropagationSystem:
    """Embed the closed-form two-field generator at slots 1 and 4."""
    from .reduced import generator

    M = np.zeros((4, 4), dtype=complex)
    G = generator(coeffs)
    M[np.ix_([0, 3], [0, 3])] = G
    return PropagationSystem(M, slab_length)


def transfer_matrix(system: PropagationSystem) -> np.ndarray:
    """``exp(M L)`` by Pade scaling and squaring."""
    M = np.asarray(system.generator, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("generator has non-finite entries")
    with np.errstate(over="ignore", invalid="ignore"):
        T = expm(M * system.slab_length)
    if not np.all(np.isfinite(T)):
        raise SaturatedError("transfer matrix overflow")
    return T


def boundary_operator(T: np.ndarray) -> np.ndarray:
    """Rows: slot 1 and 3 values at z = 0, slot 2 and 4 values at z = L."""
    B = np.zeros((4, 4), dtype=complex)
    B[0, 0] = 1.0
    B[2, 2] = 1.0
    B[1] = T[1]
    B[3] = T[3]
    return B


def _scaled_boundary(T):
    """Boundary operator with columns scaled by the norms of ``[I; T]``
    and rows normalized.

    The column norms are those of the full end-to-end map, so they never
    fall below 1: a column of ``B`` that vanishes (the singular direction
    at threshold) stays small instead of being rescaled away.
    """
    B = boundary_operator(T)
    c = np.sqrt(1.0 + np.sum(np.abs(T) ** 2, axis=0))
    B = B / c[None, :]
    r = np.linalg.norm(B, axis=1)
    r[r == 0] = 1.0
    return B / r[:, None]


def onset_indicator(T: np.ndarray, tol: float = ONSET_TOL) -> OnsetIndicator:
    """``sigma_min / ||B||`` of the scaled boundary operator."""
    sv = np.linalg.svd(_scaled_boundary(T), compute_uv=False)
    sigma = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    return OnsetIndicator(sigma, sigma < tol)


def _to_state(seed):
    x = np.array(seed, dtype=complex)
    x[2] = np.conj(x[2])
    x[3] = np.conj(x[3])
    return x


def _from_state(state):
    a = np.array(state, dtype=complex)
    a[2] = np.conj(a[2])
    a[3] = np.conj(a[3])
    return a


def solve_boundary(T: np.ndarray, seed, system: Optional[PropagationSystem] = None,
                   n_grid: int = 128, tol: float = ONSET_TOL):
    """Solve the counter-propagating boundary problem.

    Parameters
    ----------
    T : (4, 4) complex
        Transfer matrix of the slab.
    seed : sequence of 4 complex
        Physical input envelopes: slots 1, 3 at z = 0, slots 2, 4 at z = L.
    system : PropagationSystem, optional
        Needed to sample the interior; without it the profile holds the
        two end points on a grid normalized to the slab length.  With it
        the fields come from composed scattering matrices, which stay
        accurate when the slab attenuates by many orders of magnitude;
        ``T`` is then used only for the onset indicator, or as a fallback
        when a sub-slab is exactly singular.

    Returns
    -------
    (FieldProfile, OnsetIndicator)
    """
    seed = np.asarray(seed, dtype=complex)
    if seed.shape != (4,) or not np.all(np.isfinite(seed)):
        raise InvalidArgumentError("seed must be 4 finite complex numbers")
    if n_grid < 2:
        raise InvalidArgumentError("n_grid must be >= 2")
    indicator = onset_indicator(T, tol)
    K = np.zeros(4) if system is None else np.asarray(system.mismatch, dtype=complex)
    L = 1.0 if system is None else system.slab_length
    target = _to_state(seed)
    # backward inputs live at z = L where w = E_bar exp(iKL)
    target[1] *= np.exp(1j * K[1] * L)
    target[3] *= np.exp(1j * K[3] * L)
    w = None
    if system is not None:
        z = np.linspace(0.0, L, n_grid)
        try:
            w = _scattering_profile(system.generator, L, n_grid, target)
        except np.linalg.LinAlgError:
            # a sub-slab sits exactly at its own threshold
            w = None
    if w is None:
        B = boundary_operator(T)
        try:
            x0 = np.linalg.solve(B, target)
        except np.linalg.LinAlgError:
            x0 = np.full(4, np.nan, dtype=complex)
        if system is None:
            z = np.array([0.0, 1.0])
            w = np.stack([x0, T @ x0], axis=1)
        else:
            step = expm(system.generator * (z[1] - z[0]))
            w = np.empty((4, n_grid), dtype=complex)
            w[:, 0] = x0
            for j in range(1, n_grid):
                w[:, j] = step @ w[:, j - 1]
            w[:, -1] = T @ x0
    ebar = w * np.exp(-1j * K[:, None] * z[None, :])
    amps = _from_state(ebar)
    return FieldProfile(z, amps, seed), indicator


# ---------------------------------------------------------------------------
# scattering-matrix solve
#
# The shooting solution through ``T`` subtracts terms of size
# exp(|Im s| L) to form outputs that can be many orders of magnitude
# smaller, losing about exp(2 |Im s| L) * eps in relative accuracy.  The
# scattering matrix maps inputs (forward at 0, backward at L) to outputs
# and composes by the Redheffer star product without that cancellation.


def _layer_scattering(M, d):
    """Blocks ``(S11, S12, S21, S22)`` of a thin homogeneous layer."""
    T = expm(M * d)
    f, b = np.ix_(FORWARD, FORWARD), np.ix_(BACKWARD, BACKWARD)
    Tfb, Tbf = T[np.ix_(FORWARD, BACKWARD)], T[np.ix_(BACKWARD, FORWARD)]
    inv = np.linalg.inv(T[b])
    return (T[f] - Tfb @ inv @ Tbf, Tfb @ inv, -inv @ Tbf, inv)


def _star(a, b):
    """Scattering blocks of layer ``a`` followed by layer ``b``."""
    a11, a12, a21, a22 = a
    b11, b12, b21, b22 = b
    X = np.linalg.inv(np.eye(2) - a12 @ b21)
    return (b11 @ X @ a11, b11 @ X @ a12 @ b22 + b12,
            a21 + a22 @ b21 @ X @ a11, a22 @ b22 + a22 @ b21 @ X @ a12 @ b22)


def _layer(M, d):
    # thin slice with ||M dz|| <= 1/2, then repeated doubling
    norm = np.linalg.norm(M, 1) * d
    k = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    S = _layer_scattering(M, d / 2 ** k)
    for _ in range(k):
        S = _star(S, S)
    return S


def _scattering_profile(M, L, n_grid, target):
    """State ``w`` on a uniform grid from the boundary data in ``target``."""
    f0, bL = target[list(FORWARD)], target[list(BACKWARD)]
    step = _layer(M, L / (n_grid - 1))
    eye, zero = np.eye(2, dtype=complex), np.zeros((2, 2), dtype=complex)
    depth = [(eye, zero, zero, eye)]
    for _ in range(n_grid - 1):
        depth.append(_star(depth[-1], step))
    w = np.empty((4, n_grid), dtype=complex)
    for j in range(n_grid):
        # layer [0, z_j] then layer [z_j, L]; the medium is homogeneous
        a11, a12, _, _ = depth[j]
        _, _, b21, b22 = depth[n_grid - 1 - j]
        fz = np.linalg.solve(np.eye(2) - a12 @ b21, a11 @ f0 + a12 @ b22 @ bL)
        w[list(FORWARD), j] = fz
        w[list(BACKWARD), j] = b21 @ fz + b22 @ bL
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("non-finite scattering solution")
    return w


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class ScanRow:
    omega0: float
    gains_db: tuple
    sigma_min: float
    oscillating: bool
    error: str = ""


def _power_db(out, seed_norm):
    with np.errstate(divide="ignore"):
        return tuple(float(20.0 * np.log10(abs(o) / seed_norm)) if np.isfinite(o) else math.nan
                     for o in out)


def point_response(scheme, medium, drive, w0, seed, quadrature_order=64, tol=ONSET_TOL,
                   quadrature_method="adaptive"):
    """One spectrum point: chi -> generator -> transfer matrix -> boundary solve."""
    chi = chi_doppler(scheme, medium, drive, w0, quadrature_order, method=quadrature_method)
    side = SidebandSet.from_drive(drive, w0)
    system = assemble_system(chi, side, medium.slab_length)
    T = transfer_matrix(system)
    profile, ind = solve_boundary(T, seed, system=system, n_grid=2, tol=tol)
    out = profile.outputs()
    return out, ind, T


def characteristic(scheme, medium, drive, w0, quadrature_order=64, quadrature_method="adaptive"):
    """``det`` of the backward block of the transfer matrix.

    Zero exactly where the boundary operator is singular; analytic in the
    (complex) Raman offset.
    """
    chi = chi_doppler(scheme, medium, drive, w0, quadrature_order, method=quadrature_method)
    side = SidebandSet.from_drive(drive, w0)
    T = transfer_matrix(assemble_system(chi, side, medium.slab_length))
    return np.linalg.det(T[np.ix_(BACKWARD, BACKWARD)])


def find_mode(scheme, medium, drive, w0_guess, step, quadrature_order=64, maxiter=100,
              quadrature_method="adaptive"):
    """Complex Raman offset where the slab sustains a source-free solution.

    Secant iteration on :func:`characteristic`.  ``Im > 0`` means a
    temporally growing mode (above threshold), ``Im == 0`` the onset.
    Returns ``None`` when the iteration fails.
    """
    try:
        root = newton(lambda w: characteristic(scheme, medium, drive, w, quadrature_order,
                                               quadrature_method),
                      complex(w0_guess), x1=complex(w0_guess) + 1j * step,
                      tol=1e-9 * abs(step), maxiter=maxiter)
    except (RuntimeError, MirrorlessError, ZeroDivisionError, FloatingPointError):
        return None
    root = complex(root)
    if not np.isfinite(root):
        return None
    return root


def gain_spectrum(scheme: LevelScheme, medium: MediumSpec, drive: DriveSpec, w0_grid,
                  seed=(1.0, 0.0, 0.0, 0.0), quadrature_order: int = 64,
                  tol: float = ONSET_TOL, detect_modes: bool = True,
                  workers: Optional[int] = None, quadrature_method: str = "adaptive"):
    """Per-slot output power gains (dB relative to the seed norm) over ``w0_grid``.

    Rows follow the grid order.  A row is flagged ``oscillating`` when its
    onset indicator is below ``tol``, when the transfer matrix saturates,
    or when a growing mode (found by continuing the boundary determinant
    into complex offsets from the indicator minima) has its frequency
    closest to that row.
    """
    grid = np.asarray(w0_grid, dtype=float)
    if grid.size == 0:
        return []
    if np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("w0 grid must be strictly increasing")
    seed = np.asarray(seed, dtype=complex)
    seed_norm = float(np.linalg.norm(seed))
    if seed_norm == 0:
        raise InvalidArgumentError("seed must be nonzero")

    def one(w0):
        try:
            out, ind, _ = point_response(scheme, medium, drive, w0, seed, quadrature_order, tol,
                                         quadrature_method)
            return ScanRow(float(w0), _power_db(out, seed_norm), ind.sigma_min, ind.oscillating)
        except SaturatedError:
            return ScanRow(float(w0), (math.inf,) * 4, 0.0, True, "saturated")
        except MirrorlessError as exc:
            return ScanRow(float(w0), (math.nan,) * 4, math.nan, False, type(exc).__name__)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, grid))
    else:
        rows = [one(w) for w in grid]

    if detect_modes and grid.size >= 3:
        rows = _flag_growing_modes(rows, scheme, medium, drive, grid, quadrature_order,
                                   quadrature_method)
    return rows


def growing_modes(rows, scheme, medium, drive, quadrature_order=64, max_starts=3,
                  quadrature_method="adaptive"):
    """Modes with ``Im(w0) >= 0`` seeded from the smallest indicator minima."""
    grid = np.array([r.omega0 for r in rows])
    sig = np.array([r.sigma_min if np.isfinite(r.sigma_min) else np.inf for r in rows])
    step = float(np.min(np.diff(grid)))
    minima = [i for i in range(len(sig))
              if sig[i] <= sig[max(i - 1, 0)] and sig[i] <= sig[min(i + 1, len(sig) - 1)]
              and np.isfinite(sig[i])]
    minima = sorted(minima, key=lambda i: sig[i])[:max_starts]
    modes = []
    for i in minima:
        root = find_mode(scheme, medium, drive, grid[i], step, quadrature_order,
                         quadrature_method=quadrature_method)
        if root is None or root.imag < -1e-9 * abs(root.real):
            continue
        if not grid[0] - step <= root.real <= grid[-1] + step:
            continue
        if all(abs(root - m) > step for m in modes):
            modes.append(root)
    return modes


def _flag_growing_modes(rows, scheme, medium, drive, grid, quadrature_order, quadrature_method):
    modes = growing_modes(rows, scheme, medium, drive, quadrature_order,
                          quadrature_method=quadrature_method)
    if not modes:
        return rows
    rows = list(rows)
    for mode in modes:
        i = int(np.argmin(np.abs(grid - mode.real)))
        r = rows[i]
        rows[i] = ScanRow(r.omega0, r.gains_db, r.sigma_min, True, r.error)
        log.info("growing mode at w0 = %.6e%+.3ei rad/s", mode.real, mode.imag)
    return rows


def attenuated_transfer_matrix(scheme, medium, drive, w0, absorption=(0.0, 0.0),
                               n_slabs: int = 64, quadrature_order: int = 64,
                               quadrature_method: str = "adaptive"):
    """Transfer matrix with Beer-law drive depletion over ``n_slabs`` slabs.

    ``absorption = (alpha_F, alpha_B)`` are intensity attenuation
    coefficients (1/m).  The forward drive enters at z = 0, the backward
    drive at z = L; each slab uses the susceptibility at its midpoint.
    """
    L = medium.slab_length
    dz = L / n_slabs
    side = SidebandSet.from_drive(drive, w0)
    T = np.eye(4, dtype=complex)
    for j in range(n_slabs):
        zc = (j + 0.5) * dz
        d = drive.replace(rabi_forward=drive.rabi_forward * math.exp(-absorption[0] * zc / 2.0),
                          rabi_backward=drive.rabi_backward * math.exp(-absorption[1] * (L - zc) / 2.0))
        chi = chi_doppler(scheme, medium, d, w0, quadrature_order, method=quadrature_method)
        M = generator_matrix(chi, side)
        T = expm(M * dz) @ T
    if not np.all(np.isfinite(T)):
        raise SaturatedError("transfer matrix overflow")
    return T
