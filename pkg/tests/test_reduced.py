import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mirrorless.errors import DivisionDomainError, InvalidArgumentError
from mirrorless.model import SidebandSet, light_shift, slot_eta
from mirrorless.propagation import solve_boundary, transfer_matrix, two_field_system
from mirrorless.reduced import (ReducedCoefficients, closed_form_gain, collinear_mismatch,
                                find_threshold, normalized_residual, oscillation_residual,
                                pulled_frequency, reduced_coefficients, strong_coupling)

from _builders import TWO_PI, drive_for, far_detuned, rb_medium

cplx = st.complex_numbers(max_magnitude=50.0, allow_nan=False, allow_infinity=False)


def etas(medium, drive, w0=None):
    w0 = medium.hyperfine_splitting if w0 is None else w0
    k = SidebandSet.from_drive(drive, w0).k_z()
    return slot_eta(medium, 1, k[1]), slot_eta(medium, 4, k[4])


def bvp_gain(coeffs, L):
    system = two_field_system(coeffs, L)
    profile, ind = solve_boundary(transfer_matrix(system), (1, 0, 0, 0), system=system, n_grid=2)
    return profile.outputs()[0], ind


def symmetric(s, da=0.0, mean=0.0):
    """Coefficients with a14 = a41 = sqrt(s^2 + da^2) and given delta_a, mean."""
    c = cmath.sqrt(s * s + da * da)
    return ReducedCoefficients.from_entries(mean + da, c, c, mean - da)


# --- coefficients ------------------------------------------------------------------

@given(a11=cplx, a14=cplx, a41=cplx, a44=cplx)
def test_s_identity(a11, a14, a41, a44):
    co = ReducedCoefficients.from_entries(a11, a14, a41, a44)
    assert co.s ** 2 + co.delta_a ** 2 == pytest.approx(a14 * a41, rel=1e-12, abs=1e-9)
    assert co.delta_a == (a11 - a44) / 2


def test_backward_drive_off():
    med, drv = far_detuned()
    co = reduced_coefficients(med, drv.replace(rabi_backward=0), med.hyperfine_splitting + 1e4,
                              k11=30.0, k41=-20.0)
    assert co.a14 == 0 and co.a41 == 0
    assert co.s ** 2 == pytest.approx(-co.delta_a ** 2, rel=1e-12)
    assert abs(co.s) == pytest.approx(abs(co.delta_a), rel=1e-12)


def test_coefficient_magnitudes():
    med, drv = far_detuned()
    w0 = med.hyperfine_splitting
    eta1, eta4 = etas(med, drv, w0)
    co = reduced_coefficients(med, drv, w0)
    f2 = abs(drv.rabi_forward) ** 2
    assert abs(co.a14 * drv.detuning_backward * f2) == pytest.approx(
        abs(eta1 * drv.rabi_backward * drv.rabi_forward), rel=1e-12)
    assert abs(co.a14 / co.a41) == pytest.approx(abs(eta1 / eta4), rel=1e-12)
    # counter-propagating Stokes wave: signed eta4 < 0 makes the product positive
    assert eta4 < 0 < eta1
    assert co.a14 * co.a41 == pytest.approx(abs(co.a14 * co.a41), rel=1e-12)


def test_resonance_zeroes_a11():
    med, drv = far_detuned(ground_decay=0.0)
    xi = light_shift(drv.rabi_forward, drv.rabi_backward, drv.detuning_backward)
    co = reduced_coefficients(med, drv, med.hyperfine_splitting + xi)
    assert abs(co.a11) < 1e-9 * abs(co.a14)


def test_poles_raise():
    med, drv = far_detuned()
    with pytest.raises(DivisionDomainError):
        reduced_coefficients(med, drv.replace(rabi_forward=0), med.hyperfine_splitting)
    with pytest.raises(DivisionDomainError):
        reduced_coefficients(med, drv.replace(detuning_backward=0.0), med.hyperfine_splitting)


# --- closed-form gain -------------------------------------------------------------

def test_empty_medium_unit_gain():
    g = closed_form_gain(ReducedCoefficients.from_entries(0, 0, 0, 0), 0.05)
    assert not g.at_threshold and g.gain == 1


def test_gain_two_at_sixty_degrees():
    L = 0.05
    co = symmetric(math.pi / 3 / L)
    g = closed_form_gain(co, L)
    assert abs(g.gain) == pytest.approx(2.0, rel=1e-12)
    out, _ = bvp_gain(co, L)
    assert abs(out) == pytest.approx(2.0, rel=1e-10)


def test_gain_diverges_at_quarter_wave():
    L = 0.05
    assert closed_form_gain(symmetric(math.pi / 2 / L), L).at_threshold
    near = closed_form_gain(symmetric((math.pi / 2 - 1e-6) / L), L)
    assert not near.at_threshold and abs(near.gain) > 1e5


def test_degenerate_s_series():
    L, d = 0.05, 3.0
    co = ReducedCoefficients.from_entries(d, d, d, -d)
    assert co.s == 0
    assert closed_form_gain(co, L).gain == pytest.approx(1.0 / (1.0 - d * L), rel=1e-12)
    # continuity from a nearby nonzero s
    near = ReducedCoefficients.from_entries(d, d * (1 + 1e-9), d, -d)
    assert closed_form_gain(near, L).gain == pytest.approx(1.0 / (1.0 - d * L), rel=1e-6)


@given(x=st.floats(0.01, math.pi / 2 - 0.01), y=st.floats(0.01, math.pi / 2 - 0.01))
def test_gain_monotone_in_sl(x, y):
    assume(abs(x - y) > 1e-9)
    L = 0.1
    gx = abs(closed_form_gain(symmetric(x / L), L).gain)
    gy = abs(closed_form_gain(symmetric(y / L), L).gain)
    assert (gx < gy) == (x < y)


@settings(max_examples=200)
@given(a11=cplx, a14=cplx, a41=cplx, a44=cplx, L=st.floats(1e-3, 0.2))
def test_branch_invariance(a11, a14, a41, a44, L):
    co = ReducedCoefficients.from_entries(a11, a14, a41, a44)
    flipped = co.with_branch(-1)
    assert abs(oscillation_residual(flipped, L)) == pytest.approx(
        abs(oscillation_residual(co, L)), rel=1e-9, abs=1e-12)
    g, gf = closed_form_gain(co, L), closed_form_gain(flipped, L)
    assert g.at_threshold == gf.at_threshold
    if not g.at_threshold:
        assert abs(gf.gain) == pytest.approx(abs(g.gain), rel=1e-9)


# --- residual ---------------------------------------------------------------------

def test_residual_threshold_limit():
    L = 0.05
    co = symmetric(math.pi / 2 / L)
    assert abs(oscillation_residual(co, L)) < 1e-12 * abs(co.s)


def test_residual_tan_condition():
    L, s = 0.05, 20.0
    # delta_a = s and sL = pi/4 solve tan(sL) = s / delta_a
    sL = math.pi / 4
    s = sL / L
    co = symmetric(s, da=s)
    assert co.s == pytest.approx(s, rel=1e-12)
    assert abs(oscillation_residual(co, L)) < 1e-12 * s


@given(a11=cplx, a14=cplx, a41=cplx, a44=cplx)
def test_residual_relation(a11, a14, a41, a44):
    co = ReducedCoefficients.from_entries(a11, a14, a41, a44)
    assume(abs(co.s) > 1e-3)
    L = 0.05
    assert -oscillation_residual(co, L) / co.s == pytest.approx(
        normalized_residual(co, L), rel=1e-9, abs=1e-9)


# --- strong coupling --------------------------------------------------------------

def test_strong_coupling_examples():
    med, drv = far_detuned(ground_decay=0.0)
    assert strong_coupling(med, drv)
    assert not strong_coupling(med, drv.replace(rabi_backward=0.0))


def test_strong_coupling_strict_at_equality():
    med, drv = far_detuned()
    eta1, eta4 = etas(med, drv)
    lhs = abs(eta4) * abs(drv.rabi_forward * drv.rabi_backward)
    g = lhs / (abs(eta1) * abs(drv.detuning_backward))
    for _ in range(64):
        if abs(eta1) * g * abs(drv.detuning_backward) == lhs:
            break
        g = np.nextafter(g, math.inf if abs(eta1) * g * abs(drv.detuning_backward) < lhs
                         else -math.inf)
    assert abs(eta1) * g * abs(drv.detuning_backward) == lhs
    assert not strong_coupling(med.replace(ground_decay=g), drv)
    assert strong_coupling(med.replace(ground_decay=g * (1 - 1e-9)), drv)


# --- pulled frequency -------------------------------------------------------------

def test_pulled_frequency_no_mismatch():
    med, drv = far_detuned()
    xi = light_shift(drv.rabi_forward, drv.rabi_backward, drv.detuning_backward)
    assert pulled_frequency(med, drv, 0.0, 1e4) == med.hyperfine_splitting + xi


def test_pulled_frequency_reference_pull():
    med, drv = far_detuned()
    c = 299792458.0
    target = med.hyperfine_splitting + light_shift(drv.rabi_forward, drv.rabi_backward,
                                                   drv.detuning_backward)
    w0 = pulled_frequency(med, drv, 3.81e10 / c, 1.91e4, c=c)
    assert w0 - target == pytest.approx(-2.0e6, rel=3e-3)
    assert (w0 - target) / TWO_PI == pytest.approx(-318e3, rel=3e-3)


def test_pulled_frequency_locks_for_large_kappa():
    med, drv = far_detuned()
    target = med.hyperfine_splitting + light_shift(drv.rabi_forward, drv.rabi_backward,
                                                   drv.detuning_backward)
    pulls = [abs(pulled_frequency(med, drv, collinear_mismatch(), k) - target)
             for k in (1e2, 1e4, 1e6, 1e8)]
    assert all(a > b for a, b in zip(pulls, pulls[1:]))
    # pull ~ 2 w0 / kappa -> 0
    assert pulls[-1] * 1e8 == pytest.approx(2 * target, rel=1e-6)


def test_pulled_frequency_collinear_fixed_point():
    med, drv = far_detuned()
    kappa, c = 2e4, 299792458.0
    target = med.hyperfine_splitting + light_shift(drv.rabi_forward, drv.rabi_backward,
                                                   drv.detuning_backward)
    w0 = pulled_frequency(med, drv, collinear_mismatch(), kappa)
    # linear fixed point: kappa (w - target) + 2 w = 0
    assert w0 == pytest.approx(kappa * target / (kappa + 2.0), rel=1e-13)
    assert kappa * (w0 - target) + c * 2 * w0 / c == pytest.approx(0.0, abs=1e-3 * w0)


def test_pulled_frequency_errors():
    med, drv = far_detuned()
    with pytest.raises(DivisionDomainError):
        pulled_frequency(med, drv, 1.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        pulled_frequency(med, drv, 1.0, -5.0)


# --- threshold search ---------------------------------------------------------------

def _pinned():
    """delta_a = 0 by construction: no ground decay, no residual mismatch."""
    return far_detuned(ground_decay=0.0)


def test_threshold_quarter_wave_in_backward_rabi():
    med, drv = _pinned()
    eta1, eta4 = etas(med, drv)
    L = med.slab_length
    # |Omega_B| solving eta1 |Omega_B| / (|Delta_B| |Omega_F|) sqrt(eta4/eta1) L = pi/2
    oracle = (math.pi / 2) * abs(drv.detuning_backward) * abs(drv.rabi_forward) / (
        math.sqrt(abs(eta1 * eta4)) * L)
    rep = find_threshold(med, drv, "rabi_backward", (0.2 * oracle, 1.5 * oracle))
    assert rep.converged
    assert rep.threshold_value == pytest.approx(oracle, rel=1e-6)


def test_threshold_quarter_wave_in_length():
    med, drv = _pinned()
    rep = find_threshold(med, drv, "slab_length", (1e-3, 0.2))
    co = reduced_coefficients(med, drv, rep.pulled_frequency_at_threshold)
    assert rep.converged
    assert abs(co.s) * rep.threshold_value == pytest.approx(math.pi / 2, rel=1e-6)


def test_threshold_bracket_shrink_is_stable():
    med, drv = _pinned()
    wide = find_threshold(med, drv, "number_density", (1e15, 2e17))
    t = wide.threshold_value
    narrow = find_threshold(med, drv, "number_density", (t * 0.95, t * 1.05))
    assert narrow.threshold_value == pytest.approx(t, rel=1e-9)


def test_threshold_absent_without_strong_coupling():
    med, drv = far_detuned(ground_decay=TWO_PI * 5e6)
    assert not strong_coupling(med, drv)
    rep = find_threshold(med, drv, "number_density", (1e14, 1e18))
    assert not rep.converged
    assert rep.message == "no threshold in bracket"
    assert math.isnan(rep.threshold_value)
    # oracle: dense scan of |D|/|s| over density x offset shows a positive floor
    floor = math.inf
    for n in np.geomspace(1e14, 1e18, 25):
        m = med.replace(number_density=n)
        for w0 in med.hyperfine_splitting + np.linspace(-TWO_PI * 5e6, TWO_PI * 5e6, 81):
            floor = min(floor, abs(normalized_residual(reduced_coefficients(m, drv, w0),
                                                       m.slab_length)))
    assert floor > 1e-3


def test_threshold_implies_strong_coupling():
    med, drv = far_detuned(ground_decay=TWO_PI * 1e3)
    rep = find_threshold(med, drv, "number_density", (1e15, 1e18), mismatch="geometric")
    assert rep.converged
    m = med.replace(number_density=rep.threshold_value)
    assert strong_coupling(m, drv)


def test_threshold_rejects_bad_arguments():
    med, drv = _pinned()
    with pytest.raises(InvalidArgumentError):
        find_threshold(med, drv, "number_density", (2.0, 1.0))
    with pytest.raises(InvalidArgumentError):
        find_threshold(med, drv, "temperature", (1.0, 2.0))
