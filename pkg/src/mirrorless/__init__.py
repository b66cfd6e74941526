"""Mirrorless parametric self-oscillation in driven double-Lambda media."""
from .kernels import BACKEND
from .model import (DriveSpec, MediumSpec, SidebandSet, eta_coefficient, geometric_mismatch,
                    light_shift, rabi_from_power, stabilization_coefficient)
from .reduced import (ReducedCoefficients, ThresholdReport, closed_form_gain, find_threshold,
                      oscillation_residual, pulled_frequency, reduced_coefficients,
                      strong_coupling)

__version__ = "0.1.0"
