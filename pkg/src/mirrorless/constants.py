"""Physical constants and the optional atomic-data table.

The atomic table lives in a flat ``key = value`` text file (one entry per
line, ``#`` starts a comment).  Keys are dotted and carry a unit suffix,
e.g. ``rb85.d1.isat_mW_cm2 = 4.4876``.  Values in the shipped table are
standard handbook numbers and are external to the model itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import scipy.constants as sc

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class PhysicalConstants:
    speed_of_light: float = sc.c
    vacuum_permittivity: float = sc.epsilon_0
    hbar: float = sc.hbar
    boltzmann: float = sc.k
    atomic_mass_unit: float = sc.atomic_mass


CONSTANTS = PhysicalConstants()
C_LIGHT = CONSTANTS.speed_of_light


def parse_key_values(text, source="<string>"):
    """Parse flat ``key = value`` text into a dict of strings.

    Duplicate keys are an error; blank lines and ``#`` comments are skipped.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise InvalidArgumentError(f"{source}:{lineno}: empty key")
        if key in out:
            raise InvalidArgumentError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_atomic_data(path=None):
    """Return the atomic-data table as ``{key: float}``."""
    if path is None:
        text = resources.files("mirrorless.data").joinpath("atomic_data.txt").read_text()
        source = "atomic_data.txt"
    else:
        text = Path(path).read_text()
        source = str(path)
    return {k: float(v) for k, v in parse_key_values(text, source).items()}
