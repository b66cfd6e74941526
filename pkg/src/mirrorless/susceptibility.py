"""4x4 sideband susceptibility of a driven double-Lambda medium.

Model
-----
Zeroth order: the two drives in the rotating-wave approximation.  Their
carriers differ by far more than any linewidth, so drive-drive beat notes
and the off-resonant ground coherences they would create are dropped
(secular limit); the populations follow from rate equations with
Lorentzian pumping and the optical coherences from the resulting
population differences.

First order: the four sidebands perturb that state.  The only resonant
low-frequency response is the ground coherence ``rho_cb`` at the Raman
offset ``w0`` (the coherence grating).  The first-order unknowns are that
coherence, the anti-Stokes optical coherences on the ``b-e`` legs and the
conjugated Stokes coherences on the ``c-e`` legs.  Every cross coupling
between slots runs through the grating; sidebands on the other leg of
their excited level contribute a linear (diagonal) response only.  The
excited-state coherence and population pulsations at ``w0`` are damped by
the optical decay rate and neglected.

All equations are analytic in ``w0``, so complex offsets (growing modes)
are supported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from types import MappingProxyType

import numpy as np

from .constants import parse_key_values
from .errors import IllConditionedModelError, InvalidArgumentError
from .kernels import solve_batched
from .model import SLOTS, TRANSITIONS, DriveSpec, MediumSpec, SidebandSet
from .reduced import ReducedCoefficients

PROCESSES = ("direct", "raman", "exchange")
# slot pairs each process class couples (both orderings)
PROCESS_PAIRS = {
    "direct": ((1, 4), (2, 3)),
    "raman": ((1, 3), (2, 4)),
    "exchange": ((1, 2), (3, 4)),
}
SLOT_DRIVE = {1: "forward", 3: "forward", 2: "backward", 4: "backward"}
ANTI_STOKES = (1, 2)
STOKES = (3, 4)


def _split(transition):
    g, e = transition.split("-")
    return g, e


@dataclass(frozen=True)
class LevelScheme:
    """Couplings of the double-Lambda scheme.

    Weights are relative dipole factors multiplying the drive Rabi
    frequency (or the sideband field) on each transition.  ``primary``
    names the transition each drive detuning refers to.
    """

    drive_weights: dict
    slot_weights: dict
    primary: dict = field(default_factory=lambda: {"forward": "c-a", "backward": "b-a'"})
    branching: dict = field(default_factory=lambda: {"a": {"b": 0.5, "c": 0.5},
                                                      "a'": {"b": 0.5, "c": 0.5}})
    excited_decay: dict = field(default_factory=dict)
    collapse_excited: bool = False
    processes: frozenset = frozenset(PROCESSES)
    population_relaxation: float = None

    def __post_init__(self):
        dw = {d: {t: float(w) for t, w in self.drive_weights.get(d, {}).items()}
              for d in ("forward", "backward")}
        sw = {int(s): {t: float(w) for t, w in ws.items()} for s, ws in self.slot_weights.items()}
        for table in list(dw.values()) + list(sw.values()):
            unknown = set(table) - set(TRANSITIONS)
            if unknown:
                raise InvalidArgumentError(f"unknown transitions {sorted(unknown)}")
        for s in SLOTS:
            if not any(w != 0 for w in sw.get(s, {}).values()):
                raise InvalidArgumentError(f"slot {s} couples no transition")
        for d in ("forward", "backward"):
            if self.primary.get(d) not in TRANSITIONS:
                raise InvalidArgumentError(f"primary transition of {d} drive invalid")
        for e, fr in self.branching.items():
            if abs(sum(fr.values()) - 1.0) > 1e-12:
                raise InvalidArgumentError(f"branching fractions of {e} must sum to 1")
            if set(fr) - {"b", "c"}:
                raise InvalidArgumentError(f"branching of {e} must target b/c")
        if set(self.branching) != {"a", "a'"}:
            raise InvalidArgumentError("branching needs entries for a and a'")
        if self.population_relaxation is not None and not self.population_relaxation >= 0:
            raise InvalidArgumentError("population_relaxation must be >= 0")
        procs = frozenset(self.processes)
        if procs - set(PROCESSES):
            raise InvalidArgumentError(f"unknown process classes {sorted(procs - set(PROCESSES))}")
        object.__setattr__(self, "drive_weights", MappingProxyType(dw))
        object.__setattr__(self, "slot_weights", MappingProxyType(sw))
        object.__setattr__(self, "processes", procs)

    def with_processes(self, processes):
        return replace(self, processes=frozenset(processes))

    def with_drive_weight(self, drive, transition, weight):
        dw = {d: dict(w) for d, w in self.drive_weights.items()}
        dw[drive][transition] = weight
        return replace(self, drive_weights=dw)

    def with_slot_weight(self, slot, transition, weight):
        sw = {s: dict(w) for s, w in self.slot_weights.items()}
        sw[slot][transition] = weight
        return replace(self, slot_weights=sw)


def default_scheme(both_ground_states=True):
    """Forward drive on the ``a`` (D1) legs, backward drive on the ``a'`` (D2) legs.

    With ``both_ground_states`` each drive couples both ground levels of its
    excited state; otherwise only its primary leg.
    """
    other = 1.0 if both_ground_states else 0.0
    return LevelScheme(
        drive_weights={"forward": {"c-a": 1.0, "b-a": other},
                       "backward": {"b-a'": 1.0, "c-a'": other}},
        slot_weights={1: {"b-a": 1.0, "c-a": 1.0}, 3: {"c-a": 1.0, "b-a": 1.0},
                      2: {"b-a'": 1.0, "c-a'": 1.0}, 4: {"c-a'": 1.0, "b-a'": 1.0}},
    )


def reduced_scheme():
    """Only the four legs of the two-field channel: F on c-a, B on b-a',
    slot 1 on b-a, slot 4 on c-a' (slots 2 and 3 on their natural legs)."""
    return LevelScheme(
        drive_weights={"forward": {"c-a": 1.0}, "backward": {"b-a'": 1.0}},
        slot_weights={1: {"b-a": 1.0}, 3: {"c-a": 1.0}, 2: {"b-a'": 1.0}, 4: {"c-a'": 1.0}},
    )


def load_scheme(path=None):
    """Read a scheme file (flat dotted ``key = value`` text).

    Keys::

        drive.forward.c-a = 1.0          # drive coupling weights
        slot.1.b-a = 1.0                 # sideband coupling weights
        primary.forward = c-a            # detuning reference legs
        branching.a.b = 0.5              # excited-state branching
        decay.a_rad_s = 3.6e7            # optional population decay override
        population_relaxation_rad_s = 0  # optional; defaults to the ground decay
        collapse_excited = false
        processes = direct,raman,exchange
    """
    if path is None:
        text = resources.files("mirrorless.data").joinpath("fig2_scheme.txt").read_text()
        source = "fig2_scheme.txt"
    else:
        text = Path(path).read_text()
        source = str(path)
    kv = parse_key_values(text, source)
    drive_w = {"forward": {}, "backward": {}}
    slot_w = {s: {} for s in SLOTS}
    primary, branching, decay = {}, {"a": {}, "a'": {}}, {}
    collapse, processes = False, PROCESSES
    kwargs_extra = {}
    for key, value in kv.items():
        parts = key.split(".")
        try:
            if parts[0] == "drive" and len(parts) == 3:
                drive_w[parts[1]][parts[2]] = float(value)
            elif parts[0] == "slot" and len(parts) == 3:
                slot_w[int(parts[1])][parts[2]] = float(value)
            elif parts[0] == "primary" and len(parts) == 2:
                primary[parts[1]] = value
            elif parts[0] == "branching" and len(parts) == 3:
                branching[parts[1]][parts[2]] = float(value)
            elif parts[0] == "decay" and len(parts) == 2 and parts[1].endswith("_rad_s"):
                decay[parts[1][:-len("_rad_s")]] = float(value)
            elif key == "population_relaxation_rad_s":
                kwargs_extra["population_relaxation"] = float(value)
            elif key == "collapse_excited":
                collapse = value.lower() in ("1", "true", "yes")
            elif key == "processes":
                processes = tuple(p.strip() for p in value.split(",") if p.strip())
            else:
                raise KeyError(key)
        except (KeyError, ValueError) as exc:
            raise InvalidArgumentError(f"{source}: bad scheme entry {key!r}") from exc
    kwargs = dict(drive_weights=drive_w, slot_weights=slot_w, excited_decay=decay,
                  collapse_excited=collapse, processes=frozenset(processes), **kwargs_extra)
    if primary:
        kwargs["primary"] = primary
    if any(branching.values()):
        kwargs["branching"] = branching
    return LevelScheme(**kwargs)


@dataclass(frozen=True)
class CouplingMatrix:
    """``chi[m-1, n-1]`` relates ``P_bar_m = eps0 chi_mn E_bar_n``.

    ``mismatch[m-1]`` is the residual grating wavenumber ``K_m`` of slot
    ``m``; slot pairs carry ``k_mn = K_n - K_m``.
    """

    chi: np.ndarray
    mismatch: np.ndarray
    raman_offset: complex
    velocity_averaged: bool
    quadrature_order: int
    converged: bool = True
    max_relative_change: float = 0.0

    @property
    def k_mn(self):
        K = self.mismatch
        return K[None, :] - K[:, None]


# ---------------------------------------------------------------------------
# assembly


class _Layout:
    """Level/transition bookkeeping, with the optional a = a' alias."""

    def __init__(self, scheme):
        self.collapse = scheme.collapse_excited
        self.excited = ("a",) if self.collapse else ("a", "a'")
        self.levels = ("b", "c") + self.excited
        self.transitions = [f"{g}-{e}" for e in self.excited for g in ("b", "c")]

    def canon(self, t):
        g, e = _split(t)
        if self.collapse:
            e = "a"
        return f"{g}-{e}"

    def merge(self, weights):
        out = {t: 0.0 for t in self.transitions}
        for t, w in weights.items():
            out[self.canon(t)] += w
        return out


def _unknowns(layout):
    """First-order unknown list: ('R',), ('as', slot, e), ('st', slot, e)."""
    unk = [("R",)]
    for s in ANTI_STOKES:
        for e in layout.excited:
            unk.append(("as", s, e))
    for s in STOKES:
        for e in layout.excited:
            unk.append(("st", s, e))
    return unk, {u: i for i, u in enumerate(unk)}


def _internal_rabi(om):
    # closed-form convention -> internal full Rabi frequency
    return 2.0 * complex(om).conjugate()


def _model_constants(scheme, medium, drive, w0):
    layout = _Layout(scheme)
    side = SidebandSet.from_drive(drive, w0)
    k_slot = side.k_z()
    k_f, k_b = side.drive_k_z()
    nu = side.frequencies
    carriers = {"forward": drive.carrier_forward, "backward": drive.carrier_backward}
    k_drive = {"forward": k_f, "backward": k_b}
    rabi = {"forward": _internal_rabi(drive.rabi_forward),
            "backward": _internal_rabi(drive.rabi_backward)}
    detuning = {"forward": drive.detuning_forward, "backward": drive.detuning_backward}

    energy = {"b": 0.0, "c": medium.hyperfine_splitting}
    for d in ("forward", "backward"):
        g, e = _split(layout.canon(scheme.primary[d]))
        value = energy[g] + carriers[d] - detuning[d]
        energy.setdefault(e, value)
    for e in layout.excited:
        if e not in energy:
            raise InvalidArgumentError(f"excited level {e} has no primary drive fixing its energy")
    omega_t = {t: energy[_split(t)[1]] - energy[_split(t)[0]] for t in layout.transitions}

    gamma = {t: medium.radiative_rates[t] for t in layout.transitions}
    lam = {t: medium.wavelengths[t] for t in layout.transitions}
    pop_decay = {}
    for e in layout.excited:
        if e in scheme.excited_decay:
            pop_decay[e] = scheme.excited_decay[e]
        else:
            pop_decay[e] = gamma[f"b-{e}"] + gamma[f"c-{e}"]
    transit = medium.ground_decay
    refill = transit if scheme.population_relaxation is None else scheme.population_relaxation
    coh = {t: pop_decay[_split(t)[1]] / 2.0 + transit for t in layout.transitions}
    strength = {t: 3.0 / (4.0 * math.pi ** 2) * medium.number_density * lam[t] ** 3 * gamma[t]
                for t in layout.transitions}
    drive_w = {d: layout.merge(scheme.drive_weights[d]) for d in ("forward", "backward")}
    slot_w = {s: layout.merge(scheme.slot_weights[s]) for s in SLOTS}
    if layout.collapse:
        branching = {"a": dict(scheme.branching["a"])}
    else:
        branching = {e: dict(scheme.branching[e]) for e in layout.excited}

    K = np.array([k_slot[1] - k_f, k_slot[2] - k_b, k_f - k_slot[3], k_b - k_slot[4]])
    return dict(layout=layout, k_slot=k_slot, k_drive=k_drive, nu=nu, carriers=carriers,
                rabi=rabi, omega_t=omega_t, coh=coh, strength=strength, drive_w=drive_w,
                slot_w=slot_w, pop_decay=pop_decay, transit=refill, branching=branching,
                K=K)


def _populations(mc, v):
    """Rate-equation populations for each velocity, shape (n_v, n_levels)."""
    layout = mc["layout"]
    lev = {l: i for i, l in enumerate(layout.levels)}
    nl, nv = len(layout.levels), v.size
    L = np.zeros((nv, nl, nl))
    src = np.zeros((nv, nl))
    for d in ("forward", "backward"):
        for t, w in mc["drive_w"][d].items():
            if w == 0 or mc["rabi"][d] == 0:
                continue
            g, e = _split(t)
            det = mc["carriers"][d] - mc["k_drive"][d] * v - mc["omega_t"][t]
            G = mc["coh"][t]
            W = abs(mc["rabi"][d] * w) ** 2 * G / (2.0 * (G * G + det * det))
            ig, ie = lev[g], lev[e]
            L[:, ig, ig] -= W
            L[:, ig, ie] += W
            L[:, ie, ie] -= W
            L[:, ie, ig] += W
    for e in layout.excited:
        ie = lev[e]
        L[:, ie, ie] -= mc["pop_decay"][e]
        for g, frac in mc["branching"][e].items():
            L[:, lev[g], ie] += mc["pop_decay"][e] * frac
    tr = mc["transit"]
    if tr > 0:
        L -= tr * np.eye(nl)
        src[:, lev["b"]] = -0.5 * tr
        src[:, lev["c"]] = -0.5 * tr
    else:
        L[:, -1, :] = 1.0
        src[:, -1] = 1.0
    cond = np.linalg.cond(L)
    if not np.all(np.isfinite(cond)) or np.max(cond) > 1e13:
        raise IllConditionedModelError("population steady state is singular (no relaxation path)")
    p = np.linalg.solve(L, src[..., None])[..., 0]
    return {l: p[:, lev[l]] for l in layout.levels}


def _chi_nodes(scheme, medium, drive, w0, v):
    """Susceptibility for each velocity in ``v``; returns (n_v, 4, 4)."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    mc = _model_constants(scheme, medium, drive, w0)
    layout = mc["layout"]
    pop = _populations(mc, v)
    nv = v.size
    unk, index = _unknowns(layout)
    n = len(unk)
    A = np.zeros((nv, n, n), dtype=complex)
    rhs = np.zeros((nv, n, 4), dtype=complex)
    chi = np.zeros((nv, 4, 4), dtype=complex)

    rabi, coh, omega_t = mc["rabi"], mc["coh"], mc["omega_t"]
    src = {s: {t: mc["slot_w"][s][t] * math.sqrt(mc["strength"][t]) for t in layout.transitions}
           for s in SLOTS}

    def drive_rabi(d, t):
        return rabi[d] * mc["drive_w"][d][t]

    def slot_det(s, t):
        return mc["nu"][s] - mc["k_slot"][s] * v - omega_t[t]

    def sigma0(d, t):
        g, e = _split(t)
        om = drive_rabi(d, t)
        if om == 0:
            return np.zeros(nv, dtype=complex)
        det = mc["carriers"][d] - mc["k_drive"][d] * v - omega_t[t]
        return 0.5j * om * (pop[g] - pop[e]) / (coh[t] - 1j * det)

    R = index[("R",)]
    A[:, R, R] = medium.ground_decay - 1j * (w0 - medium.hyperfine_splitting)
    for s in ANTI_STOKES:
        d = SLOT_DRIVE[s]
        for e in layout.excited:
            u = index[("as", s, e)]
            tb, tc = f"b-{e}", f"c-{e}"
            A[:, u, u] = coh[tb] - 1j * slot_det(s, tb)
            A[:, u, R] = -0.5j * drive_rabi(d, tc)
            A[:, R, u] = -0.5j * np.conj(drive_rabi(d, tc))
            rhs[:, u, s - 1] = 0.5j * src[s][tb] * (pop["b"] - pop[e])
            # anti-Stokes field beating with the drive coherence on c-e
            rhs[:, R, s - 1] += -0.5j * np.conj(sigma0(d, tc)) * src[s][tb]
    for s in STOKES:
        d = SLOT_DRIVE[s]
        for e in layout.excited:
            u = index[("st", s, e)]
            tb, tc = f"b-{e}", f"c-{e}"
            A[:, u, u] = coh[tc] + 1j * slot_det(s, tc)
            A[:, u, R] = 0.5j * np.conj(drive_rabi(d, tb))
            A[:, R, u] = 0.5j * drive_rabi(d, tb)
            rhs[:, u, s - 1] = -0.5j * src[s][tc] * (pop["c"] - pop[e])
            rhs[:, R, s - 1] += 0.5j * src[s][tc] * sigma0(d, tb)

    try:
        x = solve_batched(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedModelError("first-order response system is singular") from exc

    for s in ANTI_STOKES:
        for e in layout.excited:
            chi[:, s - 1, :] += 2.0 * src[s][f"b-{e}"] * x[:, index[("as", s, e)], :]
            # linear response on the other leg
            tc = f"c-{e}"
            if src[s][tc]:
                chi[:, s - 1, s - 1] += (1j * src[s][tc] ** 2 * (pop["c"] - pop[e])
                                         / (coh[tc] - 1j * slot_det(s, tc)))
    for s in STOKES:
        for e in layout.excited:
            chi[:, s - 1, :] += 2.0 * src[s][f"c-{e}"] * x[:, index[("st", s, e)], :]
            tb = f"b-{e}"
            if src[s][tb]:
                chi[:, s - 1, s - 1] += (-1j * src[s][tb] ** 2 * (pop["b"] - pop[e])
                                         / (coh[tb] + 1j * slot_det(s, tb)))

    for proc in PROCESSES:
        if proc not in scheme.processes:
            for m, k in PROCESS_PAIRS[proc]:
                chi[:, m - 1, k - 1] = 0.0
                chi[:, k - 1, m - 1] = 0.0
    return chi, mc["K"]


def chi_velocity_group(scheme: LevelScheme, medium: MediumSpec, drive: DriveSpec,
                       raman_offset, velocity: float = 0.0) -> CouplingMatrix:
    """Susceptibility of the atoms moving with longitudinal ``velocity`` (m/s)."""
    chi, K = _chi_nodes(scheme, medium, drive, raman_offset, [velocity])
    if not np.all(np.isfinite(chi[0])):
        raise IllConditionedModelError("non-finite susceptibility")
    return CouplingMatrix(chi[0], K, raman_offset, False, 0)


QUADRATURE_METHODS = ("adaptive", "hermite")
ADAPTIVE_RTOL = 1e-8
ADAPTIVE_SPAN = 8.0
ADAPTIVE_MAX_NODES = 2 ** 17 + 1


def _gauss_hermite_average(scheme, medium, drive, w0, order):
    x, w = np.polynomial.hermite.hermgauss(order)
    v = math.sqrt(2.0) * medium.doppler_velocity * x
    chi, K = _chi_nodes(scheme, medium, drive, w0, v)
    # fixed-order reduction over nodes
    avg = np.einsum("i,ijk->jk", w, chi) / math.sqrt(math.pi)
    return avg, K


def _entry_change(new, old):
    # largest entrywise relative change; exact zeros (masked processes) skipped
    scale = np.abs(new)
    floor = 1e-12 * scale.max()
    mask = scale > floor
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(new - old)[mask] / scale[mask]))


def _adaptive_average(scheme, medium, drive, w0, order, rtol=ADAPTIVE_RTOL):
    """Gaussian-weighted trapezoid sums on ``x = v / (sqrt(2) sigma_v)``.

    The integrand is analytic in a strip around the real axis whose
    half-width is set by the narrowest velocity resonance, so the sum
    converges geometrically once the spacing is below that width.  The
    spacing starts at ``1 / order`` and halves (reusing nodes) until the
    largest entrywise change drops below ``rtol``.
    """
    sv = math.sqrt(2.0) * medium.doppler_velocity
    n = int(round(2 * ADAPTIVE_SPAN * order)) + 1
    x = np.linspace(-ADAPTIVE_SPAN, ADAPTIVE_SPAN, n)
    h = x[1] - x[0]
    chi, K = _chi_nodes(scheme, medium, drive, w0, sv * x)
    total = np.einsum("i,ijk->jk", np.exp(-x * x), chi)
    avg = total * h / math.sqrt(math.pi)
    change = math.inf
    while 2 * n - 1 <= ADAPTIVE_MAX_NODES:
        mid = x[:-1] + h / 2
        chi, _ = _chi_nodes(scheme, medium, drive, w0, sv * mid)
        total = total + np.einsum("i,ijk->jk", np.exp(-mid * mid), chi)
        x = np.sort(np.concatenate([x, mid]))
        n, h = x.size, h / 2
        new = total * h / math.sqrt(math.pi)
        change = _entry_change(new, avg)
        avg = new
        if change < rtol:
            return avg, K, True, change
    return avg, K, False, change


def chi_doppler(scheme: LevelScheme, medium: MediumSpec, drive: DriveSpec, raman_offset,
                quadrature_order: int = 64, check_convergence: bool = False,
                convergence_tol: float = 1e-4, method: str = "adaptive") -> CouplingMatrix:
    """Maxwellian average of :func:`chi_velocity_group`.

    Parameters
    ----------
    quadrature_order : int
        ``"hermite"``: number of Gauss-Hermite nodes.  ``"adaptive"``:
        initial node density, ``order`` nodes per unit of ``v / (sqrt(2)
        sigma_v)``; the spacing is then refined to convergence.
    check_convergence : bool
        ``"hermite"`` only: evaluate once more at twice the order and set
        ``converged`` from the largest change relative to the largest entry.
        The adaptive rule always reports its own convergence.
    method : {"adaptive", "hermite"}
        Gauss-Hermite nodes are spaced about ``0.3 sigma_v`` apart at order
        64, which cannot resolve optical and light-shifted Raman resonances
        that are ~1% of the Doppler width wide in a vapor cell.  The
        adaptive rule resolves them.
    """
    if int(quadrature_order) != quadrature_order or quadrature_order < 2:
        raise InvalidArgumentError("quadrature_order must be an integer >= 2")
    if method not in QUADRATURE_METHODS:
        raise InvalidArgumentError(f"method must be one of {QUADRATURE_METHODS}")
    quadrature_order = int(quadrature_order)
    if medium.temperature == 0:
        cm = chi_velocity_group(scheme, medium, drive, raman_offset, 0.0)
        return replace(cm, velocity_averaged=True, quadrature_order=quadrature_order)
    converged, change = True, 0.0
    if method == "adaptive":
        chi, K, converged, change = _adaptive_average(scheme, medium, drive, raman_offset,
                                                      quadrature_order)
    else:
        chi, K = _gauss_hermite_average(scheme, medium, drive, raman_offset, quadrature_order)
    if not np.all(np.isfinite(chi)):
        raise IllConditionedModelError("non-finite susceptibility")
    if check_convergence and method == "hermite":
        chi2, _ = _gauss_hermite_average(scheme, medium, drive, raman_offset, 2 * quadrature_order)
        scale = np.max(np.abs(chi2))
        change = float(np.max(np.abs(chi2 - chi)) / scale) if scale > 0 else 0.0
        converged = change <= convergence_tol
    return CouplingMatrix(chi, K, raman_offset, True, quadrature_order, converged, change)


def project_to_reduced(chi: CouplingMatrix, medium: MediumSpec, drive: DriveSpec) -> ReducedCoefficients:
    """Two-field coefficients (slots 1 and 4) in the closed-form convention.

    The internal +z generator restricted to ``[E1, E4*]`` maps to the
    closed-form layout by complex conjugation with the slot-4 amplitude
    sign flipped, which turns ``[[A11, A14], [A41, A44]]`` into
    ``a11 = A11*, a14 = -A14*, a41 = A41*, a44 = A44*``.
    """
    from .propagation import generator_matrix

    side = SidebandSet.from_drive(drive, chi.raman_offset)
    M = generator_matrix(chi, side)
    A11, A14, A41, A44 = M[0, 0], M[0, 3], M[3, 0], M[3, 3]
    K = np.real(chi.mismatch)
    return ReducedCoefficients.from_entries(np.conj(A11), -np.conj(A14), np.conj(A41),
                                            np.conj(A44), K[0], K[3])
