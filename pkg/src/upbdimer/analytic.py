"""Closed-form weak-drive results for the bilaterally driven Kerr dimer.

In the weak-drive limit the steady state is a pure state truncated at two
photons, ``|psi> = |0,0> + sum C_mn |m,n>``, whose amplitudes follow from the
non-Hermitian Hamiltonian ``H - i gamma/2 N``. Everything here is built on
that expansion: the amplitude solver, the interference condition for
``C02 = 0`` and its parameter locus, the linear dark state, and the
delay-dependent correlators obtained from the quantum regression theorem.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .exceptions import ResonanceError, SingularPointError, ThresholdError
from .params import DimerParams, DriveSpec

SQRT2 = np.sqrt(2.0)

# relative size below which a one-photon amplitude counts as zero (0/0 guard)
UNDEFINED_REL_TOL = 1e-12


class FockAmplitudes(NamedTuple):
    C10: complex
    C01: complex
    C20: complex
    C11: complex
    C02: complex


class EqualTimeCorrelators(NamedTuple):
    """Equal-time correlators; a ``None`` entry marks an undefined 0/0 ratio."""

    g2_11: Optional[float]
    g2_22: Optional[float]
    g2_12: Optional[float]
    n1: float
    n2: float


class LocusPoint(NamedTuple):
    Delta: float
    U: float
    dark_state_boundary: bool = False


class PhasePoint(NamedTuple):
    Delta: float
    U: float
    n_physical_roots: int = 1


class QrtModes(NamedTuple):
    u1: complex
    u2: complex
    omega1: float
    omega2: float
    lambda1: complex
    lambda2: complex


@dataclass(frozen=True)
class CorrelatorSeries:
    tau: np.ndarray
    values: np.ndarray
    method: str
    site_pair: tuple


def complex_detuning(params: DimerParams, site: Optional[int] = None) -> complex:
    """Complex detuning ``Delta - i gamma/2``, optionally for one site."""
    if site is None:
        return params.Delta - 0.5j * params.gamma
    if site not in (1, 2):
        raise ValueError(f"site must be 1 or 2, got {site!r}")
    k = site - 1
    return params.site_detunings()[k] - 0.5j * params.site_gammas()[k]


def _check_threshold(J, gamma):
    if not J > gamma / 4:
        raise ThresholdError(
            f"J={J} must exceed gamma/4={gamma / 4}; the locus is undefined below it")


def locus_quadrature(J: float, gamma: float = 1.0) -> LocusPoint:
    """Optimal ``(Delta, U)`` for the quadrature drive ``F2 = i F1``.

    At ``J = gamma/2`` both values vanish; that point is the linear dark
    state rather than genuine blockade and is flagged via
    ``dark_state_boundary``.
    """
    _check_threshold(J, gamma)
    root = np.sqrt(4 * J / gamma - 1)
    delta = (gamma / 2 - J) * root
    u = 4 * (J - gamma / 2) ** 2 / (gamma * root)
    boundary = abs(J - gamma / 2) <= 1e-12 * gamma
    return LocusPoint(float(delta), float(u), bool(boundary))


def u_of_phase(phi: float, Delta: float, J: float, gamma: float = 1.0) -> complex:
    """Complex nonlinearity needed for ``C02 = 0`` at drive phase ``phi``.

    Only real, positive results are physical.
    """
    p = np.exp(1j * phi)
    e = Delta - 0.5j * gamma
    den = J ** 2 * (1 + p ** 2) - 4 * p * J * e + 2 * p ** 2 * e ** 2
    scale = max(J, abs(e), gamma) ** 2
    if abs(den) <= 1e-14 * scale:
        raise SingularPointError(
            f"denominator vanishes at phi={phi}, Delta={Delta}, J={J}")
    return complex(-2 * e * (J - p * e) ** 2 / den)


def _u_imag(Delta, phi, J, gamma):
    try:
        return u_of_phase(phi, Delta, J, gamma).imag
    except SingularPointError:
        return np.nan


def solve_phase_point(phi: float, J: float, gamma: float = 1.0, *,
                      delta_span: float = 3.0, step: float = 0.01,
                      u_max: Optional[float] = None) -> Optional[PhasePoint]:
    """Real detuning at which ``u_of_phase`` is real and positive.

    Scans ``Delta`` over ``[-delta_span, delta_span] * gamma`` for sign
    changes of ``Im U`` and refines each to 1e-12. Sign changes across poles
    of ``U`` are discarded. Among physical roots the one with the smallest
    ``|Delta|`` is returned; ``n_physical_roots`` reports how many there were.
    ``u_max`` optionally rejects roots with ``U > u_max``.
    """
    grid = np.arange(-delta_span, delta_span + step / 2, step) * gamma
    f = np.array([_u_imag(d, phi, J, gamma) for d in grid])
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], f[:-1], f[1:]):
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(_u_imag, a, b, args=(phi, J, gamma), xtol=1e-12, rtol=1e-15))
    physical = []
    for d in roots:
        try:
            u = u_of_phase(phi, d, J, gamma)
        except SingularPointError:
            continue
        if abs(u.imag) > 1e-8 * max(gamma, abs(u)) or not u.real > 0:
            continue
        if u_max is not None and u.real > u_max:
            continue
        physical.append((abs(d), float(d), u.real))
    if not physical:
        return None
    physical.sort()
    _, delta, u = physical[0]
    return PhasePoint(delta, u, len(physical))


def phase_range(J: float, gamma: float = 1.0, *, resolution: float = np.radians(0.1),
                u_max: Optional[float] = None):
    """Endpoints ``(phi_lo, phi_hi)`` in radians of the solution-bearing interval.

    The interval is the contiguous run of phases with a physical solution that
    lies closest to 90 degrees; each edge is located by bisection on solution
    existence to within ``resolution``.
    """
    _check_threshold(J, gamma)

    def exists(phi):
        return solve_phase_point(phi, J, gamma, u_max=u_max) is not None

    coarse = np.radians(np.arange(1.0, 180.0, 1.0))
    ok = np.array([exists(p) for p in coarse])
    if not ok.any():
        raise ThresholdError(f"no physical solution at any phase for J={J}")
    idx = np.flatnonzero(ok)
    centre = idx[np.argmin(np.abs(coarse[idx] - np.pi / 2))]
    lo = centre
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    hi = centre
    while hi < len(coarse) - 1 and ok[hi + 1]:
        hi += 1

    def bisect_edge(inside, outside):
        while abs(outside - inside) > resolution:
            mid = 0.5 * (inside + outside)
            if exists(mid):
                inside = mid
            else:
                outside = mid
        return 0.5 * (inside + outside)

    phi_lo = bisect_edge(coarse[lo], coarse[lo - 1] if lo > 0 else 0.0)
    phi_hi = bisect_edge(coarse[hi], coarse[hi + 1] if hi < len(coarse) - 1 else np.pi)
    return float(phi_lo), float(phi_hi)


def dark_state_phase(J: float, gamma: float = 1.0) -> Optional[float]:
    """Phase ``arcsin(gamma / 2J)`` of the linear dark state, if it exists.

    The dark state also needs ``Delta = J cos(phi)``; there ``C01`` vanishes
    and ``g2_22`` is the undefined ratio 0/0.
    """
    s = gamma / (2 * J) if J > 0 else np.inf
    if s > 1 + 1e-15:
        return None
    return float(np.arcsin(min(s, 1.0)))


def amplitude_steady_state(params: DimerParams, drive: DriveSpec,
                           envelope: float = 1.0) -> FockAmplitudes:
    """Weak-drive steady-state amplitudes ``C10 .. C02`` (with ``C00 = 1``).

    Solves the one-photon 2x2 system, then the two-photon 3x3 system with
    one-photon sources. Site mismatches enter the diagonals; the cross-Kerr
    ``Ux`` shifts only ``|1,1>``. ``envelope`` scales the site-2 drive.
    """
    e1 = complex_detuning(params, 1)
    e2 = complex_detuning(params, 2)
    u1, u2 = params.site_kerr()
    J = params.J
    F1 = drive.F1
    F2 = drive.F2 * envelope

    one = np.array([[e1, J], [J, e2]], dtype=complex)
    _check_solvable(one, "one-photon")
    C10, C01 = np.linalg.solve(one, [-F1, -F2])

    two = np.array([
        [2 * (e1 + u1), SQRT2 * J, 0],
        [SQRT2 * J, e1 + e2 + params.Ux, SQRT2 * J],
        [0, SQRT2 * J, 2 * (e2 + u2)],
    ], dtype=complex)
    _check_solvable(two, "two-photon")
    rhs = -np.array([SQRT2 * F1 * C10, F2 * C10 + F1 * C01, SQRT2 * F2 * C01])
    C20, C11, C02 = np.linalg.solve(two, rhs)
    return FockAmplitudes(complex(C10), complex(C01), complex(C20),
                          complex(C11), complex(C02))


def _check_solvable(m, label):
    scale = np.max(np.abs(m)) ** m.shape[0]
    if scale == 0 or abs(np.linalg.det(m)) <= 1e-13 * scale:
        raise ResonanceError(f"{label} amplitude system is singular")


def g2_from_amplitudes(C: FockAmplitudes) -> EqualTimeCorrelators:
    """Leading-order equal-time correlators and occupations."""
    n1 = abs(C.C10) ** 2
    n2 = abs(C.C01) ** 2
    ref = max(abs(C.C10), abs(C.C01))
    def1 = ref > 0 and abs(C.C10) > UNDEFINED_REL_TOL * ref
    def2 = ref > 0 and abs(C.C01) > UNDEFINED_REL_TOL * ref
    g11 = 2 * abs(C.C20) ** 2 / n1 ** 2 if def1 else None
    g22 = 2 * abs(C.C02) ** 2 / n2 ** 2 if def2 else None
    g12 = abs(C.C11) ** 2 / (n1 * n2) if (def1 and def2) else None
    return EqualTimeCorrelators(g11, g22, g12, n1, n2)


def qrt_modes(params: DimerParams, drive: DriveSpec, site: int = 2) -> QrtModes:
    """Normal modes of the driven one-photon equations after a detection.

    The sum/difference amplitudes ``x = C10 + C01`` and ``y = C10 - C01``
    obey ``dx/dt = -u1 x + lambda1`` and ``dy/dt = -u2 y + lambda2``, with
    the vacuum amplitude frozen at its post-detection value.
    """
    e = complex_detuning(params)
    C = amplitude_steady_state(params, drive)
    vac = C.C01 if site == 2 else C.C10
    F1, F2 = drive.F1, drive.F2
    u1 = 1j * (e + params.J)
    u2 = 1j * (e - params.J)
    return QrtModes(u1, u2, params.Delta + params.J, params.Delta - params.J,
                    -1j * (F1 + F2) * vac, -1j * (F1 - F2) * vac)


def qrt_g2_tau(params: DimerParams, drive: DriveSpec, site: int,
               tau_grid: Sequence[float]) -> CorrelatorSeries:
    """Closed-form ``g2_jj(tau)`` for ``site`` j in the symmetric CW dimer.

    After a site-2 detection the one-photon amplitudes start from
    ``C10(0) = C11`` and ``C01(0) = sqrt(2) C02`` (zero on the locus); after
    a site-1 detection from ``C10(0) = sqrt(2) C20`` and ``C01(0) = C11``.
    """
    if site not in (1, 2):
        raise ValueError(f"site must be 1 or 2, got {site!r}")
    if not params.symmetric:
        raise ValueError("closed-form correlators require a symmetric dimer")
    if drive.pulse_sigma is not None:
        raise ValueError("closed-form correlators require a CW drive")
    tau = np.asarray(tau_grid, dtype=float)
    C = amplitude_steady_state(params, drive)
    m = qrt_modes(params, drive, site)
    if site == 2:
        a0, b0, norm = C.C11, SQRT2 * C.C02, abs(C.C01) ** 4
    else:
        a0, b0, norm = SQRT2 * C.C20, C.C11, abs(C.C10) ** 4
    x_inf, y_inf = m.lambda1 / m.u1, m.lambda2 / m.u2
    x = (a0 + b0 - x_inf) * np.exp(-m.u1 * tau) + x_inf
    y = (a0 - b0 - y_inf) * np.exp(-m.u2 * tau) + y_inf
    amp = 0.5 * (x - y) if site == 2 else 0.5 * (x + y)
    return CorrelatorSeries(tau, np.abs(amp) ** 2 / norm, "analytic", (site, site))


def upb_residual(params: DimerParams, drive: DriveSpec) -> complex:
    """Dimensionless residual of the ``C02 = 0`` condition.

    For the symmetric equal-amplitude drive this is the closed-form condition
    (the quadratic at 90 degrees, scaled by ``gamma**2``; the general-phase
    cubic otherwise, scaled by ``gamma**3``). Other configurations fall back
    to ``C02 * gamma / (F1 * C01)`` from the amplitude solver.
    """
    g = params.gamma
    if params.symmetric and params.Ux == 0 and drive.ratio == 1:
        e = complex_detuning(params)
        J, U = params.J, params.U
        p = np.exp(1j * drive.phi)
        if abs(p - 1j) < 1e-15:
            return complex(((e + U) * (e + 2j * J) - J ** 2) / g ** 2)
        lhs = J ** 2 * (2 * e + U * (1 + p ** 2))
        rhs = 2 * p * e * (e + U) * (2 * J - p * e)
        return complex((lhs - rhs) / g ** 3)
    unit = drive.with_(F1=1.0) if drive.F1 == 0 else drive
    C = amplitude_steady_state(params, unit)
    return complex(C.C02 * g / (unit.F1 * C.C01))
