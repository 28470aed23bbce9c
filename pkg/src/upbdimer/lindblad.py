"""Full master-equation numerics on the truncated two-mode Fock space.

Density matrices are vectorized column-major (``vec(A rho B) = (B^T kron A)
vec(rho)``), so the Liouvillian reads

    L = -i (I kron H - H^T kron I)
        + sum_k gamma_k [ conj(a_k) kron a_k
                          - 1/2 (I kron n_k + n_k^T kron I) ]
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import LinearOperator, gmres, spilu, splu

from . import fock
from .analytic import CorrelatorSeries, EqualTimeCorrelators
from .exceptions import CutoffError, DegenerateSteadyStateError, IntegrationError
from .params import DimerParams, DriveSpec

log = logging.getLogger(__name__)

DEFAULT_CUTOFF = 7
DEFAULT_TAU = np.linspace(0.0, 10.0, 400)
RTOL = 1e-8
ATOL = 1e-12
# denominators below this make a correlator undefined
UNDEFINED_DENOM = 1e-14


def _vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def _unvec(v):
    d = int(round(np.sqrt(v.size)))
    return v.reshape((d, d), order="F")


def build_hamiltonian(params: DimerParams, drive: DriveSpec,
                      n_cut: int = DEFAULT_CUTOFF, envelope_value: float = 1.0):
    """Rotating-frame Hamiltonian of the driven dimer (Kerr term ``U a^dag^2 a^2``)."""
    if n_cut < 2:
        raise CutoffError(f"the Hamiltonian needs n_cut >= 2, got {n_cut}")
    return _static_hamiltonian(params, drive.F1, n_cut) + \
        _site2_drive(drive.F2 * envelope_value, n_cut)


def _static_hamiltonian(params, F1, n_cut):
    a1, a2 = fock.destroy(n_cut, 1), fock.destroy(n_cut, 2)
    a1d, a2d = fock.dagger(a1), fock.dagger(a2)
    n1, n2 = a1d @ a1, a2d @ a2
    d1, d2 = params.site_detunings()
    u1, u2 = params.site_kerr()
    H = (d1 * n1 + d2 * n2
         + u1 * (a1d @ a1d @ a1 @ a1) + u2 * (a2d @ a2d @ a2 @ a2)
         + params.J * (a1d @ a2 + a2d @ a1)
         + F1 * (a1d + a1))
    if params.Ux:
        H = H + params.Ux * (n1 @ n2)
    return H.tocsr()


def _site2_drive(F2, n_cut):
    a2 = fock.destroy(n_cut, 2)
    return (F2 * fock.dagger(a2) + np.conj(F2) * a2).tocsr()


def _hamiltonian_superop(H):
    eye = sp.identity(H.shape[0], dtype=complex, format="csr")
    return -1j * (sp.kron(eye, H) - sp.kron(H.T, eye))


def build_liouvillian(H, gamma1: float, gamma2: float) -> sp.csr_matrix:
    """Sparse Liouvillian for Hamiltonian ``H`` and per-site loss rates."""
    if not (gamma1 > 0 and gamma2 > 0):
        raise ValueError(f"decay rates must be positive, got ({gamma1}, {gamma2})")
    n_cut = fock.cutoff_from_dim(H.shape[0])
    eye = sp.identity(H.shape[0], dtype=complex, format="csr")
    L = _hamiltonian_superop(sp.csr_matrix(H))
    for site, g in ((1, gamma1), (2, gamma2)):
        a = fock.destroy(n_cut, site)
        n = fock.dagger(a) @ a
        L = L + g * (sp.kron(a.conj(), a) - 0.5 * (sp.kron(eye, n) + sp.kron(n.T, eye)))
    return L.tocsr()


def liouvillian(params: DimerParams, drive: DriveSpec,
                n_cut: int = DEFAULT_CUTOFF, envelope_value: float = 1.0):
    H = build_hamiltonian(params, drive, n_cut, envelope_value)
    return build_liouvillian(H, *params.site_gammas())


def _trace_replaced(L, replace_row):
    n = L.shape[0]
    d = int(round(np.sqrt(n)))
    trace_idx = np.arange(d) * (d + 1)
    if replace_row not in trace_idx:
        raise ValueError("replace_row must index a diagonal element of rho")
    keep = np.ones(n)
    keep[replace_row] = 0.0
    row = sp.csr_matrix((np.ones(d, dtype=complex),
                         (np.full(d, replace_row), trace_idx)), shape=(n, n))
    A = (sp.diags(keep) @ L + row).tocsc()
    b = np.zeros(n, dtype=complex)
    b[replace_row] = 1.0
    return A, b


def _solve_direct(A, b):
    try:
        lu = splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(str(exc)) from exc
    x = lu.solve(b)
    return x + lu.solve(b - A @ x)


def _solve_iterative(A, b):
    try:
        ilu = spilu(A, drop_tol=1e-6, fill_factor=10, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(str(exc)) from exc
    M = LinearOperator(A.shape, ilu.solve, dtype=complex)
    x, info = gmres(A, b, M=M, rtol=1e-15, atol=0.0, restart=100, maxiter=50)
    if info < 0:
        raise DegenerateSteadyStateError(f"GMRES breakdown (info={info})")
    return x


def steady_state(L, replace_row: int = 0, method: str = "auto") -> np.ndarray:
    """Unique steady state of ``L`` with the trace constraint built in.

    Row ``replace_row`` (a diagonal element of ``rho``) of ``L rho = 0`` is
    replaced by ``Tr rho = 1``. ``method="direct"`` uses sparse LU with one
    step of iterative refinement; ``"iterative"`` uses ILU-preconditioned
    GMRES, which keeps memory bounded for large cutoffs. ``"auto"`` picks
    direct up to ``n_cut = 7``. The result is Hermitized and renormalized.
    """
    if method == "auto":
        method = "direct" if L.shape[0] <= 64 ** 2 else "iterative"
    if method not in ("direct", "iterative"):
        raise ValueError(f"unknown steady-state method {method!r}")
    A, b = _trace_replaced(sp.csr_matrix(L), replace_row)
    x = _solve_direct(A, b) if method == "direct" else _solve_iterative(A, b)
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyStateError("non-finite steady-state solution")
    rho = _unvec(x)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho)
    res = np.max(np.abs(L @ _vec(rho)))
    if res > 1e-10:
        raise DegenerateSteadyStateError(f"steady-state residual {res:.3e} exceeds 1e-10")
    return rho


def correlators_equal_time(rho, n_cut: Optional[int] = None) -> EqualTimeCorrelators:
    """Normal-ordered ``g2_jk(0)`` and occupations of a density matrix."""
    rho = np.asarray(rho)
    if n_cut is None:
        n_cut = fock.cutoff_from_dim(rho.shape[0])
    a1, a2 = fock.destroy(n_cut, 1), fock.destroy(n_cut, 2)
    a1d, a2d = fock.dagger(a1), fock.dagger(a2)
    n1 = fock.expect(a1d @ a1, rho).real
    n2 = fock.expect(a2d @ a2, rho).real
    G11 = fock.expect(a1d @ a1d @ a1 @ a1, rho).real
    G22 = fock.expect(a2d @ a2d @ a2 @ a2, rho).real
    G12 = fock.expect(a1d @ a2d @ a2 @ a1, rho).real

    def ratio(num, den):
        return num / den if den >= UNDEFINED_DENOM else None

    return EqualTimeCorrelators(ratio(G11, n1 * n1), ratio(G22, n2 * n2),
                                ratio(G12, n1 * n2), n1, n2)


def _propagate(rhs, rho0, t_span, t_eval):
    sol = solve_ivp(rhs, t_span, _vec(rho0).astype(complex), method="RK45",
                    t_eval=t_eval, rtol=RTOL, atol=ATOL)
    if sol.status != 0:
        reached = sol.t[-1] if sol.t.size else t_span[0]
        raise IntegrationError(f"integration failed at t={reached}: {sol.message}",
                               t_reached=reached)
    return sol.y


def g2_tau_numeric(params: DimerParams, drive: DriveSpec, site_pair=(2, 2),
                   tau_grid: Sequence[float] = DEFAULT_TAU,
                   n_cut: int = DEFAULT_CUTOFF) -> CorrelatorSeries:
    """``g2_jk(tau)`` from the quantum regression theorem on the full master equation.

    A photon is detected at site ``k`` at ``tau=0``; site ``j`` is measured a
    delay ``tau`` later.
    """
    j, k = site_pair
    if drive.pulse_sigma is not None:
        raise ValueError("g2_tau_numeric needs a CW drive; use time_evolve_pulsed")
    tau = np.asarray(tau_grid, dtype=float)
    L = liouvillian(params, drive, n_cut)
    rho = steady_state(L)
    ak = fock.destroy(n_cut, k)
    nj = fock.number(n_cut, j)
    nk_ss = fock.expect(fock.number(n_cut, k), rho).real
    nj_ss = fock.expect(nj, rho).real
    post = ak @ rho @ fock.dagger(ak).toarray()
    p_k = np.trace(post).real
    if p_k < UNDEFINED_DENOM or nj_ss < UNDEFINED_DENOM:
        raise ValueError("steady state has no population at the detected site")
    post = post / p_k
    ys = _propagate(lambda t, y: L @ y, post, (tau[0], tau[-1]), tau)
    nj_vec = _vec(nj.toarray().T)  # Tr(n rho) = vec(n^T) . vec(rho)
    n_tau = (nj_vec @ ys).real
    values = n_tau * p_k / (nj_ss * nk_ss)
    return CorrelatorSeries(tau, values, "numeric", (j, k))


@dataclass(frozen=True)
class PulsedRun:
    t: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    g2_22_peak: Optional[float]
    g2_11_peak: Optional[float]
    tau: np.ndarray
    g2_22_tau: np.ndarray
    g2_11_tau: np.ndarray


def time_evolve_pulsed(params: DimerParams, drive: DriveSpec, t_grid: Sequence[float],
                       n_cut: int = DEFAULT_CUTOFF,
                       tau_grid: Optional[Sequence[float]] = None) -> PulsedRun:
    """Master-equation evolution with a Gaussian site-2 pulse on a CW site-1 pump.

    The system starts in the steady state of the drive at ``t_grid[0]``.
    Occupations are sampled on ``t_grid``; the equal-time and delayed
    correlators are referenced to the pulse peak ``t = 0``, with the delayed
    ones normalized by ``<n_j(0)> <n_j(tau)>``.
    """
    if drive.pulse_sigma is None:
        raise ValueError("time_evolve_pulsed needs drive.pulse_sigma")
    t = np.asarray(t_grid, dtype=float)
    sigma = drive.pulse_sigma
    if t[0] > -5 * sigma or t[-1] < 5 * sigma:
        raise ValueError("t_grid must span at least [-5 sigma, 5 sigma]")
    if tau_grid is None:
        tau_grid = np.linspace(0.0, 5 * sigma, 401)
    tau = np.asarray(tau_grid, dtype=float)

    H0 = _static_hamiltonian(params, drive.F1, n_cut)
    L0 = build_liouvillian(H0, *params.site_gammas())
    L2 = _hamiltonian_superop(_site2_drive(drive.F2, n_cut)).tocsr()

    def rhs(time, y):
        return L0 @ y + drive.envelope(time) * (L2 @ y)

    rho0 = steady_state((L0 + drive.envelope(t[0]) * L2).tocsr())
    n1_op, n2_op = fock.number(n_cut, 1), fock.number(n_cut, 2)
    v1 = _vec(n1_op.toarray().T)
    v2 = _vec(n2_op.toarray().T)

    # split at the peak so the state at t=0 is available for the correlators
    before = t[t < 0]
    after = t[t >= 0]
    y_before = _propagate(rhs, rho0, (t[0], 0.0), np.append(before, 0.0))
    rho_peak = _unvec(y_before[:, -1])
    rho_peak = 0.5 * (rho_peak + rho_peak.conj().T)
    t_after = np.union1d(np.union1d(after, tau), [0.0])
    y_after = _propagate(rhs, rho_peak, (0.0, max(t[-1], tau[-1])), t_after)

    traj = np.concatenate([y_before[:, :-1], y_after[:, np.searchsorted(t_after, after)]],
                          axis=1)
    n1 = (v1 @ traj).real
    n2 = (v2 @ traj).real
    peak = correlators_equal_time(rho_peak, n_cut)

    n_tau_idx = np.searchsorted(t_after, tau)
    n1_tau = (v1 @ y_after[:, n_tau_idx]).real
    n2_tau = (v2 @ y_after[:, n_tau_idx]).real
    g22 = _pulsed_qrt(rhs, rho_peak, 2, v2, n2_tau, tau, n_cut)
    g11 = _pulsed_qrt(rhs, rho_peak, 1, v1, n1_tau, tau, n_cut)
    return PulsedRun(t, n1, n2, peak.g2_22, peak.g2_11, tau, g22, g11)


def _pulsed_qrt(rhs, rho_peak, site, v, n_tau, tau, n_cut):
    a = fock.destroy(n_cut, site)
    post = a @ rho_peak @ fock.dagger(a).toarray()
    p = np.trace(post).real
    if p < UNDEFINED_DENOM:
        return np.full(tau.shape, np.nan)
    ys = _propagate(rhs, post / p, (0.0, tau[-1]), tau)
    num = (v @ ys).real * p
    return num / (p * n_tau)
