"""Parameter scans and derived tables built on the analytic and master-equation solvers."""
from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import constants
from scipy.optimize import brentq, minimize, minimize_scalar

from . import analytic, lindblad
from .csvio import render_csv, write_csv
from .exceptions import UPBError
from .params import DimerParams, DriveSpec

# higher-precision optimum used for the disorder study
NOMINAL_PARAMS = DimerParams(Delta=0.07746, U=0.05164, J=0.4)
NOMINAL_DRIVE = DriveSpec(F1=0.05)

DISORDER_AXES = {"delta_Delta", "delta_gamma", "delta_U"}


@dataclass
class ScanResult:
    """Values sampled on the Cartesian product of named axes.

    Each value array has shape ``tuple(len(a) for a in axes.values())``;
    missing entries are NaN and are written as empty CSV cells.
    """

    axes: Dict[str, np.ndarray]
    values: Dict[str, np.ndarray]
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.axes = {k: np.asarray(v, dtype=float) for k, v in self.axes.items()}
        shape = tuple(len(a) for a in self.axes.values())
        for name, arr in self.values.items():
            arr = np.asarray(arr, dtype=float).reshape(shape)
            self.values[name] = arr
        self.metadata.setdefault("timestamp", time.strftime("%Y-%m-%dT%H:%M:%S"))

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes.values())

    def rows(self):
        names = list(self.values)
        for idx in product(*(range(n) for n in self.shape)):
            coords = [a[i] for a, i in zip(self.axes.values(), idx)]
            yield coords + [self.values[n][idx] for n in names]

    def columns(self, display: Optional[str] = None):
        cols = list(self.axes) + list(self.values)
        return cols + [f"{display}_display"] if display else cols

    def _rows_with_display(self, display):
        col = list(self.values).index(display) + len(self.axes) if display else None
        for row in self.rows():
            if display:
                v = row[col]
                row = row + ["" if np.isnan(v) else f"{v:.4g}"]
            yield row

    def to_csv_text(self, display: Optional[str] = None, include_timestamp=False) -> str:
        meta = {k: v for k, v in self.metadata.items()
                if include_timestamp or k != "timestamp"}
        return render_csv(self.columns(display), self._rows_with_display(display), meta)

    def to_csv(self, path, display: Optional[str] = None, include_timestamp=False):
        meta = {k: v for k, v in self.metadata.items()
                if include_timestamp or k != "timestamp"}
        write_csv(path, self.columns(display), self._rows_with_display(display), meta)


@dataclass(frozen=True)
class ToleranceReport:
    axis: str
    half_width: float
    threshold: float = 0.1
    positive: float = np.inf
    negative: float = np.inf


@dataclass(frozen=True)
class CompensationResult:
    phi_opt: float
    r_opt: float
    g2_min: float
    converged: bool


def worker_count(workers: Optional[int] = None) -> int:
    if workers is None:
        env = os.environ.get("UPB_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def parallel_map(func: Callable, items: Sequence, workers: Optional[int] = None) -> list:
    """Map ``func`` over ``items`` keeping input order, optionally in worker processes."""
    n = worker_count(workers)
    if n == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * n))))


def _nan(x):
    return np.nan if x is None else x


def g2_22_perturbative(params: DimerParams, drive: DriveSpec) -> Optional[float]:
    return analytic.g2_from_amplitudes(analytic.amplitude_steady_state(params, drive)).g2_22


# --------------------------------------------------------------------------
# phase locus and landscape


def phase_locus_scan(J_list: Sequence[float], phi_grid: Sequence[float],
                     gamma: float = 1.0) -> ScanResult:
    """Optimal ``(U, Delta)`` on a ``(J, phi)`` grid; NaN where no solution exists."""
    J_arr = np.asarray(J_list, dtype=float)
    phi_arr = np.asarray(phi_grid, dtype=float)
    if np.any(phi_arr <= 0) or np.any(phi_arr >= np.pi):
        raise ValueError("phase grid must lie strictly inside (0, pi)")
    U = np.full((J_arr.size, phi_arr.size), np.nan)
    D = np.full_like(U, np.nan)
    for i, J in enumerate(J_arr):
        if not J > gamma / 4:
            continue
        for k, phi in enumerate(phi_arr):
            pt = analytic.solve_phase_point(phi, J, gamma)
            if pt is not None:
                U[i, k], D[i, k] = pt.U, pt.Delta
    return ScanResult({"J": J_arr, "phi": phi_arr},
                      {"U_opt": U, "U_over_J": U / J_arr[:, None], "Delta_opt": D},
                      {"gamma": gamma, "method": "analytic"})


def _landscape_point(args):
    F1, Delta, J, U, phi, gamma, n_cut = args
    params = DimerParams(Delta=Delta, U=U, J=J, gamma=gamma)
    drive = DriveSpec(F1=F1, phi=phi)
    try:
        rho = lindblad.steady_state(lindblad.liouvillian(params, drive, n_cut))
    except UPBError:
        return (np.nan,) * 5
    c = lindblad.correlators_equal_time(rho, n_cut)
    return (_nan(c.g2_11), _nan(c.g2_22), _nan(c.g2_12), c.n1, c.n2)


def landscape_scan(F1_grid: Sequence[float], Delta_grid: Sequence[float], J: float = 0.4,
                   U: float = 0.052, phi: float = np.pi / 2, gamma: float = 1.0,
                   n_cut: int = lindblad.DEFAULT_CUTOFF,
                   workers: Optional[int] = None) -> ScanResult:
    """Master-equation correlators and occupations on an ``(F1, Delta)`` grid.

    Points are independent and run in parallel; a point whose solve fails is
    recorded as missing and the scan continues.
    """
    F1_arr = np.asarray(F1_grid, dtype=float)
    D_arr = np.asarray(Delta_grid, dtype=float)
    if F1_arr.size == 0 or D_arr.size == 0:
        raise ValueError("landscape grids must be non-empty")
    if np.any(F1_arr > 0.3 * gamma):
        raise ValueError("F1 above 0.3 gamma is outside the validated cutoff range")
    tasks = [(F1, D, J, U, phi, gamma, n_cut) for F1 in F1_arr for D in D_arr]
    out = np.array(parallel_map(_landscape_point, tasks, workers), dtype=float)
    shape = (F1_arr.size, D_arr.size)
    n1, n2 = out[:, 3].reshape(shape), out[:, 4].reshape(shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_n1 = np.where(n1 > 0, np.log10(np.where(n1 > 0, n1, 1.0)), np.nan)
        log_n2 = np.where(n2 > 0, np.log10(np.where(n2 > 0, n2, 1.0)), np.nan)
    return ScanResult(
        {"F1": F1_arr, "Delta": D_arr},
        {"g2_11": out[:, 0], "g2_22": out[:, 1], "g2_12": out[:, 2],
         "n1": n1, "n2": n2, "log10_n1": log_n1, "log10_n2": log_n2},
        {"J": J, "U": U, "phi": phi, "gamma": gamma, "n_cut": n_cut,
         "method": "master-equation"})


def min_g2_22_over_detuning(F1: float, J: float = 0.4, U: float = 0.052,
                            phi: float = np.pi / 2, gamma: float = 1.0,
                            Delta_grid: Optional[Sequence[float]] = None,
                            n_cut: int = lindblad.DEFAULT_CUTOFF):
    """Detuning minimizing the master-equation ``g2_22(0)`` at fixed drive.

    Returns ``(Delta_min, EqualTimeCorrelators)``. A coarse grid brackets the
    minimum, which is then refined by Brent's method.
    """
    if Delta_grid is None:
        Delta_grid = np.linspace(-0.3, 0.3, 25) * gamma

    def corr(D):
        params = DimerParams(Delta=D, U=U, J=J, gamma=gamma)
        rho = lindblad.steady_state(lindblad.liouvillian(params, DriveSpec(F1, phi), n_cut))
        return lindblad.correlators_equal_time(rho, n_cut)

    def g22(D):
        v = corr(D).g2_22
        return np.inf if v is None else v

    grid = np.asarray(Delta_grid, dtype=float)
    vals = [g22(D) for D in grid]
    i = int(np.clip(np.argmin(vals), 1, grid.size - 2))
    res = minimize_scalar(g22, bracket=(grid[i - 1], grid[i], grid[i + 1]),
                          tol=1e-7)
    return float(res.x), corr(res.x)


# --------------------------------------------------------------------------
# overshoot table


def overshoot_scan(J_list: Sequence[float], gamma: float = 1.0, F1: float = 0.05,
                   tau_max: float = 100.0) -> ScanResult:
    """Mode frequencies and peak of the analytic ``g2_22(tau)`` along the locus."""
    rows = []
    for J in J_list:
        if abs(J - gamma / 2) <= 1e-12 * gamma:
            raise ValueError("J = gamma/2 is the dark-state boundary and has no overshoot")
        Delta, U, _ = analytic.locus_quadrature(J, gamma)
        params = DimerParams(Delta=Delta, U=U, J=J, gamma=gamma)
        drive = DriveSpec(F1=F1 * gamma)
        modes = analytic.qrt_modes(params, drive)
        tau_peak, g_max = _series_peak(params, drive, tau_max / gamma)
        rows.append((Delta, U, modes.omega1, modes.omega2,
                     2 * np.pi / abs(modes.omega2), g_max, tau_peak))
    arr = np.array(rows, dtype=float).reshape(-1, 7)
    names = ["Delta_opt", "U_opt", "omega1", "omega2", "T2", "g2_max", "tau_max"]
    return ScanResult({"J": np.asarray(J_list, dtype=float)},
                      {n: arr[:, i] for i, n in enumerate(names)},
                      {"gamma": gamma, "F1": F1, "method": "analytic"})


def _series_peak(params, drive, tau_max, n_grid=20001):
    tau = np.linspace(0.0, tau_max, n_grid)[1:]
    vals = analytic.qrt_g2_tau(params, drive, 2, tau).values
    i = int(np.argmax(vals))
    if i == 0 or i == tau.size - 1:
        return float(tau[i]), float(vals[i])

    def neg(t):
        return -analytic.qrt_g2_tau(params, drive, 2, [t]).values[0]

    res = minimize_scalar(neg, bracket=(tau[i - 1], tau[i], tau[i + 1]),
                          method="golden", tol=1e-10)
    if -res.fun >= vals[i]:
        return float(res.x), float(-res.fun)
    return float(tau[i]), float(vals[i])


# --------------------------------------------------------------------------
# disorder


def disorder_scan(axis: str, mismatch_grid: Sequence[float], threshold: float = 0.1,
                  params: DimerParams = NOMINAL_PARAMS,
                  drive: DriveSpec = NOMINAL_DRIVE):
    """Perturbative ``g2_22(0)`` along one mismatch axis and its tolerance.

    The tolerance half-width is the smaller of the two first threshold
    crossings on either side of zero, each refined by root finding between
    the bracketing grid points.
    """
    if axis not in DISORDER_AXES:
        raise ValueError(f"axis must be one of {sorted(DISORDER_AXES)}, got {axis!r}")
    grid = np.asarray(mismatch_grid, dtype=float)

    def g22(x):
        return _nan(g2_22_perturbative(params.with_(**{axis: x}), drive))

    vals = np.array([g22(x) for x in grid])
    pos = _first_crossing(g22, grid[grid >= 0], threshold)
    neg = _first_crossing(g22, grid[grid <= 0][::-1], threshold)
    report = ToleranceReport(axis, min(pos, neg), threshold, pos, neg)
    scan = ScanResult({axis: grid}, {"g2_22": vals},
                      {"axis": axis, "threshold": threshold, "J": params.J,
                       "U": params.U, "Delta": params.Delta, "F1": drive.F1,
                       "half_width": report.half_width, "method": "perturbative"})
    return scan, report


def _first_crossing(f, outward, threshold):
    """Distance from zero at which ``f`` first exceeds ``threshold`` along ``outward``."""
    if outward.size == 0:
        return np.inf
    prev_x, prev_v = outward[0], f(outward[0])
    if prev_v > threshold:
        return abs(prev_x)
    for x in outward[1:]:
        v = f(x)
        if v > threshold:
            root = brentq(lambda s: f(s) - threshold, prev_x, x, xtol=1e-12)
            return abs(root)
        prev_x, prev_v = x, v
    return np.inf


# --------------------------------------------------------------------------
# compensation

NM_EDGE = 0.05
NM_XATOL = 1e-10
NM_MAXITER = 500
NM_RESTARTS = 3


def _nelder_mead(f, x0):
    x = np.asarray(x0, dtype=float)
    converged = False
    best = None
    for _ in range(1 + NM_RESTARTS):
        simplex = np.vstack([x] + [x + NM_EDGE * e for e in np.eye(x.size)])
        res = minimize(f, x, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": NM_XATOL,
                                "fatol": np.inf, "maxiter": NM_MAXITER})
        converged = bool(res.success)
        moved = np.max(np.abs(res.x - x))
        x = res.x
        if best is None or res.fun <= best[1]:
            best = (res.x, res.fun)
        if converged and moved < NM_XATOL:
            break
    return best[0], best[1], converged


def compensate(delta_Delta: float, mode: str = "phase_only",
               params: DimerParams = NOMINAL_PARAMS,
               drive: DriveSpec = NOMINAL_DRIVE) -> CompensationResult:
    """Re-tune the drive to minimize ``g2_22(0)`` for a detuning mismatch.

    ``mode="phase_only"`` optimizes the phase with equal amplitudes;
    ``"phase_and_ratio"`` also frees ``r = |F2|/|F1|``. Both start from
    ``phi = 90 deg, r = 1``.
    """
    if mode not in ("phase_only", "phase_and_ratio"):
        raise ValueError(f"unknown compensation mode {mode!r}")
    if abs(delta_Delta) > 0.4 * params.gamma + 1e-12:
        raise ValueError("compensation is validated for |delta_Delta| <= 0.4 gamma")
    p = params.with_(delta_Delta=delta_Delta)

    def objective(x):
        ratio = abs(x[1]) if x.size > 1 else 1.0
        g = g2_22_perturbative(p, drive.with_(phi=x[0], ratio=ratio))
        return 1e300 if g is None else g

    x0 = [np.pi / 2, 1.0] if mode == "phase_and_ratio" else [np.pi / 2]
    x, fun, ok = _nelder_mead(objective, x0)
    if not ok:
        warnings.warn(f"Nelder-Mead did not converge for delta_Delta={delta_Delta}",
                      RuntimeWarning, stacklevel=2)
    phi = float(np.angle(np.exp(1j * x[0])))
    r = float(abs(x[1])) if x.size > 1 else 1.0
    return CompensationResult(phi, r, float(fun), ok)


def compensation_scan(mismatch_grid: Sequence[float], params: DimerParams = NOMINAL_PARAMS,
                      drive: DriveSpec = NOMINAL_DRIVE) -> ScanResult:
    """Uncompensated and both compensated ``g2_22(0)`` along ``delta_Delta``."""
    grid = np.asarray(mismatch_grid, dtype=float)
    cols = {k: [] for k in ("g2_fixed", "g2_phase", "phi_phase_deg",
                            "g2_phase_ratio", "phi_phase_ratio_deg", "r_phase_ratio")}
    for d in grid:
        cols["g2_fixed"].append(_nan(g2_22_perturbative(params.with_(delta_Delta=d), drive)))
        a = compensate(d, "phase_only", params, drive)
        b = compensate(d, "phase_and_ratio", params, drive)
        cols["g2_phase"].append(a.g2_min)
        cols["phi_phase_deg"].append(np.degrees(a.phi_opt))
        cols["g2_phase_ratio"].append(b.g2_min)
        cols["phi_phase_ratio_deg"].append(np.degrees(b.phi_opt))
        cols["r_phase_ratio"].append(b.r_opt)
    return ScanResult({"delta_Delta": grid}, cols,
                      {"J": params.J, "U": params.U, "Delta": params.Delta,
                       "F1": drive.F1, "method": "perturbative"})


def compensation_tolerance(mode: str = "phase_only", threshold: float = 0.1,
                           params: DimerParams = NOMINAL_PARAMS,
                           drive: DriveSpec = NOMINAL_DRIVE,
                           step: float = 0.02, limit: float = 0.4) -> ToleranceReport:
    """Mismatch half-width over which compensated ``g2_22(0)`` stays below ``threshold``."""
    def g(d):
        return compensate(d, mode, params, drive).g2_min

    outward = np.arange(0.0, limit + step / 2, step)
    pos = _first_crossing(g, outward, threshold)
    neg = _first_crossing(g, -outward, threshold)
    return ToleranceReport("delta_Delta", min(pos, neg), threshold, pos, neg)


def compensation_phase_slope(mode: str = "phase_only", h: float = 0.05,
                             params: DimerParams = NOMINAL_PARAMS,
                             drive: DriveSpec = NOMINAL_DRIVE) -> float:
    """Magnitude of ``d phi_opt / d delta_Delta`` at zero, in degrees per 0.1 gamma."""
    lo = compensate(-h, mode, params, drive).phi_opt
    hi = compensate(h, mode, params, drive).phi_opt
    return float(abs(np.degrees(hi - lo)) / (2 * h) * 0.1 * params.gamma)


# --------------------------------------------------------------------------
# single-site comparison


def single_site_point(J: float, gamma: float = 1.0, tol: float = 1e-12,
                      u_max: float = 50.0):
    """``(U, Delta)`` giving perfect antibunching of the only driven site, or ``None``.

    With site 2 undriven the interference condition is imposed on the
    driven site, ``C20 = 0``. Found by Nelder-Mead on ``g2_11(0)`` over
    ``(log U, Delta)`` from several seeds, the first taken from the
    bilateral locus when it exists. ``U`` is capped at ``u_max * gamma`` so
    that conventional blockade at very large ``U`` is not mistaken for an
    interference solution.
    """
    drive = DriveSpec(F1=0.01 * gamma, ratio=0.0)

    def objective(x):
        if x[0] > np.log(u_max):
            return 1e300
        params = DimerParams(Delta=x[1] * gamma, U=np.exp(x[0]) * gamma, J=J, gamma=gamma)
        try:
            g = analytic.g2_from_amplitudes(analytic.amplitude_steady_state(params, drive)).g2_11
        except UPBError:
            return 1e300
        return 1e300 if g is None else g

    seeds = []
    if J > gamma / 4 and abs(J - gamma / 2) > 1e-9 * gamma:
        D0, U0, _ = analytic.locus_quadrature(J, gamma)
        seeds.append((np.log(U0 / gamma), D0 / gamma))
    seeds += [(np.log(u), d) for u in (0.1, 0.5, 2.0) for d in (0.0, 0.2, -0.2)]
    for seed in seeds:
        x, fun, _ = _nelder_mead(objective, seed)
        if fun < tol:
            return float(np.exp(x[0]) * gamma), float(x[1] * gamma)
    return None


def single_site_comparison(J_grid: Sequence[float], gamma: float = 1.0):
    """Bilateral vs single-site optimal nonlinearity and their crossover.

    Returns ``(ScanResult, crossover)`` where ``crossover`` is ``(J, U)`` at
    the first sign change of ``U_single - U_bilateral`` (refined by root
    finding), or ``None``.
    """
    J_arr = np.asarray(J_grid, dtype=float)
    U_bil, U_single, D_single = [], [], []
    for J in J_arr:
        U_bil.append(analytic.locus_quadrature(J, gamma).U if J > gamma / 4 else np.nan)
        pt = single_site_point(J, gamma)
        U_single.append(np.nan if pt is None else pt[0])
        D_single.append(np.nan if pt is None else pt[1])
    diff = np.asarray(U_single) - np.asarray(U_bil)
    crossover = None
    for k in range(len(J_arr) - 1):
        if np.isfinite(diff[k]) and np.isfinite(diff[k + 1]) and diff[k] * diff[k + 1] <= 0:
            def f(J):
                return single_site_point(J, gamma)[0] - analytic.locus_quadrature(J, gamma).U
            Jc = brentq(f, J_arr[k], J_arr[k + 1], xtol=1e-8) if diff[k] != 0 else J_arr[k]
            crossover = (float(Jc), float(analytic.locus_quadrature(Jc, gamma).U))
            break
    meta = {"gamma": gamma}
    if crossover:
        meta.update(crossover_J=crossover[0], crossover_U=crossover[1])
    scan = ScanResult({"J": J_arr}, {"U_bilateral": U_bil, "U_single_site": U_single,
                                     "Delta_single_site": D_single}, meta)
    return scan, crossover


# --------------------------------------------------------------------------
# units


def unit_convert(Q: float, wavelength_nm: float):
    """Decay rate (in 1e9 s^-1) and photon lifetime (ps) of a cavity of quality ``Q``."""
    if not (Q > 0 and wavelength_nm > 0):
        raise ValueError("Q and wavelength must be positive")
    omega = 2 * np.pi * constants.c / (wavelength_nm * 1e-9)
    gamma = omega / Q
    return gamma / 1e9, 1e12 / gamma
