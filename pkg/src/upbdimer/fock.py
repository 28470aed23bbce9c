"""Truncated two-mode Fock-space operators.

Site 1 is always the left Kronecker factor, so the basis state ``|m, n>``
sits at flat index ``m * (n_cut + 1) + n``. Operators are returned as CSR
matrices; density matrices are dense ``ndarray`` objects.
"""
from __future__ import annotations

from functools import lru_cache
from math import isqrt

import numpy as np
import scipy.sparse as sp

from .exceptions import CutoffError

MAX_CUTOFF = 30


def _check_cutoff(n_cut):
    if not isinstance(n_cut, (int, np.integer)) or not 1 <= n_cut <= MAX_CUTOFF:
        raise CutoffError(f"cutoff must be an integer in [1, {MAX_CUTOFF}], got {n_cut!r}")


def _check_site(site):
    if site not in (1, 2):
        raise ValueError(f"site must be 1 or 2, got {site!r}")


def cutoff_from_dim(dim: int) -> int:
    """Per-site cutoff for a two-mode Hilbert space of dimension ``dim``."""
    root = isqrt(dim)
    if root * root != dim:
        raise CutoffError(f"dimension {dim} is not a perfect square")
    return root - 1


@lru_cache(maxsize=None)
def _single_mode_destroy(n_cut):
    return sp.diags(np.sqrt(np.arange(1, n_cut + 1, dtype=float)), 1,
                    shape=(n_cut + 1, n_cut + 1), format="csr", dtype=complex)


def identity(n_cut: int) -> sp.csr_matrix:
    _check_cutoff(n_cut)
    return sp.identity((n_cut + 1) ** 2, dtype=complex, format="csr")


def destroy(n_cut: int, site: int) -> sp.csr_matrix:
    """Annihilation operator for ``site`` on the two-mode space."""
    _check_cutoff(n_cut)
    _check_site(site)
    a = _single_mode_destroy(n_cut)
    eye = sp.identity(n_cut + 1, dtype=complex, format="csr")
    factors = (a, eye) if site == 1 else (eye, a)
    return sp.kron(*factors, format="csr")


def create(n_cut: int, site: int) -> sp.csr_matrix:
    return dagger(destroy(n_cut, site))


def number(n_cut: int, site: int) -> sp.csr_matrix:
    a = destroy(n_cut, site)
    return (a.conj().T @ a).tocsr()


def dagger(op):
    """Hermitian adjoint, preserving sparse/dense storage."""
    if sp.issparse(op):
        return op.conj().T.tocsr()
    return np.conj(op).T


def basis(n_cut: int, m: int, n: int) -> np.ndarray:
    """Ket ``|m, n>`` as a dense vector."""
    _check_cutoff(n_cut)
    if not (0 <= m <= n_cut and 0 <= n <= n_cut):
        raise ValueError(f"occupations ({m}, {n}) exceed cutoff {n_cut}")
    psi = np.zeros((n_cut + 1) ** 2, dtype=complex)
    psi[m * (n_cut + 1) + n] = 1.0
    return psi


def projector(n_cut: int, m: int, n: int) -> np.ndarray:
    psi = basis(n_cut, m, n)
    return np.outer(psi, psi.conj())


def expect(op, rho) -> complex:
    """``Tr(op @ rho)`` for an operator and a density matrix."""
    rho = np.asarray(rho)
    if op.shape != rho.shape:
        raise ValueError(f"dimension mismatch: operator {op.shape} vs state {rho.shape}")
    if sp.issparse(op):
        return complex((op.multiply(rho.T)).sum())
    return complex(np.einsum("ij,ji->", op, rho))


def check_density_matrix(rho, *, trace_tol=1e-10, herm_tol=1e-10, psd_tol=1e-8):
    """Raise ``ValueError`` unless ``rho`` is a valid density matrix."""
    rho = np.asarray(rho)
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"trace {tr} differs from 1")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"not Hermitian: max|rho - rho^dag| = {herm:.3e}")
    lam = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lam < -psd_tol:
        raise ValueError(f"not positive semidefinite: min eigenvalue {lam:.3e}")
