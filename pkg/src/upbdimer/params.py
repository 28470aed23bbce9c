"""Parameter containers for the driven Kerr dimer.

All energies and rates are expressed in the same unit as ``gamma``; with the
default ``gamma=1`` every quantity is in units of the cavity decay rate.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class DimerParams:
    """Physical parameters of the two-site Kerr dimer.

    Site mismatches are split symmetrically about the nominal value, e.g.
    ``Delta_1 = Delta + delta_Delta/2`` and ``Delta_2 = Delta - delta_Delta/2``,
    so that ``delta_Delta = Delta_1 - Delta_2``.
    """

    Delta: float
    U: float
    J: float
    gamma: float = 1.0
    Ux: float = 0.0
    delta_Delta: float = 0.0
    delta_gamma: float = 0.0
    delta_U: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        g1, g2 = self.site_gammas()
        if not (g1 > 0 and g2 > 0):
            raise ValueError(
                f"per-site decay rates must be positive, got ({g1}, {g2})")
        if self.J < 0:
            raise ValueError(f"hopping J must be non-negative, got {self.J}")

    def site_detunings(self):
        return (self.Delta + self.delta_Delta / 2,
                self.Delta - self.delta_Delta / 2)

    def site_gammas(self):
        return (self.gamma + self.delta_gamma / 2,
                self.gamma - self.delta_gamma / 2)

    def site_kerr(self):
        return (self.U + self.delta_U / 2, self.U - self.delta_U / 2)

    @property
    def symmetric(self) -> bool:
        return self.delta_Delta == 0 and self.delta_gamma == 0 and self.delta_U == 0

    def with_(self, **changes) -> "DimerParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DriveSpec:
    """Bilateral coherent drive.

    The site-2 amplitude is ``F2 = ratio * F1 * exp(1j * phi)``. When
    ``pulse_sigma`` is set, site 2 is modulated by a Gaussian envelope
    ``exp(-t**2 / (2 sigma**2))`` centred at ``t=0`` while site 1 stays CW.
    """

    F1: float
    phi: float = np.pi / 2
    ratio: float = 1.0
    pulse_sigma: Optional[float] = None

    def __post_init__(self):
        if self.F1 < 0:
            raise ValueError(f"F1 must be non-negative, got {self.F1}")
        if self.ratio < 0:
            raise ValueError(f"ratio must be non-negative, got {self.ratio}")
        if self.pulse_sigma is not None and not self.pulse_sigma > 0:
            raise ValueError(f"pulse_sigma must be positive, got {self.pulse_sigma}")

    @property
    def F2(self) -> complex:
        return self.ratio * self.F1 * np.exp(1j * self.phi)

    def envelope(self, t):
        """Site-2 envelope at time ``t`` (1 for a CW drive)."""
        if self.pulse_sigma is None:
            return np.ones_like(t, dtype=float) if np.ndim(t) else 1.0
        return np.exp(-np.asarray(t, dtype=float) ** 2 / (2 * self.pulse_sigma ** 2))

    def with_(self, **changes) -> "DriveSpec":
        return replace(self, **changes)
