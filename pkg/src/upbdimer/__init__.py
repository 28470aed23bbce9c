"""Unconventional photon blockade in a bilaterally driven Kerr dimer."""
from .analytic import (
    amplitude_steady_state,
    complex_detuning,
    dark_state_phase,
    g2_from_amplitudes,
    locus_quadrature,
    phase_range,
    qrt_g2_tau,
    qrt_modes,
    solve_phase_point,
    u_of_phase,
    upb_residual,
)
from .exceptions import (
    CutoffError,
    DegenerateSteadyStateError,
    IntegrationError,
    ResonanceError,
    SingularPointError,
    ThresholdError,
    UPBError,
)
from .lindblad import (
    build_hamiltonian,
    build_liouvillian,
    correlators_equal_time,
    g2_tau_numeric,
    liouvillian,
    steady_state,
    time_evolve_pulsed,
)
from .params import DimerParams, DriveSpec

__version__ = "0.1.0"
