"""Exception hierarchy for the dimer toolkit."""


class UPBError(Exception):
    """Base class for all errors raised by :mod:`upbdimer`."""


class CutoffError(UPBError, ValueError):
    """Fock-space cutoff outside the supported range."""


class ThresholdError(UPBError, ValueError):
    """Hopping at or below the minimum coupling where the locus is undefined."""


class SingularPointError(UPBError, ZeroDivisionError):
    """The closed-form nonlinearity has a vanishing denominator."""


class ResonanceError(UPBError, ArithmeticError):
    """The one- or two-photon amplitude system is singular."""


class DegenerateSteadyStateError(UPBError, ArithmeticError):
    """The trace-constrained Liouvillian system could not be solved."""


class IntegrationError(UPBError, RuntimeError):
    """Time integration failed before reaching the requested end time."""

    def __init__(self, message, t_reached=None):
        super().__init__(message)
        self.t_reached = t_reached
