"""Exception types raised across the package."""


class MannLabError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(MannLabError):
    """Vector/matrix dimensions do not match the ambient space."""


class ConfigError(MannLabError):
    """Malformed, incomplete, or unknown-field configuration."""


class GalleryError(MannLabError):
    """Unknown gallery operator or inadmissible operator parameters."""


class ScheduleError(MannLabError):
    """Schedule value out of range or jointly infeasible window."""


class OracleUnavailableError(MannLabError):
    """Fixed-point set requested for an operator without a usable representation."""


class SingularSystemError(MannLabError):
    """Direct linear solve hit a singular system."""


class AnchorConvergenceError(MannLabError):
    """Damped anchor-path iteration failed to converge within its caps."""


class DivergenceGuardError(MannLabError):
    """Iterate norm exceeded the divergence guard radius.

    Should never fire for a certified operator with validated schedules;
    firing signals a bug or an invalid certification. The partial trace
    is attached for post-mortem inspection.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ValidationFailure(MannLabError):
    """A harness-level gate (schedule validation or certification) failed.

    Carries the serializable report so the CLI can print it and exit 2.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
