"""Exception and warning types shared across the library."""


class LatsurfError(Exception):
    """Base class for every error raised by this library."""


class CriticalPoint(LatsurfError):
    """Surface geometry requested at a critical point of the dispersion."""


class DegenerateLevel(LatsurfError):
    """Level value too close to a critical value of the dispersion."""


class ResolutionTooLow(LatsurfError):
    """Grid resolution below the documented minimum."""


class ConvexLevel(LatsurfError):
    """Zero-curvature curve requested on a level with no such curve."""


class TracingFailure(LatsurfError):
    """Curve tracing produced components that do not close up."""


class NewtonDivergence(LatsurfError):
    """A Newton solve failed to converge; logged per seed, rarely fatal."""


class ResidualFailure(LatsurfError):
    """A point that should satisfy a residual identity does not."""


class CertificateViolation(LatsurfError):
    """A sampled certificate came out nonpositive or above its cap."""


class PhaseUnderresolved(LatsurfError):
    """Oscillatory quadrature would need more leaves than the budget allows."""


class BudgetExceeded(LatsurfError):
    """Monte Carlo target standard error unreachable within the budget."""


class UnderResolved(LatsurfError):
    """A Riemann sum failed its resolution doubling check."""


class ConfigInvalid(LatsurfError):
    """Run configuration failed validation; message lists the bad fields."""


class VersionMismatch(LatsurfError):
    """Cache file written by an incompatible format version."""


class CorruptFile(LatsurfError):
    """Cache file failed its checksum."""


class UShiftRounded(UserWarning):
    """The requested shift u was rounded to the nearest grid point."""
