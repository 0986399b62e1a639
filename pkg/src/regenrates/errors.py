"""Exception hierarchy shared across the toolkit.

Every error raised on a computation path derives from RegenRatesError so the
CLI can map failures to a single nonzero exit code while keeping the error
name on stderr.
"""


class RegenRatesError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RegenRatesError):
    """Invalid experiment configuration (schema violation, bad parameter)."""


class DegenerateCovariance(RegenRatesError):
    """Covariance matrix is not strictly positive definite where required."""


class DegenerateSigma(RegenRatesError):
    """Block estimates are degenerate (sigma^2 == 0); Gaussian comparison refused."""


class ResourceLimit(RegenRatesError):
    """Requested exact computation exceeds the configured desk-scale limits."""


class CensoredBlock(RegenRatesError):
    """A trajectory produced no confirmed regeneration within the horizon.

    Carries partial statistics so the caller can decide to retry or abort.
    """

    def __init__(self, message, *, steps=0, max_level=None, candidates=0):
        super().__init__(message)
        self.steps = steps
        self.max_level = max_level
        self.candidates = candidates


class HarvestFailed(RegenRatesError):
    """The model persistently censors; harvesting was aborted."""

    def __init__(self, message, *, attempts=0, censored=0):
        super().__init__(message)
        self.attempts = attempts
        self.censored = censored


class NotTransient(RegenRatesError):
    """The jump-odds law has E[log rho] >= 0; right-transient analytics undefined.

    Carries the classification integrals computed before the failure.
    """

    def __init__(self, message, *, e_log_rho=None, e_rho=None):
        super().__init__(message)
        self.e_log_rho = e_log_rho
        self.e_rho = e_rho


class TruncationUnreliable(RegenRatesError):
    """A truncated series did not decay enough for the requested tolerance."""


class PeriodicChain(RegenRatesError):
    """Mixing coefficients require an aperiodic chain."""
