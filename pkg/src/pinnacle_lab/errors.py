"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, NumericError -> 3,
BudgetError -> 4.
"""


class PinnacleLabError(Exception):
    pass


class ConfigError(PinnacleLabError):
    """Bad user input: parameters, config files, CLI arguments."""


class AdmissibilityError(PinnacleLabError):
    """A height configuration violates a model restriction (RSOS gradient,
    floor).  Carries the offending bond/site when known."""

    def __init__(self, message, bond=None, site=None):
        super().__init__(message)
        self.bond = bond
        self.site = site


class NumericError(PinnacleLabError):
    """A solver failed to converge within its iteration cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BudgetError(PinnacleLabError):
    """A combinatorial computation exceeds its declared size budget."""


class OrderingViolationError(PinnacleLabError):
    """The monotone coupling produced a sitewise ordering violation.

    This is a hard failure: it indicates a bug in the stochastic
    monotonicity of the single-site conditional, never a statistical
    fluctuation.
    """
