"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid instance, model or run configuration."""


class OracleError(RuntimeError):
    """The first-order oracle returned a non-finite value."""


class ContractViolation(ValueError):
    """A caller broke an operation's precondition."""


class SolverFailure(RuntimeError):
    """An iterative solver stopped without a certificate.

    ``best`` holds the best iterate found (or a partial run record).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
