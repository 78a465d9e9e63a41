"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (CLI exit code 2)."""


class DataError(ValueError):
    """Malformed input data or missing upstream artifact (CLI exit code 3)."""


class ConvergenceError(RuntimeError):
    """An iterative search failed to reach its target (CLI exit code 4).

    Carries the best iterate found so the caller can inspect how far the
    search got.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
