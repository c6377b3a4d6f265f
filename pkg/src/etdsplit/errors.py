"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid domain, grid, problem, or run configuration."""


class ShapeError(ValidationError):
    """A field or right-hand side has the wrong shape for the operator."""


class SingularSystemError(RuntimeError):
    """A shifted-operator factorization hit an exactly singular pivot."""


class DivergenceError(RuntimeError):
    """Time integration produced non-finite values (NaN/Inf)."""

    def __init__(self, message, step=None, t=None):
        super().__init__(message)
        self.step = step
        self.t = t
