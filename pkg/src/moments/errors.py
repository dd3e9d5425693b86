"""Exception types shared across the package."""


class PoleError(ZeroDivisionError):
    """Raised when a function is evaluated at one of its poles."""


class RemovableSingularityError(ValueError):
    """Raised when a formula is evaluated exactly on a removable singularity.

    The caller should use a perturb-and-extrapolate driver instead.
    """


class CancellationError(ArithmeticError):
    """Raised when an analytically guaranteed cancellation is not observed numerically."""


class DegenerateParametersError(ValueError):
    """Raised when a moment determinant vanishes (to tolerance) at the given parameters."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative numerical procedure fails to converge."""


class InconsistencyError(ArithmeticError):
    """Raised when an internal consistency check fails (e.g. Z_X(1) not real)."""
