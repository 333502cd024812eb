"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of the operation."""


class StructuralError(ValueError):
    """Two grid objects cannot be combined (box / spacing / tag mismatch)."""


class MustRegularizeError(DomainError):
    """The transfer function vanishes inside the requested band; use the
    regularized filter instead of the plain Fourier ratio."""


class DegenerateRegionError(DomainError):
    """A zero-region threshold exceeds the local maximum of |h~| between
    adjacent roots, so the region construction is ill-posed."""


class UnsupportedVariantError(DomainError):
    """The noise-model variant does not support the requested operation."""


class NonConvergenceError(RuntimeError):
    """Iterative solver hit its iteration cap.  Carries the last iterate."""

    def __init__(self, message, last_iterate=None, objective=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.objective = objective
