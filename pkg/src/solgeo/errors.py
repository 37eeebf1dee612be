class DomainError(ValueError):
    """Input outside the documented domain of an operation."""


class ConstraintError(ValueError):
    """A pointwise algebraic constraint is violated beyond tolerance.

    Carries the worst defect value in `defect`.
    """

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class NumericalError(RuntimeError):
    """A numerical procedure became unstable or failed to converge."""
