"""Exception types shared across the package."""


class UnsupportedError(ValueError):
    """The operation needs a property the objective does not have (finite L, Hessian)."""


class OutOfRangeError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class DivergenceError(ArithmeticError):
    """A non-finite value, gradient or iterate showed up during a run.

    ``last_index`` is the index of the last fully valid point and ``partial``
    holds whatever was recorded up to it (a Trajectory or None).
    """

    def __init__(self, message, last_index, partial=None):
        super().__init__(message)
        self.last_index = last_index
        self.partial = partial
