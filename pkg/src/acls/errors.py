"""Exception types raised across the package."""


class AclsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(AclsError, ValueError):
    pass


class DegenerateScaleError(AclsError, ValueError):
    pass


class SingularSystemError(AclsError, ArithmeticError):
    """A linear system is singular or not positive definite.

    ``rank`` carries the effective rank when it is known.
    """

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class InstanceTooLargeError(AclsError):
    pass


class DegenerateDesignError(AclsError):
    pass


class DivergenceError(AclsError, ArithmeticError):
    """An iterative method produced a non-finite iterate.

    ``last_finite`` holds the last finite iterate.
    """

    def __init__(self, message, last_finite=None):
        super().__init__(message)
        self.last_finite = last_finite


class InsufficientInliersError(AclsError):
    pass


class DegenerateMaskError(AclsError):
    pass
