"""Exception types raised across the package."""


class TwoScaleError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(TwoScaleError, ValueError):
    pass


class OutOfDomainError(TwoScaleError, ValueError):
    """A query point lies outside the computational domain."""


class ContractError(TwoScaleError):
    """An operation was called with a violated precondition."""


class InternalConsistencyError(TwoScaleError):
    pass


class MeshValidationError(TwoScaleError, ValueError):
    pass


class DivergenceError(TwoScaleError):
    """The scalar nodal solve could not bracket a root."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NonConvergenceError(TwoScaleError):
    """The nonlinear sweep hit its iteration cap; carries the partial report."""

    def __init__(self, message, report=None, field=None):
        super().__init__(message)
        self.report = report
        self.field = field
