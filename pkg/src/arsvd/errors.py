"""Exception hierarchy shared by every module."""


class ArsvdError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(ArsvdError, ValueError):
    """An input violated a documented precondition."""


class ShapeError(ContractError):
    """Operand dimensions do not agree."""


class NumericalError(ArsvdError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy result."""


class SvdConvergenceError(NumericalError):
    def __init__(self, message, residual, sweeps):
        super().__init__(message)
        self.residual = residual
        self.sweeps = sweeps


class DivergenceError(NumericalError):
    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch


class DatasetError(ContractError):
    """A dataset file is malformed or its labels are out of range."""


class ContainerError(ArsvdError, OSError):
    """A tensor container could not be read or written."""


class BadMagicError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class TruncatedFileError(ContainerError):
    pass


class DuplicateNameError(ContainerError):
    pass


class PayloadMismatchError(ContainerError):
    pass


def attach_context(exc, prefix, **attrs):
    """Prefix ``exc``'s message and set attributes on it, in place."""
    for key, value in attrs.items():
        setattr(exc, key, value)
    if exc.args:
        exc.args = (f"{prefix}: {exc.args[0]}",) + exc.args[1:]
    else:
        exc.args = (prefix,)
    return exc
