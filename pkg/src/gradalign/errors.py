"""Exception hierarchy shared by every module."""


class GradAlignError(Exception):
    """Base class for all errors raised by gradalign."""


class ParseError(GradAlignError):
    """A malformed line in an input file."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class ConsistencyError(GradAlignError):
    """Inputs that parse individually but disagree with each other."""


class ContractError(GradAlignError, ValueError):
    """An argument violates the precondition of an operation."""


class NumericalError(GradAlignError, FloatingPointError):
    """Non-finite values appeared during a forward pass or training."""

    def __init__(self, message, layer=None):
        self.layer = layer
        if layer is not None:
            message = f"{message} (layer {layer})"
        super().__init__(message)
