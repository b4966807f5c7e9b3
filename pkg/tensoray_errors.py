"""
Error types raised by the tomography modules. The command line front end maps each family to an exit code
(see cli.commands.EXIT_CODES).
"""


class TensorayError(Exception):
    """Base class of all the errors raised by the tomography modules"""


class ConfigError(TensorayError):
    """Invalid grid sizes, tolerances or descriptors"""


class DomainError(TensorayError):
    """A point lies outside the closed disk or off the boundary circle when a boundary point is expected"""


class PreconditionError(TensorayError):
    """An operation has been invoked on inputs violating its precondition (e.g. a ray not in the outflow set)"""


class MarginError(TensorayError):
    """An interior evaluation point is closer to the boundary than the configured evaluation margin"""


class ShapeError(TensorayError):
    """Gridded arrays that must share a grid do not"""


class ResolutionError(TensorayError):
    """A truncated mode expansion carries more discarded mass than allowed"""


class FileFormatError(TensorayError):
    """A persisted artifact cannot be parsed; the message reports the offending line when available"""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"{message} (line {line_number})"
        super().__init__(message)
        self.line_number = line_number
