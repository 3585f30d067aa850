"""Exception hierarchy shared across the runtime."""


class QcorError(Exception):
    """Base class for all library errors."""


class ParseError(QcorError):
    """Malformed textual input (observable string, fermion string, kernel DSL).

    `position` is a character offset for single-line inputs, or a
    (line, column) pair for kernel sources.
    """

    def __init__(self, message, position=None):
        if position is not None:
            if isinstance(position, tuple):
                message = f"{message} (line {position[0]}, column {position[1]})"
            else:
                message = f"{message} (position {position})"
        super().__init__(message)
        self.position = position


class ValidationError(QcorError):
    """A structural invariant was violated (bad kernel, bad arguments)."""


class MissingKeyError(QcorError):
    """HeterogeneousMap lookup for a key that is not present."""


class KindMismatchError(QcorError):
    """HeterogeneousMap lookup with a kind different from the stored one."""


class OptimizationError(QcorError):
    """Optimizer could not proceed (bad options, non-finite objective)."""


class TaskError(QcorError):
    """Failure inside an asynchronous task, surfaced at sync."""
