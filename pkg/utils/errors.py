"""
Exception hierarchy shared by the library and the CLI.

Every class carries the process exit code the CLI reports for it.
"""
from typing import Optional, Sequence

import numpy as np


class LumpingError(Exception):
    """Base class for all toolkit errors"""
    exit_code = 1


class ValidationError(LumpingError, ValueError):
    """Malformed input: matrices, partitions, lumpings, flags"""
    exit_code = 2


class ChainValidationError(ValidationError):
    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message)
        self.row = row


class NotIrreducibleError(ValidationError):
    """Stationary distribution is not unique"""


class InputFormatError(ValidationError):
    def __init__(self, message: str, line: Optional[int] = None, offset: Optional[int] = None):
        super().__init__(message)
        self.line = line
        self.offset = offset


class ConfigError(ValidationError):
    pass


class ResourceCapError(LumpingError):
    exit_code = 3

    def __init__(self, message: str, cap: int, requested: int):
        super().__init__(f"{message} (requested {requested}, cap {cap})")
        self.cap = cap
        self.requested = requested


class ConvergenceError(LumpingError, ArithmeticError):
    exit_code = 3

    def __init__(self, message: str, last_iterate: np.ndarray, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.last_iterate = last_iterate
        self.residual = residual


class ImpossibleObservationError(LumpingError):
    """No state in the preimage is accessible from the previous state"""
    exit_code = 4

    def __init__(self, position: int, previous: int, symbol: int):
        super().__init__(
            f"observation {symbol} at position {position} is impossible after state {previous}"
        )
        self.position = position
        self.previous = previous
        self.symbol = symbol


class AmbiguityError(LumpingError):
    exit_code = 5

    def __init__(self, position: int, candidates: Sequence[int]):
        super().__init__(f"ambiguous observation at position {position}: candidates {list(candidates)}")
        self.position = position
        self.candidates = tuple(candidates)


class BoundViolationError(LumpingError, AssertionError):
    """A certified inequality failed numerically"""
    exit_code = 1
