from typing import Optional


class LearnerError(Exception):
    """Base class for all errors raised by the learner services"""
    exit_code = 1


class DimensionError(LearnerError, ValueError):
    """Shapes of the inputs do not line up"""
    exit_code = 2


class LTTFormatError(LearnerError, ValueError):
    """Malformed LTT tensor payload"""
    exit_code = 2


class CapacityError(LearnerError):
    """A dense matrixization would exceed the configured entry budget"""
    exit_code = 2

    def __init__(self, message: str, size: int, budget: int):
        super().__init__(message)
        self.size = size
        self.budget = budget


class OrderingError(LearnerError, ValueError):
    """Frame indices inserted into a sample memory must strictly increase"""
    exit_code = 2


class NumericError(LearnerError, ArithmeticError):
    """Non-finite iterate or failed linear solve"""
    exit_code = 3

    def __init__(self, message: str, iteration: Optional[int] = None,
                 condition: Optional[float] = None):
        super().__init__(message)
        self.iteration = iteration
        self.condition = condition


class TrainingError(NumericError):
    """Toy training diverged"""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class EmptyTargetError(LearnerError):
    """The mask has no positive mass, so no box can be estimated"""
    exit_code = 4
