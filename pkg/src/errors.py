from typing import Any, Optional


class CondSanovError(Exception):
    """Base error; `exit_code` is what the command line returns for it."""

    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def to_dict(self) -> dict:
        return {
            "error": self.__class__.__name__,
            "detail": self.detail,
            "exit_code": self.exit_code,
        }


class ArgumentError(CondSanovError, ValueError):
    exit_code = 4


class PreconditionError(ArgumentError):
    exit_code = 4


class ConfigError(CondSanovError):
    exit_code = 4


class ResourceError(CondSanovError):
    exit_code = 5

    def __init__(self, detail: str, partial: Any = None):
        super().__init__(detail)
        self.partial = partial


class ConvergenceError(CondSanovError):
    exit_code = 2

    def __init__(self, detail: str, last_iterate: Any = None, residual: float = float("nan"), iterations: int = 0):
        super().__init__(detail)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


class InternalContractError(CondSanovError):
    exit_code = 2


class InvariantViolation(CondSanovError):
    exit_code = 2


class InfeasibleError(CondSanovError):
    exit_code = 3
