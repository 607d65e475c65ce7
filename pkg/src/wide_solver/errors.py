"""Exception hierarchy shared by the solver modules."""


class WideError(Exception):
    """Base class for every error raised by :mod:`wide_solver`."""


class GridMismatchError(WideError, ValueError):
    pass


class UnsupportedOperationError(WideError, ValueError):
    pass


class InvalidTermError(WideError, ValueError):
    pass


class UnknownPresetError(WideError, KeyError):
    pass


class ConditioningError(WideError, ValueError):
    """Horizon-to-epsilon ratio too large for double precision weights."""


class NonFiniteError(WideError, FloatingPointError):
    """A functional value became inf/nan; ``snapshot`` holds the offending iterate."""

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot


class InstabilityError(WideError, RuntimeError):
    pass


class WindowError(WideError, ValueError):
    pass


class NotConvergedError(WideError, ValueError):
    pass


class ConfigError(WideError, ValueError):
    pass
