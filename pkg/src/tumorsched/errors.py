"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid argument or inconsistent configuration."""


class NumericalFailureError(RuntimeError):
    """Integration produced a non-finite state.

    Attributes:
        step: index of the Euler step at which the failure was detected,
            or -1 when unknown.
    """

    def __init__(self, message: str, step: int = -1):
        super().__init__(message)
        self.step = step
