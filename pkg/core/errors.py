from typing import Iterable, Optional


class ProfileError(ValueError):
    """Raised when an event profile or time series fails validation."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RationingError(ValueError):
    pass


class StorageError(ValueError):
    pass


class SweepError(ValueError):
    pass


class ScenarioConfigError(ValueError):
    pass


class CalibrationError(ValueError):
    """Raised when calibration targets cannot be reached; `violated` names the failing targets."""

    def __init__(self, message: str, violated: Iterable[str] = ()):
        self.violated = frozenset(violated)
        if self.violated:
            message = f"{message} (violated: {', '.join(sorted(self.violated))})"
        super().__init__(message)
