"""
RoadHawkes exceptions
One hierarchy for everything the simulator can reject.
"""

from typing import Iterable, List


class RoadHawkesError(Exception):
    """Base class for all RoadHawkes errors."""


class ConfigError(RoadHawkesError, ValueError):
    """Invalid or incomplete configuration document."""


class NetworkError(RoadHawkesError):
    """Network topology or road parameters violate an invariant."""


class CFLViolationError(RoadHawkesError):
    """Time step too large for the current capacity field."""


class StepTooCoarseError(RoadHawkesError):
    """dt * intensity reached 1, the per-step Bernoulli rule no longer applies."""


class NoPositionAvailableError(RoadHawkesError):
    """Accident location measure has zero total weight."""


class HistoryMismatchError(RoadHawkesError):
    """Recorded histories do not line up in time."""


class EventLogError(RoadHawkesError):
    """Malformed accident log or vehicle count file."""

    def __init__(self, message: str, line_numbers: Iterable[int] = ()):
        self.line_numbers: List[int] = list(line_numbers)
        if self.line_numbers:
            shown = ', '.join(str(n) for n in self.line_numbers[:20])
            more = '' if len(self.line_numbers) <= 20 else f' (+{len(self.line_numbers) - 20} more)'
            message = f"{message} (lines {shown}{more})"
        super().__init__(message)
