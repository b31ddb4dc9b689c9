"""
Hourly profiles for RoadHawkes
Hour-of-day accident shares and inflow profiles built from hourly vehicle counts.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from roadhawkes.analysis.event_log import FIRST_DATA_LINE, EventLog
from roadhawkes.core.inflow import PiecewiseConstantInflow
from roadhawkes.errors import ConfigError, EventLogError

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24

DAY_FILTERS = ('all', 'weekday', 'saturday', 'sunday')


@dataclass
class HourlyProfile:
    """
    Events per hour of day.

    Attributes:
        counts: Number of events in each of the 24 hourly bins
        shares: counts normalized to sum to 1
    """
    counts: np.ndarray
    shares: np.ndarray

    @classmethod
    def from_counts(cls, counts: Sequence[float]) -> 'HourlyProfile':
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if not total > 0:
            raise EventLogError("Hourly profile of an empty log")
        return cls(counts, counts / total)

    def peak_hours(self) -> np.ndarray:
        """Hours whose share exceeds both neighbours (cyclically)."""
        s = self.shares
        return np.flatnonzero((s > np.roll(s, 1)) & (s > np.roll(s, -1)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'hour': np.arange(HOURS_PER_DAY), 'count': self.counts, 'share': self.shares})


def hourly_shares_from_times(times: Sequence[float], period: float = HOURS_PER_DAY) -> HourlyProfile:
    """Hourly profile of event times measured in hours, folded onto one period."""
    values = np.asarray(times, dtype=float)
    if values.size == 0:
        raise EventLogError("Hourly profile of an empty log")
    hours = np.floor((values % period) * HOURS_PER_DAY / period).astype(int)
    counts = np.bincount(np.clip(hours, 0, HOURS_PER_DAY - 1), minlength=HOURS_PER_DAY)
    return HourlyProfile.from_counts(counts)


def hourly_profile(log: EventLog, day: str = 'all') -> HourlyProfile:
    """
    Share of events per hour of day.

    Args:
        log: Accident log; numeric logs are read as hours
        day: 'all', 'weekday', 'saturday' or 'sunday'

    Raises:
        EventLogError: No events left after filtering
        ConfigError: Unknown day filter, or a weekday filter on a numeric log
    """
    if day not in DAY_FILTERS:
        raise ConfigError(f"Unknown day filter: {day} (choose from {', '.join(DAY_FILTERS)})")

    if not log.wall_clock:
        if day != 'all':
            raise ConfigError("Day filters need wall-clock timestamps")
        return hourly_shares_from_times(log.times)

    weekday = np.asarray(log.datetimes.dayofweek)
    keep = {
        'all': np.ones(len(log), dtype=bool),
        'weekday': weekday < 5,
        'saturday': weekday == 5,
        'sunday': weekday == 6,
    }[day]
    counts = np.bincount(np.asarray(log.datetimes.hour)[keep], minlength=HOURS_PER_DAY)
    logger.info(f"Hourly profile over {int(np.sum(keep))} events (day filter: {day})")
    return HourlyProfile.from_counts(counts)


def load_hourly_counts(path: Union[str, Path]) -> np.ndarray:
    """
    Load 24 hourly vehicle counts.

    The CSV has a 'count' column and optionally an 'hour' column (0-23).

    Raises:
        EventLogError: Wrong number of hours, missing or negative counts
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise EventLogError(f"Cannot read vehicle counts {path}: {e}") from e
    if 'count' not in frame.columns:
        raise EventLogError(f"{path}: header needs a 'count' column")
    if 'hour' in frame.columns:
        frame = frame.sort_values('hour')
        if sorted(frame['hour'].tolist()) != list(range(HOURS_PER_DAY)):
            raise EventLogError(f"{path}: 'hour' must list 0..23 exactly once")
    if len(frame) != HOURS_PER_DAY:
        raise EventLogError(f"{path}: expected {HOURS_PER_DAY} rows, got {len(frame)}")

    counts = pd.to_numeric(frame['count'], errors='coerce')
    bad = (counts.isna() | (counts < 0)).to_numpy()
    if bad.any():
        raise EventLogError(f"{path}: counts must be numbers >= 0", frame.index.to_numpy()[bad] + FIRST_DATA_LINE)
    return counts.to_numpy(dtype=float)


def build_inflow_profile(counts: Sequence[float], scale: float = 1.0,
                         cutoff: Optional[float] = None) -> PiecewiseConstantInflow:
    """
    Piecewise-constant inflow from hourly counts, one time unit per hour.

    Args:
        counts: 24 hourly vehicle counts
        scale: Factor converting vehicles per hour into network flux units
        cutoff: Optional time after which the inflow stops

    Raises:
        ConfigError: Negative counts or wrong length
    """
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (HOURS_PER_DAY,):
        raise ConfigError(f"Expected {HOURS_PER_DAY} hourly counts, got {counts.size}")
    if np.any(counts < 0):
        raise ConfigError("Hourly counts must be >= 0")
    return PiecewiseConstantInflow(counts * scale, period=HOURS_PER_DAY, cutoff=cutoff)
