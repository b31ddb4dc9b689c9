"""
Accident log analysis for RoadHawkes
Loading accident logs, intermediate accident times and exponential fits.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats

from roadhawkes.errors import EventLogError

logger = logging.getLogger(__name__)

# First data row of a CSV file with header
FIRST_DATA_LINE = 2

TIME_UNITS = {'minutes': 60.0, 'hours': 1.0}


@dataclass
class EventLog:
    """
    Accident events sorted by time.

    Attributes:
        times: Event times; hours since midnight of the first event's day for
            wall-clock logs, the log's own unit otherwise
        datetimes: Wall-clock timestamps, None for numeric logs
        attributes: Optional per-event columns (road, severity, duration)
        runs: Run label of every event for ensemble logs, None for a single history
    """
    times: np.ndarray
    datetimes: Optional[pd.DatetimeIndex] = None
    attributes: Optional[pd.DataFrame] = None
    runs: Optional[np.ndarray] = None

    @classmethod
    def from_times(cls, times: Sequence[float]) -> 'EventLog':
        values = np.sort(np.asarray(times, dtype=float))
        if np.any(values < 0):
            raise EventLogError("Event times must be nonnegative")
        return cls(values)

    @property
    def wall_clock(self) -> bool:
        return self.datetimes is not None

    @property
    def run_count(self) -> int:
        return 1 if self.runs is None else len(np.unique(self.runs))

    def __len__(self) -> int:
        return len(self.times)

    def times_in(self, unit: Optional[str] = None) -> np.ndarray:
        """
        Event times in 'minutes', 'hours' or 'raw'.

        None selects minutes for wall-clock logs and raw otherwise.
        """
        if unit is None:
            unit = 'minutes' if self.wall_clock else 'raw'
        if unit == 'raw':
            return self.times
        if unit not in TIME_UNITS:
            raise EventLogError(f"Unknown time unit: {unit}")
        if not self.wall_clock:
            raise EventLogError(f"Numeric log has no wall-clock time, use time unit 'raw' instead of '{unit}'")
        return self.times * TIME_UNITS[unit]


def load_event_log(path: Union[str, Path]) -> EventLog:
    """
    Load an accident log CSV.

    Required column: 'timestamp' (ISO-8601) or 'start' (numeric, >= 0).
    Optional columns: 'road', 'severity' in [0, 1], 'duration' >= 0, and 'run'
    (integer label of the Monte Carlo run in ensemble logs).

    Raises:
        EventLogError: Missing columns or malformed rows (with line numbers)
    """
    try:
        frame = pd.read_csv(path, dtype={'road': str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise EventLogError(f"Cannot read accident log {path}: {e}") from e

    lines = frame.index.to_numpy() + FIRST_DATA_LINE

    datetimes = None
    if 'timestamp' in frame.columns:
        parsed = pd.to_datetime(frame['timestamp'], errors='coerce', format='ISO8601')
        bad = parsed.isna().to_numpy()
        if bad.any():
            raise EventLogError(f"{path}: unparseable timestamps", lines[bad])
        order = np.argsort(parsed.to_numpy(), kind='stable')
        datetimes = pd.DatetimeIndex(parsed.to_numpy()[order])
        origin = datetimes[0].normalize()
        times = ((datetimes - origin) / pd.Timedelta(hours=1)).to_numpy(dtype=float)
    elif 'start' in frame.columns:
        parsed = pd.to_numeric(frame['start'], errors='coerce')
        bad = (parsed.isna() | (parsed < 0)).to_numpy()
        if bad.any():
            raise EventLogError(f"{path}: start times must be numbers >= 0", lines[bad])
        order = np.argsort(parsed.to_numpy(), kind='stable')
        times = parsed.to_numpy(dtype=float)[order]
    else:
        raise EventLogError(f"{path}: header needs a 'timestamp' or 'start' column")

    attributes = frame[[c for c in ('road', 'severity', 'duration') if c in frame.columns]]
    if 'severity' in attributes:
        severity = pd.to_numeric(attributes['severity'], errors='coerce')
        bad = (severity.notna() & ((severity < 0) | (severity > 1))).to_numpy()
        if bad.any():
            raise EventLogError(f"{path}: severity must lie in [0, 1]", lines[bad])
    if 'duration' in attributes:
        duration = pd.to_numeric(attributes['duration'], errors='coerce')
        bad = (duration.notna() & (duration < 0)).to_numpy()
        if bad.any():
            raise EventLogError(f"{path}: duration must be >= 0", lines[bad])
    attributes = attributes.iloc[order].reset_index(drop=True)

    runs = None
    if 'run' in frame.columns:
        labels = pd.to_numeric(frame['run'], errors='coerce')
        bad = (labels.isna() | (labels != labels.round())).to_numpy()
        if bad.any():
            raise EventLogError(f"{path}: run labels must be integers", lines[bad])
        runs = labels.to_numpy(dtype=int)[order]

    logger.info(f"Loaded {len(times)} events from {path}")
    return EventLog(times, datetimes, attributes if len(attributes.columns) else None, runs)


def intermediate_times(log: Union[EventLog, Sequence[float]], unit: Optional[str] = None) -> np.ndarray:
    """
    Gaps between consecutive events.

    Ensemble logs are split by run; gaps are taken within each run and
    concatenated in run order.

    Raises:
        EventLogError: No run with at least two events
    """
    if isinstance(log, EventLog) and log.runs is not None:
        times = log.times_in(unit)
        gaps = np.concatenate([np.empty(0)] + [np.diff(times[log.runs == run]) for run in np.unique(log.runs)])
        if gaps.size == 0:
            raise EventLogError(f"Need a run with at least two events for intermediate times, "
                                f"got {len(times)} events in {log.run_count} runs")
        return gaps

    times = log.times_in(unit) if isinstance(log, EventLog) else np.sort(np.asarray(log, dtype=float))
    if len(times) < 2:
        raise EventLogError(f"Need at least two events for intermediate times, got {len(times)}")
    return np.diff(times)


def fit_exponential(samples: Sequence[float]) -> float:
    """
    Maximum-likelihood exponential rate, 1 / sample mean.

    Raises:
        EventLogError: Empty sample or nonpositive values
    """
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise EventLogError("Cannot fit an exponential to an empty sample")
    if np.any(values <= 0):
        raise EventLogError(f"Exponential fit needs positive samples, got {int(np.sum(values <= 0))} nonpositive")
    return float(1.0 / values.mean())


@dataclass
class GapHistogram:
    """Histogram of intermediate times with bin edges."""
    edges: np.ndarray
    counts: np.ndarray

    @property
    def shares(self) -> np.ndarray:
        total = self.counts.sum()
        return self.counts / total if total else np.zeros_like(self.counts, dtype=float)


def gap_histogram(gaps: Sequence[float], bin_width: float) -> GapHistogram:
    """Histogram with bins [0, w), [w, 2w), ... covering the largest gap."""
    if bin_width <= 0:
        raise EventLogError(f"bin width must be positive, got {bin_width}")
    values = np.asarray(gaps, dtype=float)
    n_bins = max(int(np.ceil(values.max() / bin_width)), 1) if values.size else 1
    edges = bin_width * np.arange(n_bins + 1)
    if values.size and values.max() >= edges[-1]:
        edges = np.append(edges, edges[-1] + bin_width)
    counts, _ = np.histogram(values, bins=edges)
    return GapHistogram(edges, counts)


def exponential_bin_shares(rate: float, edges: Sequence[float]) -> np.ndarray:
    """Probability of each bin under Exp(rate)."""
    edges = np.asarray(edges, dtype=float)
    cdf = 1.0 - np.exp(-rate * edges)
    return np.diff(cdf)


@dataclass
class ExponentialityTest:
    """Kolmogorov-Smirnov test of gaps against the fitted exponential."""
    rate: float
    statistic: float
    p_value: float
    critical_value: float
    level: float
    n: int

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_value

    def to_dict(self) -> dict:
        return {
            'rate': self.rate,
            'statistic': self.statistic,
            'p_value': self.p_value,
            'critical_value': self.critical_value,
            'level': self.level,
            'n': self.n,
            'verdict': 'exponential' if self.passed else 'not exponential',
        }


def exponentiality_test(gaps: Sequence[float], level: float = 0.01) -> ExponentialityTest:
    """
    KS test against Exp(fitted rate), judged with the plain KS critical value.

    Estimating the rate from the same sample makes the plain critical value conservative.
    """
    values = np.asarray(gaps, dtype=float)
    rate = fit_exponential(values)
    result = stats.kstest(values, 'expon', args=(0.0, 1.0 / rate))
    critical = float(stats.kstwo.ppf(1.0 - level, values.size))
    return ExponentialityTest(rate, float(result.statistic), float(result.pvalue), critical, level, int(values.size))
