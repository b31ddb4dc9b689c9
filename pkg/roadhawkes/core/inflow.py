"""
Inflow profiles for RoadHawkes
Boundary inflow rates f_in(t) feeding the source queues.
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence

import numpy as np

from roadhawkes.errors import ConfigError

logger = logging.getLogger(__name__)


class InflowProfile(ABC):
    """Nonnegative inflow rate, switched off after an optional cutoff time."""

    cutoff: Optional[float] = None

    def value(self, t: float) -> float:
        if self.cutoff is not None and t > self.cutoff:
            return 0.0
        return max(self._rate(t), 0.0)

    def __call__(self, t: float) -> float:
        return self.value(t)

    def integral(self, t0: float, t1: float) -> float:
        """Integral of value over [t0, t1]."""
        if t1 <= t0:
            return 0.0
        if self.cutoff is not None:
            t1 = min(t1, self.cutoff)
            if t1 <= t0:
                return 0.0
        return self._integral(t0, t1)

    @abstractmethod
    def _rate(self, t: float) -> float:
        ...

    @abstractmethod
    def _integral(self, t0: float, t1: float) -> float:
        ...


class ConstantInflow(InflowProfile):
    """Constant rate."""

    def __init__(self, rate: float, cutoff: Optional[float] = None):
        if rate < 0:
            raise ConfigError(f"constant inflow rate must be >= 0, got {rate}")
        self.rate = float(rate)
        self.cutoff = cutoff

    def _rate(self, t: float) -> float:
        return self.rate

    def _integral(self, t0: float, t1: float) -> float:
        return self.rate * (t1 - t0)

    def __repr__(self):
        return f"ConstantInflow(rate={self.rate}, cutoff={self.cutoff})"


class SinusoidInflow(InflowProfile):
    """
    base + amplitude * sin(frequency * t + phase), switched off after cutoff.

    With amplitude <= base the rate never goes negative and the integral is exact.
    """

    def __init__(self, base: float, amplitude: float, frequency: float = 1.0,
                 phase: float = 0.0, cutoff: Optional[float] = None):
        if base < 0 or abs(amplitude) > base:
            raise ConfigError(f"sinusoid inflow needs 0 <= |amplitude| <= base, got {base}, {amplitude}")
        if frequency <= 0:
            raise ConfigError(f"sinusoid inflow frequency must be positive, got {frequency}")
        self.base = float(base)
        self.amplitude = float(amplitude)
        self.frequency = float(frequency)
        self.phase = float(phase)
        self.cutoff = cutoff

    def _rate(self, t: float) -> float:
        return self.base + self.amplitude * math.sin(self.frequency * t + self.phase)

    def _integral(self, t0: float, t1: float) -> float:
        w, ph = self.frequency, self.phase
        return self.base * (t1 - t0) - self.amplitude / w * (math.cos(w * t1 + ph) - math.cos(w * t0 + ph))

    def __repr__(self):
        return (f"SinusoidInflow(base={self.base}, amplitude={self.amplitude}, "
                f"frequency={self.frequency}, cutoff={self.cutoff})")


class PiecewiseConstantInflow(InflowProfile):
    """
    Rates held constant on equal-width slots, repeated with the given period.

    Hourly vehicle counts map to 24 slots of width 1 (one time unit per hour).
    """

    def __init__(self, values: Sequence[float], period: float = 24.0, cutoff: Optional[float] = None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ConfigError("piecewise inflow needs a nonempty list of values")
        if np.any(values < 0):
            raise ConfigError("piecewise inflow values must be >= 0")
        if period <= 0:
            raise ConfigError(f"piecewise inflow period must be positive, got {period}")
        self.values = values
        self.period = float(period)
        self.width = self.period / values.size
        self.cutoff = cutoff
        self._cumulative = np.concatenate([[0.0], np.cumsum(values * self.width)])

    def _rate(self, t: float) -> float:
        slot = int(math.floor((t % self.period) / self.width))
        return float(self.values[min(slot, self.values.size - 1)])

    def _primitive(self, t: float) -> float:
        cycles, rest = divmod(t, self.period)
        slot = min(int(rest // self.width), self.values.size - 1)
        partial = self._cumulative[slot] + self.values[slot] * (rest - slot * self.width)
        return cycles * self._cumulative[-1] + partial

    def _integral(self, t0: float, t1: float) -> float:
        return float(self._primitive(t1) - self._primitive(t0))

    def __repr__(self):
        return f"PiecewiseConstantInflow(slots={self.values.size}, period={self.period}, cutoff={self.cutoff})"


def build_inflow(block: Dict[str, Any], horizon: float) -> InflowProfile:
    """
    Build an inflow profile from its config block.

    Args:
        block: e.g. {'type': 'sinusoid', 'base': 0.13, 'amplitude': 0.052, 'cutoff_before_end': 75}
        horizon: Simulation horizon, used by cutoff_before_end

    Returns:
        InflowProfile
    """
    kind = block.get('type')
    cutoff = block.get('cutoff')
    if 'cutoff_before_end' in block:
        cutoff = horizon - float(block['cutoff_before_end'])
    cutoff = None if cutoff is None else float(cutoff)

    try:
        if kind == 'sinusoid':
            return SinusoidInflow(block['base'], block.get('amplitude', 0.0), block.get('frequency', 1.0),
                                  block.get('phase', 0.0), cutoff)
        if kind == 'constant':
            return ConstantInflow(block['rate'], cutoff)
        if kind == 'hourly':
            scale = float(block.get('scale', 1.0))
            return PiecewiseConstantInflow(np.asarray(block['counts'], dtype=float) * scale,
                                           block.get('period', 24.0), cutoff)
    except KeyError as e:
        raise ConfigError(f"inflow profile '{kind}' is missing key {e}") from e
    raise ConfigError(f"Unknown inflow profile type: {kind}")
