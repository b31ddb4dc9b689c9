"""
Risk measures for RoadHawkes
Total travel time, congestion measure, time of an empty system and accident counts.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from roadhawkes.core.capacity import Accident
from roadhawkes.core.fluxes import flux
from roadhawkes.errors import HistoryMismatchError

logger = logging.getLogger(__name__)

# Reference speed of the congestion measure
V_REF = 0.5

# Vehicle count below which the system counts as empty
EMPTY_THRESHOLD = 1e-6


def total_travel_time(density_history, queue_history, dt: float, dx: float) -> float:
    """
    Rectangle-rule total travel time dt * sum_l (dx * sum_cells rho_l + q_l).

    Args:
        density_history: One row of cell densities (all roads) per step; a 1-D
            array is read as per-step sums of densities
        queue_history: Queue length per step
        dt: Time step
        dx: Cell width

    Returns:
        Total travel time

    Raises:
        HistoryMismatchError: Histories of different length
    """
    queues = np.asarray(queue_history, dtype=float)
    if len(density_history) != len(queues):
        raise HistoryMismatchError(
            f"density history has {len(density_history)} steps, queue history {len(queues)}"
        )
    if len(queues) == 0:
        return 0.0
    road_sums = np.asarray(density_history, dtype=float).reshape(len(queues), -1).sum(axis=1)
    return float(dt * np.sum(dx * road_sums + queues))


def congestion_measure(rho: np.ndarray, multiplier: np.ndarray, c_road: np.ndarray,
                       dx: float, v_ref: float = V_REF) -> float:
    """
    CM = max(int (rho - F / v_ref) dx, 0) on one road.

    Args:
        rho: Cell densities
        multiplier: Accident capacity multipliers per cell
        c_road: Road capacity per cell
        dx: Cell width
        v_ref: Reference speed
    """
    integrand = rho - flux(rho, c_road * multiplier) / v_ref
    return max(float(dx * np.sum(integrand)), 0.0)


def time_of_empty_system(
    times: Sequence[float],
    totals: Sequence[float],
    cutoff: float = 0.0,
    threshold: float = EMPTY_THRESHOLD
) -> Optional[float]:
    """
    First recorded time at or after the inflow cutoff with network + queue below threshold.

    Args:
        times: Recording times
        totals: Vehicles in network and queue at each time
        cutoff: Inflow cutoff time
        threshold: Emptiness threshold

    Returns:
        Time, or None if the system never empties within the record
    """
    if len(times) != len(totals):
        raise HistoryMismatchError(f"{len(times)} times for {len(totals)} totals")
    times = np.asarray(times, dtype=float)
    totals = np.asarray(totals, dtype=float)
    hits = np.flatnonzero((times >= cutoff) & (totals < threshold))
    return float(times[hits[0]]) if hits.size else None


def empty_system_probability(toes_values: Iterable[Optional[float]], t: float) -> float:
    """Monte Carlo estimate of P(ToES <= t); runs that never emptied count as misses."""
    values = list(toes_values)
    if not values:
        return 0.0
    return sum(1 for v in values if v is not None and v <= t) / len(values)


@dataclass
class AccidentCounts:
    """Accidents per road and per junction."""
    per_road: Dict[str, int] = field(default_factory=dict)
    per_junction: Dict[str, int] = field(default_factory=dict)

    @property
    def road_total(self) -> int:
        return sum(self.per_road.values())

    @property
    def junction_total(self) -> int:
        return sum(self.per_junction.values())

    @property
    def total(self) -> int:
        return self.road_total + self.junction_total


def count_accidents(
    accidents: Iterable[Accident],
    road_ids: Iterable[str] = (),
    junction_ids: Iterable[str] = ()
) -> AccidentCounts:
    """
    Count accidents by location; junction accidents are counted under their junction.

    Args:
        accidents: Accident log
        road_ids: Roads to report even with zero accidents
        junction_ids: Junctions to report even with zero accidents
    """
    counts = AccidentCounts({r: 0 for r in road_ids}, {j: 0 for j in junction_ids})
    for accident in accidents:
        if accident.on_junction:
            counts.per_junction[accident.junction] = counts.per_junction.get(accident.junction, 0) + 1
        else:
            counts.per_road[accident.road] = counts.per_road.get(accident.road, 0) + 1
    return counts


@dataclass
class RiskReport:
    """
    Risk measures of one run.

    Attributes:
        ttt: Total travel time
        counts: Accident counts
        toes: Time of empty system, None if not emptied within the horizon
        cm_traces: road id -> congestion measure per step, when recorded
    """
    ttt: float
    counts: AccidentCounts
    toes: Optional[float] = None
    cm_traces: Dict[str, List[float]] = field(default_factory=dict)
