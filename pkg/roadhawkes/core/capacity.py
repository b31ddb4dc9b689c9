"""
Accident capacity field for RoadHawkes
Accident records and the per-cell capacity multipliers they induce, including
accidents that reach over junctions onto neighbouring roads.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from roadhawkes.core.network import GRID_TOL, Network

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


class AccidentOrigin(str, Enum):
    """Which term of the accident measure produced an accident."""
    BACKGROUND = 'background'
    SELF_EXCITATION = 'self_excitation'
    JUNCTION = 'junction'


@dataclass(frozen=True)
class Accident:
    """
    A single accident.

    Exactly one of (road, position) or junction is set.

    Attributes:
        index: Position in the run's accident log
        size: Length s of the affected stretch
        reduction: Capacity reduction c in [0, c_max]
        start: Start time
        duration: Duration d, the accident is active on [start, start + d)
        origin: Origin tag
        road: Road id for road accidents
        position: Position on the road, strictly inside its interval
        junction: Junction id for junction accidents
        parent: Index of the exciting accident for self-excitation events
    """
    index: int
    size: float
    reduction: float
    start: float
    duration: float
    origin: AccidentOrigin
    road: Optional[str] = None
    position: Optional[float] = None
    junction: Optional[str] = None
    parent: Optional[int] = None

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def on_junction(self) -> bool:
        return self.junction is not None

    def is_active(self, t: float) -> bool:
        return self.start <= t < self.end

    def to_dict(self) -> Dict:
        return {
            'index': self.index,
            'origin': self.origin.value,
            'road': self.road,
            'junction': self.junction,
            'position': self.position,
            'size': self.size,
            'reduction': self.reduction,
            'start': self.start,
            'duration': self.duration,
            'parent': self.parent,
        }


@dataclass
class CapacityField:
    """
    Per-road, per-cell capacity multipliers in (0, 1].

    Attributes:
        multipliers: road id -> multiplier per cell
    """
    multipliers: Dict[str, np.ndarray]

    @classmethod
    def unit(cls, network: Network) -> 'CapacityField':
        return cls({road_id: np.ones(road.cell_count) for road_id, road in network.roads.items()})

    def effective(self, network: Network, road_id: str) -> np.ndarray:
        """c_road * c_a per cell of one road."""
        return network.roads[road_id].capacity_cells * self.multipliers[road_id]

    def effective_all(self, network: Network) -> Dict[str, np.ndarray]:
        return {road_id: self.effective(network, road_id) for road_id in network.roads}

    def min_multiplier(self) -> float:
        return min(float(m.min()) for m in self.multipliers.values())


def _merge(intervals: Iterable[Interval]) -> List[Interval]:
    merged: List[Interval] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1] + GRID_TOL:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


class _Coverage:
    """Collects covered intervals per road for one accident."""

    def __init__(self, network: Network):
        self.network = network
        self.pieces: Dict[str, List[Interval]] = {}

    def add(self, road_id: str, lo: float, hi: float) -> None:
        road = self.network.roads[road_id]
        lo, hi = max(lo, road.a), min(hi, road.b)
        if hi <= lo:
            return
        # Endpoints within one cell of a junction snap onto the junction
        if self.network.start_junction(road_id) is not None and lo - road.a < road.dx:
            lo = road.a
        if self.network.end_junction(road_id) is not None and road.b - hi < road.dx:
            hi = road.b
        self.pieces.setdefault(road_id, []).append((lo, hi))

    def spill_upstream(self, road_id: str, reach: float) -> None:
        """Cover `reach` length upstream of the start of road_id, across junctions."""
        junction = self.network.start_junction(road_id)
        if junction is None or reach <= GRID_TOL:
            return
        for upstream in junction.in_roads:
            road = self.network.roads[upstream]
            self.add(upstream, road.b - reach, road.b)
            if reach > road.length:
                self.spill_upstream(upstream, reach - road.length)

    def spill_downstream(self, road_id: str, reach: float) -> None:
        """Cover `reach` length downstream of the end of road_id, across junctions."""
        junction = self.network.end_junction(road_id)
        if junction is None or reach <= GRID_TOL:
            return
        for downstream in junction.out_roads:
            road = self.network.roads[downstream]
            self.add(downstream, road.a, road.a + reach)
            if reach > road.length:
                self.spill_downstream(downstream, reach - road.length)

    def merged(self) -> Dict[str, List[Interval]]:
        return {road_id: _merge(pieces) for road_id, pieces in self.pieces.items()}


def accident_coverage(network: Network, accident: Accident) -> Dict[str, List[Interval]]:
    """
    Stretches of road covered by one accident.

    Road accidents cover [p - s/2, p + s/2], continued onto in- and out-roads while
    size is left. Junction accidents cover the last s/2 of every in-road and the
    first s/2 of every out-road.

    Returns:
        road id -> disjoint covered intervals
    """
    coverage = _Coverage(network)
    half = accident.size / 2.0

    if accident.on_junction:
        junction = network.junctions[accident.junction]
        for in_road in junction.in_roads:
            road = network.roads[in_road]
            coverage.add(in_road, road.b - half, road.b)
            if half > road.length:
                coverage.spill_upstream(in_road, half - road.length)
        for out_road in junction.out_roads:
            road = network.roads[out_road]
            coverage.add(out_road, road.a, road.a + half)
            if half > road.length:
                coverage.spill_downstream(out_road, half - road.length)
        return coverage.merged()

    road = network.roads[accident.road]
    lo, hi = accident.position - half, accident.position + half
    coverage.add(road.id, lo, hi)
    if lo < road.a:
        coverage.spill_upstream(road.id, road.a - lo)
    if hi > road.b:
        coverage.spill_downstream(road.id, hi - road.b)
    return coverage.merged()


def effective_capacity(
    network: Network,
    accidents: Iterable[Accident],
    t: Optional[float] = None
) -> CapacityField:
    """
    Capacity multipliers for a set of accidents.

    Args:
        network: Road network
        accidents: Accidents to apply
        t: If given, accidents not active at t are skipped

    Returns:
        CapacityField with the product of (1 - c) over every covering accident
    """
    field = CapacityField.unit(network)
    for accident in accidents:
        if t is not None and not accident.is_active(t):
            continue
        factor = 1.0 - accident.reduction
        for road_id, intervals in accident_coverage(network, accident).items():
            centers = network.roads[road_id].cell_centers
            covered = np.zeros(centers.shape, dtype=bool)
            for lo, hi in intervals:
                covered |= (centers >= lo) & (centers <= hi)
            field.multipliers[road_id][covered] *= factor
    return field
