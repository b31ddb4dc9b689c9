"""
Rerouting for RoadHawkes
Flexible drivers switch a junction split while a watched road is congested or
blocked and the alternative roads are clear.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Tuple

from roadhawkes.core.capacity import Accident
from roadhawkes.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReroutePolicy:
    """
    Detour recommendation at one 1-2 junction.

    Attributes:
        junction: Junction whose split is switched
        watched_road: Road whose congestion triggers the detour
        alt_roads: Roads of the detour, which must be clear
        base_alpha: Split without recommendation, None keeps the network's value
        flex_alpha: Split while the detour is recommended
        cm_threshold: Congestion measure above which a road counts as congested
        serious_threshold: Capacity reduction above which an accident is serious
        v_ref: Reference speed of the congestion measure
    """
    junction: str
    watched_road: str
    alt_roads: Tuple[str, ...]
    flex_alpha: float
    base_alpha: Optional[float] = None
    cm_threshold: float = 0.25
    serious_threshold: float = 0.8
    v_ref: float = 0.5

    def __post_init__(self):
        for name in ('cm_threshold', 'serious_threshold'):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"policy.{name} must lie in (0, 1), got {getattr(self, name)}")
        for name in ('flex_alpha', 'base_alpha'):
            value = getattr(self, name)
            if value is not None and not 0 <= value <= 1:
                raise ConfigError(f"policy.{name} must lie in [0, 1], got {value}")
        if self.v_ref <= 0:
            raise ConfigError(f"policy.v_ref must be positive, got {self.v_ref}")

    @property
    def watched(self) -> Tuple[str, ...]:
        return (self.watched_road,) + tuple(self.alt_roads)


def has_serious_accident(accidents: Iterable[Accident], road_id: str, threshold: float) -> bool:
    return any(a.road == road_id and a.reduction > threshold for a in accidents)


def apply_reroute(
    policy: ReroutePolicy,
    cm_values: Mapping[str, float],
    active_accidents: Iterable[Accident],
    current_alpha: float
) -> float:
    """
    Split to use at the policy junction for this step.

    The detour applies when the watched road is congested or has a serious
    accident, and no alternative road is congested or has one.

    Args:
        policy: Rerouting policy
        cm_values: road id -> congestion measure at step start
        active_accidents: Accidents active at step start
        current_alpha: Network split, used when policy.base_alpha is unset

    Returns:
        flex_alpha or the base split
    """
    active = list(active_accidents)
    base = current_alpha if policy.base_alpha is None else policy.base_alpha

    trigger = (cm_values[policy.watched_road] > policy.cm_threshold
               or has_serious_accident(active, policy.watched_road, policy.serious_threshold))
    if not trigger:
        return base

    clear = (max(cm_values[r] for r in policy.alt_roads) <= policy.cm_threshold
             and not any(has_serious_accident(active, r, policy.serious_threshold) for r in policy.alt_roads))
    return policy.flex_alpha if clear else base
