"""
Flux primitives for RoadHawkes
Fundamental diagram f(rho) = rho (1 - rho), demand/supply, the Godunov interface
flux and the 1-1, 1-2 and 2-1 junction solvers.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from roadhawkes.core.network import Junction, Network

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Maximizing density of f
RHO_CRITICAL = 0.5


def flux(rho: ArrayLike, cap: ArrayLike = 1.0) -> ArrayLike:
    """Capacity-scaled flux cap * rho * (1 - rho)."""
    return cap * rho * (1.0 - rho)


def demand(rho: ArrayLike, cap: ArrayLike = 1.0) -> ArrayLike:
    """Largest flux a cell can send: cap * f(min(rho*, rho))."""
    return flux(np.minimum(rho, RHO_CRITICAL), cap)


def supply(rho: ArrayLike, cap: ArrayLike = 1.0) -> ArrayLike:
    """Largest flux a cell can receive: cap * f(max(rho*, rho))."""
    return flux(np.maximum(rho, RHO_CRITICAL), cap)


def numerical_flux(rho_right: ArrayLike, rho_left: ArrayLike,
                   cap_right: ArrayLike = 1.0, cap_left: ArrayLike = 1.0) -> ArrayLike:
    """Godunov flux across the interface between a left and a right cell."""
    return np.minimum(supply(rho_right, cap_right), demand(rho_left, cap_left))


def tau_density(rho: ArrayLike) -> ArrayLike:
    """The other density carrying the same flux, 1 - rho."""
    return 1.0 - rho


def junction_flux_11(demand_in: float, supply_out: float) -> float:
    return min(demand_in, supply_out)


def junction_flux_12(demand_in: float, supplies_out: Tuple[float, float],
                     distribution: Tuple[float, float]) -> Tuple[float, Tuple[float, float]]:
    """
    Diverge: maximize the in-flux subject to A_1j * F <= S_j.

    Args:
        demand_in: Demand of the in-road
        supplies_out: Supplies of the two out-roads
        distribution: Row (A_11, A_12)

    Returns:
        (in-flux, (out-flux 1, out-flux 2)); out-fluxes sum to the in-flux exactly
    """
    inflow = demand_in
    for share, available in zip(distribution, supplies_out):
        if share > 0:
            inflow = min(inflow, available / share)
    first = distribution[0] * inflow
    return inflow, (first, inflow - first)


def junction_flux_21(demands_in: Tuple[float, float], supply_out: float,
                     rightway: float) -> Tuple[Tuple[float, float], float]:
    """
    Merge with rightway parameter q.

    Args:
        demands_in: Demands of the two in-roads
        supply_out: Supply of the out-road
        rightway: Priority share q of the first in-road

    Returns:
        ((in-flux 1, in-flux 2), out-flux)
    """
    d1, d2 = demands_in
    s = supply_out
    if d1 + d2 <= s:
        f1, f2 = d1, d2
    elif d1 >= rightway * s and d2 >= (1.0 - rightway) * s:
        f1 = rightway * s
        f2 = s - f1
    elif d1 >= rightway * s:
        f1, f2 = s - d2, d2
    else:
        f1, f2 = d1, s - d1
    return (f1, f2), f1 + f2


@dataclass
class JunctionFlux:
    """Fluxes through one junction in one step."""
    inflows: Dict[str, float]
    outflows: Dict[str, float]

    @property
    def total(self) -> float:
        return sum(self.inflows.values())


def solve_junction(
    junction: Junction,
    demands: Mapping[str, float],
    supplies: Mapping[str, float],
    distribution: Optional[float] = None,
    rightway: Optional[float] = None
) -> JunctionFlux:
    """
    Junction fluxes from in-road demands and out-road supplies.

    Args:
        junction: Junction
        demands: in-road id -> demand of its last cell
        supplies: out-road id -> supply of its first cell
        distribution: Overrides the junction's split towards its first out-road
        rightway: Overrides the junction's rightway parameter
    """
    ins, outs = junction.in_roads, junction.out_roads
    if junction.kind == '1-1':
        value = junction_flux_11(demands[ins[0]], supplies[outs[0]])
        return JunctionFlux({ins[0]: value}, {outs[0]: value})

    if junction.kind == '1-2':
        share = junction.distribution if distribution is None else distribution
        inflow, (out1, out2) = junction_flux_12(
            demands[ins[0]], (supplies[outs[0]], supplies[outs[1]]), (share, 1.0 - share)
        )
        return JunctionFlux({ins[0]: inflow}, {outs[0]: out1, outs[1]: out2})

    q = junction.rightway if rightway is None else rightway
    (in1, in2), outflow = junction_flux_21((demands[ins[0]], demands[ins[1]]), supplies[outs[0]], q)
    return JunctionFlux({ins[0]: in1, ins[1]: in2}, {outs[0]: outflow})


def junction_fluxes(
    network: Network,
    densities: Mapping[str, np.ndarray],
    capacities: Mapping[str, np.ndarray],
    distributions: Optional[Mapping[str, float]] = None,
    rightways: Optional[Mapping[str, float]] = None
) -> Dict[str, JunctionFlux]:
    """
    Solve every junction once for the current state.

    Args:
        network: Road network
        densities: road id -> cell densities
        capacities: road id -> effective cell capacities
        distributions: Per-junction split overrides (e.g. rerouting)
        rightways: Per-junction rightway overrides

    Returns:
        junction id -> JunctionFlux
    """
    distributions = distributions or {}
    rightways = rightways or {}
    result: Dict[str, JunctionFlux] = {}
    for junction_id, junction in network.junctions.items():
        demands = {r: float(demand(densities[r][-1], capacities[r][-1])) for r in junction.in_roads}
        supplies = {r: float(supply(densities[r][0], capacities[r][0])) for r in junction.out_roads}
        result[junction_id] = solve_junction(
            junction, demands, supplies,
            distribution=distributions.get(junction_id),
            rightway=rightways.get(junction_id),
        )
    return result
