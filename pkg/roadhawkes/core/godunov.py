"""
Godunov solver for RoadHawkes
Finite-volume update of all road densities with junction coupling, source
queues and free sink outflow.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from roadhawkes.core.capacity import Accident, CapacityField
from roadhawkes.core.fluxes import JunctionFlux, demand, junction_fluxes, numerical_flux, supply
from roadhawkes.core.hawkes import HawkesState
from roadhawkes.core.network import Network
from roadhawkes.errors import CFLViolationError, ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """
    Discretization of the conservation law.

    Attributes:
        dx: Cell width
        dt: Time step
        horizon: Final time T
    """
    dx: float = 0.01
    dt: float = 0.01
    horizon: float = 500.0

    def __post_init__(self):
        for name in ('dx', 'dt', 'horizon'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"solver.{name} must be positive, got {getattr(self, name)}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class SimulationState:
    """
    Full state of one run.

    Attributes:
        densities: road id -> cell densities in [0, 1]
        queues: source road id -> queued vehicles
        t: Clock
        accidents: Every accident so far, in order of occurrence
        active: Accidents active at t
        hawkes: Hawkes state
        distributions: Current split of each 1-2 junction towards its first out-road
        rightways: Current rightway of each 2-1 junction
        boundary_inflow: Profile inflow entering the queues during the last step (rate)
        boundary_outflow: Flux leaving through the sinks during the last step (rate)
    """
    densities: Dict[str, np.ndarray]
    queues: Dict[str, float]
    t: float = 0.0
    accidents: List[Accident] = field(default_factory=list)
    active: List[Accident] = field(default_factory=list)
    hawkes: HawkesState = field(default_factory=HawkesState)
    distributions: Dict[str, float] = field(default_factory=dict)
    rightways: Dict[str, float] = field(default_factory=dict)
    boundary_inflow: float = 0.0
    boundary_outflow: float = 0.0

    @classmethod
    def initial(cls, network: Network) -> 'SimulationState':
        return cls(
            densities=network.initial_densities(),
            queues={road_id: 0.0 for road_id in network.source_roads},
            distributions={j.id: j.distribution for j in network.junctions.values() if j.kind == '1-2'},
            rightways={j.id: j.rightway for j in network.junctions.values() if j.kind == '2-1'},
        )

    def network_mass(self, network: Network) -> float:
        """Vehicles on the roads, sum_e dx * sum_cells rho."""
        return sum(network.roads[r].dx * float(rho.sum()) for r, rho in self.densities.items())

    @property
    def queue_total(self) -> float:
        return sum(self.queues.values())

    def total_mass(self, network: Network) -> float:
        return self.network_mass(network) + self.queue_total


def check_cfl(dt: float, dx: float, capacities: Mapping[str, np.ndarray]) -> None:
    """
    Raise unless dt <= dx / max cell capacity.

    Raises:
        CFLViolationError
    """
    max_capacity = max(float(np.max(c)) for c in capacities.values())
    limit = dx / max_capacity
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolationError(
            f"dt={dt} exceeds the CFL bound dx / max capacity = {limit:.6g} (max capacity {max_capacity})"
        )


def queue_update(queue: float, inflow_value: float, first_cell_supply: float, dt: float) -> Tuple[float, float]:
    """
    Source queue, explicit Euler.

    Args:
        queue: Queued vehicles
        inflow_value: Profile inflow rate f_in(t)
        first_cell_supply: Supply of the first cell of the source road
        dt: Time step

    Returns:
        (new queue, flux entering the road)
    """
    road_inflow = min(first_cell_supply, inflow_value + queue / dt)
    return max(0.0, queue + dt * (inflow_value - road_inflow)), road_inflow


def interface_fluxes(rho: np.ndarray, capacity: np.ndarray, left: float, right: float) -> np.ndarray:
    """Fluxes at the cell_count + 1 interfaces of a road, boundary fluxes given."""
    inner = numerical_flux(rho[1:], rho[:-1], capacity[1:], capacity[:-1])
    return np.concatenate(([left], inner, [right]))


def update_road(rho: np.ndarray, fluxes: np.ndarray, dt: float, dx: float) -> np.ndarray:
    """Conservative update rho - dt/dx (G_{k+1/2} - G_{k-1/2}), kept in [0, 1]."""
    return np.clip(rho - dt / dx * np.diff(fluxes), 0.0, 1.0)


def step(
    state: SimulationState,
    network: Network,
    capacity: CapacityField,
    config: SolverConfig,
    inflows: Mapping[str, float],
    junction_flux: Optional[Mapping[str, JunctionFlux]] = None
) -> SimulationState:
    """
    Advance densities and queues by one time step.

    Args:
        state: Current state
        network: Road network
        capacity: Capacity field for this step
        config: Solver settings
        inflows: source road id -> profile inflow rate at state.t
        junction_flux: Junction fluxes for this state and field, solved here if omitted

    Returns:
        New state with t advanced by dt

    Raises:
        CFLViolationError: Before any update
    """
    caps = capacity.effective_all(network)
    check_cfl(config.dt, config.dx, caps)
    if junction_flux is None:
        junction_flux = junction_fluxes(network, state.densities, caps, state.distributions, state.rightways)

    dt = config.dt
    densities: Dict[str, np.ndarray] = {}
    queues = dict(state.queues)
    accepted, outflow = 0.0, 0.0

    for road_id, road in network.roads.items():
        rho, cap = state.densities[road_id], caps[road_id]

        start = network.start_junction(road_id)
        if start is not None:
            left = junction_flux[start.id].outflows[road_id]
        else:
            f_in = float(inflows.get(road_id, 0.0))
            queues[road_id], left = queue_update(queues[road_id], f_in, float(supply(rho[0], cap[0])), dt)
            accepted += f_in

        end = network.end_junction(road_id)
        if end is not None:
            right = junction_flux[end.id].inflows[road_id]
        else:
            right = float(demand(rho[-1], cap[-1]))
            outflow += right

        densities[road_id] = update_road(rho, interface_fluxes(rho, cap, left, right), dt, road.dx)

    return replace(
        state,
        densities=densities,
        queues=queues,
        t=state.t + dt,
        boundary_inflow=accepted,
        boundary_outflow=outflow,
    )
