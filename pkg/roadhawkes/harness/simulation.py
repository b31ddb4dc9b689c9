"""
Simulation run loop for RoadHawkes
One run of the coupled traffic/accident model with its own random streams.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from roadhawkes.core.accidents import AccidentGenerator, background_rate
from roadhawkes.core.capacity import Accident, CapacityField, effective_capacity
from roadhawkes.core.fluxes import junction_fluxes
from roadhawkes.core.godunov import SimulationState, step
from roadhawkes.core.hawkes import advance, conditional_intensity, step_sample
from roadhawkes.core.risk import (
    RiskReport,
    congestion_measure,
    count_accidents,
    time_of_empty_system,
    total_travel_time,
)
from roadhawkes.core.routing import apply_reroute
from roadhawkes.harness.config import ExperimentConfig

logger = logging.getLogger(__name__)

# Random streams per run: jump decisions, accident placement and parameters
STREAMS_PER_RUN = 2
JUMP_STREAM = 0
ACCIDENT_STREAM = 1


def run_streams(seed: int, run: int) -> Tuple[np.random.Generator, ...]:
    """
    Independent generators of one run.

    Stream k of run i jumps PCG64DXSM(seed) ahead i * STREAMS_PER_RUN + k times,
    so streams never overlap and coincide across scenarios with the same seed.
    """
    base = np.random.PCG64DXSM(seed)
    return tuple(
        np.random.Generator(base.jumped(run * STREAMS_PER_RUN + stream))
        for stream in range(STREAMS_PER_RUN)
    )


@dataclass
class Snapshot:
    """Densities at one time."""
    t: float
    densities: Dict[str, np.ndarray]


@dataclass
class SimulationResult:
    """
    Outcome of one run.

    Attributes:
        run: Run index
        seed: Ensemble seed
        report: Risk measures
        accidents: Accident log
        snapshots: Requested density snapshots
        steps: Number of time steps
        detour_steps: Steps during which the detour was recommended
        max_mass_residual: Largest per-step mass balance residual
    """
    run: int
    seed: int
    report: RiskReport
    accidents: List[Accident]
    snapshots: List[Snapshot] = field(default_factory=list)
    steps: int = 0
    detour_steps: int = 0
    max_mass_residual: float = 0.0


class Simulation:
    """
    Runs the coupled model step by step.

    Each step: fluxes and background rate, Hawkes jump decision, accident
    births and deaths, capacity field rebuild, rerouting, PDE and queue update.
    """

    def __init__(self, config: ExperimentConfig, seed: Optional[int] = None, run: int = 0):
        self.config = config
        self.network = config.network
        self.seed = config.monte_carlo.seed if seed is None else seed
        self.run_index = run

        self.jump_rng, self.accident_rng = run_streams(self.seed, run)
        self.generator = AccidentGenerator(self.network, config.risk, config.kernel)

        self.state = SimulationState.initial(self.network)
        self.capacity = CapacityField.unit(self.network)
        self.base_alpha = None
        if config.policy:
            policy = config.policy
            self.base_alpha = (self.network.junctions[policy.junction].distribution
                               if policy.base_alpha is None else policy.base_alpha)

        self.steps_done = 0
        self.detour_steps = 0
        self.max_mass_residual = 0.0
        self._density_sums: List[float] = []
        self._queues: List[float] = []
        self._times: List[float] = []
        self._totals: List[float] = []
        self._cm_traces: Dict[str, List[float]] = {}
        self._snapshot_steps = {
            int(round(t / config.solver.dt)): t for t in config.output.snapshots
        }
        self.snapshots: List[Snapshot] = []

    def _record(self) -> None:
        state = self.state
        self._density_sums.append(sum(float(rho.sum()) for rho in state.densities.values()))
        self._queues.append(state.queue_total)
        self._times.append(state.t)
        self._totals.append(state.total_mass(self.network))
        if self.steps_done in self._snapshot_steps:
            self.snapshots.append(Snapshot(state.t, {r: rho.copy() for r, rho in state.densities.items()}))

    def _congestion(self) -> Dict[str, float]:
        roads = list(self.network.roads) if self.config.output.record_cm else []
        if self.config.policy:
            roads += [r for r in self.config.policy.watched if r not in roads]
        v_ref = self.config.policy.v_ref if self.config.policy else 0.5
        return {
            road_id: congestion_measure(
                self.state.densities[road_id],
                self.capacity.multipliers[road_id],
                self.network.roads[road_id].capacity_cells,
                self.network.roads[road_id].dx,
                v_ref,
            )
            for road_id in roads
        }

    def step(self) -> None:
        """Advance the run by one time step."""
        config, network, state = self.config, self.network, self.state
        dt, t = config.solver.dt, state.t

        self._record()
        cm = self._congestion()
        if config.output.record_cm:
            for road_id, value in cm.items():
                self._cm_traces.setdefault(road_id, []).append(value)
        active_at_start = [a for a in state.active if a.is_active(t)]

        caps = self.capacity.effective_all(network)
        flux_now = junction_fluxes(network, state.densities, caps, state.distributions, state.rightways)
        background = (background_rate(network, state.densities, self.capacity, config.risk, flux_now)
                      if config.accidents_enabled else 0.0)

        # One uniform per step keeps the jump stream aligned across scenarios
        u = self.jump_rng.random()
        hawkes = state.hawkes
        jumped = False
        if config.accidents_enabled:
            intensity = conditional_intensity(hawkes, config.kernel, background)
            jumped, hawkes = step_sample(hawkes, config.kernel, intensity, dt, u)

        accidents, active = state.accidents, state.active
        changed = False
        if jumped:
            accident = self.generator.generate(len(accidents), t, state.densities, self.capacity,
                                               accidents, flux_now, self.accident_rng)
            accidents = accidents + [accident]
            active = active + [accident]
            changed = True
        survivors = [a for a in active if a.is_active(t)]
        if len(survivors) != len(active):
            changed = True
        active = survivors
        if changed:
            self.capacity = effective_capacity(network, active)

        distributions = state.distributions
        if config.policy:
            policy = config.policy
            alpha = apply_reroute(policy, cm, active_at_start, self.base_alpha)
            if alpha != state.distributions[policy.junction]:
                logger.debug(f"t={t:.2f}: split at {policy.junction} -> {alpha}")
            if alpha != self.base_alpha:
                self.detour_steps += 1
            distributions = {**state.distributions, policy.junction: alpha}

        state = replace(state, accidents=accidents, active=active, hawkes=hawkes, distributions=distributions)
        before = state.total_mass(network)
        inflows = {road_id: profile.value(t) for road_id, profile in config.inflows.items()}
        state = step(state, network, self.capacity, config.solver, inflows)
        residual = state.total_mass(network) - before - dt * (state.boundary_inflow - state.boundary_outflow)
        self.max_mass_residual = max(self.max_mass_residual, abs(residual))

        self.state = replace(state, hawkes=advance(state.hawkes, config.kernel, dt))
        self.steps_done += 1

    def run(self) -> SimulationResult:
        """Run to the horizon and evaluate the risk measures."""
        n_steps = self.config.solver.n_steps
        logger.info(f"Run {self.run_index} started (seed {self.seed}, {n_steps} steps)")
        for _ in range(n_steps):
            self.step()
        self._record()
        result = self.result()
        logger.info(
            f"Run {self.run_index} finished: TTT={result.report.ttt:.2f}, "
            f"accidents={result.report.counts.total}, ToES={result.report.toes}"
        )
        return result

    def result(self) -> SimulationResult:
        """Risk measures over the steps done so far."""
        solver = self.config.solver
        n = self.steps_done
        ttt = total_travel_time(np.array(self._density_sums[:n]), np.array(self._queues[:n]),
                                solver.dt, solver.dx)
        toes = time_of_empty_system(self._times, self._totals, self.config.inflow_cutoff,
                                    self.config.monte_carlo.empty_threshold)
        counts = count_accidents(self.state.accidents, self.network.road_ids, self.network.junction_ids)
        report = RiskReport(ttt=ttt, counts=counts, toes=toes, cm_traces=dict(self._cm_traces))
        return SimulationResult(
            run=self.run_index,
            seed=self.seed,
            report=report,
            accidents=list(self.state.accidents),
            snapshots=list(self.snapshots),
            steps=n,
            detour_steps=self.detour_steps,
            max_mass_residual=self.max_mass_residual,
        )


def simulate(config: ExperimentConfig, seed: Optional[int] = None, run: int = 0) -> SimulationResult:
    """
    Run one simulation.

    Args:
        config: Experiment configuration
        seed: Ensemble seed, default config.monte_carlo.seed
        run: Run index selecting the random streams

    Returns:
        SimulationResult
    """
    return Simulation(config, seed, run).run()
