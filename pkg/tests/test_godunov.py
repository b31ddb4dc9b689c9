"""Tests for the Godunov finite-volume solver."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roadhawkes.core.capacity import Accident, AccidentOrigin, CapacityField, effective_capacity
from roadhawkes.core.fluxes import numerical_flux
from roadhawkes.core.godunov import (
    SimulationState,
    SolverConfig,
    check_cfl,
    interface_fluxes,
    queue_update,
    step,
    update_road,
)
from roadhawkes.errors import CFLViolationError, ConfigError


def transmissive_run(rho, dx, dt, n_steps):
    """Single road with zero-gradient boundaries."""
    cap = np.ones_like(rho)
    for _ in range(n_steps):
        left = float(numerical_flux(rho[0], rho[0]))
        right = float(numerical_flux(rho[-1], rho[-1]))
        rho = update_road(rho, interface_fluxes(rho, cap, left, right), dt, dx)
    return rho


def rarefaction_fan(centers, t, x0=1.5):
    """Entropy solution of the Riemann problem rho_L=0.8, rho_R=0.2 at time t > 0."""
    return np.clip((1.0 - (centers - x0) / t) / 2.0, 0.2, 0.8)


def rarefaction_error(dx):
    """L1 error at t=1.5 of the fan on [0, 3], started from its open profile at t=0.5."""
    t0, t1 = 0.5, 1.5
    centers = dx * (np.arange(int(round(3.0 / dx))) + 0.5)
    dt = dx / 2
    rho = transmissive_run(rarefaction_fan(centers, t0), dx, dt, int(round((t1 - t0) / dt)))
    return dx * np.sum(np.abs(rho - rarefaction_fan(centers, t1)))


class TestSolverConfig:

    def test_steps(self):
        assert SolverConfig(dx=0.01, dt=0.01, horizon=500).n_steps == 50000

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ConfigError):
            SolverConfig(dt=0.0)


class TestCFL:

    def test_accepts_bound(self):
        check_cfl(0.01, 0.01, {'1': np.array([1.0, 0.5])})

    def test_rejects_large_step(self):
        with pytest.raises(CFLViolationError):
            check_cfl(0.02, 0.01, {'1': np.array([1.0, 0.5])})

    def test_step_checks_before_update(self, single_road):
        state = SimulationState.initial(single_road)
        with pytest.raises(CFLViolationError):
            step(state, single_road, CapacityField.unit(single_road), SolverConfig(dx=0.01, dt=0.05), {'1': 0.1})


class TestQueue:

    def test_free_entry(self):
        queue, inflow = queue_update(0.0, 0.1, 0.25, 0.01)
        assert queue == 0.0
        assert inflow == pytest.approx(0.1)

    def test_queue_builds_when_supply_is_short(self):
        queue, inflow = queue_update(0.01, 0.1, 0.05, 0.01)
        assert inflow == 0.05
        assert queue == pytest.approx(0.01 + 0.01 * 0.05)

    def test_queue_drains_within_supply(self):
        queue, inflow = queue_update(0.001, 0.0, 0.25, 0.01)
        assert inflow == pytest.approx(0.1)
        assert queue == pytest.approx(0.0, abs=1e-18)

    @given(
        queue=st.floats(min_value=0.0, max_value=10.0),
        inflow_value=st.floats(min_value=0.0, max_value=1.0),
        first_cell_supply=st.floats(min_value=0.0, max_value=0.25),
    )
    def test_queue_stays_nonnegative(self, queue, inflow_value, first_cell_supply):
        new_queue, road_inflow = queue_update(queue, inflow_value, first_cell_supply, 0.01)
        assert new_queue >= 0.0
        assert road_inflow <= first_cell_supply


class TestScalarScheme:

    def test_stationary_shock_stays_put(self):
        dx = 0.01
        centers = dx * (np.arange(100) + 0.5)
        rho = np.where(centers < 0.5, 0.2, 0.8)
        shock = int(np.argmax(rho > 0.5))
        rho = transmissive_run(rho, dx, dx / 2, 1000)
        assert abs(int(np.argmax(rho > 0.5)) - shock) * dx < 2 * dx

    def test_rarefaction_converges(self):
        errors = [rarefaction_error(dx) for dx in (1 / 50, 1 / 100, 1 / 200)]
        assert errors[0] > errors[1] > errors[2]
        rate = np.log(errors[0] / errors[2]) / np.log(4.0)
        assert rate >= 0.8

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=30))
    def test_densities_stay_in_unit_interval(self, values):
        rho = np.array(values)
        cap = np.ones_like(rho)
        new = update_road(rho, interface_fluxes(rho, cap, 0.25, 0.25), 0.01, 0.01)
        assert np.all((new >= 0.0) & (new <= 1.0))


class TestNetworkStep:

    def test_clock_advances(self, single_road):
        state = SimulationState.initial(single_road)
        new = step(state, single_road, CapacityField.unit(single_road), SolverConfig(), {'1': 0.1})
        assert new.t == pytest.approx(0.01)
        assert new.boundary_inflow == pytest.approx(0.1)

    def test_empty_road_fills_from_queue(self, single_road):
        state = SimulationState.initial(single_road)
        config = SolverConfig(dx=0.01, dt=0.01)
        for _ in range(10):
            state = step(state, single_road, CapacityField.unit(single_road), config, {'1': 0.1})
        assert state.network_mass(single_road) == pytest.approx(0.1 * 0.1)
        assert state.queue_total == pytest.approx(0.0, abs=1e-15)

    def test_mass_balance_on_diamond_with_accidents(self, diamond_fine, rng):
        network = diamond_fine
        config = SolverConfig(dx=0.01, dt=0.01)
        state = SimulationState.initial(network)
        active = []
        for k in range(1000):
            if k % 50 == 0:
                road = network.road_ids[int(rng.integers(len(network.road_ids)))]
                active = [a for a in active if a.is_active(state.t)] + [Accident(
                    index=k, size=float(rng.uniform(0.02, 0.5)), reduction=float(rng.uniform(0.1, 0.99)),
                    start=state.t, duration=float(rng.uniform(0.5, 3.0)), origin=AccidentOrigin.BACKGROUND,
                    road=road, position=float(rng.uniform(0.05, 0.95)),
                )]
            capacity = effective_capacity(network, active, state.t)
            before = state.total_mass(network)
            state = step(state, network, capacity, config, {'1': 0.13})
            residual = state.total_mass(network) - before - config.dt * (state.boundary_inflow - state.boundary_outflow)
            assert abs(residual) < 1e-12
            for rho in state.densities.values():
                assert np.all((rho >= 0.0) & (rho <= 1.0))
