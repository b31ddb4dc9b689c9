"""Tests for the run loop, Monte Carlo ensembles and sweeps."""

from dataclasses import replace

import numpy as np
import pytest
from joblib import parallel_backend

from conftest import experiment_document
from roadhawkes.analysis.event_log import exponential_bin_shares, gap_histogram
from roadhawkes.core.capacity import Accident, AccidentOrigin
from roadhawkes.core.godunov import SimulationState
from roadhawkes.errors import ConfigError
from roadhawkes.harness.config import parse_experiment_config
from roadhawkes.harness.monte_carlo import best_cell, run_monte_carlo, sweep
from roadhawkes.harness.results import RunRecord
from roadhawkes.harness.simulation import Simulation, run_streams, simulate


def busy_config(**sections):
    """Short diamond experiment with frequent accidents."""
    return parse_experiment_config(experiment_document(accidents={'gamma': 5.0}, **sections))


def accident_log(result):
    return [a.to_dict() for a in result.accidents]


class TestStreams:

    def test_streams_are_reproducible(self):
        first = [g.random(5) for g in run_streams(42, 3)]
        second = [g.random(5) for g in run_streams(42, 3)]
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        jump, accident = run_streams(42, 0)
        other_jump, _ = run_streams(42, 1)
        draws = jump.random(5)
        assert not np.array_equal(draws, accident.random(5))
        assert not np.array_equal(draws, other_jump.random(5))


class TestSingleRun:

    def test_same_seed_same_run(self):
        config = busy_config()
        first, second = simulate(config), simulate(config)
        assert first.report.ttt == second.report.ttt
        assert accident_log(first) == accident_log(second)
        assert len(first.accidents) > 0

    def test_other_seed_other_accidents(self):
        config = busy_config()
        assert accident_log(simulate(config, seed=1)) != accident_log(simulate(config, seed=2))

    def test_accident_log_is_consistent(self):
        result = simulate(busy_config())
        assert result.steps == 500
        assert result.report.counts.total == len(result.accidents)
        starts = [a.start for a in result.accidents]
        assert starts == sorted(starts)
        for k, accident in enumerate(result.accidents):
            assert accident.index == k
            if accident.origin == AccidentOrigin.SELF_EXCITATION:
                assert accident.parent < k

    def test_mass_balance(self):
        result = simulate(busy_config())
        assert result.max_mass_residual < 1e-10

    def test_without_accidents_seed_is_irrelevant(self):
        config = parse_experiment_config(experiment_document(accidents={'enabled': False}))
        first, second = simulate(config, seed=1), simulate(config, seed=2)
        assert first.report.counts.total == 0
        assert first.report.ttt == second.report.ttt
        assert first.report.ttt > 0

    def test_system_does_not_empty_during_inflow(self):
        result = simulate(busy_config())
        assert result.report.toes is None

    def test_snapshots(self):
        result = simulate(busy_config(output={'snapshots': [1.0, 2.5]}))
        assert [s.t for s in result.snapshots] == [pytest.approx(1.0), pytest.approx(2.5)]
        assert set(result.snapshots[0].densities) == {'1', '2', '3', '4', '5', '6', '7'}
        assert result.snapshots[0].densities['2'].shape == (100,)

    def test_congestion_traces(self):
        result = simulate(busy_config(output={'record_cm': True}))
        assert len(result.report.cm_traces) == 7
        assert all(len(trace) == 500 for trace in result.report.cm_traces.values())
        assert result.report.cm_traces['4'][0] == pytest.approx(0.64)


class TestPolicyInRun:

    def policy_config(self, threshold):
        return parse_experiment_config(experiment_document(
            accidents={'enabled': False},
            policy={'enabled': True, 'junction': 'C', 'target_road': 4, 'watched_road': 4, 'alt_roads': [5],
                    'flex_alpha': 0.2, 'cm_threshold': threshold},
        ))

    def test_detour_switches_split(self):
        simulation = Simulation(self.policy_config(0.6))
        simulation.step()
        assert simulation.state.distributions['C'] == pytest.approx(0.2)
        assert simulation.detour_steps == 1

    def test_no_detour_below_threshold(self):
        simulation = Simulation(self.policy_config(0.9))
        simulation.step()
        assert simulation.state.distributions['C'] == pytest.approx(0.5)
        assert simulation.detour_steps == 0

    def test_detour_fraction_recorded(self):
        record = RunRecord.from_result(simulate(self.policy_config(0.6)))
        assert 0.0 < record.detour_fraction <= 1.0

    def test_policy_base_split_is_not_a_detour(self):
        config = parse_experiment_config(experiment_document(
            accidents={'enabled': False},
            policy={'enabled': True, 'junction': 'C', 'target_road': 4, 'watched_road': 4, 'alt_roads': [5],
                    'base_alpha': 0.3, 'flex_alpha': 0.2, 'cm_threshold': 0.99},
        ))
        simulation = Simulation(config)
        simulation.step()
        assert simulation.state.distributions['C'] == pytest.approx(0.3)
        assert simulation.detour_steps == 0
        assert RunRecord.from_result(simulate(config)).detour_fraction == 0.0

    def test_flex_equal_to_base_matches_run_without_policy(self):
        plain = Simulation(busy_config())
        with_policy = Simulation(busy_config(policy={
            'enabled': True, 'junction': 'C', 'target_road': 4, 'watched_road': 4, 'alt_roads': [5],
            'flex_alpha': 0.5, 'cm_threshold': 0.6,
        }))
        first, second = plain.run(), with_policy.run()
        assert len(first.accidents) > 0
        assert accident_log(first) == accident_log(second)
        assert first.report.ttt == second.report.ttt
        for road_id, rho in plain.state.densities.items():
            np.testing.assert_array_equal(rho, with_policy.state.densities[road_id])
        assert with_policy.detour_steps == 0

    def serious_accident_config(self):
        return parse_experiment_config(experiment_document(
            accidents={'enabled': False},
            policy={'enabled': True, 'junction': 'C', 'target_road': 4, 'watched_road': 4, 'alt_roads': [5],
                    'flex_alpha': 0.2, 'cm_threshold': 0.99, 'serious_threshold': 0.8},
        ))

    def with_accident_on_road_4(self, simulation, duration):
        accident = Accident(index=0, size=0.05, reduction=0.9, start=0.0, duration=duration,
                            origin=AccidentOrigin.BACKGROUND, road='4', position=0.5)
        simulation.state = replace(simulation.state, accidents=[accident], active=[accident])

    def test_serious_accident_triggers_detour(self):
        simulation = Simulation(self.serious_accident_config())
        simulation.step()
        self.with_accident_on_road_4(simulation, 1.0)
        simulation.step()
        assert simulation.state.distributions['C'] == pytest.approx(0.2)

    def test_accident_expired_before_step_start_is_ignored(self):
        simulation = Simulation(self.serious_accident_config())
        simulation.step()
        self.with_accident_on_road_4(simulation, simulation.state.t)
        simulation.step()
        assert simulation.state.distributions['C'] == pytest.approx(0.5)
        assert simulation.detour_steps == 0


class TestEmptySystem:

    @pytest.mark.parametrize('cutoff', [0.5, 1.0, 1.5])
    def test_toes_not_before_cutoff(self, cutoff):
        config = parse_experiment_config(experiment_document(
            network='single_road',
            solver={'inflow_profiles': {'main': {'type': 'constant', 'rate': 0.1, 'cutoff': cutoff}}},
            accidents={'enabled': False},
        ))
        assert SimulationState.initial(config.network).total_mass(config.network) == 0.0
        toes = simulate(config).report.toes
        assert toes is not None
        assert cutoff < toes < cutoff + 2.0


class TestMonteCarlo:

    def test_runs_in_order(self):
        config = busy_config(solver={'horizon': 1.0}, monte_carlo={'runs': 3})
        result = run_monte_carlo(config, keep_accidents=True)
        records = result.aggregate.records
        assert [r.run for r in records] == [0, 1, 2]
        for run, record in enumerate(records):
            assert record.ttt == simulate(config, run=run).report.ttt
        assert sorted(result.accidents) == [0, 1, 2]
        assert result.aggregate.accidents_mean == pytest.approx(np.mean([r.accidents_total for r in records]))

    def test_parallel_matches_serial(self):
        serial = busy_config(solver={'horizon': 1.0}, monte_carlo={'runs': 4})
        parallel = busy_config(solver={'horizon': 1.0}, monte_carlo={'runs': 4, 'n_jobs': 2})
        expected = [r.ttt for r in run_monte_carlo(serial).aggregate.records]
        with parallel_backend('threading'):
            got = [r.ttt for r in run_monte_carlo(parallel).aggregate.records]
        assert got == expected


class TestSweep:

    def test_tiny_grid(self):
        config = busy_config(solver={'horizon': 1.0}, sweep={
            'alpha_1': {'junction': 'B', 'road': 2, 'grid': [0.3, 0.7]},
            'alpha_2': {'junction': 'C', 'road': 4, 'grid': [0.5]},
        })
        cells = sweep(config)
        assert [(c.alpha_1, c.alpha_2) for c in cells] == [(0.3, 0.5), (0.7, 0.5)]
        row = cells[0].to_row()
        assert {'alpha_1', 'alpha_2', 'ttt_mean', 'accidents_mean', 'accidents_road_1'} <= set(row)
        assert best_cell(cells).report.ttt_mean == min(c.report.ttt_mean for c in cells)

    def test_needs_sweep_block(self):
        with pytest.raises(ConfigError):
            sweep(busy_config())


def full_study(**sections):
    """Full-length diamond study, T=500, with the default accident parameters."""
    document = experiment_document(**sections)
    del document['solver']
    document['monte_carlo'] = {'seed': 20240501, 'n_jobs': -1}
    return document


def risk_study(**sections):
    """Diamond risk study: T=150 with the sinusoid inflow cut at 75, gamma=0.1, gamma_v=0.04."""
    document = experiment_document(**sections)
    document['solver'] = {'horizon': 150.0}
    document['accidents'] = {**document.get('accidents', {}), 'gamma': 0.1, 'junction_gamma': 0.04}
    document['monte_carlo'] = {'seed': 20240501, 'n_jobs': -1, 'toes_times': [90.0, 100.0, 110.0]}
    return document


@pytest.mark.slow
class TestLongStudies:

    def test_short_gaps_are_overrepresented(self):
        config = parse_experiment_config(full_study())
        gaps = []
        result = run_monte_carlo(config.with_cli_overrides(runs=100), keep_accidents=True)
        for accidents in result.accidents.values():
            starts = np.array([a.start for a in accidents])
            if starts.size > 1:
                gaps.append(np.diff(starts))
        gaps = np.concatenate(gaps)
        gaps = gaps[gaps > 0]
        histogram = gap_histogram(gaps, 0.1)
        predicted = exponential_bin_shares(1.0 / gaps.mean(), histogram.edges)[0]
        assert histogram.shares[0] >= 1.2 * predicted

    def test_detour_ordering(self):
        means = []
        for flex in (0.3, 0.7, 1.0):
            config = parse_experiment_config(risk_study(
                overrides={'distribution': {'B': 0.65, 'C': 0.3}},
                policy={'enabled': True, 'junction': 'C', 'target_road': 4, 'watched_road': 5,
                        'alt_roads': [4, 6], 'flex_alpha': flex},
            ))
            means.append(run_monte_carlo(config.with_cli_overrides(runs=300)).aggregate.ttt_mean)
        assert means[2] < means[1] < means[0]
        assert means[0] == pytest.approx(256.45, rel=0.10)

    def test_accident_counts_grow_with_splits(self):
        grid = [0.1, 0.5, 0.9]
        config = parse_experiment_config(risk_study(sweep={
            'alpha_1': {'junction': 'B', 'road': 2, 'grid': grid},
            'alpha_2': {'junction': 'C', 'road': 4, 'grid': grid},
        }))
        cells = sweep(config.with_cli_overrides(runs=200))
        table = {(c.alpha_1, c.alpha_2): c.report for c in cells}
        for i, a1 in enumerate(grid):
            for j, a2 in enumerate(grid):
                here = table[(a1, a2)]
                for neighbour in ([(grid[i + 1], a2)] if i + 1 < 3 else []) + ([(a1, grid[j + 1])] if j + 1 < 3 else []):
                    there = table[neighbour]
                    assert there.accidents_mean >= here.accidents_mean - max(here.accidents_se, there.accidents_se)
