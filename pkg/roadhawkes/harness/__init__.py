"""
RoadHawkes Harness Package
Configuration, run loop, Monte Carlo ensembles and result files.
"""

from .config import ExperimentConfig, load_experiment_config, parse_experiment_config
from .simulation import Simulation, SimulationResult, simulate
from .monte_carlo import MonteCarloResult, SweepCell, run_monte_carlo, sweep
from .results import AggregateReport, RunRecord, aggregate

__all__ = [
    'ExperimentConfig',
    'load_experiment_config',
    'parse_experiment_config',
    'Simulation',
    'SimulationResult',
    'simulate',
    'MonteCarloResult',
    'SweepCell',
    'run_monte_carlo',
    'sweep',
    'AggregateReport',
    'RunRecord',
    'aggregate',
]
