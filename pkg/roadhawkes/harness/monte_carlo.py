"""
Monte Carlo ensembles and parameter sweeps for RoadHawkes
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed

from roadhawkes.core.capacity import Accident
from roadhawkes.errors import ConfigError
from roadhawkes.harness.config import ExperimentConfig, split_towards
from roadhawkes.harness.results import AggregateReport, RunRecord, aggregate
from roadhawkes.harness.simulation import simulate

logger = logging.getLogger(__name__)


def _run_one(config: ExperimentConfig, seed: int, run: int,
             keep_accidents: bool) -> Tuple[RunRecord, Optional[List[Accident]]]:
    result = simulate(config, seed, run)
    return RunRecord.from_result(result), (result.accidents if keep_accidents else None)


@dataclass
class MonteCarloResult:
    """Aggregate plus, when requested, the accident log of every run."""
    aggregate: AggregateReport
    accidents: Dict[int, List[Accident]] = field(default_factory=dict)


def run_monte_carlo(config: ExperimentConfig, keep_accidents: bool = False) -> MonteCarloResult:
    """
    Run config.monte_carlo.runs independent simulations.

    Run i uses the random streams of (seed, i); results are reduced in run order,
    whatever order the workers finish in.

    Raises:
        ConfigError: runs < 1
    """
    settings = config.monte_carlo
    if settings.runs < 1:
        raise ConfigError(f"monte_carlo.runs must be >= 1, got {settings.runs}")

    logger.info(f"Monte Carlo: {settings.runs} runs, seed {settings.seed}, n_jobs={settings.n_jobs}")
    outputs = Parallel(n_jobs=settings.n_jobs)(
        delayed(_run_one)(config, settings.seed, run, keep_accidents) for run in range(settings.runs)
    )
    records = [record for record, _ in outputs]
    report = aggregate(records, settings.toes_times)
    logger.info(f"Monte Carlo done: TTT {report.ttt_mean:.2f} +- {report.ttt_se:.2f}, "
                f"accidents {report.accidents_mean:.2f}")
    accidents = {record.run: log for record, log in outputs if log is not None}
    return MonteCarloResult(report, accidents)


@dataclass
class SweepCell:
    """Aggregate of one grid point."""
    alpha_1: float
    alpha_2: float
    report: AggregateReport

    def to_row(self) -> Dict[str, float]:
        row = {
            'alpha_1': self.alpha_1,
            'alpha_2': self.alpha_2,
            'ttt_mean': self.report.ttt_mean,
            'ttt_se': self.report.ttt_se,
            'accidents_mean': self.report.accidents_mean,
            'accidents_se': self.report.accidents_se,
        }
        row.update({f"accidents_road_{r}": m for r, m in self.report.road_means.items()})
        row.update({f"accidents_junction_{j}": m for j, m in self.report.junction_means.items()})
        row.update({f"p_toes_le_{t:g}": p for t, p in self.report.toes_probabilities.items()})
        return row


def sweep(config: ExperimentConfig) -> List[SweepCell]:
    """
    Monte Carlo over the (alpha_1, alpha_2) grid of config.sweep.

    Every cell reuses the same seed, so cells share their random streams.

    Raises:
        ConfigError: No sweep block
    """
    if config.sweep is None:
        raise ConfigError("sweep needs a 'sweep' block with alpha_1 and alpha_2 axes")
    axis_1, axis_2 = config.sweep
    settings = config.monte_carlo

    cells: List[Tuple[float, float, ExperimentConfig]] = []
    for a1 in axis_1.grid:
        for a2 in axis_2.grid:
            splits = {axis_1.junction: split_towards(config.network, axis_1.junction, axis_1.road, a1, 'sweep')}
            splits[axis_2.junction] = split_towards(config.network, axis_2.junction, axis_2.road, a2, 'sweep')
            cells.append((a1, a2, config.with_splits(splits)))

    logger.info(f"Sweep: {len(axis_1.grid)} x {len(axis_2.grid)} cells, {settings.runs} runs each")
    outputs = Parallel(n_jobs=settings.n_jobs)(
        delayed(_run_one)(cell_config, settings.seed, run, False)
        for _, _, cell_config in cells
        for run in range(settings.runs)
    )

    result: List[SweepCell] = []
    for k, (a1, a2, _) in enumerate(cells):
        records = [record for record, _ in outputs[k * settings.runs:(k + 1) * settings.runs]]
        cell = SweepCell(a1, a2, aggregate(records, settings.toes_times))
        logger.info(f"Sweep cell ({a1:g}, {a2:g}): TTT {cell.report.ttt_mean:.2f}, "
                    f"accidents {cell.report.accidents_mean:.2f}")
        result.append(cell)
    return result


def best_cell(cells: Sequence[SweepCell]) -> SweepCell:
    """Cell with the lowest mean total travel time."""
    return min(cells, key=lambda c: c.report.ttt_mean)
