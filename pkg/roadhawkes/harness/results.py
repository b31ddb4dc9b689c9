"""
Result records for RoadHawkes
Per-run records, Monte Carlo aggregates and the CSV/JSON files written by the CLI.
"""

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from roadhawkes.core.capacity import Accident, AccidentOrigin
from roadhawkes.core.network import Network
from roadhawkes.core.risk import empty_system_probability
from roadhawkes.harness.simulation import SimulationResult, Snapshot

logger = logging.getLogger(__name__)

FORMAT_VERSION = '1.0'

ACCIDENT_COLUMNS = ['run', 'index', 'origin', 'road', 'junction', 'position', 'size', 'reduction',
                    'start', 'duration', 'parent']


@dataclass
class RunRecord:
    """
    Scalar outcome of one run.

    Attributes:
        run: Run index
        seed: Ensemble seed
        ttt: Total travel time
        toes: Time of empty system, None if never emptied
        accidents_total: All accidents including junction accidents
        roads: road id -> accident count
        junctions: junction id -> accident count
        origins: origin tag -> accident count
        detour_fraction: Share of steps with the detour recommended
        steps: Number of time steps
    """
    run: int
    seed: int
    ttt: float
    toes: Optional[float]
    accidents_total: int
    roads: Dict[str, int] = field(default_factory=dict)
    junctions: Dict[str, int] = field(default_factory=dict)
    origins: Dict[str, int] = field(default_factory=dict)
    detour_fraction: float = 0.0
    steps: int = 0

    @classmethod
    def from_result(cls, result: SimulationResult) -> 'RunRecord':
        counts = result.report.counts
        origins = Counter(a.origin.value for a in result.accidents)
        return cls(
            run=result.run,
            seed=result.seed,
            ttt=result.report.ttt,
            toes=result.report.toes,
            accidents_total=counts.total,
            roads=dict(counts.per_road),
            junctions=dict(counts.per_junction),
            origins={origin.value: origins.get(origin.value, 0) for origin in AccidentOrigin},
            detour_fraction=result.detour_steps / result.steps if result.steps else 0.0,
            steps=result.steps,
        )

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            'run': self.run,
            'seed': self.seed,
            'ttt': self.ttt,
            'toes': self.toes,
            'accidents_total': self.accidents_total,
        }
        row.update({f"accidents_road_{r}": n for r, n in self.roads.items()})
        row.update({f"accidents_junction_{j}": n for j, n in self.junctions.items()})
        row.update({f"origin_{o}": n for o, n in self.origins.items()})
        row['detour_fraction'] = self.detour_fraction
        row['steps'] = self.steps
        return row


def mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    """Arithmetic mean and standard error (ddof=1, zero for one value)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float('nan'), float('nan')
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


@dataclass
class AggregateReport:
    """
    Monte Carlo aggregate over runs, in run-index order.

    Attributes:
        runs: Number of runs
        ttt_mean: Mean total travel time
        ttt_se: Standard error of the total travel time
        accidents_mean: Mean total accident count
        accidents_se: Standard error of the total accident count
        road_means: road id -> mean accident count
        junction_means: junction id -> mean accident count
        origin_means: origin tag -> mean accident count
        toes_probabilities: t -> P(ToES <= t)
        emptied_share: Share of runs that emptied within the horizon
        records: Per-run records
    """
    runs: int
    ttt_mean: float
    ttt_se: float
    accidents_mean: float
    accidents_se: float
    road_means: Dict[str, float]
    junction_means: Dict[str, float]
    origin_means: Dict[str, float]
    toes_probabilities: Dict[float, float]
    emptied_share: float
    records: List[RunRecord] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'runs': self.runs,
            'ttt_mean': self.ttt_mean,
            'ttt_se': self.ttt_se,
            'accidents_mean': self.accidents_mean,
            'accidents_se': self.accidents_se,
            'road_means': self.road_means,
            'junction_means': self.junction_means,
            'origin_means': self.origin_means,
            'toes_probabilities': {f"{t:g}": p for t, p in self.toes_probabilities.items()},
            'emptied_share': self.emptied_share,
        }


def aggregate(records: Sequence[RunRecord], toes_times: Iterable[float] = ()) -> AggregateReport:
    """Reduce per-run records; records must already be in run-index order."""
    def means(key: str) -> Dict[str, float]:
        names = list(getattr(records[0], key)) if records else []
        return {name: float(np.mean([getattr(r, key).get(name, 0) for r in records])) for name in names}

    ttt_mean, ttt_se = mean_and_se([r.ttt for r in records])
    acc_mean, acc_se = mean_and_se([r.accidents_total for r in records])
    toes = [r.toes for r in records]
    return AggregateReport(
        runs=len(records),
        ttt_mean=ttt_mean,
        ttt_se=ttt_se,
        accidents_mean=acc_mean,
        accidents_se=acc_se,
        road_means=means('roads'),
        junction_means=means('junctions'),
        origin_means=means('origins'),
        toes_probabilities={float(t): empty_system_probability(toes, t) for t in toes_times},
        emptied_share=sum(1 for v in toes if v is not None) / len(records) if records else 0.0,
        records=list(records),
    )


def _prepare(path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_runs_csv(records: Sequence[RunRecord], path: Union[str, Path]) -> Path:
    path = _prepare(path)
    pd.DataFrame([r.to_row() for r in records]).to_csv(path, index=False)
    logger.info(f"Wrote {len(records)} run records to {path}")
    return path


def accident_frame(accidents_by_run: Iterable[Tuple[int, Sequence[Accident]]]) -> pd.DataFrame:
    rows = [{'run': run, **accident.to_dict()} for run, accidents in accidents_by_run for accident in accidents]
    frame = pd.DataFrame(rows, columns=ACCIDENT_COLUMNS)
    return frame.astype({'parent': 'Int64'})


def write_accidents_csv(accidents_by_run: Iterable[Tuple[int, Sequence[Accident]]], path: Union[str, Path]) -> Path:
    path = _prepare(path)
    frame = accident_frame(accidents_by_run)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} accidents to {path}")
    return path


def write_snapshots_csv(snapshots: Sequence[Snapshot], network: Network, path: Union[str, Path]) -> Path:
    path = _prepare(path)
    frames = []
    for snapshot in snapshots:
        for road_id, rho in snapshot.densities.items():
            frames.append(pd.DataFrame({
                'time': snapshot.t,
                'road': road_id,
                'cell_center': network.roads[road_id].cell_centers,
                'density': rho,
            }))
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(
        columns=['time', 'road', 'cell_center', 'density'])
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(snapshots)} snapshots to {path}")
    return path


def write_frame_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_summary_json(path: Union[str, Path], command: str, body: Dict[str, Any],
                       parameters: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write a JSON summary; metadata.generated_at is the only time-dependent field.

    Args:
        path: Output file
        command: CLI command that produced it
        body: Summary content
        parameters: Configuration document used
    """
    path = _prepare(path)
    data = {
        'command': command,
        **body,
        'parameters': parameters or {},
        'metadata': {
            'generated_at': datetime.now().isoformat(),
            'format_version': FORMAT_VERSION,
        },
    }
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=False, default=_json_default)
    logger.info(f"Wrote summary to {path}")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")
