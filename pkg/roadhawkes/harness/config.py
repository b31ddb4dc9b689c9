"""
Experiment configuration for RoadHawkes
Turns the config.yaml document into typed settings objects.
"""

import copy
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import yaml

from roadhawkes.analysis.profiles import load_hourly_counts
from roadhawkes.core.accidents import AccidentRiskConfig
from roadhawkes.core.godunov import SolverConfig
from roadhawkes.core.hawkes import ExcitationKernel
from roadhawkes.core.inflow import ConstantInflow, InflowProfile, build_inflow
from roadhawkes.core.network import Network, load_network
from roadhawkes.core.routing import ReroutePolicy
from roadhawkes.errors import ConfigError, NetworkError

logger = logging.getLogger(__name__)

CONFIG_SCHEMA_VERSION = 1

WHOLE_SECTIONS = ('inflow_profiles', 'policy', 'sweep', 'overrides')

# Diamond network, accident parameters of the long single-run study
DEFAULT_CONFIG: Dict[str, Any] = {
    'schema_version': CONFIG_SCHEMA_VERSION,
    'network': 'diamond',
    'networks': {'network_dir': 'networks'},
    'solver': {
        'dx': 0.01,
        'dt': 0.01,
        'horizon': 500.0,
        'inflow_profiles': {
            'main': {'type': 'sinusoid', 'base': 0.13, 'amplitude': 0.052, 'frequency': 1.0,
                     'cutoff_before_end': 75.0},
        },
    },
    'accidents': {
        'enabled': True,
        'gamma': 0.5,
        'junction_gamma': None,
        'alpha': 0.1,
        'beta': 2.0,
        'beta_tilde': 24.0,
        'nu': 0.0,
        'size_rate': 20.0,
        'severity_shape_a': 2.66,
        'severity_shape_b': 3.53,
        'max_reduction': 0.99,
        'base_duration': 1.0,
        'duration_rate': 0.5,
    },
    'policy': {'enabled': False},
    'overrides': {},
    'monte_carlo': {'runs': 1, 'seed': 20240501, 'n_jobs': 1, 'toes_times': [90.0, 100.0, 110.0],
                    'empty_threshold': 1e-6},
    'output': {'dir': 'results', 'snapshots': [], 'record_cm': False},
    'logging': {'level': 'INFO'},
}


@dataclass(frozen=True)
class MonteCarloSettings:
    """Ensemble size, seed and parallelism."""
    runs: int = 1
    seed: int = 0
    n_jobs: int = 1
    toes_times: Tuple[float, ...] = (90.0, 100.0, 110.0)
    empty_threshold: float = 1e-6


@dataclass(frozen=True)
class SweepAxis:
    """
    One axis of a parameter sweep over a 1-2 junction split.

    Attributes:
        junction: Junction whose split is varied
        grid: Values of the share towards `road`
        road: Out-road the values refer to, default the junction's first out-road
        name: Column name in the sweep output
    """
    junction: str
    grid: Tuple[float, ...]
    road: Optional[str] = None
    name: str = 'alpha'


@dataclass(frozen=True)
class OutputSettings:
    dir: str = 'results'
    snapshots: Tuple[float, ...] = ()
    record_cm: bool = False


@dataclass
class ExperimentConfig:
    """
    Everything one experiment needs.

    Attributes:
        network: Network with overrides applied
        solver: Discretization
        inflows: source road id -> inflow profile
        accidents_enabled: False switches the accident process off
        risk: Accident measure and parameter distributions
        kernel: Hawkes excitation kernel
        policy: Optional rerouting policy
        monte_carlo: Ensemble settings
        sweep: Optional pair of sweep axes
        output: Output settings
        document: The configuration document the object was parsed from
    """
    network: Network
    solver: SolverConfig
    inflows: Dict[str, InflowProfile]
    accidents_enabled: bool
    risk: AccidentRiskConfig
    kernel: ExcitationKernel
    policy: Optional[ReroutePolicy] = None
    monte_carlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    sweep: Optional[Tuple[SweepAxis, SweepAxis]] = None
    output: OutputSettings = field(default_factory=OutputSettings)
    document: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def inflow_cutoff(self) -> float:
        """Latest cutoff over the source profiles (0 if none is set)."""
        cutoffs = [p.cutoff for p in self.inflows.values() if p.cutoff is not None]
        return max(cutoffs) if cutoffs else 0.0

    def with_cli_overrides(
        self,
        seed: Optional[int] = None,
        runs: Optional[int] = None,
        out: Optional[str] = None,
        snapshots: Optional[Sequence[float]] = None
    ) -> 'ExperimentConfig':
        """Copy with command-line flags applied on top of the document."""
        mc, output = self.monte_carlo, self.output
        if seed is not None:
            mc = replace(mc, seed=int(seed))
        if runs is not None:
            if runs < 1:
                raise ConfigError(f"--runs must be >= 1, got {runs}")
            mc = replace(mc, runs=int(runs))
        if out is not None:
            output = replace(output, dir=str(out))
        if snapshots is not None:
            output = replace(output, snapshots=tuple(float(t) for t in snapshots))
        return replace(self, monte_carlo=mc, output=output)

    def with_splits(self, splits: Dict[str, float]) -> 'ExperimentConfig':
        """Copy with 1-2 junction splits replaced (junction id -> share to first out-road)."""
        return replace(self, network=self.network.with_overrides(distribution=splits))


def merge_defaults(document: Dict[str, Any], defaults: Dict[str, Any] = DEFAULT_CONFIG) -> Dict[str, Any]:
    """
    Recursively fill missing keys of a config document from the defaults.

    Named collections (inflow profiles, policy, sweep, overrides) are taken whole.
    """
    merged = copy.deepcopy(defaults)
    for key, value in (document or {}).items():
        if key in WHOLE_SECTIONS:
            merged[key] = copy.deepcopy(value)
        elif isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_defaults(value, merged[key])
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_experiment_document(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a config.yaml document."""
    try:
        with open(path, 'r') as f:
            document = yaml.safe_load(f) or {}
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in {path}: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return document


def _section(document: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = document.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"'{name}' must be a mapping")
    return value


def _number(block: Dict[str, Any], key: str, section: str) -> float:
    try:
        return float(block[key])
    except KeyError as e:
        raise ConfigError(f"{section}.{key} is required") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{section}.{key} must be a number, got {block[key]!r}") from e


def split_towards(network: Network, junction_id: str, road_id: Optional[str], value: float,
                  section: str) -> float:
    """Convert a share towards `road_id` into the share towards the junction's first out-road."""
    if junction_id not in network.junctions:
        raise ConfigError(f"{section}: unknown junction {junction_id}")
    junction = network.junctions[junction_id]
    if junction.kind != '1-2':
        raise ConfigError(f"{section}: junction {junction_id} is {junction.kind}, not 1-2")
    if road_id is None or road_id == junction.out_roads[0]:
        return float(value)
    if road_id == junction.out_roads[1]:
        return 1.0 - float(value)
    raise ConfigError(f"{section}: road {road_id} does not leave junction {junction_id}")


def _parse_inflows(document: Dict[str, Any], network: Network, solver: SolverConfig,
                   base_dir: Path) -> Dict[str, InflowProfile]:
    profiles_block = _section(_section(document, 'solver'), 'inflow_profiles')
    profiles: Dict[str, InflowProfile] = {}
    for name, block in profiles_block.items():
        block = dict(block)
        if block.get('type') == 'hourly' and 'counts_file' in block:
            block['counts'] = load_hourly_counts(base_dir / block.pop('counts_file')).tolist()
        profiles[name] = build_inflow(block, solver.horizon)

    inflows: Dict[str, InflowProfile] = {}
    for road_id in network.source_roads:
        name = network.source_profiles.get(road_id)
        if name is None:
            inflows[road_id] = ConstantInflow(0.0)
        elif name not in profiles:
            raise ConfigError(f"solver.inflow_profiles has no profile '{name}' (source road {road_id})")
        else:
            inflows[road_id] = profiles[name]
    return inflows


def _parse_policy(block: Dict[str, Any], network: Network) -> Optional[ReroutePolicy]:
    if not block or not block.get('enabled', False):
        return None
    for key in ('junction', 'watched_road', 'alt_roads', 'flex_alpha'):
        if key not in block:
            raise ConfigError(f"policy.{key} is required when the policy is enabled")
    junction_id = str(block['junction'])
    target = block.get('target_road')
    target = None if target is None else str(target)
    flex = split_towards(network, junction_id, target, _number(block, 'flex_alpha', 'policy'), 'policy')
    base = block.get('base_alpha')
    if base is not None:
        base = split_towards(network, junction_id, target, float(base), 'policy')

    roads = [str(block['watched_road'])] + [str(r) for r in block['alt_roads']]
    for road_id in roads:
        if road_id not in network.roads:
            raise ConfigError(f"policy: unknown road {road_id}")

    return ReroutePolicy(
        junction=junction_id,
        watched_road=roads[0],
        alt_roads=tuple(roads[1:]),
        flex_alpha=flex,
        base_alpha=base,
        cm_threshold=float(block.get('cm_threshold', 0.25)),
        serious_threshold=float(block.get('serious_threshold', 0.8)),
        v_ref=float(block.get('v_ref', 0.5)),
    )


def _parse_sweep(block: Dict[str, Any], network: Network) -> Optional[Tuple[SweepAxis, SweepAxis]]:
    if not block:
        return None
    axes: List[SweepAxis] = []
    for name in ('alpha_1', 'alpha_2'):
        axis = block.get(name)
        if not isinstance(axis, dict) or 'junction' not in axis or 'grid' not in axis:
            raise ConfigError(f"sweep.{name} needs junction and grid")
        grid = tuple(float(v) for v in axis['grid'])
        if not grid:
            raise ConfigError(f"sweep.{name}.grid must not be empty")
        if any(not 0 <= v <= 1 for v in grid):
            raise ConfigError(f"sweep.{name}.grid values must lie in [0, 1]")
        road = None if axis.get('road') is None else str(axis['road'])
        split_towards(network, str(axis['junction']), road, grid[0], f"sweep.{name}")
        axes.append(SweepAxis(str(axis['junction']), grid, road, name))
    return axes[0], axes[1]


def parse_experiment_config(document: Dict[str, Any], base_dir: Union[str, Path] = '.') -> ExperimentConfig:
    """
    Build an ExperimentConfig from a config document.

    Missing keys are taken from DEFAULT_CONFIG. Relative paths resolve against base_dir.

    Raises:
        ConfigError: Unknown schema version, missing keys, values out of range
    """
    base_dir = Path(base_dir)
    version = (document or {}).get('schema_version', CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"Unsupported config schema_version: {version}")
    document = merge_defaults(document)

    solver_block = _section(document, 'solver')
    solver = SolverConfig(
        dx=_number(solver_block, 'dx', 'solver'),
        dt=_number(solver_block, 'dt', 'solver'),
        horizon=_number(solver_block, 'horizon', 'solver'),
    )

    overrides = _section(document, 'overrides')
    network_dir = Path(_section(document, 'networks').get('network_dir', 'networks'))
    if not network_dir.is_absolute():
        network_dir = base_dir / network_dir
    network_ref = document.get('network')
    if not network_ref:
        raise ConfigError("network is required")
    reference = Path(str(network_ref))
    if reference.suffix in ('.yaml', '.yml') and not reference.is_absolute():
        reference = base_dir / reference
    try:
        network = load_network(reference, solver.dx, network_dir, float(overrides.get('capacity_scale', 1.0)))
        network = network.with_overrides(
            distribution={str(k): float(v) for k, v in (overrides.get('distribution') or {}).items()},
            rightway={str(k): float(v) for k, v in (overrides.get('rightway') or {}).items()},
        )
    except NetworkError as e:
        raise ConfigError(f"network '{network_ref}': {e}") from e

    accidents = _section(document, 'accidents')
    risk_fields = ('gamma', 'beta_tilde', 'nu', 'size_rate', 'severity_shape_a', 'severity_shape_b',
                   'max_reduction', 'base_duration', 'duration_rate')
    junction_gamma = accidents.get('junction_gamma')
    risk = AccidentRiskConfig(
        junction_gamma=None if junction_gamma is None else float(junction_gamma),
        **{name: _number(accidents, name, 'accidents') for name in risk_fields},
    )
    kernel = ExcitationKernel(_number(accidents, 'alpha', 'accidents'), _number(accidents, 'beta', 'accidents'))

    mc_block = _section(document, 'monte_carlo')
    monte_carlo = MonteCarloSettings(
        runs=int(mc_block.get('runs', 1)),
        seed=int(mc_block.get('seed', 0)),
        n_jobs=int(mc_block.get('n_jobs', 1)),
        toes_times=tuple(float(t) for t in mc_block.get('toes_times', ())),
        empty_threshold=float(mc_block.get('empty_threshold', 1e-6)),
    )
    if monte_carlo.runs < 1:
        raise ConfigError(f"monte_carlo.runs must be >= 1, got {monte_carlo.runs}")
    if monte_carlo.seed < 0:
        raise ConfigError(f"monte_carlo.seed must be >= 0, got {monte_carlo.seed}")

    out_block = _section(document, 'output')
    output = OutputSettings(
        dir=str(out_block.get('dir', 'results')),
        snapshots=tuple(float(t) for t in out_block.get('snapshots') or ()),
        record_cm=bool(out_block.get('record_cm', False)),
    )

    config = ExperimentConfig(
        network=network,
        solver=solver,
        inflows=_parse_inflows(document, network, solver, base_dir),
        accidents_enabled=bool(accidents.get('enabled', True)),
        risk=risk,
        kernel=kernel,
        policy=_parse_policy(_section(document, 'policy'), network),
        monte_carlo=monte_carlo,
        sweep=_parse_sweep(_section(document, 'sweep'), network),
        output=output,
        document=document,
    )
    logger.info(
        f"Experiment: network={network.name}, T={solver.horizon}, dt={solver.dt}, dx={solver.dx}, "
        f"accidents={'on' if config.accidents_enabled else 'off'}, "
        f"policy={'on' if config.policy else 'off'}, runs={monte_carlo.runs}"
    )
    return config


def load_experiment_config(path: Union[str, Path], base_dir: Union[str, Path] = '.') -> ExperimentConfig:
    """Load and parse a config file; relative paths inside resolve against base_dir."""
    return parse_experiment_config(load_experiment_document(path), base_dir)
