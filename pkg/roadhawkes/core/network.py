"""
Road network for RoadHawkes
Roads with piecewise-constant capacity on a uniform cell grid, 1-1/1-2/2-1 junctions
and the precomputed upstream paths used by the accident position measure.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import networkx as nx
import numpy as np
import yaml

from roadhawkes.errors import ConfigError, NetworkError

logger = logging.getLogger(__name__)

NETWORK_SCHEMA_VERSION = 1

# Tolerance for interval arithmetic on road coordinates
GRID_TOL = 1e-9


@dataclass(frozen=True)
class Road:
    """
    A road [a, b] discretized into equal cells.

    Attributes:
        id: Road identifier
        a: Left (upstream) end
        b: Right (downstream) end
        capacity_pieces: (start, value) pairs of the piecewise-constant capacity, sorted by start
        cell_count: Number of cells, (b - a) / cell_count equals the global dx
        initial_density: Initial density per cell
    """
    id: str
    a: float
    b: float
    capacity_pieces: Tuple[Tuple[float, float], ...]
    cell_count: int
    initial_density: Tuple[float, ...]

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def dx(self) -> float:
        return self.length / self.cell_count

    @cached_property
    def cell_edges(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.cell_count + 1)

    @cached_property
    def cell_centers(self) -> np.ndarray:
        return self.a + self.dx * (np.arange(self.cell_count) + 0.5)

    def capacity_at(self, x: Union[float, np.ndarray]) -> np.ndarray:
        """Road capacity c_road evaluated at position(s) x."""
        starts = np.array([start for start, _ in self.capacity_pieces])
        values = np.array([value for _, value in self.capacity_pieces])
        idx = np.searchsorted(starts, np.asarray(x, dtype=float), side='right') - 1
        return values[np.clip(idx, 0, len(values) - 1)]

    @cached_property
    def capacity_cells(self) -> np.ndarray:
        return self.capacity_at(self.cell_centers)

    def initial_densities(self) -> np.ndarray:
        return np.array(self.initial_density, dtype=float)

    def cell_index(self, x: float) -> int:
        """Index of the cell holding position x (right end belongs to the last cell)."""
        k = int(math.floor((x - self.a) / self.dx))
        return min(max(k, 0), self.cell_count - 1)


@dataclass(frozen=True)
class Junction:
    """
    Junction joining one or two in-roads with one or two out-roads.

    Attributes:
        id: Junction identifier
        in_roads: Ordered ingoing road ids
        out_roads: Ordered outgoing road ids
        distribution: Share of the in-flow sent to the first out-road (1-2 junctions)
        rightway: Priority share q of the first in-road (2-1 junctions)
        gamma_v: Junction accident-risk scale
    """
    id: str
    in_roads: Tuple[str, ...]
    out_roads: Tuple[str, ...]
    distribution: Optional[float] = None
    rightway: Optional[float] = None
    gamma_v: float = 0.0

    @property
    def kind(self) -> str:
        return f"{len(self.in_roads)}-{len(self.out_roads)}"

    @property
    def distribution_row(self) -> Tuple[float, float]:
        """Row (A_11, A_12) of the distribution matrix."""
        return (self.distribution, 1.0 - self.distribution)


@dataclass(frozen=True)
class UpstreamPath:
    """
    One road reached by walking upstream from another.

    Attributes:
        road: Upstream road id
        kappa: Summed lengths of the roads strictly between this road and the origin road
        zeta: Product of the per-junction branching splits along the path
    """
    road: str
    kappa: float
    zeta: float


@dataclass
class Network:
    """
    Directed road network.

    Roads and junctions are read-only after build_network; runs share one instance.
    Per-run distribution and rightway changes live in the simulation state.
    """
    name: str
    dx: float
    roads: Dict[str, Road]
    junctions: Dict[str, Junction]
    source_roads: Tuple[str, ...]
    sink_roads: Tuple[str, ...]
    upstream_map: Dict[str, Tuple[UpstreamPath, ...]]
    source_profiles: Dict[str, str] = field(default_factory=dict)
    node_labels: Dict[str, str] = field(default_factory=dict)
    graph: nx.DiGraph = field(default_factory=nx.DiGraph, repr=False)

    def __post_init__(self):
        self._start_junction: Dict[str, Junction] = {}
        self._end_junction: Dict[str, Junction] = {}
        for junction in self.junctions.values():
            for road_id in junction.in_roads:
                self._end_junction[road_id] = junction
            for road_id in junction.out_roads:
                self._start_junction[road_id] = junction

    def start_junction(self, road_id: str) -> Optional[Junction]:
        """Junction feeding the upstream end of a road, if any."""
        return self._start_junction.get(road_id)

    def end_junction(self, road_id: str) -> Optional[Junction]:
        """Junction at the downstream end of a road, if any."""
        return self._end_junction.get(road_id)

    @property
    def road_ids(self) -> List[str]:
        return list(self.roads)

    @property
    def junction_ids(self) -> List[str]:
        return list(self.junctions)

    @property
    def total_length(self) -> float:
        return sum(road.length for road in self.roads.values())

    @property
    def max_road_capacity(self) -> float:
        return max(value for road in self.roads.values() for _, value in road.capacity_pieces)

    def initial_densities(self) -> Dict[str, np.ndarray]:
        return {road_id: road.initial_densities() for road_id, road in self.roads.items()}

    def with_overrides(
        self,
        distribution: Optional[Dict[str, float]] = None,
        rightway: Optional[Dict[str, float]] = None
    ) -> 'Network':
        """
        Copy of the network with junction parameters replaced.

        Args:
            distribution: junction id -> share towards the first out-road
            rightway: junction id -> priority share of the first in-road

        Returns:
            New Network sharing the road objects
        """
        junctions = dict(self.junctions)
        for junction_id, value in (distribution or {}).items():
            junction = self._require_junction(junction_id)
            if junction.kind != '1-2':
                raise NetworkError(f"Junction {junction_id} is {junction.kind}, distribution needs 1-2")
            _check_unit(value, f"distribution of junction {junction_id}")
            junctions[junction_id] = replace(junctions[junction_id], distribution=float(value))
        for junction_id, value in (rightway or {}).items():
            junction = self._require_junction(junction_id)
            if junction.kind != '2-1':
                raise NetworkError(f"Junction {junction_id} is {junction.kind}, rightway needs 2-1")
            _check_unit(value, f"rightway of junction {junction_id}")
            junctions[junction_id] = replace(junctions[junction_id], rightway=float(value))
        return replace(self, junctions=junctions)

    def _require_junction(self, junction_id: str) -> Junction:
        if junction_id not in self.junctions:
            raise NetworkError(f"Unknown junction: {junction_id}")
        return self.junctions[junction_id]


def _check_unit(value: float, what: str) -> None:
    if not 0.0 <= float(value) <= 1.0:
        raise NetworkError(f"{what} must lie in [0, 1], got {value}")


def _parse_capacity(raw: Any, a: float, b: float, road_id: str, scale: float) -> Tuple[Tuple[float, float], ...]:
    if isinstance(raw, (int, float)):
        pieces = [(a, float(raw))]
    elif isinstance(raw, list) and raw:
        pieces = []
        for piece in raw:
            try:
                pieces.append((float(piece['start']), float(piece['value'])))
            except (KeyError, TypeError) as e:
                raise ConfigError(f"roads[{road_id}].capacity: each piece needs start and value") from e
        pieces.sort()
        if abs(pieces[0][0] - a) > GRID_TOL:
            raise NetworkError(f"Road {road_id}: first capacity piece must start at {a}")
        if any(not a - GRID_TOL <= start < b for start, _ in pieces):
            raise NetworkError(f"Road {road_id}: capacity piece start outside [{a}, {b})")
    else:
        raise ConfigError(f"roads[{road_id}].capacity must be a number or a list of pieces")

    pieces = [(start, value * scale) for start, value in pieces]
    if any(value <= 0 or not math.isfinite(value) for _, value in pieces):
        raise NetworkError(f"Road {road_id}: capacity must be strictly positive and finite")
    return tuple(pieces)


def _parse_road(raw: Dict[str, Any], dx: float, capacity_scale: float) -> Road:
    if 'id' not in raw:
        raise ConfigError("roads[].id is required")
    road_id = str(raw['id'])

    if 'interval' in raw:
        a, b = (float(v) for v in raw['interval'])
    elif 'length' in raw:
        a, b = 0.0, float(raw['length'])
    else:
        raise ConfigError(f"roads[{road_id}] needs interval or length")
    if not b - a > 0:
        raise NetworkError(f"Road {road_id}: interval must satisfy a < b, got [{a}, {b}]")

    cell_count = int(round((b - a) / dx))
    if cell_count < 1 or abs(cell_count * dx - (b - a)) > GRID_TOL * max(1.0, b - a):
        raise NetworkError(f"Road {road_id}: length {b - a} is not a multiple of dx={dx}")
    if 'cells' in raw and int(raw['cells']) != cell_count:
        raise NetworkError(f"Road {road_id}: cells={raw['cells']} does not match length/dx={cell_count}")

    capacity = _parse_capacity(raw.get('capacity', 1.0), a, b, road_id, capacity_scale)

    density = raw.get('initial_density', 0.0)
    if isinstance(density, (int, float)):
        densities = (float(density),) * cell_count
    else:
        densities = tuple(float(v) for v in density)
        if len(densities) != cell_count:
            raise NetworkError(f"Road {road_id}: {len(densities)} initial densities for {cell_count} cells")
    if any(not 0.0 <= v <= 1.0 for v in densities):
        raise NetworkError(f"Road {road_id}: initial densities must lie in [0, 1]")

    return Road(road_id, a, b, capacity, cell_count, densities)


def _parse_junction(raw: Dict[str, Any], roads: Dict[str, Road]) -> Junction:
    if 'id' not in raw:
        raise ConfigError("junctions[].id is required")
    junction_id = str(raw['id'])
    in_roads = tuple(str(r) for r in raw.get('in', []))
    out_roads = tuple(str(r) for r in raw.get('out', []))

    for road_id in in_roads + out_roads:
        if road_id not in roads:
            raise NetworkError(f"Junction {junction_id} references unknown road {road_id}")
    if len(in_roads) * len(out_roads) not in (1, 2) or not in_roads or not out_roads:
        raise NetworkError(
            f"Junction {junction_id}: {len(in_roads)}-{len(out_roads)} junctions are not supported "
            f"(only 1-1, 1-2, 2-1)"
        )

    distribution = None
    if len(out_roads) == 2:
        row = raw.get('distribution')
        if row is None:
            raise ConfigError(f"junctions[{junction_id}].distribution is required for 1-2 junctions")
        if isinstance(row, (int, float)):
            row = [float(row), 1.0 - float(row)]
        row = [float(v) for v in row]
        if len(row) != 2 or any(v < 0 for v in row) or abs(sum(row) - 1.0) > 1e-12:
            raise NetworkError(f"Junction {junction_id}: distribution row {row} is not stochastic")
        distribution = row[0]

    rightway = None
    if len(in_roads) == 2:
        rightway = float(raw.get('rightway', 0.5))
        _check_unit(rightway, f"rightway of junction {junction_id}")

    gamma_v = float(raw.get('gamma_v', 0.0))
    if gamma_v < 0:
        raise NetworkError(f"Junction {junction_id}: gamma_v must be >= 0")

    return Junction(junction_id, in_roads, out_roads, distribution, rightway, gamma_v)


def _upstream_paths(road_id: str, roads: Dict[str, Road],
                    start_junction_of: Dict[str, Junction]) -> Tuple[UpstreamPath, ...]:
    """Every upstream road reachable from road_id, one entry per path."""
    paths: List[UpstreamPath] = []
    stack = [(road_id, 0.0, 1.0)]
    while stack:
        current, kappa, zeta = stack.pop()
        junction = start_junction_of.get(current)
        if junction is None:
            continue
        split = 1.0 / len(junction.in_roads)
        offset = kappa if current == road_id else kappa + roads[current].length
        for upstream in junction.in_roads:
            path = UpstreamPath(upstream, offset, zeta * split)
            paths.append(path)
            stack.append((upstream, offset, zeta * split))
    paths.sort(key=lambda p: (p.kappa, p.road))
    return tuple(paths)


def build_network(config: Dict[str, Any], dx: float, capacity_scale: float = 1.0) -> Network:
    """
    Build a Network from a network document.

    Args:
        config: Parsed network document (see networks/diamond.yaml)
        dx: Global cell width
        capacity_scale: Factor applied to every road capacity

    Returns:
        Network with upstream paths precomputed
    """
    if not isinstance(config, dict):
        raise ConfigError("Network document must be a mapping")
    version = config.get('schema_version', NETWORK_SCHEMA_VERSION)
    if version != NETWORK_SCHEMA_VERSION:
        raise ConfigError(f"Unsupported network schema_version: {version}")
    if dx <= 0:
        raise ConfigError(f"solver.dx must be positive, got {dx}")
    if capacity_scale <= 0:
        raise ConfigError(f"overrides.capacity_scale must be positive, got {capacity_scale}")

    raw_roads = config.get('roads')
    if not raw_roads:
        raise ConfigError("Network document needs at least one road")

    roads: Dict[str, Road] = {}
    for raw in raw_roads:
        road = _parse_road(raw, dx, capacity_scale)
        if road.id in roads:
            raise NetworkError(f"Duplicate road id: {road.id}")
        roads[road.id] = road

    junctions: Dict[str, Junction] = {}
    start_junction_of: Dict[str, Junction] = {}
    end_junction_of: Dict[str, Junction] = {}
    for raw in config.get('junctions') or []:
        junction = _parse_junction(raw, roads)
        if junction.id in junctions:
            raise NetworkError(f"Duplicate junction id: {junction.id}")
        for road_id in junction.in_roads:
            if road_id in end_junction_of:
                raise NetworkError(f"Road {road_id} ends at two junctions")
            end_junction_of[road_id] = junction
        for road_id in junction.out_roads:
            if road_id in start_junction_of:
                raise NetworkError(f"Road {road_id} starts at two junctions")
            start_junction_of[road_id] = junction
        junctions[junction.id] = junction

    graph = nx.DiGraph()
    graph.add_nodes_from(roads)
    for junction in junctions.values():
        for in_road in junction.in_roads:
            for out_road in junction.out_roads:
                graph.add_edge(in_road, out_road, junction=junction.id)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        raise NetworkError(f"Network contains a cycle: {[edge[0] for edge in cycle]}")

    source_roads = tuple(r for r in roads if r not in start_junction_of)
    sink_roads = tuple(r for r in roads if r not in end_junction_of)

    source_profiles: Dict[str, str] = {}
    node_labels: Dict[str, str] = {}
    for raw in config.get('sources') or []:
        road_id = str(raw.get('road'))
        if road_id not in source_roads:
            raise NetworkError(f"Source road {road_id} is not a road with a free upstream end")
        if 'profile' in raw:
            source_profiles[road_id] = str(raw['profile'])
        if 'node' in raw:
            node_labels[str(raw['node'])] = road_id
    for raw in config.get('sinks') or []:
        road_id = str(raw.get('road'))
        if road_id not in sink_roads:
            raise NetworkError(f"Sink road {road_id} is not a road with a free downstream end")
        if 'node' in raw:
            node_labels[str(raw['node'])] = road_id

    upstream_map = {
        road_id: _upstream_paths(road_id, roads, start_junction_of)
        for road_id in roads
    }

    network = Network(
        name=str(config.get('name', 'network')),
        dx=dx,
        roads=roads,
        junctions=junctions,
        source_roads=source_roads,
        sink_roads=sink_roads,
        upstream_map=upstream_map,
        source_profiles=source_profiles,
        node_labels=node_labels,
        graph=graph,
    )
    logger.info(
        f"Network '{network.name}' built: {len(roads)} roads, {len(junctions)} junctions, "
        f"sources={list(source_roads)}, sinks={list(sink_roads)}"
    )
    return network


def _resolve_network_path(name_or_path: Union[str, Path], network_dir: Union[str, Path]) -> Path:
    path = Path(name_or_path)
    if path.suffix in ('.yaml', '.yml') and path.exists():
        return path
    candidate = Path(network_dir) / f"{name_or_path}.yaml"
    if candidate.exists():
        return candidate
    if path.exists():
        return path
    raise ConfigError(f"Network not found: {name_or_path} (searched {network_dir})")


def load_network(
    name_or_path: Union[str, Path],
    dx: float,
    network_dir: Union[str, Path] = 'networks',
    capacity_scale: float = 1.0
) -> Network:
    """
    Load a network document by bare name (from network_dir) or by path.

    Args:
        name_or_path: e.g. 'diamond' or 'networks/diamond.yaml'
        dx: Global cell width
        network_dir: Directory searched for bare names
        capacity_scale: Factor applied to every road capacity

    Returns:
        Built Network
    """
    path = _resolve_network_path(name_or_path, network_dir)
    try:
        with open(path, 'r') as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in network document {path}: {e}") from e
    logger.info(f"Loading network from {path}")
    return build_network(document, dx, capacity_scale)


def list_available_networks(network_dir: Union[str, Path] = 'networks') -> List[str]:
    """Get list of network document names in network_dir."""
    directory = Path(network_dir)
    if not directory.exists():
        return []
    return sorted(p.stem for p in directory.glob('*.yaml'))
