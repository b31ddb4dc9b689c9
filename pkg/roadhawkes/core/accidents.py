"""
Accident sampler for RoadHawkes
Flux-driven background rate, self-excitation position weights, the road/junction
selection measure, the on-road position measure and the accident parameter draws.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from roadhawkes.core.capacity import Accident, AccidentOrigin, CapacityField
from roadhawkes.core.fluxes import JunctionFlux, flux, junction_fluxes
from roadhawkes.core.hawkes import ExcitationKernel
from roadhawkes.core.network import Junction, Network
from roadhawkes.errors import ConfigError, NoPositionAvailableError

logger = logging.getLogger(__name__)

# Upstream traversal stops once the exponential weight falls below this
EXCITATION_CUTOFF = 1e-12


@dataclass(frozen=True)
class AccidentRiskConfig:
    """
    Parameters of the accident measure and the accident parameter distributions.

    Attributes:
        gamma: Road background risk scale
        beta_tilde: Spatial decay rate of the self-excitation weight
        nu: Plateau length behind an accident
        size_rate: Rate of the exponential accident size
        severity_shape_a: First Beta shape of the capacity reduction
        severity_shape_b: Second Beta shape of the capacity reduction
        base_duration: Minimal accident duration
        duration_rate: Rate of the exponential extra duration
        max_reduction: Upper clip of the capacity reduction, below 1
        junction_gamma: If set, replaces every junction's gamma_v
    """
    gamma: float = 0.5
    beta_tilde: float = 24.0
    nu: float = 0.0
    size_rate: float = 20.0
    severity_shape_a: float = 2.66
    severity_shape_b: float = 3.53
    base_duration: float = 1.0
    duration_rate: float = 0.5
    max_reduction: float = 0.99
    junction_gamma: Optional[float] = None

    def __post_init__(self):
        positive = ('beta_tilde', 'size_rate', 'severity_shape_a', 'severity_shape_b', 'duration_rate')
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"accidents.{name} must be positive, got {getattr(self, name)}")
        for name in ('gamma', 'nu', 'base_duration'):
            if getattr(self, name) < 0:
                raise ConfigError(f"accidents.{name} must be >= 0, got {getattr(self, name)}")
        if self.junction_gamma is not None and self.junction_gamma < 0:
            raise ConfigError(f"accidents.junction_gamma must be >= 0, got {self.junction_gamma}")
        if not 0 < self.max_reduction < 1:
            raise ConfigError(f"accidents.max_reduction must lie in (0, 1), got {self.max_reduction}")

    @property
    def excitation_mass(self) -> float:
        """Network total of one accident's position weight, nu + 1 / beta_tilde."""
        return self.nu + 1.0 / self.beta_tilde

    def gamma_v(self, junction: Junction) -> float:
        return junction.gamma_v if self.junction_gamma is None else self.junction_gamma


def road_rates(
    network: Network,
    densities: Mapping[str, np.ndarray],
    capacity: CapacityField,
    gamma: float
) -> Dict[str, float]:
    """Background rate of every road, gamma * sum_cells dx * c * f(rho)."""
    return {
        road_id: gamma * road.dx * float(np.sum(flux(densities[road_id], capacity.effective(network, road_id))))
        for road_id, road in network.roads.items()
    }


def junction_rates(
    network: Network,
    junction_flux: Mapping[str, JunctionFlux],
    config: AccidentRiskConfig
) -> Dict[str, float]:
    """Background rate of every junction, gamma_v * F_v."""
    return {
        junction_id: config.gamma_v(junction) * junction_flux[junction_id].total
        for junction_id, junction in network.junctions.items()
    }


def background_rate(
    network: Network,
    densities: Mapping[str, np.ndarray],
    capacity: CapacityField,
    config: AccidentRiskConfig,
    junction_flux: Optional[Mapping[str, JunctionFlux]] = None
) -> float:
    """
    Flux-driven background accident rate of the whole network.

    Args:
        network: Road network
        densities: road id -> cell densities
        capacity: Current capacity field
        config: Accident parameters
        junction_flux: Junction fluxes of the current state, solved here if omitted

    Returns:
        gamma * sum_e int F_e dx + sum_v gamma_v F_v
    """
    if junction_flux is None:
        junction_flux = junction_fluxes(network, densities, capacity.effective_all(network))
    roads = sum(road_rates(network, densities, capacity, config.gamma).values())
    junctions = sum(junction_rates(network, junction_flux, config).values())
    return roads + junctions


@dataclass(frozen=True)
class ExcitationSegment:
    """
    Stretch [a_road, upper] of one road behind an accident.

    The path distance to the accident at x is offset + (upper - x).
    """
    road: str
    offset: float
    upper: float
    zeta: float
    own: bool


def weight_integral(d_lo: Union[float, np.ndarray], d_hi: Union[float, np.ndarray],
                    nu: float, beta_tilde: float) -> Union[float, np.ndarray]:
    """
    Integral over path distances [d_lo, d_hi] of the weight that is 1 up to nu
    and exp(-beta_tilde * (d - nu)) beyond.
    """
    d_lo = np.asarray(d_lo, dtype=float)
    d_hi = np.asarray(d_hi, dtype=float)
    plateau = np.clip(np.minimum(d_hi, nu) - d_lo, 0.0, None)
    start = np.maximum(d_lo, nu)
    tail = np.where(
        d_hi > start,
        (np.exp(-beta_tilde * (start - nu)) - np.exp(-beta_tilde * (np.maximum(d_hi, start) - nu))) / beta_tilde,
        0.0,
    )
    return plateau + tail


def _segment_window(network: Network, segment: ExcitationSegment, lo: Union[float, np.ndarray],
                    hi: Union[float, np.ndarray], config: AccidentRiskConfig) -> Union[float, np.ndarray]:
    road = network.roads[segment.road]
    lo = np.maximum(lo, road.a)
    hi = np.minimum(hi, segment.upper)
    mass = weight_integral(segment.offset + segment.upper - hi, segment.offset + segment.upper - lo,
                           config.nu, config.beta_tilde)
    return segment.zeta * np.where(hi > lo, mass, 0.0)


def _point_segments(network: Network, road_id: str, position: float, zeta: float,
                    config: AccidentRiskConfig) -> List[ExcitationSegment]:
    road = network.roads[road_id]
    segments = [ExcitationSegment(road_id, 0.0, position, zeta, own=True)]
    for path in network.upstream_map[road_id]:
        offset = (position - road.a) + path.kappa
        if math.exp(-config.beta_tilde * max(offset - config.nu, 0.0)) < EXCITATION_CUTOFF:
            continue
        upstream = network.roads[path.road]
        segments.append(ExcitationSegment(path.road, offset, upstream.b, zeta * path.zeta, own=False))
    return segments


def excitation_segments(network: Network, accident: Accident,
                        config: AccidentRiskConfig) -> Tuple[ExcitationSegment, ...]:
    """
    Road stretches behind an accident carrying its self-excitation weight.

    Branching factors split equally at junctions with two in-roads. The upstream
    factors are then rescaled together so the network total is nu + 1/beta_tilde;
    accidents without upstream roads keep their finite-road total.
    """
    if accident.on_junction:
        junction = network.junctions[accident.junction]
        share = 1.0 / len(junction.in_roads)
        segments: List[ExcitationSegment] = []
        for in_road in junction.in_roads:
            segments.extend(_point_segments(network, in_road, network.roads[in_road].b, share, config))
    else:
        segments = _point_segments(network, accident.road, accident.position, 1.0, config)

    def mass(segment: ExcitationSegment) -> float:
        return float(_segment_window(network, segment, network.roads[segment.road].a, segment.upper, config))

    own = sum(mass(s) for s in segments if s.own)
    upstream = sum(mass(s) for s in segments if not s.own)
    if upstream > 0:
        k = max(config.excitation_mass - own, 0.0) / upstream
        segments = [s if s.own else ExcitationSegment(s.road, s.offset, s.upper, s.zeta * k, False)
                    for s in segments]
    return tuple(segments)


def self_excitation_weight(
    network: Network,
    accident: Accident,
    target: str,
    window: Tuple[float, float],
    config: AccidentRiskConfig,
    segments: Optional[Sequence[ExcitationSegment]] = None
) -> float:
    """
    Self-excitation weight of a past accident integrated over a window of a road.

    Args:
        network: Road network
        accident: The exciting accident
        target: Road id
        window: (lo, hi) within the road interval
        config: Accident parameters
        segments: Precomputed excitation_segments of the accident

    Returns:
        Nonnegative weight, zero downstream of the accident
    """
    if segments is None:
        segments = excitation_segments(network, accident, config)
    lo, hi = window
    return float(sum(_segment_window(network, s, lo, hi, config) for s in segments if s.road == target))


class ExcitationProfile:
    """Time-independent spatial weight of one accident, cached per run."""

    def __init__(self, network: Network, accident: Accident, config: AccidentRiskConfig):
        self.network = network
        self.accident = accident
        self.config = config
        self.segments = excitation_segments(network, accident, config)
        self.road_mass: Dict[str, float] = {}
        for segment in self.segments:
            road = network.roads[segment.road]
            self.road_mass[segment.road] = self.road_mass.get(segment.road, 0.0) + float(
                _segment_window(network, segment, road.a, segment.upper, config))
        self.total = sum(self.road_mass.values())
        self._cells: Dict[str, np.ndarray] = {}

    def cell_weights(self, road_id: str) -> np.ndarray:
        """Weight per cell of a road (unnormalized)."""
        if road_id not in self._cells:
            road = self.network.roads[road_id]
            edges = road.cell_edges
            weights = np.zeros(road.cell_count)
            for segment in self.segments:
                if segment.road == road_id:
                    weights += _segment_window(self.network, segment, edges[:-1], edges[1:], self.config)
            self._cells[road_id] = weights
        return self._cells[road_id]

    def upper_bound(self, road_id: str) -> float:
        """Downstream end of the weighted stretch on a road."""
        return max(s.upper for s in self.segments if s.road == road_id)


ProfileCache = Dict[int, ExcitationProfile]


def _profile(network: Network, accident: Accident, config: AccidentRiskConfig,
             cache: Optional[ProfileCache]) -> ExcitationProfile:
    if cache is None:
        return ExcitationProfile(network, accident, config)
    if accident.index not in cache:
        cache[accident.index] = ExcitationProfile(network, accident, config)
    return cache[accident.index]


def _excitation_factors(accidents: Sequence[Accident], kernel: ExcitationKernel,
                        t: float) -> List[Tuple[Accident, float]]:
    factors = []
    for accident in accidents:
        if accident.start > t:
            continue
        value = kernel.alpha * math.exp(-kernel.beta * (t - accident.start))
        if value > kernel.alpha * EXCITATION_CUTOFF:
            factors.append((accident, value))
    return factors


@dataclass
class IndexMeasure:
    """
    Probability of each road and junction hosting the next accident.

    Attributes:
        labels: ('road', id) or ('junction', id) per entry
        weights: Unnormalized weights
        probabilities: weights / sum(weights)
    """
    labels: List[Tuple[str, str]]
    weights: np.ndarray
    probabilities: np.ndarray

    def as_dict(self) -> Dict[Tuple[str, str], float]:
        return dict(zip(self.labels, self.probabilities.tolist()))


def road_index_measure(
    network: Network,
    densities: Mapping[str, np.ndarray],
    capacity: CapacityField,
    accidents: Sequence[Accident],
    kernel: ExcitationKernel,
    config: AccidentRiskConfig,
    t: float,
    junction_flux: Optional[Mapping[str, JunctionFlux]] = None,
    cache: Optional[ProfileCache] = None
) -> IndexMeasure:
    """
    Measure over roads and junctions for locating a new accident.

    A road gets its background rate plus, for every past accident j, the share
    of j's spatial weight on it times alpha * exp(-beta (t - t_j)). A junction
    gets gamma_v * F_v.

    Raises:
        NoPositionAvailableError: All weights are zero
    """
    if junction_flux is None:
        junction_flux = junction_fluxes(network, densities, capacity.effective_all(network))

    per_road = road_rates(network, densities, capacity, config.gamma)
    for accident, value in _excitation_factors(accidents, kernel, t):
        profile = _profile(network, accident, config, cache)
        if profile.total <= 0:
            continue
        for road_id, mass in profile.road_mass.items():
            per_road[road_id] += value * mass / profile.total

    per_junction = junction_rates(network, junction_flux, config)
    labels = [('road', r) for r in per_road] + [('junction', v) for v in per_junction]
    weights = np.array(list(per_road.values()) + list(per_junction.values()), dtype=float)
    total = float(weights.sum())
    if not total > 0:
        raise NoPositionAvailableError(f"Accident measure has zero total weight at t={t:.4f}")
    return IndexMeasure(labels, weights, weights / total)


@dataclass
class CellWeights:
    """
    Per-cell weight of the position measure on one road.

    Attributes:
        background: Flux part per cell
        excitation: Excitation part per cell, one row per contributing accident
        parents: Accident index of each excitation row
    """
    background: np.ndarray
    excitation: np.ndarray
    parents: List[int] = field(default_factory=list)

    @property
    def total(self) -> np.ndarray:
        return self.background + self.excitation.sum(axis=0)


def position_cell_weights(
    network: Network,
    road_id: str,
    densities: Mapping[str, np.ndarray],
    capacity: CapacityField,
    accidents: Sequence[Accident],
    kernel: ExcitationKernel,
    config: AccidentRiskConfig,
    t: float,
    cache: Optional[ProfileCache] = None
) -> CellWeights:
    """Background and excitation weight of every cell of one road."""
    road = network.roads[road_id]
    background = config.gamma * road.dx * flux(densities[road_id], capacity.effective(network, road_id))
    rows, parents = [], []
    for accident, value in _excitation_factors(accidents, kernel, t):
        profile = _profile(network, accident, config, cache)
        if profile.road_mass.get(road_id, 0.0) <= 0:
            continue
        rows.append(value * profile.cell_weights(road_id) / profile.total)
        parents.append(accident.index)
    excitation = np.vstack(rows) if rows else np.zeros((0, road.cell_count))
    return CellWeights(np.asarray(background, dtype=float), excitation, parents)


def position_distribution(weights: CellWeights) -> np.ndarray:
    """Normalized cell probabilities, uniform when the road carries no weight."""
    total = weights.total
    mass = float(total.sum())
    if mass > 0:
        return total / mass
    return np.full(total.shape, 1.0 / total.size)


@dataclass(frozen=True)
class PositionDraw:
    """Sampled accident position with its attribution."""
    position: float
    cell: int
    origin: AccidentOrigin
    parent: Optional[int] = None


def _interior(lo: float, hi: float, u: float) -> float:
    return lo + (hi - lo) * (u if u > 0 else 0.5)


def position_on_road(
    network: Network,
    road_id: str,
    densities: Mapping[str, np.ndarray],
    capacity: CapacityField,
    accidents: Sequence[Accident],
    kernel: ExcitationKernel,
    config: AccidentRiskConfig,
    t: float,
    rng: np.random.Generator,
    cache: Optional[ProfileCache] = None
) -> PositionDraw:
    """
    Sample an accident position on a road.

    The cell is drawn by discrete inverse transform over the cell weights, the
    origin from the split of that cell's weight, and the position uniformly
    inside the part of the cell carrying the chosen weight.
    """
    road = network.roads[road_id]
    weights = position_cell_weights(network, road_id, densities, capacity, accidents, kernel, config, t, cache)
    total = weights.total
    mass = float(total.sum())

    if not mass > 0:
        logger.warning(f"Road {road_id} carries no accident weight at t={t:.4f}, using a uniform position")
        position = _interior(road.a, road.b, rng.random())
        return PositionDraw(position, road.cell_index(position), AccidentOrigin.BACKGROUND)

    cdf = np.cumsum(total) / mass
    cell = min(int(np.searchsorted(cdf, rng.random(), side='right')), road.cell_count - 1)
    while total[cell] <= 0:
        cell -= 1

    lo, hi = road.cell_edges[cell], road.cell_edges[cell + 1]
    split = rng.random() * total[cell]
    if split < weights.background[cell] or not weights.parents:
        return PositionDraw(_interior(lo, hi, rng.random()), cell, AccidentOrigin.BACKGROUND)

    contributions = np.cumsum(weights.excitation[:, cell])
    row = min(int(np.searchsorted(contributions, split - weights.background[cell], side='right')),
              len(weights.parents) - 1)
    parent = weights.parents[row]
    profile = _profile(network, next(a for a in accidents if a.index == parent), config, cache)
    hi = min(hi, profile.upper_bound(road_id))
    return PositionDraw(_interior(lo, hi, rng.random()), cell, AccidentOrigin.SELF_EXCITATION, parent)


def sample_size(rng: np.random.Generator, config: AccidentRiskConfig) -> float:
    """Accident size ~ Exp(size_rate)."""
    return float(rng.exponential(1.0 / config.size_rate))


def sample_severity(rng: np.random.Generator, config: AccidentRiskConfig) -> float:
    """Capacity reduction ~ Beta(a, b) as X / (X + Y) of two Gamma variates, clipped at max_reduction."""
    x = rng.gamma(config.severity_shape_a)
    y = rng.gamma(config.severity_shape_b)
    return float(min(x / (x + y), config.max_reduction))


def sample_duration(rng: np.random.Generator, config: AccidentRiskConfig) -> float:
    """Duration = base_duration + Exp(duration_rate)."""
    return float(config.base_duration + rng.exponential(1.0 / config.duration_rate))


class AccidentGenerator:
    """
    Places and parametrizes new accidents for one simulation run.

    Keeps the spatial excitation profile of every past accident, which does not
    change over time.
    """

    def __init__(self, network: Network, config: AccidentRiskConfig, kernel: ExcitationKernel):
        self.network = network
        self.config = config
        self.kernel = kernel
        self.cache: ProfileCache = {}

    def generate(
        self,
        index: int,
        t: float,
        densities: Mapping[str, np.ndarray],
        capacity: CapacityField,
        accidents: Sequence[Accident],
        junction_flux: Mapping[str, JunctionFlux],
        rng: np.random.Generator
    ) -> Accident:
        """
        Draw location and parameters of an accident starting at t.

        Args:
            index: Index of the new accident in the run's log
            t: Jump time
            densities: Current densities
            capacity: Current capacity field
            accidents: All earlier accidents
            junction_flux: Junction fluxes of the current state
            rng: Accident stream
        """
        measure = road_index_measure(self.network, densities, capacity, accidents, self.kernel,
                                     self.config, t, junction_flux, self.cache)
        cdf = np.cumsum(measure.probabilities)
        pick = min(int(np.searchsorted(cdf, rng.random(), side='right')), len(cdf) - 1)
        while measure.weights[pick] <= 0:
            pick -= 1
        kind, location = measure.labels[pick]

        if kind == 'junction':
            placement = dict(junction=location, origin=AccidentOrigin.JUNCTION)
        else:
            draw = position_on_road(self.network, location, densities, capacity, accidents, self.kernel,
                                    self.config, t, rng, self.cache)
            placement = dict(road=location, position=draw.position, origin=draw.origin, parent=draw.parent)

        accident = Accident(
            index=index,
            size=sample_size(rng, self.config),
            reduction=sample_severity(rng, self.config),
            start=t,
            duration=sample_duration(rng, self.config),
            **placement,
        )
        logger.debug(
            f"Accident #{index} at t={t:.2f}: {kind} {location}, origin={accident.origin.value}, "
            f"s={accident.size:.3f}, c={accident.reduction:.2f}, d={accident.duration:.2f}"
        )
        return accident
