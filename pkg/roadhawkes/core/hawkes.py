"""
Hawkes process for RoadHawkes
Linear Hawkes process with exponential kernel and an externally supplied,
time-varying background rate. Jumps are sampled once per time step.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from roadhawkes.errors import ConfigError, StepTooCoarseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExcitationKernel:
    """
    Exponential excitation kernel alpha * exp(-beta * t).

    Attributes:
        alpha: Jump amplitude, 0 disables self-excitation
        beta: Decay rate
    """
    alpha: float
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ConfigError(f"accidents.beta must be positive, got {self.beta}")
        if self.alpha < 0:
            raise ConfigError(f"accidents.alpha must be >= 0, got {self.alpha}")
        if self.alpha >= self.beta:
            raise ConfigError(
                f"accidents.alpha ({self.alpha}) must be smaller than accidents.beta ({self.beta}), "
                f"otherwise the process explodes"
            )

    def __call__(self, lag: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.alpha * np.exp(-self.beta * lag)


@dataclass(frozen=True)
class HawkesState:
    """
    Jump history plus the running excitation sum.

    Attributes:
        jump_times: Past jump times, nondecreasing
        accumulator: sum_j alpha * exp(-beta * (t_now - t_j))
        t_now: Current time
    """
    jump_times: Tuple[float, ...] = ()
    accumulator: float = 0.0
    t_now: float = 0.0

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)


def conditional_intensity(state: HawkesState, kernel: ExcitationKernel, background: float) -> float:
    """Background rate plus the excitation of past jumps."""
    return background + state.accumulator


def advance(state: HawkesState, kernel: ExcitationKernel, dt: float) -> HawkesState:
    """Move the clock forward by dt, decaying the accumulator."""
    return replace(
        state,
        accumulator=state.accumulator * math.exp(-kernel.beta * dt),
        t_now=state.t_now + dt,
    )


def step_sample(
    state: HawkesState,
    kernel: ExcitationKernel,
    intensity: float,
    dt: float,
    u: float
) -> Tuple[bool, HawkesState]:
    """
    Per-step Bernoulli rule: a jump happens at t_now iff u <= dt * intensity.

    Args:
        state: Current state
        kernel: Excitation kernel
        intensity: Conditional intensity at t_now
        dt: Time step
        u: Uniform(0, 1) draw

    Returns:
        (jumped, new state)

    Raises:
        StepTooCoarseError: dt * intensity >= 1
    """
    p = dt * intensity
    if p >= 1.0:
        raise StepTooCoarseError(
            f"dt * intensity = {p:.4f} >= 1 at t={state.t_now:.4f}; reduce solver.dt"
        )
    if intensity <= 0.0 or u > p:
        return False, state
    return True, replace(
        state,
        jump_times=state.jump_times + (state.t_now,),
        accumulator=state.accumulator + kernel.alpha,
    )


def direct_intensity(jump_times: Sequence[float], kernel: ExcitationKernel, t: float) -> float:
    """Excitation sum evaluated term by term over jumps at or before t."""
    times = np.asarray(jump_times, dtype=float)
    times = times[times <= t]
    return float(np.sum(kernel(t - times)))


def branching_ratio(kernel: ExcitationKernel) -> float:
    """Expected number of direct offspring per jump, alpha / beta."""
    return kernel.alpha / kernel.beta


def stationary_mean(lambda_inf: float, kernel: ExcitationKernel) -> float:
    """Long-run mean intensity under a background rate converging to lambda_inf."""
    return lambda_inf / (1.0 - branching_ratio(kernel))


@dataclass
class HawkesPaths:
    """
    Batch of independently simulated paths.

    Attributes:
        jump_times: One array of jump times per path
        mean_intensity: Time-averaged conditional intensity per path
    """
    jump_times: List[np.ndarray] = field(default_factory=list)
    mean_intensity: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def gaps(self) -> np.ndarray:
        """Intermediate times of all paths, concatenated."""
        return np.concatenate([np.diff(times) for times in self.jump_times]) if self.jump_times else np.zeros(0)


def simulate_paths(
    kernel: ExcitationKernel,
    background: Union[float, Callable[[float], float]],
    horizon: float,
    dt: float,
    rng: np.random.Generator,
    n_paths: int = 1,
    average_from: float = 0.0
) -> HawkesPaths:
    """
    Simulate many paths at once with the per-step rule.

    Args:
        kernel: Excitation kernel
        background: Constant rate or function of time
        horizon: Simulated time span [0, horizon)
        dt: Time step
        rng: Random generator, one uniform per path and step
        n_paths: Number of independent paths
        average_from: Start of the window used for mean_intensity

    Returns:
        HawkesPaths
    """
    n_steps = int(round(horizon / dt))
    decay = math.exp(-kernel.beta * dt)
    accumulator = np.zeros(n_paths)
    intensity_sum = np.zeros(n_paths)
    averaged_steps = 0
    jumps: List[List[float]] = [[] for _ in range(n_paths)]

    for step in range(n_steps):
        t = step * dt
        bg = background(t) if callable(background) else background
        intensity = bg + accumulator
        p = dt * intensity
        if np.any(p >= 1.0):
            raise StepTooCoarseError(f"dt * intensity = {p.max():.4f} >= 1 at t={t:.4f}")
        if t >= average_from:
            intensity_sum += intensity
            averaged_steps += 1
        fired = rng.random(n_paths) <= p
        fired &= intensity > 0
        if fired.any():
            for path in np.flatnonzero(fired):
                jumps[path].append(t)
            accumulator[fired] += kernel.alpha
        accumulator *= decay

    logger.debug(f"Simulated {n_paths} Hawkes paths over {n_steps} steps")
    return HawkesPaths(
        jump_times=[np.array(times) for times in jumps],
        mean_intensity=intensity_sum / max(averaged_steps, 1),
    )
