"""Sine-cosine population search over a box, plus an exhaustive grid scan."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import itertools
import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import OptimizeResult

from .const import DEFAULT_A, DEFAULT_AGENTS, DEFAULT_ITERATIONS, ORACLE_MAX_DIMS
from .errors import ConfigurationError, OracleRefused, RisVlcError

_LOGGER: logging.Logger = logging.getLogger(__package__)

Fitness = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class Dimension:
    name: str
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ConfigurationError(
                f"Dimension {self.name}: lower {self.lower} must be below upper {self.upper}"
            )


@dataclass(frozen=True)
class SearchSpace:
    """Axis-aligned box of named decision variables."""

    dims: tuple[Dimension, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        if not self.dims:
            raise ConfigurationError("A search space needs at least one dimension")

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    @property
    def lower(self) -> np.ndarray:
        return np.array([d.lower for d in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([d.upper for d in self.dims])

    @property
    def size(self) -> int:
        return len(self.dims)

    def clip(self, positions: np.ndarray) -> np.ndarray:
        return np.clip(positions, self.lower, self.upper)


@dataclass
class SearchState:
    """Population, fitness and destination point of one run."""

    agents: np.ndarray
    fitness: np.ndarray
    destination: np.ndarray
    destination_fitness: float
    rng: np.random.Generator
    t: int = 0
    a: float = DEFAULT_A
    iterations: int = DEFAULT_ITERATIONS
    evaluations: int = 0
    trace: list[float] = field(default_factory=list)
    exploration_counts: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class SearchResult:
    best_position: np.ndarray
    best_fitness: float
    trace: list[float]
    evaluations: int
    exploration_counts: list[int]


def _safe_fitness(objective: Fitness, position: np.ndarray) -> float:
    try:
        value = float(objective(position))
    except (RisVlcError, ArithmeticError, ValueError) as ex:
        _LOGGER.debug("Objective failed at %s: %s", position, ex)
        return math.nan
    if not math.isfinite(value):
        _LOGGER.debug("Objective returned %s at %s", value, position)
        return math.nan
    return value


def _best(fitness: np.ndarray) -> Optional[int]:
    if np.all(np.isnan(fitness)):
        return None
    # nanargmax keeps the first of several equal maxima.
    return int(np.nanargmax(fitness))


def r1_schedule(t: int, a: float, iterations: int) -> float:
    """Step amplitude decaying linearly from ``a`` at t=0 to 0 at t=T."""
    return a - t * a / iterations


def initialize(
    space: SearchSpace,
    n_agents: int,
    rng: np.random.Generator,
    objective: Fitness,
    a: float = DEFAULT_A,
    iterations: int = DEFAULT_ITERATIONS,
) -> SearchState:
    """Scatter agents uniformly over the box and pick the fittest."""
    if n_agents < 1:
        raise ConfigurationError("At least one search agent is required")
    lower, upper = space.lower, space.upper
    agents = lower + rng.random((n_agents, space.size)) * (upper - lower)
    fitness = np.array([_safe_fitness(objective, agent) for agent in agents])
    best = _best(fitness)
    if best is None:
        destination, destination_fitness = agents[0].copy(), -math.inf
    else:
        destination, destination_fitness = agents[best].copy(), float(fitness[best])
    return SearchState(
        agents=agents,
        fitness=fitness,
        destination=destination,
        destination_fitness=destination_fitness,
        rng=rng,
        a=a,
        iterations=iterations,
        evaluations=n_agents,
        trace=[destination_fitness],
    )


def update_agents(
    state: SearchState, space: SearchSpace, objective: Fitness
) -> SearchState:
    """One sine-cosine move of every agent, then a synchronous destination update.

    Random draws come from ``state.rng`` in the order r2, r3, r4, each of shape
    (agents, dims). Coordinates leaving the box are clamped to the bound.
    The step amplitude r1 is taken at the current iteration ``state.t``, so the
    first move uses ``a`` and the last one ``a / T``.
    """
    r1 = r1_schedule(state.t, state.a, state.iterations)
    shape = state.agents.shape
    r2 = state.rng.uniform(0.0, 2 * math.pi, shape)
    r3 = state.rng.uniform(0.0, 2.0, shape)
    r4 = state.rng.random(shape)

    multiplier = r1 * np.where(r4 < 0.5, np.sin(r2), np.cos(r2))
    step = np.abs(r3 * state.destination - state.agents)
    moved = space.clip(state.agents + multiplier * step)

    agents = state.agents.copy()
    fitness = state.fitness.copy()
    for n, position in enumerate(moved):
        value = _safe_fitness(objective, position)
        if math.isnan(value):
            fitness[n] = math.nan
        else:
            agents[n] = position
            fitness[n] = value

    destination, destination_fitness = state.destination, state.destination_fitness
    best = _best(fitness)
    if best is not None and fitness[best] > destination_fitness:
        destination, destination_fitness = agents[best].copy(), float(fitness[best])

    return replace(
        state,
        agents=agents,
        fitness=fitness,
        destination=destination,
        destination_fitness=destination_fitness,
        t=state.t + 1,
        evaluations=state.evaluations + shape[0],
        trace=state.trace + [destination_fitness],
        exploration_counts=state.exploration_counts
        + [int(np.count_nonzero(np.abs(multiplier) > 1))],
    )


def run(
    space: SearchSpace,
    objective: Fitness,
    n_agents: int = DEFAULT_AGENTS,
    iterations: int = DEFAULT_ITERATIONS,
    a: float = DEFAULT_A,
    rng: Optional[np.random.Generator] = None,
) -> SearchResult:
    """Initialise, then apply ``iterations`` updates; evaluates N*(T+1) times."""
    if iterations < 1:
        raise ConfigurationError("At least one iteration is required")
    rng = rng if rng is not None else np.random.default_rng()
    state = initialize(space, n_agents, rng, objective, a=a, iterations=iterations)
    while state.t < iterations:
        state = update_agents(state, space, objective)
    return SearchResult(
        best_position=state.destination,
        best_fitness=state.destination_fitness,
        trace=state.trace,
        evaluations=state.evaluations,
        exploration_counts=state.exploration_counts,
    )


class SineCosineOptimizer:
    """Sine-cosine optimizer with fixed population size and schedule."""

    def __init__(
        self,
        agents: int = DEFAULT_AGENTS,
        iterations: int = DEFAULT_ITERATIONS,
        a: float = DEFAULT_A,
    ):
        self.agents = agents
        self.iterations = iterations
        self.a = a

    @property
    def agents(self) -> int:
        return self._agents

    @agents.setter
    def agents(self, agents: int):
        if not isinstance(agents, int) or agents < 1:
            raise ConfigurationError("`agents` should be a positive integer")
        self._agents = agents

    @property
    def iterations(self) -> int:
        return self._iterations

    @iterations.setter
    def iterations(self, iterations: int):
        if not isinstance(iterations, int) or iterations < 1:
            raise ConfigurationError("`iterations` should be a positive integer")
        self._iterations = iterations

    @property
    def a(self) -> float:
        return self._a

    @a.setter
    def a(self, a: float):
        if not isinstance(a, (float, int)) or a <= 0:
            raise ConfigurationError("`a` should be a positive number")
        self._a = float(a)

    @property
    def evaluations(self) -> int:
        """Objective evaluations spent by one run."""
        return self.agents * (self.iterations + 1)

    def optimize(
        self, space: SearchSpace, objective: Fitness, rng: np.random.Generator
    ) -> SearchResult:
        result = run(space, objective, self.agents, self.iterations, self.a, rng)
        _LOGGER.debug(
            "Search over %s finished at %s with fitness %s",
            space.names,
            result.best_position,
            result.best_fitness,
        )
        return result


def grid_search(
    space: SearchSpace,
    objective: Fitness,
    resolution: Sequence[int],
    max_dims: int = ORACLE_MAX_DIMS,
) -> OptimizeResult:
    """Evaluate every point of a Cartesian grid over the box.

    The last dimension varies fastest; the first strict maximum wins. A single
    point on a dimension sits at its lower bound.
    """
    if space.size > max_dims:
        raise OracleRefused(
            f"Grid over {space.size} dimensions exceeds the limit of {max_dims}"
        )
    if len(resolution) != space.size or min(resolution) < 1:
        raise ConfigurationError(
            f"Need {space.size} positive grid counts, got {list(resolution)}"
        )
    axes = [
        np.linspace(d.lower, d.upper, n) if n > 1 else np.array([d.lower])
        for d, n in zip(space.dims, resolution)
    ]
    best_x, best_fun, nfev = None, math.nan, 0
    for point in itertools.product(*axes):
        position = np.array(point)
        value = _safe_fitness(objective, position)
        nfev += 1
        if math.isnan(value):
            continue
        if best_x is None or value > best_fun:
            best_x, best_fun = position, value
    if best_x is None:
        best_x = np.array([axis[0] for axis in axes])
    _LOGGER.info("Grid of %s points done, best %s at %s", nfev, best_fun, best_x)
    return OptimizeResult(
        x=best_x, fun=best_fun, nfev=nfev, success=True, status=0, message="Grid complete"
    )
