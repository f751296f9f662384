"""Binary-encoded NSGA-II minimizing (life-cycle cost, risk).

The initial population always contains the all-zeros baseline and the
all-ones maximum-intervention genomes. Randomness comes from a single
numpy PCG64 stream, so a fixed seed reproduces the whole trajectory
bit-for-bit across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import ConfigError, InputError

__all__ = [
    "GaConfig",
    "Individual",
    "Evaluator",
    "initialize_population",
    "dominates",
    "fast_nondominated_sort",
    "crowding_distance",
    "evolve",
    "run",
]


@dataclass(frozen=True)
class GaConfig:
    population: int
    generations: int
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # defaults to 1 / n_zones
    tournament_size: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population < 4 or self.population % 2 != 0:
            raise ConfigError(f"population must be even and >= 4, got {self.population}")
        if self.generations < 0:
            raise ConfigError(f"generations must be >= 0, got {self.generations}")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must lie in [0, 1]")
        if self.tournament_size != 2:
            raise ConfigError("tournament size is fixed at 2")


@dataclass
class Individual:
    genome: np.ndarray  # uint8 bits, one per zone
    lcc: float = np.nan
    risk: float = np.nan
    rank: int = -1
    crowding: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.lcc, self.risk)


class Evaluator(Protocol):
    """Batch objective evaluation; results align with genome submission order."""

    def __call__(self, genomes: Sequence[np.ndarray]) -> list[tuple[float, float, dict]]:
        ...


def initialize_population(
    cfg: GaConfig, n_zones: int, rng: np.random.Generator | None = None
) -> list[Individual]:
    """Baseline, P-2 uniform random genomes, and maximum intervention."""
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
    pop = [Individual(genome=np.zeros(n_zones, dtype=np.uint8))]
    for _ in range(cfg.population - 2):
        pop.append(Individual(genome=rng.integers(0, 2, size=n_zones, dtype=np.uint8)))
    pop.append(Individual(genome=np.ones(n_zones, dtype=np.uint8)))
    return pop


def dominates(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """True if a is no worse than b everywhere and strictly better somewhere."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def fast_nondominated_sort(population: Sequence[Individual]) -> list[list[int]]:
    """Deb's front peeling; also writes rank onto each individual."""
    if not population:
        raise InputError("cannot sort an empty population")
    n = len(population)
    objs = [ind.objectives for ind in population]
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    fronts: list[list[int]] = [[]]
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(objs[i], objs[j]):
                dominated_by[i].append(j)
                domination_count[j] += 1
            elif dominates(objs[j], objs[i]):
                dominated_by[j].append(i)
                domination_count[i] += 1
        if domination_count[i] == 0:
            population[i].rank = 0
            fronts[0].append(i)
    k = 0
    while fronts[k]:
        nxt: list[int] = []
        for i in fronts[k]:
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    population[j].rank = k + 1
                    nxt.append(j)
        k += 1
        fronts.append(nxt)
    fronts.pop()
    return fronts


def crowding_distance(front_objectives: Sequence[tuple[float, float]]) -> np.ndarray:
    """Boundary points get infinity; interior points sum normalized gaps.

    An objective with zero range contributes nothing.
    """
    n = len(front_objectives)
    if n == 0:
        raise InputError("empty front")
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    objs = np.asarray(front_objectives, dtype=np.float64)
    for m in range(objs.shape[1]):
        order = np.argsort(objs[:, m], kind="stable")
        vals = objs[order, m]
        span = vals[-1] - vals[0]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        if span > 0.0:
            interior = order[1:-1]
            dist[interior] += (vals[2:] - vals[:-2]) / span
    return dist


def _assign_crowding(population: Sequence[Individual], fronts: list[list[int]]) -> None:
    for front in fronts:
        dists = crowding_distance([population[i].objectives for i in front])
        for i, d in zip(front, dists):
            population[i].crowding = float(d)


def _tournament(pop: list[Individual], rng: np.random.Generator) -> Individual:
    i, j = rng.integers(0, len(pop), size=2)
    a, b = pop[int(i)], pop[int(j)]
    if (a.rank, -a.crowding) <= (b.rank, -b.crowding):
        return a
    return b


def _evaluate(population: list[Individual], evaluator: Evaluator) -> None:
    results = evaluator([ind.genome for ind in population])
    if len(results) != len(population):
        raise InputError("evaluator returned a result count mismatching the batch")
    for ind, (lcc, risk, extras) in zip(population, results):
        if not (np.isfinite(lcc) and np.isfinite(risk)):
            raise InputError(f"evaluator produced non-finite objectives ({lcc}, {risk})")
        ind.lcc = float(lcc)
        ind.risk = float(risk)
        ind.extras = extras


def evolve(
    parents: list[Individual],
    cfg: GaConfig,
    evaluator: Evaluator,
    rng: np.random.Generator,
) -> list[Individual]:
    """One generation: tournaments, uniform crossover, bit-flip mutation,
    then elitist (rank, crowding) truncation of parents plus offspring."""
    p = cfg.population
    n_zones = len(parents[0].genome)
    mut = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / n_zones

    offspring: list[Individual] = []
    while len(offspring) < p:
        g1 = _tournament(parents, rng).genome.copy()
        g2 = _tournament(parents, rng).genome.copy()
        if rng.random() < cfg.crossover_rate:
            swap = rng.integers(0, 2, size=n_zones, dtype=np.uint8).astype(bool)
            tmp = g1[swap].copy()
            g1[swap] = g2[swap]
            g2[swap] = tmp
        for g in (g1, g2):
            flip = rng.random(n_zones) < mut
            g[flip] ^= 1
        offspring.append(Individual(genome=g1))
        offspring.append(Individual(genome=g2))
    offspring = offspring[:p]
    _evaluate(offspring, evaluator)

    combined = parents + offspring
    fronts = fast_nondominated_sort(combined)
    _assign_crowding(combined, fronts)
    nxt: list[Individual] = []
    for front in fronts:
        if len(nxt) + len(front) <= p:
            nxt.extend(combined[i] for i in front)
        else:
            by_crowding = sorted(front, key=lambda i: -combined[i].crowding)
            nxt.extend(combined[i] for i in by_crowding[: p - len(nxt)])
            break
    return nxt


@dataclass(frozen=True)
class FrontSolution:
    genome: np.ndarray
    lcc: float
    risk: float
    extras: dict


def run(
    cfg: GaConfig,
    n_zones: int,
    evaluator: Evaluator,
    on_generation: Callable[[int, list[Individual]], None] | None = None,
) -> list[FrontSolution]:
    """Run the full loop and return front 0 sorted by LCC ascending."""
    # one PCG64 stream drives init and evolution so the trajectory replays exactly
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    population = initialize_population(cfg, n_zones, rng)
    _evaluate(population, evaluator)
    fronts = fast_nondominated_sort(population)
    _assign_crowding(population, fronts)
    if on_generation is not None:
        on_generation(0, population)
    for gen in range(1, cfg.generations + 1):
        population = evolve(population, cfg, evaluator, rng)
        if on_generation is not None:
            on_generation(gen, population)

    fronts = fast_nondominated_sort(population)
    best = [population[i] for i in fronts[0]]
    best.sort(key=lambda ind: (ind.lcc, ind.risk, ind.genome.tobytes()))
    return [
        FrontSolution(genome=ind.genome.copy(), lcc=ind.lcc, risk=ind.risk, extras=ind.extras)
        for ind in best
    ]
