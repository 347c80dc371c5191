"""Panmictic generation steps: three conventional strategies and three senescent ones.

A :class:`Population` keeps its members as parallel arrays (tours, distances,
ages, life budgets) sorted by raw distance. Each ``step_*`` function advances
it by one generation in place and returns a :class:`GenerationOutcome`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .chromosome import DEFAULT_MUTATION_RATE, TOUR_DTYPE, Chromosome
from .tsp import TspInstance


class ConfigurationError(ValueError):
    pass


class PairingError(ValueError):
    pass


class Variant(str, enum.Enum):
    AGE = "age"
    FITNESS = "fitness"
    HYBRID = "hybrid"
    RAPID = "rapid"
    GRADUAL = "gradual"
    SOMA = "soma"


class Stage(enum.IntEnum):
    REPRODUCTION = 0
    GROWTH = 1
    REPAIR = 2


@dataclass(frozen=True)
class StrategyConfig:
    variant: Variant
    pop_size: int = 30
    breed_fraction: float = 0.6
    max_age: float = 25
    divisor_v: float = 1000.0
    soma_start_budget: float = 52.0
    soma_stage_weights: tuple[float, float, float] = (0.50, 0.25, 0.25)
    soma_stage_deltas: tuple[float, float, float] = (-0.7, -0.3, 0.6)
    mutation_rate: float = DEFAULT_MUTATION_RATE

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.pop_size < 2:
            raise ConfigurationError(f"pop_size must be >= 2, got {self.pop_size}")
        if not 0.0 < self.breed_fraction <= 1.0:
            raise ConfigurationError(f"breed_fraction must be in (0, 1], got {self.breed_fraction}")
        breeders = self.pop_size * self.breed_fraction
        if abs(breeders - round(breeders)) > 1e-9 or round(breeders) % 2:
            raise ConfigurationError(
                f"pop_size * breed_fraction must be an even integer, got {breeders:g}")
        if self.variant in (Variant.AGE, Variant.HYBRID) and self.pop_size % 2:
            raise ConfigurationError(f"{self.variant.value} pairs the whole population; pop_size must be even")
        if self.max_age < 0:
            raise ConfigurationError(f"max_age must be >= 0, got {self.max_age}")
        if not self.divisor_v > 0:
            raise ConfigurationError(f"divisor_v must be > 0, got {self.divisor_v}")
        if not self.soma_start_budget > 0:
            raise ConfigurationError(f"soma_start_budget must be > 0, got {self.soma_start_budget}")
        weights = self.soma_stage_weights
        if len(weights) != 3 or min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-9:
            raise ConfigurationError(f"soma_stage_weights must be 3 non-negative values summing to 1, got {weights}")
        if len(self.soma_stage_deltas) != 3:
            raise ConfigurationError("soma_stage_deltas needs one delta per stage")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigurationError(f"mutation_rate must be in [0, 1], got {self.mutation_rate}")

    @property
    def n_breed(self) -> int:
        return round(self.pop_size * self.breed_fraction)

    def params(self) -> dict:
        """The settings that matter for this variant, for report headers."""
        out = {"variant": self.variant.value, "pop_size": self.pop_size,
               "mutation_rate": self.mutation_rate}
        if self.variant in (Variant.FITNESS, Variant.RAPID, Variant.GRADUAL):
            out["breed_fraction"] = self.breed_fraction
        if self.variant is Variant.RAPID:
            out["max_age"] = self.max_age
        elif self.variant is Variant.GRADUAL:
            out["divisor_v"] = self.divisor_v
        elif self.variant is Variant.SOMA:
            out["soma_start_budget"] = self.soma_start_budget
            out["soma_stage_weights"] = list(self.soma_stage_weights)
            out["soma_stage_deltas"] = list(self.soma_stage_deltas)
        return out


@dataclass
class GenerationOutcome:
    deaths_total: int
    deaths_senescent: int | None
    best_distance: float
    improved: bool = False
    # soma only: dead slots filled by extra crossovers because offspring ran out
    extra_fills: int = 0


@dataclass(eq=False)
class Population:
    instance: TspInstance
    tours: np.ndarray
    distances: np.ndarray
    ages: np.ndarray
    budgets: np.ndarray
    # birth serial numbers, so tests can tell members apart across steps
    uids: np.ndarray = field(default=None)
    best_so_far: float = field(default=math.inf)
    _next_uid: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.uids is None:
            self.uids = np.arange(len(self.tours), dtype=np.int64)
            self._next_uid = len(self.tours)
        self._sort()
        self.best_so_far = min(self.best_so_far, float(self.distances[0]))

    @classmethod
    def random(cls, inst: TspInstance, cfg: StrategyConfig, rng: np.random.Generator) -> Population:
        tours = np.stack([rng.permutation(inst.n) for _ in range(cfg.pop_size)]).astype(TOUR_DTYPE)
        return cls.from_tours(inst, tours, cfg)

    @classmethod
    def from_tours(cls, inst: TspInstance, tours, cfg: StrategyConfig | None = None,
                   ages=None) -> Population:
        tours = np.ascontiguousarray(tours, dtype=TOUR_DTYPE)
        m = len(tours)
        distances = np.array([_kernels.tour_length(t, inst.dist) for t in tours])
        ages = np.zeros(m, np.int64) if ages is None else np.array(ages, dtype=np.int64)
        budget = cfg.soma_start_budget if cfg is not None and cfg.variant is Variant.SOMA else math.nan
        return cls(inst, tours, distances, ages, np.full(m, budget))

    @classmethod
    def from_members(cls, members: Sequence[Chromosome]) -> Population:
        inst = members[0].instance
        budgets = [math.nan if ch.life_budget is None else ch.life_budget for ch in members]
        return cls(inst, np.stack([ch.tour for ch in members]),
                   np.array([ch.distance for ch in members]),
                   np.array([ch.current_age for ch in members], dtype=np.int64),
                   np.array(budgets, dtype=np.float64))

    @property
    def members(self) -> list[Chromosome]:
        out = []
        for tour, age, budget in zip(self.tours, self.ages, self.budgets):
            life = None if math.isnan(budget) else float(budget)
            out.append(Chromosome(self.instance, tour, int(age), life_budget=life))
        return out

    @property
    def size(self) -> int:
        return len(self.tours)

    @property
    def best_distance(self) -> float:
        return float(self.distances[0])

    def _sort(self) -> None:
        order = np.argsort(self.distances, kind="stable")
        self.tours = self.tours[order]
        self.distances = self.distances[order]
        self.ages = self.ages[order]
        self.budgets = self.budgets[order]
        self.uids = self.uids[order]

    def advance(self, survivors: np.ndarray, children: np.ndarray, child_lengths: np.ndarray,
                child_budget: float = math.nan) -> bool:
        """Keep ``survivors`` (aged by one) and append newborn ``children``; re-rank.

        Returns whether the best-so-far distance strictly improved.
        """
        k = len(children)
        self.tours = np.concatenate([self.tours[survivors], children])
        self.distances = np.concatenate([self.distances[survivors], child_lengths])
        self.ages = np.concatenate([self.ages[survivors] + 1, np.zeros(k, np.int64)])
        self.budgets = np.concatenate([self.budgets[survivors], np.full(k, child_budget)])
        self.uids = np.concatenate([self.uids[survivors],
                                    np.arange(self._next_uid, self._next_uid + k, dtype=np.int64)])
        self._next_uid += k
        self._sort()
        if self.distances[0] < self.best_so_far:
            self.best_so_far = float(self.distances[0])
            return True
        return False


def pair_ranked(ranked: Sequence) -> list[tuple]:
    """Adjacent-rank pairing: (1st, 2nd), (3rd, 4th), ..."""
    if len(ranked) % 2:
        raise PairingError(f"cannot pair an odd number of members ({len(ranked)})")
    return list(zip(ranked[0::2], ranked[1::2]))


def _pair_parents(pairs: list[tuple]) -> tuple[np.ndarray, np.ndarray]:
    # pair (a, b) yields OX(a, b) then OX(b, a)
    mothers = np.array([p for a, b in pairs for p in (a, b)], dtype=np.int64)
    fathers = np.array([p for a, b in pairs for p in (b, a)], dtype=np.int64)
    return mothers, fathers


def _offspring(pop: Population, pairs: list[tuple], cfg: StrategyConfig, rng):
    mothers, fathers = _pair_parents(pairs)
    if len(mothers) == 0:
        return np.empty((0, pop.instance.n), TOUR_DTYPE), np.empty(0)
    return _kernels.breed(pop.tours, mothers, fathers, cfg.mutation_rate, pop.instance.dist, rng)


def _rank(keys: np.ndarray) -> np.ndarray:
    return np.argsort(keys, kind="stable")


def _breed_top_replace_bottom(pop: Population, ranking: np.ndarray, cfg: StrategyConfig,
                              rng) -> tuple[np.ndarray, bool]:
    """The fitness-based rule on an arbitrary ranking.

    The top ``n_breed`` pair off and their offspring replace the bottom
    ``n_breed``. Returns the indices (pre-step) of the replaced members.
    """
    n_breed = cfg.n_breed
    keep = pop.size - n_breed
    children, lengths = _offspring(pop, pair_ranked(list(ranking[:n_breed])), cfg, rng)
    replaced = ranking[keep:]
    improved = pop.advance(ranking[:keep], children, lengths)
    return replaced, improved


def step_age_based(pop: Population, cfg: StrategyConfig, rng) -> GenerationOutcome:
    ranking = _rank(pop.distances)
    children, lengths = _offspring(pop, pair_ranked(list(ranking)), cfg, rng)
    improved = pop.advance(np.empty(0, np.int64), children, lengths)
    return GenerationOutcome(len(children), 0, pop.best_distance, improved)


def step_fitness_based(pop: Population, cfg: StrategyConfig, rng) -> GenerationOutcome:
    ranking = _rank(pop.distances)
    replaced, improved = _breed_top_replace_bottom(pop, ranking, cfg, rng)
    return GenerationOutcome(len(replaced), 0, pop.best_distance, improved)


def step_hybrid(pop: Population, cfg: StrategyConfig, rng) -> GenerationOutcome:
    ranking = _rank(pop.distances)
    children, lengths = _offspring(pop, pair_ranked(list(ranking)), cfg, rng)
    # the elite keeps its slot; the bottom pair's last child gives way
    improved = pop.advance(ranking[:1], children[:-1], lengths[:-1])
    return GenerationOutcome(len(children) - 1, 0, pop.best_distance, improved)


def senescent_ranking(distances: np.ndarray, ages: np.ndarray, max_age: float) -> np.ndarray:
    """Distance ranking with every member older than ``max_age`` moved to the bottom.

    Expired members keep a stable oldest-first order among themselves.
    """
    ranking = _rank(distances)
    expired = ages[ranking] > max_age
    live = ranking[~expired]
    dead = ranking[expired]
    dead = dead[np.argsort(-ages[dead], kind="stable")]
    return np.concatenate([live, dead])


def step_rapid(pop: Population, cfg: StrategyConfig, rng) -> GenerationOutcome:
    expired = pop.ages > cfg.max_age
    ranking = senescent_ranking(pop.distances, pop.ages, cfg.max_age)
    replaced, improved = _breed_top_replace_bottom(pop, ranking, cfg, rng)
    senescent = int(expired[replaced].sum())
    return GenerationOutcome(len(replaced), senescent, pop.best_distance, improved)


def aged_fitness(distance, age, divisor: float = 1000.0):
    """Distance plus the cubic age penalty ``age**3 / divisor``; lower is fitter."""
    if not divisor > 0:
        raise ConfigurationError(f"divisor must be > 0, got {divisor}")
    return distance + np.power(age, 3, dtype=np.float64) / divisor


def step_gradual(pop: Population, cfg: StrategyConfig, rng) -> GenerationOutcome:
    ranking = _rank(aged_fitness(pop.distances, pop.ages, cfg.divisor_v))
    replaced, improved = _breed_top_replace_bottom(pop, ranking, cfg, rng)
    # every member is penalised from its first generation, so no death is purely senescent
    return GenerationOutcome(len(replaced), None, pop.best_distance, improved)


def sample_stages(rng, size: int, weights=(0.50, 0.25, 0.25)) -> np.ndarray:
    cumulative = np.cumsum(weights)
    draws = rng.random(size)
    return np.minimum(np.searchsorted(cumulative, draws, side="right"), len(weights) - 1)


def sample_stage(rng, weights=(0.50, 0.25, 0.25)) -> Stage:
    return Stage(int(sample_stages(rng, 1, weights)[0]))


def step_soma(pop: Population, cfg: StrategyConfig, rng) -> GenerationOutcome:
    stages = sample_stages(rng, pop.size, cfg.soma_stage_weights)
    pop.budgets = pop.budgets + np.asarray(cfg.soma_stage_deltas)[stages]
    dead = pop.budgets <= 0.0

    ranking = _rank(pop.distances)
    reproducing = (stages[ranking] == Stage.REPRODUCTION) & ~dead[ranking]
    reproducers = list(ranking[reproducing])
    if len(reproducers) % 2:
        reproducers.pop()
    children, lengths = _offspring(pop, pair_ranked(reproducers), cfg, rng)

    worst_first = ranking[::-1]
    dead_slots = ranking[dead[ranking]]
    living = worst_first[~dead[worst_first]]
    idle = living[stages[living] != Stage.REPRODUCTION]
    breeding = living[stages[living] == Stage.REPRODUCTION]
    targets = np.concatenate([dead_slots, idle, breeding])

    extra = max(len(dead_slots) - len(children), 0)
    if extra:
        children, lengths = _fill_dead_slots(pop, living, children, lengths, extra, cfg, rng)
    replaced = targets[:len(children)]
    survivors = np.setdiff1d(np.arange(pop.size), replaced)
    improved = pop.advance(survivors, children, lengths, cfg.soma_start_budget)
    return GenerationOutcome(len(replaced), len(dead_slots), pop.best_distance, improved, extra)


def _fill_dead_slots(pop, living, children, lengths, count, cfg, rng):
    """Extra crossovers between uniformly drawn distinct living members."""
    if len(living) >= 2:
        picks = np.array([rng.choice(living, 2, replace=False) for _ in range(count)], dtype=np.int64)
        more, more_len = _kernels.breed(pop.tours, picks[:, 0], picks[:, 1], cfg.mutation_rate,
                                        pop.instance.dist, rng)
    elif len(living) == 1:
        # a lone survivor can only clone itself
        same = np.full(count, living[0], dtype=np.int64)
        more, more_len = _kernels.breed(pop.tours, same, same, cfg.mutation_rate, pop.instance.dist, rng)
    else:
        more = np.stack([rng.permutation(pop.instance.n) for _ in range(count)]).astype(TOUR_DTYPE)
        more_len = np.array([_kernels.tour_length(t, pop.instance.dist) for t in more])
    return np.concatenate([children, more]), np.concatenate([lengths, more_len])


STEPS: dict[Variant, Callable[[Population, StrategyConfig, np.random.Generator], GenerationOutcome]] = {
    Variant.AGE: step_age_based,
    Variant.FITNESS: step_fitness_based,
    Variant.HYBRID: step_hybrid,
    Variant.RAPID: step_rapid,
    Variant.GRADUAL: step_gradual,
    Variant.SOMA: step_soma,
}


def step(pop: Population, cfg: StrategyConfig, rng) -> GenerationOutcome:
    return STEPS[cfg.variant](pop, cfg, rng)
