"""Permutation genomes with age bookkeeping, and the variation operators."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .tsp import TspInstance, check_tour

TOUR_DTYPE = np.int64
DEFAULT_MUTATION_RATE = 1.0 / 10_000


class InvalidMatingError(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """The one PRNG used everywhere: PCG64 behind numpy's Generator."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(eq=False)
class Chromosome:
    """A closed tour over ``instance`` plus age state.

    ``distance`` is computed from the tour at construction; operators always
    return new chromosomes, so it never goes stale.
    """

    instance: TspInstance = field(repr=False)
    tour: np.ndarray
    current_age: int = 0
    max_age: int | None = None
    life_budget: float | None = None
    distance: float = field(init=False)

    def __post_init__(self):
        self.tour = np.array(check_tour(self.tour, self.instance.n), dtype=TOUR_DTYPE)
        if self.current_age < 0:
            raise ValueError("current_age must be >= 0")
        self.distance = float(_kernels.tour_length(self.tour, self.instance.dist))

    def offspring(self, tour: np.ndarray) -> Chromosome:
        """A newborn sharing this chromosome's max_age; age and budget start over."""
        return Chromosome(self.instance, tour, 0, self.max_age, None)

    def same_genome(self, other: Chromosome) -> bool:
        return np.array_equal(self.tour, other.tour)


def random_chromosome(inst: TspInstance, rng: np.random.Generator, **age_fields) -> Chromosome:
    return Chromosome(inst, rng.permutation(inst.n).astype(TOUR_DTYPE), **age_fields)


def two_point_crossover(p1: Chromosome, p2: Chromosome, rng: np.random.Generator,
                        cuts: tuple[int, int] | None = None) -> Chromosome:
    """Order crossover (OX1) between two cut points.

    The child keeps ``p1.tour[a:b]`` in place and takes the remaining cities
    in the order they appear in ``p2``. Cuts are drawn uniformly as a sorted
    pair of distinct values in ``0..n`` unless given.
    """
    n = p1.tour.shape[0]
    if p2.tour.shape[0] != n or p1.instance.n != p2.instance.n:
        raise InvalidMatingError(f"parents have different sizes ({n} vs {p2.tour.shape[0]})")
    if cuts is None:
        a, b = _kernels.draw_cuts(rng, n)
    else:
        a, b = cuts
        if not 0 <= a < b <= n:
            raise InvalidMatingError(f"cuts must satisfy 0 <= a < b <= {n}, got {cuts}")
    child = np.empty(n, TOUR_DTYPE)
    _kernels.order_crossover(p1.tour, p2.tour, a, b, child)
    return p1.offspring(child)


def mutate_tour(tour: np.ndarray, rate: float, rng: np.random.Generator) -> int:
    """Swap-mutate ``tour`` in place; returns how many positions fired."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"mutation rate must be in [0, 1], got {rate}")
    return int(_kernels.mutate_inplace(tour, rate, rng))


def mutate(ch: Chromosome, rng: np.random.Generator,
           per_gene_rate: float = DEFAULT_MUTATION_RATE) -> Chromosome:
    """Each position independently swaps with a uniformly chosen other position."""
    tour = ch.tour.copy()
    if mutate_tour(tour, per_gene_rate, rng) == 0:
        return ch
    return replace(ch, tour=tour)


def forced_single_mutation(ch: Chromosome, rng: np.random.Generator) -> Chromosome:
    """Asexual copy with exactly one swap of two distinct positions, born at age 0."""
    if ch.tour.shape[0] < 2:
        raise ValueError("forced mutation needs at least two cities")
    tour = ch.tour.copy()
    _kernels.forced_swap(tour, rng)
    return ch.offspring(tour)
