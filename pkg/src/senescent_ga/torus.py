"""Cellular GA on a toroidal grid: local mating, asexual re-seeding and programmed death."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .chromosome import DEFAULT_MUTATION_RATE, TOUR_DTYPE, Chromosome, make_rng
from .engines import ConfigurationError, GenerationOutcome
from .tsp import TspInstance

# row/column offsets in the order the sweep kernel indexes them
MOORE_OFFSETS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]


@dataclass(frozen=True)
class CaConfig:
    max_age: float = 45
    generations: int = 4500
    height: int = 10
    width: int = 10
    mutation_rate: float = DEFAULT_MUTATION_RATE
    immortal_run: bool = False

    def __post_init__(self):
        if self.generations < 0:
            raise ConfigurationError(f"generations must be >= 0, got {self.generations}")
        if self.height < 3 or self.width < 3:
            raise ConfigurationError("the torus must be at least 3x3 for 8 distinct neighbours")
        if self.max_age < 0:
            raise ConfigurationError(f"max_age must be >= 0, got {self.max_age}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigurationError(f"mutation_rate must be in [0, 1], got {self.mutation_rate}")

    @classmethod
    def immortal(cls, generations: int = 4500, **kw) -> CaConfig:
        """Max age set beyond the run length, so nobody ever dies of age."""
        return cls(max_age=generations + 1, generations=generations, immortal_run=True, **kw)

    @property
    def is_immortal(self) -> bool:
        return self.immortal_run

    @property
    def label(self) -> str:
        return "ca-immortal" if self.is_immortal else "ca-aging"

    def params(self) -> dict:
        return {"variant": self.label, "max_age": self.max_age, "generations": self.generations,
                "height": self.height, "width": self.width, "mutation_rate": self.mutation_rate}


class Grid:
    """Row-major cell arrays; cell ``(r, c)`` is flat index ``r * width + c``."""

    def __init__(self, instance: TspInstance, height: int, width: int, tours: np.ndarray):
        self.instance = instance
        self.height = height
        self.width = width
        self.tours = np.ascontiguousarray(tours, dtype=TOUR_DTYPE)
        if self.tours.shape != (height * width, instance.n):
            raise ValueError(f"expected {height * width} tours of length {instance.n}")
        self.lengths = np.array([_kernels.tour_length(t, instance.dist) for t in self.tours])
        self.ages = np.zeros(height * width, np.int64)
        self.occupied = np.ones(height * width, np.bool_)

    @classmethod
    def random(cls, instance: TspInstance, height: int, width: int, rng) -> Grid:
        tours = np.stack([rng.permutation(instance.n) for _ in range(height * width)])
        return cls(instance, height, width, tours)

    @property
    def n_occupied(self) -> int:
        return int(self.occupied.sum())

    @property
    def n_empty(self) -> int:
        return self.occupied.size - self.n_occupied

    def best_distance(self) -> float:
        return float(self.lengths[self.occupied].min()) if self.occupied.any() else math.inf

    def cell(self, r: int, c: int) -> Chromosome | None:
        i = r * self.width + c
        if not self.occupied[i]:
            return None
        return Chromosome(self.instance, self.tours[i], int(self.ages[i]))

    def snapshot(self) -> str:
        """Text matrix, one line per row, cells as ``distance/age`` or ``.`` when empty."""
        rows = []
        for r in range(self.height):
            cells = []
            for c in range(self.width):
                i = r * self.width + c
                cells.append(f"{self.lengths[i]:.1f}/{self.ages[i]}" if self.occupied[i] else ".")
            rows.append(" ".join(cells))
        return "\n".join(rows)


def neighbors(grid: Grid, r: int, c: int) -> list[tuple[int, int]]:
    if not (0 <= r < grid.height and 0 <= c < grid.width):
        raise IndexError(f"cell ({r}, {c}) outside a {grid.height}x{grid.width} grid")
    return [((r + dr) % grid.height, (c + dc) % grid.width) for dr, dc in MOORE_OFFSETS]


def ca_generation(grid: Grid, cfg: CaConfig, rng) -> GenerationOutcome:
    """One sequential sweep, then ageing and programmed death.

    Each occupied cell, visited in row-major order, picks one of its eight
    neighbours. An empty neighbour is filled by a copy of the actor with one
    forced swap; an occupied one mates with the actor, and the single child
    takes the less fit parent's cell if strictly shorter. Changes are visible
    to cells visited later in the same sweep.
    """
    _, replaced = _kernels.ca_sweep(grid.tours, grid.lengths, grid.ages, grid.occupied,
                                    grid.height, grid.width, cfg.mutation_rate,
                                    grid.instance.dist, rng)
    grid.ages[grid.occupied] += 1
    expired = grid.occupied & (grid.ages > cfg.max_age)
    senescent = int(expired.sum())
    grid.occupied &= ~expired
    return GenerationOutcome(int(replaced) + senescent, senescent, grid.best_distance())


def run_ca(inst: TspInstance, cfg: CaConfig, seed: int, trace: bool = False,
           snapshot_dir: Path | None = None):
    """Seeded CA run of ``cfg.generations`` sweeps over a fully occupied random grid."""
    from .experiment import RunRecord

    started = time.perf_counter()
    rng = make_rng(seed)
    grid = Grid.random(inst, cfg.height, cfg.width, rng)
    best = grid.best_distance()
    best_tour = grid.tours[int(np.argmin(grid.lengths))].copy()
    last = 0
    deaths_total = deaths_senescent = 0
    history = [best] if trace else None
    if snapshot_dir is not None:
        snapshot_dir = Path(snapshot_dir)
        snapshot_dir.mkdir(parents=True, exist_ok=True)
        (snapshot_dir / "gen00000.txt").write_text(grid.snapshot() + "\n")
    for gen in range(1, cfg.generations + 1):
        outcome = ca_generation(grid, cfg, rng)
        deaths_total += outcome.deaths_total
        deaths_senescent += outcome.deaths_senescent
        if outcome.best_distance < best:
            best = outcome.best_distance
            live = np.flatnonzero(grid.occupied)
            best_tour = grid.tours[live[np.argmin(grid.lengths[live])]].copy()
            last = gen
        if trace:
            history.append(best)
        if snapshot_dir is not None:
            (snapshot_dir / f"gen{gen:05d}.txt").write_text(grid.snapshot() + "\n")
    return RunRecord(
        strategy=cfg.label,
        seed=seed,
        final_best_distance=best,
        best_tour=best_tour,
        last_improvement_generation=last,
        generations_executed=cfg.generations,
        deaths_total=deaths_total,
        deaths_senescent=deaths_senescent,
        wall_time_seconds=time.perf_counter() - started,
        trace=np.array(history) if trace else None,
    )
