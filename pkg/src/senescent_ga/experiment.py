"""Repeated runs, parameter sweeps, strategy comparison and report files."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy import stats

from . import __version__
from .chromosome import make_rng
from .engines import ConfigurationError, Population, StrategyConfig, Variant, step
from .torus import CaConfig, run_ca
from .tsp import TspInstance

PRNG_ID = "numpy.random.Generator(PCG64)"
CSV_COLUMNS = ("strategy", "seed", "final_best_distance", "last_improvement_generation",
               "generations", "deaths_total", "deaths_senescent", "wall_time_s")
SWEEP_PARAMS = ("max_age", "divisor_v", "soma_start_budget", "ca_max_age")

Config = Union[StrategyConfig, CaConfig]


class ComparisonError(ValueError):
    pass


class ReportError(OSError):
    pass


@dataclass
class RunRecord:
    strategy: str
    seed: int
    final_best_distance: float
    best_tour: np.ndarray | None
    last_improvement_generation: int
    generations_executed: int
    deaths_total: int
    deaths_senescent: int | None
    wall_time_seconds: float = 0.0
    trace: np.ndarray | None = field(default=None, repr=False)
    extra_fills: int = 0

    @property
    def senescent_fraction(self) -> float | None:
        if self.deaths_senescent is None:
            return None
        return self.deaths_senescent / self.deaths_total if self.deaths_total else 0.0


def run_single(inst: TspInstance, cfg: StrategyConfig, generations: int = 20_000, seed: int = 0,
               trace: bool = False) -> RunRecord:
    """Fixed-budget run: exactly ``generations`` steps, no early exit."""
    if generations < 0:
        raise ConfigurationError(f"generations must be >= 0, got {generations}")
    started = time.perf_counter()
    rng = make_rng(seed)
    pop = Population.random(inst, cfg, rng)
    best_tour = pop.tours[0].copy()
    last = 0
    deaths_total = deaths_senescent = extra = 0
    history = [pop.best_so_far] if trace else None
    for gen in range(1, generations + 1):
        outcome = step(pop, cfg, rng)
        deaths_total += outcome.deaths_total
        if outcome.deaths_senescent is not None:
            deaths_senescent += outcome.deaths_senescent
        extra += outcome.extra_fills
        if outcome.improved:
            last = gen
            best_tour = pop.tours[0].copy()
        if trace:
            history.append(pop.best_so_far)
    return RunRecord(
        strategy=cfg.variant.value,
        seed=seed,
        final_best_distance=pop.best_so_far,
        best_tour=best_tour,
        last_improvement_generation=last,
        generations_executed=generations,
        deaths_total=deaths_total,
        deaths_senescent=None if cfg.variant is Variant.GRADUAL else deaths_senescent,
        wall_time_seconds=time.perf_counter() - started,
        trace=np.array(history) if trace else None,
        extra_fills=extra,
    )


def _run_one(args) -> RunRecord:
    inst, cfg, generations, seed, trace = args
    if isinstance(cfg, CaConfig):
        return run_ca(inst, cfg, seed, trace=trace)
    return run_single(inst, cfg, generations, seed, trace=trace)


@dataclass
class CampaignSummary:
    strategy: str
    repetitions: int
    base_seed: int
    generations: int
    mean_distance: float
    std_distance: float
    min_distance: float
    max_distance: float
    mean_last_improvement: float
    mean_senescent_fraction: float | None
    pooled_senescent_fraction: float | None
    mean_deaths_total: float
    mean_deaths_senescent: float | None
    std_is_degenerate: bool
    instance_fingerprint: str
    config: dict = field(default_factory=dict)
    prng: str = PRNG_ID
    version: str = __version__

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> CampaignSummary:
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def summarize(records: Sequence[RunRecord], inst: TspInstance, cfg: Config | None = None,
              base_seed: int = 0) -> CampaignSummary:
    if not records:
        raise ValueError("cannot summarise zero runs")
    dists = np.array([r.final_best_distance for r in records])
    n = len(dists)
    fractions = [r.senescent_fraction for r in records]
    tracked = all(f is not None for f in fractions)
    deaths = np.array([r.deaths_total for r in records], dtype=float)
    senescent = np.array([r.deaths_senescent for r in records], dtype=float) if tracked else None
    return CampaignSummary(
        strategy=records[0].strategy,
        repetitions=n,
        base_seed=base_seed,
        generations=records[0].generations_executed,
        mean_distance=float(dists.mean()),
        # n == 1 has no sample spread; reported as 0 and flagged
        std_distance=float(dists.std(ddof=1)) if n > 1 else 0.0,
        min_distance=float(dists.min()),
        max_distance=float(dists.max()),
        mean_last_improvement=float(np.mean([r.last_improvement_generation for r in records])),
        mean_senescent_fraction=float(np.mean(fractions)) if tracked else None,
        pooled_senescent_fraction=(float(senescent.sum() / deaths.sum()) if deaths.sum() else 0.0)
        if tracked else None,
        mean_deaths_total=float(deaths.mean()),
        mean_deaths_senescent=float(senescent.mean()) if tracked else None,
        std_is_degenerate=n < 2,
        instance_fingerprint=inst.fingerprint,
        config=cfg.params() if cfg is not None else {},
    )


def run_campaign(inst: TspInstance, cfg: Config, repetitions: int = 100, base_seed: int = 0,
                 generations: int = 20_000, jobs: int = 1,
                 trace: bool = False) -> tuple[CampaignSummary, list[RunRecord]]:
    """Run ``repetitions`` independent runs with seeds ``base_seed + i``.

    For a :class:`CaConfig` the run length comes from the config and
    ``generations`` is ignored.
    """
    if repetitions < 1:
        raise ConfigurationError(f"repetitions must be >= 1, got {repetitions}")
    tasks = [(inst, cfg, generations, base_seed + i, trace) for i in range(repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, tasks))
    else:
        records = [_run_one(t) for t in tasks]
    return summarize(records, inst, cfg, base_seed), records


@dataclass
class SweepRow:
    value: float
    samples: int
    mean_distance: float
    std_distance: float


@dataclass
class SweepTable:
    parameter: str
    rows: list[SweepRow]

    @property
    def argmin(self) -> float:
        return min(self.rows, key=lambda row: row.mean_distance).value

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "argmin": self.argmin,
                "rows": [dataclasses.asdict(r) for r in self.rows]}


def sweep_values(lo: float, hi: float, step_size: float) -> list[float]:
    if lo > hi:
        raise ConfigurationError(f"lo ({lo}) must not exceed hi ({hi})")
    if not step_size > 0:
        raise ConfigurationError(f"step must be > 0, got {step_size}")
    count = int(math.floor((hi - lo) / step_size + 1e-9)) + 1
    return [lo + i * step_size for i in range(count)]


def _with_param(cfg: Config, param: str, value: float) -> Config:
    if param == "ca_max_age":
        if not isinstance(cfg, CaConfig):
            raise ConfigurationError("ca_max_age sweeps need a CaConfig")
        return dataclasses.replace(cfg, max_age=value)
    if isinstance(cfg, CaConfig):
        raise ConfigurationError(f"{param} does not apply to the CA engine")
    return dataclasses.replace(cfg, **{param: value})


def sweep(inst: TspInstance, cfg: Config, param: str, lo: float, hi: float, step_size: float,
          samples_per_value: int = 5, base_seed: int = 0, generations: int = 20_000,
          jobs: int = 1) -> SweepTable:
    """Mean and spread of the final distance at each value of one parameter."""
    if param not in SWEEP_PARAMS:
        raise ConfigurationError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")
    if samples_per_value < 1:
        raise ConfigurationError("samples_per_value must be >= 1")
    rows = []
    for value in sweep_values(lo, hi, step_size):
        summary, _ = run_campaign(inst, _with_param(cfg, param, value), samples_per_value,
                                  base_seed, generations, jobs)
        rows.append(SweepRow(value, samples_per_value, summary.mean_distance, summary.std_distance))
    return SweepTable(param, rows)


@dataclass
class PairComparison:
    a: str
    b: str
    mean_a: float
    mean_b: float
    diff_pct: float          # 100 * (mean_a - mean_b) / mean_b
    improvement_pct: float   # how much shorter b is, relative to a
    t_statistic: float
    p_two_sided: float
    p_a_less: float          # one-sided, alternative: mean_a < mean_b
    degenerate: bool


@dataclass
class ComparisonReport:
    pairs: list[PairComparison]
    ordering: list[str]

    def format_table(self) -> str:
        lines = ["ordering (best first): " + " < ".join(self.ordering), "",
                 f"{'A':<14}{'B':<14}{'mean A':>12}{'mean B':>12}{'diff%':>9}{'impr%':>9}"
                 f"{'t':>10}{'p(2s)':>10}{'p(A<B)':>10}"]
        for p in self.pairs:
            lines.append(f"{p.a:<14}{p.b:<14}{p.mean_a:>12.3f}{p.mean_b:>12.3f}{p.diff_pct:>9.3f}"
                         f"{p.improvement_pct:>9.3f}{p.t_statistic:>10.3f}{p.p_two_sided:>10.4f}"
                         f"{p.p_a_less:>10.4f}" + ("  (degenerate)" if p.degenerate else ""))
        return "\n".join(lines)


def welch(mean_a, std_a, n_a, mean_b, std_b, n_b) -> tuple[float, float, float, bool]:
    """Welch's t from summary statistics: (t, two-sided p, p for a < b, degenerate)."""
    var_a, var_b = std_a ** 2 / n_a, std_b ** 2 / n_b
    if var_a + var_b == 0.0:
        if mean_a == mean_b:
            return 0.0, 1.0, 0.5, True
        t = math.copysign(math.inf, mean_a - mean_b)
        return t, 0.0, 1.0 if t > 0 else 0.0, True
    res = stats.ttest_ind_from_stats(mean_a, std_a, n_a, mean_b, std_b, n_b, equal_var=False)
    t, p = float(res.statistic), float(res.pvalue)
    p_less = p / 2 if t < 0 else 1 - p / 2
    return t, p, p_less, False


def compare(summaries: Sequence[CampaignSummary]) -> ComparisonReport:
    if len(summaries) < 2:
        raise ComparisonError("need at least two summaries to compare")
    prints = {s.instance_fingerprint for s in summaries}
    if len(prints) > 1:
        raise ComparisonError(f"summaries come from different instances: {sorted(prints)}")
    pairs = []
    for a, b in combinations(summaries, 2):
        t, p, p_less, degenerate = welch(a.mean_distance, a.std_distance, a.repetitions,
                                         b.mean_distance, b.std_distance, b.repetitions)
        pairs.append(PairComparison(
            a.strategy, b.strategy, a.mean_distance, b.mean_distance,
            100.0 * (a.mean_distance - b.mean_distance) / b.mean_distance,
            100.0 * (a.mean_distance - b.mean_distance) / a.mean_distance,
            t, p, p_less, degenerate))
    ordering = [s.strategy for s in sorted(summaries, key=lambda s: s.mean_distance)]
    return ComparisonReport(pairs, ordering)


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def record_row(rec: RunRecord) -> list[str]:
    return [rec.strategy, str(rec.seed), _fmt(rec.final_best_distance),
            str(rec.last_improvement_generation), str(rec.generations_executed),
            str(rec.deaths_total), "" if rec.deaths_senescent is None else str(rec.deaths_senescent),
            _fmt(rec.wall_time_seconds)]


def write_reports(records: Sequence[RunRecord], summary: CampaignSummary, out_dir,
                  formats: Sequence[str] = ("csv", "json"), prefix: str | None = None) -> list[Path]:
    """Write ``<prefix>_runs.csv``, ``<prefix>_summary.json`` and any trace files.

    Traces go to ``traces/<prefix>_seed<seed>.csv`` for runs that carry one.
    """
    out = Path(out_dir)
    prefix = prefix or summary.strategy
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            path = out / f"{prefix}_runs.csv"
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                writer.writerows(record_row(r) for r in records)
            written.append(path)
        if "json" in formats:
            path = out / f"{prefix}_summary.json"
            path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
            written.append(path)
        traced = [r for r in records if r.trace is not None]
        if traced:
            (out / "traces").mkdir(exist_ok=True)
        for rec in traced:
            path = out / "traces" / f"{prefix}_seed{rec.seed}.csv"
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(("generation", "best_distance"))
                writer.writerows((g, _fmt(d)) for g, d in enumerate(rec.trace))
            written.append(path)
    except OSError as exc:
        raise ReportError(f"cannot write reports under {out}: {exc}") from exc
    return written


def read_runs_csv(path) -> list[RunRecord]:
    records = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            records.append(RunRecord(
                strategy=row["strategy"],
                seed=int(row["seed"]),
                final_best_distance=float(row["final_best_distance"]),
                best_tour=None,
                last_improvement_generation=int(row["last_improvement_generation"]),
                generations_executed=int(row["generations"]),
                deaths_total=int(row["deaths_total"]),
                deaths_senescent=int(row["deaths_senescent"]) if row["deaths_senescent"] else None,
                wall_time_seconds=float(row["wall_time_s"]),
            ))
    return records


def read_trace(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([float(d) for _, d in reader])


def load_summary(path) -> CampaignSummary:
    return CampaignSummary.from_dict(json.loads(Path(path).read_text()))
