import json
import math
import random

import numpy as np
import pytest

from senescent_ga.chromosome import make_rng
from senescent_ga.engines import ConfigurationError, Population, StrategyConfig
from senescent_ga.experiment import (
    CSV_COLUMNS, CampaignSummary, ComparisonError, RunRecord, compare, load_summary, read_runs_csv,
    read_trace, run_campaign, run_single, summarize, sweep, sweep_values, welch, write_reports,
)
from senescent_ga.torus import CaConfig
from senescent_ga.tsp import generate_instance


def _rec(d, strategy="x", seed=0, last=0, sen=0):
    return RunRecord(strategy, seed, d, None, last, 100, 1000, sen)


def test_zero_generations(inst100):
    cfg = StrategyConfig("fitness")
    rec = run_single(inst100, cfg, 0, seed=4)
    initial = Population.random(inst100, cfg, make_rng(4))
    assert rec.final_best_distance == initial.best_distance
    assert rec.last_improvement_generation == 0
    assert rec.deaths_total == 0


def test_run_single_deterministic(inst100):
    cfg = StrategyConfig("soma")
    a = run_single(inst100, cfg, 500, seed=2, trace=True)
    b = run_single(inst100, cfg, 500, seed=2, trace=True)
    for name in ("final_best_distance", "last_improvement_generation", "deaths_total",
                 "deaths_senescent", "extra_fills"):
        assert getattr(a, name) == getattr(b, name)
    assert np.array_equal(a.best_tour, b.best_tour)
    assert np.array_equal(a.trace, b.trace)


def test_best_tour_matches_reported_distance(inst100):
    rec = run_single(inst100, StrategyConfig("hybrid"), 300, seed=1)
    d = inst100.dist
    t = rec.best_tour
    assert sum(d[t[i], t[(i + 1) % 100]] for i in range(100)) == pytest.approx(rec.final_best_distance)
    assert rec.last_improvement_generation <= rec.generations_executed


def test_trace_is_best_so_far(inst100):
    rec = run_single(inst100, StrategyConfig("age"), 400, seed=1, trace=True)
    assert len(rec.trace) == 401
    assert np.all(np.diff(rec.trace) <= 0)
    drops = np.flatnonzero(np.diff(rec.trace) < 0) + 1
    assert (drops[-1] if len(drops) else 0) == rec.last_improvement_generation


def test_gradual_record_has_no_senescent_count(inst100):
    rec = run_single(inst100, StrategyConfig("gradual"), 10, seed=1)
    assert rec.deaths_senescent is None and rec.senescent_fraction is None


@pytest.mark.slow
def test_fitness_based_always_improves_on_initial_best(inst100):
    cfg = StrategyConfig("fitness")
    for seed in range(20):
        rec = run_single(inst100, cfg, 20_000, seed=seed)
        initial = Population.random(inst100, cfg, make_rng(seed)).best_distance
        assert rec.final_best_distance < initial


def test_campaign_seeds_are_additive(inst100):
    summary, records = run_campaign(inst100, StrategyConfig("fitness"), 3, base_seed=10, generations=20)
    assert [r.seed for r in records] == [10, 11, 12]
    solo = run_single(inst100, StrategyConfig("fitness"), 20, seed=11)
    assert records[1].final_best_distance == solo.final_best_distance
    assert summary.repetitions == 3 and summary.base_seed == 10
    assert summary.instance_fingerprint == inst100.fingerprint


def test_single_repetition_summary(inst100):
    summary, records = run_campaign(inst100, StrategyConfig("fitness"), 1, generations=10)
    assert summary.mean_distance == records[0].final_best_distance
    assert summary.std_distance == 0.0 and summary.std_is_degenerate


def test_summary_hand_values(inst100):
    s = summarize([_rec(800.0), _rec(820.0)], inst100)
    assert s.mean_distance == 810.0
    assert s.std_distance == pytest.approx(14.142135, abs=1e-6)


def test_summary_shuffle_invariant(inst100):
    rng = random.Random(3)
    records = [_rec(rng.uniform(700, 900), last=rng.randrange(100), sen=rng.randrange(500))
               for _ in range(25)]
    a = summarize(records, inst100)
    shuffled = records[:]
    rng.shuffle(shuffled)
    b = summarize(shuffled, inst100)
    for name in ("mean_distance", "std_distance", "min_distance", "max_distance",
                 "mean_last_improvement", "mean_senescent_fraction"):
        assert getattr(a, name) == pytest.approx(getattr(b, name), rel=1e-12)


def test_summary_against_naive_oracle(inst100):
    rng = random.Random(8)
    records = [_rec(rng.uniform(700, 900), last=rng.randrange(100), sen=rng.randrange(500))
               for _ in range(17)]
    s = summarize(records, inst100)
    xs = [r.final_best_distance for r in records]
    mean = sum(xs) / len(xs)
    std = math.sqrt(sum((x - mean) ** 2 for x in xs) / (len(xs) - 1))
    assert s.mean_distance == pytest.approx(mean, rel=1e-12)
    assert s.std_distance == pytest.approx(std, rel=1e-12)
    assert s.mean_senescent_fraction == pytest.approx(sum(r.deaths_senescent / 1000 for r in records) / 17)
    assert s.pooled_senescent_fraction == pytest.approx(sum(r.deaths_senescent for r in records) / 17000)


def test_ca_campaign(inst100):
    summary, records = run_campaign(inst100, CaConfig.immortal(30), 2, base_seed=5)
    assert summary.strategy == "ca-immortal"
    assert all(r.generations_executed == 30 and r.deaths_senescent == 0 for r in records)


def test_campaign_with_jobs_matches_serial(inst100):
    cfg = StrategyConfig("rapid")
    _, serial = run_campaign(inst100, cfg, 2, 3, generations=50)
    _, parallel = run_campaign(inst100, cfg, 2, 3, generations=50, jobs=2)
    assert [r.final_best_distance for r in serial] == [r.final_best_distance for r in parallel]


def test_campaign_rejects_zero_reps(inst100):
    with pytest.raises(ConfigurationError):
        run_campaign(inst100, StrategyConfig("fitness"), 0)


def test_sweep_values():
    assert len(sweep_values(10, 90, 5)) == 17
    assert sweep_values(10, 90, 5)[-1] == 90
    assert sweep_values(25, 25, 5) == [25]
    assert len(sweep_values(400, 2000, 100)) == 17
    assert sweep_values(14, 68, 4)[-1] == 66
    with pytest.raises(ConfigurationError):
        sweep_values(5, 1, 1)
    with pytest.raises(ConfigurationError):
        sweep_values(1, 5, 0)


def test_sweep_table(inst100):
    table = sweep(inst100, StrategyConfig("rapid"), "max_age", 10, 20, 5, 2, generations=30)
    assert [r.value for r in table.rows] == [10, 15, 20]
    assert all(r.samples == 2 for r in table.rows)
    assert table.argmin in (10, 15, 20)
    assert min(r.mean_distance for r in table.rows) == next(
        r.mean_distance for r in table.rows if r.value == table.argmin)


def test_sweep_ca_and_bad_params(inst100):
    table = sweep(inst100, CaConfig(generations=20), "ca_max_age", 3, 4, 1, 1)
    assert len(table.rows) == 2
    with pytest.raises(ConfigurationError):
        sweep(inst100, StrategyConfig("rapid"), "nope", 1, 2, 1, 1)
    with pytest.raises(ConfigurationError):
        sweep(inst100, StrategyConfig("rapid"), "ca_max_age", 1, 2, 1, 1)


def _summary(mean, std, n=30, strategy="s", fp="f"):
    return CampaignSummary(strategy, n, 0, 100, mean, std, mean, mean, 0.0, None, None, 0.0, None,
                           n < 2, fp)


def test_compare_self_is_null():
    s = _summary(836.5, 12.0)
    pair = compare([s, s]).pairs[0]
    assert pair.diff_pct == 0.0 and pair.p_two_sided == pytest.approx(1.0)


def test_compare_published_percentages():
    report = compare([_summary(836.5, 10.0, strategy="fitness"), _summary(817.31, 10.0, strategy="rapid")])
    pair = report.pairs[0]
    assert pair.diff_pct == pytest.approx(2.348, abs=1e-3)
    assert pair.improvement_pct == pytest.approx(2.294, abs=1e-3)
    assert report.ordering == ["rapid", "fitness"]


def test_compare_zero_variance():
    report = compare([_summary(800.0, 0.0, strategy="a"), _summary(900.0, 0.0, strategy="b")])
    pair = report.pairs[0]
    assert pair.degenerate and pair.t_statistic == -math.inf
    assert pair.p_two_sided == 0.0 and pair.p_a_less == 0.0
    assert report.ordering == ["a", "b"]


def test_welch_against_direct_formula():
    from scipy import stats
    a = np.random.default_rng(0).normal(100, 5, 30)
    b = np.random.default_rng(1).normal(103, 9, 25)
    t, p, p_less, _ = welch(a.mean(), a.std(ddof=1), 30, b.mean(), b.std(ddof=1), 25)
    direct = stats.ttest_ind(a, b, equal_var=False)
    assert t == pytest.approx(direct.statistic) and p == pytest.approx(direct.pvalue)
    assert p_less == pytest.approx(stats.ttest_ind(a, b, equal_var=False, alternative="less").pvalue)


def test_compare_refuses_mixed_instances():
    with pytest.raises(ComparisonError):
        compare([_summary(1, 1, fp="a"), _summary(1, 1, fp="b")])
    with pytest.raises(ComparisonError):
        compare([_summary(1, 1)])


def test_reports_round_trip(inst100, tmp_path):
    summary, records = run_campaign(inst100, StrategyConfig("rapid"), 3, 1, generations=60, trace=True)
    write_reports(records, summary, tmp_path)
    header = (tmp_path / "rapid_runs.csv").read_text().splitlines()[0]
    assert tuple(header.split(",")) == CSV_COLUMNS
    back = read_runs_csv(tmp_path / "rapid_runs.csv")
    for orig, rec in zip(records, back):
        assert rec.strategy == orig.strategy and rec.seed == orig.seed
        assert rec.final_best_distance == pytest.approx(orig.final_best_distance, abs=5e-7)
        assert (rec.last_improvement_generation, rec.generations_executed, rec.deaths_total,
                rec.deaths_senescent) == (orig.last_improvement_generation, orig.generations_executed,
                                          orig.deaths_total, orig.deaths_senescent)
    loaded = load_summary(tmp_path / "rapid_summary.json")
    assert loaded == summary
    doc = json.loads((tmp_path / "rapid_summary.json").read_text())
    assert doc["prng"] == "numpy.random.Generator(PCG64)"
    assert doc["instance_fingerprint"] == inst100.fingerprint
    assert doc["config"]["max_age"] == 25
    for rec in records:
        trace = read_trace(tmp_path / "traces" / f"rapid_seed{rec.seed}.csv")
        assert len(trace) == 61 and np.all(np.diff(trace) <= 0)


def test_reports_byte_identical_except_wall_time(inst100, tmp_path):
    def strip(path):
        return [line.rsplit(",", 1)[0] for line in path.read_text().splitlines()]
    for name in ("a", "b"):
        summary, records = run_campaign(inst100, StrategyConfig("gradual"), 3, 7, generations=80)
        write_reports(records, summary, tmp_path / name)
    assert strip(tmp_path / "a" / "gradual_runs.csv") == strip(tmp_path / "b" / "gradual_runs.csv")
    assert ",," in (tmp_path / "a" / "gradual_runs.csv").read_text()
    assert (tmp_path / "a" / "gradual_summary.json").read_bytes() == \
        (tmp_path / "b" / "gradual_summary.json").read_bytes()


def test_report_io_error_names_path(inst100, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    summary, records = run_campaign(inst100, StrategyConfig("age"), 1, generations=1)
    with pytest.raises(OSError, match=str(blocker)):
        write_reports(records, summary, blocker / "sub")
