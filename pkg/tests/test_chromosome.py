import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from senescent_ga import _kernels
from senescent_ga.chromosome import (
    Chromosome, InvalidMatingError, forced_single_mutation, make_rng, mutate, mutate_tour,
    random_chromosome, two_point_crossover,
)
from senescent_ga.tsp import generate_instance, tour_length


def ox1_reference(p1, p2, a, b):
    """Plain-list OX1: segment from p1 in place, the rest in p2's order."""
    seg = list(p1[a:b])
    rest = [c for c in p2 if c not in seg]
    return rest[:a] + seg + rest[a:]


def is_perm(tour, n):
    return sorted(tour.tolist()) == list(range(n))


def test_random_chromosome_is_permutation(inst100):
    ch = random_chromosome(inst100, make_rng(1))
    assert is_perm(ch.tour, 100)
    assert ch.current_age == 0
    assert ch.distance == tour_length(inst100, ch.tour)


def test_random_chromosomes_differ_across_seeds(inst100):
    assert not random_chromosome(inst100, make_rng(1)).same_genome(random_chromosome(inst100, make_rng(2)))


def test_first_city_uniform(small_inst):
    rng = make_rng(5)
    firsts = [random_chromosome(small_inst, rng).tour[0] for _ in range(10_000)]
    counts = np.bincount(firsts, minlength=small_inst.n)
    assert stats.chisquare(counts).pvalue > 0.001


def test_crossover_identical_parents(inst100):
    p = random_chromosome(inst100, make_rng(3))
    rng = make_rng(4)
    for _ in range(50):
        assert two_point_crossover(p, p, rng).same_genome(p)


def test_crossover_full_segment_copies_first_parent(inst100):
    rng = make_rng(3)
    p1, p2 = random_chromosome(inst100, rng), random_chromosome(inst100, rng)
    assert two_point_crossover(p1, p2, rng, cuts=(0, 100)).same_genome(p1)


def test_crossover_hand_trace():
    inst = generate_instance(1, 5)
    p1 = Chromosome(inst, [0, 1, 2, 3, 4])
    p2 = Chromosome(inst, [4, 3, 2, 1, 0])
    child = two_point_crossover(p1, p2, make_rng(0), cuts=(1, 3))
    assert child.tour.tolist() == [4, 1, 2, 3, 0]
    assert child.current_age == 0


@settings(max_examples=300, deadline=None)
@given(st.integers(3, 30), st.data())
def test_crossover_matches_reference(n, data):
    perm = st.permutations(list(range(n)))
    p1, p2 = data.draw(perm), data.draw(perm)
    a = data.draw(st.integers(0, n - 1))
    b = data.draw(st.integers(a + 1, n))
    out = np.empty(n, np.int64)
    _kernels.order_crossover(np.array(p1), np.array(p2), a, b, out)
    assert out.tolist() == ox1_reference(p1, p2, a, b)


def test_crossover_rejects_size_mismatch():
    rng = make_rng(0)
    a = random_chromosome(generate_instance(1, 5), rng)
    b = random_chromosome(generate_instance(1, 6), rng)
    with pytest.raises(InvalidMatingError):
        two_point_crossover(a, b, rng)


def test_cut_points_cover_all_sorted_pairs():
    rng = make_rng(9)
    n = 4
    seen = {tuple(int(x) for x in _kernels.draw_cuts(rng, n)) for _ in range(5000)}
    assert seen == {(a, b) for a in range(n + 1) for b in range(a + 1, n + 1)}


def test_offspring_resets_age(inst100):
    rng = make_rng(0)
    old = Chromosome(inst100, rng.permutation(100), current_age=40, max_age=25, life_budget=3.0)
    child = two_point_crossover(old, old, rng)
    assert (child.current_age, child.max_age, child.life_budget) == (0, 25, None)


def test_mutation_rate_zero_is_identity(inst100):
    ch = random_chromosome(inst100, make_rng(1))
    assert mutate(ch, make_rng(2), 0.0).same_genome(ch)


def test_mutation_rate_one_two_cities():
    rng = make_rng(0)
    tour = np.array([0, 1], dtype=np.int64)
    for _ in range(100):
        mutate_tour(tour, 1.0, rng)
        assert sorted(tour.tolist()) == [0, 1]


def test_mutation_count_poisson_band():
    rng = make_rng(12)
    tour = np.arange(1000, dtype=np.int64)
    count = sum(mutate_tour(tour, 1e-4, rng) for _ in range(1000))
    assert 70 <= count <= 130


def test_mutation_refreshes_distance(inst100):
    ch = random_chromosome(inst100, make_rng(1))
    mutated = mutate(ch, make_rng(2), 0.5)
    assert not mutated.same_genome(ch)
    assert mutated.distance == tour_length(inst100, mutated.tour)


def test_mutation_rejects_bad_rate():
    with pytest.raises(ValueError):
        mutate_tour(np.arange(5), 1.5, make_rng(0))


def test_forced_mutation_swaps_exactly_two(inst100):
    rng = make_rng(5)
    ch = random_chromosome(inst100, rng)
    for _ in range(200):
        child = forced_single_mutation(ch, rng)
        assert int((child.tour != ch.tour).sum()) == 2
        assert is_perm(child.tour, 100)
        assert child.current_age == 0


def test_forced_mutation_is_involution(inst100):
    ch = random_chromosome(inst100, make_rng(5))
    once = forced_single_mutation(ch, make_rng(77))
    twice = forced_single_mutation(once, make_rng(77))
    assert twice.same_genome(ch)


def test_operators_preserve_permutations(inst100):
    """Acceptance 1 at small scale; the full 10,000-application run lives in test_acceptance."""
    rng = make_rng(21)
    pool = [random_chromosome(inst100, rng) for _ in range(10)]
    for _ in range(500):
        i, j = rng.integers(0, 10, 2)
        child = mutate(two_point_crossover(pool[i], pool[j], rng), rng, 0.05)
        child = forced_single_mutation(child, rng)
        assert is_perm(child.tour, 100)
        assert child.distance == pytest.approx(tour_length(inst100, child.tour), rel=1e-12)
        pool[int(rng.integers(0, 10))] = child
