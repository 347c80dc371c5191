"""Jitted inner loops shared by the chromosome operators and the engines.

Every kernel takes the caller's ``numpy.random.Generator`` so one PCG64 stream
drives a whole run, whether a draw happens in Python or inside a kernel.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def tour_length(tour, dist):
    n = tour.shape[0]
    total = 0.0
    for i in range(n - 1):
        total += dist[tour[i], tour[i + 1]]
    total += dist[tour[n - 1], tour[0]]
    return total


@njit(cache=True)
def draw_cuts(rng, n):
    # unordered pair of distinct values in 0..n, returned sorted
    a = rng.integers(0, n + 1)
    b = rng.integers(0, n)
    if b >= a:
        b += 1
    if a > b:
        a, b = b, a
    return a, b


@njit(cache=True)
def order_crossover(p1, p2, a, b, out):
    """OX1: keep p1[a:b] in place, fill the rest left to right in p2's order."""
    n = p1.shape[0]
    used = np.zeros(n, np.bool_)
    for i in range(a, b):
        out[i] = p1[i]
        used[p1[i]] = True
    pos = 0
    for k in range(n):
        city = p2[k]
        if used[city]:
            continue
        if pos == a:
            pos = b
        out[pos] = city
        pos += 1


@njit(cache=True)
def mutate_inplace(tour, rate, rng):
    """Per-position swap mutation. Returns the number of swaps performed."""
    n = tour.shape[0]
    if rate <= 0.0 or n < 2:
        return 0
    swaps = 0
    for i in range(n):
        if rng.random() < rate:
            j = rng.integers(0, n - 1)
            if j >= i:
                j += 1
            tmp = tour[i]
            tour[i] = tour[j]
            tour[j] = tmp
            swaps += 1
    return swaps


@njit(cache=True)
def forced_swap(tour, rng):
    n = tour.shape[0]
    i = rng.integers(0, n)
    j = rng.integers(0, n - 1)
    if j >= i:
        j += 1
    tmp = tour[i]
    tour[i] = tour[j]
    tour[j] = tmp
    return i, j


@njit(cache=True)
def breed(tours, mothers, fathers, rate, dist, rng):
    """Child k = mutate(OX(tours[mothers[k]], tours[fathers[k]])) with fresh cuts."""
    k = mothers.shape[0]
    n = tours.shape[1]
    children = np.empty((k, n), tours.dtype)
    lengths = np.empty(k)
    for row in range(k):
        a, b = draw_cuts(rng, n)
        order_crossover(tours[mothers[row]], tours[fathers[row]], a, b, children[row])
        mutate_inplace(children[row], rate, rng)
        lengths[row] = tour_length(children[row], dist)
    return children, lengths


@njit(cache=True)
def ca_sweep(tours, lengths, ages, occupied, height, width, rate, dist, rng):
    """One in-place row-major sweep over the torus.

    Returns (asexual fills, crossover replacements).
    """
    n = tours.shape[1]
    child = np.empty(n, tours.dtype)
    fills = 0
    replaced = 0
    for r in range(height):
        for c in range(width):
            here = r * width + c
            if not occupied[here]:
                continue
            pick = rng.integers(0, 8)
            # skip the centre of the 3x3 block
            if pick >= 4:
                pick += 1
            nr = (r + pick // 3 - 1) % height
            nc = (c + pick % 3 - 1) % width
            there = nr * width + nc
            if not occupied[there]:
                tours[there, :] = tours[here]
                forced_swap(tours[there], rng)
                lengths[there] = tour_length(tours[there], dist)
                ages[there] = 0
                occupied[there] = True
                fills += 1
                continue
            a, b = draw_cuts(rng, n)
            order_crossover(tours[here], tours[there], a, b, child)
            mutate_inplace(child, rate, rng)
            child_len = tour_length(child, dist)
            # ties between parents displace the mate, not the actor
            loser = there if lengths[there] >= lengths[here] else here
            if child_len < lengths[loser]:
                tours[loser, :] = child
                lengths[loser] = child_len
                ages[loser] = 0
                replaced += 1
    return fills, replaced
