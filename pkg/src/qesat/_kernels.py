"""Compiled inner loops.

The arithmetic here is element-for-element the same as the numpy
versions in :mod:`qesat.relaxation`, so traced and untraced runs with
the same seed take identical paths. Fitness is always evaluated here,
which pins the order of the floating-point products.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def fitness(x, index, offset, sign):
    n = x.size
    total = 1.0
    for c in range(index.shape[0]):
        miss = 1.0
        for j in range(index.shape[1]):
            k = index[c, j]
            if k < n:
                miss *= offset[c, j] + sign[c, j] * x[k]
        total *= 1.0 - miss
    return total


@njit(cache=True)
def count_satisfied(x, index, negated):
    n = x.size
    count = 0
    for c in range(index.shape[0]):
        for j in range(index.shape[1]):
            k = index[c, j]
            if k < n and (x[k] >= 0.5) != negated[c, j]:
                count += 1
                break
    return count


@njit(cache=True)
def _flux_into(x, delta, stay, rng, out):
    up = stay + (1.0 - stay) / 2.0
    for i in range(x.size):
        u = rng.random()
        v = x[i]
        if u >= up:
            v = v - delta
        elif u >= stay:
            v = v + delta
        out[i] = max(min(v, 1.0), 0.0)


@njit(cache=True)
def _quantize_into(x, g, out):
    for i in range(x.size):
        out[i] = max(min(np.floor(x[i] / g + 0.5) * g, 1.0), 0.0)


@njit(cache=True)
def run_cycles(
    xs, deltas, etas, last_q, best_sat, rngs,
    index, offset, sign, negated,
    mu, delta_min, delta_max, stay, force, ref_last, cycles,
):
    """Run up to ``cycles`` full cycles over every member, in place.

    Returns ``(cycles_done, winner)``; ``winner`` is the lowest member
    index whose rounded solution satisfies the formula, or -1.
    """
    size, n = xs.shape
    m = index.shape[0]
    cand = np.empty(n)
    for done in range(cycles):
        winner = -1
        for i in range(size):
            x = xs[i]
            rng = rngs[i]
            # gradual phase
            if etas[i] < 1.0:
                while True:
                    d = deltas[i]
                    at_floor = d <= delta_min
                    _flux_into(x, d, stay, rng, cand)
                    e = fitness(cand, index, offset, sign)
                    if e > etas[i]:
                        x[:] = cand
                        etas[i] = e
                        break
                    deltas[i] = max(d / mu, delta_min)
                    if at_floor:
                        break
            # quantization phase
            ref = last_q[i] if ref_last else etas[i]
            first = True
            while True:
                d = deltas[i]
                _quantize_into(x, min(d * mu, 1.0), cand)
                eq = fitness(cand, index, offset, sign)
                last_q[i] = eq
                improved = eq > ref
                if improved or (first and force):
                    x[:] = cand
                    etas[i] = eq
                first = False
                if improved and d < delta_max:
                    deltas[i] = min(d * mu, delta_max)
                    ref = eq
                    continue
                break
            # admissibility check
            sat = count_satisfied(x, index, negated)
            if sat > best_sat[i]:
                best_sat[i] = sat
            if sat == m and winner < 0:
                winner = i
        if winner >= 0:
            return done + 1, winner
        if size > 1:
            lead = 0
            for i in range(1, size):
                if etas[i] > etas[lead]:
                    lead = i
            for i in range(size):
                if i != lead:
                    xs[i, :] = xs[lead]
                    deltas[i] = deltas[lead]
                    etas[i] = etas[lead]
                    last_q[i] = last_q[lead]
    return cycles, -1
