"""Independent reference computations. None of these call into the code
path they check."""
from fractions import Fraction
from functools import reduce
from itertools import product

import numpy as np


def dense_composition(x, layers):
    """Collapse identity layers into one affine map before applying it."""
    A = np.eye(len(x))
    b = np.zeros(len(x))
    for L in layers:
        A = L.weights @ A
        b = L.weights @ b + L.bias
    return A @ np.asarray(x, dtype=float) + b


def hop_intersection(payload, bandwidths):
    return reduce(lambda acc, bw: acc & bw, bandwidths, frozenset(payload))


def brute_pairing(ids, promises, weights=None):
    """Entry (i, j) = w iff some offer i->j and some acceptance j->i exist."""
    weights = weights or {}
    n = len(ids)
    M = np.zeros((n, n))
    for (a, i), (b, j) in product(enumerate(ids), repeat=2):
        offer = any(p.giver == i and p.receiver == j and p.polarity.value == "+" for p in promises)
        accept = any(p.giver == j and p.receiver == i and p.polarity.value == "-" for p in promises)
        if offer and accept:
            M[a, b] = weights.get((i, j), 1.0)
    return M


def all_simple_paths(n, edges, s, t):
    succ = {v: [w for (u, w) in edges if u == v] for v in range(n)}
    out = []

    def go(path):
        v = path[-1]
        if v == t:
            out.append(tuple(path))
            return
        for w in succ[v]:
            if w not in path:
                go(path + [w])

    go([s])
    return out


def betweenness_by_enumeration(n, edges):
    """Directed betweenness from every shortest path between every ordered pair."""
    cb = [Fraction(0)] * n
    for s, t in product(range(n), repeat=2):
        if s == t:
            continue
        paths = all_simple_paths(n, edges, s, t)
        if not paths:
            continue
        shortest = min(len(p) for p in paths)
        best = [p for p in paths if len(p) == shortest]
        for v in range(n):
            if v in (s, t):
                continue
            cb[v] += Fraction(sum(v in p for p in best), len(best))
    return cb


def dense_evc(S):
    """Leading eigenvector of a symmetric matrix, max-normalized."""
    vals, vecs = np.linalg.eigh(S)
    v = np.abs(vecs[:, np.argmax(vals)])
    return v / v.max()


def population_stats(values):
    v = np.asarray(values, dtype=float)
    return v.mean(), np.sqrt(((v - v.mean()) ** 2).mean())


def direct_delta(grid, n, tau, neighbours):
    """Delta for cell (n, tau) of a (periods x slots) array, one sample per cell.

    The slot reference uses every other period; the local reference uses the
    ``neighbours`` slots on each side in period ``n``. Population deviations.
    """
    periods, slots = grid.shape
    x = grid[n, tau]
    column = np.delete(grid[:, tau], n)
    ring = grid[n, [(tau + k) % slots for k in range(-neighbours, neighbours + 1) if k]]
    z_t = (x - column.mean()) / column.std()
    z_p = (x - ring.mean()) / ring.std()
    return float(np.hypot(z_t, z_p))
