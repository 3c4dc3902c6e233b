"""Compiled double-edge-swap kernel for the bipartite null model."""
import numba
import numpy as np


@numba.njit(cache=True)
def swap_features(acc, feat, n_features, n_attempts, seed):
    """Swap features between random entry pairs in place; returns swaps made.

    A swap ``(a1, f1), (a2, f2) -> (a1, f2), (a2, f1)`` is rejected when it
    would duplicate an existing entry.
    """
    np.random.seed(seed)
    n_entries = acc.size
    present = set()
    for e in range(n_entries):
        present.add(acc[e] * n_features + feat[e])
    swaps = 0
    for _ in range(n_attempts):
        x = np.random.randint(0, n_entries)
        y = np.random.randint(0, n_entries)
        a1, f1, a2, f2 = acc[x], feat[x], acc[y], feat[y]
        if a1 == a2 or f1 == f2:
            continue
        k1 = a1 * n_features + f2
        k2 = a2 * n_features + f1
        if k1 in present or k2 in present:
            continue
        present.discard(a1 * n_features + f1)
        present.discard(a2 * n_features + f2)
        present.add(k1)
        present.add(k2)
        feat[x] = f2
        feat[y] = f1
        swaps += 1
    return swaps
