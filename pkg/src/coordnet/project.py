"""Projection of the bipartite network onto the account coordination network.

Pairs are enumerated from the feature side: every feature contributes one
term to each pair of accounts holding it. Contributions are merged by pair
key after a global sort on ``(pair, feature)``, so the floating point sums
are always taken in ascending feature order and the result does not depend
on how many threads produced them.
"""
from __future__ import annotations

import logging
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Mapping, Sequence

import numpy as np

from .extract import estimate_jaccard, hashtag_ngrams, minhash_signature
from .model import BipartiteNetwork, ConfigError, CoordinationNetwork, Similarity, Weighting

logger = logging.getLogger(__name__)

DEFAULT_MAX_FEATURE_DEGREE = 10_000
_BLOCK_PAIRS = 4_000_000


def _feature_pairs(csc, cols: np.ndarray, n_accounts: int, with_weights: bool):
    """Pair keys, feature ids and weight products for the given columns."""
    indptr, indices, data = csc.indptr, csc.indices, csc.data
    df = indptr[cols + 1] - indptr[cols]
    keys, feats, prods = [], [], []
    for d in np.unique(df):
        group = cols[df == d]
        iu, iv = np.triu_indices(int(d), 1)
        step = max(1, _BLOCK_PAIRS // max(iu.size, 1))
        for s in range(0, group.size, step):
            g = group[s:s + step]
            pos = indptr[g][:, None] + np.arange(d)
            rows = indices[pos].astype(np.int64)
            keys.append((rows[:, iu] * n_accounts + rows[:, iv]).ravel())
            feats.append(np.repeat(g, iu.size))
            if with_weights:
                w = data[pos]
                prods.append((w[:, iu] * w[:, iv]).ravel())
    if not keys:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    return (
        np.concatenate(keys),
        np.concatenate(feats),
        np.concatenate(prods) if with_weights else np.zeros(0),
    )


def project(
    net: BipartiteNetwork,
    similarity: Similarity | str = Similarity.COOCCURRENCE,
    *,
    max_feature_degree: int | None = DEFAULT_MAX_FEATURE_DEGREE,
    threads: int | None = 1,
) -> CoordinationNetwork:
    """Project ``net`` onto its accounts.

    Parameters
    ----------
    similarity : {"cooccurrence", "jaccard", "cosine"}
        ``cooccurrence`` counts shared distinct features, ``jaccard`` divides
        that by the union size, ``cosine`` compares the weight vectors.
    max_feature_degree : int or None
        Features held by more accounts than this are skipped when enumerating
        pairs. ``None`` disables the guard.
    threads : int or None
        Worker threads for pair enumeration; ``None`` means all cores. The
        output is identical for every value.
    """
    similarity = Similarity(similarity)
    if similarity is Similarity.COSINE and net.weighting is Weighting.BINARY:
        raise ConfigError("cosine similarity needs a count or tfidf weighted network")
    n = net.n_accounts
    csc = net.matrix.tocsc()
    csc.sort_indices()
    df = np.diff(csc.indptr)
    cols = np.flatnonzero(df >= 2)
    if max_feature_degree is not None:
        hot = cols[df[cols] > max_feature_degree]
        if hot.size:
            logger.warning(
                "skipping %d features with degree > %d (largest %d)",
                hot.size, max_feature_degree, int(df[hot].max()),
            )
            cols = cols[df[cols] <= max_feature_degree]

    with_weights = similarity is Similarity.COSINE
    threads = threads or os.cpu_count() or 1
    if threads > 1 and cols.size > 1:
        chunks = [c for c in np.array_split(cols, threads) if c.size]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(lambda c: _feature_pairs(csc, c, n, with_weights), chunks))
        keys = np.concatenate([p[0] for p in parts])
        feats = np.concatenate([p[1] for p in parts])
        prods = np.concatenate([p[2] for p in parts])
    else:
        keys, feats, prods = _feature_pairs(csc, cols, n, with_weights)

    if keys.size == 0:
        return CoordinationNetwork.empty(net.accounts, similarity)

    if with_weights:
        order = np.lexsort((feats, keys))
    else:
        order = np.argsort(keys, kind="stable")
    keys = keys[order]
    starts = np.concatenate([[0], np.flatnonzero(np.diff(keys)) + 1])
    pair = keys[starts]
    u, v = pair // n, pair % n

    if similarity is Similarity.COSINE:
        dot = np.add.reduceat(prods[order], starts)
        sq = net.matrix.multiply(net.matrix).sum(axis=1)
        norms = np.sqrt(np.asarray(sq).ravel())
        weight = np.minimum(dot / (norms[u] * norms[v]), 1.0)
    else:
        shared = np.diff(np.concatenate([starts, [keys.size]])).astype(np.float64)
        if similarity is Similarity.COOCCURRENCE:
            weight = shared
        else:
            size = net.account_degrees.astype(np.float64)
            weight = shared / (size[u] + size[v] - shared)
    keep = weight > 0
    return CoordinationNetwork(net.accounts, u[keep], v[keep], weight[keep], similarity)


def account_vector(net: BipartiteNetwork, account: str) -> list[tuple[int, float]]:
    """Sparse ``(feature_index, weight)`` list for one account, sorted by index."""
    try:
        i = net.account_index[account]
    except KeyError:
        raise KeyError(f"unknown account {account!r}") from None
    m = net.matrix
    lo, hi = m.indptr[i], m.indptr[i + 1]
    return list(zip(m.indices[lo:hi].tolist(), m.data[lo:hi].tolist()))


def _band_rows(num_perms: int) -> int:
    for r in (4, 3, 2):
        if num_perms % r == 0:
            return r
    return 1


def project_fuzzy_sequences(
    sequences: Mapping[object, Mapping[str, Sequence[str]]],
    *,
    threshold: float = 0.8,
    num_perms: int = 128,
    ngram: int = 2,
    seed: int = 0,
) -> CoordinationNetwork:
    """Connect accounts whose hashtag sequences are near-duplicates.

    ``sequences`` maps a window (day) to ``{account: sequence}``. Within each
    window, candidate pairs come from LSH banding of MinHash signatures over
    hashtag n-grams; a pair becomes an edge when its estimated Jaccard is at
    least ``threshold``. The edge weight is the best estimate over windows.
    """
    nodes = sorted({a for per_day in sequences.values() for a in per_day})
    index = {a: i for i, a in enumerate(nodes)}
    rows = _band_rows(num_perms)
    best: dict[tuple[int, int], float] = {}
    for window in sequences:
        per_day = sequences[window]
        accounts = sorted(per_day)
        sigs = {a: minhash_signature(hashtag_ngrams(per_day[a], ngram), num_perms, seed) for a in accounts}
        candidates = set()
        for b in range(num_perms // rows):
            buckets = defaultdict(list)
            for a in accounts:
                buckets[sigs[a].hashes[b * rows:(b + 1) * rows].tobytes()].append(a)
            for members in buckets.values():
                for i in range(len(members)):
                    for j in range(i + 1, len(members)):
                        candidates.add((members[i], members[j]))
        for a, c in candidates:
            est = estimate_jaccard(sigs[a], sigs[c])
            if est >= threshold:
                key = tuple(sorted((index[a], index[c])))
                best[key] = max(best.get(key, 0.0), est)
    if not best:
        return CoordinationNetwork.empty(nodes, Similarity.JACCARD)
    pairs = sorted(best)
    u = np.array([p[0] for p in pairs], dtype=np.int64)
    v = np.array([p[1] for p in pairs], dtype=np.int64)
    w = np.array([best[p] for p in pairs])
    return CoordinationNetwork(nodes, u, v, w, Similarity.JACCARD)
