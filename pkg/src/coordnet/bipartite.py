"""Account-feature bipartite network construction, weighting and pruning."""
from __future__ import annotations

from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .model import AccountFeatureTriple, AggregationError, BipartiteNetwork, Weighting


def build_bipartite(
    triples: Iterable[AccountFeatureTriple], weighting: Weighting | str = Weighting.COUNT
) -> BipartiteNetwork:
    """Build the incidence matrix; indices follow first appearance order.

    ``weighting`` must be ``binary`` or ``count``; apply :func:`tfidf_weight`
    on a count network to get TF-IDF.
    """
    weighting = Weighting(weighting)
    if weighting is Weighting.TFIDF:
        raise ValueError("build with count weighting, then call tfidf_weight")
    acc_index: dict[str, int] = {}
    feat_index: dict = {}
    rows, cols, vals = [], [], []
    seen = set()
    for t in triples:
        i = acc_index.setdefault(t.account, len(acc_index))
        j = feat_index.setdefault(t.feature, len(feat_index))
        if (i, j) in seen:
            raise AggregationError(f"duplicate entry for ({t.account!r}, {t.feature})")
        seen.add((i, j))
        rows.append(i)
        cols.append(j)
        vals.append(1.0 if weighting is Weighting.BINARY else float(t.multiplicity))
    m = sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(len(acc_index), len(feat_index)),
    )
    return BipartiteNetwork(tuple(acc_index), tuple(feat_index), m, weighting)


def _select(net: BipartiteNetwork, matrix: sp.csr_matrix, keep_features: np.ndarray, weighting, idf=None):
    """Restrict to ``keep_features`` columns, then drop accounts left empty."""
    matrix = sp.csr_matrix(matrix[:, keep_features])
    matrix.eliminate_zeros()
    keep_accounts = np.flatnonzero(np.diff(matrix.indptr) > 0)
    matrix = matrix[keep_accounts]
    if idf is not None:
        idf = idf[keep_features]
    return BipartiteNetwork(
        tuple(net.accounts[i] for i in keep_accounts),
        tuple(net.features[j] for j in keep_features),
        matrix,
        weighting,
        idf,
    )


def tfidf_weight(net: BipartiteNetwork) -> BipartiteNetwork:
    """Reweight a count network by ``tf * ln(N / df)``.

    Features held by every account get zero weight and are removed, along
    with any account left without entries.
    """
    if net.weighting is not Weighting.COUNT:
        raise ValueError("tfidf_weight requires a count-weighted network")
    n = net.n_accounts
    df = net.feature_degrees
    idf = np.log(n / np.maximum(df, 1)) if n else np.zeros(0)
    weighted = sp.csr_matrix(net.matrix.multiply(idf[None, :]))
    keep = np.flatnonzero(df < n)
    return _select(net, weighted, keep, Weighting.TFIDF, idf)


def prune_features(net: BipartiteNetwork, min_accounts: int = 2) -> BipartiteNetwork:
    """Drop features held by fewer than ``min_accounts`` accounts."""
    if min_accounts < 1:
        raise ValueError("min_accounts must be >= 1")
    keep = np.flatnonzero(net.feature_degrees >= min_accounts)
    if keep.size == net.n_features:
        return net
    return _select(net, net.matrix, keep, net.weighting, net.idf)


def term_frequencies(net: BipartiteNetwork) -> sp.csr_matrix:
    """Recover raw counts from a TF-IDF network (identity for other weightings)."""
    if net.weighting is not Weighting.TFIDF:
        return net.matrix.copy()
    tf = net.matrix.copy()
    tf.data = np.rint(tf.data / net.idf[tf.indices])
    return tf
