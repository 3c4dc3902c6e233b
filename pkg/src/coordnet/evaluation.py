"""Synthetic ground truth, test oracles and evaluation utilities."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .bipartite import term_frequencies
from .cluster import percentile_threshold
from .model import (
    BipartiteNetwork,
    ClusterSet,
    ConfigError,
    CoordinationNetwork,
    Extractor,
    PipelineConfig,
    Similarity,
    TraceKind,
    TraceRecord,
    Weighting,
)

logger = logging.getLogger(__name__)

BACKGROUND = "background"
WINDOW_START = 1_609_459_200  # 2021-01-01T00:00:00Z
WINDOW_SECONDS = 7 * 86_400
BRUTE_FORCE_MAX_ACCOUNTS = 200


@dataclass(frozen=True)
class SynthConfig:
    n_background: int = 1000
    n_groups: int = 5
    group_size: int = 20
    records_per_account: int = 20
    vocab_size: int = 10_000
    zipf_exponent: float = 1.1
    p_copy: float = 0.9
    trace_kind: Extractor = Extractor.RETWEET
    seed: int = 0
    time_bin_seconds: int = 1800

    def __post_init__(self):
        object.__setattr__(self, "trace_kind", Extractor(self.trace_kind))
        for name in ("n_background", "group_size", "records_per_account", "vocab_size", "time_bin_seconds"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_groups < 0:
            raise ConfigError("n_groups must be >= 0")
        if self.n_groups and self.group_size < 2:
            raise ConfigError("group_size must be >= 2")
        if not (0.0 <= self.p_copy <= 1.0):
            raise ConfigError("p_copy must be in [0,1]")
        if self.zipf_exponent <= 0:
            raise ConfigError("zipf_exponent must be positive")

    @property
    def n_accounts(self) -> int:
        return self.n_background + self.n_groups * self.group_size

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["trace_kind"] = self.trace_kind.value
        return d


@dataclass(frozen=True)
class PlantedDataset:
    records: list[TraceRecord]
    labels: dict[str, str]
    generator_params: SynthConfig = field(default_factory=SynthConfig)

    @property
    def planted_accounts(self) -> set[str]:
        return {a for a, lab in self.labels.items() if lab != BACKGROUND}


def _synthetic_histogram(code: int, bins: int = 128) -> tuple[int, ...]:
    hist = [0] * (3 * bins)
    for ch in range(3):
        hist[ch * bins + code % bins] = 100
        code //= bins
    return tuple(hist)


def _make_record(kind: Extractor, account: str, ts: int, feature: str, code: int, serial: int) -> TraceRecord:
    tweet_id = f"s{serial:08d}"
    if kind is Extractor.RETWEET:
        return TraceRecord(account, ts, TraceKind.RETWEET, tweet_id=tweet_id, retweeted_tweet_id=feature)
    if kind is Extractor.HANDLE:
        return TraceRecord(account, ts, TraceKind.HANDLE_SIGHTING, handle=feature)
    if kind is Extractor.IMAGE:
        return TraceRecord(account, ts, TraceKind.TWEET, tweet_id=tweet_id, image_histograms=(_synthetic_histogram(code),))
    if kind is Extractor.HASHTAG_SEQUENCE:
        return TraceRecord(account, ts, TraceKind.TWEET, tweet_id=tweet_id, hashtags=(feature,))
    return TraceRecord(account, ts, TraceKind.TWEET, tweet_id=tweet_id)


def generate_planted(cfg: SynthConfig) -> PlantedDataset:
    """Background accounts drawing Zipf-distributed features plus copying groups.

    Each group owns a private pool of ``records_per_account`` features; every
    record of a member comes from the pool with probability ``p_copy`` and from
    the background vocabulary otherwise. For ``time_sync`` the pool is a set
    of time bins inside the 7-day window.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_accounts
    r = cfg.records_per_account
    ids = [f"u{k:05d}" for k in rng.permutation(n)]
    labels = {ids[i]: BACKGROUND for i in range(cfg.n_background)}
    for g in range(cfg.n_groups):
        for m in range(cfg.group_size):
            labels[ids[cfg.n_background + g * cfg.group_size + m]] = f"group_{g}"

    ranks = np.arange(1, cfg.vocab_size + 1, dtype=np.float64)
    zipf_p = ranks ** -cfg.zipf_exponent
    zipf_p /= zipf_p.sum()
    kind = cfg.trace_kind
    bin_w = cfg.time_bin_seconds
    n_bins = WINDOW_SECONDS // bin_w
    pools = [rng.choice(n_bins, size=r, replace=n_bins < r) for _ in range(cfg.n_groups)]

    records: list[TraceRecord] = []
    serial = 0
    for slot in range(n):
        group = -1 if slot < cfg.n_background else (slot - cfg.n_background) // cfg.group_size
        copy = rng.random(r) < cfg.p_copy if group >= 0 else np.zeros(r, dtype=bool)
        bg_draw = rng.choice(cfg.vocab_size, size=r, p=zipf_p)
        pool_draw = rng.integers(0, r, size=r)
        ts = rng.integers(WINDOW_START, WINDOW_START + WINDOW_SECONDS, size=r)
        rows = []
        for k in range(r):
            if kind is Extractor.TIME_SYNC:
                if copy[k]:
                    ts[k] = WINDOW_START + int(pools[group][pool_draw[k]]) * bin_w + int(ts[k]) % bin_w
                feature, code = "", 0
            elif copy[k]:
                feature = f"g{group}_{pool_draw[k]}"
                code = cfg.vocab_size + group * r + int(pool_draw[k])
            else:
                feature, code = f"f{bg_draw[k]}", int(bg_draw[k])
            rows.append((int(ts[k]), feature, code))
        for t, feature, code in sorted(rows):
            records.append(_make_record(kind, ids[slot], t, feature, code, serial))
            serial += 1
    records.sort(key=lambda rec: (rec.account, rec.timestamp, rec.tweet_id or ""))
    labels = dict(sorted(labels.items()))
    return PlantedDataset(records, labels, cfg)


# -- oracle -------------------------------------------------------------------

def brute_force_project(net: BipartiteNetwork, similarity: Similarity | str) -> CoordinationNetwork:
    """Dense double loop over all account pairs; a reference for ``project``."""
    similarity = Similarity(similarity)
    n = net.n_accounts
    if n > BRUTE_FORCE_MAX_ACCOUNTS:
        raise ValueError(f"brute force projection limited to {BRUTE_FORCE_MAX_ACCOUNTS} accounts")
    if similarity is Similarity.COSINE and net.weighting is Weighting.BINARY:
        raise ConfigError("cosine similarity needs a count or tfidf weighted network")
    dense = net.matrix.toarray()
    sets = [set(np.flatnonzero(row).tolist()) for row in dense]
    us, vs, ws = [], [], []
    for i in range(n):
        for j in range(i + 1, n):
            shared = len(sets[i] & sets[j])
            if shared == 0:
                continue
            if similarity is Similarity.COOCCURRENCE:
                w = float(shared)
            elif similarity is Similarity.JACCARD:
                w = shared / len(sets[i] | sets[j])
            else:
                dot = sum(dense[i, f] * dense[j, f] for f in sets[i] & sets[j])
                w = dot / (np.sqrt(sum(x * x for x in dense[i])) * np.sqrt(sum(x * x for x in dense[j])))
            if w > 0:
                us.append(i)
                vs.append(j)
                ws.append(w)
    return CoordinationNetwork(net.accounts, np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64), np.array(ws), similarity)


# -- metrics ------------------------------------------------------------------

class PrecisionRecall(NamedTuple):
    precision: float | None
    recall: float | None


def precision_recall(clusters: ClusterSet, labels: Mapping[str, str]) -> PrecisionRecall:
    """Precision over clustered accounts, recall over planted accounts.

    Precision is ``None`` when nothing is clustered; recall is ``None`` only
    when the labels contain no planted account.
    """
    missing = [a for a in clusters.assignments if a not in labels]
    if missing:
        raise ValueError(f"{len(missing)} clustered accounts have no label, e.g. {missing[0]!r}")
    planted = {a for a, lab in labels.items() if lab != BACKGROUND}
    flagged = set(clusters.assignments)
    hits = len(flagged & planted)
    precision = hits / len(flagged) if flagged else None
    recall = hits / len(planted) if planted else None
    return PrecisionRecall(precision, recall)


class SweepRow(NamedTuple):
    threshold: int
    precision: float | None
    recall: float | None
    n_flagged: int


def support_sweep(
    dataset: PlantedDataset,
    config: PipelineConfig,
    thresholds: Sequence[int],
    **pipeline_kwargs,
) -> list[SweepRow]:
    """Re-run the pipeline at each support threshold, everything else fixed."""
    from .pipeline import run_pipeline

    if list(thresholds) != sorted(thresholds):
        raise ValueError("thresholds must be ascending")
    rows = []
    for t in thresholds:
        result = run_pipeline(dataset.records, config.replace(min_support=int(t)), **pipeline_kwargs)
        pr = precision_recall(result.clusters, dataset.labels)
        rows.append(SweepRow(int(t), pr.precision, pr.recall, len(result.clusters)))
    return rows


class WeightHistogram(NamedTuple):
    bins: list[tuple[float, float, int]]
    threshold: float | None


def weight_histogram(
    net: CoordinationNetwork, n_bins: int = 50, log_scale: bool = False, keep_fraction: float | None = None
) -> WeightHistogram:
    """Histogram of edge weights, plus the percentile-filter cutoff when asked."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if net.n_edges == 0:
        return WeightHistogram([], None)
    w = net.weight
    lo, hi = float(w.min()), float(w.max())
    if log_scale:
        if lo <= 0:
            raise ValueError("log-scale histogram needs positive weights")
        edges = np.geomspace(lo, hi, n_bins + 1) if hi > lo else np.array([lo, hi])
    else:
        edges = np.linspace(lo, hi, n_bins + 1) if hi > lo else np.array([lo, hi])
    counts, edges = np.histogram(w, bins=edges)
    bins = [(float(edges[k]), float(edges[k + 1]), int(c)) for k, c in enumerate(counts)]
    threshold = percentile_threshold(net, keep_fraction) if keep_fraction is not None else None
    return WeightHistogram(bins, threshold)


# -- Monte Carlo null model -----------------------------------------------------

def _entries(net: BipartiteNetwork):
    tf = term_frequencies(net).tocoo()
    return tf.row.astype(np.int64), tf.col.astype(np.int64), tf.data.astype(np.float64)


def _rebuild(net: BipartiteNetwork, acc, feat, tf) -> sp.csr_matrix:
    w = tf * net.idf[feat] if net.weighting is Weighting.TFIDF else tf
    return sp.csr_matrix((w, (acc, feat)), shape=(net.n_accounts, net.n_features))


def _swap(net: BipartiteNetwork, acc, feat, seed: int, swaps_per_entry: int) -> np.ndarray:
    feat = feat.copy()
    if acc.size >= 2:
        from ._swap import swap_features

        swap_features(acc, feat, np.int64(net.n_features), np.int64(swaps_per_entry * acc.size), np.int64(seed % 2**32))
    return feat


def degree_preserving_shuffle(net: BipartiteNetwork, seed: int = 0, swaps_per_entry: int = 10) -> BipartiteNetwork:
    """Randomise the bipartite edges by double-edge swaps.

    Both degree sequences are preserved and no (account, feature) entry is
    duplicated. Raw counts stay with their account; TF-IDF weights are
    recomputed from the unchanged per-feature IDF.
    """
    acc, feat, tf = _entries(net)
    new_feat = _swap(net, acc, feat, seed, swaps_per_entry)
    return BipartiteNetwork(net.accounts, net.features, _rebuild(net, acc, new_feat, tf), net.weighting, net.idf)


def _pair_similarity(matrix: sp.csr_matrix, iu: np.ndarray, iv: np.ndarray, similarity: Similarity) -> np.ndarray:
    a, b = matrix[iu], matrix[iv]
    if similarity is Similarity.COSINE:
        dot = np.asarray(a.multiply(b).sum(axis=1)).ravel()
        na = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
        nb = np.sqrt(np.asarray(b.multiply(b).sum(axis=1)).ravel())
        return dot / (na * nb)
    a, b = (a != 0).astype(np.float64), (b != 0).astype(np.float64)
    shared = np.asarray(a.multiply(b).sum(axis=1)).ravel()
    if similarity is Similarity.COOCCURRENCE:
        return shared
    sizes = np.asarray(a.sum(axis=1)).ravel() + np.asarray(b.sum(axis=1)).ravel()
    return shared / (sizes - shared)


def null_model_pvalues(
    net: BipartiteNetwork,
    edges: Sequence[tuple[str, str]],
    n_shuffles: int = 200,
    seed: int = 0,
    similarity: Similarity | str | None = None,
    swaps_per_entry: int = 10,
) -> dict[tuple[str, str], float]:
    """Permutation p-values for coordination edges.

    ``p = (1 + #{shuffles with sim >= observed}) / (n_shuffles + 1)``, where
    each shuffle ``r`` is a degree-preserving randomisation seeded ``seed + r``.
    ``similarity`` defaults to cosine for weighted networks, Jaccard otherwise.
    """
    if n_shuffles < 1:
        raise ValueError("n_shuffles must be >= 1")
    if similarity is None:
        similarity = Similarity.JACCARD if net.weighting is Weighting.BINARY else Similarity.COSINE
    similarity = Similarity(similarity)
    edges = [tuple(e) for e in edges]
    if not edges:
        return {}
    try:
        iu = np.array([net.account_index[a] for a, _ in edges])
        iv = np.array([net.account_index[b] for _, b in edges])
    except KeyError as exc:
        raise ValueError(f"edge endpoint {exc.args[0]!r} is not in the network") from None
    pattern = (net.matrix != 0).astype(np.float64)
    shared = _pair_similarity(pattern, iu, iv, Similarity.COOCCURRENCE)
    if (shared == 0).any() or (iu == iv).any():
        bad = edges[int(np.flatnonzero((shared == 0) | (iu == iv))[0])]
        raise ValueError(f"edge {bad} is not in the observed projection")
    observed = _pair_similarity(net.matrix, iu, iv, similarity)
    acc, feat, tf = _entries(net)
    exceed = np.zeros(len(edges), dtype=np.int64)
    for r in range(n_shuffles):
        new_feat = _swap(net, acc, feat, seed + r, swaps_per_entry)
        sim = _pair_similarity(_rebuild(net, acc, new_feat, tf), iu, iv, similarity)
        # tolerance absorbs reordered floating sums for identical vectors
        exceed += sim >= observed - 1e-12
    p = (1 + exceed) / (n_shuffles + 1)
    return {e: float(pv) for e, pv in zip(edges, p)}
