"""scikit-learn style front-end for the detection pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .cluster import louvain, reciprocal_switches
from .model import ClusterMethod, Extractor, PipelineConfig, Similarity, Weighting, preset, validate_config
from .pipeline import run_pipeline
from .validation import check_enum, check_fraction, check_records, check_scalar_int


class CoordinationDetector(ClusterMixin, BaseEstimator):
    """Flag groups of accounts whose behavioural traces are suspiciously similar.

    ``fit`` takes an iterable of :class:`~coordnet.model.TraceRecord` (or
    :class:`~coordnet.ingest.HandleRecord` for the handle extractor). Samples
    are accounts, not records: after fitting, ``accounts_`` lists every
    account seen in the input and ``labels_`` holds its cluster id, with -1
    for accounts outside any coordinated group.

    Examples
    --------
    >>> det = CoordinationDetector.from_case(4)
    >>> det.get_params()["keep_fraction"]
    0.005
    """

    def __init__(
        self,
        extractor="retweet",
        min_support=10,
        weighting="tfidf",
        similarity="cosine",
        keep_fraction=0.005,
        time_bin_seconds=1800,
        bins_per_channel=128,
        min_unique_hashtags=5,
        daily_split=False,
        fuzzy=False,
        fuzzy_threshold=0.8,
        clustering="connected_components",
        max_feature_degree=10_000,
        n_jobs=1,
        random_state=0,
    ):
        self.extractor = extractor
        self.min_support = min_support
        self.weighting = weighting
        self.similarity = similarity
        self.keep_fraction = keep_fraction
        self.time_bin_seconds = time_bin_seconds
        self.bins_per_channel = bins_per_channel
        self.min_unique_hashtags = min_unique_hashtags
        self.daily_split = daily_split
        self.fuzzy = fuzzy
        self.fuzzy_threshold = fuzzy_threshold
        self.clustering = clustering
        self.max_feature_degree = max_feature_degree
        self.n_jobs = n_jobs
        self.random_state = random_state

    @classmethod
    def from_case(cls, case: int, **overrides) -> "CoordinationDetector":
        cfg = preset(case)
        params = dict(
            extractor=cfg.extractor.value,
            min_support=cfg.min_support,
            weighting=cfg.bipartite_weighting.value,
            similarity=cfg.similarity.value,
            keep_fraction=cfg.edge_keep_fraction,
            time_bin_seconds=cfg.time_bin_seconds,
            bins_per_channel=cfg.histogram_bins_per_channel,
            min_unique_hashtags=cfg.min_unique_hashtags,
            daily_split=cfg.daily_split,
        )
        params.update(overrides)
        return cls(**params)

    def to_config(self) -> PipelineConfig:
        cfg = PipelineConfig(
            extractor=check_enum("extractor", self.extractor, Extractor),
            min_support=check_scalar_int("min_support", self.min_support, 1),
            bipartite_weighting=check_enum("weighting", self.weighting, Weighting),
            similarity=check_enum("similarity", self.similarity, Similarity),
            edge_keep_fraction=check_fraction("keep_fraction", self.keep_fraction),
            time_bin_seconds=check_scalar_int("time_bin_seconds", self.time_bin_seconds, 1),
            histogram_bins_per_channel=check_scalar_int("bins_per_channel", self.bins_per_channel, 1),
            min_unique_hashtags=check_scalar_int("min_unique_hashtags", self.min_unique_hashtags, 1),
            daily_split=bool(self.daily_split),
            seed=check_scalar_int("random_state", self.random_state, 0),
            fuzzy=bool(self.fuzzy),
            fuzzy_threshold=check_fraction("fuzzy_threshold", self.fuzzy_threshold),
            max_feature_degree=check_scalar_int("max_feature_degree", self.max_feature_degree, 2),
        )
        return validate_config(cfg)

    def fit(self, X, y=None, authors=None):
        """Run the pipeline on ``X``; ``authors`` maps tweet id to author id."""
        records = check_records(X)
        config = self.to_config()
        method = check_enum("clustering", self.clustering, ClusterMethod)
        result = run_pipeline(records, config, authors=authors, threads=self.n_jobs)
        clusters = result.clusters
        if method is ClusterMethod.LOUVAIN and result.filtered.n_edges:
            clusters = louvain(result.filtered, seed=config.seed, bipartite=result.bipartite)
            if config.extractor is Extractor.HANDLE:
                result.switches = reciprocal_switches(sorted(records, key=lambda r: r.timestamp), clusters)
        result.clusters = clusters

        self.result_ = result
        self.config_ = config
        self.bipartite_ = result.bipartite
        self.coordination_network_ = result.filtered
        self.threshold_ = result.threshold
        self.clusters_ = clusters
        self.accounts_ = np.array(sorted({r.account for r in records}), dtype=object)
        self.labels_ = np.array([clusters.assignments.get(a, -1) for a in self.accounts_], dtype=np.int64)
        return self

    def cluster_members(self) -> dict[int, list[str]]:
        check_is_fitted(self)
        return self.clusters_.members()
