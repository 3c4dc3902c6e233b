"""End-to-end detection: records -> bipartite -> projection -> filter -> clusters."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .bipartite import build_bipartite, prune_features, tfidf_weight
from .cluster import (
    connected_components,
    filter_top_percentile,
    percentile_threshold,
    reciprocal_switches,
)
from .extract import (
    account_hashtag_sequences,
    extract_handle_features,
    extract_hashtag_features,
    extract_image_features,
    extract_retweet_features,
    extract_time_features,
)
from .ingest import HandleRecord, SupportCounter, filter_by_support
from .model import (
    BipartiteNetwork,
    ClusterSet,
    CoordinationNetwork,
    Extractor,
    PipelineConfig,
    TraceKind,
    TraceRecord,
    Weighting,
    validate_config,
)
from .project import project, project_fuzzy_sequences

logger = logging.getLogger(__name__)

SUPPORT_COUNTER = {
    Extractor.HANDLE: SupportCounter.RECORDS,
    Extractor.IMAGE: SupportCounter.IMAGES,
    Extractor.HASHTAG_SEQUENCE: None,  # gated per day inside the extractor
    Extractor.RETWEET: SupportCounter.RETWEETS,
    Extractor.TIME_SYNC: SupportCounter.RECORDS,
}


@dataclass
class PipelineResult:
    config: PipelineConfig
    bipartite: BipartiteNetwork | None
    network: CoordinationNetwork
    filtered: CoordinationNetwork
    threshold: float | None
    clusters: ClusterSet
    switches: dict[int, int] = field(default_factory=dict)
    report: dict = field(default_factory=dict)


def _kind_filter(records, extractor: Extractor):
    if extractor is Extractor.HANDLE:
        return [r for r in records if r.handle]
    if extractor in (Extractor.IMAGE, Extractor.HASHTAG_SEQUENCE):
        return [r for r in records if r.kind is TraceKind.TWEET]
    if extractor is Extractor.RETWEET:
        return [r for r in records if r.kind is TraceKind.RETWEET]
    return [r for r in records if r.kind is not TraceKind.HANDLE_SIGHTING]


def _triples(records, config: PipelineConfig, authors):
    ex = config.extractor
    if ex is Extractor.HANDLE:
        return extract_handle_features(records)
    if ex is Extractor.IMAGE:
        return extract_image_features(records, config.histogram_bins_per_channel)
    if ex is Extractor.HASHTAG_SEQUENCE:
        return extract_hashtag_features(records, config.min_support, config.min_unique_hashtags, config.daily_split)
    if ex is Extractor.RETWEET:
        return extract_retweet_features(records, authors)
    return extract_time_features(records, config.time_bin_seconds)


def run_pipeline(
    records: Sequence[TraceRecord | HandleRecord],
    config: PipelineConfig,
    *,
    authors: Mapping[str, str] | None = None,
    threads: int | None = 1,
) -> PipelineResult:
    """Run one case-study configuration over ``records``.

    For the handle extractor ``records`` may be :class:`HandleRecord` rows
    (sorted by time); reciprocal switches are then counted per cluster.
    """
    start = time.perf_counter()
    config = validate_config(config)
    ex = config.extractor
    records = list(records)
    report: dict = {"n_records": len(records)}

    kept = _kind_filter(records, ex)
    report["n_records_after_kind_filter"] = len(kept)
    accounts_before = {r.account for r in kept}
    counter = SUPPORT_COUNTER[ex]
    if counter is not None:
        kept = filter_by_support(kept, config.min_support, counter, authors)
    accounts_after = {r.account for r in kept}
    report["n_accounts"] = len(accounts_before)
    report["accounts_filtered_by_support"] = len(accounts_before) - len(accounts_after)

    bipartite = None
    if ex is Extractor.HASHTAG_SEQUENCE and config.fuzzy:
        seqs = account_hashtag_sequences(kept, config.min_support, config.min_unique_hashtags, config.daily_split)
        report["n_supported_windows"] = sum(len(v) for v in seqs.values())
        network = project_fuzzy_sequences(
            seqs, threshold=config.fuzzy_threshold, num_perms=config.minhash_perms, seed=config.seed
        )
    else:
        weighting = Weighting.COUNT if config.bipartite_weighting is Weighting.TFIDF else config.bipartite_weighting
        bipartite = build_bipartite(_triples(kept, config, authors), weighting)
        if config.bipartite_weighting is Weighting.TFIDF:
            # idf needs the full account count, so weight before pruning
            bipartite = tfidf_weight(bipartite)
        n_features = bipartite.n_features
        bipartite = prune_features(bipartite, 2)
        report["n_features"] = n_features
        report["features_pruned"] = n_features - bipartite.n_features
        report["n_bipartite_accounts"] = bipartite.n_accounts
        report["n_bipartite_entries"] = bipartite.nnz
        network = project(
            bipartite, config.similarity, max_feature_degree=config.max_feature_degree, threads=threads
        )

    threshold = percentile_threshold(network, config.edge_keep_fraction)
    filtered = filter_top_percentile(network, config.edge_keep_fraction)
    clusters = connected_components(filtered, bipartite)
    switches = {}
    if ex is Extractor.HANDLE:
        log = sorted(kept, key=lambda r: r.timestamp)
        switches = reciprocal_switches(log, clusters)

    report.update(
        edges_total=network.n_edges,
        edges_kept=filtered.n_edges,
        threshold=threshold,
        n_clusters=clusters.n_clusters,
        n_clustered_accounts=len(clusters),
    )
    logger.info("pipeline finished in %.3fs", time.perf_counter() - start)
    report["wall_time_s"] = time.perf_counter() - start
    return PipelineResult(config, bipartite, network, filtered, threshold, clusters, switches, report)

