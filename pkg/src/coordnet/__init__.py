"""Unsupervised detection of coordinated account groups from behavioural traces."""
from .bipartite import build_bipartite, prune_features, tfidf_weight
from .cluster import (
    component_stats,
    connected_components,
    filter_top_percentile,
    louvain,
    reciprocal_switches,
)
from .estimator import CoordinationDetector
from .model import (
    CASE_PRESETS,
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
    preset,
    validate_config,
)
from .pipeline import run_pipeline
from .project import project

__version__ = "0.1.0"

__all__ = [
    "BipartiteNetwork",
    "CASE_PRESETS",
    "ClusterSet",
    "ConfigError",
    "CoordinationDetector",
    "CoordinationNetwork",
    "Extractor",
    "PipelineConfig",
    "Similarity",
    "TraceKind",
    "TraceRecord",
    "Weighting",
    "build_bipartite",
    "component_stats",
    "connected_components",
    "filter_top_percentile",
    "louvain",
    "preset",
    "project",
    "prune_features",
    "reciprocal_switches",
    "run_pipeline",
    "tfidf_weight",
    "validate_config",
]
