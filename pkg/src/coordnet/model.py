"""Core domain types shared by every pipeline stage.

Everything here is immutable after construction. Sparse structures are
stored as scipy CSR matrices / numpy arrays with the write flag cleared.
"""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping

import numpy as np
import scipy.sparse as sp

SEQUENCE_SEPARATOR = "␟"


class CoordnetError(Exception):
    """Base class for library errors."""


class ConfigError(CoordnetError, ValueError):
    pass


class FormatError(CoordnetError, ValueError):
    pass


class AggregationError(CoordnetError, ValueError):
    pass


class TraceKind(str, enum.Enum):
    TWEET = "tweet"
    RETWEET = "retweet"
    HANDLE_SIGHTING = "handle_sighting"


class Namespace(str, enum.Enum):
    HANDLE = "handle"
    IMAGE_HIST = "image_hist"
    HASHTAG_SEQ = "hashtag_seq"
    TWEET_ID = "tweet_id"
    TIME_BIN = "time_bin"


class Extractor(str, enum.Enum):
    """The five trace extractors, one per case study."""

    HANDLE = "handle"
    IMAGE = "image"
    HASHTAG_SEQUENCE = "hashtag_sequence"
    RETWEET = "retweet"
    TIME_SYNC = "time_sync"


class Weighting(str, enum.Enum):
    BINARY = "binary"
    COUNT = "count"
    TFIDF = "tfidf"


class Similarity(str, enum.Enum):
    COOCCURRENCE = "cooccurrence"
    JACCARD = "jaccard"
    COSINE = "cosine"


class ClusterMethod(str, enum.Enum):
    CONNECTED_COMPONENTS = "connected_components"
    LOUVAIN = "louvain"


def normalize_hashtag(tag: str) -> str:
    tag = tag.strip().lstrip("#").lower()
    if not tag:
        raise ValueError("empty hashtag")
    if SEQUENCE_SEPARATOR in tag:
        raise ValueError(f"hashtag contains reserved separator U+241F: {tag!r}")
    return tag


@dataclass(frozen=True)
class TraceRecord:
    """One observed account action."""

    account: str
    timestamp: int
    kind: TraceKind = TraceKind.TWEET
    tweet_id: str | None = None
    retweeted_tweet_id: str | None = None
    hashtags: tuple[str, ...] = ()
    image_histograms: tuple[tuple[int, ...], ...] = ()
    handle: str | None = None

    def __post_init__(self):
        if not self.account:
            raise ValueError("account id must be non-empty")
        if int(self.timestamp) != self.timestamp or self.timestamp < 0:
            raise ValueError(f"timestamp must be a non-negative integer, got {self.timestamp!r}")
        object.__setattr__(self, "kind", TraceKind(self.kind))
        object.__setattr__(self, "hashtags", tuple(normalize_hashtag(h) for h in self.hashtags))
        hists = tuple(tuple(int(x) for x in h) for h in self.image_histograms)
        if any(x < 0 for h in hists for x in h):
            raise ValueError("histogram entries must be non-negative")
        object.__setattr__(self, "image_histograms", hists)
        if self.kind is TraceKind.RETWEET and not self.retweeted_tweet_id:
            raise ValueError("retweet record requires retweeted_tweet_id")
        if self.kind is TraceKind.HANDLE_SIGHTING:
            if not self.handle:
                raise ValueError("handle_sighting record requires handle")
            object.__setattr__(self, "handle", self.handle.lower())


@dataclass(frozen=True, order=True)
class FeatureId:
    namespace: Namespace
    key: str

    def __post_init__(self):
        object.__setattr__(self, "namespace", Namespace(self.namespace))

    def __str__(self) -> str:
        return f"{self.namespace.value}:{self.key}"


@dataclass(frozen=True)
class AccountFeatureTriple:
    account: str
    feature: FeatureId
    multiplicity: int = 1

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BipartiteNetwork:
    """Sparse account x feature incidence matrix with its row/column labels.

    ``idf`` is only set for TF-IDF weighted networks; it holds the per-feature
    inverse document frequency that was multiplied into the counts.
    """

    accounts: tuple[str, ...]
    features: tuple[FeatureId, ...]
    matrix: sp.csr_matrix
    weighting: Weighting
    idf: np.ndarray | None = None

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=np.float64)
        m.sum_duplicates()
        m.sort_indices()
        if m.shape != (len(self.accounts), len(self.features)):
            raise ValueError(
                f"matrix shape {m.shape} does not match "
                f"{len(self.accounts)} accounts x {len(self.features)} features"
            )
        if m.nnz and (m.data <= 0).any():
            raise ValueError("stored weights must be strictly positive")
        weighting = Weighting(self.weighting)
        if weighting is Weighting.BINARY and m.nnz and not np.all(m.data == 1.0):
            raise ValueError("binary network must have unit weights")
        if len(self.accounts) and (np.diff(m.indptr) == 0).any():
            raise ValueError("every account must have at least one entry")
        if len(set(self.accounts)) != len(self.accounts):
            raise ValueError("duplicate account ids")
        for arr in (m.data, m.indices, m.indptr):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "weighting", weighting)
        object.__setattr__(self, "accounts", tuple(self.accounts))
        object.__setattr__(self, "features", tuple(self.features))
        if self.idf is not None:
            object.__setattr__(self, "idf", _frozen(np.asarray(self.idf, dtype=np.float64).copy()))

    @property
    def n_accounts(self) -> int:
        return len(self.accounts)

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @cached_property
    def account_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.accounts)}

    @cached_property
    def feature_degrees(self) -> np.ndarray:
        """Number of accounts holding each feature (df)."""
        return _frozen(np.bincount(self.matrix.indices, minlength=self.n_features))

    @cached_property
    def account_degrees(self) -> np.ndarray:
        return _frozen(np.diff(self.matrix.indptr))

    def entries(self):
        """Yield ``(account, feature, weight)`` in row-major order."""
        m = self.matrix
        for i, a in enumerate(self.accounts):
            for k in range(m.indptr[i], m.indptr[i + 1]):
                yield a, self.features[m.indices[k]], float(m.data[k])


@dataclass(frozen=True, eq=False)
class CoordinationNetwork:
    """Undirected weighted account graph stored as parallel edge arrays.

    Edges satisfy ``u < v`` (node indices) and are sorted by ``(u, v)``.
    """

    nodes: tuple[str, ...]
    u: np.ndarray
    v: np.ndarray
    weight: np.ndarray
    similarity: Similarity

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.int64)
        v = np.asarray(self.v, dtype=np.int64)
        w = np.asarray(self.weight, dtype=np.float64)
        if not (u.shape == v.shape == w.shape) or u.ndim != 1:
            raise ValueError("edge arrays must be 1-D and equally long")
        if u.size:
            if (u >= v).any():
                raise ValueError("edges must satisfy u < v (no self-loops)")
            if u.min() < 0 or v.max() >= len(self.nodes):
                raise ValueError("edge endpoint out of range")
            if (w < 0).any():
                raise ValueError("edge weights must be non-negative")
            order = np.lexsort((v, u))
            u, v, w = u[order], v[order], w[order]
            key = u * len(self.nodes) + v
            if (np.diff(key) == 0).any():
                raise ValueError("duplicate edge")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "u", _frozen(u.copy()))
        object.__setattr__(self, "v", _frozen(v.copy()))
        object.__setattr__(self, "weight", _frozen(w.copy()))
        object.__setattr__(self, "similarity", Similarity(self.similarity))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return int(self.u.size)

    @cached_property
    def node_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.nodes)}

    def edges(self):
        """Yield ``(account_u, account_v, weight)``."""
        for i, j, w in zip(self.u.tolist(), self.v.tolist(), self.weight.tolist()):
            yield self.nodes[i], self.nodes[j], w

    def edge_dict(self) -> dict[tuple[str, str], float]:
        """Edges keyed by account-id pair, ordered so the smaller id comes first."""
        out = {}
        for a, b, w in self.edges():
            out[(a, b) if a < b else (b, a)] = w
        return out

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.u, self.v]), minlength=self.n_nodes)

    def to_scipy(self) -> sp.csr_matrix:
        n = self.n_nodes
        m = sp.coo_matrix((self.weight, (self.u, self.v)), shape=(n, n))
        return (m + m.T).tocsr()

    def subset_edges(self, mask: np.ndarray) -> "CoordinationNetwork":
        return CoordinationNetwork(self.nodes, self.u[mask], self.v[mask], self.weight[mask], self.similarity)

    @classmethod
    def empty(cls, nodes=(), similarity=Similarity.COOCCURRENCE) -> "CoordinationNetwork":
        z = np.zeros(0, dtype=np.int64)
        return cls(tuple(nodes), z, z, np.zeros(0), similarity)


@dataclass(frozen=True)
class ComponentStats:
    size: int
    edge_count: int
    density: float
    degree_centralization: float
    shared_feature_count: int = 0


@dataclass(frozen=True)
class ClusterSet:
    """Partition of the non-singleton accounts into labelled groups."""

    assignments: Mapping[str, int]
    method: ClusterMethod
    stats: Mapping[int, ComponentStats] = field(default_factory=dict)

    def __post_init__(self):
        labels = set(self.assignments.values())
        if labels != set(range(len(labels))):
            raise ValueError("cluster labels must be 0-based and contiguous")
        object.__setattr__(self, "method", ClusterMethod(self.method))

    @property
    def n_clusters(self) -> int:
        return len(set(self.assignments.values()))

    def members(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {k: [] for k in range(self.n_clusters)}
        for a, k in self.assignments.items():
            out[k].append(a)
        for k in out:
            out[k].sort()
        return out

    def __len__(self) -> int:
        return len(self.assignments)


# --------------------------------------------------------------------------
# pipeline configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    extractor: Extractor
    min_support: int
    bipartite_weighting: Weighting
    similarity: Similarity
    edge_keep_fraction: float = 1.0
    time_bin_seconds: int = 1800
    histogram_bins_per_channel: int = 128
    min_unique_hashtags: int = 5
    daily_split: bool = False
    seed: int = 0
    fuzzy: bool = False
    fuzzy_threshold: float = 0.8
    minhash_perms: int = 128
    max_feature_degree: int = 10_000

    def __post_init__(self):
        object.__setattr__(self, "extractor", Extractor(self.extractor))
        object.__setattr__(self, "bipartite_weighting", Weighting(self.bipartite_weighting))
        object.__setattr__(self, "similarity", Similarity(self.similarity))

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            out[f.name] = val.value if isinstance(val, enum.Enum) else val
        return out


CASE_PRESETS: dict[int, PipelineConfig] = {
    1: PipelineConfig(
        extractor=Extractor.HANDLE,
        min_support=10,
        bipartite_weighting=Weighting.BINARY,
        similarity=Similarity.COOCCURRENCE,
        edge_keep_fraction=1.0,
    ),
    2: PipelineConfig(
        extractor=Extractor.IMAGE,
        min_support=5,
        bipartite_weighting=Weighting.BINARY,
        similarity=Similarity.JACCARD,
        edge_keep_fraction=0.01,
        histogram_bins_per_channel=128,
    ),
    3: PipelineConfig(
        extractor=Extractor.HASHTAG_SEQUENCE,
        min_support=5,
        bipartite_weighting=Weighting.BINARY,
        similarity=Similarity.COOCCURRENCE,
        edge_keep_fraction=1.0,
        min_unique_hashtags=5,
        daily_split=True,
    ),
    4: PipelineConfig(
        extractor=Extractor.RETWEET,
        min_support=10,
        bipartite_weighting=Weighting.TFIDF,
        similarity=Similarity.COSINE,
        edge_keep_fraction=0.005,
    ),
    5: PipelineConfig(
        extractor=Extractor.TIME_SYNC,
        min_support=8,
        bipartite_weighting=Weighting.TFIDF,
        similarity=Similarity.COSINE,
        edge_keep_fraction=0.005,
        time_bin_seconds=1800,
    ),
}

_PRESET_BY_EXTRACTOR = {cfg.extractor: cfg for cfg in CASE_PRESETS.values()}


def preset(case: int) -> PipelineConfig:
    try:
        return CASE_PRESETS[int(case)]
    except (KeyError, ValueError):
        raise ConfigError(f"case must be one of 1..5, got {case!r}") from None


def validate_config(config: PipelineConfig) -> PipelineConfig:
    """Return ``config`` unchanged, or raise ConfigError naming the first bad field."""
    if not (0.0 < config.edge_keep_fraction <= 1.0):
        raise ConfigError("edge_keep_fraction must be in (0,1]")
    if config.min_support < 1:
        raise ConfigError("min_support must be >= 1")
    if config.bipartite_weighting is Weighting.BINARY and config.similarity is Similarity.COSINE:
        raise ConfigError("similarity: cosine requires count or tfidf bipartite_weighting")
    if config.time_bin_seconds < 1:
        raise ConfigError("time_bin_seconds must be >= 1")
    b = config.histogram_bins_per_channel
    if b < 1 or 256 % b:
        raise ConfigError("histogram_bins_per_channel must divide 256")
    if config.min_unique_hashtags < 1:
        raise ConfigError("min_unique_hashtags must be >= 1")
    if not (0.0 < config.fuzzy_threshold <= 1.0):
        raise ConfigError("fuzzy_threshold must be in (0,1]")
    if config.minhash_perms < 1:
        raise ConfigError("minhash_perms must be >= 1")
    if config.max_feature_degree < 2:
        raise ConfigError("max_feature_degree must be >= 2")
    if not (0 <= config.seed < 2**64):
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return config


# -- flat ``key = value`` config text --------------------------------------

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    try:
        if kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind}") from None


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse flat ``key = value`` lines (``#`` comments allowed) into a dict."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
            raw = raw[1:-1]
        if key != "case" and key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        if key in out:
            raise ConfigError(f"duplicate config key {key!r}")
        out[key] = int(raw) if key == "case" else _coerce(key, raw)
    return out


def config_from_mapping(values: Mapping[str, Any]) -> PipelineConfig:
    """Build a validated config; omitted fields come from the matching preset."""
    values = dict(values)
    case = values.pop("case", None)
    if case is not None:
        base = preset(case)
    elif "extractor" in values:
        try:
            base = _PRESET_BY_EXTRACTOR[Extractor(values["extractor"])]
        except ValueError:
            raise ConfigError(f"extractor: unknown value {values['extractor']!r}") from None
    else:
        raise ConfigError("extractor: required (or give case = 1..5)")
    try:
        cfg = dataclasses.replace(base, **values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return validate_config(cfg)


def parse_config(text: str) -> PipelineConfig:
    return config_from_mapping(parse_config_text(text))


def serialize_config(config: PipelineConfig) -> str:
    lines = []
    for key, val in config.to_dict().items():
        if isinstance(val, bool):
            val = "true" if val else "false"
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"
