"""Feature engineering: turn trace records into account-feature triples.

Also home to the MinHash sketch used by the fuzzy hashtag-sequence matcher.
"""
from __future__ import annotations

import hashlib
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import HandleRecord, is_self_retweet, split_daily
from .model import (
    SEQUENCE_SEPARATOR,
    AccountFeatureTriple,
    FeatureId,
    Namespace,
    TraceKind,
    TraceRecord,
)

logger = logging.getLogger(__name__)

_HIST_WIDTH = 10


def _aggregate(pairs: Iterable[tuple[str, FeatureId]]) -> list[AccountFeatureTriple]:
    counts = Counter(pairs)
    return [AccountFeatureTriple(a, f, n) for (a, f), n in counts.items()]


def extract_handle_features(records: Iterable[HandleRecord | TraceRecord]) -> list[AccountFeatureTriple]:
    """One triple per (account, handle); multiplicity counts sightings."""
    return _aggregate((r.account, FeatureId(Namespace.HANDLE, r.handle)) for r in records if r.handle)


# -- images -----------------------------------------------------------------

def rgb_histogram(pixels, bins_per_channel: int = 128) -> np.ndarray:
    """Concatenated per-channel colour histogram ``[R | G | B]``.

    ``pixels`` is anything reshapeable to ``(n, 3)`` uint8 values, including a
    raw ``bytes`` buffer of packed RGB triples.
    """
    if bins_per_channel < 1 or 256 % bins_per_channel:
        raise ValueError("bins_per_channel must divide 256")
    if isinstance(pixels, (bytes, bytearray, memoryview)):
        arr = np.frombuffer(pixels, dtype=np.uint8)
    else:
        arr = np.asarray(pixels)
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("pixel values must lie in 0..255")
        arr = arr.astype(np.uint8)
    if arr.size == 0:
        raise ValueError("empty image")
    if arr.size % 3:
        raise ValueError("pixel buffer length must be a multiple of 3")
    arr = arr.reshape(-1, 3)
    width = 256 // bins_per_channel
    binned = arr.astype(np.int64) // width + np.arange(3) * bins_per_channel
    return np.bincount(binned.ravel(), minlength=3 * bins_per_channel)


def histogram_key(hist: Sequence[int]) -> str:
    """128-bit digest of the fixed-width decimal encoding of a histogram.

    Distinct vectors colliding is treated as negligible (2**-64 birthday bound
    at 2**32 images).
    """
    text = ",".join(f"{int(x):0{_HIST_WIDTH}d}" for x in hist)
    return hashlib.blake2b(text.encode("ascii"), digest_size=16).hexdigest()


def extract_image_features(records: Iterable[TraceRecord], bins: int = 128) -> list[AccountFeatureTriple]:
    """Exact-histogram image features; multiplicity counts tweets, not images."""
    expected = 3 * bins
    pairs = []
    for r in records:
        keys = []
        for hist in r.image_histograms:
            if len(hist) != expected:
                raise ValueError(f"histogram has {len(hist)} bins, expected {expected}")
            keys.append(histogram_key(hist))
        for key in dict.fromkeys(keys):
            pairs.append((r.account, FeatureId(Namespace.IMAGE_HIST, key)))
    return _aggregate(pairs)


# -- hashtag sequences ------------------------------------------------------

def _tweet_order(r: TraceRecord):
    return (r.timestamp, r.tweet_id or "")


def hashtag_sequence(day_records: Iterable[TraceRecord]) -> list[str]:
    out: list[str] = []
    for r in sorted(day_records, key=_tweet_order):
        out.extend(r.hashtags)
    return out


def extract_hashtag_sequence(
    day_records: Sequence[TraceRecord], min_tweets: int = 5, min_unique: int = 5
) -> FeatureId | None:
    """Ordered hashtag sequence of one account's tweets in one window.

    Returns ``None`` when the account lacks support (too few tweets or too few
    distinct hashtags).
    """
    if len(day_records) < min_tweets:
        return None
    seq = hashtag_sequence(day_records)
    if len(set(seq)) < min_unique:
        return None
    return FeatureId(Namespace.HASHTAG_SEQ, SEQUENCE_SEPARATOR.join(seq))


def _account_windows(records: Iterable[TraceRecord], daily: bool):
    """Yield ``(window_label, account, records)`` in deterministic order."""
    tweets = [r for r in records if r.kind is TraceKind.TWEET]
    windows = split_daily(tweets) if daily else {None: tweets}
    for day, recs in windows.items():
        by_account: dict[str, list[TraceRecord]] = defaultdict(list)
        for r in recs:
            by_account[r.account].append(r)
        for account in sorted(by_account):
            yield day, account, by_account[account]


def extract_hashtag_features(
    records: Iterable[TraceRecord], min_tweets: int = 5, min_unique: int = 5, daily: bool = True
) -> list[AccountFeatureTriple]:
    """Sequence features scoped to their day, so only same-day matches connect."""
    pairs = []
    for day, account, recs in _account_windows(records, daily):
        feat = extract_hashtag_sequence(recs, min_tweets, min_unique)
        if feat is None:
            continue
        if day is not None:
            feat = FeatureId(Namespace.HASHTAG_SEQ, f"{day.isoformat()}/{feat.key}")
        pairs.append((account, feat))
    return _aggregate(pairs)


def account_hashtag_sequences(
    records: Iterable[TraceRecord], min_tweets: int = 5, min_unique: int = 5, daily: bool = True
) -> dict[object, dict[str, list[str]]]:
    """``{window: {account: sequence}}`` for accounts passing the support gate."""
    out: dict[object, dict[str, list[str]]] = defaultdict(dict)
    for day, account, recs in _account_windows(records, daily):
        if extract_hashtag_sequence(recs, min_tweets, min_unique) is not None:
            out[day][account] = hashtag_sequence(recs)
    return dict(out)


# -- retweets and time bins -------------------------------------------------

def extract_retweet_features(
    records: Iterable[TraceRecord], authors: Mapping[str, str] | None = None
) -> list[AccountFeatureTriple]:
    if authors is None:
        logger.warning("no authorship map given; self-retweets are not filtered")
    pairs = [
        (r.account, FeatureId(Namespace.TWEET_ID, r.retweeted_tweet_id))
        for r in records
        if r.kind is TraceKind.RETWEET and not is_self_retweet(r, authors)
    ]
    return _aggregate(pairs)


def time_bin(timestamp: int, interval: int = 1800) -> FeatureId:
    if interval <= 0:
        raise ValueError("interval must be positive")
    return FeatureId(Namespace.TIME_BIN, str(int(timestamp) // int(interval)))


def extract_time_features(records: Iterable[TraceRecord], interval: int = 1800) -> list[AccountFeatureTriple]:
    return _aggregate((r.account, time_bin(r.timestamp, interval)) for r in records)


# -- MinHash ----------------------------------------------------------------

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True, eq=False)
class MinHashSignature:
    hashes: np.ndarray
    num_perms: int
    seed: int

    def __post_init__(self):
        if self.hashes.shape != (self.num_perms,):
            raise ValueError("signature length must equal num_perms")
        self.hashes.setflags(write=False)


def _element_hash(s: str) -> int:
    return int.from_bytes(hashlib.blake2b(s.encode("utf-8"), digest_size=8).digest(), "little")


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser: a bijection on 64-bit words
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _permutation_params(num_perms: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2**64, size=num_perms, dtype=np.uint64, endpoint=False) | np.uint64(1)
    b = rng.integers(0, 2**64, size=num_perms, dtype=np.uint64, endpoint=False)
    return a, b


def minhash_signature(ngrams: Iterable[str], num_perms: int = 128, seed: int = 0) -> MinHashSignature:
    """MinHash sketch of a string set.

    Each permutation is the 64-bit bijection ``mix(a*x + b)`` applied to a
    64-bit BLAKE2 hash of the element, with ``(a, b)`` drawn from ``seed``.
    """
    if num_perms < 1:
        raise ValueError("num_perms must be >= 1")
    items = set(ngrams)
    if not items:
        raise ValueError("empty input set")
    x = np.array(sorted(_element_hash(s) for s in items), dtype=np.uint64)
    a, b = _permutation_params(num_perms, seed)
    with np.errstate(over="ignore"):
        h = _mix64(a[:, None] * x[None, :] + b[:, None])
    return MinHashSignature(h.min(axis=1), num_perms, seed)


def estimate_jaccard(a: MinHashSignature, b: MinHashSignature) -> float:
    if a.num_perms != b.num_perms or a.seed != b.seed:
        raise ValueError("signatures built with different num_perms or seed")
    return float(np.count_nonzero(a.hashes == b.hashes)) / a.num_perms


def hashtag_ngrams(seq: Sequence[str], n: int = 2) -> set[str]:
    """Contiguous n-grams of a hashtag sequence; short sequences yield one gram."""
    if len(seq) < n:
        return {SEQUENCE_SEPARATOR.join(seq)} if seq else set()
    return {SEQUENCE_SEPARATOR.join(seq[i:i + n]) for i in range(len(seq) - n + 1)}
