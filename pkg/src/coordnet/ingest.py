"""Readers for trace files, support filtering and daily windowing."""
from __future__ import annotations

import csv
import enum
import io
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import date, timedelta
from typing import IO, Iterable, Mapping, Sequence, TypeVar

from .model import FormatError, TraceKind, TraceRecord

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86_400
_EPOCH = date(1970, 1, 1)


class SupportCounter(str, enum.Enum):
    RECORDS = "records"
    IMAGES = "images"
    RETWEETS = "retweets"
    HASHTAG_TWEETS = "hashtag_tweets"


@dataclass(frozen=True)
class HandleRecord:
    timestamp: int
    account: str
    handle: str

    def __post_init__(self):
        if not self.handle:
            raise ValueError("handle must be non-empty")
        if not self.account:
            raise ValueError("account id must be non-empty")
        object.__setattr__(self, "handle", self.handle.lower())
        object.__setattr__(self, "timestamp", int(self.timestamp))

    def to_trace(self) -> TraceRecord:
        return TraceRecord(self.account, self.timestamp, TraceKind.HANDLE_SIGHTING, handle=self.handle)


def _text_lines(stream) -> Iterable[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    for line in stream:
        if isinstance(line, (bytes, bytearray)):
            line = line.decode("utf-8")
        yield line


def _text_stream(stream) -> IO[str]:
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(stream.decode("utf-8"))
    if isinstance(stream, str):
        return io.StringIO(stream)
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _record_from_json(obj: Mapping) -> TraceRecord:
    if not isinstance(obj, dict):
        raise ValueError("not an object")
    ts = obj["ts"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ValueError("ts must be an integer")
    account = obj["account_id"]
    if not isinstance(account, str):
        raise ValueError("account_id must be a string")
    hashtags = obj.get("hashtags") or []
    if not isinstance(hashtags, list) or not all(isinstance(h, str) for h in hashtags):
        raise ValueError("hashtags must be a list of strings")
    hists = obj.get("image_histograms") or []
    if not isinstance(hists, list) or not all(isinstance(h, list) for h in hists):
        raise ValueError("image_histograms must be a list of arrays")
    return TraceRecord(
        account=account,
        timestamp=ts,
        kind=TraceKind(obj.get("kind", "tweet")),
        tweet_id=obj.get("tweet_id"),
        retweeted_tweet_id=obj.get("retweeted_tweet_id"),
        hashtags=tuple(hashtags),
        image_histograms=tuple(tuple(h) for h in hists),
        handle=obj.get("handle"),
    )


def read_tweet_records(stream, format: str = "jsonl") -> tuple[list[TraceRecord], int]:
    """Parse newline-delimited JSON trace records.

    Returns ``(records, n_skipped)``. Blank lines are ignored; malformed
    lines are skipped and counted. Raises :class:`FormatError` when more than
    half of the non-blank lines are malformed.
    """
    if format != "jsonl":
        raise FormatError(f"unsupported format {format!r}")
    records: list[TraceRecord] = []
    skipped = 0
    for lineno, line in enumerate(_text_lines(stream), 1):
        if not line.strip():
            continue
        try:
            records.append(_record_from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            skipped += 1
            logger.debug("skipping malformed line %d: %s", lineno, exc)
    if skipped and skipped * 2 > skipped + len(records):
        raise FormatError(f"{skipped} of {skipped + len(records)} lines are malformed")
    if skipped:
        logger.warning("skipped %d malformed lines", skipped)
    return records, skipped


def read_handle_log(stream) -> list[HandleRecord]:
    """Read a ``timestamp,user_id,handle`` CSV. Row order is preserved."""
    reader = csv.DictReader(_text_stream(stream))
    header = reader.fieldnames or []
    for col in ("timestamp", "user_id", "handle"):
        if col not in header:
            raise FormatError(f"handle log missing column {col!r}")
    out = []
    for row in reader:
        try:
            out.append(HandleRecord(int(row["timestamp"]), row["user_id"], row["handle"]))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad handle log row {reader.line_num}: {exc}") from None
    return out


def read_authors(stream) -> dict[str, str]:
    """Read the optional ``tweet_id,author_id`` sidecar."""
    reader = csv.DictReader(_text_stream(stream))
    header = reader.fieldnames or []
    for col in ("tweet_id", "author_id"):
        if col not in header:
            raise FormatError(f"authors file missing column {col!r}")
    return {row["tweet_id"]: row["author_id"] for row in reader}


def is_self_retweet(rec: TraceRecord, authors: Mapping[str, str] | None) -> bool:
    if rec.kind is not TraceKind.RETWEET or not authors:
        return False
    return authors.get(rec.retweeted_tweet_id) == rec.account


R = TypeVar("R")


def _support_counts(records, counter: SupportCounter, authors) -> Counter:
    counts: Counter = Counter()
    for r in records:
        if counter is SupportCounter.RECORDS:
            hit = True
        elif counter is SupportCounter.IMAGES:
            hit = bool(r.image_histograms)
        elif counter is SupportCounter.RETWEETS:
            hit = r.kind is TraceKind.RETWEET and not is_self_retweet(r, authors)
        else:
            hit = bool(r.hashtags)
        if hit:
            counts[r.account] += 1
    return counts


def filter_by_support(
    records: Sequence[R],
    min_records: int,
    counter: SupportCounter | str = SupportCounter.RECORDS,
    authors: Mapping[str, str] | None = None,
) -> list[R]:
    """Keep all records of accounts whose counted activity reaches ``min_records``.

    Works on anything with an ``account`` attribute; only the ``records``
    counter makes sense for :class:`HandleRecord`.
    """
    if min_records < 1:
        raise ValueError("min_records must be >= 1")
    counter = SupportCounter(counter)
    counts = _support_counts(records, counter, authors)
    return [r for r in records if counts[r.account] >= min_records]


def day_of(timestamp: int) -> date:
    return _EPOCH + timedelta(days=timestamp // SECONDS_PER_DAY)


def split_daily(records: Iterable[R]) -> dict[date, list[R]]:
    """Bucket records by UTC calendar day, in ascending date order."""
    buckets: dict[int, list] = defaultdict(list)
    for r in records:
        buckets[r.timestamp // SECONDS_PER_DAY].append(r)
    return {_EPOCH + timedelta(days=d): buckets[d] for d in sorted(buckets)}


def record_to_json(rec: TraceRecord) -> dict:
    """Inverse of the JSONL reader; empty optional fields are omitted."""
    out: dict = {"account_id": rec.account, "ts": rec.timestamp, "kind": rec.kind.value}
    if rec.tweet_id is not None:
        out["tweet_id"] = rec.tweet_id
    if rec.retweeted_tweet_id is not None:
        out["retweeted_tweet_id"] = rec.retweeted_tweet_id
    if rec.hashtags:
        out["hashtags"] = list(rec.hashtags)
    if rec.image_histograms:
        out["image_histograms"] = [list(h) for h in rec.image_histograms]
    if rec.handle is not None:
        out["handle"] = rec.handle
    return out


def write_tweet_records(records: Iterable[TraceRecord], stream: IO[str]) -> int:
    n = 0
    for rec in records:
        stream.write(json.dumps(record_to_json(rec), separators=(",", ":")))
        stream.write("\n")
        n += 1
    return n
