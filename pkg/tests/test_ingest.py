import io
import json
from collections import Counter
from datetime import date

import pytest
from hypothesis import given, strategies as st

from coordnet.ingest import (
    HandleRecord,
    filter_by_support,
    read_authors,
    read_handle_log,
    read_tweet_records,
    record_to_json,
    split_daily,
    write_tweet_records,
)
from coordnet.model import FormatError, TraceKind, TraceRecord


def _jsonl(*objs):
    return "\n".join(o if isinstance(o, str) else json.dumps(o) for o in objs).encode()


def test_read_direct_field_mapping():
    data = _jsonl({"account_id": "u1", "ts": 100, "kind": "tweet", "hashtags": ["#MAGA", "#Vote"], "extra": 1})
    records, skipped = read_tweet_records(io.BytesIO(data))
    assert skipped == 0
    assert records == [TraceRecord("u1", 100, TraceKind.TWEET, hashtags=("maga", "vote"))]


def test_read_empty_stream():
    assert read_tweet_records(io.BytesIO(b"")) == ([], 0)


def test_read_skips_malformed():
    good = {"account_id": "u1", "ts": 1, "kind": "tweet"}
    data = _jsonl(good, good, good, "{not json")
    records, skipped = read_tweet_records(io.BytesIO(data))
    assert len(records) == 3 and skipped == 1


@pytest.mark.parametrize(
    "bad",
    [
        "[]",
        json.dumps({"account_id": "u1"}),
        json.dumps({"account_id": "u1", "ts": "5"}),
        json.dumps({"account_id": "u1", "ts": 5, "kind": "retweet"}),
        json.dumps({"account_id": "u1", "ts": 5, "kind": "like"}),
    ],
)
def test_schema_violations_are_malformed(bad):
    good = json.dumps({"account_id": "u1", "ts": 1})
    _, skipped = read_tweet_records(io.BytesIO(_jsonl(good, good, bad)))
    assert skipped == 1


def test_mostly_malformed_is_format_error():
    good = {"account_id": "u1", "ts": 1}
    with pytest.raises(FormatError):
        read_tweet_records(io.BytesIO(_jsonl(good, "x", "y")))


def test_jsonl_round_trip():
    recs = [
        TraceRecord("u1", 5, "retweet", tweet_id="t2", retweeted_tweet_id="t1"),
        TraceRecord("u2", 6, "tweet", tweet_id="t3", hashtags=("a", "b"), image_histograms=((1, 2, 3),)),
    ]
    buf = io.StringIO()
    write_tweet_records(recs, buf)
    assert read_tweet_records(buf.getvalue())[0] == recs
    assert record_to_json(recs[0])["kind"] == "retweet"


def test_read_handle_log():
    log = read_handle_log(io.BytesIO(b"timestamp,user_id,handle\n100,u1,Kittie\n50,u2,kittie\n"))
    assert log == [HandleRecord(100, "u1", "kittie"), HandleRecord(50, "u2", "kittie")]


def test_handle_log_header_only():
    assert read_handle_log(io.BytesIO(b"timestamp,user_id,handle\n")) == []


def test_handle_log_missing_column():
    with pytest.raises(FormatError, match="handle"):
        read_handle_log(io.BytesIO(b"timestamp,user_id\n1,u1\n"))


def test_read_authors():
    assert read_authors(b"tweet_id,author_id\nt1,u1\n") == {"t1": "u1"}
    with pytest.raises(FormatError, match="author_id"):
        read_authors(b"tweet_id\nt1\n")


def _recs(account, n, **kw):
    return [TraceRecord(account, i, **kw) for i in range(n)]


def test_support_records():
    recs = _recs("u1", 10) + _recs("u2", 9)
    out = filter_by_support(recs, 10, "records")
    assert {r.account for r in out} == {"u1"} and len(out) == 10


def test_support_min_one_is_identity():
    recs = _recs("u1", 3) + _recs("u2", 1)
    assert filter_by_support(recs, 1) == recs


def test_support_images():
    img = ((1,) * 384,)
    recs = _recs("u1", 5, image_histograms=img) + _recs("u2", 4, image_histograms=img) + _recs("u2", 3)
    assert {r.account for r in filter_by_support(recs, 5, "images")} == {"u1"}


def test_support_retweets_excludes_self():
    recs = [TraceRecord("u1", i, "retweet", retweeted_tweet_id=f"t{i}") for i in range(3)]
    authors = {"t0": "u1"}
    assert len(filter_by_support(recs, 3, "retweets")) == 3
    assert filter_by_support(recs, 3, "retweets", authors) == []


def test_split_daily_boundary():
    recs = [TraceRecord("u", t) for t in (0, 86399, 86400)]
    days = split_daily(recs)
    assert list(days) == [date(1970, 1, 1), date(1970, 1, 2)]
    assert [len(v) for v in days.values()] == [2, 1]
    assert split_daily([]) == {}


def test_split_daily_same_day():
    recs = [TraceRecord("u", t) for t in (100, 5, 300)]
    assert list(split_daily(recs).values()) == [recs]


record_lists = st.lists(
    st.builds(
        TraceRecord,
        account=st.sampled_from(["a", "b", "c", "d"]),
        timestamp=st.integers(0, 10 * 86400),
        hashtags=st.lists(st.sampled_from(["x", "y"]), max_size=2).map(tuple),
    ),
    max_size=40,
)


@given(record_lists, st.integers(1, 6), st.sampled_from(["records", "hashtag_tweets"]))
def test_support_idempotent_and_shrinking(recs, k, counter):
    once = filter_by_support(recs, k, counter)
    assert filter_by_support(once, k, counter) == once
    assert {r.account for r in once} <= {r.account for r in recs}


@given(record_lists)
def test_split_daily_conserves(recs):
    days = split_daily(recs)
    flat = [r for v in days.values() for r in v]
    assert len(flat) == len(recs)
    assert Counter(map(id, flat)) == Counter(map(id, recs))
    assert list(days) == sorted(days)
