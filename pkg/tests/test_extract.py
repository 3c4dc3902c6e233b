import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coordnet.extract import (
    estimate_jaccard,
    extract_handle_features,
    extract_hashtag_features,
    extract_hashtag_sequence,
    extract_image_features,
    extract_retweet_features,
    extract_time_features,
    hashtag_ngrams,
    minhash_signature,
    rgb_histogram,
    time_bin,
)
from coordnet.ingest import HandleRecord
from coordnet.model import AccountFeatureTriple, FeatureId, Namespace, TraceRecord

SEP = "␟"


def test_handle_features():
    log = [HandleRecord(t, "u1", "kittie") for t in range(3)]
    assert extract_handle_features(log) == [AccountFeatureTriple("u1", FeatureId("handle", "kittie"), 3)]
    two = extract_handle_features([HandleRecord(1, "u1", "kittie"), HandleRecord(2, "u2", "Kittie")])
    assert [(t.account, t.multiplicity) for t in two] == [("u1", 1), ("u2", 1)]
    assert extract_handle_features([]) == []


def test_histogram_single_bin():
    h = rgb_histogram(np.full((10, 3), 128), 128)
    expected = np.zeros(384, dtype=int)
    expected[[64, 192, 320]] = 10
    np.testing.assert_array_equal(h, expected)


def test_histogram_boundary_values():
    h = rgb_histogram(bytes([0, 255, 0]), 128)
    assert np.flatnonzero(h).tolist() == [0, 255, 256]
    assert h.sum() == 3


def test_histogram_errors():
    with pytest.raises(ValueError, match="empty image"):
        rgb_histogram(b"", 128)
    with pytest.raises(ValueError):
        rgb_histogram(b"\x00\x00\x00", 100)


@pytest.mark.parametrize("bins", [1, 2, 64, 128, 256])
def test_histogram_length(bins):
    assert rgb_histogram(np.zeros((4, 3)), bins).shape == (3 * bins,)


def _img_record(account, pixels, i=0):
    return TraceRecord(account, i, "tweet", tweet_id=f"t{i}", image_histograms=(tuple(rgb_histogram(pixels).tolist()),))


def test_identical_images_share_feature():
    rng = np.random.default_rng(1)
    px = rng.integers(0, 256, size=(50, 3))
    triples = extract_image_features([_img_record("u1", px), _img_record("u2", px)])
    assert triples[0].feature == triples[1].feature
    assert triples[0].feature.namespace is Namespace.IMAGE_HIST


def test_brightness_shift_changes_feature():
    # 128 bins -> width 2: value 10 lands in bin 5, value 12 in bin 6
    dark = np.full((20, 3), 10)
    bright = np.full((20, 3), 12)
    assert 10 // 2 != 12 // 2
    a, b = extract_image_features([_img_record("u1", dark), _img_record("u2", bright)])
    assert a.feature != b.feature


def test_image_multiplicity_counts_tweets():
    px = np.full((4, 3), 7)
    recs = [_img_record("u1", px, i) for i in range(59)]
    (t,) = extract_image_features(recs)
    assert t.multiplicity == 59


def test_image_dimension_error():
    rec = TraceRecord("u1", 0, image_histograms=((1, 2, 3),))
    with pytest.raises(ValueError, match="expected 384"):
        extract_image_features([rec])


def _tweet(account, ts, tags, tid=None):
    return TraceRecord(account, ts, "tweet", tweet_id=tid or f"{account}-{ts}", hashtags=tuple(tags))


def test_hashtag_sequence_concatenation_order():
    recs = [
        _tweet("u", 20, ["kag", "trump2020", "veterans"]),
        _tweet("u", 10, ["maga", "vote"]),
    ]
    feat = extract_hashtag_sequence(recs, min_tweets=2, min_unique=5)
    assert feat.key == SEP.join(["maga", "vote", "kag", "trump2020", "veterans"])


def test_hashtag_sequence_support_gate():
    recs = [_tweet("u", i, [t]) for i, t in enumerate(["a", "b", "c", "d", "a", "b"])]
    assert extract_hashtag_sequence(recs) is None
    assert extract_hashtag_sequence(recs[:4], min_tweets=5, min_unique=1) is None


def test_hashtag_sequence_keeps_repeats():
    tags = ["a", "b", "c", "d", "e", "a", "a"]
    recs = [_tweet("u", i, [t]) for i, t in enumerate(tags)]
    assert extract_hashtag_sequence(recs).key == SEP.join(tags)


def test_hashtag_sequence_tie_break_by_tweet_id():
    recs = [_tweet("u", 5, ["b"], "t2"), _tweet("u", 5, ["a"], "t1")]
    assert extract_hashtag_sequence(recs, 1, 1).key == f"a{SEP}b"


@given(st.permutations(list(range(8))))
def test_hashtag_sequence_order_invariant(perm):
    base = [_tweet("u", i // 2, [f"h{i}"], f"t{i}") for i in range(8)]
    assert extract_hashtag_sequence([base[i] for i in perm]) == extract_hashtag_sequence(base)


def test_hashtag_features_scoped_by_day():
    tags = ["a", "b", "c", "d", "e"]
    day1 = [_tweet(acc, i, [t]) for acc in ("u1", "u2") for i, t in enumerate(tags)]
    day2 = [_tweet("u3", 86400 + i, [t]) for i, t in enumerate(tags)]
    triples = extract_hashtag_features(day1 + day2)
    feats = {t.account: t.feature for t in triples}
    assert feats["u1"] == feats["u2"] != feats["u3"]
    merged = {t.account: t.feature for t in extract_hashtag_features(day1 + day2, daily=False)}
    assert merged["u1"] == merged["u3"]


def test_retweet_features():
    recs = [
        TraceRecord("u1", 1, "retweet", retweeted_tweet_id="T9"),
        TraceRecord("u1", 2, "retweet", retweeted_tweet_id="T9"),
        TraceRecord("u1", 3, "retweet", retweeted_tweet_id="T1"),
        TraceRecord("u1", 4, "tweet", tweet_id="T1"),
    ]
    triples = extract_retweet_features(recs, authors={"T1": "u1"})
    assert triples == [AccountFeatureTriple("u1", FeatureId("tweet_id", "T9"), 2)]
    assert len(extract_retweet_features(recs)) == 2


def test_time_bin():
    assert time_bin(1609459200, 1800).key == "894144"
    assert time_bin(1799, 1800).key == "0"
    assert time_bin(1800, 1800).key == "1"
    assert time_bin(0).namespace is Namespace.TIME_BIN
    with pytest.raises(ValueError):
        time_bin(5, 0)


@given(st.integers(0, 2**40), st.integers(0, 2**40), st.integers(1, 10**6))
def test_time_bin_monotone(a, b, interval):
    lo, hi = sorted((a, b))
    assert int(time_bin(lo, interval).key) <= int(time_bin(hi, interval).key)


@given(st.lists(st.integers(0, 50 * 86400), max_size=30), st.sampled_from([60, 1800, 3600]))
def test_multiplicity_conservation(ts, interval):
    recs = [TraceRecord(f"u{t % 3}", t) for t in ts]
    assert sum(t.multiplicity for t in extract_time_features(recs, interval)) == len(recs)


def test_minhash_identical_sets():
    a = minhash_signature({"x", "y", "z"}, 64, seed=3)
    b = minhash_signature(["z", "y", "x", "x"], 64, seed=3)
    np.testing.assert_array_equal(a.hashes, b.hashes)
    assert estimate_jaccard(a, b) == 1.0


def test_minhash_estimate_is_match_fraction():
    a = minhash_signature({"p", "q", "r"}, 32, seed=0)
    b = minhash_signature({"p", "q", "s"}, 32, seed=0)
    assert estimate_jaccard(a, b) == np.mean(a.hashes == b.hashes)


def test_minhash_errors():
    with pytest.raises(ValueError, match="empty input set"):
        minhash_signature(set(), 8)
    a = minhash_signature({"a"}, 8, seed=0)
    with pytest.raises(ValueError):
        estimate_jaccard(a, minhash_signature({"a"}, 16, seed=0))
    with pytest.raises(ValueError):
        estimate_jaccard(a, minhash_signature({"a"}, 8, seed=1))


def test_minhash_disjoint_sets():
    rng = np.random.default_rng(5)
    for _ in range(20):
        xs = rng.choice(10**6, size=400, replace=False)
        a = minhash_signature({f"a{x}" for x in xs[:200]}, 256, seed=1)
        b = minhash_signature({f"b{x}" for x in xs[200:]}, 256, seed=1)
        assert estimate_jaccard(a, b) <= 0.05


def test_minhash_half_overlap_across_seeds():
    # |A & B| = 100, |A | B| = 200 -> J = 0.5
    a_set = {f"e{i}" for i in range(150)}
    b_set = {f"e{i}" for i in range(50, 200)}
    assert len(a_set & b_set) / len(a_set | b_set) == 0.5
    ests = [estimate_jaccard(minhash_signature(a_set, 256, s), minhash_signature(b_set, 256, s)) for s in range(200)]
    within = np.mean(np.abs(np.array(ests) - 0.5) <= 0.1)
    assert within >= 0.95


def test_hashtag_ngrams():
    assert hashtag_ngrams(["a", "b", "c"]) == {f"a{SEP}b", f"b{SEP}c"}
    assert hashtag_ngrams(["a"]) == {"a"}
