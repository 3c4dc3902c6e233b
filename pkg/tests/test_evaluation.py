from collections import Counter

import numpy as np
import pytest
from scipy import stats

from coordnet.bipartite import build_bipartite
from coordnet.cluster import percentile_threshold
from coordnet.evaluation import (
    BACKGROUND,
    WINDOW_SECONDS,
    WINDOW_START,
    PlantedDataset,
    SynthConfig,
    degree_preserving_shuffle,
    generate_planted,
    null_model_pvalues,
    precision_recall,
    support_sweep,
    weight_histogram,
)
from coordnet.model import (
    AccountFeatureTriple,
    ClusterMethod,
    ClusterSet,
    ConfigError,
    CoordinationNetwork,
    FeatureId,
    TraceKind,
    preset,
)
from coordnet.pipeline import run_pipeline
from coordnet.project import project

SMALL = SynthConfig(n_background=60, n_groups=2, group_size=6, records_per_account=12, vocab_size=300, seed=4)


# -- generator -----------------------------------------------------------------

def test_generator_deterministic():
    a, b = generate_planted(SMALL), generate_planted(SMALL)
    assert a.records == b.records and a.labels == b.labels
    assert generate_planted(SMALL.__class__(**{**SMALL.to_dict(), "seed": 5})).records != a.records


def test_generator_shape():
    ds = generate_planted(SMALL)
    assert len(ds.records) == SMALL.n_accounts * SMALL.records_per_account
    assert len(ds.labels) == SMALL.n_accounts
    assert Counter(ds.labels.values()) == {BACKGROUND: 60, "group_0": 6, "group_1": 6}
    per_account = Counter(r.account for r in ds.records)
    assert set(per_account.values()) == {SMALL.records_per_account}
    assert all(WINDOW_START <= r.timestamp < WINDOW_START + WINDOW_SECONDS for r in ds.records)
    assert all(r.kind is TraceKind.RETWEET for r in ds.records)


def test_p_copy_one_draws_only_from_pool():
    ds = generate_planted(SynthConfig(**{**SMALL.to_dict(), "p_copy": 1.0}))
    for r in ds.records:
        lab = ds.labels[r.account]
        if lab != BACKGROUND:
            assert r.retweeted_tweet_id.startswith(f"g{lab.split('_')[1]}_")
        else:
            assert r.retweeted_tweet_id.startswith("f")


def test_p_copy_zero_matches_background_distribution():
    cfg = SynthConfig(n_background=400, n_groups=5, group_size=40, records_per_account=20, vocab_size=2000, p_copy=0.0, seed=9)
    ds = generate_planted(cfg)
    ranks = {True: [], False: []}
    for r in ds.records:
        ranks[ds.labels[r.account] != BACKGROUND].append(int(r.retweeted_tweet_id[1:]))
    assert stats.ks_2samp(ranks[True], ranks[False]).pvalue > 0.01


def test_time_sync_generator_uses_pool_bins():
    cfg = SynthConfig(**{**SMALL.to_dict(), "trace_kind": "time_sync", "p_copy": 1.0})
    ds = generate_planted(cfg)
    for g in ("group_0", "group_1"):
        bins = {(r.timestamp - WINDOW_START) // 1800 for r in ds.records if ds.labels[r.account] == g}
        assert len(bins) <= cfg.records_per_account


@pytest.mark.parametrize("bad", [{"p_copy": 1.5}, {"group_size": 1}, {"n_groups": -1}, {"zipf_exponent": 0}])
def test_synth_config_validation(bad):
    with pytest.raises(ConfigError):
        SynthConfig(**bad)


# -- precision / recall --------------------------------------------------------

def _clusters(assign):
    return ClusterSet(assign, ClusterMethod.CONNECTED_COMPONENTS)


def test_precision_recall_example():
    labels = {"a": "group_0", "b": "group_0", "c": BACKGROUND, "d": "group_1"}
    pr = precision_recall(_clusters({"a": 0, "b": 0, "c": 1, "d": 1}), labels)
    assert pr.precision == pytest.approx(0.75) and pr.recall == 1.0
    pr = precision_recall(_clusters({"a": 0, "c": 0}), labels)
    assert pr.precision == 0.5 and pr.recall == pytest.approx(1 / 3)


def test_precision_none_when_nothing_flagged():
    pr = precision_recall(_clusters({}), {"a": "group_0"})
    assert pr.precision is None and pr.recall == 0.0


def test_precision_recall_unknown_account():
    with pytest.raises(ValueError, match="no label"):
        precision_recall(_clusters({"zz": 0, "a": 0}), {"a": "group_0"})


# -- sweep -----------------------------------------------------------------------

def test_sweep_single_threshold_matches_direct_run():
    ds = generate_planted(SMALL)
    cfg = preset(4).replace(min_support=1, edge_keep_fraction=0.05)
    (row,) = support_sweep(ds, cfg, [6])
    direct = run_pipeline(ds.records, cfg.replace(min_support=6))
    pr = precision_recall(direct.clusters, ds.labels)
    assert row == (6, pr.precision, pr.recall, len(direct.clusters))


def test_sweep_rows_and_unreachable_threshold():
    ds = generate_planted(SMALL)
    rows = support_sweep(ds, preset(4).replace(edge_keep_fraction=0.05), [2, 5, 1000])
    assert [r.threshold for r in rows] == [2, 5, 1000]
    assert rows[-1].n_flagged == 0 and rows[-1].precision is None and rows[-1].recall == 0.0
    with pytest.raises(ValueError):
        support_sweep(ds, preset(4), [5, 2])


# -- histogram -------------------------------------------------------------------

def test_histogram_conserves_edges_and_marks_cutoff():
    rng = np.random.default_rng(0)
    n = 300
    net = CoordinationNetwork(tuple(f"n{i}" for i in range(n + 1)), np.zeros(n), np.arange(1, n + 1), rng.uniform(0.01, 1, n), "cosine")
    for log_scale in (False, True):
        h = weight_histogram(net, 20, log_scale=log_scale, keep_fraction=0.05)
        assert sum(c for _, _, c in h.bins) == n
        assert len(h.bins) == 20
        assert h.threshold == percentile_threshold(net, 0.05)
        assert h.bins[0][0] == pytest.approx(net.weight.min()) and h.bins[-1][1] == pytest.approx(net.weight.max())


def test_histogram_empty_and_constant():
    assert weight_histogram(CoordinationNetwork.empty(("a",), "cosine")).bins == []
    net = CoordinationNetwork(("a", "b", "c"), [0, 0], [1, 2], [0.5, 0.5], "cosine")
    assert weight_histogram(net, 10).bins == [(0.5, 0.5, 2)]


# -- null model ------------------------------------------------------------------

def T(a, f):
    return AccountFeatureTriple(a, FeatureId("tweet_id", f), 1)


def _random_bipartite(seed, n_acc=30, n_feat=40, p=0.15):
    rng = np.random.default_rng(seed)
    triples = [T(f"a{i}", f"f{j}") for i in range(n_acc) for j in range(n_feat) if rng.random() < p]
    return build_bipartite(triples, "binary")


@pytest.mark.parametrize("seed", range(5))
def test_shuffle_preserves_degrees(seed):
    net = _random_bipartite(seed)
    out = degree_preserving_shuffle(net, seed=seed)
    assert (out.account_degrees == net.account_degrees).all()
    assert (out.feature_degrees == net.feature_degrees).all()
    assert out.matrix.max() == 1.0
    assert (out.matrix != net.matrix).nnz > 0


def test_shuffle_keeps_tf_with_account(planted):
    res = run_pipeline(planted.records, preset(4))
    net = res.bipartite
    out = degree_preserving_shuffle(net, seed=1)
    assert out.nnz == net.nnz
    np.testing.assert_allclose(out.account_degrees, net.account_degrees)
    np.testing.assert_array_equal(out.feature_degrees, net.feature_degrees)


def test_pvalues_bounds_and_errors():
    net = _random_bipartite(11)
    edges = [(a, b) for a, b, _ in project(net, "jaccard").edges()][:10]
    p = null_model_pvalues(net, edges, n_shuffles=20, seed=3)
    assert all(1 / 21 <= v <= 1.0 for v in p.values())
    assert null_model_pvalues(net, edges, n_shuffles=20, seed=3) == p
    with pytest.raises(ValueError, match="not in the network"):
        null_model_pvalues(net, [("a0", "nobody")], n_shuffles=2)
    with pytest.raises(ValueError):
        null_model_pvalues(net, edges, n_shuffles=0)
    assert null_model_pvalues(net, [], n_shuffles=3) == {}


def test_pvalue_rejects_non_edge():
    net = build_bipartite([T("a", "x"), T("b", "x"), T("c", "y"), T("d", "y")], "binary")
    with pytest.raises(ValueError, match="not in the observed projection"):
        null_model_pvalues(net, [("a", "c")], n_shuffles=2)


def test_pvalue_single_shuffle_of_planted_pair(planted):
    res = run_pipeline(planted.records, preset(4))
    group = sorted(a for a, lab in planted.labels.items() if lab == "group_0")
    (p,) = null_model_pvalues(res.bipartite, [(group[0], group[1])], n_shuffles=1).values()
    assert p == 0.5
