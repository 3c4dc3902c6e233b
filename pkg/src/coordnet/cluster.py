"""Edge filtering, clustering and per-cluster characterisation."""
from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import BipartiteNetwork, ClusterMethod, ClusterSet, ComponentStats, CoordinationNetwork

STAR_CENTRALIZATION = 0.8


def keep_count(keep_fraction: float, n_edges: int) -> int:
    """``ceil(keep_fraction * n_edges)`` evaluated on the decimal value of the fraction."""
    return math.ceil(Fraction(str(keep_fraction)) * n_edges)


def percentile_threshold(net: CoordinationNetwork, keep_fraction: float) -> float | None:
    """Weight of the edge at rank ``keep_count`` in descending order, or None if empty."""
    if not (0.0 < keep_fraction <= 1.0):
        raise ValueError("keep_fraction must be in (0,1]")
    if net.n_edges == 0:
        return None
    k = keep_count(keep_fraction, net.n_edges)
    return float(-np.partition(-net.weight, k - 1)[k - 1])


def filter_top_percentile(net: CoordinationNetwork, keep_fraction: float) -> CoordinationNetwork:
    """Keep every edge whose weight reaches the top-``keep_fraction`` cutoff.

    Ties at the cutoff are all kept, so the result may hold more than
    ``ceil(keep_fraction * E)`` edges.
    """
    t = percentile_threshold(net, keep_fraction)
    if t is None or keep_fraction == 1.0:
        return net
    return net.subset_edges(net.weight >= t)


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def _label_groups(groups: Iterable[Sequence[str]]) -> dict[str, int]:
    """Label groups of size >= 2 by descending size, ties by smallest member."""
    ordered = sorted((sorted(g) for g in groups if len(g) >= 2), key=lambda g: (-len(g), g[0]))
    return {a: k for k, g in enumerate(ordered) for a in g}


def _with_stats(assignments, method, net, bipartite) -> ClusterSet:
    members: dict[int, list[str]] = defaultdict(list)
    for a, k in assignments.items():
        members[k].append(a)
    stats = {k: component_stats(m, net, bipartite) for k, m in sorted(members.items())}
    return ClusterSet(assignments, method, stats)


def connected_components(net: CoordinationNetwork, bipartite: BipartiteNetwork | None = None) -> ClusterSet:
    uf = UnionFind(net.n_nodes)
    for i, j in zip(net.u.tolist(), net.v.tolist()):
        uf.union(i, j)
    groups: dict[int, list[str]] = defaultdict(list)
    touched = np.flatnonzero(net.degrees() > 0)
    for i in touched.tolist():
        groups[uf.find(i)].append(net.nodes[i])
    return _with_stats(_label_groups(groups.values()), ClusterMethod.CONNECTED_COMPONENTS, net, bipartite)


# -- Louvain ------------------------------------------------------------------

def _adjacency(net: CoordinationNetwork) -> list[dict[int, float]]:
    adj: list[dict[int, float]] = [dict() for _ in range(net.n_nodes)]
    for i, j, w in zip(net.u.tolist(), net.v.tolist(), net.weight.tolist()):
        adj[i][j] = adj[i].get(j, 0.0) + w
        adj[j][i] = adj[j].get(i, 0.0) + w
    return adj


def _one_level(adj, rng, resolution):
    """Local moving phase. Returns (community of each node, improved?)."""
    n = len(adj)
    # self-loop weight counts twice in the node's degree
    k = [sum(nb.values()) + nb.get(i, 0.0) for i, nb in enumerate(adj)]
    m2 = sum(k)
    comm = list(range(n))
    tot = list(k)
    order = rng.permutation(n).tolist()
    improved = False
    moved = True
    while moved:
        moved = False
        for i in order:
            ci = comm[i]
            links: dict[int, float] = defaultdict(float)
            for j, w in adj[i].items():
                if j != i:
                    links[comm[j]] += w
            tot[ci] -= k[i]
            base = links.get(ci, 0.0) - resolution * tot[ci] * k[i] / m2
            best, best_gain = ci, base
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * k[i] / m2
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            tot[best] += k[i]
            if best != ci:
                comm[i] = best
                moved = improved = True
    return comm, improved


def _aggregate(adj, comm):
    relabel = {c: r for r, c in enumerate(sorted(set(comm)))}
    new = [dict() for _ in relabel]
    for i, nb in enumerate(adj):
        ci = relabel[comm[i]]
        for j, w in nb.items():
            cj = relabel[comm[j]]
            # non-loop edges are visited from both endpoints
            if i != j and ci == cj:
                w = w / 2
            new[ci][cj] = new[ci].get(cj, 0.0) + w
    return new, [relabel[c] for c in comm]


def louvain_partition(net: CoordinationNetwork, seed: int = 0, resolution: float = 1.0) -> list[int]:
    """Community index per node (isolated nodes get their own community)."""
    rng = np.random.default_rng(seed)
    adj = _adjacency(net)
    node_comm = list(range(net.n_nodes))
    if net.n_edges == 0:
        return node_comm
    while True:
        comm, improved = _one_level(adj, rng, resolution)
        if not improved:
            break
        adj, relabelled = _aggregate(adj, comm)
        node_comm = [relabelled[c] for c in node_comm]
    return node_comm


def louvain(
    net: CoordinationNetwork, seed: int = 0, bipartite: BipartiteNetwork | None = None, resolution: float = 1.0
) -> ClusterSet:
    """Weighted Louvain communities of the non-isolated nodes."""
    if net.n_nodes == 0:
        raise ValueError("louvain requires a non-empty network")
    part = louvain_partition(net, seed, resolution)
    touched = net.degrees() > 0
    groups: dict[int, list[str]] = defaultdict(list)
    for i, c in enumerate(part):
        if touched[i]:
            groups[c].append(net.nodes[i])
    return _with_stats(_label_groups(groups.values()), ClusterMethod.LOUVAIN, net, bipartite)


def modularity(net: CoordinationNetwork, communities: Mapping[str, int] | Sequence[int], resolution: float = 1.0) -> float:
    """Weighted Newman modularity; nodes missing from a mapping count as singletons."""
    if isinstance(communities, Mapping):
        label = [communities.get(a, -1 - i) for i, a in enumerate(net.nodes)]
    else:
        label = list(communities)
    m = float(net.weight.sum())
    if m == 0:
        return 0.0
    deg = np.zeros(net.n_nodes)
    np.add.at(deg, net.u, net.weight)
    np.add.at(deg, net.v, net.weight)
    inside: dict[int, float] = defaultdict(float)
    total: dict[int, float] = defaultdict(float)
    for i, j, w in zip(net.u.tolist(), net.v.tolist(), net.weight.tolist()):
        if label[i] == label[j]:
            inside[label[i]] += w
    for i, d in enumerate(deg.tolist()):
        total[label[i]] += d
    return sum(inside[c] / m - resolution * (total[c] / (2 * m)) ** 2 for c in total)


# -- characterisation ---------------------------------------------------------

def component_stats(
    members: Iterable[str], net: CoordinationNetwork, bipartite: BipartiteNetwork | None = None
) -> ComponentStats:
    """Size, density and Freeman degree centralisation of one cluster."""
    members = list(members)
    n = len(members)
    if n < 2:
        raise ValueError("component_stats needs at least 2 accounts")
    idx = np.array([net.node_index[a] for a in members], dtype=np.int64)
    inside = np.zeros(net.n_nodes, dtype=bool)
    inside[idx] = True
    mask = inside[net.u] & inside[net.v]
    edges = int(mask.sum())
    deg = np.bincount(np.concatenate([net.u[mask], net.v[mask]]), minlength=net.n_nodes)[idx]
    density = 2.0 * edges / (n * (n - 1))
    centralization = float((deg.max() - deg).sum()) / ((n - 1) * (n - 2)) if n >= 3 else 0.0
    shared = 0
    if bipartite is not None:
        rows = [bipartite.account_index[a] for a in members if a in bipartite.account_index]
        if rows:
            sub = bipartite.matrix[rows]
            shared = int((np.bincount(sub.indices, minlength=bipartite.n_features) >= 2).sum())
    return ComponentStats(n, edges, density, centralization, shared)


def is_star(stats: ComponentStats, threshold: float = STAR_CENTRALIZATION) -> bool:
    return stats.size >= 3 and stats.degree_centralization >= threshold


def _holder_sequences(log) -> dict[str, list[str]]:
    seqs: dict[str, list[str]] = defaultdict(list)
    for rec in log:
        s = seqs[rec.handle]
        if not s or s[-1] != rec.account:
            s.append(rec.account)
    return seqs


def reciprocal_switch_events(log) -> list[tuple[str, str, str]]:
    """``(handle, returning_holder, intermediate)`` for every A -> B -> A switch pair.

    Each switch belongs to at most one pair; pairs are matched left to right,
    so ``[a, b, a, b, a]`` yields two events.
    """
    events = []
    for handle, seq in _holder_sequences(log).items():
        i = 0
        while i + 2 < len(seq):
            if seq[i] == seq[i + 2]:
                events.append((handle, seq[i], seq[i + 1]))
                i += 2
            else:
                i += 1
    return events


def reciprocal_switches(log, clusters: ClusterSet) -> dict[int, int]:
    """Count reciprocal handle switches per cluster of the intermediate holder.

    ``log`` must be in chronological order.
    """
    counts = {k: 0 for k in range(clusters.n_clusters)}
    for _, _, middle in reciprocal_switch_events(log):
        k = clusters.assignments.get(middle)
        if k is not None:
            counts[k] += 1
    return counts
