"""CSV / JSON / GraphML writers and readers for pipeline outputs."""
from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable, Mapping

from .model import BipartiteNetwork, ClusterSet, CoordinationNetwork, FormatError

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_edges_csv(net: CoordinationNetwork, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["account_u", "account_v", "weight"])
        for a, b, weight in net.edges():
            w.writerow([a, b, _fmt(weight)])


def read_edges_csv(path) -> list[tuple[str, str, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["account_u", "account_v", "weight"]:
            raise FormatError(f"{path}: expected header account_u,account_v,weight")
        try:
            return [(r["account_u"], r["account_v"], float(r["weight"])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}") from None


def write_clusters_csv(clusters: ClusterSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["account_id", "cluster_id"])
        for label, members in clusters.members().items():
            for a in members:
                w.writerow([a, label])


def read_clusters_csv(path) -> dict[str, int]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["account_id", "cluster_id"]:
            raise FormatError(f"{path}: expected header account_id,cluster_id")
        try:
            return {r["account_id"]: int(r["cluster_id"]) for r in reader}
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}") from None


def write_stats_csv(clusters: ClusterSet, path, switches: Mapping[int, int] | None = None) -> None:
    switches = switches or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster_id", "size", "edges", "density", "centralization", "reciprocal_switches"])
        for label in sorted(clusters.stats):
            s = clusters.stats[label]
            w.writerow([label, s.size, s.edge_count, _fmt(s.density), _fmt(s.degree_centralization), switches.get(label, 0)])


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_bipartite_csv(net: BipartiteNetwork, path) -> None:
    """Debug dump of every stored entry."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["account_id", "feature_namespace", "feature_key", "weight"])
        for a, f, weight in net.entries():
            w.writerow([a, f.namespace.value, f.key, _fmt(weight)])


def write_rows_csv(header: Iterable[str], rows: Iterable[Iterable], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow(["" if x is None else (_fmt(x) if isinstance(x, float) else x) for x in row])


def write_labels_csv(labels: Mapping[str, str], path) -> None:
    write_rows_csv(["account_id", "label"], sorted(labels.items()), path)


def read_labels_csv(path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["account_id", "label"]:
            raise FormatError(f"{path}: expected header account_id,label")
        return {r["account_id"]: r["label"] for r in reader}


def graphml_document(edges: Iterable[tuple[str, str, float]], clusters: Mapping[str, int]) -> ET.ElementTree:
    """Undirected GraphML with int ``cluster_id`` on nodes and double ``weight`` on edges.

    Nodes are the union of edge endpoints and clustered accounts; nodes
    without a cluster get ``cluster_id = -1``.
    """
    edges = list(edges)
    ET.register_namespace("", GRAPHML_NS)
    root = ET.Element(f"{{{GRAPHML_NS}}}graphml")
    ET.SubElement(root, f"{{{GRAPHML_NS}}}key", {"id": "cluster_id", "for": "node", "attr.name": "cluster_id", "attr.type": "int"})
    ET.SubElement(root, f"{{{GRAPHML_NS}}}key", {"id": "weight", "for": "edge", "attr.name": "weight", "attr.type": "double"})
    graph = ET.SubElement(root, f"{{{GRAPHML_NS}}}graph", {"id": "G", "edgedefault": "undirected"})
    nodes = sorted(set(clusters) | {a for a, _, _ in edges} | {b for _, b, _ in edges})
    for n in nodes:
        el = ET.SubElement(graph, f"{{{GRAPHML_NS}}}node", {"id": n})
        ET.SubElement(el, f"{{{GRAPHML_NS}}}data", {"key": "cluster_id"}).text = str(clusters.get(n, -1))
    for k, (a, b, w) in enumerate(edges):
        el = ET.SubElement(graph, f"{{{GRAPHML_NS}}}edge", {"id": f"e{k}", "source": a, "target": b})
        ET.SubElement(el, f"{{{GRAPHML_NS}}}data", {"key": "weight"}).text = _fmt(w)
    tree = ET.ElementTree(root)
    ET.indent(tree)
    return tree


def write_graphml(edges, clusters, path) -> None:
    graphml_document(edges, clusters).write(Path(path), encoding="utf-8", xml_declaration=True)
