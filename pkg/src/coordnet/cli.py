"""``coordnet`` command line: detect, sweep, synth, export-graphml."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import export
from .evaluation import PlantedDataset, SynthConfig, generate_planted, support_sweep, weight_histogram
from .ingest import read_authors, read_handle_log, read_tweet_records, write_tweet_records
from .model import (
    ConfigError,
    CoordnetError,
    FormatError,
    config_from_mapping,
    parse_config_text,
)
from .pipeline import run_pipeline

logger = logging.getLogger("coordnet")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_EMPTY = 0, 1, 2, 3


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--case", type=int, choices=range(1, 6), help="load the preset for case study N")
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--input", type=Path, nargs="+", required=True, help="JSONL trace files or a handle-log CSV")
    p.add_argument("--authors", type=Path, help="tweet_id,author_id CSV for self-retweet filtering")
    p.add_argument("--min-support", type=int)
    p.add_argument("--keep-fraction", type=float)
    p.add_argument("--similarity", choices=["cooccurrence", "jaccard", "cosine"])
    p.add_argument("--weighting", choices=["binary", "count", "tfidf"])
    p.add_argument("--time-bin", type=int, metavar="SECONDS")
    p.add_argument("--fuzzy", action="store_true", help="MinHash near-duplicate hashtag sequences (case 3)")
    p.add_argument("--threads", type=int, default=None, help="projection threads (default: all cores)")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coordnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run the detection pipeline")
    _add_pipeline_args(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--histogram-bins", type=int, default=0, help="also write weight_histogram.csv")

    p = sub.add_parser("sweep", help="precision/recall against support thresholds")
    _add_pipeline_args(p)
    p.add_argument("--labels", type=Path, required=True, help="account_id,label CSV")
    p.add_argument("--thresholds", default="2,4,6,8,10")
    p.add_argument("--out", type=Path, required=True, help="output CSV (or directory)")

    p = sub.add_parser("synth", help="generate a planted-coordination dataset")
    p.add_argument("--config", type=Path, help="flat key = value synth config")
    for f in dataclasses.fields(SynthConfig):
        flag = "--" + f.name.replace("_", "-")
        typ = {"int": int, "float": float}.get(f.type, str)
        p.add_argument(flag, type=typ, dest=f.name)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("export-graphml", help="convert detect outputs to GraphML")
    p.add_argument("--edges", type=Path, required=True)
    p.add_argument("--clusters", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _resolve_config(args):
    values = parse_config_text(args.config.read_text(encoding="utf-8")) if args.config else {}
    if args.case is not None:
        values = {k: v for k, v in values.items() if k != "extractor"}
        values["case"] = args.case
    overrides = {
        "min_support": args.min_support,
        "edge_keep_fraction": args.keep_fraction,
        "similarity": args.similarity,
        "bipartite_weighting": args.weighting,
        "time_bin_seconds": args.time_bin,
        "seed": args.seed,
        "fuzzy": True if args.fuzzy else None,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(values)


def _load_records(paths):
    records, skipped = [], 0
    for path in paths:
        with open(path, "rb") as fh:
            if path.suffix.lower() == ".csv":
                records.extend(read_handle_log(fh))
            else:
                recs, n_bad = read_tweet_records(fh)
                records.extend(recs)
                skipped += n_bad
    return records, skipped


def _load_authors(path):
    if path is None:
        return None
    with open(path, "rb") as fh:
        return read_authors(fh)


def cmd_detect(args) -> int:
    config = _resolve_config(args)
    records, skipped = _load_records(args.input)
    authors = _load_authors(args.authors)
    result = run_pipeline(records, config, authors=authors, threads=args.threads)

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    export.write_edges_csv(result.filtered, out / "coordination_edges.csv")
    export.write_clusters_csv(result.clusters, out / "clusters.csv")
    export.write_stats_csv(result.clusters, out / "cluster_stats.csv", result.switches)
    report = dict(result.report)
    wall = report.pop("wall_time_s")
    report["malformed_lines_skipped"] = skipped
    report["config"] = config.to_dict()
    export.write_json(report, out / "run_report.json")
    export.write_json({"wall_time_s": wall}, out / "timing.json")
    if args.histogram_bins:
        hist = weight_histogram(result.network, args.histogram_bins, keep_fraction=config.edge_keep_fraction)
        export.write_rows_csv(["bin_low", "bin_high", "count"], hist.bins, out / "weight_histogram.csv")
    if len(result.clusters) == 0:
        logger.error("no coordinated groups found after filtering")
        return EXIT_EMPTY
    return EXIT_OK


def _parse_thresholds(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"thresholds: cannot parse {text!r}") from None
    if not values or values != sorted(values) or min(values) < 1:
        raise ConfigError("thresholds must be ascending positive integers")
    return values


def cmd_sweep(args) -> int:
    config = _resolve_config(args)
    thresholds = _parse_thresholds(args.thresholds)
    labels = export.read_labels_csv(args.labels)
    records, _ = _load_records(args.input)
    authors = _load_authors(args.authors)
    dataset = PlantedDataset(records, labels)
    rows = support_sweep(dataset, config, thresholds, authors=authors, threads=args.threads)
    out = args.out / "sweep.csv" if args.out.is_dir() else args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    export.write_rows_csv(["threshold", "precision", "recall", "n_flagged"], rows, out)
    return EXIT_OK


def cmd_synth(args) -> int:
    values = parse_synth_text(args.config.read_text(encoding="utf-8")) if args.config else {}
    for f in dataclasses.fields(SynthConfig):
        if getattr(args, f.name) is not None:
            values[f.name] = getattr(args, f.name)
    try:
        cfg = SynthConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    dataset = generate_planted(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "records.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        write_tweet_records(dataset.records, fh)
    export.write_labels_csv(dataset.labels, args.out / "labels.csv")
    return EXIT_OK


def parse_synth_text(text: str) -> dict:
    types = {f.name: f.type for f in dataclasses.fields(SynthConfig)}
    out = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, raw = (s.strip() for s in line.partition("="))
        if key not in types:
            raise ConfigError(f"unknown synth config key {key!r}")
        try:
            out[key] = {"int": int, "float": float}.get(types[key], str)(raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return out


def cmd_export_graphml(args) -> int:
    edges = export.read_edges_csv(args.edges)
    clusters = export.read_clusters_csv(args.clusters)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    export.write_graphml(edges, clusters, args.out)
    return EXIT_OK


COMMANDS = {
    "detect": cmd_detect,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "export-graphml": cmd_export_graphml,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("COORDNET_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    except (OSError, FormatError) as exc:
        logger.error("i/o error: %s", exc)
        return EXIT_IO
    except CoordnetError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
