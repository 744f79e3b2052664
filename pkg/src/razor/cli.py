"""Command-line frontend: synth, cluster, select, eval, and bench.

Exit codes: 0 success, 2 usage or validation problem, 3 malformed data.
Every filesystem-writing run drops a manifest.json recording the config,
input hashes, versions, and timings, so runs are auditable and repeatable.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import io as rio
from .core import (
    ConfigError,
    DataError,
    FeatureSet,
    RazorConfig,
    SelectionResult,
    derive_seed,
    load_config_file,
    validate_config,
)
from .metrics import ami, balance_report, segmentation_scores
from .pipeline import razor_cluster
from .selection import ClusterSelection, select
from .synth import SyntheticSpec, generate

EXIT_USAGE = 2
EXIT_DATA = 3

STREAM_PER_LABEL = 5


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, cfg: RazorConfig | None,
                    inputs: list, outputs: list, started: float,
                    extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": dataclasses.asdict(cfg) if cfg is not None else None,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "versions": {
            "razor": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "seconds": round(time.perf_counter() - started, 3),
    }
    if extra:
        manifest.update(extra)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _config_from_args(args) -> RazorConfig:
    cfg = RazorConfig()
    if getattr(args, "config", None):
        cfg = load_config_file(args.config, base=cfg)
    overrides = {}
    for name in ("n_kmeans_cap", "n_entcls", "max_iter", "epsilon", "pca_agg_dims",
                 "th_phi", "pca_sel_dims", "tau", "seed", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = replace(cfg, **overrides)
    return validate_config(cfg)


def _add_config_flags(parser: argparse.ArgumentParser, with_tau: bool = False) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int,
                        default=int(os.environ.get("RAZOR_WORKERS", "0")) or None,
                        help="parallel workers (default: RAZOR_WORKERS or 1)")
    parser.add_argument("--n-kmeans-cap", dest="n_kmeans_cap", type=int, default=None)
    parser.add_argument("--n-entcls", dest="n_entcls", type=int, default=None)
    parser.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--pca-agg-dims", dest="pca_agg_dims", type=int, default=None)
    parser.add_argument("--th-phi", dest="th_phi", type=float, default=None)
    parser.add_argument("--pca-sel-dims", dest="pca_sel_dims", type=int, default=None)
    if with_tau:
        parser.add_argument("--tau", type=float, default=None,
                            help="selected fraction per cluster, in (0, 1]")


def cmd_synth(args) -> int:
    started = time.perf_counter()
    spec = SyntheticSpec(
        n_clusters=args.nc,
        points_per_cluster=args.ns,
        dims=args.m,
        dispersion=args.mu,
        center_scale=args.scale,
        seed=args.seed,
    )
    fs, labels = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    matrix_path = out / f"features.{args.format}"
    rio.save_features(fs, matrix_path, fmt=args.format)
    labels_path = out / "labels.csv"
    rio.save_labels_csv(labels, labels_path)
    _write_manifest(out, "synth", None, [], [matrix_path, labels_path], started,
                    extra={"spec": dataclasses.asdict(spec)})
    print(f"wrote {matrix_path} ({fs.n}x{fs.m}) and {labels_path}")
    return 0


def cmd_cluster(args) -> int:
    started = time.perf_counter()
    cfg = _config_from_args(args)
    fs = rio.load_features(args.input)
    clustering, trace = razor_cluster(fs, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    clustering_path = out / "clustering.json"
    rio.save_clustering(clustering, clustering_path)
    trace_path = out / "trace.json"
    with open(trace_path, "w", encoding="utf-8") as fh:
        json.dump(trace.as_dict(), fh, indent=1)
        fh.write("\n")
    _write_manifest(out, "cluster", cfg, [args.input],
                    [clustering_path, trace_path], started)
    print(f"{len(clustering)} clusters, converged_at={trace.converged_at}, "
          f"wrote {clustering_path}")
    return 0


def _selection_for_subset(fs_rows: np.ndarray, cfg: RazorConfig):
    fs = FeatureSet(fs_rows)
    clustering, _ = razor_cluster(fs, cfg)
    return clustering, select(clustering, fs, cfg)


def cmd_select(args) -> int:
    started = time.perf_counter()
    cfg = _config_from_args(args)
    fs = rio.load_features(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    inputs = [args.input]
    if args.per_label:
        inputs.append(args.per_label)
        labels = rio.load_labels_csv(args.per_label)
        if labels.size != fs.n:
            raise DataError("labels length does not match the feature matrix")
        per_cluster: list[ClusterSelection] = []
        global_indices: list[int] = []
        outputs = []
        for value in np.unique(labels):
            rows = np.where(labels == value)[0]
            sub_cfg = replace(cfg, seed=derive_seed(cfg.seed, STREAM_PER_LABEL, int(value)))
            sub_clustering, sub_selection = _selection_for_subset(fs.data[rows], sub_cfg)
            label_dir = out / f"label_{int(value)}"
            label_dir.mkdir(exist_ok=True)
            remapped = [
                ClusterSelection(
                    cluster_id=len(per_cluster) + rec.cluster_id,
                    selected=tuple(int(rows[v]) for v in rec.selected),
                    n_samp=rec.n_samp,
                )
                for rec in sub_selection.per_cluster
            ]
            label_result = SelectionResult(
                tuple(remapped),
                tuple(sorted(int(rows[v]) for v in sub_selection.global_indices)),
            )
            label_path = label_dir / "selection.json"
            rio.save_selection(label_result, label_path)
            outputs.append(label_path)
            per_cluster.extend(remapped)
            global_indices.extend(label_result.global_indices)
        result = SelectionResult(tuple(per_cluster), tuple(sorted(global_indices)))
    else:
        if not args.clustering:
            print("error: --clustering is required without --per-label", file=sys.stderr)
            return EXIT_USAGE
        inputs.append(args.clustering)
        clustering = rio.load_clustering(args.clustering)
        if clustering.source_n != fs.n:
            raise DataError("clustering does not cover the feature matrix")
        result = select(clustering, fs, cfg)
        outputs = []
    selection_path = out / "selection.json"
    rio.save_selection(result, selection_path)
    outputs.extend([selection_path, selection_path.with_suffix(".txt")])
    _write_manifest(out, "select", cfg, inputs, outputs, started)
    print(f"selected {len(result.global_indices)} of {fs.n} instances, "
          f"wrote {selection_path}")
    return 0


def cmd_eval(args) -> int:
    if args.mode == "ami":
        a = rio.load_labels_csv(args.labels_a)
        b = rio.load_labels_csv(args.labels_b)
        if a.size != b.size:
            raise DataError("label vectors differ in length")
        report = {"mode": "ami", "ami": ami(a, b)}
    elif args.mode == "seg":
        pred = rio.load_labels_csv(args.pred)
        truth = rio.load_labels_csv(args.truth)
        if pred.size != truth.size:
            raise DataError("label vectors differ in length")
        report = {"mode": "seg", **segmentation_scores(pred, truth)}
    else:
        selection = rio.load_selection(args.selection)
        truth = rio.load_labels_csv(args.labels)
        report = {"mode": "balance", **balance_report(selection, truth)}
    json.dump(report, sys.stdout, indent=1)
    print()
    return 0


def cmd_bench(args) -> int:
    started = time.perf_counter()
    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n_c in args.nc_list:
        for n_s in args.ns_list:
            for m in args.m_list:
                cell_seed = derive_seed(cfg.seed, 7, n_c, n_s, m)
                spec = SyntheticSpec(n_c, n_s, m, args.mu, args.scale, seed=cell_seed)
                fs, labels = generate(spec)
                for workers in args.workers_list:
                    run_cfg = replace(cfg, seed=cell_seed, workers=workers)
                    t0 = time.perf_counter()
                    clustering, trace = razor_cluster(fs, run_cfg)
                    seconds = time.perf_counter() - t0
                    score = ami(labels, clustering.labels())
                    rows.append({
                        "n_c": n_c, "n_s": n_s, "m": m, "workers": workers,
                        "n": fs.n, "ami": round(score, 6),
                        "converged_at": trace.converged_at,
                        "iterations": len(trace.records),
                        "seconds": round(seconds, 3),
                    })
                    print(f"n_c={n_c} n_s={n_s} m={m} workers={workers}: "
                          f"ami={score:.4f} iters={len(trace.records)} "
                          f"{seconds:.1f}s")
    csv_path = out / "bench.csv"
    fields = ["n_c", "n_s", "m", "workers", "n", "ami",
              "converged_at", "iterations", "seconds"]
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(fields) + "\n")
        for row in rows:
            fh.write(",".join(str(row[f]) for f in fields) + "\n")
    _write_manifest(out, "bench", cfg, [], [csv_path], started)
    print(f"wrote {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="razor",
        description="Entropy-driven clustering and convex-hull instance selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    p_synth.add_argument("--nc", type=int, required=True, help="number of clusters")
    p_synth.add_argument("--ns", type=int, required=True, help="points per cluster")
    p_synth.add_argument("--m", type=int, required=True, help="vector dimension")
    p_synth.add_argument("--mu", type=float, required=True, help="cluster dispersion")
    p_synth.add_argument("--scale", type=float, default=1.0, help="center scale")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--format", choices=("rzf", "csv"), default="rzf")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_cluster = sub.add_parser("cluster", help="run the full clustering pipeline")
    p_cluster.add_argument("--input", required=True, help="feature matrix (csv or rzf)")
    p_cluster.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p_cluster)
    p_cluster.set_defaults(func=cmd_cluster)

    p_select = sub.add_parser("select", help="select representatives per cluster")
    p_select.add_argument("--input", required=True, help="feature matrix (csv or rzf)")
    p_select.add_argument("--clustering", help="clustering JSON from the cluster command")
    p_select.add_argument("--per-label", dest="per_label",
                          help="labels CSV; rerun the pipeline per label value")
    p_select.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p_select, with_tau=True)
    p_select.set_defaults(func=cmd_select)

    p_eval = sub.add_parser("eval", help="evaluate labelings or a selection")
    p_eval.add_argument("--mode", choices=("ami", "seg", "balance"), required=True)
    p_eval.add_argument("--labels-a", dest="labels_a", help="labels CSV (ami)")
    p_eval.add_argument("--labels-b", dest="labels_b", help="labels CSV (ami)")
    p_eval.add_argument("--pred", help="predicted labels CSV (seg)")
    p_eval.add_argument("--truth", help="ground-truth labels CSV (seg)")
    p_eval.add_argument("--selection", help="selection JSON (balance)")
    p_eval.add_argument("--labels", help="ground-truth labels CSV (balance)")
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="grid benchmark: synth, cluster, eval")
    p_bench.add_argument("--nc-list", dest="nc_list", type=int, nargs="+", required=True)
    p_bench.add_argument("--ns-list", dest="ns_list", type=int, nargs="+", required=True)
    p_bench.add_argument("--m-list", dest="m_list", type=int, nargs="+", required=True)
    p_bench.add_argument("--mu", type=float, default=0.01)
    p_bench.add_argument("--scale", type=float, default=1.0)
    p_bench.add_argument("--workers-list", dest="workers_list", type=int, nargs="+",
                         default=[1])
    p_bench.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)
    return parser


_REQUIRED_BY_MODE = {
    "ami": ("labels_a", "labels_b"),
    "seg": ("pred", "truth"),
    "balance": ("selection", "labels"),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval":
        missing = [f"--{name.replace('_', '-')}"
                   for name in _REQUIRED_BY_MODE[args.mode]
                   if getattr(args, name) is None]
        if missing:
            parser.error(f"mode {args.mode} requires {' and '.join(missing)}")
    try:
        return args.func(args)
    except (ConfigError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, rio.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
