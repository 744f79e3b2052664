"""Bit-exact readers and writers for matrices, clusterings, and selections.

On disk floats are 32-bit (the RZF format); all internal math is 64-bit.
Every writer is deterministic: identical inputs produce identical bytes.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .core import Cluster, Clustering, DataError, FeatureSet, SelectionResult

RZF_MAGIC = b"RZF1"


class FormatError(DataError):
    """File contents do not match the declared format."""


def _parse_float(token: str):
    try:
        return float(token)
    except ValueError:
        return None


def load_features_csv(path) -> FeatureSet:
    """Parse a comma-separated matrix.

    A non-numeric first line is treated as a header; a non-numeric leading
    column is treated as an external id column.
    """
    rows = []
    ids = []
    has_ids = None
    m = None
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() != ""]
    if not lines:
        raise FormatError("empty matrix")
    # Header detection: a leading id column leaves the remaining cells
    # numeric, so a first line whose non-leading cells are non-numeric
    # (or whose only cell is) must be a header.
    probe = [c.strip() for c in lines[0].split(",")]
    non_numeric = [_parse_float(c) is None for c in probe]
    if all(non_numeric) or (len(probe) > 1 and all(non_numeric[1:]) and any(non_numeric[1:])):
        lines = lines[1:]
    if not lines:
        raise FormatError("empty matrix")
    for r, line in enumerate(lines):
        cells = [c.strip() for c in line.split(",")]
        if has_ids is None:
            has_ids = _parse_float(cells[0]) is None and len(cells) > 1
        if has_ids:
            ids.append(cells[0])
            cells = cells[1:]
        values = []
        for c_idx, cell in enumerate(cells):
            v = _parse_float(cell)
            if v is None or not np.isfinite(v):
                raise FormatError(f"non-finite value at ({r},{c_idx})")
            values.append(v)
        if m is None:
            m = len(values)
        elif len(values) != m:
            raise FormatError(f"dimension mismatch at row {r}")
        rows.append(values)
    data = np.asarray(rows, dtype=np.float64)
    return FeatureSet(data, external_ids=tuple(ids) if has_ids else None)


def save_features_csv(fs: FeatureSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(fs.n):
            prefix = f"{fs.external_ids[i]}," if fs.external_ids else ""
            fh.write(prefix + ",".join(repr(float(v)) for v in fs.data[i]) + "\n")


def load_features_rzf(path) -> FeatureSet:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != RZF_MAGIC:
        raise FormatError("not an RZF file")
    n, m = struct.unpack("<II", raw[4:12])
    if n == 0 or m == 0:
        raise FormatError("empty matrix")
    expected = 12 + 4 * n * m
    if len(raw) != expected:
        raise FormatError(f"truncated RZF payload: {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(n, m)
    if not np.all(np.isfinite(data)):
        r, c = np.argwhere(~np.isfinite(data))[0]
        raise FormatError(f"non-finite value at ({r},{c})")
    return FeatureSet(data.astype(np.float64))


def save_features_rzf(fs: FeatureSet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(RZF_MAGIC)
        fh.write(struct.pack("<II", fs.n, fs.m))
        fh.write(np.ascontiguousarray(fs.data, dtype="<f4").tobytes())


def load_features(path, fmt: str | None = None) -> FeatureSet:
    """Load a feature matrix, dispatching on ``fmt`` or the file suffix."""
    if fmt is None:
        fmt = "rzf" if str(path).endswith(".rzf") else "csv"
    if fmt == "rzf":
        return load_features_rzf(path)
    if fmt == "csv":
        return load_features_csv(path)
    raise FormatError(f"unknown matrix format '{fmt}'")


def save_features(fs: FeatureSet, path, fmt: str | None = None) -> None:
    if fmt is None:
        fmt = "rzf" if str(path).endswith(".rzf") else "csv"
    if fmt == "rzf":
        save_features_rzf(fs, path)
    elif fmt == "csv":
        save_features_csv(fs, path)
    else:
        raise FormatError(f"unknown matrix format '{fmt}'")


def save_clustering(clustering: Clustering, path) -> None:
    """One JSON record per cluster with deterministic key and cluster order.

    Refuses to write anything that is not a partition (the Clustering type
    enforces this on construction; re-checked here as the last gate).
    """
    seen = sorted(v for c in clustering.clusters for v in c.members)
    if seen != list(range(clustering.source_n)):
        raise DataError("refusing to save: clusters do not partition 0..n-1")
    payload = {
        "source_n": clustering.source_n,
        "clusters": [
            {
                "cluster_id": k,
                "members": list(c.members),
                "centroid": [float(v) for v in c.centroid],
            }
            for k, c in enumerate(clustering.clusters)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_clustering(path) -> Clustering:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    clusters = tuple(
        Cluster(tuple(rec["members"]), np.asarray(rec["centroid"], dtype=np.float64))
        for rec in payload["clusters"]
    )
    return Clustering(clusters, source_n=int(payload["source_n"]))


def _flat_index_path(path) -> Path:
    return Path(path).with_suffix(".txt")


def save_selection(result: SelectionResult, path) -> None:
    """JSON with per-cluster ranked picks plus a flat sorted index file.

    The flat file sits alongside the JSON with a ``.txt`` suffix and holds
    one global index per line in ascending order.
    """
    payload = {
        "per_cluster": [
            {
                "cluster_id": int(rec.cluster_id),
                "selected": [int(v) for v in rec.selected],
                "n_samp": int(rec.n_samp),
            }
            for rec in result.per_cluster
        ],
        "global": [int(v) for v in result.global_indices],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    with open(_flat_index_path(path), "w", encoding="utf-8") as fh:
        for v in result.global_indices:
            fh.write(f"{int(v)}\n")


def load_selection(path) -> SelectionResult:
    from .selection import ClusterSelection

    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    per = tuple(
        ClusterSelection(
            cluster_id=int(rec["cluster_id"]),
            selected=tuple(int(v) for v in rec["selected"]),
            n_samp=int(rec["n_samp"]),
        )
        for rec in payload["per_cluster"]
    )
    return SelectionResult(per, tuple(int(v) for v in payload["global"]))


def save_labels_csv(labels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,label\n")
        for i, lab in enumerate(labels):
            fh.write(f"{i},{int(lab)}\n")


def load_labels_csv(path) -> np.ndarray:
    """Read an (index,label) CSV, tolerating a header line."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            idx_s, lab_s = (c.strip() for c in line.split(",", 1))
            if _parse_float(idx_s) is None:
                continue  # header
            pairs.append((int(float(idx_s)), int(float(lab_s))))
    if not pairs:
        raise FormatError("empty labels file")
    pairs.sort()
    indices = [p[0] for p in pairs]
    if indices != list(range(len(pairs))):
        raise FormatError("labels file does not cover indices 0..n-1")
    return np.asarray([p[1] for p in pairs], dtype=np.int64)
