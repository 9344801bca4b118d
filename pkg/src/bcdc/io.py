"""File formats.

* edge list: one ``u v`` pair per line, whitespace-separated, 1-indexed,
  undirected; duplicates and self-loops are rejected.
* mask file: same pair format, listing the observed dyads.
* covariates: CSV with a header; a ``node`` id column plus one column per
  feature.  A sidecar file types each column: lines of
  ``name,continuous`` or ``name,categorical[,arity]``; categorical values
  are integers ``1..arity``.
* labels: CSV ``node,label``, both 1-indexed.
* trace: CSV ``iter,L,log_joint,z_1..z_n`` with 1-indexed labels.
* summary: JSON with sorted keys (byte-stable for a fixed seed).
* metadata: flat ``key: value`` text (holds the non-deterministic bits such
  as wall-clock runtime).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import CovariateSet, DataError, Network
from .sampler import ChainTrace


def _parse_pairs(path) -> list[tuple[int, int]]:
    pairs = []
    seen = set()
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"{path}:{ln}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise DataError(f"{path}:{ln}: node ids must be integers") from exc
        if u < 1 or v < 1:
            raise DataError(f"{path}:{ln}: node ids are 1-indexed")
        if u == v:
            raise DataError(f"{path}:{ln}: self-loop {u}-{v} not allowed")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DataError(f"{path}:{ln}: duplicate edge {u}-{v}")
        seen.add(key)
        pairs.append(key)
    return pairs


def read_edge_list(path, n: int | None = None) -> Network:
    pairs = _parse_pairs(path)
    if not pairs and n is None:
        raise DataError(f"{path}: empty edge list and no node count given")
    max_id = max((v for _, v in pairs), default=0)
    if n is None:
        n = max_id
    elif max_id > n:
        raise DataError(f"{path}: node id {max_id} exceeds declared n={n}")
    adj = np.zeros((n, n), dtype=bool)
    for u, v in pairs:
        adj[u - 1, v - 1] = adj[v - 1, u - 1] = True
    return Network(adj)


def read_mask(path, n: int) -> np.ndarray:
    pairs = _parse_pairs(path)
    max_id = max((v for _, v in pairs), default=0)
    if max_id > n:
        raise DataError(f"{path}: node id {max_id} exceeds n={n}")
    mask = np.zeros((n, n), dtype=bool)
    for u, v in pairs:
        mask[u - 1, v - 1] = mask[v - 1, u - 1] = True
    return mask


def write_edge_list(path, net: Network):
    iu, ju = np.nonzero(np.triu(net.adj, k=1))
    lines = [f"{i + 1} {j + 1}" for i, j in zip(iu, ju)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


# ---------------------------------------------------------------------------
# covariates
# ---------------------------------------------------------------------------

def read_column_types(path) -> dict:
    """Sidecar mapping column -> ('continuous', None) or ('categorical', arity)."""
    types = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 2 or parts[1] not in ("continuous", "categorical"):
            raise DataError(f"{path}:{ln}: expected 'name,continuous|categorical[,arity]'")
        arity = None
        if len(parts) >= 3 and parts[2]:
            if parts[1] != "categorical":
                raise DataError(f"{path}:{ln}: arity only applies to categorical columns")
            arity = int(parts[2])
        types[parts[0]] = (parts[1], arity)
    if not types:
        raise DataError(f"{path}: no column types declared")
    return types


def write_column_types(path, types: dict):
    lines = []
    for name, (kind, arity) in types.items():
        lines.append(f"{name},{kind}" + (f",{arity}" if arity else ""))
    Path(path).write_text("\n".join(lines) + "\n")


def read_covariates(path, types: dict) -> CovariateSet:
    """Covariate CSV keyed by its sidecar typing; rows sorted by node id.

    Node ids must be exactly 1..n.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "node" not in reader.fieldnames:
            raise DataError(f"{path}: covariate CSV needs a 'node' column")
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no covariate rows")
    missing = [c for c in types if c not in rows[0]]
    if missing:
        raise DataError(f"{path}: typed columns absent from CSV: {missing}")
    ids = np.array([int(r["node"]) for r in rows])
    n = len(rows)
    if sorted(ids.tolist()) != list(range(1, n + 1)):
        raise DataError(f"{path}: node ids must be exactly 1..{n}")
    order = np.argsort(ids)
    cont_cols, cat_cols = [], []
    for name, (kind, arity) in types.items():
        raw = [rows[int(k)][name] for k in order]
        if kind == "continuous":
            try:
                cont_cols.append(np.array([float(v) for v in raw]))
            except ValueError as exc:
                raise DataError(f"{path}: non-numeric value in column {name!r}") from exc
        else:
            try:
                vals = np.array([int(v) for v in raw])
            except ValueError as exc:
                raise DataError(
                    f"{path}: categorical column {name!r} must hold integer codes"
                ) from exc
            a = arity if arity is not None else int(vals.max())
            if vals.min() < 1 or vals.max() > a:
                raise DataError(f"{path}: codes in column {name!r} outside 1..{a}")
            cat_cols.append((vals - 1, a))
    cont = np.column_stack(cont_cols) if cont_cols else np.zeros((n, 0))
    if cat_cols:
        cat = np.column_stack([v for v, _ in cat_cols])
        arities = tuple(a for _, a in cat_cols)
    else:
        cat, arities = np.zeros((n, 0), dtype=np.int64), ()
    return CovariateSet(cont, cat, arities)


def write_covariates(path, x: CovariateSet, cont_names=None, cat_names=None):
    """Write covariates plus their sidecar next to ``path`` (suffix .types)."""
    cont_names = cont_names or [f"x{j + 1}" for j in range(x.p)]
    cat_names = cat_names or [f"c{j + 1}" for j in range(x.R)]
    header = ["node", *cont_names, *cat_names]
    lines = [",".join(header)]
    for i in range(x.n):
        row = [str(i + 1)]
        row += [f"{v:.17g}" for v in x.cont[i]]
        row += [str(int(v) + 1) for v in x.cat[i]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    types = {name: ("continuous", None) for name in cont_names}
    types.update(
        {name: ("categorical", int(a)) for name, a in zip(cat_names, x.arities)}
    )
    write_column_types(str(path) + ".types", types)


# ---------------------------------------------------------------------------
# labels, traces, summaries
# ---------------------------------------------------------------------------

def read_labels(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"node", "label"} <= set(reader.fieldnames):
            raise DataError(f"{path}: labels CSV needs 'node' and 'label' columns")
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no label rows")
    try:
        ids = np.array([int(r["node"]) for r in rows])
        labels = np.array([int(r["label"]) for r in rows])
    except ValueError as exc:
        raise DataError(f"{path}: node and label must be integers") from exc
    n = len(rows)
    if sorted(ids.tolist()) != list(range(1, n + 1)):
        raise DataError(f"{path}: node ids must be exactly 1..{n}")
    if labels.min() < 1:
        raise DataError(f"{path}: labels are 1-indexed")
    return labels[np.argsort(ids)] - 1


def write_labels(path, labels):
    z = np.asarray(labels)
    lines = ["node,label"] + [f"{i + 1},{int(v) + 1}" for i, v in enumerate(z)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace(path, trace: ChainTrace):
    n = trace.labels.shape[1]
    header = "iter,L,log_joint," + ",".join(f"z_{j + 1}" for j in range(n))
    lines = [header]
    for t, L, lj, z in zip(
        trace.iteration, trace.num_clusters, trace.log_joint, trace.labels
    ):
        lines.append(
            f"{int(t)},{int(L)},{lj:.17g}," + ",".join(str(int(v) + 1) for v in z)
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> ChainTrace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = len(header) - 3
    return ChainTrace(
        iteration=np.array([int(r[0]) for r in body]),
        num_clusters=np.array([int(r[1]) for r in body]),
        log_joint=np.array([float(r[2]) for r in body]),
        labels=np.array([[int(v) - 1 for v in r[3 : 3 + n]] for r in body]),
        config={},
    )


def write_summary(path, summary: dict):
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def write_metadata(path, meta: dict):
    lines = [f"{k}: {meta[k]}" for k in meta]
    Path(path).write_text("\n".join(lines) + "\n")


def read_metadata(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        key, _, val = line.partition(":")
        out[key.strip()] = val.strip()
    return out
