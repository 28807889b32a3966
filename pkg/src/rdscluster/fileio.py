"""Readers and writers for the on-disk artifact formats.

Formats (all numeric output full-precision decimal, '.' separator):

- nodes.csv: header ``id,degree,x1,x2`` plus optional ``cluster``; one row
  per population node.
- edges.csv: header ``src,dst``; undirected, each edge once with src < dst.
- recruit.csv: header ``id,recruiter_id,wave,degree,x1,x2``; rows in
  recruitment order; recruiter_id is the recruiter's node id, -1 for seeds.
- probs.json: ``{"node": [[degree, S]...], "pair": [[k, h, SS]...],
  "edge": [[k, h, R]...], "config": {...}}``.
- result.json: ``{"labels": [...], "tau": [[...]], "params": {...},
  "objective_trace": [...], "converged": bool, "config": {...}}``.
- sweep.csv: columns ``alpha,modularity,nmi,nmi_feature_<name>...``.
- study_summary.csv: columns ``model,quantity,mean,sd,mse,reps``.

Ids, cluster labels, and x2 categories are 1-based in files and 0-based in
memory; the translation happens here and only here.  Values that are
unavailable (sd with one replication, mse without a truth) are written as
empty cells.  Malformed input raises ParseError carrying file, line, and
column.

Reading a recruit.csv reconstructs the observed network from the recruiter
column.  The initial-seed count is inferred as the leading run of seed rows,
so a reseed event is counted only when it occurs after some recruitment;
whether the trace stopped short of its target is not recorded in the file.
"""

import csv
import json
from dataclasses import asdict

import numpy as np

from .mixfit import FitConfig, FitResult
from .netcore import (
    SEED,
    InclusionProbs,
    ModelParams,
    ParseError,
    Population,
    RdsSample,
    Responsibilities,
)

__all__ = [
    "read_population", "write_population",
    "read_sample", "write_sample",
    "read_probs", "write_probs",
    "read_result", "write_result",
    "read_sweep", "write_sweep",
    "read_study_summary", "write_study_summary",
]


def _fmt(v):
    return repr(float(v))


def _parse_int(raw, path, line, col, what):
    try:
        return int(raw)
    except ValueError:
        raise ParseError(path, line, col, f"{what} must be an integer, got {raw!r}")


def _parse_float(raw, path, line, col, what):
    try:
        return float(raw)
    except ValueError:
        raise ParseError(path, line, col, f"{what} must be a number, got {raw!r}")


def _read_rows(path, want_header, optional=()):
    """CSV rows with header validation; yields (line_number, row)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, 1, "empty file")
        base = list(want_header)
        ok = header == base or any(
            header == base + list(extra) for extra in optional
        )
        if not ok:
            raise ParseError(
                path, 1, 1,
                f"expected header {','.join(base)}"
                + (f" (optionally +{','.join(','.join(e) for e in optional)})"
                   if optional else "")
                + f", got {','.join(header)}",
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    path, lineno, len(row) + 1,
                    f"expected {len(header)} fields, got {len(row)}",
                )
            rows.append((lineno, row))
    return header, rows


# ----------------------------------------------------------------------
# population: nodes.csv + edges.csv
# ----------------------------------------------------------------------

def write_population(pop, nodes_path, edges_path):
    with open(nodes_path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["id", "degree", "x1", "x2"]
        labeled = pop.true_labels is not None
        if labeled:
            header.append("cluster")
        w.writerow(header)
        deg = pop.degrees
        for i in range(pop.n):
            row = [i + 1, int(deg[i]), _fmt(pop.x1[i]), int(pop.x2[i]) + 1]
            if labeled:
                row.append(int(pop.true_labels[i]) + 1)
            w.writerow(row)
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst"])
        src, dst = np.nonzero(np.triu(pop.Y, k=1))
        for a, b in zip(src, dst):
            w.writerow([int(a) + 1, int(b) + 1])


def read_population(nodes_path, edges_path):
    header, rows = _read_rows(
        nodes_path, ["id", "degree", "x1", "x2"], optional=(["cluster"],)
    )
    labeled = header[-1] == "cluster"
    n = len(rows)
    if n == 0:
        raise ParseError(nodes_path, 2, 1, "no node rows")
    x1 = np.empty(n)
    x2 = np.empty(n, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64) if labeled else None
    seen = set()
    for lineno, row in rows:
        nid = _parse_int(row[0], nodes_path, lineno, 1, "id")
        if not 1 <= nid <= n:
            raise ParseError(
                nodes_path, lineno, 1, f"id {nid} outside 1..{n}"
            )
        if nid in seen:
            raise ParseError(nodes_path, lineno, 1, f"duplicate id {nid}")
        seen.add(nid)
        i = nid - 1
        _parse_int(row[1], nodes_path, lineno, 2, "degree")
        x1[i] = _parse_float(row[2], nodes_path, lineno, 3, "x1")
        cat = _parse_int(row[3], nodes_path, lineno, 4, "x2")
        if cat < 1:
            raise ParseError(nodes_path, lineno, 4, "x2 categories are 1-based")
        x2[i] = cat - 1
        if labeled:
            lab = _parse_int(row[4], nodes_path, lineno, 5, "cluster")
            if lab < 1:
                raise ParseError(nodes_path, lineno, 5, "clusters are 1-based")
            labels[i] = lab - 1
    Y = np.zeros((n, n), dtype=np.int8)
    _, erows = _read_rows(edges_path, ["src", "dst"])
    for lineno, row in erows:
        a = _parse_int(row[0], edges_path, lineno, 1, "src")
        b = _parse_int(row[1], edges_path, lineno, 2, "dst")
        if not (1 <= a <= n and 1 <= b <= n):
            raise ParseError(
                edges_path, lineno, 1, f"edge ({a},{b}) outside 1..{n}"
            )
        if a >= b:
            raise ParseError(
                edges_path, lineno, 1,
                f"edges must satisfy src < dst, got ({a},{b})",
            )
        Y[a - 1, b - 1] = 1
        Y[b - 1, a - 1] = 1
    return Population(Y=Y, x1=x1, x2=x2, true_labels=labels)


# ----------------------------------------------------------------------
# sample: recruit.csv
# ----------------------------------------------------------------------

def write_sample(sample, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "recruiter_id", "wave", "degree", "x1", "x2"])
        for i in range(sample.n):
            r = sample.recruiter[i]
            rid = -1 if r == SEED else int(sample.node_ids[r]) + 1
            w.writerow([
                int(sample.node_ids[i]) + 1,
                rid,
                int(sample.wave[i]),
                int(sample.degree[i]),
                _fmt(sample.x1[i]),
                int(sample.x2[i]) + 1,
            ])


def read_sample(path):
    _, rows = _read_rows(
        path, ["id", "recruiter_id", "wave", "degree", "x1", "x2"]
    )
    n = len(rows)
    if n == 0:
        raise ParseError(path, 2, 1, "no sample rows")
    node_ids = np.empty(n, dtype=np.int64)
    rec_ids = np.empty(n, dtype=np.int64)
    wave = np.empty(n, dtype=np.int64)
    degree = np.empty(n, dtype=np.int64)
    x1 = np.empty(n)
    x2 = np.empty(n, dtype=np.int64)
    for t, (lineno, row) in enumerate(rows):
        nid = _parse_int(row[0], path, lineno, 1, "id")
        if nid < 1:
            raise ParseError(path, lineno, 1, "ids are 1-based")
        node_ids[t] = nid - 1
        rec_ids[t] = _parse_int(row[1], path, lineno, 2, "recruiter_id")
        wave[t] = _parse_int(row[2], path, lineno, 3, "wave")
        degree[t] = _parse_int(row[3], path, lineno, 4, "degree")
        x1[t] = _parse_float(row[4], path, lineno, 5, "x1")
        cat = _parse_int(row[5], path, lineno, 6, "x2")
        if cat < 1:
            raise ParseError(path, lineno, 6, "x2 categories are 1-based")
        x2[t] = cat - 1
    pos = {int(v): t for t, v in enumerate(node_ids)}
    if len(pos) != n:
        raise ParseError(path, 2, 1, "duplicate node ids in sample")
    recruiter = np.empty(n, dtype=np.int64)
    adj = np.zeros((n, n), dtype=np.int8)
    for t, (lineno, _) in enumerate(rows):
        if rec_ids[t] == -1:
            recruiter[t] = SEED
            continue
        r = pos.get(int(rec_ids[t]) - 1)
        if r is None:
            raise ParseError(
                path, lineno, 2,
                f"recruiter_id {rec_ids[t]} is not a sampled id",
            )
        recruiter[t] = r
        adj[t, r] = 1
        adj[r, t] = 1
    lead = 0
    while lead < n and recruiter[lead] == SEED:
        lead += 1
    reseeds = int(np.sum(recruiter == SEED)) - lead
    return RdsSample(
        node_ids=node_ids, recruiter=recruiter, wave=wave, degree=degree,
        x1=x1, x2=x2, adjY=adj, reseed_count=max(reseeds, 0), partial=False,
    )


# ----------------------------------------------------------------------
# probabilities: probs.json
# ----------------------------------------------------------------------

def write_probs(probs, path, config=None):
    doc = {
        "node": [[int(d), float(v)] for d, v in sorted(probs.node.items())],
        "pair": [
            [int(a), int(b), float(v)]
            for (a, b), v in sorted(probs.pair.items())
        ],
        "edge": [
            [int(a), int(b), float(v)]
            for (a, b), v in sorted(probs.edge.items())
        ],
        "config": config or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _json_doc(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(path, exc.lineno, exc.colno, exc.msg)


def read_probs(path):
    doc = _json_doc(path)
    for key in ("node", "pair", "edge"):
        if key not in doc:
            raise ParseError(path, 1, 1, f"missing key {key!r}")
    try:
        node = {int(d): float(v) for d, v in doc["node"]}
        pair = {(int(a), int(b)): float(v) for a, b, v in doc["pair"]}
        edge = {(int(a), int(b)): float(v) for a, b, v in doc["edge"]}
    except (TypeError, ValueError) as exc:
        raise ParseError(path, 1, 1, f"malformed probability entry: {exc}")
    return InclusionProbs(node=node, pair=pair, edge=edge), doc.get("config", {})


# ----------------------------------------------------------------------
# fit result: result.json
# ----------------------------------------------------------------------

def write_result(result, path, config=None):
    if config is not None and not isinstance(config, dict):
        config = asdict(config)
    doc = {
        "labels": [int(v) + 1 for v in result.labels],
        "tau": [[float(v) for v in row] for row in result.tau.tau],
        "params": {
            "lambda": [float(v) for v in result.params.lam],
            "mu": [float(v) for v in result.params.mu],
            "sigma": [float(v) for v in result.params.sigma],
            "theta": [[float(v) for v in row] for row in result.params.theta],
            "phi": [[float(v) for v in row] for row in result.params.phi],
        },
        "objective_trace": [float(v) for v in result.objective_trace],
        "converged": bool(result.converged),
        "config": config or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_result(path):
    """Rebuild a FitResult; the restart index is not stored, so it reads
    back as -1."""
    doc = _json_doc(path)
    for key in ("labels", "tau", "params", "objective_trace", "converged"):
        if key not in doc:
            raise ParseError(path, 1, 1, f"missing key {key!r}")
    p = doc["params"]
    try:
        params = ModelParams(
            lam=np.asarray(p["lambda"]),
            mu=np.asarray(p["mu"]),
            sigma=np.asarray(p["sigma"]),
            theta=np.asarray(p["theta"]),
            phi=np.asarray(p["phi"]),
        )
        tau = Responsibilities(np.asarray(doc["tau"], dtype=np.float64))
        labels = np.asarray(doc["labels"], dtype=np.int64) - 1
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(path, 1, 1, f"malformed result: {exc}")
    cfg = None
    if doc.get("config"):
        try:
            cfg = FitConfig(**doc["config"])
        except (TypeError, ValueError):
            cfg = None
    result = FitResult(
        params=params,
        tau=tau,
        labels=labels,
        objective_trace=np.asarray(doc["objective_trace"], dtype=np.float64),
        converged=bool(doc["converged"]),
        restart_index=-1,
    )
    return result, cfg


# ----------------------------------------------------------------------
# sweep: sweep.csv
# ----------------------------------------------------------------------

def write_sweep(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["alpha", "modularity", "nmi"]
            + [f"nmi_feature_{name}" for name in report.feature_names]
        )
        for t in range(len(report.alphas)):
            row = [_fmt(report.alphas[t])]
            for v in (report.modularity[t], report.nmi[t],
                      *report.per_feature_nmi[t]):
                row.append("" if not np.isfinite(v) else _fmt(v))
            w.writerow(row)


def read_sweep(path):
    from .evalmetrics import SweepReport, _knee_suggestion

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, 1, "empty file")
        if (len(header) < 3 or header[:3] != ["alpha", "modularity", "nmi"]
                or any(not h.startswith("nmi_feature_") for h in header[3:])):
            raise ParseError(path, 1, 1, f"unexpected header {','.join(header)}")
        names = tuple(h[len("nmi_feature_"):] for h in header[3:])
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=2) if row]
    m = len(rows)
    alphas = np.empty(m)
    mod = np.full(m, np.nan)
    nm = np.full(m, np.nan)
    per = np.full((m, len(names)), np.nan)
    for t, (lineno, row) in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(
                path, lineno, len(row) + 1,
                f"expected {len(header)} fields, got {len(row)}",
            )
        alphas[t] = _parse_float(row[0], path, lineno, 1, "alpha")
        cells = []
        for c, raw in enumerate(row[1:], start=2):
            cells.append(
                np.nan if raw == ""
                else _parse_float(raw, path, lineno, c, header[c - 1])
            )
        mod[t], nm[t] = cells[0], cells[1]
        per[t] = cells[2:]
    suggested, note = _knee_suggestion(alphas, mod, nm)
    return SweepReport(
        alphas=alphas, modularity=mod, nmi=nm, per_feature_nmi=per,
        feature_names=names, suggested_alpha=suggested, suggestion=note,
    )


# ----------------------------------------------------------------------
# study summary: study_summary.csv
# ----------------------------------------------------------------------

def write_study_summary(rows, path):
    """`rows`: iterables of (model, quantity, mean, sd, mse, reps); sd/mse
    may be None for unavailable cells."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "quantity", "mean", "sd", "mse", "reps"])
        for model, quantity, mean, sd, mse, reps in rows:
            w.writerow([
                model, quantity, _fmt(mean),
                "" if sd is None else _fmt(sd),
                "" if mse is None else _fmt(mse),
                int(reps),
            ])


def read_study_summary(path):
    _, rows = _read_rows(
        path, ["model", "quantity", "mean", "sd", "mse", "reps"]
    )
    out = []
    for lineno, row in rows:
        mean = _parse_float(row[2], path, lineno, 3, "mean")
        sd = None if row[3] == "" else _parse_float(row[3], path, lineno, 4, "sd")
        mse = None if row[4] == "" else _parse_float(row[4], path, lineno, 5, "mse")
        reps = _parse_int(row[5], path, lineno, 6, "reps")
        out.append((row[0], row[1], mean, sd, mse, reps))
    return out
