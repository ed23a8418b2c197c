"""Reading datasets and writing graph, projection, report and SVG artifacts."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .energy import DataSet, Partition, point_distances
from .graph import Edge, ElasticGraph, Star
from .optimizer import weighted_pca


class DataFormatError(ValueError):
    pass


def _parse_float(cell: str) -> float:
    value = float(cell)
    if not math.isfinite(value):
        raise ValueError(cell)
    return value


def load_csv(path, weights_col: str | int | None = None) -> DataSet:
    """Load a numeric CSV file; the first row is a header if any cell is non-numeric.

    ``weights_col`` names (or, without a header, indexes) the column holding
    point weights; all other columns are coordinates. Rows are numbered from
    1 in error messages, counting the header.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: no rows")

    header = None
    try:
        [_parse_float(c) for c in rows[0]]
        first = 1
    except ValueError:
        header = [c.strip() for c in rows[0]]
        first = 2
    body = rows[1:] if header is not None else rows
    if not body:
        raise DataFormatError(f"{path}: no data rows")

    width = len(header) if header is not None else len(body[0])
    values = np.empty((len(body), width))
    for i, row in enumerate(body):
        lineno = i + first
        if len(row) != width:
            raise DataFormatError(f"{path}: row {lineno} has {len(row)} cells, expected {width}")
        try:
            values[i] = [_parse_float(c) for c in row]
        except ValueError:
            raise DataFormatError(f"{path}: non-numeric cell in row {lineno}") from None

    weights = None
    if weights_col is not None:
        if header is not None and str(weights_col) in header:
            j = header.index(str(weights_col))
        else:
            try:
                j = int(weights_col)
            except ValueError:
                raise DataFormatError(f"{path}: no weight column {weights_col!r}") from None
            if not 0 <= j < width:
                raise DataFormatError(f"{path}: weight column index {j} out of range")
        weights = values[:, j]
        values = np.delete(values, j, axis=1)
        if np.any(weights < 0):
            raise DataFormatError(f"{path}: negative weights")
        if not np.any(weights > 0):
            raise DataFormatError(f"{path}: all weights are zero")
    if values.shape[1] == 0:
        raise DataFormatError(f"{path}: no coordinate columns")
    return DataSet(values, weights)


def save_csv(path, X, header=None):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        w.writerows([repr(float(v)) for v in row] for row in np.asarray(X))


# -- graph JSON --------------------------------------------------------------

def graph_to_dict(graph: ElasticGraph, emb=None) -> dict:
    d = {"vertices": graph.n_vertices,
         "edges": [{"u": e.u, "v": e.v, "lambda": e.lam} for e in graph.edges],
         "stars": [{"center": s.center, "leaves": list(s.leaves), "mu": s.mu}
                   for s in graph.stars]}
    if emb is not None:
        d["positions"] = np.asarray(emb, dtype=float).tolist()
    return d


def graph_from_dict(d: dict) -> tuple[ElasticGraph, np.ndarray | None]:
    graph = ElasticGraph(int(d["vertices"]),
                         tuple(Edge(e["u"], e["v"], e["lambda"]) for e in d.get("edges", [])),
                         tuple(Star(s["center"], tuple(s["leaves"]), s["mu"])
                               for s in d.get("stars", [])))
    pos = d.get("positions")
    return graph, (None if pos is None else np.asarray(pos, dtype=float).reshape(graph.n_vertices, -1))


def model_to_dict(model) -> dict:
    """Expanded graph schema plus the factor graphs under ``"factors"``."""
    d = graph_to_dict(model.graph, model.embedding)
    d["factors"] = [graph_to_dict(f) for f in model.factors]
    return d


def model_from_dict(d: dict):
    from .factorized import FactorizedModel

    factors = tuple(graph_from_dict(f)[0] for f in d["factors"])
    return FactorizedModel(factors, np.asarray(d["positions"], dtype=float))


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def write_graph(path, graph: ElasticGraph, emb=None):
    Path(path).write_text(dumps(graph_to_dict(graph, emb)))


def read_graph(path) -> tuple[ElasticGraph, np.ndarray | None]:
    return graph_from_dict(json.loads(Path(path).read_text()))


# -- projections -------------------------------------------------------------

def project_points(emb, data: DataSet, part: Partition) -> list[dict]:
    """One record per point: owner vertex, squared distance and owner position."""
    emb = np.asarray(emb, dtype=float)
    dist = point_distances(emb, data, part)
    return [{"point_id": i, "owner": int(o), "dist2": float(d), "position": emb[o].tolist()}
            for i, (o, d) in enumerate(zip(part.owner, dist))]


def write_projection(path, records):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point_id", "owner", "dist2"])
        for r in records:
            w.writerow([r["point_id"], r["owner"], repr(r["dist2"])])


def read_projection(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return [{"point_id": int(r["point_id"]), "owner": int(r["owner"]),
                 "dist2": float(r["dist2"])} for r in csv.DictReader(fh)]


# -- SVG ---------------------------------------------------------------------

def pca_plane(data: DataSet) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean and the first two principal axes (as rows) of ``data``.

    One-dimensional data gets a zero second axis.
    """
    mean, axes, _ = weighted_pca(data, min(2, data.n_features))
    if axes.shape[0] < 2:
        axes = np.vstack([axes, np.zeros(data.n_features)])
    return mean, axes


def project_to_plane(X, plane) -> np.ndarray:
    mean, axes = plane
    return (np.asarray(X, dtype=float) - mean) @ axes.T


def _fmt(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def emit_svg(emb, data: DataSet, graph: ElasticGraph, plane=None, size: int = 480,
             labels=None) -> str:
    """SVG of data points, nodes and edges projected on the data's two leading PCs.

    The y axis points up. ``labels`` optionally colors data points by class.
    """
    plane = plane or pca_plane(data)
    pts = project_to_plane(data.points, plane)
    nodes = project_to_plane(emb, plane)
    both = np.vstack([pts, nodes])
    lo, hi = both.min(axis=0), both.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    lo, span = lo - 0.05 * span, 1.1 * span
    sx = size / span.max()
    w, h = span * sx

    def xy(p):
        return _fmt((p[0] - lo[0]) * sx), _fmt(h - (p[1] - lo[1]) * sx)

    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w)}" height="{_fmt(h)}" '
           f'viewBox="0 0 {_fmt(w)} {_fmt(h)}">',
           f'<rect width="{_fmt(w)}" height="{_fmt(h)}" fill="white"/>',
           '<g class="points" fill-opacity="0.5">']
    for i, p in enumerate(pts):
        color = palette[int(labels[i]) % len(palette)] if labels is not None else "#7f7f7f"
        x, y = xy(p)
        out.append(f'<circle class="point" cx="{x}" cy="{y}" r="2" fill="{color}"/>')
    out.append("</g>")
    out.append('<g class="edges" stroke="black" stroke-width="1.5">')
    for e in graph.edges:
        (x1, y1), (x2, y2) = xy(nodes[e.u]), xy(nodes[e.v])
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    out.append("</g>")
    out.append('<g class="nodes" fill="#d62728">')
    for i, p in enumerate(nodes):
        x, y = xy(p)
        out.append(f'<circle class="node" id="v{i}" cx="{x}" cy="{y}" r="3.5"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
