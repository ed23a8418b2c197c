"""Elastic and approximation energies of an embedded graph.

An embedding is a plain ``(n_vertices, n_features)`` float array holding
the position of every vertex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graph import ElasticGraph, Star


@dataclass(frozen=True, eq=False)
class DataSet:
    """Weighted points; ``points`` is ``(N, m)`` and ``weights`` is ``(N,)``."""

    points: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError(f"points must be a 2D array, got shape {X.shape}")
        w = np.ones(len(X)) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (len(X),):
            raise ValueError(f"weights shape {w.shape} does not match {len(X)} points")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(w)):
            raise ValueError("points and weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(w > 0):
            raise ValueError("at least one weight must be positive")
        X.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_array(cls, X, weights=None) -> "DataSet":
        return cls(X, weights)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_features(self) -> int:
        return self.points.shape[1]

    @cached_property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def extent(self) -> float:
        """Diagonal of the bounding box; a cheap upper bound of the diameter."""
        X = self.points[self.weights > 0]
        return float(np.linalg.norm(X.max(axis=0) - X.min(axis=0)))

    def normalized(self) -> "DataSet":
        return DataSet(self.points, self.weights / self.total_weight)


@dataclass(frozen=True, eq=False)
class Partition:
    """Owner vertex of every data point; ``clusters[y]`` lists the points owned by ``y``."""

    owner: np.ndarray
    n_vertices: int

    def __post_init__(self):
        owner = np.asarray(self.owner, dtype=np.intp)
        if owner.size and (owner.min() < 0 or owner.max() >= self.n_vertices):
            raise ValueError("owner indices out of range")
        owner.setflags(write=False)
        object.__setattr__(self, "owner", owner)

    @cached_property
    def clusters(self) -> list[np.ndarray]:
        order = np.argsort(self.owner, kind="stable")
        bounds = np.searchsorted(self.owner[order], np.arange(self.n_vertices + 1))
        return [order[bounds[y]:bounds[y + 1]] for y in range(self.n_vertices)]

    def cluster_weights(self, data: DataSet) -> np.ndarray:
        return np.bincount(self.owner, weights=data.weights, minlength=self.n_vertices)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.n_vertices == other.n_vertices and np.array_equal(self.owner, other.owner)

    __hash__ = None


def check_embedding(graph: ElasticGraph, emb, n_features: int | None = None) -> np.ndarray:
    P = np.asarray(emb, dtype=float)
    if P.ndim != 2 or P.shape[0] != graph.n_vertices:
        raise ValueError(f"embedding shape {P.shape} does not match {graph.n_vertices} vertices")
    if n_features is not None and P.shape[1] != n_features:
        raise ValueError(f"embedding has {P.shape[1]} coordinates, data has {n_features}")
    if not np.all(np.isfinite(P)):
        raise ValueError("embedding must be finite")
    return P


def edge_energies(graph: ElasticGraph, emb) -> np.ndarray:
    P = check_embedding(graph, emb)
    u, v, lam = graph.edge_arrays
    d = P[u] - P[v]
    return lam * np.einsum("ij,ij->i", d, d)


def star_energies(graph: ElasticGraph, emb) -> np.ndarray:
    P = check_embedding(graph, emb)
    op, mu = graph.star_operator
    s = op @ P
    return mu * np.einsum("ij,ij->i", s, s)


def graph_energy(graph: ElasticGraph, emb) -> float:
    """Stretching energy of the edges plus bending energy of the stars."""
    return float(edge_energies(graph, emb).sum() + star_energies(graph, emb).sum())


def point_distances(emb, data: DataSet, part: Partition) -> np.ndarray:
    """Squared distance of every point to its owner vertex."""
    P = np.asarray(emb, dtype=float)
    if P.shape[1] != data.n_features:
        raise ValueError(f"embedding has {P.shape[1]} coordinates, data has {data.n_features}")
    if len(part.owner) != data.n_points:
        raise ValueError("partition does not match the dataset")
    d = data.points - P[part.owner]
    return np.einsum("ij,ij->i", d, d)


def approximation_energy(graph: ElasticGraph, emb, data: DataSet, part: Partition,
                         normalize: bool = False) -> float:
    """Weighted sum of squared distances from points to their owner vertices.

    With ``normalize`` the sum is divided by the total weight.
    """
    check_embedding(graph, emb, data.n_features)
    value = float(np.dot(data.weights, point_distances(emb, data, part)))
    return value / data.total_weight if normalize else value


def total_energy(graph: ElasticGraph, emb, data: DataSet, part: Partition,
                 normalize: bool = False) -> float:
    return approximation_energy(graph, emb, data, part, normalize) + graph_energy(graph, emb)


def energy_components(graph: ElasticGraph, emb, data: DataSet, part: Partition,
                      normalize: bool = False) -> tuple[float, float, float]:
    """Return ``(total, graph, approximation)`` energies."""
    ua = approximation_energy(graph, emb, data, part, normalize)
    ug = graph_energy(graph, emb)
    return ua + ug, ug, ua


@dataclass(frozen=True)
class SpringDecomposition:
    direct: float
    spring_form: float
    positive_springs: list[tuple[int, int, float]]
    negative_springs: list[tuple[int, int, float]]


def star_spring_decomposition(star: Star, emb) -> SpringDecomposition:
    """Evaluate a star's energy directly and as a system of springs.

    The k-star energy ``mu * |sum(leaves) - k * center|^2`` equals ``k``
    springs of stiffness ``k * mu`` from the center to each leaf plus
    ``k(k-1)/2`` springs of stiffness ``-mu`` between every pair of leaves.
    Springs are returned as ``(a, b, coefficient)`` vertex triples.
    """
    P = np.asarray(emb, dtype=float)
    k, mu, c = star.k, star.mu, star.center
    s = P[list(star.leaves)].sum(axis=0) - k * P[c]
    direct = mu * float(np.dot(s, s))

    positive = [(c, leaf, k * mu) for leaf in star.leaves]
    negative = [(a, b, -mu) for a, b in itertools.combinations(star.leaves, 2)]
    spring_form = 0.0
    for a, b, coef in positive + negative:
        d = P[a] - P[b]
        spring_form += coef * float(np.dot(d, d))
    return SpringDecomposition(direct, spring_form, positive, negative)
