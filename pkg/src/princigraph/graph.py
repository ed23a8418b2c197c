"""Elastic graphs, primitive star derivation and Cartesian products.

Vertices are dense integer indices ``0..n-1``. Graph values are immutable;
every structural change builds a new :class:`ElasticGraph`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_VERTEX_BUDGET = 100_000


class GraphError(ValueError):
    """Raised when a graph violates its structural invariants."""


class VertexBudgetError(GraphError):
    """Raised when a product expansion would exceed the vertex budget."""


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    lam: float = 1.0

    def __post_init__(self):
        if self.u == self.v:
            raise GraphError(f"self-loop at vertex {self.u}")
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise GraphError(f"edge modulus must be finite and >= 0, got {self.lam}")
        u, v = sorted((int(self.u), int(self.v)))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def pair(self) -> tuple[int, int]:
        return (self.u, self.v)


@dataclass(frozen=True)
class Star:
    center: int
    leaves: tuple[int, ...]
    mu: float = 1.0

    def __post_init__(self):
        leaves = tuple(int(x) for x in self.leaves)
        if len(leaves) < 2:
            raise GraphError(f"a star needs k >= 2 leaves, got {len(leaves)}")
        if len(set(leaves)) != len(leaves) or self.center in leaves:
            raise GraphError(f"star leaves must be distinct and differ from the center: {self}")
        if not self.mu >= 0 or not math.isfinite(self.mu):
            raise GraphError(f"star modulus must be finite and >= 0, got {self.mu}")
        object.__setattr__(self, "center", int(self.center))
        object.__setattr__(self, "leaves", leaves)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def k(self) -> int:
        return len(self.leaves)


@dataclass(frozen=True)
class ElasticGraph:
    """Graph with elastic moduli on its edges and selected k-stars.

    Parameters
    ----------
    n_vertices : int
        Number of vertices; vertices are ``0..n_vertices-1``.
    edges : sequence of Edge
        Undirected edges, each with its stretching modulus ``lam``.
    stars : sequence of Star
        Selected k-stars, each with its bending modulus ``mu``.
    """

    n_vertices: int
    edges: tuple[Edge, ...] = ()
    stars: tuple[Star, ...] = ()

    def __post_init__(self):
        n = int(self.n_vertices)
        if n < 0:
            raise GraphError("vertex count must be nonnegative")
        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "stars", tuple(self.stars))
        pairs = set()
        for e in self.edges:
            if not (0 <= e.u < n and 0 <= e.v < n):
                raise GraphError(f"edge {e.pair} out of range for {n} vertices")
            if e.pair in pairs:
                raise GraphError(f"duplicate edge {e.pair}")
            pairs.add(e.pair)
        for s in self.stars:
            for leaf in s.leaves:
                if not (0 <= s.center < n and 0 <= leaf < n):
                    raise GraphError(f"star {s} out of range for {n} vertices")
                if tuple(sorted((s.center, leaf))) not in pairs:
                    raise GraphError(f"star pair ({s.center}, {leaf}) is not an edge")

    @classmethod
    def from_edges(cls, n_vertices: int, pairs: Iterable[tuple[int, int]], lam: float = 1.0,
                   mu: float | None = None) -> "ElasticGraph":
        """Build a graph from vertex pairs; derive primitive stars when ``mu`` is given."""
        g = cls(n_vertices, tuple(Edge(u, v, lam) for u, v in pairs))
        return g if mu is None else derive_primitive_stars(g, mu)

    @classmethod
    def path(cls, n_vertices: int, lam: float = 1.0, mu: float | None = None) -> "ElasticGraph":
        return cls.from_edges(n_vertices, [(i, i + 1) for i in range(n_vertices - 1)], lam, mu)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for e in self.edges:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.neighbors], dtype=int)

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u = np.array([e.u for e in self.edges], dtype=np.intp)
        v = np.array([e.v for e in self.edges], dtype=np.intp)
        lam = np.array([e.lam for e in self.edges], dtype=float)
        return u, v, lam

    @cached_property
    def star_operator(self) -> tuple[sp.csr_matrix, np.ndarray]:
        """Sparse operator ``S`` with row ``j`` = sum of leaves minus k times center, and moduli."""
        rows, cols, vals = [], [], []
        for j, s in enumerate(self.stars):
            rows.append(j)
            cols.append(s.center)
            vals.append(-float(s.k))
            for leaf in s.leaves:
                rows.append(j)
                cols.append(leaf)
                vals.append(1.0)
        op = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.stars), self.n_vertices))
        mu = np.array([s.mu for s in self.stars], dtype=float)
        return op, mu

    @cached_property
    def elastic_matrix(self) -> sp.csr_matrix:
        """Symmetric matrix ``L`` of the graph energy: ``U(G) = trace(P.T @ L @ P)``.

        The diagonal is always stored explicitly (possibly as zeros) so data
        weights can be added in place; see :attr:`diagonal_slots`.
        """
        n = self.n_vertices
        u, v, lam = self.edge_arrays
        rows = [np.arange(n), u, v, u, v]
        cols = [np.arange(n), u, v, v, u]
        vals = [np.zeros(n), lam, lam, -lam, -lam]
        for s in self.stars:
            members = np.array((s.center,) + s.leaves, dtype=np.intp)
            coef = np.ones(len(members))
            coef[0] = -s.k
            rows.append(np.repeat(members, len(members)))
            cols.append(np.tile(members, len(members)))
            vals.append(s.mu * np.outer(coef, coef).ravel())
        L = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
        L.sum_duplicates()
        L.sort_indices()
        return L

    @cached_property
    def diagonal_slots(self) -> np.ndarray:
        """Positions of the diagonal entries inside ``elastic_matrix.data``."""
        L = self.elastic_matrix
        rows = np.repeat(np.arange(self.n_vertices), np.diff(L.indptr))
        return np.flatnonzero(L.indices == rows)

    @cached_property
    def coupling_components(self) -> np.ndarray:
        """Component label of every vertex, joined by positive-modulus edges and stars."""
        from scipy.sparse.csgraph import connected_components

        n = self.n_vertices
        u, v, lam = self.edge_arrays
        keep = lam > 0
        rows, cols = [u[keep]], [v[keep]]
        for s in self.stars:
            if s.mu > 0:
                rows.append(np.full(s.k, s.center))
                cols.append(np.array(s.leaves))
        r, c = np.concatenate(rows).astype(np.intp), np.concatenate(cols).astype(np.intp)
        adj = sp.coo_matrix((np.ones(len(r)), (r, c)), shape=(n, n))
        return connected_components(adj, directed=False)[1]

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            for w in self.neighbors[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    def is_tree(self) -> bool:
        return len(self.edges) == self.n_vertices - 1 and self.is_connected()

    def is_primitive(self) -> bool:
        """True when the stars are exactly the full neighbor stars of degree >= 2 vertices."""
        expected = {(v, nb) for v, nb in enumerate(self.neighbors) if len(nb) >= 2}
        actual = {(s.center, tuple(sorted(s.leaves))) for s in self.stars}
        return expected == actual and len(actual) == len(self.stars)

    def edge_index(self, u: int, v: int) -> int:
        pair = (min(u, v), max(u, v))
        for i, e in enumerate(self.edges):
            if e.pair == pair:
                return i
        raise KeyError(pair)


def derive_primitive_stars(graph: ElasticGraph, mu: float, scale_by_k: bool = False,
                           keep_existing: bool = False) -> ElasticGraph:
    """Return ``graph`` with one star per vertex of degree ``k >= 2``.

    The star centered at a non-terminal vertex has all of its neighbors as
    leaves. With ``scale_by_k`` the modulus of a k-star is ``mu / k``. With
    ``keep_existing`` a vertex that already centers a star keeps its modulus.
    """
    if not mu >= 0:
        raise GraphError(f"star modulus must be >= 0, got {mu}")
    previous = {s.center: s.mu for s in graph.stars} if keep_existing else {}
    stars = []
    for v, nb in enumerate(graph.neighbors):
        k = len(nb)
        if k < 2:
            continue
        m = previous.get(v, mu / k if scale_by_k else mu)
        stars.append(Star(v, nb, m))
    return ElasticGraph(graph.n_vertices, graph.edges, tuple(stars))


@dataclass(frozen=True)
class ProductGraph:
    """Cartesian product of elastic graphs.

    Product vertices are multi-indices ``(v_1, ..., v_r)``, flattened in
    row-major order (the last factor varies fastest).
    """

    factors: tuple[ElasticGraph, ...]
    vertex_budget: int = field(default=DEFAULT_VERTEX_BUDGET, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise GraphError("a product needs at least one factor")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.n_vertices for f in self.factors)

    @property
    def n_vertices(self) -> int:
        return math.prod(self.shape)

    @property
    def dimension(self) -> int:
        """Number of non-trivial factors (those with at least two vertices)."""
        return sum(1 for n in self.shape if n >= 2)

    def flat_index(self, multi_index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.shape))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))


def cartesian_product(factors: Sequence[ElasticGraph],
                      vertex_budget: int = DEFAULT_VERTEX_BUDGET) -> ProductGraph:
    if len(factors) == 0:
        raise GraphError("cartesian_product needs at least one factor")
    return ProductGraph(tuple(factors), vertex_budget)


def copies_of_factor(product: ProductGraph, i: int) -> list[np.ndarray]:
    """Vertex maps of every copy of factor ``i`` (0-based) inside ``product``.

    Each map is an integer array sending vertex ``v`` of factor ``i`` to its
    flattened product index. There is one copy per choice of the other
    coordinates, in row-major order of those coordinates.
    """
    r = len(product.factors)
    if not 0 <= i < r:
        raise IndexError(f"factor index {i} out of range for {r} factors")
    shape = product.shape
    idx = np.arange(math.prod(shape)).reshape(shape)
    moved = np.moveaxis(idx, i, -1).reshape(-1, shape[i])
    return [row.copy() for row in moved]


def expand(product: ProductGraph) -> ElasticGraph:
    """Materialize the product as a flat graph over row-major vertex indices."""
    n = product.n_vertices
    if n > product.vertex_budget:
        raise VertexBudgetError(f"product of shape {product.shape} has {n} vertices, "
                                f"over the budget of {product.vertex_budget}")
    if len(product.factors) == 1:
        f = product.factors[0]
        return ElasticGraph(f.n_vertices, f.edges, f.stars)
    edges: list[Edge] = []
    stars: list[Star] = []
    for i, factor in enumerate(product.factors):
        for vmap in copies_of_factor(product, i):
            edges.extend(Edge(int(vmap[e.u]), int(vmap[e.v]), e.lam) for e in factor.edges)
            stars.extend(Star(int(vmap[s.center]), tuple(int(vmap[x]) for x in s.leaves), s.mu)
                         for s in factor.stars)
    return ElasticGraph(n, tuple(edges), tuple(stars))


def product_counts(product: ProductGraph) -> tuple[int, int]:
    """Expected (edge, star) counts of the expansion from the copy-counting rule."""
    shape = product.shape
    n_edges = n_stars = 0
    for i, f in enumerate(product.factors):
        copies = math.prod(s for j, s in enumerate(shape) if j != i)
        n_edges += copies * len(f.edges)
        n_stars += copies * len(f.stars)
    return n_edges, n_stars

