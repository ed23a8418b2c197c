"""Splitting algorithm for elastic graphs.

For a fixed partition of the data the total energy is a quadratic form of
the vertex positions, minimized exactly by one sparse linear solve per
coordinate. The optimizer alternates that solve with nearest-vertex
repartitioning, as in Lloyd's k-means.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .energy import DataSet, Partition, check_embedding, energy_components
from .graph import ElasticGraph

DIRECT_SOLVER_LIMIT = 2000


class SolverError(RuntimeError):
    """The linear solve did not reach its residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateDataWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings of :func:`fit`.

    ``ridge=None`` selects ``1e-9 * trace(A) / n``; the ridge is only applied
    to vertices of connected components that carry no data weight.
    """

    epsilon: float = 1e-5
    max_iterations: int = 100
    ridge: float | None = None
    tol: float = 1e-10
    max_inner_iterations: int = 10_000
    normalize: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.ridge is not None and self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


@dataclass
class FitReport:
    iterations: int = 0
    energies: list[tuple[float, float, float]] = field(default_factory=list)
    converged: bool = False
    regularized: bool = False

    @property
    def total(self) -> list[float]:
        return [e[0] for e in self.energies]

    @property
    def final_energy(self) -> tuple[float, float, float]:
        return self.energies[-1]


def partition_data(emb, data: DataSet, chunk_size: int = 4096) -> Partition:
    """Assign every point to its nearest vertex; ties go to the lowest index."""
    P = np.asarray(emb, dtype=float)
    X = data.points
    if P.shape[1] != X.shape[1]:
        raise ValueError(f"embedding has {P.shape[1]} coordinates, data has {X.shape[1]}")
    owner = np.empty(len(X), dtype=np.intp)
    step = max(1, chunk_size * 64 // max(1, P.shape[0]))
    for start in range(0, len(X), step):
        diff = X[start:start + step, None, :] - P[None, :, :]
        owner[start:start + step] = np.einsum("ijk,ijk->ij", diff, diff).argmin(axis=1)
    return Partition(owner, P.shape[0])


def assemble_system(graph: ElasticGraph, data: DataSet, part: Partition,
                    normalize: bool = False) -> tuple[sp.csr_matrix, np.ndarray]:
    """Normal equations ``A @ P = B`` of the total energy for a fixed partition.

    ``A = diag(cluster weights) + L`` where ``L`` is the elastic matrix of the
    graph, and row ``y`` of ``B`` is the weighted sum of the points in cluster
    ``y``. The energy gradient is ``2 (A @ P - B)``.
    """
    n = graph.n_vertices
    weights = data.weights / data.total_weight if normalize else data.weights
    cluster_w = np.bincount(part.owner, weights=weights, minlength=n)
    rhs = np.zeros((n, data.n_features))
    np.add.at(rhs, part.owner, weights[:, None] * data.points)
    L = graph.elastic_matrix
    vals = L.data.copy()
    vals[graph.diagonal_slots] += cluster_w
    A = sp.csr_matrix((vals, L.indices, L.indptr), shape=L.shape)
    return A, rhs


def unloaded_vertices(A: sp.spmatrix, labels: np.ndarray | None = None) -> np.ndarray:
    """Boolean mask of vertices whose coupled component carries no data weight.

    Components are taken over the off-diagonal pattern of ``A`` unless
    ``labels`` are given. Elastic terms have zero row sums, so the row sums
    of ``A`` are the cluster weights.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    if labels is None:
        offdiag = A - sp.diags(A.diagonal())
        offdiag.eliminate_zeros()
        labels = csgraph.connected_components(offdiag, directed=False)[1]
    n_comp = int(labels.max()) + 1 if n else 0
    row_sums = np.asarray(A.sum(axis=1)).ravel()
    scale = np.bincount(labels, weights=np.abs(A).sum(axis=1).A.ravel(), minlength=n_comp)
    load = np.bincount(labels, weights=row_sums, minlength=n_comp)
    return (np.abs(load) <= 1e-12 * (scale + 1e-300))[labels]


def solve_embedding(matrix, rhs, config: SolverConfig | None = None, anchor=None,
                    labels: np.ndarray | None = None, return_info: bool = False):
    """Solve ``matrix @ P = rhs`` column by column.

    Vertices of components with no data weight make the matrix singular; for
    those a ridge term pulling toward ``anchor`` (zeros by default) is added,
    so an empty isolated vertex stays exactly at its anchor. If the solve
    still fails, the ridge is extended to every vertex owning no data and the
    solve is retried once. ``labels`` are optional precomputed coupling
    components of the matrix.

    Returns the embedding, or ``(embedding, regularized)`` with ``return_info``.
    """
    config = config or SolverConfig()
    A = sp.csr_matrix(matrix, dtype=float)
    B = np.asarray(rhs, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n = A.shape[0]
    if n < 1 or A.shape != (n, n) or B.shape[0] != n:
        raise ValueError(f"incompatible system shapes {A.shape} and {B.shape}")

    mask = unloaded_vertices(A, labels)
    try:
        P = _regularized_solve(A, B, mask, config, anchor)
    except SolverError:
        # empty vertices held only by vanishing moduli are singular in floating
        # point; retry with the ridge on every vertex that owns no data
        row_sums = np.asarray(A.sum(axis=1)).ravel()
        empty = mask | (np.abs(row_sums) <= 1e-12 * (np.abs(A).sum(axis=1).A.ravel() + 1e-300))
        if np.array_equal(empty, mask):
            raise
        mask = empty
        P = _regularized_solve(A, B, mask, config, anchor)
    regularized = bool(mask.any())
    return (P, regularized) if return_info else P


def _regularized_solve(A, B, mask, config, anchor):
    n = A.shape[0]
    if mask.any():
        ridge = config.ridge
        if ridge is None:
            ridge = 1e-9 * A.diagonal().sum() / n
        if ridge <= 0:
            ridge = 1e-9
        anchor = np.zeros_like(B) if anchor is None else np.asarray(anchor, dtype=float)
        r = np.where(mask, ridge, 0.0)
        A = (A + sp.diags(r)).tocsr()
        B = B + r[:, None] * anchor

    diag = A.diagonal()
    if A.count_nonzero() == np.count_nonzero(diag):
        with np.errstate(divide="ignore", invalid="ignore"):
            P = B / diag[:, None]
        if mask.any():
            # isolated unloaded vertices sit exactly at their anchor
            P[mask] = anchor[mask]
    elif n <= DIRECT_SOLVER_LIMIT:
        try:
            lu = spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"sparse factorization failed: {exc}") from exc
        P = lu.solve(B)
    else:
        P = _solve_cg(A, B, config)

    residual = np.linalg.norm(A @ P - B)
    scale = np.linalg.norm(B) + np.linalg.norm(diag) * np.linalg.norm(P) + 1e-300
    if not np.all(np.isfinite(P)) or not residual <= max(1e-8, 1e3 * config.tol) * scale:
        raise SolverError(f"linear solve residual {residual:.3e} above tolerance", residual)
    return P


def _solve_cg(A, B, config):
    inv_diag = 1.0 / A.diagonal()
    M = spla.LinearOperator(A.shape, matvec=lambda x: inv_diag * x)
    P = np.empty_like(B)
    for j in range(B.shape[1]):
        x0 = B[:, j] * inv_diag
        x, info = spla.cg(A, B[:, j], x0=x0, rtol=config.tol, atol=0.0,
                          maxiter=config.max_inner_iterations, M=M)
        if info != 0:
            residual = float(np.linalg.norm(A @ x - B[:, j]))
            raise SolverError(f"conjugate gradient did not converge (column {j})", residual)
        P[:, j] = x
    return P


def fit(graph: ElasticGraph, data: DataSet, emb0, config: SolverConfig | None = None
        ) -> tuple[np.ndarray, Partition, FitReport]:
    """Minimize the total energy of ``graph`` over vertex positions.

    Alternates nearest-vertex partitioning with the exact quadratic solve
    until the partition repeats, the relative energy decrease drops below
    ``epsilon``, or ``max_iterations`` solves were made. ``report.energies``
    starts with the energy of ``emb0`` and has one entry per solve.
    """
    config = config or SolverConfig()
    emb = check_embedding(graph, emb0, data.n_features).copy()
    part = partition_data(emb, data)
    report = FitReport()
    report.energies.append(energy_components(graph, emb, data, part, config.normalize))

    for it in range(1, config.max_iterations + 1):
        A, B = assemble_system(graph, data, part, config.normalize)
        emb, reg = solve_embedding(A, B, config, anchor=emb, labels=graph.coupling_components,
                                   return_info=True)
        report.regularized |= reg
        new_part = partition_data(emb, data)
        energies = energy_components(graph, emb, data, new_part, config.normalize)
        previous = report.energies[-1][0]
        report.energies.append(energies)
        report.iterations = it
        same = new_part == part
        part = new_part
        if same or previous - energies[0] < config.epsilon * abs(previous):
            report.converged = True
            break
    return emb, part, report


def weighted_pca(data: DataSet, n_components: int = 2):
    """Weighted mean, leading principal axes (rows) and their variances."""
    w = data.weights / data.total_weight
    mean = w @ data.points
    Z = data.points - mean
    cov = (Z * w[:, None]).T @ Z
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:n_components]
    axes = vecs[:, order].T
    # fix signs: largest-magnitude coordinate positive
    for a in axes:
        if a[np.argmax(np.abs(a))] < 0:
            a *= -1
    return mean, axes, np.clip(vals[order], 0.0, None)


def pca_initialize(data: DataSet, n_vertices: int = 2) -> np.ndarray:
    """Place vertices evenly on the first principal axis between mean -/+ one std.

    Zero-variance data falls back to a unit segment along axis 0 starting at
    the mean and emits a :class:`DegenerateDataWarning`.
    """
    if n_vertices < 2:
        raise ValueError("pca_initialize needs at least two vertices")
    mean, axes, var = weighted_pca(data, 1)
    sigma = float(np.sqrt(var[0]))
    ts = np.linspace(-1.0, 1.0, n_vertices)
    if sigma <= 1e-12 * (1.0 + float(np.abs(mean).max())):
        warnings.warn("data has zero variance; using a unit offset along axis 0",
                      DegenerateDataWarning, stacklevel=2)
        e0 = np.zeros(data.n_features)
        e0[0] = 1.0
        return mean + np.outer((ts + 1) / 2, e0)
    return mean + np.outer(ts * sigma, axes[0])
