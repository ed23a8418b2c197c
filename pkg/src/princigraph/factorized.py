"""Principal cubic complexes: grammar growth on the factors of a product graph.

Rules rewrite one factor at a time; the energy is always evaluated on the
expanded product. An extra ``new_factor`` rule appends a single-edge factor,
which lets the complex gain a dimension when that pays off energetically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .energy import DataSet, Partition, point_distances
from .graph import (DEFAULT_VERTEX_BUDGET, ElasticGraph, ProductGraph, VertexBudgetError,
                    copies_of_factor, expand)
from .grammar import (RULES, Application, GrowthConfig, GrowthReport, Moduli, _check_site,
                      _incident_energy, enumerate_applications, initial_curve, run_growth)
from .optimizer import partition_data, weighted_pca

NEW_FACTOR = "new_factor"


@dataclass(frozen=True)
class FactorApplication:
    """An application of a rule to factor ``factor`` of a product.

    For ``new_factor`` the factor index is the index the new factor will get.
    """

    factor: int
    app: Application

    @property
    def rule(self) -> str:
        return self.app.rule

    @property
    def sort_key(self) -> tuple:
        # new-factor applications order after all factor-local ones
        return (self.rule == NEW_FACTOR, self.factor) + self.app.sort_key


@dataclass(frozen=True, eq=False)
class FactorizedModel:
    """Product of primitive factors with an embedding of the expanded vertices.

    ``embedding`` has one row per product vertex in row-major multi-index
    order (the last factor varies fastest).
    """

    factors: tuple[ElasticGraph, ...]
    embedding: np.ndarray
    vertex_budget: int = DEFAULT_VERTEX_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        emb = np.asarray(self.embedding, dtype=float)
        if emb.ndim != 2 or emb.shape[0] != self.product.n_vertices:
            raise ValueError(f"embedding shape {emb.shape} does not match product shape "
                             f"{self.product.shape}")
        for f in self.factors:
            if not f.is_primitive():
                raise ValueError("every factor must be a primitive elastic graph")
        object.__setattr__(self, "embedding", emb)

    @cached_property
    def product(self) -> ProductGraph:
        return ProductGraph(self.factors, self.vertex_budget)

    @cached_property
    def graph(self) -> ElasticGraph:
        return expand(self.product)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.product.shape

    @property
    def dimension(self) -> int:
        return self.product.dimension

    @property
    def tensor(self) -> np.ndarray:
        """Embedding viewed as an array of shape ``shape + (n_features,)``."""
        return self.embedding.reshape(self.shape + (self.embedding.shape[1],))

    # growth-state protocol used by grammar.run_growth

    def applications(self, config: GrowthConfig) -> list[FactorApplication]:
        return enumerate_factor_applications(self, config.rules, config.max_factors,
                                             config.vertex_budget)

    def apply(self, app: FactorApplication, config: GrowthConfig, data: DataSet):
        return apply_to_factor(self, app.factor, app.app, config.moduli, data)

    def with_embedding(self, emb) -> "FactorizedModel":
        return FactorizedModel(self.factors, emb, self.vertex_budget)

    def local_energy(self, fapp: FactorApplication, data: DataSet, part: Partition) -> float:
        """Local energy of the rewritten site summed over all copies of its factor."""
        if fapp.rule == NEW_FACTOR:
            return math.inf
        factor = self.factors[fapp.factor]
        site = fapp.app.site
        cluster = np.bincount(part.owner, minlength=self.embedding.shape[0],
                              weights=data.weights * point_distances(self.embedding, data, part))
        total = 0.0
        for vmap in copies_of_factor(self.product, fapp.factor):
            emb_copy = self.embedding[vmap]
            if fapp.rule == "add_node":
                total += _incident_energy(factor, emb_copy)[site] + cluster[vmap[site]]
            elif fapp.rule == "bisect_edge":
                u, v = site
                d = emb_copy[u] - emb_copy[v]
                total += (factor.edges[factor.edge_index(u, v)].lam * float(d @ d)
                          + cluster[vmap[u]] + cluster[vmap[v]])
        return total

    def describe(self, fapp: FactorApplication):
        return fapp.rule, fapp.app.to_json(), {
            "factor": fapp.factor, "dims": list(self.shape), "dimension": self.dimension}


def enumerate_factor_applications(model: FactorizedModel, rules: Sequence[str],
                                  max_factors: int = 3,
                                  vertex_budget: int | None = None) -> list[FactorApplication]:
    """Factor-local applications for every factor, then ``new_factor`` if allowed.

    Applications whose expansion would exceed ``vertex_budget`` are left out.
    """
    budget = model.vertex_budget if vertex_budget is None else vertex_budget
    n = model.product.n_vertices
    out = []
    for i, factor in enumerate(model.factors):
        grown = n // factor.n_vertices * (factor.n_vertices + 1)
        if grown > budget:
            continue
        out.extend(FactorApplication(i, a) for a in enumerate_applications(factor, rules))
    if len(model.factors) < max_factors and 2 * n <= budget:
        out.append(FactorApplication(len(model.factors), Application(NEW_FACTOR, None)))
    return out


def residual_direction(model: FactorizedModel, data: DataSet) -> np.ndarray:
    """Leading principal direction of the residuals normal to the complex.

    Residuals are point-to-owner vectors with their component in the span
    of the complex's edge directions removed (that span is estimated by the
    top ``r`` singular vectors of the edge vectors, ``r`` the number of
    non-trivial factors). Falls back to the first coordinate axis or to any
    axis normal to the span when nothing is left.
    """
    emb = model.embedding
    m = emb.shape[1]
    u, v, _ = model.graph.edge_arrays
    r = model.dimension
    basis = np.zeros((0, m))
    if len(u) and r:
        _, _, vt = np.linalg.svd(emb[u] - emb[v], full_matrices=False)
        basis = vt[:r]
    part = partition_data(emb, data)
    resid = data.points - emb[part.owner]
    resid = resid - (resid @ basis.T) @ basis
    _, axes, var = weighted_pca(DataSet(resid, data.weights), 1)
    if var[0] > 1e-24 * (1.0 + data.extent ** 2):
        return axes[0]
    for e in np.eye(m):
        e = e - (e @ basis.T) @ basis
        if np.linalg.norm(e) > 1e-6:
            return e / np.linalg.norm(e)
    return np.eye(m)[0]


def apply_to_factor(model: FactorizedModel, i: int, app: Application,
                    moduli: Moduli | None = None, data: DataSet | None = None
                    ) -> FactorizedModel:
    """Rewrite factor ``i`` and extend the embedding slice-wise.

    Existing product vertices keep their positions. The slice of new product
    vertices is placed by the factor rule applied to whole slices (midpoint
    of two slices for ``bisect_edge``, extrapolation for ``add_node``). A
    ``new_factor`` application duplicates the embedding into a second slice
    offset by ``1e-3`` times the data extent along :func:`residual_direction`.
    """
    moduli = moduli or Moduli()
    factors = list(model.factors)
    T = model.tensor
    m = T.shape[-1]
    extent = data.extent if data is not None else 1.0
    offset = 1e-3 * extent

    if app.rule == NEW_FACTOR:
        if i != len(factors):
            raise ValueError(f"a new factor must be appended at index {len(factors)}, got {i}")
        direction = residual_direction(model, data) if data is not None else np.eye(m)[0]
        factors.append(moduli.stars(ElasticGraph.path(2, moduli.lam)))
        T_new = np.stack([T, T + offset * direction], axis=-2)
    else:
        if not 0 <= i < len(factors):
            raise IndexError(f"factor index {i} out of range for {len(factors)} factors")
        rule = RULES[app.rule]
        factor = factors[i]
        _check_site(factor, app)
        factors[i] = rule.rewrite(factor, app.site, moduli)
        moved = np.moveaxis(T, i, 0)
        if app.position is not None:
            new_slice = np.broadcast_to(np.asarray(app.position, float), (1,) + moved.shape[1:])
        else:
            new_slice = rule.place(factor, moved, app.site, offset)
        T_new = np.moveaxis(np.concatenate([moved, new_slice], axis=0), 0, i)

    shape = tuple(f.n_vertices for f in factors)
    if math.prod(shape) > model.vertex_budget:
        raise VertexBudgetError(f"product of shape {shape} exceeds the vertex budget "
                                f"{model.vertex_budget}")
    return FactorizedModel(tuple(factors), T_new.reshape(-1, m), model.vertex_budget)


def initial_model(data: DataSet, moduli: Moduli | None = None,
                  vertex_budget: int = DEFAULT_VERTEX_BUDGET) -> FactorizedModel:
    graph, emb = initial_curve(data, moduli)
    return FactorizedModel((graph,), emb, vertex_budget)


def grow_complex(data: DataSet, config: GrowthConfig | None = None,
                 model0: FactorizedModel | None = None) -> tuple[FactorizedModel, GrowthReport]:
    """Grow a principal cubic complex, starting from the PCA segment by default.

    Candidates are ranked by energy descent per added product vertex, so a
    new factor, which doubles the vertex count, must pay for all of its
    vertices.
    Step records carry the factor sizes ``dims`` and the number ``dimension``
    of non-trivial factors after each step.
    """
    config = config or GrowthConfig()
    model = model0 or initial_model(data, config.moduli, config.vertex_budget)
    return run_growth(model, data, config, selection="per_vertex")
