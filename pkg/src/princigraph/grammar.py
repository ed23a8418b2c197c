"""Graph grammar growth with largest-energy-descent selection.

Two production rules act on primitive elastic graphs: ``add_node`` attaches
a new leaf to a vertex and ``bisect_edge`` splits an edge with a new
vertex. At every step each applicable rewrite is tried with a short fit and
the one with the lowest resulting total energy is kept.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .energy import DataSet, edge_energies, energy_components, point_distances, star_energies
from .graph import Edge, ElasticGraph, derive_primitive_stars
from .optimizer import SolverConfig, SolverError, fit, partition_data


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Moduli:
    """Elastic moduli given to newly created edges and stars."""

    lam: float = 0.01
    mu: float = 0.1
    scale_stars: bool = False

    def stars(self, graph: ElasticGraph) -> ElasticGraph:
        return derive_primitive_stars(graph, self.mu, scale_by_k=self.scale_stars)


@dataclass(frozen=True)
class Application:
    """A rule together with the site it rewrites.

    ``site`` is a vertex for ``add_node`` and an ``(u, v)`` edge for
    ``bisect_edge``. ``position`` optionally overrides the placement rule
    for the new vertex.
    """

    rule: str
    site: Any
    position: tuple[float, ...] | None = None

    def to_json(self):
        return list(self.site) if isinstance(self.site, tuple) else self.site

    @property
    def sort_key(self) -> tuple:
        site = self.site if isinstance(self.site, tuple) else (-1 if self.site is None else self.site,)
        return (self.rule, tuple(site))


class GrammarRule:
    """Base class of production rules; subclasses register under ``name``.

    ``rewrite`` must append exactly the new vertices at the end of the
    vertex range so existing indices stay valid. ``place`` receives an array
    whose first axis runs over vertices (trailing axes are arbitrary) and
    returns the stacked positions of the new vertices.
    """

    name = ""

    def applications(self, graph: ElasticGraph) -> list[Application]:
        raise NotImplementedError

    def rewrite(self, graph: ElasticGraph, site, moduli: Moduli) -> ElasticGraph:
        raise NotImplementedError

    def place(self, graph: ElasticGraph, positions: np.ndarray, site, offset: float) -> np.ndarray:
        raise NotImplementedError

    def local_energy(self, graph, emb, data, part, site) -> float:
        raise NotImplementedError


class AddNode(GrammarRule):
    name = "add_node"

    def applications(self, graph):
        return [Application(self.name, y) for y in range(graph.n_vertices)]

    def rewrite(self, graph, site, moduli):
        z = graph.n_vertices
        g = ElasticGraph(z + 1, graph.edges + (Edge(site, z, moduli.lam),))
        return moduli.stars(g)

    def place(self, graph, positions, site, offset):
        nb = graph.neighbors[site]
        if nb:
            new = 2.0 * positions[site] - positions[list(nb)].mean(axis=0)
        else:
            new = positions[site].copy()
            new[..., 0] += offset
        return new[None]

    def local_energy(self, graph, emb, data, part, site):
        return _cluster_energy(emb, data, part, [site]) + _incident_energy(graph, emb)[site]


class BisectEdge(GrammarRule):
    name = "bisect_edge"

    def applications(self, graph):
        pairs = sorted(e.pair for e in graph.edges)
        return [Application(self.name, p) for p in pairs]

    def rewrite(self, graph, site, moduli):
        u, v = site
        z = graph.n_vertices
        i = graph.edge_index(u, v)
        edges = graph.edges[:i] + graph.edges[i + 1:] + (Edge(u, z, moduli.lam), Edge(z, v, moduli.lam))
        return moduli.stars(ElasticGraph(z + 1, edges))

    def place(self, graph, positions, site, offset):
        u, v = site
        return (0.5 * (positions[u] + positions[v]))[None]

    def local_energy(self, graph, emb, data, part, site):
        u, v = site
        edge = graph.edges[graph.edge_index(u, v)]
        d = np.asarray(emb[u]) - np.asarray(emb[v])
        return edge.lam * float(d @ d) + _cluster_energy(emb, data, part, [u, v])


RULES: dict[str, GrammarRule] = {}


def register_rule(rule: GrammarRule) -> GrammarRule:
    if not rule.name:
        raise GrammarError("a rule needs a name")
    RULES[rule.name] = rule
    return rule


register_rule(AddNode())
register_rule(BisectEdge())

TREE_RULES = ("add_node", "bisect_edge")
CURVE_RULES = ("bisect_edge",)


def get_rules(names: Sequence[str]) -> list[GrammarRule]:
    try:
        return [RULES[n] for n in names]
    except KeyError as exc:
        raise GrammarError(f"unknown rule {exc.args[0]!r}; known: {sorted(RULES)}") from None


def _cluster_energy(emb, data, part, vertices) -> float:
    dist = point_distances(emb, data, part)
    mask = np.isin(part.owner, vertices)
    return float(np.dot(data.weights[mask], dist[mask]))


def _incident_energy(graph: ElasticGraph, emb) -> np.ndarray:
    """Energy of the edges and stars touching each vertex."""
    out = np.zeros(graph.n_vertices)
    u, v, _ = graph.edge_arrays
    ee = edge_energies(graph, emb)
    np.add.at(out, u, ee)
    np.add.at(out, v, ee)
    for s, es in zip(graph.stars, star_energies(graph, emb)):
        out[s.center] += es
        out[list(s.leaves)] += es
    return out


@dataclass(frozen=True)
class GrowthConfig:
    rules: tuple[str, ...] = TREE_RULES
    max_transformations: int = 10
    target_energy: float | None = None
    trial_iterations: int = 5
    preselect: float = 1.0
    restarts: int = 0
    seed: int = 0
    moduli: Moduli = field(default_factory=Moduli)
    solver: SolverConfig = field(default_factory=SolverConfig)
    max_factors: int = 3
    vertex_budget: int = 100_000
    selection: str = "auto"

    def __post_init__(self):
        if self.max_transformations < 0:
            raise ValueError("max_transformations must be nonnegative")
        if self.trial_iterations < 1:
            raise ValueError("trial_iterations must be >= 1")
        if not 0 < self.preselect <= 1:
            raise ValueError("preselect fraction must lie in (0, 1]")
        if self.restarts < 0:
            raise ValueError("restarts must be nonnegative")
        if self.max_factors < 1:
            raise ValueError("max_factors must be >= 1")
        if self.selection not in ("auto", "energy", "per_vertex"):
            raise ValueError(f"unknown selection criterion {self.selection!r}")

    @property
    def trial_solver(self) -> SolverConfig:
        return dataclasses.replace(self.solver, max_iterations=self.trial_iterations)


@dataclass
class GrowthStep:
    step: int
    rule: str
    site: Any
    energy_total: float
    energy_approx: float
    energy_graph: float
    vertices: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        rec = {"step": self.step, "rule": self.rule, "site": self.site,
               "energy_total": self.energy_total, "energy_approx": self.energy_approx,
               "energy_graph": self.energy_graph, "vertices": self.vertices}
        rec.update(self.extra)
        return rec


@dataclass
class GrowthReport:
    seed: int = 0
    initial: tuple[float, float, float] | None = None
    steps: list[GrowthStep] = field(default_factory=list)
    final_iterations: int = 0  # splitting iterations of the last full fit

    @property
    def accepted_energies(self) -> list[float]:
        return [self.initial[0]] + [s.energy_total for s in self.steps]

    def to_jsonl(self) -> str:
        import json
        return "".join(json.dumps(s.to_json()) + "\n" for s in self.steps)


# -- single-graph state --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GraphState:
    graph: ElasticGraph
    embedding: np.ndarray

    def applications(self, config: GrowthConfig) -> list[Application]:
        return enumerate_applications(self.graph, config.rules)

    def apply(self, app: Application, config: GrowthConfig, data: DataSet) -> "GraphState":
        g, e = apply(self.graph, self.embedding, app, config.moduli, 1e-3 * data.extent)
        return GraphState(g, e)

    def with_embedding(self, emb) -> "GraphState":
        return GraphState(self.graph, emb)

    def local_energy(self, app, data, part) -> float:
        return RULES[app.rule].local_energy(self.graph, self.embedding, data, part, app.site)

    def describe(self, app) -> tuple[str, Any, dict]:
        return app.rule, app.to_json(), {}


def enumerate_applications(graph: ElasticGraph, rules: Sequence[str] = TREE_RULES
                           ) -> list[Application]:
    """All applications of ``rules``, rule by rule in the given order.

    For the built-in rules: one ``add_node`` per vertex ascending, then one
    ``bisect_edge`` per edge in lexicographic order.
    """
    apps: list[Application] = []
    for rule in get_rules(rules):
        apps.extend(rule.applications(graph))
    return apps


def apply(graph: ElasticGraph, emb, app: Application, moduli: Moduli | None = None,
          offset: float = 1e-3) -> tuple[ElasticGraph, np.ndarray]:
    """Rewrite ``graph`` by ``app`` and place the new vertex.

    ``add_node`` places the new leaf by extrapolating its parent away from
    the centroid of the parent's neighbors (or at ``offset`` along axis 0 for
    an isolated parent); ``bisect_edge`` places it at the edge midpoint.
    Stars are re-derived, so the result is primitive again.
    """
    moduli = moduli or Moduli()
    rule = RULES.get(app.rule)
    if rule is None:
        raise GrammarError(f"unknown rule {app.rule!r}")
    _check_site(graph, app)
    emb = np.asarray(emb, dtype=float)
    new_graph = rule.rewrite(graph, app.site, moduli)
    if app.position is not None:
        new_pos = np.asarray(app.position, dtype=float).reshape(1, -1)
    else:
        new_pos = rule.place(graph, emb, app.site, offset)
    return new_graph, np.vstack([emb, new_pos])


def _check_site(graph: ElasticGraph, app: Application):
    if app.rule == "add_node":
        if not (isinstance(app.site, (int, np.integer)) and 0 <= app.site < graph.n_vertices):
            raise GrammarError(f"invalid add_node site {app.site!r}")
    elif app.rule == "bisect_edge":
        try:
            graph.edge_index(*app.site)
        except (KeyError, TypeError):
            raise GrammarError(f"invalid bisect_edge site {app.site!r}") from None


def evaluate_application(graph: ElasticGraph, emb, data: DataSet, app: Application,
                         config: GrowthConfig | None = None):
    """Apply ``app`` to a copy and run the trial fit.

    Returns ``(total_energy, (graph, embedding, partition))``.
    """
    config = config or GrowthConfig()
    state = GraphState(graph, np.asarray(emb, dtype=float))
    energy, new_state, part = _trial(state, app, data, config)
    return energy, (new_state.graph, new_state.embedding, part)


def _trial(state, app, data, config):
    candidate = state.apply(app, config, data)
    try:
        emb, part, rep = fit(candidate.graph, data, candidate.embedding, config.trial_solver)
    except SolverError as exc:
        raise SolverError(f"{exc} [while evaluating {app}]", exc.residual) from exc
    return rep.final_energy[0], candidate.with_embedding(emb), part


def preselect(graph: ElasticGraph, emb, data: DataSet, apps: Sequence[Application], q: float
              ) -> list[Application]:
    """Keep the ``ceil(q * len(apps))`` applications with the largest local energy.

    The local energy of an ``add_node`` site is the approximation energy of
    its cluster plus the energy of elements incident to it; for a
    ``bisect_edge`` site it is the edge term plus the approximation energy
    of both endpoint clusters. ``q == 1`` returns ``apps`` unchanged.
    """
    state = GraphState(graph, np.asarray(emb, dtype=float))
    return _preselect(state, data, list(apps), q)


def _preselect(state, data, apps, q):
    if not 0 < q <= 1:
        raise ValueError("preselect fraction must lie in (0, 1]")
    if q == 1:
        return list(apps)
    part = partition_data(state.embedding, data)
    keyed = sorted(apps, key=lambda a: (-state.local_energy(a, data, part), a.sort_key))
    return keyed[:math.ceil(q * len(apps))]


def _restart(state, data, config, rng, best):
    """Try jittered refits and keep the lowest-energy one (ties keep ``best``)."""
    emb, part, rep = best
    scale = 1e-2 * data.extent
    for _ in range(config.restarts):
        jitter = rng.normal(scale=scale, size=emb.shape)
        cand = fit(state.graph, data, emb + jitter, config.solver)
        if cand[2].final_energy[0] < rep.final_energy[0]:
            emb, part, rep = cand
    return emb, part, rep


def run_growth(state, data: DataSet, config: GrowthConfig, selection: str = "energy"):
    """Selection loop shared by tree and complex growth.

    ``state`` provides ``graph``, ``embedding``, ``applications``, ``apply``,
    ``with_embedding``, ``local_energy`` and ``describe``.

    With ``selection="energy"`` the candidate with the lowest trial energy
    wins; with ``"per_vertex"`` the one with the largest energy descent per
    added vertex. Both agree when every candidate adds one vertex. Ties go to
    the earliest candidate in enumeration order. ``config.selection`` other
    than ``"auto"`` overrides ``selection``.
    """
    if config.selection != "auto":
        selection = config.selection
    rng = np.random.default_rng(config.seed)
    report = GrowthReport(seed=config.seed)
    emb, part, rep = _restart(state, data, config, rng,
                              fit(state.graph, data, state.embedding, config.solver))
    state = state.with_embedding(emb)
    report.initial = rep.final_energy
    report.final_iterations = rep.iterations

    for step in range(1, config.max_transformations + 1):
        if config.target_energy is not None and rep.final_energy[2] <= config.target_energy:
            break
        apps = state.applications(config)
        if not apps:
            raise GrammarError("no rule applications available")
        order = {a: i for i, a in enumerate(apps)}
        survivors = _preselect(state, data, apps, config.preselect)

        best = None
        current = rep.final_energy[0]
        n_before = state.graph.n_vertices
        for app in survivors:
            energy, cand, _ = _trial(state, app, data, config)
            if selection == "per_vertex":
                added = max(1, cand.graph.n_vertices - n_before)
                key = ((energy - current) / added, order[app])
            else:
                key = (energy, order[app])
            if best is None or key < best[0]:
                best = (key, app, cand)
        _, app, cand = best

        emb, part, rep = _restart(cand, data, config, rng,
                                  fit(cand.graph, data, cand.embedding, config.solver))
        state = cand.with_embedding(emb)
        report.final_iterations = rep.iterations
        total, ug, ua = rep.final_energy
        rule, site, extra = state.describe(app)
        report.steps.append(GrowthStep(step, rule, site, total, ua, ug,
                                       state.graph.n_vertices, extra))
    return state, report


def grow(graph0: ElasticGraph, emb0, data: DataSet, config: GrowthConfig | None = None):
    """Grow ``graph0`` by one rule application per step.

    Returns ``(graph, embedding, report)``; ``report.steps`` holds one
    record per accepted transformation.
    """
    config = config or GrowthConfig()
    if not graph0.is_primitive():
        raise GrammarError("grow needs a primitive elastic graph")
    state, report = run_growth(GraphState(graph0, np.asarray(emb0, dtype=float)), data, config)
    return state.graph, state.embedding, report


def initial_curve(data: DataSet, moduli: Moduli | None = None) -> tuple[ElasticGraph, np.ndarray]:
    """Two-vertex segment along the first principal axis of ``data``."""
    from .optimizer import pca_initialize

    moduli = moduli or Moduli()
    graph = moduli.stars(ElasticGraph.path(2, moduli.lam))
    return graph, pca_initialize(data, 2)


def final_energies(graph, emb, data, normalize=False):
    part = partition_data(emb, data)
    return energy_components(graph, emb, data, part, normalize)
