import numpy as np
import pytest

from princigraph.datasets import make_branching, make_rectangle
from princigraph.energy import DataSet, graph_energy
from princigraph.factorized import (NEW_FACTOR, FactorApplication, FactorizedModel,
                                    apply_to_factor, enumerate_factor_applications, grow_complex,
                                    initial_model, residual_direction)
from princigraph.graph import ElasticGraph, VertexBudgetError, copies_of_factor, product_counts
from princigraph.grammar import Application, GrowthConfig, Moduli, grow, initial_curve
from princigraph.optimizer import fit

from conftest import random_tree

M = Moduli(1.0, 1.0)


def path(n):
    return ElasticGraph.path(n, 1.0, 1.0)


def model(shape, rng=None, m=3):
    rng = rng or np.random.default_rng(0)
    factors = tuple(path(n) for n in shape)
    return FactorizedModel(factors, rng.normal(size=(int(np.prod(shape)), m)))


def per_copy_energy(mdl):
    total = 0.0
    for i, f in enumerate(mdl.factors):
        for vmap in copies_of_factor(mdl.product, i):
            total += graph_energy(f, mdl.embedding[vmap])
    return total


class TestEnumerate:
    def test_single_p2(self):
        m1 = model((2,))
        assert len(enumerate_factor_applications(m1, ("add_node", "bisect_edge"), 1)) == 3
        apps = enumerate_factor_applications(m1, ("add_node", "bisect_edge"), 2)
        assert len(apps) == 4 and apps[-1].rule == NEW_FACTOR

    def test_p2_p2(self):
        apps = enumerate_factor_applications(model((2, 2)), ("add_node", "bisect_edge"), 2)
        assert len(apps) == 6 and NEW_FACTOR not in {a.rule for a in apps}

    def test_budget(self):
        apps = enumerate_factor_applications(model((3, 3)), ("add_node",), 3, vertex_budget=12)
        # growing either factor gives 12 vertices; a new factor would give 18
        assert len(apps) == 6 and all(a.rule == "add_node" for a in apps)
        assert enumerate_factor_applications(model((3, 3)), ("add_node",), 3,
                                             vertex_budget=11) == []

    def test_sort_key_puts_new_factor_last(self):
        a = FactorApplication(1, Application(NEW_FACTOR, None))
        b = FactorApplication(0, Application("bisect_edge", (0, 1)))
        assert sorted([a, b], key=lambda x: x.sort_key) == [b, a]


class TestApply:
    def test_bisect_second_factor(self):
        mdl = model((3, 2))
        out = apply_to_factor(mdl, 1, Application("bisect_edge", (0, 1)), M)
        assert out.shape == (3, 3)
        T, T0 = out.tensor, mdl.tensor
        assert np.allclose(T[:, 2], 0.5 * (T0[:, 0] + T0[:, 1]))
        assert np.array_equal(T[:, :2], T0)
        assert (len(out.graph.edges), len(out.graph.stars)) == (12, 6)

    def test_add_node_first_factor(self):
        mdl = model((2, 3))
        out = apply_to_factor(mdl, 0, Application("add_node", 1), M)
        T, T0 = out.tensor, mdl.tensor
        assert out.shape == (3, 3)
        assert np.allclose(T[2], 2 * T0[1] - T0[0])
        assert np.array_equal(T[:2], T0)

    def test_new_factor(self):
        data = DataSet(make_rectangle(200, seed=1))
        mdl = initial_model(data, M)
        out = apply_to_factor(mdl, 1, Application(NEW_FACTOR, None), M, data)
        assert out.shape == (2, 2) and out.dimension == 2
        T = out.tensor
        assert np.array_equal(T[:, 0], mdl.tensor)
        gap = np.linalg.norm(T[:, 1] - T[:, 0], axis=1)
        assert np.allclose(gap, 1e-3 * data.extent)
        e0 = fit(mdl.graph, data, mdl.embedding)[2].final_energy[2]
        e1 = fit(out.graph, data, out.embedding)[2].final_energy[2]
        assert e1 < e0

    def test_new_factor_index_checked(self):
        with pytest.raises(ValueError):
            apply_to_factor(model((2,)), 0, Application(NEW_FACTOR, None), M)

    def test_factor_index_checked(self):
        with pytest.raises(IndexError):
            apply_to_factor(model((2,)), 3, Application("add_node", 0), M)

    def test_budget_error(self):
        mdl = FactorizedModel((path(3), path(3)), np.zeros((9, 2)), vertex_budget=10)
        with pytest.raises(VertexBudgetError):
            apply_to_factor(mdl, 0, Application("add_node", 0), M)

    def test_counts_after_every_application(self, rng):
        mdl = FactorizedModel((random_tree(rng, 4, mu=1.0), path(3)), rng.normal(size=(12, 2)))
        for fa in enumerate_factor_applications(mdl, ("add_node", "bisect_edge"), 3):
            out = apply_to_factor(mdl, fa.factor, fa.app, M, DataSet(rng.normal(size=(5, 2))))
            assert (len(out.graph.edges), len(out.graph.stars)) == product_counts(out.product)
            assert all(f.is_primitive() for f in out.factors)


def test_residual_direction_is_normal(rng):
    X = np.zeros((200, 3))
    X[:, 0] = rng.uniform(-1, 1, 200)
    X[:, 1] = rng.choice([-0.3, 0.3], 200)
    data = DataSet(X)
    g, e = initial_curve(data, M)
    mdl = FactorizedModel((g,), fit(g, data, e)[0])
    d = residual_direction(mdl, data)
    edge = mdl.embedding[1] - mdl.embedding[0]
    assert abs(d @ edge) <= 1e-12 * np.linalg.norm(edge)
    assert abs(d[1]) > 0.99


def test_product_energy_sum_over_copies(rng):
    for _ in range(10):
        f1 = random_tree(rng, int(rng.integers(1, 6)), lam=float(rng.uniform(0.1, 3)),
                         mu=float(rng.uniform(0.1, 3)))
        f2 = random_tree(rng, int(rng.integers(1, 6)), lam=float(rng.uniform(0.1, 3)),
                         mu=float(rng.uniform(0.1, 3)))
        mdl = FactorizedModel((f1, f2), rng.normal(size=(f1.n_vertices * f2.n_vertices, 4)))
        direct = graph_energy(mdl.graph, mdl.embedding)
        assert direct == pytest.approx(per_copy_energy(mdl), rel=1e-12, abs=1e-300)


def test_model_validation():
    with pytest.raises(ValueError):
        FactorizedModel((path(2),), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        FactorizedModel((ElasticGraph.from_edges(3, [(0, 1), (1, 2)]),), np.zeros((3, 2)))


def test_single_factor_budget_matches_grow():
    data = DataSet(make_branching(30, seed=5))
    config = GrowthConfig(max_transformations=6, max_factors=1)
    mdl, rep = grow_complex(data, config)
    g0, e0 = initial_curve(data, config.moduli)
    g, emb, rep_tree = grow(g0, e0, data, config)
    assert [(s.rule, s.site) for s in rep.steps] == [(s.rule, s.site) for s in rep_tree.steps]
    assert mdl.graph == g and np.allclose(mdl.embedding, emb)
    assert all(s.extra["dimension"] == 1 for s in rep.steps)


def test_grid_energy_sum_after_growth():
    data = DataSet(make_rectangle(150, seed=2))
    mdl, rep = grow_complex(data, GrowthConfig(max_transformations=8, moduli=Moduli(0.5, 10)))
    assert graph_energy(mdl.graph, mdl.embedding) == pytest.approx(per_copy_energy(mdl), rel=1e-12)
    acc = rep.accepted_energies
    assert all(b <= a * (1 + 1e-9) for a, b in zip(acc, acc[1:]))
    assert rep.steps[-1].extra["dims"] == list(mdl.shape)
