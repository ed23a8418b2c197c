import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from princigraph.energy import (DataSet, Partition, approximation_energy, energy_components,
                                graph_energy, star_spring_decomposition, total_energy)
from princigraph.graph import Edge, ElasticGraph, Star
from princigraph.optimizer import partition_data

from conftest import random_tree
from oracles import direct_graph_energy


def test_path_energy_example():
    g = ElasticGraph.path(3, lam=1.0, mu=1.0)
    P = np.array([[0.0], [1.0], [3.0]])
    # edges 1 + 4, star (0 + 3 - 2) ** 2 = 1
    assert graph_energy(g, P) == pytest.approx(6.0)


def test_approximation_example():
    g = ElasticGraph.from_edges(2, [(0, 1)])
    P = np.array([[0.0], [1.0]])
    data = DataSet(np.array([[0.0], [1.0]]), np.array([2.0, 1.0]))
    part = partition_data(P, data)
    assert approximation_energy(g, P, data, part) == 0.0
    data = DataSet(np.array([[0.5], [1.0]]), np.array([2.0, 1.0]))
    part = partition_data(P, data)
    assert part.owner.tolist() == [0, 1]  # tie goes to the lower index
    assert approximation_energy(g, P, data, part) == pytest.approx(0.5)
    assert approximation_energy(g, P, data, part, normalize=True) == pytest.approx(0.5 / 3)


def test_zero_weight_points_ignored(rng):
    g = ElasticGraph.path(3, 1.0, 1.0)
    P = rng.normal(size=(3, 2))
    X = rng.normal(size=(10, 2))
    w = np.r_[np.ones(5), np.zeros(5)]
    full = DataSet(X, w)
    head = DataSet(X[:5])
    e_full = approximation_energy(g, P, full, partition_data(P, full))
    e_head = approximation_energy(g, P, head, partition_data(P, head))
    assert e_full == pytest.approx(e_head)


def test_energy_components_sum(rng):
    g = random_tree(rng, 6, lam=0.3, mu=0.7)
    P = rng.normal(size=(6, 3))
    data = DataSet(rng.normal(size=(40, 3)), rng.uniform(0.1, 2, 40))
    part = partition_data(P, data)
    total, ug, ua = energy_components(g, P, data, part)
    assert total == pytest.approx(ug + ua)
    assert total == pytest.approx(total_energy(g, P, data, part))


class TestValidation:
    def test_shape_mismatch(self):
        g = ElasticGraph.path(3)
        with pytest.raises(ValueError):
            graph_energy(g, np.zeros((2, 2)))

    def test_dimension_mismatch(self):
        g = ElasticGraph.path(2)
        data = DataSet(np.zeros((3, 2)))
        with pytest.raises(ValueError):
            approximation_energy(g, np.zeros((2, 3)), data, Partition(np.zeros(3, int), 2))

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            DataSet(np.zeros((2, 2)), np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            DataSet(np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(ValueError):
            DataSet(np.array([[np.nan, 0.0]]))

    def test_partition_range(self):
        with pytest.raises(ValueError):
            Partition(np.array([0, 3]), 3)


def test_star_spring_example():
    star = Star(0, (1, 2, 3), 1.0)
    P = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    dec = star_spring_decomposition(star, P)
    assert dec.direct == pytest.approx(0.0)
    assert dec.spring_form == pytest.approx(0.0, abs=1e-12)
    assert len(dec.positive_springs) == 3 and len(dec.negative_springs) == 3
    assert {c for _, _, c in dec.positive_springs} == {3.0}
    assert {c for _, _, c in dec.negative_springs} == {-1.0}


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(1, 10), st.floats(0.01, 10), st.integers(0, 2**32 - 1))
def test_spring_identity(k, m, mu, seed):
    P = np.random.default_rng(seed).normal(size=(k + 1, m))
    dec = star_spring_decomposition(Star(0, tuple(range(1, k + 1)), mu), P)
    assert abs(dec.direct - dec.spring_form) <= 1e-12 * (1 + abs(dec.direct))
    assert len(dec.negative_springs) == k * (k - 1) // 2


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_graph_energy_matches_loops(n, m, seed):
    rng = np.random.default_rng(seed)
    g = random_tree(rng, n, lam=float(rng.uniform(0.1, 2)), mu=float(rng.uniform(0.1, 2)))
    P = rng.normal(size=(n, m))
    assert graph_energy(g, P) == pytest.approx(direct_graph_energy(g, P), rel=1e-12, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_translation_and_rotation_invariance(n, m, seed):
    rng = np.random.default_rng(seed)
    g = random_tree(rng, n, lam=1.0, mu=0.5)
    P = rng.normal(size=(n, m))
    X = rng.normal(size=(15, m))
    data = DataSet(X)
    part = partition_data(P, data)
    e0 = total_energy(g, P, data, part)
    assert e0 >= 0
    shift = rng.normal(size=m)
    Q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    moved = DataSet(X @ Q.T + shift)
    e1 = total_energy(g, P @ Q.T + shift, moved, part)
    assert e1 == pytest.approx(e0, rel=1e-9, abs=1e-12)


def test_isolated_vertex_graph_energy():
    g = ElasticGraph(3, (Edge(0, 1, 2.0),))
    assert graph_energy(g, np.array([[0.0], [1.0], [50.0]])) == pytest.approx(2.0)


def test_dataset_extent():
    d = DataSet(np.array([[0.0, 0.0], [3.0, 4.0], [9.0, 9.0]]), np.array([1.0, 1.0, 0.0]))
    assert d.extent == pytest.approx(5.0)
    assert d.normalized().total_weight == pytest.approx(1.0)
