import numpy as np
import pytest
from sklearn.base import clone
from sklearn.utils.estimator_checks import parametrize_with_checks

from princigraph import ElasticPrincipalGraph
from princigraph.datasets import make_branching, make_rectangle


@parametrize_with_checks([ElasticPrincipalGraph(n_steps=1)])
def test_sklearn_compatible(estimator, check):
    check(estimator)


def test_fit_attributes():
    X = make_branching(40, seed=0)
    est = ElasticPrincipalGraph(n_steps=8).fit(X)
    assert est.nodes_.shape == (10, 2)
    assert est.edges_.shape == (9, 2)
    assert est.labels_.shape == (120,)
    assert est.graph_.is_tree()
    assert np.array_equal(est.predict(X), est.labels_)
    assert est.transform(X).shape == (120, 10)
    assert np.allclose(est.project(X), est.nodes_[est.labels_])
    assert est.score(X) == pytest.approx(-est.energy_[0])
    assert est.n_iter_ >= 1


def test_curve_mode_is_path():
    X = make_branching(40, seed=0)
    est = ElasticPrincipalGraph(mode="curve", n_steps=6).fit(X)
    assert max(est.graph_.degrees) == 2 and est.graph_.is_connected()


def test_complex_mode():
    X = make_rectangle(150, seed=3)
    est = ElasticPrincipalGraph(mode="complex", n_steps=4, lam=0.5, mu=10).fit(X)
    assert est.model_ is not None
    assert est.nodes_.shape[0] == np.prod(est.model_.shape)


def test_sample_weight_matches_repetition():
    X = make_branching(20, seed=1)
    w = np.ones(len(X))
    w[:10] = 2
    a = ElasticPrincipalGraph(n_steps=3).fit(X, sample_weight=w)
    b = ElasticPrincipalGraph(n_steps=3).fit(np.vstack([X, X[:10]]))
    assert np.allclose(a.nodes_, b.nodes_)


def test_clone_and_params():
    est = ElasticPrincipalGraph(lam=0.2, mode="curve")
    c = clone(est)
    assert c.get_params()["lam"] == 0.2 and c.get_params()["mode"] == "curve"


def test_bad_mode():
    with pytest.raises(ValueError):
        ElasticPrincipalGraph(mode="surface").fit(np.random.default_rng(0).normal(size=(10, 2)))
