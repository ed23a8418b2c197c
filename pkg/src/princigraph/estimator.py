"""scikit-learn compatible estimators for elastic principal graphs."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import _check_sample_weight, check_is_fitted, validate_data

from .energy import DataSet, energy_components
from .factorized import grow_complex, initial_model
from .grammar import CURVE_RULES, TREE_RULES, GrowthConfig, Moduli, grow, initial_curve
from .optimizer import SolverConfig, partition_data


class ElasticPrincipalGraph(TransformerMixin, ClusterMixin, BaseEstimator):
    """Principal curve, tree or cubic complex grown by a graph grammar.

    Parameters
    ----------
    mode : {'curve', 'tree', 'complex'}, default='tree'
        ``'curve'`` only bisects edges of the initial segment, ``'tree'``
        also attaches new leaves, ``'complex'`` grows a product of trees.
    n_steps : int, default=10
        Number of grammar transformations applied after the initial fit.
    lam : float, default=0.01
        Stretching modulus of every edge.
    mu : float, default=0.1
        Bending modulus of every star.
    epsilon : float, default=1e-5
        Relative energy decrease that stops the splitting iterations.
    max_iter : int, default=100
        Maximum splitting iterations of a full fit.
    trial_iter : int, default=5
        Splitting iterations used to score each candidate transformation.
    preselect : float, default=1.0
        Fraction of candidate transformations kept by local-energy ranking.
    n_restarts : int, default=0
        Extra jittered refits after every step; the best one is kept.
    normalize : bool, default=False
        Divide the approximation energy by the total sample weight.
    max_factors : int, default=3
        Factor budget in ``'complex'`` mode.
    scale_stars : bool, default=False
        Use ``mu / k`` as the modulus of a k-star.
    random_state : int, default=0
        Seed of the restart jitter.

    Attributes
    ----------
    nodes_ : ndarray of shape (n_nodes, n_features)
        Node positions.
    graph_ : ElasticGraph
        The fitted (expanded) elastic graph.
    edges_ : ndarray of shape (n_edges, 2)
    labels_ : ndarray of shape (n_samples,)
        Owner node of every training sample.
    energy_ : tuple of float
        ``(total, graph, approximation)`` energy of the fitted model.
    report_ : GrowthReport
    n_iter_ : int
        Splitting iterations of the last full fit.
    model_ : FactorizedModel or None
        The factor structure in ``'complex'`` mode.
    """

    def __init__(self, mode="tree", n_steps=10, lam=0.01, mu=0.1, epsilon=1e-5, max_iter=100,
                 trial_iter=5, preselect=1.0, n_restarts=0, normalize=False, max_factors=3,
                 scale_stars=False, random_state=0):
        self.mode = mode
        self.n_steps = n_steps
        self.lam = lam
        self.mu = mu
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.trial_iter = trial_iter
        self.preselect = preselect
        self.n_restarts = n_restarts
        self.normalize = normalize
        self.max_factors = max_factors
        self.scale_stars = scale_stars
        self.random_state = random_state

    def _growth_config(self):
        if self.mode not in ("curve", "tree", "complex"):
            raise ValueError(f"unknown mode {self.mode!r}")
        return GrowthConfig(
            rules=CURVE_RULES if self.mode == "curve" else TREE_RULES,
            max_transformations=self.n_steps,
            trial_iterations=self.trial_iter,
            preselect=self.preselect,
            restarts=self.n_restarts,
            seed=self.random_state,
            moduli=Moduli(self.lam, self.mu, self.scale_stars),
            solver=SolverConfig(epsilon=self.epsilon, max_iterations=self.max_iter,
                                normalize=self.normalize),
            max_factors=self.max_factors if self.mode == "complex" else 1,
        )

    def fit(self, X, y=None, sample_weight=None):
        X = validate_data(self, X, dtype=np.float64, ensure_min_samples=2)
        w = _check_sample_weight(sample_weight, X)
        data = DataSet(X, w)
        config = self._growth_config()
        self.model_ = None
        if self.mode == "complex":
            self.model_, self.report_ = grow_complex(
                data, config, initial_model(data, config.moduli, config.vertex_budget))
            graph, emb = self.model_.graph, self.model_.embedding
        else:
            graph0, emb0 = initial_curve(data, config.moduli)
            graph, emb, self.report_ = grow(graph0, emb0, data, config)
        self.graph_ = graph
        self.n_iter_ = self.report_.final_iterations
        self.nodes_ = emb
        self.edges_ = np.array([e.pair for e in graph.edges], dtype=int).reshape(-1, 2)
        part = partition_data(emb, data)
        self.labels_ = part.owner.copy()
        self.energy_ = energy_components(graph, emb, data, part, self.normalize)
        return self

    def predict(self, X):
        """Index of the nearest node for every sample."""
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return partition_data(self.nodes_, DataSet(X)).owner.copy()

    def transform(self, X):
        """Squared distances from every sample to every node."""
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        diff = X[:, None, :] - self.nodes_[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)

    def project(self, X):
        """Position of the nearest node for every sample."""
        return self.nodes_[self.predict(X)]

    def score(self, X, y=None, sample_weight=None):
        """Negative total energy of the fitted graph on ``X``."""
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        data = DataSet(X, _check_sample_weight(sample_weight, X))
        part = partition_data(self.nodes_, data)
        return -energy_components(self.graph_, self.nodes_, data, part, self.normalize)[0]
