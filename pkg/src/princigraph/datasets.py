"""Synthetic point clouds used by the examples, the CLI and the tests."""

from __future__ import annotations

import numpy as np


def make_branching(n_per_branch: int = 100, noise: float = 0.05, length: float = 1.0,
                   seed: int = 0) -> np.ndarray:
    """Three noisy straight branches in the plane leaving a common point.

    Branch directions are 90, 210 and 330 degrees; positions along each branch
    are uniform on ``[0, length]`` and the isotropic Gaussian noise has
    standard deviation ``noise``.
    """
    rng = np.random.default_rng(seed)
    angles = np.deg2rad([90.0, 210.0, 330.0])
    parts = []
    for a in angles:
        t = rng.uniform(0.0, length, n_per_branch)
        d = np.array([np.cos(a), np.sin(a)])
        parts.append(t[:, None] * d + rng.normal(scale=noise, size=(n_per_branch, 2)))
    return np.vstack(parts)


def make_segment(n: int = 100, noise: float = 0.05, length: float = 2.0, dim: int = 2,
                 seed: int = 0) -> np.ndarray:
    """Noisy straight segment along the first axis; Gaussian noise in all coordinates."""
    rng = np.random.default_rng(seed)
    X = rng.normal(scale=noise, size=(n, dim))
    X[:, 0] += rng.uniform(-length / 2, length / 2, n)
    return X


def _random_rotation(dim: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))


def make_rectangle(n: int = 400, width: float = 2.0, height: float = 1.0, noise: float = 0.02,
                   dim: int = 5, seed: int = 0) -> np.ndarray:
    """Uniform samples of a ``width x height`` rectangle, rotated into ``R^dim`` with noise."""
    rng = np.random.default_rng(seed)
    X = np.zeros((n, dim))
    X[:, 0] = rng.uniform(0, width, n)
    X[:, 1] = rng.uniform(0, height, n)
    X += rng.normal(scale=noise, size=X.shape)
    return X @ _random_rotation(dim, rng).T


def make_arc(n: int = 200, radius: float = 1.0, span: float = np.pi, noise: float = 0.01,
             dim: int = 5, seed: int = 0) -> np.ndarray:
    """Noisy circular arc rotated into ``R^dim``."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, span, n)
    X = np.zeros((n, dim))
    X[:, 0] = radius * np.cos(t)
    X[:, 1] = radius * np.sin(t)
    X += rng.normal(scale=noise, size=X.shape)
    return X @ _random_rotation(dim, rng).T


def load_iris() -> np.ndarray:
    """The 150 x 4 iris measurements (requires scikit-learn's bundled copy)."""
    from sklearn.datasets import load_iris as _load

    return _load().data.astype(float)
