"""Synthetic instances for experiments and tests. All are seeded and deterministic."""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .geometry import PointSet
from .sensitivity.lowerbound import lowerbound_instance

GENERATORS = ("mixture", "lines", "flat", "grid", "lowerbound")


def gaussian_mixture(n: int, d: int, k: int, seed: int = 0, imbalance: float = 0.8,
                     spread: float = 10.0, outliers: float = 0.0) -> PointSet:
    """``k`` isotropic unit-variance clusters with geometrically decaying sizes.

    Cluster ``c`` receives a share proportional to ``imbalance**c``, so small
    far-away clusters carry the points uniform sampling tends to miss.
    ``outliers`` is the fraction of points placed uniformly in a box ten times
    wider than the cluster spread.
    """
    if n < k or k < 1 or d < 1:
        raise InputError("need n >= k >= 1 and d >= 1")
    if not 0 < imbalance <= 1:
        raise InputError("imbalance must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n_out = int(round(outliers * n))
    n_in = n - n_out
    share = imbalance ** np.arange(k)
    sizes = np.maximum(1, np.floor(share / share.sum() * n_in).astype(int))
    sizes[0] += n_in - sizes.sum()
    centers = rng.normal(scale=spread, size=(k, d))
    X = np.concatenate([c + rng.normal(size=(s, d)) for c, s in zip(centers, sizes)])
    if n_out:
        X = np.concatenate([X, rng.uniform(-10 * spread, 10 * spread, size=(n_out, d))])
    return PointSet(X[rng.permutation(n)])


def noisy_lines(n: int, d: int, k: int, seed: int = 0, noise: float = 0.05, length: float = 10.0) -> PointSet:
    """Points scattered along ``k`` random lines with Gaussian noise."""
    if n < 1 or k < 1 or d < 2:
        raise InputError("need n >= 1, k >= 1 and d >= 2")
    rng = np.random.default_rng(seed)
    anchors = rng.normal(scale=length, size=(k, d))
    dirs = rng.normal(size=(k, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    lab = rng.integers(0, k, size=n)
    t = rng.uniform(-length, length, size=n)
    return PointSet(anchors[lab] + t[:, None] * dirs[lab] + noise * rng.normal(size=(n, d)))


def flat_plus_noise(n: int, d: int, j: int, seed: int = 0, noise: float = 0.1, scale: float = 10.0) -> PointSet:
    """Points near a random ``j``-flat; coordinates inside the flat are Gaussian."""
    if n < 1 or not 0 <= j < d:
        raise InputError("need n >= 1 and 0 <= j < d")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.normal(size=(d, d)))
    inside = rng.normal(scale=scale, size=(n, j)) @ basis[:, :j].T
    return PointSet(rng.normal(size=d) + inside + noise * rng.normal(size=(n, d)))


def integer_grid(n: int, d: int, c: float = 1.0, seed: int = 0) -> PointSet:
    """Integer points with every coordinate of magnitude at most ``n**c``."""
    if n < 1 or d < 1 or c <= 0:
        raise InputError("need n, d >= 1 and c > 0")
    rng = np.random.default_rng(seed)
    bound = int(np.floor(float(n) ** c))
    return PointSet(rng.integers(-bound, bound + 1, size=(n, d)).astype(float))


def generate(recipe: dict, n: int, d: int, k: int = 1, j: int = 0, seed: int = 0) -> PointSet:
    """Build an instance from a recipe ``{"kind": ..., **options}``."""
    kind = recipe.get("kind")
    opts = {key: v for key, v in recipe.items() if key != "kind"}
    try:
        if kind == "mixture":
            return gaussian_mixture(n, d, k, seed=seed, **opts)
        if kind == "lines":
            return noisy_lines(n, d, k, seed=seed, **opts)
        if kind == "flat":
            return flat_plus_noise(n, d, j, seed=seed, **opts)
        if kind == "grid":
            return integer_grid(n, d, seed=seed, **opts)
        if kind == "lowerbound":
            return lowerbound_instance(n)[0]
    except TypeError as exc:
        raise InputError(f"bad options for generator {kind!r}: {exc}") from None
    raise InputError(f"unknown generator {kind!r}; expected one of {GENERATORS}")
