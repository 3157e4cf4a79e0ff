"""Importance sampling of weighted subset coresets from sensitivity profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .geometry import PointSet
from .sensitivity.profile import SensitivityProfile


@dataclass(frozen=True)
class CoresetPlan:
    """Sample size ``m = ceil(C * (T / eps)**2 * dim)``, capped at ``n``."""

    epsilon: float
    total_T: float
    dim_estimate: int
    size_constant: float
    n: int

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise InputError("epsilon must lie in (0, 1]")
        if self.total_T <= 0 or not math.isfinite(self.total_T):
            raise InputError("total sensitivity must be positive and finite")
        if self.dim_estimate < 1:
            raise InputError("dim_estimate must be >= 1")
        if self.size_constant <= 0:
            raise InputError("size constant must be positive")
        if self.n < 1:
            raise InputError("cannot plan a coreset of an empty set")

    @property
    def uncapped(self) -> int:
        raw = self.size_constant * (self.total_T / self.epsilon) ** 2 * self.dim_estimate
        # T is a float sum; do not let round-off push an integral size up by one
        return max(1, math.ceil(raw * (1 - 1e-12)))

    @property
    def size(self) -> int:
        return min(self.uncapped, self.n)

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "total_T": self.total_T,
            "dim_estimate": self.dim_estimate,
            "size_constant": self.size_constant,
            "n": self.n,
            "size": self.size,
            "uncapped": self.uncapped,
        }


def default_dim(d: int, k: int = 1, j: int = 0) -> int:
    return (j + 1) * d * k


def plan_size(
    epsilon: float,
    profile: SensitivityProfile,
    dim_estimate: int | None = None,
    C: float = 1.0,
    d: int | None = None,
) -> CoresetPlan:
    """Plan the sample size from ``profile.total``.

    Without ``dim_estimate`` the default ``(j+1) d k`` is read off the fit
    stored in the profile, which then must be present.
    """
    if dim_estimate is None:
        fit = profile.fit
        if fit is None:
            raise InputError("dim_estimate is required when the profile carries no fit")
        dim_estimate = default_dim(fit.shape.d if d is None else d, fit.shape.k, fit.shape.j)
    return CoresetPlan(float(epsilon), profile.total, int(dim_estimate), float(C), profile.n)


@dataclass(frozen=True)
class Coreset:
    """``m`` i.i.d. draws from ``P`` (indices repeat) with positive weights."""

    indices: np.ndarray
    weights: np.ndarray
    n_source: int
    seed: int | None = None
    plan: CoresetPlan | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        # structural guarantees; any violation is a bug, not bad input
        assert idx.shape == w.shape, "indices and weights differ in length"
        assert idx.size == 0 or (idx.min() >= 0 and idx.max() < self.n_source), "index outside the source set"
        assert np.all(np.isfinite(w)) and np.all(w > 0), "coreset weights must be positive"
        idx.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.indices.size

    def points(self, P: PointSet, merge: bool = False) -> PointSet:
        """The weighted subset; ``merge`` sums the weights of repeated draws."""
        if P.n != self.n_source:
            raise InputError("coreset was drawn from a set of a different size")
        if not merge:
            return PointSet(P.coords[self.indices], self.weights, P.ids[self.indices])
        uniq, inv = np.unique(self.indices, return_inverse=True)
        return PointSet(P.coords[uniq], np.bincount(inv, weights=self.weights), P.ids[uniq])

    def to_json(self, P: PointSet | None = None) -> dict:
        out = {
            "indices": self.indices.tolist(),
            "weights": self.weights.tolist(),
            "n_source": self.n_source,
            "seed": self.seed,
            "plan": None if self.plan is None else self.plan.to_json(),
        }
        if P is not None:
            out["ids"] = P.ids[self.indices].tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Coreset":
        try:
            return cls(np.asarray(obj["indices"]), np.asarray(obj["weights"], float), int(obj["n_source"]),
                       obj.get("seed"))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed coreset JSON: {exc}") from None


def mix_floor(profile: SensitivityProfile, gamma: float = 0.5) -> SensitivityProfile:
    """Blend with the uniform profile: ``s' = (1 - gamma) s + gamma / W`` per unit weight.

    Every mixed value is at least ``gamma / W`` and at least ``(1 - gamma) s``.
    """
    if not 0 < gamma <= 1:
        raise InputError("gamma must lie in (0, 1]")
    W = float(np.sum(profile.weights))
    mixed = (1.0 - gamma) * profile.bounds + gamma / W
    return profile.replace(bounds=mixed, raw_bounds=None, floor_mixed=True,
                           extra={**profile.extra, "gamma": gamma})


def uniform_profile(P: PointSet) -> SensitivityProfile:
    """``s = 1 / W`` for every point, which makes :func:`draw` sample by weight."""
    return SensitivityProfile(np.full(P.n, 1.0 / P.total_weight), P.weights, "uniform", ids=P.ids)


def _sampling_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def draw(P: PointSet, profile: SensitivityProfile, m: int | CoresetPlan, seed: int = 0) -> Coreset:
    """Draw ``m`` points i.i.d. with ``q_p = w_p s_p / T``, each weighted ``T / (m s_p)``.

    For any fixed shape the weighted cost of the sample is an unbiased
    estimate of ``dist(P, F)``.
    """
    plan = m if isinstance(m, CoresetPlan) else None
    m = plan.size if plan is not None else int(m)
    if m < 1:
        raise InputError("m must be >= 1")
    if profile.n != P.n:
        raise InputError("profile and point set differ in size")
    if profile.lower_bound and not profile.floor_mixed:
        raise InputError("lower-bound sensitivity estimates must be floor-mixed before sampling")
    s = profile.bounds
    if np.any(s <= 0):
        raise InputError("every sensitivity must be positive to sample")
    mass = P.weights * s
    T = float(np.sum(mass))
    if not T > 0:
        raise InputError("total sensitivity is zero")
    idx = _sampling_rng(seed).choice(P.n, size=m, p=mass / T)
    return Coreset(idx, T / (m * s[idx]), P.n, seed=seed, plan=plan)
