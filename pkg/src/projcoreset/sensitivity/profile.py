from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InputError
from ..fitters import FitResult
from ..geometry import PointSet

METHODS = (
    "kcenters-closed-form",
    "subspace-conditioned-basis",
    "empirical-adversarial",
    "exact-oracle",
    "uniform",
)


@dataclass(frozen=True)
class SensitivityProfile:
    """Per-point sensitivity values for an instance.

    ``bounds[i]`` is expressed per unit of weight: it bounds
    ``dist(p_i, F) / dist(P, F)`` where the denominator is the weighted cost.
    ``total`` is therefore ``sum(weights * bounds)``. With unit weights every
    value lies in ``(0, 1]``.

    ``raw_bounds`` keeps the values before clamping (when a closed form
    produced them); ``lower_bound`` marks estimates that under-approximate
    the true sensitivity and must not drive sampling on their own.
    """

    bounds: np.ndarray
    weights: np.ndarray
    method: str
    ids: np.ndarray | None = None
    fit: FitResult | None = None
    reduction_dim: int | None = None
    raw_bounds: np.ndarray | None = None
    loose: bool = False
    lower_bound: bool = False
    floor_mixed: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if b.shape != w.shape:
            raise InputError("bounds and weights must have the same length")
        if self.method not in METHODS:
            raise InputError(f"unknown sensitivity method {self.method!r}")
        if np.any(~np.isfinite(b)) or np.any(b < 0):
            raise InputError("sensitivities must be finite and non-negative")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "weights", w)
        if self.ids is None:
            object.__setattr__(self, "ids", np.arange(len(b)))
        if self.raw_bounds is not None:
            object.__setattr__(self, "raw_bounds", np.asarray(self.raw_bounds, float).reshape(-1))

    @property
    def n(self) -> int:
        return len(self.bounds)

    @property
    def total(self) -> float:
        return float(np.sum(self.weights * self.bounds))

    @property
    def raw_total(self) -> float:
        raw = self.bounds if self.raw_bounds is None else self.raw_bounds
        return float(np.sum(self.weights * raw))

    def replace(self, **changes) -> "SensitivityProfile":
        return replace(self, **changes)

    def to_json(self) -> dict:
        return {
            "ids": self.ids.tolist(),
            "bounds": self.bounds.tolist(),
            "weights": self.weights.tolist(),
            "total": self.total,
            "raw_total": self.raw_total,
            "method": self.method,
            "reduction_dim": self.reduction_dim,
            "flags": {"loose": self.loose, "lower_bound": self.lower_bound, "floor_mixed": self.floor_mixed},
            "fit": None if self.fit is None else self.fit.summary(),
            "extra": self.extra,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SensitivityProfile":
        try:
            flags = obj.get("flags", {})
            return cls(
                bounds=np.asarray(obj["bounds"], float),
                weights=np.asarray(obj["weights"], float),
                method=obj["method"],
                ids=np.asarray(obj["ids"]),
                reduction_dim=obj.get("reduction_dim"),
                loose=bool(flags.get("loose", False)),
                lower_bound=bool(flags.get("lower_bound", False)),
                floor_mixed=bool(flags.get("floor_mixed", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed profile JSON: {exc}") from None


def clamp_bounds(raw: np.ndarray, P: PointSet) -> np.ndarray:
    """Cap each value at ``1 / w_p``: ``w_p dist(p, F) <= dist(P, F)`` always."""
    return np.minimum(raw, 1.0 / P.weights)


def inflate(P: PointSet, residuals: np.ndarray, fit_cost: float, projected_bounds: np.ndarray, alpha: float, c: float):
    """Lift sensitivities of the projected instance back to the original points.

    ``s(p) = c*alpha*dist(p, p')/cost + (1 + c)*alpha**2 * s'(p')`` where
    ``cost`` is the cost of a ``c``-approximate shape. With ``c = 1`` this is
    the optimal-shape bound. When the shape fits exactly (cost 0) the
    projected instance equals the input and ``s'`` is returned as is.
    """
    if fit_cost <= 0:
        return np.array(projected_bounds, dtype=float)
    return c * alpha * residuals / fit_cost + (1.0 + c) * alpha**2 * projected_bounds
