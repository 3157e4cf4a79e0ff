"""Closed-form sensitivity upper bounds for k-centers and j-flats."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapabilityError, InputError
from ..fitters import FitResult
from ..geometry import DistanceConfig, JFlat, KPointSet, PointSet, project_set
from .profile import SensitivityProfile, clamp_bounds, inflate
from .reduction import _rank, reduce


def sens_kcenters(P: PointSet, fit: FitResult, cfg: DistanceConfig, c: float | None = None) -> SensitivityProfile:
    """Sensitivity bounds from a k-centers fit.

    The projected instance has at most ``k`` distinct points, and the copies
    of center ``i`` (total weight ``W_i``) share sensitivity at most 1, so
    each copy is bounded by ``1 / W_i``.
    """
    if not isinstance(fit.shape, KPointSet):
        raise InputError("sens_kcenters needs a k-centers fit")
    c = fit.approx_factor_c if c is None else float(c)
    proj = project_set(P, fit.shape, cfg)
    cluster_weight = np.bincount(proj.assignment, weights=P.weights, minlength=fit.shape.k)
    projected = 1.0 / cluster_weight[proj.assignment]
    raw = inflate(P, proj.residuals, proj.cost, projected, cfg.alpha, c)
    m1 = _rank(fit.shape.centers[np.unique(proj.assignment)])
    return SensitivityProfile(
        bounds=clamp_bounds(raw, P),
        weights=P.weights,
        ids=P.ids,
        method="kcenters-closed-form",
        fit=fit,
        reduction_dim=min(m1 + fit.shape.k, P.d),
        raw_bounds=raw,
        extra={"c": c, "alpha": cfg.alpha, "fit_cost": proj.cost},
    )


@dataclass(frozen=True)
class ConditionedBasis:
    A: np.ndarray
    rank: int
    alpha_cb: float
    beta_cb: float
    z: float
    loose: bool

    def row_norms_z(self) -> np.ndarray:
        """``||A_i||_z ** z`` for every row."""
        return np.sum(np.abs(self.A) ** self.z, axis=1)


def conditioned_basis(M: np.ndarray, z: float) -> ConditionedBasis:
    """Orthonormal column basis of ``M`` with certified conditioning constants.

    For ``z = 2`` the basis is ``(sqrt(rank), 1, 2)``-conditioned. For other
    ``z`` the same basis is used and ``beta`` comes from comparing the
    ``z'``, 2 and ``z`` norms, which is valid but grows with ``n``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    if n < 1:
        raise InputError("M needs at least one row")
    if z < 1:
        raise InputError("conditioned bases need z >= 1")
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise CapabilityError("M is the zero matrix")
    rank = int(np.sum(s > s[0] * max(M.shape) * np.finfo(float).eps * 16))
    A = u[:, :rank]
    alpha_cb = float(np.sum(np.abs(A) ** z) ** (1.0 / z))
    if z == 2.0:
        beta = 1.0
    else:
        inv_dual = 1.0 - 1.0 / z
        beta = rank ** max(0.0, inv_dual - 0.5) * n ** max(0.0, 0.5 - 1.0 / z)
    return ConditionedBasis(A=A, rank=rank, alpha_cb=alpha_cb, beta_cb=float(beta), z=float(z), loose=z != 2.0)


def hyperplane_bounds(coords: np.ndarray, weights: np.ndarray, z: float) -> tuple[np.ndarray, ConditionedBasis]:
    """Per-unit-weight hyperplane sensitivity bounds for points in ``R^m``.

    Rows ``[p, 1]`` scaled by ``w ** (1/z)`` turn weighted hyperplane costs
    into ``||M u||_z ** z``; each row is then bounded by
    ``||A_i||_z ** z * beta ** z`` (divided by its weight).
    """
    M = np.hstack([coords, np.ones((coords.shape[0], 1))]) * weights[:, None] ** (1.0 / z)
    cb = conditioned_basis(M, z)
    return cb.row_norms_z() * cb.beta_cb**z / weights, cb


def sens_subspace(P: PointSet, fit: FitResult, cfg: DistanceConfig, c: float | None = None) -> SensitivityProfile:
    """Sensitivity bounds from a j-flat fit via reduction to hyperplanes in ``R^m``."""
    if not isinstance(fit.shape, JFlat):
        raise InputError("sens_subspace needs a j-flat fit")
    c = fit.approx_factor_c if c is None else float(c)
    if P.n == 1:
        ones = 1.0 / P.weights
        return SensitivityProfile(ones, P.weights, "subspace-conditioned-basis", ids=P.ids, fit=fit,
                                  reduction_dim=0, raw_bounds=ones)
    proj, red = reduce(P, fit.shape, cfg)
    hyp, cb = hyperplane_bounds(red.coords, P.weights, cfg.z)
    raw = inflate(P, proj.residuals, proj.cost, hyp, cfg.alpha, c)
    return SensitivityProfile(
        bounds=clamp_bounds(raw, P),
        weights=P.weights,
        ids=P.ids,
        method="subspace-conditioned-basis",
        fit=fit,
        reduction_dim=red.m,
        raw_bounds=raw,
        loose=cb.loose,
        extra={"c": c, "alpha": cfg.alpha, "fit_cost": proj.cost, "rank": cb.rank, "beta": cb.beta_cb,
               "hyperplane_total": float(np.sum(P.weights * hyp))},
    )
