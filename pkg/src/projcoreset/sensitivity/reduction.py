"""Express the projected instance in a low-dimensional orthonormal frame."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import DistanceConfig, PointSet, Projection, Shape, project_set


@dataclass(frozen=True)
class ReducedInstance:
    basis: np.ndarray  # (m, d), orthonormal rows
    coords: np.ndarray  # (n, m)
    m1: int
    m2: int

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    def lift(self) -> np.ndarray:
        return self.coords @ self.basis


def _rank(A: np.ndarray) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > s[0] * max(A.shape) * np.finfo(float).eps * 16))


def _extend(rows: list[np.ndarray], candidates: np.ndarray, want: int, tol: float = 1e-10) -> None:
    """Gram-Schmidt ``candidates`` (in order) into ``rows`` until ``want`` rows exist."""
    for v in candidates:
        if len(rows) >= want:
            return
        v = np.array(v, dtype=float)
        scale = np.linalg.norm(v)
        if scale == 0:
            continue
        for _ in range(2):  # re-orthogonalize once for stability
            for r in rows:
                v -= (v @ r) * r
        norm = np.linalg.norm(v)
        if norm > tol * scale:
            rows.append(v / norm)


def _extend_principal(rows: list[np.ndarray], X: np.ndarray, want: int) -> None:
    """Append the principal directions of ``X`` that lie outside ``rows``."""
    if len(rows) >= want or not np.any(X):
        return
    B = np.array(rows).reshape(-1, X.shape[1])
    R = X - (X @ B.T) @ B if len(rows) else X
    _, s, vt = np.linalg.svd(R, full_matrices=False)
    scale = np.abs(X).max()
    _extend(rows, vt[s > 1e-10 * scale * np.sqrt(X.shape[0])], want)


def reduce(P: PointSet, shape: Shape, cfg: DistanceConfig) -> tuple[Projection, ReducedInstance]:
    """Project ``P`` onto ``shape`` and coordinatize the result in ``R^m``.

    ``m = min(m1 + m2, d)`` with ``m1`` the dimension of the linear span of
    the projected points and ``m2 = k(j+1)``. The frame starts with an
    orthonormal basis of the span of the shape's anchors and directions, is
    extended by the principal directions of the residuals ``P - P'``, and is
    finally completed with coordinate axes.
    """
    proj = project_set(P, shape, cfg)
    d = P.d
    m2 = shape.k * (shape.j + 1)
    m1 = _rank(proj.projected.coords)
    m = min(m1 + m2, d)

    rows: list[np.ndarray] = []
    span = shape.span_vectors()
    if np.any(span):
        _, s, vt = np.linalg.svd(span, full_matrices=False)
        keep = s > s[0] * max(span.shape) * np.finfo(float).eps * 16
        _extend(rows, vt[keep], m)
    # the projected points already lie in this span; guard against round-off
    _extend_principal(rows, proj.projected.coords, m)
    _extend_principal(rows, P.coords - proj.projected.coords, m)
    _extend(rows, np.eye(d), m)
    basis = np.array(rows[:m])
    coords = proj.projected.coords @ basis.T
    return proj, ReducedInstance(basis=basis, coords=coords, m1=m1, m2=m2)
