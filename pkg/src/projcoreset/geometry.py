"""Points, shapes and z-power Euclidean distances.

Every shape is a union of affine flats. A flat is stored as an anchor point
plus an orthonormal basis of its direction space (``j x d``, possibly empty),
so the distance to any constituent is the norm of the residual after
orthogonal projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InputError

def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _orthonormal_rows(basis: np.ndarray, what: str) -> np.ndarray:
    """Orthonormalize the rows of ``basis`` while keeping their span."""
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.shape[0] == 0:
        return basis
    q, r = np.linalg.qr(basis.T)
    diag = np.abs(np.diag(r))
    scale = max(np.abs(basis).max(), 1.0)
    if diag.min() <= 1e-12 * scale:
        raise InputError(f"{what} is rank deficient")
    # fix signs so an already-orthonormal basis comes back unchanged
    q = q * np.sign(np.diag(r))
    return q.T


@dataclass(frozen=True)
class PointSet:
    """The instance: ``n`` points in ``R^d`` with positive weights."""

    coords: np.ndarray
    weights: np.ndarray | None = None
    ids: np.ndarray | None = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[None, :]
        if coords.ndim != 2 or coords.shape[0] < 1 or coords.shape[1] < 1:
            raise InputError(f"coords must be an n x d matrix with n, d >= 1, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise InputError("coordinates must be finite")
        n = coords.shape[0]
        if self.weights is None:
            weights = np.ones(n)
        else:
            weights = np.asarray(self.weights, dtype=float).reshape(-1)
            if weights.shape != (n,):
                raise InputError(f"expected {n} weights, got {weights.shape[0]}")
            if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
                raise InputError("weights must be finite and strictly positive")
        ids = np.arange(n) if self.ids is None else np.asarray(self.ids).reshape(-1)
        if ids.shape != (n,):
            raise InputError(f"expected {n} ids, got {ids.shape[0]}")
        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "weights", _frozen(weights))
        ids = np.array(ids, copy=True)
        ids.setflags(write=False)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    @property
    def unit_weights(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    def subset(self, idx) -> "PointSet":
        idx = np.asarray(idx)
        return PointSet(self.coords[idx], self.weights[idx], self.ids[idx])

    def with_weights(self, weights) -> "PointSet":
        return PointSet(self.coords, weights, self.ids)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class DistanceConfig:
    """``dist(p, q) = ||p - q||_2 ** z``.

    ``alpha`` is the relaxed-triangle constant: ``2**(z-1)`` for ``z >= 1``
    and 1 on the experimental ``z < 1`` branch.
    """

    z: float = 2.0
    experimental: bool = False

    def __post_init__(self):
        z = float(self.z)
        if not np.isfinite(z) or z <= 0:
            raise InputError(f"z must be positive, got {self.z}")
        if z < 1 and not self.experimental:
            raise InputError("z < 1 requires experimental=True")
        object.__setattr__(self, "z", z)

    @property
    def alpha(self) -> float:
        return 2.0 ** (self.z - 1.0) if self.z >= 1 else 1.0


# Shapes -------------------------------------------------------------------


class _FlatUnion:
    """Shared machinery: a shape seen as ``k`` flats of a common dimension ``j``."""

    family: str = ""

    @property
    def anchors(self) -> np.ndarray:  # (k, d)
        raise NotImplementedError

    @property
    def bases(self) -> np.ndarray:  # (k, j, d)
        raise NotImplementedError

    @property
    def k(self) -> int:
        return self.anchors.shape[0]

    @property
    def j(self) -> int:
        return self.bases.shape[1]

    @property
    def d(self) -> int:
        return self.anchors.shape[1]

    def span_vectors(self) -> np.ndarray:
        """Vectors whose linear span contains every constituent (``k(j+1)`` rows)."""
        return np.concatenate([self.anchors, self.bases.reshape(-1, self.d)], axis=0)

    def transformed(self, rotation: np.ndarray, shift: np.ndarray | None = None):
        """Apply ``x -> rotation @ x + shift`` (rotation must be orthogonal)."""
        rotation = np.asarray(rotation, dtype=float)
        shift = np.zeros(rotation.shape[0]) if shift is None else np.asarray(shift, float)
        anchors = self.anchors @ rotation.T + shift
        bases = self.bases @ rotation.T
        return _rebuild(self, anchors, bases)


@dataclass(frozen=True)
class KPointSet(_FlatUnion):
    centers: np.ndarray
    family = "kcenters"

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if c.shape[0] < 1 or not np.all(np.isfinite(c)):
            raise InputError("KPointSet needs at least one finite center")
        object.__setattr__(self, "centers", _frozen(c))

    @property
    def anchors(self):
        return self.centers

    @property
    def bases(self):
        return np.zeros((self.centers.shape[0], 0, self.centers.shape[1]))


@dataclass(frozen=True)
class KLineSet(_FlatUnion):
    """``k`` lines, each an anchor point and a unit direction."""

    points: np.ndarray
    directions: np.ndarray
    family = "klines"

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        u = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if p.shape != u.shape or p.shape[0] < 1:
            raise InputError("line anchors and directions must both be k x d with k >= 1")
        norms = np.linalg.norm(u, axis=1)
        if np.any(norms == 0) or not np.all(np.isfinite(u)) or not np.all(np.isfinite(p)):
            raise InputError("line directions must be finite and non-zero")
        u = u / norms[:, None]
        object.__setattr__(self, "points", _frozen(p))
        object.__setattr__(self, "directions", _frozen(u))

    @property
    def anchors(self):
        return self.points

    @property
    def bases(self):
        return self.directions[:, None, :]


@dataclass(frozen=True)
class JFlat(_FlatUnion):
    """An affine ``j``-flat: ``anchor + span(rows of basis)``."""

    anchor: np.ndarray
    basis: np.ndarray
    family = "jflat"

    def __post_init__(self):
        a = np.asarray(self.anchor, dtype=float).reshape(-1)
        b = np.asarray(self.basis, dtype=float)
        if b.size == 0:
            b = np.zeros((0, a.shape[0]))
        b = np.atleast_2d(b)
        if b.shape[1] != a.shape[0]:
            raise InputError("flat basis must have the anchor's dimension")
        if b.shape[0] > a.shape[0] - 1:
            raise InputError("flat dimension j must satisfy j <= d - 1")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InputError("flat must be finite")
        object.__setattr__(self, "anchor", _frozen(a))
        object.__setattr__(self, "basis", _frozen(_orthonormal_rows(b, "flat basis")))

    @property
    def anchors(self):
        return self.anchor[None, :]

    @property
    def bases(self):
        return self.basis[None, :, :]


@dataclass(frozen=True)
class KJFlatSet(_FlatUnion):
    flats: tuple = field(default_factory=tuple)
    family = "kjflats"

    def __post_init__(self):
        flats = tuple(self.flats)
        if not flats:
            raise InputError("KJFlatSet needs at least one flat")
        if len({(f.j, f.d) for f in flats}) != 1:
            raise InputError("all flats must share j and d")
        object.__setattr__(self, "flats", flats)

    @property
    def anchors(self):
        return np.stack([f.anchor for f in self.flats])

    @property
    def bases(self):
        return np.stack([f.basis for f in self.flats])


Shape = Union[KPointSet, KLineSet, JFlat, KJFlatSet]

FAMILIES = ("kcenters", "klines", "jflat", "kjflats")


def _rebuild(shape, anchors: np.ndarray, bases: np.ndarray):
    if isinstance(shape, KPointSet):
        return KPointSet(anchors)
    if isinstance(shape, KLineSet):
        return KLineSet(anchors, bases[:, 0, :])
    if isinstance(shape, JFlat):
        return JFlat(anchors[0], bases[0])
    return KJFlatSet(tuple(JFlat(a, b) for a, b in zip(anchors, bases)))


# Distances ----------------------------------------------------------------


def _check_dims(coords: np.ndarray, shape: Shape) -> None:
    if coords.shape[-1] != shape.d:
        raise InputError(f"dimension mismatch: points in R^{coords.shape[-1]}, shape in R^{shape.d}")


def _residuals(coords: np.ndarray, shape: Shape):
    """Per-constituent residual vectors and projection coefficients, (n, k, d) and (n, k, j)."""
    diff = coords[:, None, :] - shape.anchors[None, :, :]
    bases = shape.bases
    if bases.shape[1] == 0:
        return diff, np.zeros(diff.shape[:2] + (0,))
    coef = np.einsum("nkd,kjd->nkj", diff, bases)
    return diff - np.einsum("nkj,kjd->nkd", coef, bases), coef


def squared_distances(coords: np.ndarray, shape: Shape) -> np.ndarray:
    """Squared Euclidean distance of each point to each constituent, (n, k)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    _check_dims(coords, shape)
    res, _ = _residuals(coords, shape)
    return np.einsum("nkd,nkd->nk", res, res)


def point_distances(coords: np.ndarray, shape: Shape, cfg: DistanceConfig) -> np.ndarray:
    """``dist(p, F)`` for every row ``p`` of ``coords``."""
    sq = squared_distances(coords, shape).min(axis=1)
    return _zpow(sq, cfg.z)


def _zpow(sq: np.ndarray, z: float) -> np.ndarray:
    if z == 2.0:
        return sq
    return np.sqrt(sq) ** z


def dist_point_shape(p, shape: Shape, cfg: DistanceConfig) -> float:
    p = np.asarray(p, dtype=float).reshape(-1)
    return float(point_distances(p[None, :], shape, cfg)[0])


@dataclass(frozen=True)
class Projection:
    projected: PointSet
    assignment: np.ndarray
    residuals: np.ndarray

    @property
    def cost(self) -> float:
        return float(np.sum(self.projected.weights * self.residuals))


def project_set(P: PointSet, shape: Shape, cfg: DistanceConfig) -> Projection:
    """Project every point onto its nearest constituent (lowest index wins ties)."""
    _check_dims(P.coords, shape)
    res, coef = _residuals(P.coords, shape)
    sq = np.einsum("nkd,nkd->nk", res, res)
    assign = np.argmin(sq, axis=1)
    rows = np.arange(P.n)
    foot = shape.anchors[assign]
    if shape.j > 0:
        foot = foot + np.einsum("nj,njd->nd", coef[rows, assign], shape.bases[assign])
    residuals = _zpow(sq[rows, assign], cfg.z)
    return Projection(
        projected=PointSet(foot, P.weights, P.ids),
        assignment=_frozen(assign).astype(int),
        residuals=_frozen(residuals),
    )


def cost(P: PointSet, shape: Shape, cfg: DistanceConfig) -> float:
    """Weighted sum ``sum_p w_p dist(p, F)``."""
    return float(np.sum(P.weights * point_distances(P.coords, shape, cfg)))


# Parameter vectors (used by local search over shapes) ---------------------


def shape_to_vector(shape: Shape) -> np.ndarray:
    return np.concatenate([shape.anchors.ravel(), shape.bases.ravel()])


def shape_from_vector(vec: np.ndarray, family: str, k: int, j: int, d: int) -> Shape:
    """Inverse of :func:`shape_to_vector`; bases are re-orthonormalized."""
    vec = np.asarray(vec, dtype=float)
    anchors = vec[: k * d].reshape(k, d)
    if family == "kcenters":
        return KPointSet(anchors)
    bases = vec[k * d:].reshape(k, j, d)
    if family == "klines":
        return KLineSet(anchors, bases[:, 0, :])
    if family == "jflat":
        return JFlat(anchors[0], bases[0])
    if family == "kjflats":
        return KJFlatSet(tuple(JFlat(a, b) for a, b in zip(anchors, bases)))
    raise InputError(f"unknown family {family!r}")


def family_of(shape: Shape) -> str:
    return shape.family


def sample_on_shape(shape: Shape, count: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """Random points lying on the shape (uniform constituent, Gaussian coefficients)."""
    which = rng.integers(0, shape.k, size=count)
    pts = shape.anchors[which].copy()
    if shape.j > 0:
        coef = rng.normal(scale=spread, size=(count, shape.j))
        pts += np.einsum("nj,njd->nd", coef, shape.bases[which])
    return pts


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


def as_points(rows: Sequence[Sequence[float]]) -> PointSet:
    return PointSet(np.asarray(rows, dtype=float))
