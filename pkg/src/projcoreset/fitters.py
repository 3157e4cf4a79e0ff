"""Approximately optimal shapes, plus exact brute-force fitters for tiny inputs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import CapabilityError, InputError
from .geometry import (
    DistanceConfig,
    JFlat,
    KJFlatSet,
    KLineSet,
    KPointSet,
    PointSet,
    Shape,
    cost,
    squared_distances,
)

DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-9
EXACT_MAX_N = 14


@dataclass(frozen=True)
class FitResult:
    shape: Shape
    cost: float
    approx_factor_c: float
    method: str
    seed: int | None = None
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.approx_factor_c >= 1:
            raise InputError("approx_factor_c must be >= 1")

    def summary(self) -> dict:
        return {
            "cost": self.cost,
            "approx_factor_c": self.approx_factor_c,
            "method": self.method,
            "seed": self.seed,
            "family": self.shape.family,
            "k": self.shape.k,
            "j": self.shape.j,
        }


def _rng(seed, restart: int) -> np.random.Generator:
    return np.random.default_rng([0 if seed is None else int(seed), restart])


def _zpow(sq, z):
    return sq if z == 2.0 else np.sqrt(sq) ** z


# Geometric median -----------------------------------------------------------


def weiszfeld(X, w, start=None, tol=1e-10, max_iter=1000, check_anchors=False):
    """Weighted geometric median of the rows of ``X``.

    Iterates landing on a data point are nudged by 1e-12. With
    ``check_anchors`` the best data point is also considered, which matters
    when the median sits exactly on an input point.
    """
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    y = np.average(X, axis=0, weights=w) if start is None else np.array(start, dtype=float)

    def objective(c):
        return float(np.sum(w * np.linalg.norm(X - c, axis=1)))

    f = objective(y)
    for _ in range(max_iter):
        dist = np.linalg.norm(X - y, axis=1)
        dist = np.where(dist < 1e-12, 1e-12, dist)
        coef = w / dist
        y_new = coef @ X / coef.sum()
        f_new = objective(y_new)
        if f_new > f:
            break
        step = np.linalg.norm(y_new - y)
        y, f_prev, f = y_new, f, f_new
        if step <= tol * max(1.0, np.linalg.norm(y)) or f_prev - f <= tol * 1e-2 * max(f, 1e-300):
            break
    if check_anchors:
        vals = np.array([objective(x) for x in X])
        i = int(np.argmin(vals))
        if vals[i] < f:
            y, f = X[i].copy(), vals[i]
    return y


def _center_update(X, w, current, z, check_anchors=False):
    """Best single center for one cluster (exact for z in {1, 2}, local otherwise)."""
    if z == 2.0:
        return np.average(X, axis=0, weights=w)
    if z == 1.0:
        return weiszfeld(X, w, start=current, check_anchors=check_anchors)

    def f(c):
        diff = X - c
        r = np.sqrt(np.einsum("nd,nd->n", diff, diff))
        slope = w * z * np.where(r > 0, r, 1.0) ** (z - 2) * (r > 0)
        return float(np.sum(w * r**z)), -(slope[:, None] * diff).sum(axis=0)

    res = minimize(f, np.asarray(current, float), jac=True, method="L-BFGS-B")
    return res.x


# k-centers ------------------------------------------------------------------


def _plusplus(X, w, k, z, rng):
    n = X.shape[0]
    centers = [X[rng.choice(n, p=w / w.sum())]]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        score = w * _zpow(closest, z)
        total = score.sum()
        idx = rng.choice(n, p=score / total) if total > 0 else rng.integers(n)
        centers.append(X[idx])
        closest = np.minimum(closest, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _lloyd(P: PointSet, centers, z, max_iter, tol, check_anchors=False):
    X, w = P.coords, P.weights
    centers = np.array(centers, dtype=float)
    k = centers.shape[0]
    history = []
    prev = np.inf
    for _ in range(max_iter):
        sq = squared_distances(X, KPointSet(centers))
        assign = np.argmin(sq, axis=1)
        dmin = _zpow(sq[np.arange(X.shape[0]), assign], z)
        current = float(np.sum(w * dmin))
        history.append(current)
        if prev < np.inf and prev - current <= tol * max(prev, 1e-300):
            break
        prev = current
        new = centers.copy()
        for c in range(k):
            members = assign == c
            if not members.any():
                far = int(np.argmax(dmin))
                new[c] = X[far]
                dmin[far] = 0.0
                continue
            cand = _center_update(X[members], w[members], centers[c], z, check_anchors)
            old_cost = np.sum(w[members] * _zpow(np.sum((X[members] - centers[c]) ** 2, axis=1), z))
            new_cost = np.sum(w[members] * _zpow(np.sum((X[members] - cand) ** 2, axis=1), z))
            if new_cost <= old_cost:
                new[c] = cand
        centers = new
    return centers, history


def fit_kcenters(
    P: PointSet,
    k: int,
    cfg: DistanceConfig,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    approx_factor: float = 2.0,
) -> FitResult:
    """k-means++ seeding followed by Lloyd-style alternation; best of ``restarts``.

    The center step is the weighted mean for ``z = 2``, a Weiszfeld
    geometric median for ``z = 1`` and a local L-BFGS search otherwise.
    ``approx_factor`` is reported as the claimed guarantee; it is not proven.
    """
    if not 1 <= k <= P.n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={P.n}")
    best = None
    for r in range(max(1, restarts)):
        rng = _rng(seed, r)
        init = _plusplus(P.coords, P.weights, k, cfg.z, rng)
        centers, hist = _lloyd(P, init, cfg.z, max_iter, tol)
        c = cost(P, KPointSet(centers), cfg)
        if best is None or c < best[0]:
            best = (c, centers, hist)
    c, centers, hist = best
    return FitResult(KPointSet(centers), c, float(approx_factor), f"lloyd-z{cfg.z:g}", seed, tuple(hist))


# Flats ----------------------------------------------------------------------


def _weighted_flat(X, w, j):
    """Weighted centroid plus the top ``j`` principal directions."""
    mu = np.average(X, axis=0, weights=w)
    Y = np.sqrt(w)[:, None] * (X - mu)
    if j == 0:
        return mu, np.zeros((0, X.shape[1])), np.linalg.svd(Y, compute_uv=False)
    _, s, vt = np.linalg.svd(Y, full_matrices=False)
    if vt.shape[0] < j:
        # fewer points than directions: any orthonormal completion is optimal
        q, _ = np.linalg.qr(np.concatenate([vt, np.eye(X.shape[1])]).T)
        vt = q.T
    return mu, vt[:j], s


def l2_flat_factor(P: PointSet, z: float) -> float:
    """Certified ratio cost_z(L2-optimal flat) / cost_z(optimal flat).

    Power-mean comparison under the probability measure w/W gives
    ``(W / w_min) ** |1 - z/2|``.
    """
    if z == 2.0:
        return 1.0
    return float((P.total_weight / P.weights.min()) ** abs(1.0 - z / 2.0))


def fit_jflat(P: PointSet, j: int, cfg: DistanceConfig) -> FitResult:
    if not 0 <= j <= P.d - 1:
        raise InputError(f"need 0 <= j <= d-1, got j={j}, d={P.d}")
    mu, basis, _ = _weighted_flat(P.coords, P.weights, j)
    shape = JFlat(mu, basis)
    return FitResult(shape, cost(P, shape, cfg), l2_flat_factor(P, cfg.z), f"svd-j{j}", None)


def _seed_flats(X, k, j, rng):
    """Flats through ``j + 1`` random input points (random directions fill gaps)."""
    n, d = X.shape
    anchors = np.empty((k, d))
    bases = np.empty((k, j, d))
    for c in range(k):
        pick = rng.choice(n, size=min(j + 1, n), replace=False)
        anchors[c] = X[pick[0]]
        if j:
            vecs = np.concatenate([X[pick[1:]] - X[pick[0]], rng.normal(size=(j, d))])
            q, _ = np.linalg.qr(vecs.T)
            bases[c] = q[:, :j].T
    return anchors, bases


def _flats_shape(anchors, bases) -> Shape:
    if bases.shape[1] == 1:
        return KLineSet(anchors, bases[:, 0, :])
    return KJFlatSet(tuple(JFlat(a, b) for a, b in zip(anchors, bases)))


def _cluster_cost(X, w, a, b, z):
    diff = X - a
    if b.shape[0]:
        diff = diff - (diff @ b.T) @ b
    return float(np.sum(w * _zpow(np.einsum("nd,nd->n", diff, diff), z)))


def _alternate_flats(P, anchors, bases, j, z, max_iter, tol):
    X, w = P.coords, P.weights
    k = anchors.shape[0]
    history = []
    prev = np.inf
    for _ in range(max_iter):
        shape = KJFlatSet(tuple(JFlat(a, b) for a, b in zip(anchors, bases)))
        sq = squared_distances(X, shape)
        assign = np.argmin(sq, axis=1)
        current = float(np.sum(w * _zpow(sq[np.arange(X.shape[0]), assign], z)))
        history.append(current)
        if prev < np.inf and prev - current <= tol * max(prev, 1e-300):
            break
        prev = current
        for c in range(k):
            members = assign == c
            if members.sum() < j + 1 or members.sum() < 2:
                continue  # degenerate cluster keeps its flat
            a, b, _ = _weighted_flat(X[members], w[members], j)
            if _cluster_cost(X[members], w[members], a, b, z) <= _cluster_cost(
                X[members], w[members], anchors[c], bases[c], z
            ):
                anchors[c], bases[c] = a, b
    return anchors, bases, history


def fit_kflats(
    P: PointSet,
    k: int,
    j: int,
    cfg: DistanceConfig,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    approx_factor: float = 4.0,
) -> FitResult:
    """Alternate nearest-flat assignment with per-cluster SVD refits."""
    if not 1 <= k <= P.n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={P.n}")
    if not 0 <= j <= P.d - 1:
        raise InputError(f"need 0 <= j <= d-1, got j={j}, d={P.d}")
    best = None
    for r in range(max(1, restarts)):
        rng = _rng(seed, r)
        anchors, bases = _seed_flats(P.coords, k, j, rng)
        anchors, bases, hist = _alternate_flats(P, anchors, bases, j, cfg.z, max_iter, tol)
        shape = _flats_shape(anchors, bases)
        c = cost(P, shape, cfg)
        if best is None or c < best[0]:
            best = (c, shape, hist)
    c, shape, hist = best
    return FitResult(shape, c, float(approx_factor), f"kflats-j{j}", seed, tuple(hist))


def fit_klines(P: PointSet, k: int, cfg: DistanceConfig, **opts) -> FitResult:
    if P.d < 2:
        raise InputError("lines need d >= 2")
    return fit_kflats(P, k, 1, cfg, **opts)


def fit(P: PointSet, family: str, cfg: DistanceConfig, k: int = 1, j: int = 0, **opts) -> FitResult:
    """Dispatch to the fitter for ``family``."""
    if family == "kcenters":
        return fit_kcenters(P, k, cfg, **opts)
    if family == "klines":
        return fit_klines(P, k, cfg, **opts)
    if family == "jflat":
        return fit_jflat(P, j, cfg)
    if family == "kjflats":
        return fit_kflats(P, k, j, cfg, **opts)
    raise InputError(f"unknown family {family!r}")


# Exact oracle ---------------------------------------------------------------


def _membership(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


def _subset_costs_kcenters(P: PointSet, z: float):
    X, w = P.coords, P.weights
    M = _membership(P.n) * w  # (S, n) weighted membership
    W = M.sum(axis=1)
    safe = np.where(W > 0, W, 1.0)
    if z == 2.0:
        sx = M @ X
        centers = sx / safe[:, None]
        costs = M @ np.einsum("nd,nd->n", X, X) - np.einsum("sd,sd->s", sx, sx) / safe
        return np.maximum(costs, 0.0), centers
    # batched Weiszfeld, then compare against every member point
    centers = (M @ X) / safe[:, None]
    for _ in range(5000):
        diff = X[None, :, :] - centers[:, None, :]
        r = np.maximum(np.linalg.norm(diff, axis=2), 1e-12)
        coef = M / r
        norm = coef.sum(axis=1)
        new = (coef @ X) / np.where(norm > 0, norm, 1.0)[:, None]
        step = np.abs(new - centers).max()
        centers = new
        if step < 1e-13:
            break
    costs = np.sum(M * np.linalg.norm(X[None, :, :] - centers[:, None, :], axis=2), axis=1)
    D = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    at_points = M @ D  # (S, n): cost of placing the center on point i
    at_points = np.where(M > 0, at_points, np.inf)
    best_pt = np.argmin(at_points, axis=1)
    better = at_points[np.arange(len(W)), best_pt] < costs
    centers[better] = X[best_pt[better]]
    costs = np.where(better, at_points[np.arange(len(W)), best_pt], costs)
    costs[W == 0] = 0.0
    return costs, centers


def _subset_costs_lines(P: PointSet, j: int):
    X, w = P.coords, P.weights
    M = _membership(P.n) * w
    W = M.sum(axis=1)
    safe = np.where(W > 0, W, 1.0)
    sx = M @ X
    mu = sx / safe[:, None]
    scatter = np.einsum("sn,nd,ne->sde", M, X, X) - np.einsum("sd,se->sde", sx, sx) / safe[:, None, None]
    scatter = (scatter + scatter.transpose(0, 2, 1)) / 2
    evals, evecs = np.linalg.eigh(scatter)  # ascending
    d = X.shape[1]
    costs = np.maximum(evals[:, : d - j].sum(axis=1), 0.0)
    bases = evecs[:, :, ::-1][:, :, :j].transpose(0, 2, 1)
    return costs, mu, bases


def _best_partition(costs: np.ndarray, n: int, k: int):
    """Minimum total cost over labelings of n points with k labels."""
    full = 1 << n
    best_val, best_lab = np.inf, None
    total = k**n
    chunk = 1 << 18
    powers = 1 << np.arange(n)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        digits = (idx[:, None] // (k ** np.arange(n))[None, :]) % k
        val = np.zeros(len(idx))
        for t in range(k):
            masks = ((digits == t) * powers).sum(axis=1)
            val += costs[masks]
        i = int(np.argmin(val))
        if val[i] < best_val:
            best_val, best_lab = val[i], digits[i]
    assert full == len(costs)
    return best_val, best_lab


def exact_fit(P: PointSet, family: str, cfg: DistanceConfig, k: int = 1, j: int = 0) -> FitResult:
    """Exact optimum by enumerating every partition into at most ``k`` clusters.

    Supported: kcenters with z in {1, 2}, klines with z = 2, jflat with z = 2.
    """
    if family == "jflat":
        if cfg.z != 2.0:
            raise CapabilityError("exact jflat fitting only for z = 2")
        res = fit_jflat(P, j, cfg)
        return FitResult(res.shape, res.cost, 1.0, "exact-svd", None)
    if family not in ("kcenters", "klines"):
        raise CapabilityError(f"no exact fitter for family {family!r}")
    if family == "kcenters" and cfg.z not in (1.0, 2.0):
        raise CapabilityError("exact kcenters only for z in {1, 2}")
    if family == "klines" and cfg.z != 2.0:
        raise CapabilityError("exact klines only for z = 2")
    if family == "klines" and P.d < 2:
        raise InputError("lines need d >= 2")
    if P.n > EXACT_MAX_N:
        raise CapabilityError(f"exact fitting limited to n <= {EXACT_MAX_N}, got {P.n}")
    if not 1 <= k:
        raise InputError("k must be >= 1")
    k_eff = min(k, P.n)
    if family == "kcenters":
        costs, centers = _subset_costs_kcenters(P, cfg.z)
    else:
        costs, centers, bases = _subset_costs_lines(P, 1)
    _, labels = _best_partition(costs, P.n, k_eff)
    masks = [int(((labels == t) * (1 << np.arange(P.n))).sum()) for t in range(k_eff)]
    used = [m for m in masks if m]
    used += [used[0]] * (k - len(used))
    if family == "kcenters":
        shape = KPointSet(centers[used])
    else:
        dirs = []
        for m in used:
            b = bases[m][0]
            if bin(m).count("1") < 2:
                b = np.eye(P.d)[0]
            dirs.append(b)
        shape = KLineSet(centers[used], np.array(dirs))
    return FitResult(shape, cost(P, shape, cfg), 1.0, f"exact-{family}", None)
