"""Batched shape evaluation, candidate pools and local ascent over shapes.

Shapes here are raw arrays rather than :mod:`geometry` objects: ``anchors``
of shape ``(B, k, d)`` and ``bases`` of shape ``(B, k, j, d)``. This keeps
the inner loops of the oracle and of the adversarial evaluator cheap.
"""

from __future__ import annotations

from itertools import combinations, combinations_with_replacement

import numpy as np
from scipy.optimize import minimize

from ..errors import InputError
from ..geometry import JFlat, KJFlatSet, KLineSet, KPointSet, Shape

_CHUNK_ELEMS = 4_000_000


def shape_arrays(shape: Shape) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(shape.anchors)[None], np.asarray(shape.bases)[None]


def arrays_to_shape(anchors: np.ndarray, bases: np.ndarray, family: str) -> Shape:
    if family == "kcenters":
        return KPointSet(anchors)
    if family == "klines":
        return KLineSet(anchors, bases[:, 0, :])
    if family == "jflat":
        return JFlat(anchors[0], bases[0])
    return KJFlatSet(tuple(JFlat(a, b) for a, b in zip(anchors, bases)))


def batch_distances(X: np.ndarray, anchors: np.ndarray, bases: np.ndarray, z: float) -> np.ndarray:
    """``dist(x, F_b)`` for every shape ``b`` and point ``x``; returns ``(B, n)``."""
    B, k, d = anchors.shape
    n = X.shape[0]
    j = bases.shape[2]
    step = max(1, _CHUNK_ELEMS // max(1, n * k * d))
    out = np.empty((B, n))
    for s in range(0, B, step):
        a = anchors[s:s + step]
        diff = X[None, :, None, :] - a[:, None, :, :]
        if j:
            b = bases[s:s + step]
            coef = np.einsum("bnkd,bkjd->bnkj", diff, b)
            diff = diff - np.einsum("bnkj,bkjd->bnkd", coef, b)
        sq = np.einsum("bnkd,bnkd->bnk", diff, diff).min(axis=2)
        out[s:s + step] = sq if z == 2.0 else np.sqrt(sq) ** z
    return out


def batch_ratios(X, w, anchors, bases, z) -> np.ndarray:
    """Per-unit-weight ratios ``dist(p, F) / dist(P, F)`` (0 when the cost is 0)."""
    D = batch_distances(X, anchors, bases, z)
    denom = D @ w
    with np.errstate(invalid="ignore", divide="ignore"):
        R = np.where(denom[:, None] > 0, D / denom[:, None], 0.0)
    return R


# Parameter vectors ----------------------------------------------------------


def encode(anchors: np.ndarray, bases: np.ndarray) -> np.ndarray:
    return np.concatenate([anchors.ravel(), bases.ravel()])


def decode(vec: np.ndarray, k: int, j: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    anchors = vec[: k * d].reshape(k, d)
    if j == 0:
        return anchors, np.zeros((k, 0, d))
    raw = vec[k * d:].reshape(k, j, d)
    if j == 1:
        norms = np.linalg.norm(raw, axis=2, keepdims=True)
        return anchors, raw / np.where(norms > 0, norms, 1.0)
    bases = np.empty_like(raw)
    for c in range(k):
        q, _ = np.linalg.qr(raw[c].T)
        bases[c] = q.T
    return anchors, bases


def _nm(fun, x0, maxfev, scale):
    simplex = np.vstack([x0] + [x0 + scale * e for e in np.eye(len(x0))])
    res = minimize(fun, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "maxfev": maxfev, "xatol": 1e-11, "fatol": 1e-15})
    return res.x, res.fun


def ascend_ratio(X, w, z, k, j, start: np.ndarray, target: int, maxfev: int = 1500, rounds: int = 2):
    """Local maximization of ``dist(p_target, F) / dist(P, F)`` from ``start``."""
    d = X.shape[1]
    scale = max(np.ptp(X, axis=0).max(), 1e-3) * 0.1

    def neg(vec):
        a, b = decode(vec, k, j, d)
        D = batch_distances(X, a[None], b[None], z)[0]
        tot = D @ w
        return -(D[target] / tot) if tot > 0 else 0.0

    x, f = np.array(start, dtype=float), neg(start)
    for r in range(rounds):
        x_new, f_new = _nm(neg, x, maxfev, scale / (10**r))
        if f_new <= f:
            x, f = x_new, f_new
    return x, -f


# Candidate pools ------------------------------------------------------------


def _all_subset_masks(n):
    masks = np.arange(1, 1 << n)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(bool)


def _subset_flats(X, w, members: np.ndarray, j: int):
    """Weighted least-squares ``j``-flat for each boolean row of ``members``."""
    M = members * w
    W = M.sum(axis=1)
    sx = M @ X
    mu = sx / W[:, None]
    if j == 0:
        return mu, np.zeros((len(W), 0, X.shape[1]))
    scatter = np.einsum("sn,nd,ne->sde", M, X, X) - np.einsum("sd,se->sde", sx, sx) / W[:, None, None]
    _, vecs = np.linalg.eigh((scatter + scatter.transpose(0, 2, 1)) / 2)
    bases = vecs[:, :, ::-1][:, :, :j].transpose(0, 2, 1)
    return mu, bases


def _subset_medians(X, w, members):
    """Batched Weiszfeld geometric medians for each subset."""
    M = members * w
    c = (M @ X) / M.sum(axis=1)[:, None]
    for _ in range(2000):
        r = np.maximum(np.linalg.norm(X[None] - c[:, None], axis=2), 1e-12)
        coef = M / r
        new = (coef @ X) / coef.sum(axis=1)[:, None]
        if np.abs(new - c).max() < 1e-12:
            c = new
            break
        c = new
    return c


def _through_points(X, k, j, rng, count):
    """Flats through ``j + 1`` input points each (random completion when short)."""
    n, d = X.shape
    anchors = np.empty((count, k, d))
    bases = np.empty((count, k, j, d))
    for b in range(count):
        for c in range(k):
            pick = rng.choice(n, size=min(j + 1, n), replace=False)
            anchors[b, c] = X[pick[0]]
            if j:
                vecs = np.concatenate([X[pick[1:]] - X[pick[0]], rng.normal(size=(j, d))])
                q, _ = np.linalg.qr(vecs.T)
                bases[b, c] = q[:, :j].T
    return anchors, bases


def _random_shapes(X, k, j, rng, count):
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    d = X.shape[1]
    anchors = lo - 0.5 * span + rng.random((count, k, d)) * 2 * span
    raw = rng.normal(size=(count, k, max(j, 1), d))[:, :, :j]
    bases = np.empty((count, k, j, d))
    for b in range(count):
        for c in range(k):
            if j:
                q, _ = np.linalg.qr(raw[b, c].T)
                bases[b, c] = q.T
    return anchors, bases


def _stack(parts):
    parts = [p for p in parts if p[0].shape[0]]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _combine(pool_a, pool_b, k):
    """All multisets of ``k`` constituents drawn from a single-constituent pool."""
    a, b = pool_a, pool_b
    idx = np.array(list(combinations_with_replacement(range(a.shape[0]), k)))
    return a[idx], b[idx]


def structured_candidates(X, w, family: str, k: int, j: int, z: float, rng, max_shapes: int = 60_000):
    """Shapes that are natural maximizers of a single point's cost share.

    For small ``n`` this enumerates: constituents through input points,
    constituents optimal for every subset of the input, and ``k``-tuples of
    those (including tuples that are optimal for a partition of all points
    but one). Larger pools are subsampled to ``max_shapes``.
    """
    n, d = X.shape
    if family == "jflat":
        k = 1
    cj = 0 if family == "kcenters" else (1 if family == "klines" else j)
    parts = []
    # single constituents through input points
    tuples = np.array(list(combinations(range(n), min(cj + 1, n))))
    if cj == 0:
        singles = (X.copy(), np.zeros((n, 0, d)))
    else:
        anchors = X[tuples[:, 0]]
        bases = np.zeros((len(tuples), cj, d))
        for t, tup in enumerate(tuples):
            vecs = np.concatenate([X[list(tup[1:])] - X[tup[0]], np.eye(d)])
            q, _ = np.linalg.qr(vecs.T)
            bases[t] = q[:, :cj].T
        singles = (anchors, bases)
    # constituents optimal for subsets
    sub_a = sub_b = None
    if n <= 12:
        members = _all_subset_masks(n)
        if cj == 0 and z == 1.0:
            sub_a = _subset_medians(X, w, members)
            sub_b = np.zeros((len(sub_a), 0, d))
        else:
            sub_a, sub_b = _subset_flats(X, w, members, cj)
    if k == 1:
        parts.append((singles[0][:, None], singles[1][:, None]))
        if sub_a is not None:
            parts.append((sub_a[:, None], sub_b[:, None]))
    else:
        parts.append(_combine(singles[0], singles[1], k))
        if sub_a is not None:
            # subset optimum paired with constituents through points
            combos = [(s, t) for s in range(len(sub_a)) for t in range(len(singles[0]))]
            if k == 2 and combos:
                ci = np.array(combos)
                parts.append((
                    np.stack([sub_a[ci[:, 0]], singles[0][ci[:, 1]]], axis=1),
                    np.stack([sub_b[ci[:, 0]], singles[1][ci[:, 1]]], axis=1),
                ))
            # partitions of P \ {p} into k parts
            parts.append(_leave_one_out_partitions(n, k, sub_a, sub_b))
    anchors, bases = _stack(parts)
    if anchors.shape[0] > max_shapes:
        keep = rng.choice(anchors.shape[0], size=max_shapes, replace=False)
        anchors, bases = anchors[np.sort(keep)], bases[np.sort(keep)]
    return anchors, bases


def _canonical_labelings(m: int, k: int) -> np.ndarray:
    """Labelings of ``m`` items with at most ``k`` labels, one per set partition."""
    if m == 0:
        return np.zeros((1, 0), dtype=int)
    idx = np.arange(k**m)
    labels = (idx[:, None] // (k ** np.arange(m - 1, -1, -1))[None, :]) % k
    prev_max = np.maximum.accumulate(np.concatenate([np.full((len(idx), 1), -1), labels[:, :-1]], axis=1), axis=1)
    return labels[np.all(labels <= prev_max + 1, axis=1)]


def _leave_one_out_partitions(n, k, sub_a, sub_b):
    """Tuples of subset optima whose subsets partition ``P`` minus one point."""
    out_a, out_b = [], []
    labels = _canonical_labelings(n - 1, k)
    for p in range(n):
        rest = np.array([i for i in range(n) if i != p])
        if rest.size == 0:
            continue
        masks = np.stack([((labels == t) * (1 << rest)).sum(axis=1) for t in range(k)], axis=1)
        # empty parts reuse the first part's optimum
        masks = np.where(masks > 0, masks, masks[:, :1])
        out_a.append(sub_a[masks - 1])
        out_b.append(sub_b[masks - 1])
    if not out_a:
        return np.zeros((0, k, sub_a.shape[1])), np.zeros((0, k) + sub_b.shape[1:])
    return np.concatenate(out_a), np.concatenate(out_b)


def generic_candidates(X, w, family: str, k: int, j: int, z: float, rng, budget: int):
    """A pool of ``budget`` shapes for instances of any size.

    Mixes shapes through random input points, random shapes over the
    bounding box, and least-squares fits to random subsets.
    """
    if budget <= 0:
        raise InputError("budget must be positive")
    if family == "jflat":
        k = 1
    cj = 0 if family == "kcenters" else (1 if family == "klines" else j)
    n, d = X.shape
    n_through = budget // 2
    n_random = budget // 4
    n_fit = budget - n_through - n_random
    parts = [_through_points(X, k, cj, rng, n_through), _random_shapes(X, k, cj, rng, n_random)]
    fa = np.empty((n_fit, k, d))
    fb = np.empty((n_fit, k, cj, d))
    for b in range(n_fit):
        size = int(rng.integers(1, n + 1))
        members = np.zeros((k, n), dtype=bool)
        pick = rng.choice(n, size=size, replace=False)
        members[rng.integers(0, k, size=size), pick] = True
        for c in range(k):
            if not members[c].any():
                members[c, rng.integers(n)] = True
        a, bb = _subset_flats(X, w, members, cj)
        fa[b], fb[b] = a, bb
    parts.append((fa, fb))
    return _stack(parts)
