"""Empirical coreset quality: relative cost error over an ensemble of shapes.

The reported maximum is a lower bound on the true supremum over all shapes.
"""

from __future__ import annotations

import numpy as np

from .coreset import Coreset
from .errors import InputError
from .fitters import fit
from .geometry import FAMILIES, DistanceConfig, PointSet
from .io import shape_to_json
from .sensitivity.search import (
    _nm,
    _random_shapes,
    arrays_to_shape,
    batch_distances,
    decode,
    encode,
    shape_arrays,
)

QUANTILES = (0.5, 0.9, 0.99)


def _family_dims(family: str, k: int, j: int) -> tuple[int, int]:
    if family not in FAMILIES:
        raise InputError(f"unknown family {family!r}")
    if family == "kcenters":
        return k, 0
    if family == "klines":
        return k, 1
    if family == "jflat":
        return 1, j
    return k, j


def relative_errors(P: PointSet, S: PointSet, anchors, bases, z: float) -> np.ndarray:
    """``|dist(P, F) - dist(S, F)| / dist(P, F)`` per shape (0/0 counts as 0)."""
    cp = batch_distances(P.coords, anchors, bases, z) @ P.weights
    cs = batch_distances(S.coords, anchors, bases, z) @ S.weights
    gap = np.abs(cp - cs)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(cp > 0, gap / np.where(cp > 0, cp, 1.0), np.where(gap > 0, np.inf, 0.0))


def _subset_fits(P, family, k, j, cfg, rng, count):
    kk, cj = _family_dims(family, k, j)
    need = kk * (cj + 1)
    out = []
    for _ in range(count):
        size = int(rng.integers(min(need, P.n), min(P.n, max(need, 500)) + 1))
        sub = P.subset(rng.choice(P.n, size=size, replace=False))
        if family == "kcenters" and sub.n < k:
            continue
        res = fit(sub, family, cfg, k=k, j=j, restarts=1, max_iter=20, seed=int(rng.integers(2**31)))
        out.append(shape_arrays(res.shape))
    return out


def _ascend_error(P, S, z, kk, cj, start, maxfev, scale):
    d = P.d

    def neg(vec):
        a, b = decode(vec, kk, cj, d)
        err = relative_errors(P, S, a[None], b[None], z)[0]
        return -min(err, 1e12)

    x, f = _nm(neg, start, maxfev, scale)
    return x, -f


def evaluate(
    P: PointSet,
    S: PointSet | Coreset,
    family: str,
    cfg: DistanceConfig,
    k: int = 1,
    j: int = 0,
    n_random: int = 100,
    n_adversarial: int = 3,
    seed: int = 0,
    n_subset: int = 8,
    maxfev: int = 300,
    include_fit: bool = True,
) -> dict:
    """Relative error of ``S`` against ``P`` over random, fitted and adversarial shapes."""
    if isinstance(S, Coreset):
        S = S.points(P, merge=True)
    if S.d != P.d:
        raise InputError("coreset and input live in different dimensions")
    kk, cj = _family_dims(family, k, j)
    if cj >= P.d:
        raise InputError(f"flats of dimension {cj} need d > {cj}")
    rng = np.random.default_rng(seed)
    pools = {"random": [_random_shapes(P.coords, kk, cj, rng, n_random)] if n_random > 0 else []}
    pools["fitted"] = _subset_fits(P, family, k, j, cfg, rng, n_subset)
    if include_fit and (family != "kcenters" or P.n >= k):
        pools["fitted"].append(shape_arrays(fit(P, family, cfg, k=k, j=j, restarts=2, seed=seed).shape))

    errors, shapes, source = [], [], []
    for name, parts in pools.items():
        for a, b in parts:
            errors.append(relative_errors(P, S, a, b, cfg.z))
            shapes.extend(zip(a, b))
            source.extend([name] * a.shape[0])
    errs = np.concatenate(errors) if errors else np.zeros(0)

    if n_adversarial > 0 and errs.size:
        scale = max(float(np.ptp(P.coords, axis=0).max()), 1e-3) * 0.05
        for b in np.argsort(-errs, kind="stable")[:n_adversarial]:
            x, val = _ascend_error(P, S, cfg.z, kk, cj, encode(*shapes[b]), maxfev, scale)
            errs = np.append(errs, val)
            shapes.append(decode(x, kk, cj, P.d))
            source.append("adversarial")

    if not errs.size:
        raise InputError("empty shape ensemble")
    worst = int(np.argmax(errs))
    by_source = {}
    for name in ("random", "fitted", "adversarial"):
        sel = [e for e, s in zip(errs, source) if s == name]
        by_source[name] = {"count": len(sel), "max_error": float(max(sel)) if sel else None}
    return {
        "max_error": float(errs[worst]),
        "mean_error": float(np.mean(errs)),
        "quantiles": {str(q): float(np.quantile(errs, q)) for q in QUANTILES},
        "n_shapes": int(errs.size),
        "by_source": by_source,
        "worst_source": source[worst],
        "worst_shape": shape_to_json(arrays_to_shape(*shapes[worst], family)),
        "seed": seed,
        "sup_is_lower_bound": True,
    }
