"""Sensitivity by direct search over shapes.

Both estimators maximize ``dist(p, F) / dist(P, F)`` over a pool of candidate
shapes followed by local ascent, so they return lower bounds on the true
sensitivity. On tiny instances the structured pool makes the search
essentially exhaustive; that is what :func:`exact_sensitivity_oracle` relies on.
"""

from __future__ import annotations

import numpy as np

from ..errors import CapabilityError, InputError
from ..geometry import DistanceConfig, PointSet, Shape
from .profile import SensitivityProfile
from .search import (
    ascend_ratio,
    batch_ratios,
    encode,
    generic_candidates,
    shape_arrays,
    structured_candidates,
)

ORACLE_MAX_N = 12
ORACLE_MAX_D = 3


def _constituent_dim(family: str, j: int) -> int:
    return {"kcenters": 0, "klines": 1}.get(family, j)


def _search(P: PointSet, family, k, j, cfg, anchors, bases, starts, maxfev, rounds):
    X, w = P.coords, P.weights
    R = batch_ratios(X, w, anchors, bases, cfg.z)
    best = R.max(axis=0)
    # a shape receding to infinity sees every point at nearly the same distance
    best = np.maximum(best, 1.0 / P.total_weight)
    if starts > 0:
        kk = 1 if family == "jflat" else k
        cj = _constituent_dim(family, j)
        for i in range(P.n):
            order = np.argsort(-R[:, i], kind="stable")
            seen = 0
            last = None
            for b in order:
                if seen >= starts:
                    break
                if last is not None and np.isclose(R[b, i], last, rtol=1e-12, atol=0):
                    continue
                last = R[b, i]
                seen += 1
                _, val = ascend_ratio(X, w, cfg.z, kk, cj, encode(anchors[b], bases[b]), i, maxfev, rounds)
                best[i] = max(best[i], val)
    return best


def exact_sensitivity_oracle(
    P: PointSet,
    family: str,
    cfg: DistanceConfig,
    k: int = 1,
    j: int = 0,
    seed: int = 0,
    starts: int = 2,
    maxfev: int = 600,
    rounds: int = 2,
) -> SensitivityProfile:
    """Brute-force sensitivities for tiny instances (n <= 12, d <= 3).

    Supported envelope: kcenters with k <= 3 and z in {1, 2}; klines with
    k <= 2 and z = 2; jflat with j <= 2 and z = 2.
    """
    if P.n > ORACLE_MAX_N or P.d > ORACLE_MAX_D:
        raise CapabilityError(f"oracle limited to n <= {ORACLE_MAX_N}, d <= {ORACLE_MAX_D}")
    if family == "kcenters":
        ok = k <= 3 and cfg.z in (1.0, 2.0)
    elif family == "klines":
        ok = k <= 2 and cfg.z == 2.0 and P.d >= 2
    elif family == "jflat":
        ok = j <= 2 and j <= P.d - 1 and cfg.z == 2.0
    else:
        ok = False
    if not ok:
        raise CapabilityError(f"oracle does not support family={family}, k={k}, j={j}, z={cfg.z}")
    rng = np.random.default_rng(seed)
    anchors, bases = structured_candidates(P.coords, P.weights, family, k, j, cfg.z, rng)
    best = _search(P, family, k, j, cfg, anchors, bases, starts, maxfev, rounds)
    return SensitivityProfile(best, P.weights, "exact-oracle", ids=P.ids, lower_bound=True,
                              extra={"candidates": int(anchors.shape[0])})


def sens_empirical(
    P: PointSet,
    family: str,
    cfg: DistanceConfig,
    k: int = 1,
    j: int = 0,
    budget: int = 512,
    seed: int = 0,
    extra_shapes: list[Shape] | None = None,
    structured: bool | None = None,
    ascent_starts: int = 0,
    maxfev: int = 400,
) -> SensitivityProfile:
    """Adversarial lower-bound estimate of every point's sensitivity.

    The pool holds ``budget`` generic shapes, the structured pool when the
    instance is tiny (or ``structured=True``), and any ``extra_shapes``.
    """
    if budget <= 0:
        raise InputError("budget must be positive")
    if family == "kcenters" and k > P.n:
        raise InputError("k must not exceed n")
    cj = _constituent_dim(family, j)
    if cj > P.d - 1 and family != "kcenters":
        raise InputError(f"flats of dimension {cj} need d > {cj}")
    rng = np.random.default_rng(seed)
    X, w = P.coords, P.weights
    parts = [generic_candidates(X, w, family, k, j, cfg.z, rng, budget)]
    if structured is None:
        structured = P.n <= 8
    if structured:
        parts.append(structured_candidates(X, w, family, k, j, cfg.z, rng))
    kk = 1 if family == "jflat" else k
    for shape in extra_shapes or []:
        a, b = shape_arrays(shape)
        if a.shape[1:] != (kk, P.d) or b.shape[2] != cj:
            raise InputError("extra shape does not match the family parameters")
        parts.append((a, b))
    anchors = np.concatenate([p[0] for p in parts])
    bases = np.concatenate([p[1] for p in parts])
    best = _search(P, family, k, j, cfg, anchors, bases, ascent_starts, maxfev, 2)
    return SensitivityProfile(best, P.weights, "empirical-adversarial", ids=P.ids, lower_bound=True,
                              extra={"budget": budget, "candidates": int(anchors.shape[0]), "seed": seed})
