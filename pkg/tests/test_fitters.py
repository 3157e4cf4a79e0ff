from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from projcoreset import (
    CapabilityError,
    DistanceConfig,
    InputError,
    PointSet,
    cost,
    exact_fit,
    fit,
    fit_jflat,
    fit_kcenters,
    fit_kflats,
    fit_klines,
)
from projcoreset.fitters import l2_flat_factor, weiszfeld
from projcoreset.geometry import as_points


def _median_cost(X, w):
    # independent geometric median: Nelder-Mead from every data point
    f = lambda c: float(np.sum(w * np.linalg.norm(X - c, axis=1)))
    best = min(f(x) for x in X)
    for x0 in [np.average(X, axis=0, weights=w), *X]:
        res = minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        best = min(best, res.fun)
    return best


def _brute_kcenters(P, k, z):
    X, w = P.coords, P.weights
    best = np.inf
    for lab in product(range(k), repeat=P.n):
        lab = np.array(lab)
        total = 0.0
        for c in range(k):
            m = lab == c
            if not m.any():
                continue
            if z == 2:
                mu = np.average(X[m], axis=0, weights=w[m])
                total += float(np.sum(w[m] * np.sum((X[m] - mu) ** 2, axis=1)))
            else:
                total += _median_cost(X[m], w[m])
        best = min(best, total)
    return best


def _brute_lines(P, k):
    X, w = P.coords, P.weights
    best = np.inf
    for lab in product(range(k), repeat=P.n):
        lab = np.array(lab)
        total = 0.0
        for c in range(k):
            m = lab == c
            if m.sum() <= 2:
                continue
            mu = np.average(X[m], axis=0, weights=w[m])
            cov = ((X[m] - mu) * w[m][:, None]).T @ (X[m] - mu)
            total += float(np.sum(np.linalg.eigvalsh(cov)[:-1]))
        best = min(best, total)
    return best


def test_four_point_instance_exact_cost():
    P = as_points([(0, 0), (2, 0), (10, 0), (12, 0)])
    res = exact_fit(P, "kcenters", DistanceConfig(2), k=2)
    assert res.cost == pytest.approx(4.0)
    assert res.approx_factor_c == 1.0
    assert fit_kcenters(P, 2, DistanceConfig(2)).cost == pytest.approx(4.0)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("z", [1.0, 2.0])
def test_exact_kcenters_matches_brute_force(seed, z):
    rng = np.random.default_rng(seed)
    P = PointSet(rng.normal(size=(6, 2)), rng.uniform(0.5, 2, size=6))
    res = exact_fit(P, "kcenters", DistanceConfig(z), k=2)
    assert res.cost == pytest.approx(_brute_kcenters(P, 2, z), rel=1e-7)
    assert res.cost == pytest.approx(cost(P, res.shape, DistanceConfig(z)), rel=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_exact_lines_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    P = PointSet(rng.normal(size=(7, 2)))
    res = exact_fit(P, "klines", DistanceConfig(2), k=2)
    assert res.cost == pytest.approx(_brute_lines(P, 2), rel=1e-9, abs=1e-12)


def test_exact_fit_capabilities():
    P = PointSet(np.random.default_rng(0).normal(size=(15, 2)))
    with pytest.raises(CapabilityError):
        exact_fit(P, "kcenters", DistanceConfig(2), k=2)
    with pytest.raises(CapabilityError):
        exact_fit(P.subset(range(5)), "kcenters", DistanceConfig(3), k=2)


def test_weiszfeld_matches_scipy():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 3))
    w = rng.uniform(0.1, 3, size=30)
    c = weiszfeld(X, w)
    f = lambda c: np.sum(w * np.linalg.norm(X - c, axis=1))
    ref = minimize(f, X.mean(axis=0), method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    assert f(c) <= ref.fun + 1e-9


def test_weiszfeld_on_a_data_point():
    # three collinear points: the median is the middle one
    X = np.array([[0.0, 0], [1, 0], [5, 0]])
    assert np.allclose(weiszfeld(X, np.ones(3)), [1, 0], atol=1e-6)


@given(st.integers(0, 10_000), st.sampled_from([1.0, 2.0, 3.0]), st.integers(1, 4))
def test_lloyd_history_never_increases(seed, z, k):
    rng = np.random.default_rng(seed)
    P = PointSet(rng.normal(size=(40, 2)) * 3)
    res = fit_kcenters(P, k, DistanceConfig(z), restarts=1, max_iter=15, seed=seed)
    h = np.array(res.history)
    assert np.all(np.diff(h) <= 1e-9 * h[:-1])
    assert res.cost <= h[0] * (1 + 1e-12)


def test_fit_is_deterministic():
    P = PointSet(np.random.default_rng(2).normal(size=(200, 4)))
    a = fit_kcenters(P, 3, DistanceConfig(1), seed=5)
    b = fit_kcenters(P, 3, DistanceConfig(1), seed=5)
    assert np.array_equal(a.shape.centers, b.shape.centers)
    a = fit_klines(P, 2, DistanceConfig(2), seed=1)
    b = fit_klines(P, 2, DistanceConfig(2), seed=1)
    assert np.array_equal(a.shape.directions, b.shape.directions)


@pytest.mark.parametrize("j", [0, 1, 2])
def test_jflat_cost_is_trailing_spectrum(j):
    rng = np.random.default_rng(j)
    X = rng.normal(size=(50, 4)) * np.array([5.0, 3.0, 1.0, 0.2])
    w = rng.uniform(0.5, 2, size=50)
    res = fit_jflat(PointSet(X, w), j, DistanceConfig(2))
    mu = np.average(X, axis=0, weights=w)
    eig = np.linalg.eigvalsh(((X - mu) * w[:, None]).T @ (X - mu))
    assert res.cost == pytest.approx(eig[: 4 - j].sum(), rel=1e-9)
    assert res.approx_factor_c == 1.0


def test_jflat_factor_for_other_z():
    P = PointSet(np.random.default_rng(0).normal(size=(10, 3)), np.arange(1.0, 11.0))
    assert l2_flat_factor(P, 2.0) == 1.0
    assert l2_flat_factor(P, 1.0) == pytest.approx((55.0 / 1.0) ** 0.5)
    assert fit_jflat(P, 1, DistanceConfig(1)).approx_factor_c == pytest.approx(55.0**0.5)


def test_kflats_recovers_planted_lines():
    rng = np.random.default_rng(4)
    t = rng.uniform(-5, 5, size=(2, 60))
    X = np.vstack([np.c_[t[0], 0.01 * rng.normal(size=60)], np.c_[0.01 * rng.normal(size=60) + 20, t[1]]])
    res = fit_kflats(PointSet(X), 2, 1, DistanceConfig(2), seed=0)
    assert res.cost < 0.1


@pytest.mark.parametrize(
    "family, k, j",
    [("kcenters", 0, 0), ("kcenters", 5, 0), ("jflat", 1, 2), ("kjflats", 1, 3), ("ellipse", 1, 0)],
)
def test_fit_rejects_bad_parameters(family, k, j):
    P = PointSet(np.eye(2))
    with pytest.raises(InputError):
        fit(P, family, DistanceConfig(2), k=k, j=j)


def test_klines_need_two_dimensions():
    with pytest.raises(InputError):
        fit_klines(PointSet(np.arange(5.0)[:, None]), 1, DistanceConfig(2))
