"""Acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line that is printed in the terminal
summary (and to stdout as it runs).
"""

import time
from fractions import Fraction

import numpy as np
from conftest import ACCEPTANCE_LINES, EMITTED

from projcoreset import (
    DistanceConfig,
    JFlat,
    KLineSet,
    KPointSet,
    PointSet,
    draw,
    evaluate,
    exact_fit,
    exact_sensitivity_oracle,
    fit,
    fit_jflat,
    plan_size,
    sens_kcenters,
    sens_subspace,
    uniform_profile,
)
from projcoreset.geometry import point_distances, random_rotation
from projcoreset.generators import gaussian_mixture
from projcoreset.sensitivity import conditioned_basis, lowerbound_ratios, lowerbound_total

# sample-size constant for the quality criterion: tuned once on this instance
# (giving m = 2048 out of n = 10000) and then frozen
QUALITY_SIZE_CONSTANT = 1e-4
QUALITY_IMBALANCE = 0.3


def report(number: int, ok: bool, detail: str, started: float) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} ({time.perf_counter() - started:.1f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _instance(rng, n, d, weighted):
    X = rng.normal(size=(n, d)) * rng.uniform(0.5, 5)
    if rng.random() < 0.3:
        X[rng.integers(n)] += rng.normal(size=d) * 50  # a far outlier
    w = rng.uniform(0.2, 3.0, size=n) if weighted else None
    return PointSet(X, w)


def test_kcenter_totals_within_closed_form():
    started = time.perf_counter()
    worst = {1.0: 0.0, 2.0: 0.0}
    count = 0
    for seed in range(100):
        rng = np.random.default_rng([1, seed])
        z = 1.0 if seed % 2 == 0 else 2.0
        cfg = DistanceConfig(z)
        if seed % 5 == 0:
            k = [2, 3][seed % 2]
            P = _instance(rng, int(rng.integers(k + 1, 10)), int(rng.integers(1, 4)), seed % 3 == 0)
            res = exact_fit(P, "kcenters", cfg, k=k)
        else:
            k = [2, 3, 5][seed % 3]
            P = _instance(rng, int(rng.integers(50, 2001)), int(rng.integers(1, 21)), seed % 3 == 0)
            res = fit(P, "kcenters", cfg, k=k, restarts=1, max_iter=15, seed=seed)
        prof = sens_kcenters(P, res, cfg, c=1.0)
        limit = 2 * k + 1 if z == 1.0 else 8 * k + 2
        worst[z] = max(worst[z], prof.raw_total - limit)
        count += prof.raw_total <= limit + 1e-9
    ok = count == 100
    report(1, ok, f"{count}/100 totals within 2k+1 (z=1) / 8k+2 (z=2); worst excess z=1 {worst[1.0]:.2e}, "
                  f"z=2 {worst[2.0]:.2e}", started)
    assert ok


def _domination_cases():
    cases = []
    for seed in range(210):
        rng = np.random.default_rng([2, seed])
        kind = seed % 3
        d = int(rng.integers(1, 4))
        weighted = seed % 4 == 0
        if kind == 0 or kind == 1:
            z = 2.0 if kind == 0 else 1.0
            k = int(rng.integers(1, 4))
            n = int(rng.integers(k + 1, 9 if k == 3 else 10))
            P = _instance(rng, n, d, weighted)
            if seed % 7 == 0:  # repeated points
                P = PointSet(np.vstack([P.coords[:-1], P.coords[:1]]), P.weights)
            cases.append((P, "kcenters", z, k, 0))
        else:
            d = max(d, 2)
            j = int(rng.integers(0, min(2, d - 1) + 1))
            P = _instance(rng, int(rng.integers(j + 2, 10)), d, weighted)
            cases.append((P, "jflat", 2.0, 1, j))
    return cases


def test_closed_form_dominates_oracle():
    started = time.perf_counter()
    cases = _domination_cases()
    points = 0
    violations = 0
    worst = -np.inf
    for P, family, z, k, j in cases:
        cfg = DistanceConfig(z)
        if family == "kcenters":
            prof = sens_kcenters(P, exact_fit(P, "kcenters", cfg, k=k), cfg)
        else:
            prof = sens_subspace(P, fit_jflat(P, j, cfg), cfg)
        oracle = exact_sensitivity_oracle(P, family, cfg, k=k, j=j)
        gap = oracle.bounds - prof.bounds
        worst = max(worst, gap.max())
        violations += int(np.sum(gap > 1e-9))
        points += P.n
    ok = violations == 0 and len(cases) >= 200
    report(2, ok, f"{len(cases)} instances, {points} points, {violations} violations; "
                  f"max(oracle - bound) = {worst:.3e}", started)
    assert ok


def test_subspace_total_independent_of_dimension():
    started = time.perf_counter()
    j = 2
    rng = np.random.default_rng(3)
    base = rng.normal(size=(200, 5)) * np.array([10.0, 6.0, 3.0, 1.0, 0.5])
    cfg = DistanceConfig(2.0)
    totals = []
    for d in (5, 50, 500):
        R = random_rotation(d, np.random.default_rng([3, d]))[:5]
        P = PointSet(base @ R)
        totals.append(sens_subspace(P, fit_jflat(P, j, cfg), cfg, c=1.0).raw_total)
    spread = max(totals) - min(totals)
    limit = 2 + 8 * (2 * (j + 1) + 1)
    ok = spread <= 1e-9 and max(totals) <= limit
    report(3, ok, f"totals {['%.12f' % t for t in totals]}, spread {spread:.1e}, limit {limit}", started)
    assert ok


def test_lowerbound_ratio_and_growth():
    started = time.perf_counter()
    ratios = lowerbound_ratios(4096)
    floor_ok = all(r >= Fraction(1, 2 + i) for i, r in enumerate(ratios, start=1))
    diffs = {n: lowerbound_total(2 * n) - lowerbound_total(n) for n in (64, 128, 256, 512, 1024, 2048)}
    growth_ok = all(0.6 <= v <= 0.8 for v in diffs.values())
    ok = floor_ok and growth_ok
    report(4, ok, f"ratio >= 1/(2+i) for all i <= 4096: {floor_ok}; T(2n)-T(n): "
                  + ", ".join(f"{n}:{v:.4f}" for n, v in diffs.items()), started)
    assert ok


def test_conditioned_basis_inequality():
    started = time.perf_counter()
    violations = 0
    checks = 0
    for seed in range(500):
        rng = np.random.default_rng([5, seed])
        n = int(rng.integers(1, 201))
        m = int(rng.integers(1, 11))
        M = rng.normal(size=(n, m)) * rng.uniform(0.1, 10, size=m)
        if seed % 5 == 0 and m > 1:
            M[:, -1] = M[:, 0] * 2.0  # rank deficient
        for z in (1.0, 2.0, 3.0):
            cb = conditioned_basis(M, z)
            U = rng.normal(size=(cb.rank, 1000)) * rng.uniform(0.01, 100)
            AU = cb.A @ U
            norm_z = np.sum(np.abs(AU) ** z, axis=0)
            lhs = np.abs(AU) ** z
            rhs = cb.row_norms_z()[:, None] * cb.beta_cb**z * norm_z[None, :]
            violations += int(np.sum(lhs > rhs * (1 + 1e-9) + 1e-300))
            dual = np.inf if z == 1.0 else z / (z - 1.0)
            violations += int(np.sum(np.linalg.norm(U, ord=dual, axis=0) > cb.beta_cb * norm_z ** (1 / z) * (1 + 1e-9)))
            checks += lhs.size + U.shape[1]
    ok = violations == 0
    report(5, ok, f"{checks} inequality checks over 500 matrices x z in {{1,2,3}}, {violations} violations", started)
    assert ok


def test_coreset_quality_on_mixture():
    started = time.perf_counter()
    cfg = DistanceConfig(2.0)
    P = gaussian_mixture(10_000, 10, 5, seed=0, imbalance=QUALITY_IMBALANCE)
    prof = sens_kcenters(P, fit(P, "kcenters", cfg, k=5, restarts=3), cfg)
    plan = plan_size(0.1, prof, C=QUALITY_SIZE_CONSTANT)
    within = 0
    beats = 0
    errs = []
    for seed in range(20):
        S = draw(P, prof, plan, seed=seed)
        U = draw(P, uniform_profile(P), plan.size, seed=seed)
        e_s = evaluate(P, S, "kcenters", cfg, k=5, seed=seed)["max_error"]
        e_u = evaluate(P, U, "kcenters", cfg, k=5, seed=seed)["max_error"]
        errs.append((e_s, e_u))
        within += e_s <= 0.1
        beats += e_s <= e_u
    ok = within >= 18 and beats >= 16
    report(6, ok, f"m={plan.size} (C={QUALITY_SIZE_CONSTANT}); error <= 0.1 in {within}/20; "
                  f"sensitivity <= uniform in {beats}/20; worst {max(e for e, _ in errs):.4f}", started)
    assert ok


def test_draw_is_unbiased():
    started = time.perf_counter()
    cfg = DistanceConfig(2.0)
    P = gaussian_mixture(2000, 3, 3, seed=7, imbalance=0.3)
    prof = sens_kcenters(P, fit(P, "kcenters", cfg, k=3), cfg)
    rng = np.random.default_rng(7)
    lo, hi = P.coords.min(axis=0), P.coords.max(axis=0)
    shapes = [KPointSet(rng.uniform(lo, hi, size=(k, 3))) for k in (1, 2, 3, 5)]
    shapes += [KLineSet(rng.uniform(lo, hi, size=(k, 3)), rng.normal(size=(k, 3))) for k in (1, 2, 3)]
    shapes += [JFlat(rng.uniform(lo, hi), rng.normal(size=(j, 3))) for j in (0, 1, 2)]
    D = np.stack([point_distances(P.coords, F, cfg) for F in shapes])  # (10, n)
    truth = D @ P.weights
    draws = 2000
    est = np.empty((len(shapes), draws))
    for t in range(draws):
        S = draw(P, prof, 50, seed=t)
        est[:, t] = D[:, S.indices] @ S.weights
    se = est.std(axis=1, ddof=1) / np.sqrt(draws)
    z_scores = np.abs(est.mean(axis=1) - truth) / se
    ok = bool(np.all(z_scores <= 3))
    report(7, ok, f"10 shapes x {draws} draws, max |mean - truth| / SE = {z_scores.max():.2f}", started)
    assert ok


def test_structural_subset_and_positive_weights():
    started = time.perf_counter()
    # fresh draws checked point by point against the source coordinates
    cfg = DistanceConfig(2.0)
    P = gaussian_mixture(500, 4, 3, seed=8)
    prof = sens_kcenters(P, fit(P, "kcenters", cfg, k=3), cfg)
    rows = {tuple(r) for r in P.coords}
    bad = 0
    for seed in range(50):
        S = draw(P, prof, int(np.random.default_rng(seed).integers(1, 600)), seed=seed)
        pts = S.points(P)
        bad += sum(tuple(r) not in rows for r in pts.coords)
        bad += int(np.sum(pts.weights <= 0))
    # every coreset built anywhere in the session
    for idx, w, n_source in EMITTED:
        bad += int(np.sum((idx < 0) | (idx >= n_source))) + int(np.sum(~(w > 0)))
    ok = bad == 0 and len(EMITTED) > 0
    report(8, ok, f"{len(EMITTED)} coresets emitted in this session, {bad} violations", started)
    assert ok

