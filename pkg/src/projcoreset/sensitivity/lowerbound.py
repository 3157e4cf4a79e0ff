"""A planar k-line instance whose total sensitivity grows like ``log n``.

Points ``p_i = (2**-(i-1), 0)`` for ``i = 1..n``; shape ``F_i`` is the y-axis
together with the horizontal line ``y = 2**-i``. Under the Euclidean
distance (z = 1), ``F_i`` alone certifies that ``p_i`` has sensitivity
above ``1 / (2 + i)``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from fractions import Fraction

import numpy as np

from ..errors import InputError
from ..geometry import KLineSet, PointSet


def lowerbound_instance(n: int) -> tuple[PointSet, list[KLineSet]]:
    """Float version of the instance. Coordinates underflow past ``n`` ~ 1070."""
    if n < 2:
        raise InputError("the construction needs n >= 2")
    xs = np.ldexp(1.0, -np.arange(n))  # 2**-(i-1)
    P = PointSet(np.column_stack([xs, np.zeros(n)]))
    shapes = [
        KLineSet(np.array([[0.0, 0.0], [0.0, math.ldexp(1.0, -i)]]), np.array([[0.0, 1.0], [1.0, 0.0]]))
        for i in range(1, n + 1)
    ]
    return P, shapes


def lowerbound_ratios(n: int) -> list[Fraction]:
    """Exact ``dist(p_i, F_i) / dist(P, F_i)`` for ``i = 1..n``.

    Coordinates are scaled by ``2**n`` to integers. Every point lies on the
    x-axis, so its distance to ``F_i`` is ``min(x, h_i)``; sums over the
    sorted x-coordinates use prefix sums.
    """
    if n < 2:
        raise InputError("the construction needs n >= 2")
    xs = [1 << (n - i + 1) for i in range(1, n + 1)]
    asc = sorted(xs)
    prefix = [0]
    for v in asc:
        prefix.append(prefix[-1] + v)
    out = []
    for i in range(1, n + 1):
        h = 1 << (n - i)
        below = bisect_right(asc, h)
        total = prefix[below] + h * (n - below)
        out.append(Fraction(min(xs[i - 1], h), total))
    return out


def lowerbound_table(n: int) -> list[dict]:
    rows = []
    running = 0.0
    harmonic = 0.0
    for i, r in enumerate(lowerbound_ratios(n), start=1):
        running += float(r)
        harmonic += 1.0 / (2 + i)
        rows.append({
            "i": i,
            "ratio": float(r),
            "floor": 1.0 / (2 + i),
            "exceeds_floor": r > Fraction(1, 2 + i),
            "cumulative": running,
            "harmonic_floor": harmonic,
        })
    return rows


def lowerbound_total(n: int) -> float:
    """``T(n) = sum_i dist(p_i, F_i) / dist(P, F_i)``, a lower bound on total sensitivity."""
    return math.fsum(float(r) for r in lowerbound_ratios(n))
