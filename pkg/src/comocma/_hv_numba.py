"""Compiled hot kernels for hypervolume quantities.

Same contract as ``_hv_numpy`` (see that module for the documented
semantics); these are explicit scalar loops under ``numba.njit`` because
the kernels sit inside the per-evaluation fitness path.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _upper_bound(a, v):
    # first index with a[idx] > v
    lo = 0
    hi = a.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def hypervolume_sorted(f1, f2, r1, r2):
    m = f1.shape[0]
    total = 0.0
    for i in range(m):
        nxt = f1[i + 1] if i + 1 < m else r1
        total += (nxt - f1[i]) * (r2 - f2[i])
    return total


@njit(cache=True)
def hvi_sorted(f1, f2, r1, r2, p1, p2):
    if not (p1 < r1 and p2 < r2):
        return 0.0
    m = f1.shape[0]
    j = _upper_bound(f1, p1) - 1
    if j >= 0 and f2[j] <= p2:
        return 0.0
    y = f2[j] if j >= 0 else r2
    total = 0.0
    x = p1
    k = j + 1
    while y > p2:
        x_next = f1[k] if k < m else r1
        total += (x_next - x) * (y - p2)
        if k >= m:
            break
        x = x_next
        y = f2[k]
        k += 1
    return total


@njit(cache=True)
def _wall_distance_sq(r1, r2, p1, p2):
    dx = p1 - r1
    dy = p2 - r2
    if dx <= 0.0 and dy <= 0.0:
        d = -dx if dx > dy else -dy
        return d * d
    ax = dx if dx > 0.0 else 0.0
    ay = dy if dy > 0.0 else 0.0
    return ax * ax + ay * ay


@njit(cache=True)
def epf_distance_sorted(f1, f2, r1, r2, p1, p2):
    m = f1.shape[0]
    if m == 0:
        return math.sqrt(_wall_distance_sq(r1, r2, p1, p2))
    # horizontal ray y=r2, x <= f1[0]
    dx = p1 - f1[0]
    if dx < 0.0:
        dx = 0.0
    dy = p2 - r2
    best = dx * dx + dy * dy
    # leading vertical piece x=f1[0], y in [f2[0], r2]
    dx = p1 - f1[0]
    if p2 > r2:
        dy = p2 - r2
    elif p2 < f2[0]:
        dy = f2[0] - p2
    else:
        dy = 0.0
    d2 = dx * dx + dy * dy
    if d2 < best:
        best = d2
    for i in range(m - 1):
        # step: horizontal y=f2[i], x in [f1[i], f1[i+1]]
        if p1 < f1[i]:
            dx = f1[i] - p1
        elif p1 > f1[i + 1]:
            dx = p1 - f1[i + 1]
        else:
            dx = 0.0
        dy = p2 - f2[i]
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
        # step: vertical x=f1[i+1], y in [f2[i+1], f2[i]]
        dx = p1 - f1[i + 1]
        if p2 > f2[i]:
            dy = p2 - f2[i]
        elif p2 < f2[i + 1]:
            dy = f2[i + 1] - p2
        else:
            dy = 0.0
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
    # closing horizontal piece y=f2[m-1], x in [f1[m-1], r1]
    if p1 < f1[m - 1]:
        dx = f1[m - 1] - p1
    elif p1 > r1:
        dx = p1 - r1
    else:
        dx = 0.0
    dy = p2 - f2[m - 1]
    d2 = dx * dx + dy * dy
    if d2 < best:
        best = d2
    # vertical ray x=r1, y <= f2[m-1]
    dx = p1 - r1
    dy = p2 - f2[m - 1]
    if dy < 0.0:
        dy = 0.0
    d2 = dx * dx + dy * dy
    if d2 < best:
        best = d2
    return math.sqrt(best)


@njit(cache=True)
def uhvi_sorted(f1, f2, r1, r2, p1, p2):
    if p1 < r1 and p2 < r2:
        j = _upper_bound(f1, p1) - 1
        if j < 0 or f2[j] > p2:
            return hvi_sorted(f1, f2, r1, r2, p1, p2), True
    return -epf_distance_sorted(f1, f2, r1, r2, p1, p2), False


@njit(cache=True)
def uhvi_batch_sorted(f1, f2, r1, r2, q1, q2):
    k = q1.shape[0]
    values = np.empty(k)
    improved = np.empty(k, dtype=np.bool_)
    for i in range(k):
        v, b = uhvi_sorted(f1, f2, r1, r2, q1[i], q2[i])
        values[i] = v
        improved[i] = b
    return values, improved
