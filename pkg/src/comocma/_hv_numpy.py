"""Vectorized fallback implementations of the hypervolume hot kernels.

All functions operate on a front stored as two parallel float64 arrays
``f1`` (strictly increasing) and ``f2`` (strictly decreasing) whose points
all strictly dominate the reference point ``(r1, r2)``.  Results are
bitwise identical to the compiled versions in ``_hv_numba``: area terms are
accumulated left to right (``np.cumsum``, not the pairwise ``np.sum``) to
reproduce the scalar loops exactly.
"""

from __future__ import annotations

import math

import numpy as np


def hypervolume_sorted(f1: np.ndarray, f2: np.ndarray, r1: float, r2: float) -> float:
    """Area jointly dominated by the front within the reference box.

    Computed as the sum of the rectangles spanned by each point and the
    f1-coordinate of its right neighbour (the reference wall for the last
    point).
    """
    if f1.size == 0:
        return 0.0
    widths = np.diff(f1, append=r1)
    return float(np.cumsum(widths * (r2 - f2))[-1])


def hvi_sorted(f1: np.ndarray, f2: np.ndarray, r1: float, r2: float,
               p1: float, p2: float) -> float:
    """Hypervolume improvement of the point ``(p1, p2)`` over the front.

    Zero iff the point is weakly dominated by a front member or fails to
    strictly dominate the reference point.  The front is not modified.
    """
    if not (p1 < r1 and p2 < r2):
        return 0.0
    m = f1.size
    # last stored index with f1 <= p1; its f2 is the ceiling of the new region
    j = int(np.searchsorted(f1, p1, side="right")) - 1
    if j >= 0 and f2[j] <= p2:
        return 0.0
    ceil = f2[j] if j >= 0 else r2
    xs = np.concatenate(([p1], f1[j + 1:m], [r1]))
    tops = np.concatenate(([ceil], f2[j + 1:m]))
    # rows below p2 clamp to height 0.0, an exact no-op in the running sum,
    # so the result matches the compiled early-exit loop bitwise
    heights = np.maximum(tops - p2, 0.0)
    return float(np.cumsum(np.diff(xs) * heights)[-1])


def _wall_distance_sq(r1: float, r2: float, p1: float, p2: float) -> float:
    # empty front: boundary degenerates to the two reference walls
    # {x = r1, y <= r2} and {y = r2, x <= r1}
    dx = p1 - r1
    dy = p2 - r2
    if dx <= 0.0 and dy <= 0.0:
        d = -dx if dx > dy else -dy
        return d * d
    ax = dx if dx > 0.0 else 0.0
    ay = dy if dy > 0.0 else 0.0
    return ax * ax + ay * ay


def epf_distance_sorted(f1: np.ndarray, f2: np.ndarray, r1: float, r2: float,
                        p1: float, p2: float) -> float:
    """Euclidean distance from ``(p1, p2)`` to the empirical Pareto front.

    The front is the attainment staircase of the stored points extended by
    the two semi-infinite reference-wall rays, so the distance is zero
    exactly on that boundary and positive elsewhere.
    """
    m = f1.size
    if m == 0:
        return math.sqrt(_wall_distance_sq(r1, r2, p1, p2))
    # horizontal pieces: ray y=r2 x<=f1[0]; steps y=f2[i] x in [f1[i], f1[i+1]];
    # closing piece y=f2[m-1] x in [f1[m-1], r1]
    ys = np.concatenate(([r2], f2))
    x0 = np.concatenate(([-np.inf], f1))
    x1 = np.concatenate((f1, [r1]))
    dx = np.maximum(x0 - p1, 0.0) + np.maximum(p1 - x1, 0.0)
    dy = p2 - ys
    d2h = dx * dx + dy * dy
    # vertical pieces: x=f1[0] y in [f2[0], r2]; steps x=f1[i+1] y in
    # [f2[i+1], f2[i]]; ray x=r1 y<=f2[m-1]
    xs = np.concatenate((f1, [r1]))
    ytop = np.concatenate(([r2], f2))
    ybot = np.concatenate((f2, [-np.inf]))
    dxv = p1 - xs
    dyv = np.maximum(ybot - p2, 0.0) + np.maximum(p2 - ytop, 0.0)
    d2v = dxv * dxv + dyv * dyv
    return math.sqrt(min(d2h.min(), d2v.min()))


def uhvi_sorted(f1: np.ndarray, f2: np.ndarray, r1: float, r2: float,
                p1: float, p2: float) -> tuple[float, bool]:
    """Uncrowded hypervolume improvement and the branch taken.

    Returns ``(hvi, True)`` when the point strictly dominates the reference
    point and no front member weakly dominates it, else
    ``(-distance, False)``.  A point equal to a front member is weakly
    dominated and therefore takes the distance branch (value 0).
    """
    if p1 < r1 and p2 < r2:
        j = int(np.searchsorted(f1, p1, side="right")) - 1
        if j < 0 or f2[j] > p2:
            return hvi_sorted(f1, f2, r1, r2, p1, p2), True
    return -epf_distance_sorted(f1, f2, r1, r2, p1, p2), False


def uhvi_batch_sorted(f1: np.ndarray, f2: np.ndarray, r1: float, r2: float,
                      q1: np.ndarray, q2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """uhvi_sorted applied to each query point ``(q1[i], q2[i])``."""
    k = q1.size
    values = np.empty(k)
    improved = np.empty(k, dtype=np.bool_)
    for i in range(k):
        values[i], improved[i] = uhvi_sorted(f1, f2, r1, r2, q1[i], q2[i])
    return values, improved
