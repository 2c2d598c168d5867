"""Bi-objective dominance, sorted non-dominated fronts and hypervolume
quantities.

The central type is :class:`ParetoFront`: a set of mutually non-dominated
objective vectors, each strictly dominating the reference point, kept
sorted by the first objective.  On top of it sit the hypervolume, the
hypervolume improvement (HVI) of a candidate point, the Euclidean distance
to the empirical Pareto front (the attainment staircase extended by the
two reference-wall rays) and the uncrowded hypervolume improvement (UHVI),
which is the HVI for non-dominated candidates and minus the distance for
dominated ones.  The UHVI is continuous: both branches vanish on the
empirical front.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from collections import namedtuple
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from ._backend import BACKEND, kernels

__all__ = [
    "BACKEND",
    "ObjectivePair",
    "ReferencePoint",
    "UhviBranch",
    "UhviValue",
    "InsertReport",
    "weakly_dominates",
    "dominates",
    "ParetoFront",
]


class UhviBranch(Enum):
    """Which case of the UHVI applied to a candidate."""

    IMPROVEMENT = "improvement"
    DISTANCE_PENALTY = "distance_penalty"


class ObjectivePair(namedtuple("ObjectivePair", ("f1", "f2"))):
    """An objective vector; both coordinates must be finite."""

    __slots__ = ()

    def __new__(cls, f1, f2):
        f1 = float(f1)
        f2 = float(f2)
        if not (math.isfinite(f1) and math.isfinite(f2)):
            raise ValueError("objective values must be finite, got (%r, %r)"
                             % (f1, f2))
        return super().__new__(cls, f1, f2)


class ReferencePoint(namedtuple("ReferencePoint", ("r1", "r2"))):
    """Upper corner of the hypervolume box; both coordinates finite."""

    __slots__ = ()

    def __new__(cls, r1, r2):
        r1 = float(r1)
        r2 = float(r2)
        if not (math.isfinite(r1) and math.isfinite(r2)):
            raise ValueError("reference point must be finite, got (%r, %r)"
                             % (r1, r2))
        return super().__new__(cls, r1, r2)


class UhviValue(namedtuple("UhviValue", ("value", "branch"))):
    __slots__ = ()

    @property
    def is_improvement(self) -> bool:
        return self.branch is UhviBranch.IMPROVEMENT


InsertReport = namedtuple("InsertReport", ("accepted", "removed_count"))


def _unpack(point) -> tuple[float, float]:
    a, b = point
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("objective values must be finite, got (%r, %r)" % (a, b))
    return a, b


def weakly_dominates(a, b) -> bool:
    """True iff ``a`` is at least as good as ``b`` in both objectives."""
    a1, a2 = _unpack(a)
    b1, b2 = _unpack(b)
    return a1 <= b1 and a2 <= b2


def dominates(a, b) -> bool:
    """True iff ``a`` weakly dominates ``b`` and is strictly better somewhere."""
    a1, a2 = _unpack(a)
    b1, b2 = _unpack(b)
    return a1 <= b1 and a2 <= b2 and (a1 < b1 or a2 < b2)


class ParetoFront:
    """Sorted set of mutually non-dominated points inside the reference box.

    Stored points appear with strictly increasing ``f1`` and strictly
    decreasing ``f2``.  ``insert`` keeps the invariant: candidates that do
    not strictly dominate the reference point or that are weakly dominated
    by a stored point are rejected, and accepting a candidate removes every
    stored point it weakly dominates.
    """

    __slots__ = ("_r1", "_r2", "_f1", "_f2", "_cache")

    def __init__(self, ref_point, points: Iterable = ()):
        r1, r2 = _unpack(ref_point)
        self._r1 = r1
        self._r2 = r2
        self._f1: list[float] = []
        self._f2: list[float] = []
        self._cache: tuple[np.ndarray, np.ndarray] | None = None
        for p in points:
            self.insert(p)

    @property
    def ref_point(self) -> ReferencePoint:
        return ReferencePoint(self._r1, self._r2)

    def __len__(self) -> int:
        return len(self._f1)

    def __iter__(self):
        for a, b in zip(self._f1, self._f2):
            yield ObjectivePair(a, b)

    def __repr__(self) -> str:
        return "ParetoFront(ref=(%g, %g), size=%d)" % (
            self._r1, self._r2, len(self._f1))

    def points(self) -> np.ndarray:
        """Stored points as an (m, 2) array, sorted by f1."""
        return np.column_stack(self._arrays()) if self._f1 else np.empty((0, 2))

    def copy(self) -> "ParetoFront":
        dup = ParetoFront((self._r1, self._r2))
        dup._f1 = list(self._f1)
        dup._f2 = list(self._f2)
        return dup

    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._cache is None:
            self._cache = (np.array(self._f1, dtype=float),
                           np.array(self._f2, dtype=float))
        return self._cache

    def insert(self, point) -> InsertReport:
        """Try to add ``point``; returns whether it was stored and how many
        stored points it displaced."""
        p1, p2 = _unpack(point)
        if not (p1 < self._r1 and p2 < self._r2):
            return InsertReport(False, 0)
        f1, f2 = self._f1, self._f2
        j = bisect_right(f1, p1) - 1
        if j >= 0 and f2[j] <= p2:
            # the prefix f1 <= p1 has its lowest f2 at index j
            return InsertReport(False, 0)
        i0 = bisect_left(f1, p1)
        k = i0
        m = len(f1)
        while k < m and f2[k] >= p2:
            k += 1
        removed = k - i0
        if removed:
            del f1[i0:k]
            del f2[i0:k]
        f1.insert(i0, p1)
        f2.insert(i0, p2)
        self._cache = None
        return InsertReport(True, removed)

    def insert_many(self, points: Iterable) -> int:
        """Insert each point in order; returns the number accepted."""
        accepted = 0
        for p in points:
            if self.insert(p).accepted:
                accepted += 1
        return accepted

    def hypervolume(self) -> float:
        f1, f2 = self._arrays()
        return kernels.hypervolume_sorted(f1, f2, self._r1, self._r2)

    def hvi(self, point) -> float:
        """Hypervolume improvement of ``point``; zero iff it is weakly
        dominated or does not strictly dominate the reference point."""
        p1, p2 = _unpack(point)
        f1, f2 = self._arrays()
        return kernels.hvi_sorted(f1, f2, self._r1, self._r2, p1, p2)

    def distance_to_empirical_front(self, point) -> float:
        """Distance to the attainment staircase extended by the two
        reference-wall rays; zero exactly on that boundary."""
        p1, p2 = _unpack(point)
        f1, f2 = self._arrays()
        return kernels.epf_distance_sorted(f1, f2, self._r1, self._r2, p1, p2)

    def uhvi(self, point) -> UhviValue:
        """Uncrowded hypervolume improvement of ``point``.

        The improvement branch applies iff the point strictly dominates the
        reference point and no stored point weakly dominates it; otherwise
        the value is minus the distance to the empirical front.  An exact
        duplicate of a stored point is weakly dominated and therefore takes
        the distance branch with value 0.
        """
        p1, p2 = _unpack(point)
        f1, f2 = self._arrays()
        value, improved = kernels.uhvi_sorted(
            f1, f2, self._r1, self._r2, p1, p2)
        branch = UhviBranch.IMPROVEMENT if improved else UhviBranch.DISTANCE_PENALTY
        return UhviValue(value, branch)

    def uhvi_batch(self, objs: Sequence) -> tuple[np.ndarray, np.ndarray]:
        """UHVI of each row of ``objs``; returns (values, improvement mask)."""
        arr = np.ascontiguousarray(objs, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("expected an (m, 2) array of objective pairs")
        if arr.size and not np.isfinite(arr).all():
            raise ValueError("objective values must be finite")
        f1, f2 = self._arrays()
        return kernels.uhvi_batch_sorted(
            f1, f2, self._r1, self._r2,
            np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1]))
