"""Bi-objective convex-quadratic benchmark problems.

Each objective is a normalized quadratic (x - c)^T P (x - c) / s.  Three
families share a diagonal conditioning matrix Delta:

* ``sep``   : both objectives use Delta itself; the centers are the origin
  and the k-th unit vector, and both are divided by Delta_kk so the
  objective value at the opposite center is 1.
* ``one``   : a single random rotation O is applied (P = O^T Delta O for
  both objectives); centers are the origin and the all-ones vector, and
  both objectives are divided by the value at the opposite center.
* ``two``   : independent rotations for the two objectives, centers as in
  ``one``, and a shared normalizer, the larger of the two cross-center
  values.

With the sphere diagonal the rotations are ineffective and are skipped;
that problem is named ``bi-sphere``.  The ``sep`` and ``one`` families
have the Pareto front f2 = (1 - sqrt(f1))^2 on the segment between the
centers, independent of conditioning and rotation.
"""

from __future__ import annotations

import math

import numpy as np

from .hv import ObjectivePair

__all__ = ["DIAGONAL_KINDS", "PROBLEM_CLASSES", "DEFAULT_ROTATION_SEEDS",
           "problem_name", "make_diagonal", "random_orthogonal", "quad", "QuadForm",
           "BiObjectiveProblem", "make_problem", "true_front_value",
           "problem_from_descriptor"]

DIAGONAL_KINDS = ("sphere", "elli", "cigtab")
PROBLEM_CLASSES = ("sep", "one", "two")

# rotations define the problem instance, not the run: fixed unless overridden
DEFAULT_ROTATION_SEEDS = (1000003, 1000033)


def make_diagonal(kind: str, n: int) -> np.ndarray:
    """Diagonal of the conditioning matrix as a length-n vector."""
    if n < 2:
        raise ValueError("dimension must be at least 2")
    if kind == "sphere":
        return np.ones(n)
    if kind == "elli":
        return 10.0 ** (6 * np.arange(n) / (n - 1))
    if kind == "cigtab":
        d = np.ones(n)
        d[0] = 1e-4
        d[1] = 1e4
        return d
    raise ValueError("unknown diagonal kind %r" % (kind,))


def problem_name(problem: str, diag: str, k: int | None = None) -> str:
    """Canonical instance name, e.g. sphere-sep-1, elli-one, bi-sphere."""
    if problem == "sep":
        return "%s-sep-%d" % (diag, k)
    if diag == "sphere":
        return "bi-sphere"
    return "%s-%s" % (diag, problem)


def random_orthogonal(n: int, seed) -> np.ndarray:
    """Orthogonal matrix from the QR factorization of a Gaussian matrix.

    The signs of the R diagonal are folded into Q so the result is a
    deterministic function of the seed (and Haar distributed).
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def quad(P, x, y) -> float:
    """(x - y)^T P (x - y) for a dense matrix P."""
    w = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(w @ np.asarray(P, dtype=float) @ w)


class QuadForm:
    """Normalized quadratic (x - center)^T P (x - center) / scale.

    ``P`` may be given as a diagonal vector (fast separable path) or as a
    dense symmetric positive-definite matrix.
    """

    __slots__ = ("_diag", "_matrix", "center", "scale")

    def __init__(self, P, center, scale: float = 1.0):
        arr = np.asarray(P, dtype=float)
        self.center = np.asarray(center, dtype=float).ravel()
        self.scale = float(scale)
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale must be positive and finite")
        if arr.ndim == 1:
            if (arr <= 0).any():
                raise ValueError("diagonal entries must be positive")
            self._diag = arr
            self._matrix = None
            n = arr.size
        elif arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
            tol = 1e-12 * max(1.0, float(np.abs(arr).max()))
            if not np.allclose(arr, arr.T, rtol=0, atol=tol):
                raise ValueError("matrix must be symmetric")
            arr = (arr + arr.T) / 2
            if np.linalg.eigvalsh(arr).min() <= 0:
                raise ValueError("matrix must be positive definite")
            self._diag = None
            self._matrix = arr
            n = arr.shape[0]
        else:
            raise ValueError("P must be a vector or a square matrix")
        if self.center.size != n:
            raise ValueError("center has wrong dimension")

    @property
    def n(self) -> int:
        return self.center.size

    def value(self, x) -> float:
        w = np.asarray(x, dtype=float) - self.center
        if self._diag is not None:
            return float(self._diag @ (w * w)) / self.scale
        return float(w @ self._matrix @ w) / self.scale

    def batch(self, X: np.ndarray) -> np.ndarray:
        w = np.asarray(X, dtype=float) - self.center
        if self._diag is not None:
            return (w * w) @ self._diag / self.scale
        return np.einsum("ij,jk,ik->i", w, self._matrix, w) / self.scale


class BiObjectiveProblem:
    """A pair of objectives over R^n with an evaluation counter."""

    def __init__(self, name: str, obj1: QuadForm, obj2: QuadForm,
                 descriptor: dict, true_front_hypervolume: float | None):
        if obj1.n != obj2.n:
            raise ValueError("objectives disagree on the dimension")
        self.name = name
        self.obj1 = obj1
        self.obj2 = obj2
        self.descriptor = dict(descriptor)
        self.true_front_hypervolume = true_front_hypervolume
        self.eval_count = 0

    @property
    def n(self) -> int:
        return self.obj1.n

    def evaluate(self, x, count: bool = True) -> ObjectivePair:
        if count:
            self.eval_count += 1
        return ObjectivePair(self.obj1.value(x), self.obj2.value(x))

    def evaluate_batch(self, X, count: bool = True) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if count:
            self.eval_count += X.shape[0]
        return np.column_stack((self.obj1.batch(X), self.obj2.batch(X)))

    def add_evaluations(self, k: int) -> None:
        """Account for evaluations performed with ``count=False``."""
        self.eval_count += int(k)

    def __repr__(self) -> str:
        return "BiObjectiveProblem(%s, n=%d)" % (self.name, self.n)


def make_problem(problem: str, diag: str, n: int, k: int | None = None,
                 rotation_seeds=DEFAULT_ROTATION_SEEDS) -> BiObjectiveProblem:
    """Build a benchmark instance; see the module docstring for the families."""
    if problem not in PROBLEM_CLASSES:
        raise ValueError("unknown problem class %r" % (problem,))
    if diag not in DIAGONAL_KINDS:
        raise ValueError("unknown diagonal kind %r" % (diag,))
    d = make_diagonal(diag, n)
    ones = np.ones(n)
    seeds = tuple(int(s) for s in rotation_seeds)
    descriptor = {"problem": problem, "diag": diag, "n": int(n),
                  "k": None, "rotation_seeds": list(seeds)}

    if problem == "sep":
        if k is None or not 1 <= int(k) <= n:
            raise ValueError("sep requires a coordinate index k in [1, n]")
        k = int(k)
        descriptor["k"] = k
        e_k = np.zeros(n)
        e_k[k - 1] = 1.0
        scale = float(d[k - 1])  # value of the quadratic at the other center
        obj1 = QuadForm(d, np.zeros(n), scale)
        obj2 = QuadForm(d, e_k, scale)
        front = _segment_front_hypervolume()
    elif problem == "one":
        if diag == "sphere":
            # rotations leave the sphere unchanged
            obj1 = QuadForm(d, np.zeros(n), float(n))
            obj2 = QuadForm(d, ones, float(n))
        else:
            o = random_orthogonal(n, seeds[0])
            a = o.T @ np.diag(d) @ o
            scale = float(ones @ a @ ones)
            obj1 = QuadForm(a, np.zeros(n), scale)
            obj2 = QuadForm(a, ones, scale)
        front = _segment_front_hypervolume()
    else:
        if diag == "sphere":
            obj1 = QuadForm(d, np.zeros(n), float(n))
            obj2 = QuadForm(d, ones, float(n))
        else:
            o1 = random_orthogonal(n, seeds[0])
            o2 = random_orthogonal(n, seeds[1])
            a1 = o1.T @ np.diag(d) @ o1
            a2 = o2.T @ np.diag(d) @ o2
            alpha = max(float(ones @ a1 @ ones), float(ones @ a2 @ ones))
            obj1 = QuadForm(a1, np.zeros(n), alpha)
            obj2 = QuadForm(a2, ones, alpha)
        # no closed-form front for independently rotated objectives, except
        # when the rotations cancel on the sphere
        front = _segment_front_hypervolume() if diag == "sphere" else None

    return BiObjectiveProblem(problem_name(problem, diag, k), obj1, obj2,
                              descriptor, front)


def _segment_front_hypervolume(ref=(1.1, 1.1)) -> float:
    # front f2 = (1 - sqrt(f1))^2, f1 in [0, 1]: dominated area is
    # r1*r2 minus the integral of the front, which is 1/6
    r1, r2 = float(ref[0]), float(ref[1])
    if r1 < 1 or r2 < 1:
        raise ValueError("reference point must weakly dominate (1, 1)")
    return r1 * r2 - 1.0 / 6.0


def true_front_value(problem: BiObjectiveProblem,
                     ref=(1.1, 1.1)) -> float | None:
    """Hypervolume of the full Pareto front, when known in closed form."""
    if problem.true_front_hypervolume is None:
        return None
    return _segment_front_hypervolume(ref)


def problem_from_descriptor(descriptor: dict) -> BiObjectiveProblem:
    """Rebuild a problem from its serialized descriptor."""
    return make_problem(descriptor["problem"], descriptor["diag"],
                        int(descriptor["n"]), descriptor.get("k"),
                        tuple(descriptor.get("rotation_seeds",
                                             DEFAULT_ROTATION_SEEDS)))
