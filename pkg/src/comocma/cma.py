"""Self-contained non-elitist (mu/mu_w, lambda)-CMA-ES with ask-and-tell.

Minimization convention.  The optimizer never terminates on its own; the
caller owns the loop.  ``ask`` hands out lambda candidates with ids,
``tell`` consumes exactly those ids with finite fitness values and applies
one update of mean, evolution paths, covariance and step-size.  Selection
is purely rank based, so any order-preserving transformation of the
fitness values yields the identical state update.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["CmaParams", "Candidate", "CmaEs", "ProtocolError",
           "default_population_size"]

log = logging.getLogger(__name__)


class ProtocolError(RuntimeError):
    """ask/tell called out of order or with mismatched candidate ids."""


def default_population_size(n: int) -> int:
    return 4 + int(3 * math.log(n))


@dataclass(frozen=True)
class CmaParams:
    """Strategy parameters; ``defaults`` reproduces the standard settings."""

    lam: int
    mu: int
    weights: np.ndarray
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float
    eig_interval: int

    def __post_init__(self):
        if self.lam < 2:
            raise ValueError("population size must be at least 2")
        if not 1 <= self.mu <= self.lam:
            raise ValueError("mu must lie in [1, lam]")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.mu,) or (w <= 0).any() or (np.diff(w) > 0).any():
            raise ValueError("weights must be positive and non-increasing")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")
        for name in ("c_sigma", "c_c", "c_1", "c_mu"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError("%s=%g outside [0, 1]" % (name, v))
        if self.c_1 + self.c_mu > 1.0:
            raise ValueError("c_1 + c_mu must not exceed 1")
        if self.d_sigma < 1.0:
            raise ValueError("d_sigma must be at least 1")
        if self.eig_interval < 1:
            raise ValueError("eig_interval must be at least 1")

    @staticmethod
    def defaults(n: int, lam: int | None = None) -> "CmaParams":
        if n < 1:
            raise ValueError("dimension must be positive")
        if lam is None:
            lam = default_population_size(n)
        if lam < 2:
            raise ValueError("population size must be at least 2")
        mu = lam // 2
        raw = math.log((lam + 1) / 2) - np.log(np.arange(1, mu + 1))
        weights = raw / raw.sum()
        mu_eff = float(1.0 / (weights ** 2).sum())
        c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
        d_sigma = 1 + 2 * max(0.0, math.sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma
        c_c = (4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)
        c_1 = 2 / ((n + 1.3) ** 2 + mu_eff)
        c_mu = min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((n + 2) ** 2 + mu_eff))
        chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n ** 2))
        eig_interval = max(1, int(1.0 / (10 * n * (c_1 + c_mu))))
        return CmaParams(lam=lam, mu=mu, weights=weights, mu_eff=mu_eff,
                         c_sigma=c_sigma, d_sigma=d_sigma, c_c=c_c, c_1=c_1,
                         c_mu=c_mu, chi_n=chi_n, eig_interval=eig_interval)


@dataclass(frozen=True)
class Candidate:
    x: np.ndarray
    id: int


class CmaEs:
    """One CMA-ES instance; state is (mean, sigma, cov, paths, iteration).

    ``seed`` may be an int or a ``numpy.random.SeedSequence`` so that a
    caller managing many instances can hand each one a spawned child
    stream.  Identical seed and fitness values reproduce the state
    trajectory bitwise.
    """

    def __init__(self, x0, sigma0: float, seed, lam: int | None = None,
                 params: CmaParams | None = None):
        x0 = np.array(x0, dtype=float).ravel()
        if x0.size == 0 or not np.isfinite(x0).all():
            raise ValueError("x0 must be a non-empty finite vector")
        sigma0 = float(sigma0)
        if not (sigma0 > 0 and math.isfinite(sigma0)):
            raise ValueError("sigma0 must be positive and finite")
        self.n = x0.size
        if params is None:
            params = CmaParams.defaults(self.n, lam)
        elif lam is not None and lam != params.lam:
            raise ValueError("lam conflicts with explicit params")
        self.params = params
        self.mean = x0
        self.sigma = sigma0
        self.cov = np.eye(self.n)
        self.path_sigma = np.zeros(self.n)
        self.path_c = np.zeros(self.n)
        self.iteration = 0
        self.rng = np.random.default_rng(seed)
        self.condition_number = 1.0
        self._B = np.eye(self.n)
        self._D = np.ones(self.n)
        self._inv_sqrt = np.eye(self.n)
        self._eigen_iteration = 0
        self._pending: tuple[np.ndarray, np.ndarray] | None = None
        self._next_id = 0

    @property
    def lam(self) -> int:
        return self.params.lam

    @property
    def incumbent(self) -> np.ndarray:
        """Current distribution mean (a copy)."""
        return self.mean.copy()

    def ask(self) -> list[Candidate]:
        """Sample lambda candidates; a second ask without tell is an error."""
        if self._pending is not None:
            raise ProtocolError("ask called again before tell")
        if self.iteration - self._eigen_iteration >= self.params.eig_interval:
            self._refresh_eigen()
        z = self.rng.standard_normal((self.params.lam, self.n))
        x = self.mean + self.sigma * ((z * self._D) @ self._B.T)
        ids = np.arange(self._next_id, self._next_id + self.params.lam)
        self._next_id += self.params.lam
        self._pending = (ids, x)
        return [Candidate(x=x[i].copy(), id=int(ids[i]))
                for i in range(self.params.lam)]

    def tell(self, fitnesses) -> None:
        """Consume (id, fitness) pairs covering exactly the pending ask."""
        if self._pending is None:
            raise ProtocolError("tell called without a pending ask")
        ids, x = self._pending
        pairs = [(int(i), float(v)) for i, v in fitnesses]
        if sorted(i for i, _ in pairs) != list(ids):
            raise ProtocolError("fitness ids do not match the pending ask")
        values = np.empty(self.params.lam)
        base = int(ids[0])
        for i, v in pairs:
            values[i - base] = v
        if not np.isfinite(values).all():
            raise ValueError("fitness values must be finite")

        p = self.params
        n = self.n
        order = np.argsort(values, kind="stable")
        selected = x[order[:p.mu]]
        old_mean = self.mean
        self.mean = p.weights @ selected
        y = (self.mean - old_mean) / self.sigma

        c_s = p.c_sigma
        self.path_sigma = ((1 - c_s) * self.path_sigma
                           + math.sqrt(c_s * (2 - c_s) * p.mu_eff)
                           * (self._inv_sqrt @ y))
        ps_sq = float(self.path_sigma @ self.path_sigma)
        t = self.iteration + 1
        h_sig = ps_sq / (1 - (1 - c_s) ** (2 * t)) / n < 2 + 4.0 / (n + 1)

        c_c = p.c_c
        self.path_c = (1 - c_c) * self.path_c
        if h_sig:
            self.path_c = self.path_c + math.sqrt(c_c * (2 - c_c) * p.mu_eff) * y

        steps = (selected - old_mean) / self.sigma
        rank_mu = steps.T @ (p.weights[:, None] * steps)
        # the (1 - h_sig) term keeps the covariance trace unbiased when the
        # rank-one update is stalled
        stall = 0.0 if h_sig else c_c * (2 - c_c)
        cov = ((1 - p.c_1 - p.c_mu) * self.cov
               + p.c_1 * (np.outer(self.path_c, self.path_c) + stall * self.cov)
               + p.c_mu * rank_mu)
        self.cov = (cov + cov.T) / 2

        self.sigma *= math.exp((c_s / p.d_sigma)
                               * (math.sqrt(ps_sq) / p.chi_n - 1))
        self.iteration += 1
        self._pending = None

    def _refresh_eigen(self) -> None:
        vals, vecs = np.linalg.eigh(self.cov)
        floor = max(vals[-1], 0.0) * 1e-14
        if vals[0] <= floor:
            vals = np.maximum(vals, max(floor, 1e-300))
        d = np.sqrt(vals)
        self._B = vecs
        self._D = d
        inv = (vecs / d) @ vecs.T
        self._inv_sqrt = (inv + inv.T) / 2
        self.condition_number = float((d[-1] / d[0]) ** 2)
        self._eigen_iteration = self.iteration
        log.debug("eigen refresh at iteration %d: condition %.3e",
                  self.iteration, self.condition_number)

    def sqrt_eigenvalues(self) -> np.ndarray:
        """Square roots of the covariance eigenvalues, ascending."""
        vals = np.linalg.eigvalsh(self.cov)
        return np.sqrt(np.maximum(vals, 0.0))
