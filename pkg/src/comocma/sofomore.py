"""Multiobjective optimization by cooperating single-objective kernels.

``Sofomore`` maintains p kernels, each an ask/tell optimizer over R^n whose
distribution mean is its incumbent solution.  The fitness of a candidate x
for kernel i is the uncrowded hypervolume improvement of f(x) against the
incumbents of the other p - 1 kernels, so the incumbent set as a whole
climbs the hypervolume of the bi-objective problem.  Each epoch steps every
kernel once, in uniformly random order.

Two update modes are provided.  In ``sequential`` mode a kernel's update is
applied immediately, so kernels stepped later in the epoch see the earlier
moves.  In ``postponed`` mode every kernel is evaluated against the
incumbent set frozen at the epoch start and all updates are merged at the
epoch barrier in kernel-index order, which makes the epoch order
independent and allows the optional thread pool (``workers``).

Instantiated with CMA-ES kernels (the default factory) this is
COMO-CMA-ES.  A kernel step costs lambda + 1 evaluations: the offspring
plus the new incumbent, which is evaluated once right after the update and
cached for the other kernels' fitness computations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .cma import CmaEs
from .hv import ParetoFront, ReferencePoint, UhviValue

__all__ = ["PermutationScheduler", "Sofomore"]


class PermutationScheduler:
    """Serves kernel indices, one uniform random permutation per epoch."""

    def __init__(self, p: int, seed):
        if p < 1:
            raise ValueError("need at least one kernel")
        self.p = int(p)
        self.rng = np.random.default_rng(seed)
        self._perm = None
        self._cursor = 0

    def next_index(self) -> int:
        if self._perm is None or self._cursor >= self.p:
            self._perm = self.rng.permutation(self.p)
            self._cursor = 0
        i = int(self._perm[self._cursor])
        self._cursor += 1
        return i


def _default_kernel_factory(x0, sigma0, seed, lam):
    return CmaEs(x0, sigma0, seed, lam=lam)


class Sofomore:
    """p kernels cooperatively maximizing the hypervolume of their incumbents.

    Parameters
    ----------
    problem : object with ``evaluate``, ``evaluate_batch``, ``add_evaluations``
        and an ``n`` attribute, e.g. a :class:`~comocma.problems.BiObjectiveProblem`.
    p : number of kernels.
    sigma0 : initial step size for every kernel.
    lower, upper : bounds of the uniform box the initial incumbents are
        drawn from; scalars or length-n arrays.
    seed : int or ``numpy.random.SeedSequence``.  The sequence is split into
        3 + p children: initial-incumbent sampler, epoch scheduler,
        diagnostics stream, then one child per kernel, in this order.
    lam : offspring per kernel step (default: the CMA-ES rule for n).
    mode : ``"sequential"`` or ``"postponed"``.
    workers : optional thread count for postponed epochs.
    ref : hypervolume reference point.
    kernel_factory : ``f(x0, sigma0, seed, lam) -> kernel``; the kernel must
        expose ``ask()`` returning candidates with ``x`` and ``id``,
        ``tell(pairs)`` taking (id, fitness) pairs, ``mean`` and
        ``params.lam``.

    ``eval_count`` tracks the evaluations consumed by initialization and
    kernel steps, exactly ``p + steps * (lam + 1)``.  Auxiliary queries such
    as :meth:`subspace_fitness` count on the problem but not here.
    """

    def __init__(self, problem, p: int, sigma0: float, lower, upper, seed,
                 lam: int | None = None, mode: str = "sequential",
                 workers: int | None = None, ref=(1.1, 1.1),
                 kernel_factory=None):
        if p < 1:
            raise ValueError("need at least one kernel")
        if mode not in ("sequential", "postponed"):
            raise ValueError("mode must be 'sequential' or 'postponed'")
        if workers is not None and mode != "postponed":
            raise ValueError("workers require postponed mode")
        self.problem = problem
        self.mode = mode
        self.workers = workers
        self.ref = ReferencePoint(*ref)

        n = problem.n
        lower = np.broadcast_to(np.asarray(lower, dtype=float), n)
        upper = np.broadcast_to(np.asarray(upper, dtype=float), n)
        if not (lower < upper).all():
            raise ValueError("lower must be below upper componentwise")
        ss = seed if isinstance(seed, np.random.SeedSequence) \
            else np.random.SeedSequence(seed)
        self.seed_sequence = ss
        children = ss.spawn(3 + p)
        init_rng = np.random.default_rng(children[0])
        x0s = init_rng.uniform(lower, upper, size=(p, n))
        self.scheduler = PermutationScheduler(p, children[1])
        self.diagnostics_rng = np.random.default_rng(children[2])

        factory = kernel_factory or _default_kernel_factory
        self.kernels = [factory(x0s[i], sigma0, children[3 + i], lam)
                        for i in range(p)]
        lams = {k.params.lam for k in self.kernels}
        if len(lams) != 1:
            raise ValueError("kernels disagree on the population size")
        self.lam = lams.pop()

        self.incumbents = [k.mean.copy() for k in self.kernels]
        self.incumbent_objs = [problem.evaluate(x) for x in self.incumbents]
        self.archive = ParetoFront(self.ref)
        self.archive.insert_many(self.incumbent_objs)
        self.last_offspring_objs: list[np.ndarray | None] = [None] * p
        self.eval_count = p
        self.steps = 0
        self.epoch = 0

    @property
    def p(self) -> int:
        return len(self.kernels)

    @property
    def evals_per_kernel(self) -> float:
        return self.eval_count / self.p

    def subspace_front(self, i: int) -> ParetoFront:
        """Empirical front of the incumbents of all kernels but i."""
        front = ParetoFront(self.ref)
        front.insert_many(obj for j, obj in enumerate(self.incumbent_objs)
                          if j != i)
        return front

    def subspace_fitness(self, i: int, x) -> UhviValue:
        """Fitness kernel i is maximizing at x (counts one evaluation).

        The kernels themselves minimize; :meth:`step_kernel` negates.
        """
        f = self.problem.evaluate(x)
        return self.subspace_front(i).uhvi(f)

    def incumbent_front(self) -> ParetoFront:
        front = ParetoFront(self.ref)
        front.insert_many(self.incumbent_objs)
        return front

    def hypervolume(self) -> float:
        return self.incumbent_front().hypervolume()

    def step_kernel(self, i: int, front: ParetoFront | None = None) -> None:
        """One ask/tell update of kernel i against the current incumbents."""
        kernel = self.kernels[i]
        cands = kernel.ask()
        F = self.problem.evaluate_batch([c.x for c in cands])
        if front is None:
            front = self.subspace_front(i)
        values, _ = front.uhvi_batch(F)
        kernel.tell((c.id, -v) for c, v in zip(cands, values))
        x_inc = kernel.mean.copy()
        f_inc = self.problem.evaluate(x_inc)
        self.incumbents[i] = x_inc
        self.incumbent_objs[i] = f_inc
        self.last_offspring_objs[i] = F
        self.archive.insert_many(F)
        self.archive.insert(f_inc)
        self.eval_count += self.lam + 1
        self.steps += 1

    def run_epoch(self) -> None:
        order = [self.scheduler.next_index() for _ in range(self.p)]
        if self.mode == "sequential":
            for i in order:
                self.step_kernel(i)
        else:
            self._postponed_epoch(order)
        self.epoch += 1

    def _postponed_epoch(self, order) -> None:
        frozen = list(self.incumbent_objs)

        def compute(i):
            kernel = self.kernels[i]
            cands = kernel.ask()
            F = self.problem.evaluate_batch([c.x for c in cands],
                                            count=False)
            front = ParetoFront(self.ref)
            front.insert_many(obj for j, obj in enumerate(frozen) if j != i)
            values, _ = front.uhvi_batch(F)
            kernel.tell((c.id, -v) for c, v in zip(cands, values))
            x_inc = kernel.mean.copy()
            f_inc = self.problem.evaluate(x_inc, count=False)
            return F, x_inc, f_inc

        results = {}
        if self.workers is not None and self.workers > 1 and self.p > 1:
            with ThreadPoolExecutor(max_workers=min(self.workers,
                                                    self.p)) as pool:
                for i, res in zip(order, pool.map(compute, order)):
                    results[i] = res
        else:
            for i in order:
                results[i] = compute(i)

        # merge in kernel-index order so the archive and the counters do
        # not depend on the epoch permutation or on thread timing
        for i in range(self.p):
            F, x_inc, f_inc = results[i]
            self.incumbents[i] = x_inc
            self.incumbent_objs[i] = f_inc
            self.last_offspring_objs[i] = F
            self.archive.insert_many(F)
            self.archive.insert(f_inc)
            self.problem.add_evaluations(self.lam + 1)
            self.eval_count += self.lam + 1
            self.steps += 1

    def run(self, budget: float, recorder=None) -> "Sofomore":
        """Run epochs until ``budget`` evaluations are spent.

        An epoch in progress completes, so the final count may exceed the
        budget by up to p * (lam + 1) - 1.  The recorder, if given, is
        called as ``recorder.on_epoch(self)`` once right away and once
        after every epoch.
        """
        if recorder is not None:
            recorder.on_epoch(self)
        while self.eval_count < budget:
            self.run_epoch()
            assert self.eval_count == self.p + self.steps * (self.lam + 1)
            if recorder is not None:
                recorder.on_epoch(self)
        return self
