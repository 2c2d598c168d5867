import math
from types import SimpleNamespace

import numpy as np
import pytest

from comocma.hv import ParetoFront, UhviBranch
from comocma.problems import make_problem
from comocma.sofomore import PermutationScheduler, Sofomore


class PlaneProblem:
    """f(x) = (x[0], x[1]): objectives read off the first two coordinates."""

    n = 2
    name = "plane"

    def __init__(self):
        self.eval_count = 0

    def evaluate(self, x, count=True):
        if count:
            self.eval_count += 1
        from comocma.hv import ObjectivePair
        return ObjectivePair(float(x[0]), float(x[1]))

    def evaluate_batch(self, X, count=True):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if count:
            self.eval_count += X.shape[0]
        return X[:, :2].copy()

    def add_evaluations(self, k):
        self.eval_count += int(k)


class FakeKernel:
    """Stationary kernel: constant mean, offspring at the mean."""

    def __init__(self, x0, lam):
        self.mean = np.asarray(x0, dtype=float)
        self.params = SimpleNamespace(lam=lam)
        self.tell_count = 0
        self._next_id = 0

    def ask(self):
        cands = [SimpleNamespace(x=self.mean.copy(), id=self._next_id + i)
                 for i in range(self.params.lam)]
        self._next_id += self.params.lam
        return cands

    def tell(self, pairs):
        list(pairs)
        self.tell_count += 1


def fake_factory(x0, sigma0, seed, lam):
    return FakeKernel(x0, lam or 4)


def make_moes(p=3, n=3, seed=7, **kw):
    problem = make_problem("one", "sphere", n)
    kw.setdefault("sigma0", 0.3)
    kw.setdefault("lower", 0.0)
    kw.setdefault("upper", 1.0)
    return Sofomore(problem, p, seed=seed, **kw)


def kernel_states(moes):
    return [(k.mean.tobytes(), k.sigma, k.cov.tobytes(),
             k.path_sigma.tobytes(), k.path_c.tobytes())
            for k in moes.kernels]


class TestScheduler:

    def test_every_kernel_once_per_epoch(self):
        sched = PermutationScheduler(5, 0)
        for _ in range(10):
            epoch = [sched.next_index() for _ in range(5)]
            assert sorted(epoch) == list(range(5))

    def test_deterministic(self):
        a = PermutationScheduler(6, 42)
        b = PermutationScheduler(6, 42)
        assert [a.next_index() for _ in range(30)] \
            == [b.next_index() for _ in range(30)]

    def test_orders_vary(self):
        sched = PermutationScheduler(6, 3)
        epochs = {tuple(sched.next_index() for _ in range(6))
                  for _ in range(20)}
        assert len(epochs) > 1


class TestFitness:

    def test_single_kernel_product_formula(self):
        # with p = 1 the subspace front is empty, so the fitness of a
        # point dominating the reference is the box area to it
        moes = Sofomore(PlaneProblem(), 1, 0.3, 0.0, 1.0, seed=1,
                        kernel_factory=fake_factory)
        x = np.array([0.4, 0.7])
        fit = moes.subspace_fitness(0, x)
        assert fit.is_improvement
        assert fit.value == pytest.approx((1.1 - 0.4) * (1.1 - 0.7),
                                          rel=1e-14)

    def test_single_kernel_distance_branch(self):
        moes = Sofomore(PlaneProblem(), 1, 0.3, 0.0, 1.0, seed=1,
                        kernel_factory=fake_factory)
        # beyond the first reference wall: penalized by the wall distance
        fit = moes.subspace_fitness(0, np.array([1.5, 0.5]))
        assert fit.branch is UhviBranch.DISTANCE_PENALTY
        assert fit.value == pytest.approx(-0.4, rel=1e-14)

    def test_duplicate_incumbent_scores_zero(self):
        moes = Sofomore(PlaneProblem(), 2, 0.3, 0.0, 1.0, seed=1,
                        kernel_factory=fake_factory)
        moes.incumbent_objs[1] = moes.problem.evaluate(
            np.array([0.5, 0.5]), count=False)
        res = moes.subspace_fitness(0, np.array([0.5, 0.5]))
        assert res.branch is UhviBranch.DISTANCE_PENALTY
        assert res.value == 0.0

    def test_dominated_point_distance(self):
        moes = Sofomore(PlaneProblem(), 2, 0.3, 0.0, 1.0, seed=1,
                        kernel_factory=fake_factory)
        moes.incumbent_objs[1] = moes.problem.evaluate(
            np.array([0.8, 0.8]), count=False)
        # (0.9, 0.9) is dominated by the other incumbent: penalized by
        # the distance to the nearest staircase edge
        fit = moes.subspace_fitness(0, np.array([0.9, 0.9]))
        assert fit.value == pytest.approx(-0.1, rel=1e-13)

    def test_dominated_point_corner_distance(self):
        moes = Sofomore(PlaneProblem(), 3, 0.3, 0.0, 1.0, seed=1,
                        kernel_factory=fake_factory)
        moes.incumbent_objs[1] = moes.problem.evaluate(
            np.array([0.2, 0.8]), count=False)
        moes.incumbent_objs[2] = moes.problem.evaluate(
            np.array([0.8, 0.2]), count=False)
        fit = moes.subspace_fitness(0, np.array([0.9, 0.9]))
        assert fit.value == pytest.approx(-0.1414213562, abs=1e-10)

    def test_subspace_front_excludes_self(self):
        moes = Sofomore(PlaneProblem(), 3, 0.3, 0.0, 1.0, seed=5,
                        kernel_factory=fake_factory)
        moes.incumbent_objs = [moes.problem.evaluate(np.array(v), count=False)
                               for v in ([0.2, 0.9], [0.5, 0.5], [0.9, 0.2])]
        front = moes.subspace_front(1)
        pts = {tuple(row) for row in front.points()}
        assert pts == {(0.2, 0.9), (0.9, 0.2)}

    def test_subspace_fitness_counts_on_problem_only(self):
        moes = Sofomore(PlaneProblem(), 2, 0.3, 0.0, 1.0, seed=1,
                        kernel_factory=fake_factory)
        before_prob, before_own = moes.problem.eval_count, moes.eval_count
        moes.subspace_fitness(0, np.array([0.4, 0.4]))
        assert moes.problem.eval_count == before_prob + 1
        assert moes.eval_count == before_own

    def test_bounds_validated(self):
        with pytest.raises(ValueError):
            Sofomore(PlaneProblem(), 2, 0.3, 1.0, 0.0, seed=1,
                     kernel_factory=fake_factory)


class TestAccounting:

    def test_init_state(self):
        moes = make_moes(p=4)
        assert moes.eval_count == 4
        assert moes.problem.eval_count == 4
        assert moes.steps == 0 and moes.epoch == 0
        assert len(moes.incumbent_objs) == 4
        assert all(f is None for f in moes.last_offspring_objs)

    def test_eval_count_identity(self):
        moes = make_moes(p=3, n=3)
        budget = 3 + 5 * 3 * (moes.lam + 1)
        moes.run(budget)
        assert moes.epoch == 5
        assert moes.steps == 15
        assert moes.eval_count == 3 + 15 * (moes.lam + 1)
        assert moes.problem.eval_count == moes.eval_count
        assert moes.evals_per_kernel == moes.eval_count / 3

    def test_postponed_accounting_matches(self):
        moes = make_moes(p=3, n=3, mode="postponed")
        moes.run(3 + 4 * 3 * (moes.lam + 1))
        assert moes.eval_count == 3 + moes.steps * (moes.lam + 1)
        assert moes.problem.eval_count == moes.eval_count

    def test_budget_below_one_epoch_runs_init_only(self):
        rows = []
        rec = SimpleNamespace(on_epoch=lambda m: rows.append(m.eval_count))
        moes = make_moes(p=3)
        moes.run(moes.p, recorder=rec)
        assert moes.epoch == 0
        assert moes.eval_count == moes.p
        assert rows == [3]

    def test_recorder_called_per_epoch(self):
        rows = []
        rec = SimpleNamespace(on_epoch=lambda m: rows.append(m.epoch))
        moes = make_moes(p=2)
        moes.run(2 + 3 * 2 * (moes.lam + 1), recorder=rec)
        assert rows == [0, 1, 2, 3]


class TestStateCoherence:

    def test_incumbent_cache_matches_kernels(self):
        moes = make_moes(p=4, n=3)
        moes.run(4 + 6 * 4 * (moes.lam + 1))
        for i, k in enumerate(moes.kernels):
            assert np.array_equal(moes.incumbents[i], k.mean)
            f = moes.problem.evaluate(k.mean, count=False)
            assert moes.incumbent_objs[i] == f

    def test_archive_contains_incumbent_front(self):
        moes = make_moes(p=4, n=3)
        moes.run(4 + 6 * 4 * (moes.lam + 1))
        assert moes.archive.hypervolume() \
            >= moes.incumbent_front().hypervolume() - 1e-15

    def test_last_offspring_shape(self):
        moes = make_moes(p=2, n=3)
        moes.run_epoch()
        for F in moes.last_offspring_objs:
            assert F.shape == (moes.lam, 2)

    def test_hypervolume_nonnegative_and_monotone_archive(self):
        moes = make_moes(p=3, n=3)
        prev = moes.archive.hypervolume()
        for _ in range(10):
            moes.run_epoch()
            hv = moes.archive.hypervolume()
            assert hv >= prev - 1e-15
            prev = hv


class TestModes:

    def test_modes_agree_at_fixpoint(self):
        # stationary kernels: nothing moves, so both modes must produce
        # identical bookkeeping
        runs = {}
        for mode in ("sequential", "postponed"):
            moes = Sofomore(PlaneProblem(), 3, 0.3, 0.0, 1.0, seed=11,
                            mode=mode, kernel_factory=fake_factory)
            moes.run(3 + 4 * 3 * 5)
            runs[mode] = moes
        a, b = runs["sequential"], runs["postponed"]
        assert a.incumbent_objs == b.incumbent_objs
        assert np.array_equal(a.archive.points(), b.archive.points())
        assert a.eval_count == b.eval_count

    def test_modes_differ_in_general(self):
        seq = make_moes(p=3, n=3, seed=2, mode="sequential")
        post = make_moes(p=3, n=3, seed=2, mode="postponed")
        for _ in range(5):
            seq.run_epoch()
            post.run_epoch()
        assert any(not np.array_equal(a.mean, b.mean)
                   for a, b in zip(seq.kernels, post.kernels))

    def test_postponed_workers_bitwise_equal(self):
        serial = make_moes(p=4, n=3, seed=9, mode="postponed")
        pooled = make_moes(p=4, n=3, seed=9, mode="postponed", workers=3)
        budget = 4 + 5 * 4 * (serial.lam + 1)
        serial.run(budget)
        pooled.run(budget)
        assert kernel_states(serial) == kernel_states(pooled)
        assert serial.incumbent_objs == pooled.incumbent_objs
        assert np.array_equal(serial.archive.points(), pooled.archive.points())
        assert serial.eval_count == pooled.eval_count


class TestDeterminism:

    def test_same_seed_bitwise(self):
        a = make_moes(p=3, n=3, seed=21)
        b = make_moes(p=3, n=3, seed=21)
        budget = 3 + 6 * 3 * (a.lam + 1)
        a.run(budget)
        b.run(budget)
        assert kernel_states(a) == kernel_states(b)
        assert a.incumbent_objs == b.incumbent_objs
        assert np.array_equal(a.archive.points(), b.archive.points())

    def test_seed_sequence_equals_int(self):
        a = make_moes(p=2, n=3, seed=33)
        b = make_moes(p=2, n=3, seed=np.random.SeedSequence(33))
        a.run_epoch()
        b.run_epoch()
        assert kernel_states(a) == kernel_states(b)

    def test_different_seeds_differ(self):
        a = make_moes(p=2, n=3, seed=1)
        b = make_moes(p=2, n=3, seed=2)
        assert kernel_states(a) != kernel_states(b)


class TestProgress:

    def test_hypervolume_improves_on_sphere(self):
        moes = make_moes(p=5, n=4, seed=17, upper=2.0)
        hv0 = moes.hypervolume()
        moes.run(5 + 40 * 5 * (moes.lam + 1))
        assert moes.hypervolume() > hv0


class TestValidation:

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            make_moes(mode="parallel")

    def test_workers_require_postponed(self):
        with pytest.raises(ValueError):
            make_moes(mode="sequential", workers=2)

    def test_p_positive(self):
        with pytest.raises(ValueError):
            make_moes(p=0)

    def test_mixed_population_sizes_rejected(self):
        counter = {"i": 0}

        def factory(x0, sigma0, seed, lam):
            counter["i"] += 1
            return FakeKernel(x0, 4 + counter["i"])

        with pytest.raises(ValueError):
            Sofomore(PlaneProblem(), 2, 0.3, 0.0, 1.0, seed=1,
                     kernel_factory=factory)
