import numpy as np
import pytest

from mtlqr import Task, certify_all_pairs, deviation_bounds, pairwise_gaps
from mtlqr.hetero_baseline import evaluate_baseline
from mtlqr.matops import DimensionError
from conftest import random_stable_pair, scalar_task


class TestDeviationBounds:
    def test_identical_tasks_zero(self):
        t = scalar_task()
        d = deviation_bounds([t, t, t])
        assert d.b_A == d.b_B == d.b_Q == d.b_R == 0.0

    def test_scalar_max_pairwise(self):
        tasks = [scalar_task(a=a, id=f"a{a}") for a in (1.0, 1.2, 1.5)]
        assert deviation_bounds(tasks).b_A == pytest.approx(0.5, abs=1e-12)

    def test_single_task_zero(self):
        assert deviation_bounds([scalar_task()]).b_A == 0.0

    def test_reorder_invariant(self, rng):
        tasks = [scalar_task(a=a, q=q, id=f"{a}-{q}")
                 for a, q in ((0.2, 1.0), (0.5, 2.0), (0.8, 0.5))]
        fwd = deviation_bounds(tasks)
        rev = deviation_bounds(tasks[::-1])
        assert (fwd.b_A, fwd.b_B, fwd.b_Q, fwd.b_R) == (
            rev.b_A, rev.b_B, rev.b_Q, rev.b_R)

    def test_dimension_mismatch_rejected(self):
        t1 = scalar_task()
        t2 = Task(A=np.eye(2) * 0.5, B=[[1.0], [0.0]], Q=np.eye(2),
                  R=[[1.0]], Sigma0=np.eye(2), id="2d")
        with pytest.raises(DimensionError):
            deviation_bounds([t1, t2])

    def test_spectral_norm_used(self):
        # identity difference: spectral norm 1, Frobenius sqrt(2)
        t1 = Task(A=np.zeros((2, 2)), B=[[1.0], [1.0]], Q=np.eye(2),
                  R=[[1.0]], Sigma0=np.eye(2), id="z")
        t2 = Task(A=np.eye(2), B=[[1.0], [1.0]],
                  Q=np.eye(2), R=[[1.0]], Sigma0=np.eye(2), id="o")
        assert deviation_bounds([t1, t2]).b_A == pytest.approx(1.0, rel=1e-12)


class TestPairwiseGaps:
    def test_identical_tasks_zero(self):
        t = scalar_task()
        assert np.all(pairwise_gaps([t, t], [[0.0]]) == 0.0)

    def test_scalar_sigma_pair(self):
        t1 = scalar_task(id="t1")
        t2 = scalar_task(sigma0=2.0, id="t2")
        g = pairwise_gaps([t1, t2], [[0.0]])
        assert g[0, 1] == pytest.approx(16.0 / 9.0, rel=1e-12)

    def test_symmetric_zero_diagonal(self, rng):
        ti, tj, k = random_stable_pair(rng, 2, 1)
        g = pairwise_gaps([ti, tj], k)
        assert np.allclose(g, g.T) and np.all(np.diag(g) == 0.0)

    def test_dominated_by_certified_bounds(self, rng):
        ti, tj, k = random_stable_pair(rng, 2, 1)
        g = pairwise_gaps([ti, tj], k)
        certs = certify_all_pairs([ti, tj], k, "best")
        assert g[0, 1] <= certs[0].value + 1e-6


class TestBaselineHook:
    def test_hook_receives_bounds_and_controller(self):
        tasks = [scalar_task(a=0.2, id="a"), scalar_task(a=0.5, id="b")]

        def hook(bounds, k, ts):
            assert len(ts) == 2
            return bounds.b_A * 10.0 + float(k[0, 0])

        value = evaluate_baseline(hook, tasks, [[0.25]])
        assert value == pytest.approx(3.0 + 0.25, rel=1e-12)
