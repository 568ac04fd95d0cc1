"""Shared generators for randomized numerical tests.

Everything is seeded; tests must be reproducible run to run.
"""

import numpy as np
import pytest

from mtlqr import Task, dare_solve, is_stabilizing


def scalar_task(a=0.5, b=1.0, q=1.0, r=1.0, sigma0=1.0, id="scalar"):
    return Task(A=[[a]], B=[[b]], Q=[[q]], R=[[r]], Sigma0=[[sigma0]], id=id)


def random_task(rng, d_x, d_u, id="rand", rho_target=None):
    """Task with moderate parameter scales and a controllable pair (A, B)."""
    a = rng.standard_normal((d_x, d_x))
    rho = max(np.abs(np.linalg.eigvals(a)))
    target = rho_target if rho_target is not None else rng.uniform(0.3, 1.2)
    a = a * (target / rho)
    b = rng.standard_normal((d_x, d_u))
    g = rng.standard_normal((d_x, d_x))
    q = g @ g.T + 0.1 * np.eye(d_x)
    h = rng.standard_normal((d_u, d_u))
    r = h @ h.T + 0.1 * np.eye(d_u)
    f = rng.standard_normal((d_x, d_x))
    s0 = f @ f.T + 0.1 * np.eye(d_x)
    return Task(A=a, B=b, Q=q, R=r, Sigma0=s0, id=id)


def random_stabilized(rng, d_x, d_u, id="rand", max_rho=0.95):
    """(task, K) with K stabilizing the task at spectral radius <= max_rho."""
    for _ in range(200):
        task = random_task(rng, d_x, d_u, id)
        k_star = dare_solve(task).K_star
        for _ in range(20):
            k = k_star + 0.2 * rng.standard_normal(k_star.shape)
            rho = max(np.abs(np.linalg.eigvals(task.A - task.B @ k)))
            if rho <= max_rho:
                return task, k
    raise RuntimeError("failed to sample a stabilized task")


def random_stable_pair(rng, d_x, d_u, max_rho=0.95):
    """(task_i, task_j, K) sharing dimensions, K stabilizing both."""
    for _ in range(200):
        base, k = random_stabilized(rng, d_x, d_u, "pair-i", max_rho)
        bump = 0.1 * rng.standard_normal(base.A.shape)
        g = rng.standard_normal((d_x, d_x))
        other = Task(
            A=base.A + bump,
            B=base.B + 0.1 * rng.standard_normal(base.B.shape),
            Q=base.Q + 0.1 * (g @ g.T),
            R=base.R,
            Sigma0=base.Sigma0,
            id="pair-j",
        )
        rho = max(np.abs(np.linalg.eigvals(other.A - other.B @ k)))
        if rho <= max_rho:
            return base, other, k
    raise RuntimeError("failed to sample a stable pair")


def random_stabilizing_gain(rng, task, k_star=None, max_rho=None):
    """A random gain that stabilizes the task (rejection around K*)."""
    if k_star is None:
        k_star = dare_solve(task).K_star
    while True:
        k = k_star + 0.3 * rng.standard_normal(k_star.shape)
        if is_stabilizing(task, k) and (
                max_rho is None
                or max(np.abs(np.linalg.eigvals(task.A - task.B @ k))) <= max_rho):
            return k


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
