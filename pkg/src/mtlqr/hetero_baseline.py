"""Exact pairwise gradient gaps and parameter-deviation statistics.

The gradient-gap matrix g_ij(K) = ||grad J_i(K) - grad J_j(K)||_F is the
ground truth that certified bounds must dominate. The deviation bounds
(max pairwise spectral-norm distances of A, B, Q, R) feed prior-work
heterogeneity measures; the exact formula of those measures lives in an
external reference and is deliberately not reimplemented here — callers can
plug their own via ``evaluate_baseline``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .lqr import Task, solve_task
from .matops import DEFAULT_TOL, DimensionError, Tolerances

BaselineHook = Callable[["DeviationBounds", np.ndarray, Sequence[Task]], float]


@dataclass(frozen=True)
class DeviationBounds:
    """Max pairwise spectral-norm deviations of the task parameters."""

    b_A: float
    b_B: float
    b_Q: float
    b_R: float


def deviation_bounds(tasks: Sequence[Task]) -> DeviationBounds:
    """Spectral-norm deviation bounds over all unordered task pairs."""
    if len(tasks) == 0:
        raise DimensionError("at least one task is required")
    d_x, d_u = tasks[0].d_x, tasks[0].d_u
    for t in tasks[1:]:
        if t.d_x != d_x or t.d_u != d_u:
            raise DimensionError(f"task {t.id} has mismatched dimensions")

    out = {"b_A": 0.0, "b_B": 0.0, "b_Q": 0.0, "b_R": 0.0}
    for ti, tj in combinations(tasks, 2):
        out["b_A"] = max(out["b_A"], float(np.linalg.norm(ti.A - tj.A, 2)))
        out["b_B"] = max(out["b_B"], float(np.linalg.norm(ti.B - tj.B, 2)))
        out["b_Q"] = max(out["b_Q"], float(np.linalg.norm(ti.Q - tj.Q, 2)))
        out["b_R"] = max(out["b_R"], float(np.linalg.norm(ti.R - tj.R, 2)))
    return DeviationBounds(**out)


def pairwise_gaps(tasks: Sequence[Task], K,
                  tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Symmetric matrix of exact gradient gaps g_ij(K), zero diagonal."""
    grads = [solve_task(t, K, tol).grad for t in tasks]
    n = len(tasks)
    g = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        g[i, j] = g[j, i] = float(np.linalg.norm(grads[i] - grads[j]))
    return g


def evaluate_baseline(hook: BaselineHook, tasks: Sequence[Task], K) -> float:
    """Apply a caller-supplied prior-work heterogeneity formula at K."""
    return float(hook(deviation_bounds(tasks), np.asarray(K, dtype=np.float64), tasks))
