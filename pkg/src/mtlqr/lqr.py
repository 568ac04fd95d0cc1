"""Single-task discrete-time LQR quantities.

A task is the tuple (A, B, Q, R) plus the initial-state covariance Sigma0.
Under a static gain K (input u = -K x) the module computes the cost-to-go
matrix P_K, the accumulated state covariance Sigma_K, the gradient factor
E_K, the average cost J(K) = tr(P_K Sigma0), and the exact cost gradient
grad J(K) = E_K Sigma_K. The task-optimal controller comes from a
fixed-point Riccati iteration whose residual is checked explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matops import (
    DEFAULT_TOL,
    DimensionError,
    DomainError,
    InstabilityError,
    NumericError,
    Tolerances,
    as_matrix,
    is_psd,
    max_eig_sym,
    min_eig_sym,
    require_symmetric,
    solve_dlyap,
    spectral_radius,
    sym_part,
)

RICCATI_REL_TOL = 1e-13
RICCATI_MAX_ITERS = 100_000


class NonStabilizableError(RuntimeError):
    """The Riccati iteration failed to converge: (A, B) looks non-stabilizable."""


@dataclass(frozen=True)
class Task:
    """One LQR task: dynamics (A, B), costs (Q, R), initial covariance Sigma0."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    Sigma0: np.ndarray
    id: str = "task"

    def __post_init__(self):
        a = as_matrix(self.A, "A")
        b = as_matrix(self.B, "B")
        q = require_symmetric(self.Q, "Q")
        r = require_symmetric(self.R, "R")
        s0 = require_symmetric(self.Sigma0, "Sigma0")
        d_x = a.shape[0]
        if a.shape != (d_x, d_x):
            raise DimensionError(f"A must be square, got {a.shape}")
        if b.shape[0] != d_x:
            raise DimensionError(f"B must have {d_x} rows, got {b.shape}")
        if q.shape != (d_x, d_x) or s0.shape != (d_x, d_x):
            raise DimensionError("Q and Sigma0 must match the state dimension")
        if r.shape != (b.shape[1], b.shape[1]):
            raise DimensionError("R must be d_u x d_u")
        if not is_psd(q):
            raise DomainError(f"task {self.id}: Q must be PSD")
        if min_eig_sym(r) <= 0.0:
            raise DomainError(f"task {self.id}: R must be positive definite")
        if min_eig_sym(s0) <= 0.0:
            raise DomainError(f"task {self.id}: Sigma0 must be positive definite")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "Sigma0", s0)

    @property
    def d_x(self) -> int:
        return self.A.shape[0]

    @property
    def d_u(self) -> int:
        return self.B.shape[1]

    def to_json(self) -> dict:
        """Task as a JSON-ready dict of row-major nested arrays."""
        return {
            "id": self.id,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
            "Sigma0": self.Sigma0.tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "Task":
        missing = {"id", "A", "B", "Q", "R", "Sigma0"} - set(obj)
        if missing:
            raise DomainError(f"task JSON missing keys: {sorted(missing)}")
        return Task(A=obj["A"], B=obj["B"], Q=obj["Q"], R=obj["R"],
                    Sigma0=obj["Sigma0"], id=str(obj["id"]))


@dataclass(frozen=True)
class TaskSolution:
    """Derived quantities for one (task, controller) pair."""

    P_K: np.ndarray
    Sigma_K: np.ndarray
    E_K: np.ndarray
    J: float
    grad: np.ndarray


@dataclass(frozen=True)
class BoundConstants:
    """Per-task constants entering the suboptimality bounds.

    gamma is the gradient-dominance constant
    4 * lambda_min(Sigma0)^2 * sigma_min(R) / ||Sigma_{K*}||.
    """

    gamma: float
    sigma_star_norm: float
    lam_min_Sigma0: float
    sig_min_R: float
    J_star: float
    K_star: np.ndarray


def closed_loop(task: Task, K) -> np.ndarray:
    """A - B K for this task."""
    k = as_matrix(K, "K")
    if k.shape != (task.d_u, task.d_x):
        raise DimensionError(
            f"K must be {task.d_u}x{task.d_x}, got {k.shape} (task {task.id})")
    return task.A - task.B @ k


def is_stabilizing(task: Task, K, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Whether rho(A - B K) < 1 - stability_margin."""
    return spectral_radius(closed_loop(task, K)) < 1.0 - tol.stability_margin


def solve_task(task: Task, K, tol: Tolerances = DEFAULT_TOL) -> TaskSolution:
    """Cost-to-go, covariance, gradient factor, cost and gradient at K."""
    k = as_matrix(K, "K")
    a_k = closed_loop(task, k)
    rho = spectral_radius(a_k)
    if rho >= 1.0 - tol.stability_margin:
        raise InstabilityError(
            f"controller does not stabilize task {task.id}: rho(A-BK) = {rho:.6g}",
            rho=rho, task_id=task.id)
    p = solve_dlyap(a_k, sym_part(task.Q + k.T @ task.R @ k), "cost", tol)
    sigma = solve_dlyap(a_k, task.Sigma0, "state", tol)
    e = 2.0 * ((task.R + task.B.T @ p @ task.B) @ k - task.B.T @ p @ task.A)
    j = float(np.trace(p @ task.Sigma0))
    if not np.isfinite(j):
        raise NumericError(f"non-finite cost for task {task.id}")
    return TaskSolution(P_K=p, Sigma_K=sigma, E_K=e, J=j, grad=e @ sigma)


def dare_solve(task: Task, tol: Tolerances = DEFAULT_TOL) -> BoundConstants:
    """Task-optimal controller and bound constants via fixed-point Riccati iteration.

    Iterates P <- A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q from
    P0 = Q until the relative change drops below 1e-13. Non-convergence is
    reported as a non-stabilizable pair.
    """
    a, b, q, r = task.A, task.B, task.Q, task.R
    p = q.copy()
    for _ in range(RICCATI_MAX_ITERS):
        btp = b.T @ p
        gain = np.linalg.solve(r + btp @ b, btp @ a)
        p_next = sym_part(a.T @ p @ a - a.T @ btp.T @ gain + q)
        if not np.all(np.isfinite(p_next)):
            raise NonStabilizableError(
                f"Riccati iteration diverged for task {task.id}")
        delta = np.linalg.norm(p_next - p)
        p = p_next
        if delta <= RICCATI_REL_TOL * (1.0 + np.linalg.norm(p)):
            break
    else:
        raise NonStabilizableError(
            f"Riccati iteration did not converge within {RICCATI_MAX_ITERS} "
            f"iterations for task {task.id}")

    btp = b.T @ p
    k_star = np.linalg.solve(r + btp @ b, btp @ a)
    sol = solve_task(task, k_star, tol)
    return BoundConstants(
        gamma=4.0 * min_eig_sym(task.Sigma0) ** 2 * min_eig_sym(r)
        / max_eig_sym(sol.Sigma_K),
        sigma_star_norm=max_eig_sym(sol.Sigma_K),
        lam_min_Sigma0=min_eig_sym(task.Sigma0),
        sig_min_R=min_eig_sym(r),
        J_star=sol.J,
        K_star=k_star,
    )


def riccati_residual(task: Task, P) -> float:
    """Frobenius residual of the DARE at P (independent of the iteration)."""
    a, b, q, r = task.A, task.B, task.Q, task.R
    p = as_matrix(P, "P")
    btp = b.T @ p
    recon = a.T @ p @ a - a.T @ btp.T @ np.linalg.solve(r + btp @ b, btp @ a) + q
    return float(np.linalg.norm(p - recon))


def tasks_to_json(tasks: Sequence[Task]) -> list[dict]:
    return [t.to_json() for t in tasks]


def tasks_from_json(objs: Sequence[dict]) -> list[Task]:
    return [Task.from_json(o) for o in objs]


def load_tasks(path: str) -> list[Task]:
    """Read a JSON array of task objects from a file."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise DomainError("task file must contain a JSON array of task objects")
    return tasks_from_json(data)
