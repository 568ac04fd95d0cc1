"""Multitask policy gradient on the average LQR cost.

The iteration is plain gradient descent K <- K - alpha * grad J_avg(K) with
the exact average gradient (1/N) sum_i E_K_i Sigma_K_i. The driver logs
per-task costs, optimality gaps, the average gradient norm, the worst
closed-loop spectral radius, and (optionally) bisimulation heterogeneity
values at checkpoints. Condition checkers for the stabilizing sublevel set
and for the step-size/heterogeneity assumptions of the asymptotic bound
round out the module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lqr import BoundConstants, Task, dare_solve, solve_task
from .matops import (
    DEFAULT_TOL,
    DimensionError,
    DomainError,
    InstabilityError,
    NumericError,
    Tolerances,
    as_matrix,
)
from .serialize import fmt_float

DEFAULT_MAX_ITERS = 2_000_000


@dataclass(frozen=True)
class PGConfig:
    """Policy-gradient run parameters.

    beta holds the sublevel-set constants (one per task, >= 1); None means
    10 for every task. log_every thins the per-iteration log for very long
    runs; iteration 0, bisimulation checkpoints, and the final iterate are
    always kept. log_bisim_every = 0 disables heterogeneity logging.
    """

    alpha: float
    max_iters: int = DEFAULT_MAX_ITERS
    grad_tol: float = 1e-6
    log_bisim_every: int = 0
    beta: tuple[float, ...] | None = None
    log_every: int = 1

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise DomainError("alpha must be strictly positive")
        if self.max_iters < 0 or self.log_every < 1 or self.log_bisim_every < 0:
            raise DomainError("iteration counts must be sensible nonnegative values")
        if self.beta is not None:
            beta = tuple(float(b) for b in self.beta)
            if any(b < 1.0 for b in beta):
                raise DomainError("every beta must be >= 1")
            object.__setattr__(self, "beta", beta)

    def betas(self, n_tasks: int) -> list[float]:
        """Effective sublevel-set constants: the configured ones or 10 each."""
        if self.beta is None:
            return [10.0] * n_tasks
        if len(self.beta) != n_tasks:
            raise DomainError(
                f"configured {len(self.beta)} beta values for {n_tasks} tasks")
        return list(self.beta)


@dataclass
class RunLog:
    """Trajectory of one policy-gradient run, sampled at logged iterations."""

    task_ids: list[str]
    iters: np.ndarray            # (L,)
    J: np.ndarray                # (L, N)
    gaps: np.ndarray             # (L, N)
    grad_norms: np.ndarray       # (L,)
    rho_max: np.ndarray          # (L,)
    b: np.ndarray                # (L, N), NaN where not computed
    K_logged: np.ndarray         # (L, d_u, d_x)
    K_final: np.ndarray
    final_iter: int
    final_grad_norm: float
    converged: bool
    alpha: float

    CSV_HEADER = "iter,task_id,J,gap,grad_avg_norm,rho_max,b_i"

    def csv_lines(self) -> list[str]:
        """One row per (logged iteration, task), b_i empty when not computed."""
        lines = [self.CSV_HEADER]
        for row in range(self.iters.size):
            n = int(self.iters[row])
            for col, tid in enumerate(self.task_ids):
                b = self.b[row, col]
                lines.append(
                    f"{n},{tid},{fmt_float(self.J[row, col])},"
                    f"{fmt_float(self.gaps[row, col])},"
                    f"{fmt_float(self.grad_norms[row])},"
                    f"{fmt_float(self.rho_max[row])},"
                    f"{'' if np.isnan(b) else fmt_float(b)}")
        return lines

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(self.csv_lines()) + "\n")


class _TaskStack:
    """Stacked task arrays so one iteration is a handful of batched ops.

    Produces exactly the quantities of solve_task for every task at once;
    equivalence with the per-task path is pinned by tests.
    """

    def __init__(self, tasks: Sequence[Task]):
        d_x, d_u = tasks[0].d_x, tasks[0].d_u
        for t in tasks[1:]:
            if t.d_x != d_x or t.d_u != d_u:
                raise DimensionError(f"task {t.id} has mismatched dimensions")
        self.A = np.stack([t.A for t in tasks])
        self.B = np.stack([t.B for t in tasks])
        self.Q = np.stack([t.Q for t in tasks])
        self.R = np.stack([t.R for t in tasks])
        self.S0 = np.stack([t.Sigma0 for t in tasks])
        self.d_x = d_x
        self.d_u = d_u
        self._eye = np.eye(d_x * d_x)

    @staticmethod
    def _kron_self(m: np.ndarray) -> np.ndarray:
        n, d, _ = m.shape
        return (m[:, :, None, :, None] * m[:, None, :, None, :]).reshape(n, d * d, d * d)

    def _dlyap(self, op: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        n, d, _ = rhs.shape
        vec = np.linalg.solve(self._eye - self._kron_self(op), rhs.reshape(n, d * d, 1))
        x = vec.reshape(n, d, d)
        return 0.5 * (x + x.transpose(0, 2, 1))

    def solve(self, K: np.ndarray):
        """(rho, J, E, Sigma, grad) for every task at the gain K."""
        a_k = self.A - self.B @ K
        rho = np.abs(np.linalg.eigvals(a_k)).max(axis=1)
        cost = self.Q + K.T @ (self.R @ K)
        cost = 0.5 * (cost + cost.transpose(0, 2, 1))
        p = self._dlyap(a_k.transpose(0, 2, 1), cost)
        sigma = self._dlyap(a_k, self.S0)
        bt_p = self.B.transpose(0, 2, 1) @ p
        e = 2.0 * ((self.R + bt_p @ self.B) @ K - bt_p @ self.A)
        j = np.einsum("nij,nji->n", p, self.S0)
        return rho, j, e, sigma, e @ sigma


def avg_gradient(tasks: Sequence[Task], K, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Exact gradient of the average cost: the mean of per-task gradients."""
    if len(tasks) == 0:
        raise DomainError("at least one task is required")
    grads = [solve_task(t, K, tol).grad for t in tasks]
    return np.mean(grads, axis=0)


def pg_step(tasks: Sequence[Task], K, alpha: float,
            tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """One descent update K - alpha * grad J_avg(K); stability is the caller's check."""
    return as_matrix(K, "K") - alpha * avg_gradient(tasks, K, tol)


def run_pg(tasks: Sequence[Task], K0, config: PGConfig,
           tol: Tolerances = DEFAULT_TOL,
           constants: Sequence[BoundConstants] | None = None,
           bisim_mode: str = "best") -> RunLog:
    """Run policy gradient until the average gradient norm meets grad_tol.

    Aborts with a diagnostic if any iterate destabilizes any task. When
    config.log_bisim_every > 0, heterogeneity values b_i(K_n) are computed
    at those checkpoints (these iterations are always logged).
    """
    from .bisim import hetero_profile

    if len(tasks) == 0:
        raise DomainError("at least one task is required")
    if constants is None:
        constants = [dare_solve(t, tol) for t in tasks]
    j_star = np.array([c.J_star for c in constants])
    stack = _TaskStack(tasks)
    k = as_matrix(K0, "K0")
    if k.shape != (stack.d_u, stack.d_x):
        raise DimensionError(
            f"K0 must be {stack.d_u}x{stack.d_x}, got {k.shape}")
    n_tasks = len(tasks)

    rows_iter: list[int] = []
    rows_J: list[np.ndarray] = []
    rows_gap: list[np.ndarray] = []
    rows_gn: list[float] = []
    rows_rho: list[float] = []
    rows_b: list[np.ndarray] = []
    rows_K: list[np.ndarray] = []

    converged = False
    final_grad_norm = float("nan")
    n = 0
    while True:
        rho, j, _, _, grads = stack.solve(k)
        worst = int(np.argmax(rho))
        if rho[worst] >= 1.0 - tol.stability_margin:
            raise InstabilityError(
                f"iterate {n} destabilizes task {tasks[worst].id}: "
                f"rho(A-BK) = {rho[worst]:.6g}",
                rho=float(rho[worst]), task_id=tasks[worst].id, iteration=n)
        if not np.all(np.isfinite(j)):
            raise NumericError(f"non-finite cost at iterate {n}")

        grad_avg = grads.mean(axis=0)
        grad_norm = float(np.linalg.norm(grad_avg))
        converged = grad_norm <= config.grad_tol
        at_cap = n >= config.max_iters
        want_bisim = config.log_bisim_every > 0 and n % config.log_bisim_every == 0
        if (n % config.log_every == 0) or converged or at_cap or want_bisim:
            rows_iter.append(n)
            rows_J.append(j.copy())
            rows_gap.append(j - j_star)
            rows_gn.append(grad_norm)
            rows_rho.append(float(rho[worst]))
            if want_bisim:
                rows_b.append(np.array(hetero_profile(tasks, k, bisim_mode, tol)))
            else:
                rows_b.append(np.full(n_tasks, np.nan))
            rows_K.append(k.copy())
        if converged or at_cap:
            final_grad_norm = grad_norm
            break
        k = k - config.alpha * grad_avg
        n += 1

    return RunLog(
        task_ids=[t.id for t in tasks],
        iters=np.array(rows_iter, dtype=np.int64),
        J=np.array(rows_J),
        gaps=np.array(rows_gap),
        grad_norms=np.array(rows_gn),
        rho_max=np.array(rows_rho),
        b=np.array(rows_b),
        K_logged=np.array(rows_K),
        K_final=k.copy(),
        final_iter=n,
        final_grad_norm=final_grad_norm,
        converged=converged,
        alpha=config.alpha,
    )


def initial_controller(tasks: Sequence[Task], tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Common stabilizing starting gain.

    Tries the first task's optimal controller, then the optimal controller
    of the parameter-averaged task. If neither stabilizes every task the
    caller must supply K0 explicitly.
    """
    from .lqr import NonStabilizableError, is_stabilizing

    def sources():
        yield tasks[0]
        if len(tasks) > 1:
            yield Task(
                A=np.mean([t.A for t in tasks], axis=0),
                B=np.mean([t.B for t in tasks], axis=0),
                Q=np.mean([t.Q for t in tasks], axis=0),
                R=np.mean([t.R for t in tasks], axis=0),
                Sigma0=np.mean([t.Sigma0 for t in tasks], axis=0),
                id="averaged",
            )

    for source in sources():
        try:
            k = dare_solve(source, tol).K_star
        except NonStabilizableError:
            continue
        if all(is_stabilizing(t, k, tol) for t in tasks):
            return k
    raise InstabilityError(
        "no common stabilizing initial controller found; supply K0 explicitly")


def check_stabilizing_subset(tasks: Sequence[Task], K, K0,
                             beta: Sequence[float],
                             constants: Sequence[BoundConstants] | None = None,
                             tol: Tolerances = DEFAULT_TOL) -> list[bool]:
    """Per-task membership of K in the beta sublevel set anchored at K0."""
    if len(beta) != len(tasks):
        raise DimensionError("need one beta per task")
    if any(b < 1.0 for b in beta):
        raise DomainError("every beta must be >= 1")
    if constants is None:
        constants = [dare_solve(t, tol) for t in tasks]
    out = []
    for t, c, b in zip(tasks, constants, beta):
        gap = solve_task(t, K, tol).J - c.J_star
        gap0 = solve_task(t, K0, tol).J - c.J_star
        out.append(bool(gap <= b * gap0))
    return out


@dataclass(frozen=True)
class DescentConditionsReport:
    """Diagnostic check of the step-size and heterogeneity conditions.

    All limits derive from exact task constants; L and b_sup entries are
    caller-supplied numerical estimates and are echoed as such. complete is
    False when estimates are missing and a condition could not be evaluated.
    """

    alpha: float
    gamma: tuple[float, ...]
    initial_gaps: tuple[float, ...]
    step_limit: float
    step_ok: bool
    step_margin: float
    hetero_limits: tuple[float, ...]
    hetero_ok: tuple[bool | None, ...]
    L_estimates: tuple[float, ...] | None
    b_sup_estimates: tuple[float, ...] | None
    complete: bool
    estimates_note: str = "L and b_sup values are numerical estimates, not certified"

    def all_pass(self) -> bool:
        return self.step_ok and all(ok is True for ok in self.hetero_ok)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "gamma": list(self.gamma),
            "initial_gaps": list(self.initial_gaps),
            "step_limit": self.step_limit,
            "step_ok": self.step_ok,
            "step_margin": self.step_margin,
            "hetero_limits": list(self.hetero_limits),
            "hetero_ok": list(self.hetero_ok),
            "L_estimates": None if self.L_estimates is None else list(self.L_estimates),
            "b_sup_estimates": (None if self.b_sup_estimates is None
                                else list(self.b_sup_estimates)),
            "complete": self.complete,
            "estimates_note": self.estimates_note,
        }


def check_descent_conditions(tasks: Sequence[Task], K0, alpha: float,
                          L_estimates: Sequence[float] | None,
                          b_sup_estimates: Sequence[float] | None,
                          constants: Sequence[BoundConstants] | None = None,
                          tol: Tolerances = DEFAULT_TOL) -> DescentConditionsReport:
    """Evaluate alpha < min(1/(4 max L), 4/max gamma) and the per-task
    heterogeneity condition b_sup_i^2 <= gamma_i (J_i(K0) - J_i*) / 6."""
    if constants is None:
        constants = [dare_solve(t, tol) for t in tasks]
    gammas = tuple(c.gamma for c in constants)
    gaps0 = tuple(solve_task(t, K0, tol).J - c.J_star
                  for t, c in zip(tasks, constants))

    complete = True
    step_limit = 4.0 / max(gammas)
    if L_estimates is not None:
        if len(L_estimates) != len(tasks):
            raise DimensionError("need one L estimate per task")
        step_limit = min(step_limit, 1.0 / (4.0 * max(L_estimates)))
    else:
        complete = False
    step_ok = alpha < step_limit

    hetero_limits = tuple(g * gap / 6.0 for g, gap in zip(gammas, gaps0))
    if b_sup_estimates is not None:
        if len(b_sup_estimates) != len(tasks):
            raise DimensionError("need one b_sup estimate per task")
        hetero_ok = tuple(bool(b * b <= lim)
                          for b, lim in zip(b_sup_estimates, hetero_limits))
    else:
        hetero_ok = tuple(None for _ in tasks)
        complete = False

    return DescentConditionsReport(
        alpha=float(alpha),
        gamma=gammas,
        initial_gaps=gaps0,
        step_limit=float(step_limit),
        step_ok=bool(step_ok),
        step_margin=float(step_limit - alpha),
        hetero_limits=hetero_limits,
        hetero_ok=hetero_ok,
        L_estimates=None if L_estimates is None else tuple(float(x) for x in L_estimates),
        b_sup_estimates=(None if b_sup_estimates is None
                         else tuple(float(x) for x in b_sup_estimates)),
        complete=complete,
    )


def estimate_smoothness(tasks: Sequence[Task], Ks: Sequence[np.ndarray],
                        n_directions: int = 10, step: float = 1e-4,
                        seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> list[float]:
    """Per-task curvature estimate: max second difference of J along random
    unit directions at the supplied gains. Probes that destabilize a task
    are skipped; the result is an estimate, never a certified constant."""
    rng = np.random.default_rng(seed)
    d_u, d_x = tasks[0].d_u, tasks[0].d_x
    dirs = []
    for _ in range(n_directions):
        d = rng.standard_normal((d_u, d_x))
        dirs.append(d / np.linalg.norm(d))
    out = []
    for task in tasks:
        best = 0.0
        for k in Ks:
            try:
                j0 = solve_task(task, k, tol).J
            except InstabilityError:
                continue
            for d in dirs:
                try:
                    jp = solve_task(task, k + step * d, tol).J
                    jm = solve_task(task, k - step * d, tol).J
                except InstabilityError:
                    continue
                best = max(best, abs(jp - 2.0 * j0 + jm) / (step * step))
        out.append(best)
    return out
