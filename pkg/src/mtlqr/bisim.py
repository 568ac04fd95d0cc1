"""Bisimulation certificates for pairs of LQR tasks under a shared controller.

For tasks i and j in closed loop with the same gain K, the covariance
recursions form a pair of matrix systems whose outputs converge to the
respective cost gradients. A certificate is a positive definite matrix M and
a rate lambda in (0, 1) satisfying two LMIs:

    M >= E^T E,        A^T M A - M <= -lambda M,

with E = [E_K_i, -E_K_j] and A = diag(A_K_i, A_K_j). Any such pair induces
an upper bound on the gradient gap between the two tasks:

    value = sqrt(2) tr(M diag(Sigma0_i, Sigma0_j)) / (lambda sqrt(min_eig M)).

Certificates come in two flavors: a closed-form constructive one (Lyapunov
solve, always feasible for admissible lambda) and an optimized one (conic
program minimizing the value for a fixed lambda chosen from the closed-loop
stability margin). Averaging pair values gives the per-task heterogeneity
profile b_i(K).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from . import conic
from .lqr import Task, solve_task
from .matops import (
    DEFAULT_TOL,
    DomainError,
    InstabilityError,
    Tolerances,
    as_matrix,
    max_eig_sym,
    min_eig_sym,
    require_symmetric,
    solve_dlyap,
    spectral_radius,
    sym_part,
)

VALIDATION_STATE_SAMPLES = 20
VALIDATION_HORIZON = 50


@dataclass(frozen=True)
class PairSystem:
    """Augmented closed-loop pair: block dynamics, output map, initial state."""

    A_ij: np.ndarray
    E_ij: np.ndarray
    Sigma0_ij: np.ndarray
    i_id: str = "i"
    j_id: str = "j"

    @property
    def d_x(self) -> int:
        return self.A_ij.shape[0] // 2

    def blocks(self):
        """(A_i, A_j, E_i, E_j, Sigma0_i, Sigma0_j) views of the pair data."""
        d = self.d_x
        return (self.A_ij[:d, :d], self.A_ij[d:, d:],
                self.E_ij[:, :d], -self.E_ij[:, d:],
                self.Sigma0_ij[:d, :d], self.Sigma0_ij[d:, d:])


@dataclass(frozen=True)
class Certificate:
    """One (M, lambda) certificate and its induced gradient-gap bound."""

    M: np.ndarray
    lam: float
    value: float
    method: str  # constructive | optimized
    feas_slack: float
    i_id: str = "i"
    j_id: str = "j"
    solver_fallback: bool = False

    def to_json(self) -> dict:
        return {
            "i": self.i_id,
            "j": self.j_id,
            "lambda": self.lam,
            "value": self.value,
            "method": self.method,
            "feas_slack": self.feas_slack,
            "M": self.M.tolist(),
        }


def build_pair(task_i: Task, task_j: Task, K,
               tol: Tolerances = DEFAULT_TOL) -> PairSystem:
    """Assemble the augmented pair system for two tasks under one gain."""
    if task_i.d_x != task_j.d_x or task_i.d_u != task_j.d_u:
        raise DomainError(
            f"tasks {task_i.id} and {task_j.id} have mismatched dimensions")
    sol_i = solve_task(task_i, K, tol)
    sol_j = solve_task(task_j, K, tol)
    k = as_matrix(K, "K")
    d = task_i.d_x
    a = np.zeros((2 * d, 2 * d))
    a[:d, :d] = task_i.A - task_i.B @ k
    a[d:, d:] = task_j.A - task_j.B @ k
    s0 = np.zeros((2 * d, 2 * d))
    s0[:d, :d] = task_i.Sigma0
    s0[d:, d:] = task_j.Sigma0
    e = np.hstack([sol_i.E_K, -sol_j.E_K])
    return PairSystem(A_ij=a, E_ij=e, Sigma0_ij=s0,
                      i_id=task_i.id, j_id=task_j.id)


def lambda_for_pair(pair: PairSystem, eps_frac: float | None = None,
                    tol: Tolerances = DEFAULT_TOL) -> float:
    """Decay rate from the pair's stability margin: (1 - rho^2)(1 - eps_frac).

    The shrink factor is relative so the result stays inside (0, 1 - rho^2)
    no matter how close the closed loop sits to the stability boundary.
    """
    if eps_frac is None:
        eps_frac = tol.eps_lambda_frac
    if not 0.0 < eps_frac < 1.0:
        raise DomainError("eps_frac must lie in (0, 1)")
    rho = spectral_radius(pair.A_ij)
    if rho >= 1.0:
        raise InstabilityError(
            f"pair ({pair.i_id}, {pair.j_id}) is not stable: rho = {rho:.6g}",
            rho=rho)
    return (1.0 - rho * rho) * (1.0 - eps_frac)


def certificate_value(M, lam: float, Sigma0_ij) -> float:
    """Gradient-gap bound sqrt(2) tr(M S0) / (lam sqrt(min_eig M)) for a PD M."""
    m = require_symmetric(M, "M")
    mn = min_eig_sym(m)
    if mn <= 0.0:
        raise DomainError("certificate matrix M must be positive definite")
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    s0 = as_matrix(Sigma0_ij, "Sigma0_ij")
    return float(np.sqrt(2.0) * np.trace(m @ s0) / (lam * np.sqrt(mn)))


def bisim_value(M, lam: float, Sig_i, Sig_j) -> float:
    """Bisimulation-function value at a state pair (no lambda division).

    The decay rate only scales the asymptotic bound, not the instantaneous
    value; it is accepted here so certificates carry a complete (M, lambda)
    context, and is validated but unused in the formula.
    """
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    m = require_symmetric(M, "M")
    mn = min_eig_sym(m)
    if mn <= 0.0:
        raise DomainError("M must be positive definite")
    si = as_matrix(Sig_i, "Sig_i")
    sj = as_matrix(Sig_j, "Sig_j")
    d = si.shape[0]
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = si
    block[d:, d:] = sj
    return float(np.sqrt(2.0) * np.trace(m @ block) / np.sqrt(mn))


def constructive_certificate(pair: PairSystem, lam: float,
                             tol: Tolerances = DEFAULT_TOL) -> Certificate:
    """Closed-form feasible certificate from a Lyapunov solve.

    With A_lam = A / sqrt(1 - lam), M = Mbar + E^T E where Mbar solves
    Mbar = A_lam^T Mbar A_lam + (A_lam^T E^T E A_lam + psd_slack I). Feasible
    whenever lam < 1 - rho(A)^2; generally not value-optimal.
    """
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    a_lam = pair.A_ij / np.sqrt(1.0 - lam)
    if spectral_radius(a_lam) >= 1.0 - tol.stability_margin:
        raise InstabilityError(
            f"lambda = {lam:.6g} too large for pair ({pair.i_id}, {pair.j_id}): "
            f"A / sqrt(1 - lambda) is unstable", rho=spectral_radius(a_lam))
    ete = sym_part(pair.E_ij.T @ pair.E_ij)
    forcing = sym_part(a_lam.T @ ete @ a_lam) + tol.psd_slack * np.eye(ete.shape[0])
    mbar = solve_dlyap(a_lam, forcing, "cost", tol)
    m = sym_part(mbar + ete)
    cert = Certificate(
        M=m, lam=lam, value=certificate_value(m, lam, pair.Sigma0_ij),
        method="constructive", feas_slack=float("nan"),
        i_id=pair.i_id, j_id=pair.j_id)
    return replace(cert, feas_slack=validate_certificate(pair, cert, tol))


def build_certificate_program(pair: PairSystem, lam: float,
                              eps_s: float | None = None,
                              tol: Tolerances = DEFAULT_TOL) -> conic.ConicProgram:
    """Conic program minimizing the certificate value at a fixed lambda.

    Variables are (svec(M), s, u). The objective u is a monotone surrogate
    for the value: at the optimum u = (sqrt(2) tr(M S0) / lam)^2 / (4 s) with
    s = min(min_eig(M), floor), enforced through the rotated second-order
    constraint ||(sqrt(2) tr(M S0)/lam, u - s)|| <= u + s together with
    M >= s I, s >= eps_s, M >= E^T E, and A^T M A - (1 - lam) M <= 0.
    """
    if eps_s is None:
        eps_s = tol.eps_s
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    if eps_s <= 0.0:
        raise DomainError("eps_s must be strictly positive")
    dd = pair.A_ij.shape[0]
    m_dim = conic.svec_dim(dd)
    nvar = m_dim + 2
    s_col, u_col = m_dim, m_dim + 1

    svec_s0 = conic.svec(pair.Sigma0_ij)
    svec_eye = conic.svec(np.eye(dd))
    ete = sym_part(pair.E_ij.T @ pair.E_ij)
    a_ij = pair.A_ij
    lmi_op = conic.sym_operator_matrix(
        lambda x: (1.0 - lam) * x - a_ij.T @ x @ a_ij, dd)

    rows = 3 + 1 + 3 * m_dim
    A = np.zeros((rows, nvar))
    b = np.zeros(rows)

    # rotated SOC: (u + s, sqrt(2) tr(M S0)/lam, u - s)
    A[0, s_col] = -1.0
    A[0, u_col] = -1.0
    A[1, :m_dim] = -(np.sqrt(2.0) / lam) * svec_s0
    A[2, s_col] = 1.0
    A[2, u_col] = -1.0

    # s >= eps_s
    A[3, s_col] = -1.0
    b[3] = -eps_s

    at = 4
    # M - s I >= 0
    A[at:at + m_dim, :m_dim] = -np.eye(m_dim)
    A[at:at + m_dim, s_col] = svec_eye
    at += m_dim
    # M - E^T E >= 0
    A[at:at + m_dim, :m_dim] = -np.eye(m_dim)
    b[at:at + m_dim] = -conic.svec(ete)
    at += m_dim
    # (1 - lam) M - A^T M A >= 0
    A[at:at + m_dim, :m_dim] = -lmi_op

    c = np.zeros(nvar)
    c[u_col] = 1.0
    cones = (
        conic.Cone("second_order", 3),
        conic.Cone("nonnegative", 1),
        conic.Cone("psd", dd),
        conic.Cone("psd", dd),
        conic.Cone("psd", dd),
    )
    return conic.ConicProgram(c=c, A=A, b=b, cones=cones)


# A repaired optimized certificate must beat this independent revalidation
# threshold or it is discarded in favor of the constructive one.
_ACCEPT_SLACK = 1e-7


def _optimized_certificate(pair: PairSystem, lam: float,
                           tol: Tolerances) -> Certificate | None:
    """Solve the certificate program; None when no valid certificate results.

    The program is positively homogeneous in (M, s, u), so it is solved for
    E scaled to unit norm (floor scaled accordingly) and the solution mapped
    back exactly; this keeps the solver well conditioned even when E = 0 and
    only the floor is active.

    Near-marginal pairs make the decay LMI razor thin and the interior-point
    method may stop with small residual infeasibility. The returned matrix
    is then repaired deterministically: scaling M up covers a deficit
    against E^T E without touching the homogeneous LMI, and a slight lambda
    decrease covers an LMI deficit. The repaired certificate is revalidated
    from scratch and dropped unless it passes outright, so soundness never
    rests on the solver's status report.
    """
    dd = pair.A_ij.shape[0]
    ete = sym_part(pair.E_ij.T @ pair.E_ij)
    scale = max(max_eig_sym(ete), tol.eps_s)
    scaled = PairSystem(A_ij=pair.A_ij, E_ij=pair.E_ij / np.sqrt(scale),
                        Sigma0_ij=pair.Sigma0_ij, i_id=pair.i_id, j_id=pair.j_id)
    prog = build_certificate_program(scaled, lam, eps_s=tol.eps_s / scale, tol=tol)
    sol = conic.solve_conic(prog)
    if sol.status not in ("optimal", "numerical") or not np.all(np.isfinite(sol.x)):
        return None
    m = scale * conic.unsvec(sol.x[:conic.svec_dim(dd)], dd)
    m = sym_part(m)
    mn = min_eig_sym(m)
    if mn <= 0.0:
        return None

    deficit = -min_eig_sym(sym_part(m - ete))
    if deficit > 0.0:
        m = m * (1.0 + (deficit / mn) * (1.0 + 1e-6))
        mn = min_eig_sym(m)
    lam_eff = lam
    lmi_deficit = -min_eig_sym(sym_part((1.0 - lam_eff) * m - pair.A_ij.T @ m @ pair.A_ij))
    if lmi_deficit > 0.0:
        lam_eff = lam_eff - (lmi_deficit / mn) * (1.0 + 1e-6)
        if lam_eff <= 0.0:
            return None
    cert = Certificate(
        M=m, lam=lam_eff, value=certificate_value(m, lam_eff, pair.Sigma0_ij),
        method="optimized", feas_slack=float("nan"),
        i_id=pair.i_id, j_id=pair.j_id)
    slack = validate_certificate(pair, cert, tol)
    if slack > _ACCEPT_SLACK:
        return None
    return replace(cert, feas_slack=slack)


def _task_sort_key(task: Task):
    return (task.id, task.A.tobytes(), task.B.tobytes(), task.Q.tobytes(),
            task.R.tobytes(), task.Sigma0.tobytes())


def certify_pair(task_i: Task, task_j: Task, K, mode: str = "best",
                 tol: Tolerances = DEFAULT_TOL, lambda_grid: int = 0) -> Certificate:
    """Certificate for one task pair under K.

    mode "constructive" returns the closed-form certificate, "optimized" the
    conic-program one (falling back to constructive if the solver fails),
    and "best" the smaller of the two. lambda_grid > 0 additionally searches
    that many decay rates over (0, 1 - rho^2) in optimized/best mode instead
    of only the margin-based default.

    The pair is certified in a canonical task order and the certificate
    mapped back by an exact block permutation, so the value is bit-identical
    under argument swap regardless of solver roundoff.
    """
    if mode not in ("constructive", "optimized", "best"):
        raise DomainError(f"unknown certificate mode {mode!r}")
    if _task_sort_key(task_j) < _task_sort_key(task_i):
        cert = certify_pair(task_j, task_i, K, mode, tol, lambda_grid)
        d = task_i.d_x
        swapped = np.zeros_like(cert.M)
        swapped[:d, :d] = cert.M[d:, d:]
        swapped[d:, d:] = cert.M[:d, :d]
        swapped[:d, d:] = cert.M[d:, :d]
        swapped[d:, :d] = cert.M[:d, d:]
        return replace(cert, M=swapped, i_id=task_i.id, j_id=task_j.id)
    pair = build_pair(task_i, task_j, K, tol)
    lam0 = lambda_for_pair(pair, tol=tol)

    if mode == "constructive":
        return constructive_certificate(pair, lam0, tol)

    lams = [lam0]
    if lambda_grid > 0:
        rho = spectral_radius(pair.A_ij)
        top = 1.0 - rho * rho
        lams += [top * k / (lambda_grid + 1) for k in range(1, lambda_grid + 1)]

    best: Certificate | None = None
    for lam in lams:
        cand = _optimized_certificate(pair, lam, tol)
        if cand is not None and (best is None or cand.value < best.value):
            best = cand

    try:
        fallback = constructive_certificate(pair, lam0, tol)
    except InstabilityError:
        # extremely thin stability margin: the Lyapunov-based construction
        # is out of reach, but an optimized certificate may still exist
        if best is None:
            raise
        fallback = None
    if mode == "optimized":
        # An optimized certificate that fails to dominate the constructive
        # feasible point means the solver stalled; fall back in that case.
        if best is None or (fallback is not None and best.value > fallback.value):
            return replace(fallback, solver_fallback=True)
        return best
    if best is None or (fallback is not None and fallback.value <= best.value):
        return fallback
    return best


def certify_all_pairs(tasks: Sequence[Task], K, mode: str = "best",
                      tol: Tolerances = DEFAULT_TOL, jobs: int = 1,
                      lambda_grid: int = 0) -> list[Certificate]:
    """Certificates for every unordered task pair (i < j), in index order."""
    pairs = list(combinations(range(len(tasks)), 2))

    def work(ij):
        i, j = ij
        return certify_pair(tasks[i], tasks[j], K, mode, tol, lambda_grid)

    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, pairs))
    return [work(ij) for ij in pairs]


def hetero_profile(tasks: Sequence[Task], K, mode: str = "best",
                   tol: Tolerances = DEFAULT_TOL, jobs: int = 1,
                   certificates: Sequence[Certificate] | None = None) -> list[float]:
    """Average certified gradient-gap bound b_i(K) per task.

    b_i = (1/N) sum over j != i of the pair values; each unordered pair is
    certified once and reused for both of its endpoints. N = 1 gives [0.0].
    """
    n = len(tasks)
    if n == 0:
        raise DomainError("at least one task is required")
    if certificates is None:
        certificates = certify_all_pairs(tasks, K, mode, tol, jobs)
    b = np.zeros(n)
    for (i, j), cert in zip(combinations(range(n), 2), certificates):
        b[i] += cert.value
        b[j] += cert.value
    return [float(v / n) for v in b]


def validate_certificate(pair: PairSystem, cert: Certificate,
                         tol: Tolerances = DEFAULT_TOL,
                         n_samples: int = VALIDATION_STATE_SAMPLES,
                         horizon: int = VALIDATION_HORIZON,
                         seed: int = 0) -> float:
    """Max violation of the certificate conditions, recomputed from scratch.

    Checks the two LMIs and positive definiteness of M by eigenvalue, the
    output-distance condition on random PSD state pairs, and the decay
    condition along one trajectory of the covariance recursion. Pure check;
    returns the worst violation (0 when everything holds).
    """
    m = sym_part(cert.M)
    lam = cert.lam
    ete = sym_part(pair.E_ij.T @ pair.E_ij)
    viol = [
        max(0.0, -min_eig_sym(m)),
        max(0.0, -min_eig_sym(sym_part(m - ete))),
        max(0.0, -min_eig_sym(sym_part((1.0 - lam) * m - pair.A_ij.T @ m @ pair.A_ij))),
    ]

    if min_eig_sym(m) > 0.0 and 0.0 < lam < 1.0:
        a_i, a_j, e_i, e_j, s0_i, s0_j = pair.blocks()
        d = pair.d_x
        rng = np.random.default_rng(seed)
        for _ in range(n_samples):
            g_i = rng.standard_normal((d, d))
            g_j = rng.standard_normal((d, d))
            sig_i = g_i @ g_i.T
            sig_j = g_j @ g_j.T
            out_gap = float(np.linalg.norm(e_i @ sig_i - e_j @ sig_j))
            viol.append(max(0.0, out_gap - bisim_value(m, lam, sig_i, sig_j)))

        v0 = bisim_value(m, lam, s0_i, s0_j)
        sig_i, sig_j = s0_i.copy(), s0_j.copy()
        v_prev = v0
        for _ in range(horizon):
            sig_i = a_i @ sig_i @ a_i.T + s0_i
            sig_j = a_j @ sig_j @ a_j.T + s0_j
            v_next = bisim_value(m, lam, sig_i, sig_j)
            viol.append(max(0.0, v_next - (1.0 - lam) * v_prev - v0))
            v_prev = v_next

    return float(max(viol))
