"""Dense real-matrix kernels shared by every other module.

Everything here is a pure function of ``numpy.float64`` arrays: spectral
radii, discrete Lyapunov solves, symmetric eigenvalue bounds, and PSD tests.
Eigenvalue work is delegated to LAPACK (Hessenberg + shifted QR for general
matrices, symmetric tridiagonalization for symmetric ones); Lyapunov
equations are solved by Kronecker vectorization, which is exact and trivially
verifiable at the small dimensions this package targets (d <= 64).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DIM = 64


class DimensionError(ValueError):
    """Matrix dimensions are inconsistent or unsupported."""


class SymmetryError(ValueError):
    """A matrix required to be symmetric is not, beyond roundoff."""


class NumericError(ArithmeticError):
    """An iterative kernel failed to converge or produced non-finite values."""


class DomainError(ValueError):
    """An input is outside the mathematical domain of the operation."""


class InstabilityError(RuntimeError):
    """A closed loop (or plain system matrix) is not Schur stable.

    Attributes:
        rho: offending spectral radius, when known.
        task_id: task whose loop is unstable, when known.
        iteration: policy-gradient iteration at which it occurred, when known.
    """

    def __init__(self, message: str, rho: float | None = None,
                 task_id: str | None = None, iteration: int | None = None):
        super().__init__(message)
        self.rho = rho
        self.task_id = task_id
        self.iteration = iteration


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs used across the package.

    ``eps_lambda_frac`` and ``eps_s`` are the small positive constants that
    keep the certificate optimization strictly feasible; the rest are plain
    floating-point slack levels.
    """

    stability_margin: float = 1e-8
    psd_slack: float = 1e-9
    lyap_residual: float = 1e-10
    fd_step: float = 1e-6
    eps_lambda_frac: float = 1e-3
    eps_s: float = 1e-9

    def __post_init__(self):
        for name in ("stability_margin", "psd_slack", "lyap_residual",
                     "fd_step", "eps_lambda_frac", "eps_s"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"Tolerances.{name} must be strictly positive")
        if not self.eps_lambda_frac < 1.0:
            raise DomainError("Tolerances.eps_lambda_frac must be < 1")


DEFAULT_TOL = Tolerances()


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float64 array (row-major)."""
    m = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} contains NaN or Inf entries")
    return m


def _require_square(m: np.ndarray, name: str) -> np.ndarray:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def sym_part(m: np.ndarray) -> np.ndarray:
    """Symmetrize by averaging with the transpose (drift control)."""
    return 0.5 * (m + m.T)


def require_symmetric(m, name: str = "matrix", rel: float = 1e-12) -> np.ndarray:
    """Check symmetry to relative tolerance and return the symmetrized matrix."""
    a = _require_square(as_matrix(m, name), name)
    gap = np.linalg.norm(a - a.T)
    if gap > rel * (1.0 + np.linalg.norm(a)):
        raise SymmetryError(f"{name} is asymmetric: ||M - M^T||_F = {gap:.3e}")
    return sym_part(a)


def spectral_radius(A) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    a = _require_square(as_matrix(A, "A"), "A")
    if a.shape[0] == 0:
        raise DimensionError("A must be nonempty")
    try:
        ev = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue iteration did not converge: {exc}") from exc
    return float(np.max(np.abs(ev)))


def solve_dlyap(A, Q, form: str = "cost", tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Solve a discrete Lyapunov equation by Kronecker vectorization.

    form="cost"  solves X = A^T X A + Q  (value/cost-to-go recursion),
    form="state" solves X = A X A^T + Q  (covariance recursion).

    Requires spectral_radius(A) < 1 - stability_margin; the result is
    symmetrized and checked against the residual tolerance.
    """
    a = _require_square(as_matrix(A, "A"), "A")
    q = require_symmetric(Q, "Q")
    if a.shape != q.shape:
        raise DimensionError(f"A and Q shapes differ: {a.shape} vs {q.shape}")
    if form not in ("cost", "state"):
        raise DomainError(f"form must be 'cost' or 'state', got {form!r}")
    d = a.shape[0]
    if d > MAX_DIM:
        raise DimensionError(f"dimension {d} exceeds supported maximum {MAX_DIM}")
    rho = spectral_radius(a)
    if rho >= 1.0 - tol.stability_margin:
        raise InstabilityError(
            f"cannot solve Lyapunov equation: spectral radius {rho:.6g} >= 1", rho=rho)

    op = a.T if form == "cost" else a
    lhs = np.eye(d * d) - np.kron(op, op)
    x = np.linalg.solve(lhs, q.reshape(-1)).reshape(d, d)
    x = sym_part(x)

    recon = op @ x @ op.T
    resid = np.linalg.norm(x - recon - q)
    if not np.isfinite(resid) or resid > tol.lyap_residual * (1.0 + np.linalg.norm(x)):
        raise NumericError(
            f"Lyapunov residual {resid:.3e} exceeds tolerance "
            f"{tol.lyap_residual:.1e} * (1 + ||X||_F)")
    return x


def min_eig_sym(M) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    m = require_symmetric(M, "M")
    try:
        ev = np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigenvalue iteration failed: {exc}") from exc
    return float(ev[0])


def max_eig_sym(M) -> float:
    """Largest eigenvalue of a symmetric matrix."""
    m = require_symmetric(M, "M")
    try:
        ev = np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigenvalue iteration failed: {exc}") from exc
    return float(ev[-1])


def is_psd(M, slack: float | None = None, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Whether min_eig_sym(M) >= -slack * (1 + ||M||_F)."""
    if slack is None:
        slack = tol.psd_slack
    m = require_symmetric(M, "M")
    return min_eig_sym(m) >= -slack * (1.0 + np.linalg.norm(m))
