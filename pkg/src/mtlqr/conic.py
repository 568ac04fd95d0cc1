"""Standard-form conic programs and a high-accuracy solver front end.

A program is  minimize c^T x  subject to  b - A x in K,  where K is a product
of zero, nonnegative, second-order, and PSD cones listed block by block. PSD
blocks use the scaled symmetric vectorization (column-major upper triangle,
off-diagonals multiplied by sqrt(2)) so that Euclidean inner products of
vectorized matrices equal trace inner products.

solve_conic adapts this form to the Clarabel interior-point solver; the
residual check in check_solution recomputes every cone violation from scratch
and never trusts the solver's own reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .matops import DimensionError, DomainError

SQRT2 = np.sqrt(2.0)

MAX_SOLVER_ITERS = 200

# Solver residuals must beat this before a solution is reported optimal.
PRIMAL_FEAS_REL = 1e-7


@dataclass(frozen=True)
class Cone:
    """One cone block: kind in {zero, nonnegative, second_order, psd}.

    ``dim`` is the vector length for the first three kinds and the matrix
    side for psd blocks.
    """

    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("zero", "nonnegative", "second_order", "psd"):
            raise DomainError(f"unknown cone kind {self.kind!r}")
        if self.dim < 1:
            raise DomainError("cone dimension must be >= 1")

    @property
    def rows(self) -> int:
        if self.kind == "psd":
            return svec_dim(self.dim)
        return self.dim


@dataclass(frozen=True)
class ConicProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: tuple[Cone, ...]

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        a = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        rows = sum(k.rows for k in self.cones)
        if a.shape != (b.size, c.size):
            raise DimensionError(
                f"constraint matrix must be {b.size}x{c.size}, got {a.shape}")
        if rows != b.size:
            raise DimensionError(
                f"cone rows ({rows}) do not match constraint rows ({b.size})")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "cones", tuple(self.cones))

    @property
    def nvar(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class ConicSolution:
    x: np.ndarray
    status: str  # optimal | infeasible | max_iter | numerical
    primal_residual: float
    objective: float


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def svec(M: np.ndarray) -> np.ndarray:
    """Scaled vectorization of a symmetric matrix (upper triangle, col-major)."""
    n = M.shape[0]
    out = np.empty(svec_dim(n))
    k = 0
    for j in range(n):
        for i in range(j + 1):
            out[k] = M[i, j] if i == j else SQRT2 * M[i, j]
            k += 1
    return out


def unsvec(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of svec."""
    if v.size != svec_dim(n):
        raise DimensionError(f"svec vector of side {n} must have {svec_dim(n)} entries")
    m = np.zeros((n, n))
    k = 0
    for j in range(n):
        for i in range(j + 1):
            if i == j:
                m[i, j] = v[k]
            else:
                m[i, j] = m[j, i] = v[k] / SQRT2
            k += 1
    return m


def sym_operator_matrix(fn, n: int) -> np.ndarray:
    """Matrix of a linear map on symmetric matrices in svec coordinates."""
    d = svec_dim(n)
    out = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        out[:, k] = svec(fn(unsvec(e, n)))
    return out


def _clarabel_cones(cones):
    import clarabel

    mapping = []
    for cone in cones:
        if cone.kind == "zero":
            mapping.append(clarabel.ZeroConeT(cone.dim))
        elif cone.kind == "nonnegative":
            mapping.append(clarabel.NonnegativeConeT(cone.dim))
        elif cone.kind == "second_order":
            mapping.append(clarabel.SecondOrderConeT(cone.dim))
        else:
            mapping.append(clarabel.PSDTriangleConeT(cone.dim))
    return mapping


def solve_conic(p: ConicProgram) -> ConicSolution:
    """Solve a program with Clarabel at tight tolerances.

    Status is decided from an independent residual recomputation: a solver
    "solved" claim that fails the feasibility threshold is downgraded to
    "numerical" rather than trusted.
    """
    import clarabel

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = MAX_SOLVER_ITERS
    settings.tol_gap_abs = 1e-12
    settings.tol_gap_rel = 1e-12
    settings.tol_feas = 1e-12

    solver = clarabel.DefaultSolver(
        sparse.csc_matrix((p.nvar, p.nvar)),
        p.c,
        sparse.csc_matrix(p.A),
        p.b,
        _clarabel_cones(p.cones),
        settings,
    )
    raw = solver.solve()
    x = np.asarray(raw.x, dtype=np.float64)
    name = str(raw.status)

    if name in ("PrimalInfeasible", "DualInfeasible",
                "AlmostPrimalInfeasible", "AlmostDualInfeasible"):
        return ConicSolution(x=x, status="infeasible",
                             primal_residual=float("nan"), objective=float("nan"))

    residual = check_solution(p, x)
    objective = float(p.c @ x)
    feas_ok = np.all(np.isfinite(x)) and residual <= PRIMAL_FEAS_REL * (
        1.0 + np.linalg.norm(p.b))
    if name in ("Solved", "AlmostSolved") and feas_ok:
        status = "optimal"
    elif name in ("MaxIterations", "MaxTime"):
        status = "max_iter"
    else:
        status = "numerical"
    return ConicSolution(x=x, status=status, primal_residual=residual,
                         objective=objective)


def check_solution(p: ConicProgram, x) -> float:
    """Max cone violation of b - A x, recomputed from scratch."""
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    if xv.size != p.nvar:
        raise DimensionError(f"x must have {p.nvar} entries, got {xv.size}")
    s = p.b - p.A @ xv
    worst = 0.0
    at = 0
    for cone in p.cones:
        block = s[at:at + cone.rows]
        at += cone.rows
        if cone.kind == "zero":
            viol = float(np.max(np.abs(block))) if block.size else 0.0
        elif cone.kind == "nonnegative":
            viol = float(max(0.0, -np.min(block))) if block.size else 0.0
        elif cone.kind == "second_order":
            viol = float(max(0.0, np.linalg.norm(block[1:]) - block[0]))
        else:
            ev = np.linalg.eigvalsh(unsvec(block, cone.dim))
            viol = float(max(0.0, -ev[0]))
        worst = max(worst, viol)
    return worst


def dump_program(p: ConicProgram) -> str:
    """Plain-text standard-form listing, for debugging."""
    lines = [f"minimize c^T x over {p.nvar} variables",
             "c = " + np.array2string(p.c, precision=6)]
    at = 0
    for idx, cone in enumerate(p.cones):
        rows = cone.rows
        lines.append(f"block {idx}: {cone.kind}(dim={cone.dim}), rows {at}..{at + rows - 1}")
        for r in range(at, at + rows):
            lines.append(
                f"  b[{r}] - A[{r},:] x = "
                f"{p.b[r]:+.6g} - {np.array2string(p.A[r], precision=6)} . x")
        at += rows
    return "\n".join(lines)
