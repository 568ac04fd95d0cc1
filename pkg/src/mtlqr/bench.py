"""Seeded benchmark families, bound validation, and the experiment driver.

Two task families are generated from a portable PRNG (xoshiro256** seeded
via splitmix64) so a (family, seed, n) triple names the same collection in
every environment:

  pendulum: linearized inverted pendulum, d_x = 2, d_u = 1, draws per task
            in order length ~ U[0.5, 1], mass ~ U[0.1, 0.5], q ~ U[0.1, 0.5],
            r ~ U[0.01, 0.05]; dt = 0.05, gravity 10, Sigma0 = 0.01 I.
  unicycle: unicycle kinematics linearized at a drawn operating point,
            d_x = 3, d_u = 2, draws v0 ~ U[0.1, 1.75], theta0 ~ U[0, pi/2],
            q ~ U[0.1, 0.5], r ~ U[0.01, 0.05]; dt = 0.05, Sigma0 = I.

An experiment runs multitask policy gradient on a collection, certifies the
pair heterogeneity at the converged controller, validates the suboptimality
bounds, and writes run.csv / certificates.json / bounds.json / manifest.json
deterministically (17 significant digits everywhere).
"""

from __future__ import annotations

import math
import os
import platform
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .bisim import certify_all_pairs, hetero_profile
from .lqr import BoundConstants, Task, dare_solve, solve_task
from .matops import DEFAULT_TOL, DomainError, Tolerances
from .policy_grad import PGConfig, RunLog, initial_controller, run_pg
from .prng import Xoshiro256StarStar
from .serialize import dump_json

DT = 0.05
PENDULUM_GRAVITY = 10.0

RUN_CSV = "run.csv"
CERTIFICATES_JSON = "certificates.json"
BOUNDS_JSON = "bounds.json"
MANIFEST_JSON = "manifest.json"


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    n_tasks: int
    seed: int
    pg: PGConfig
    collections: int = 1
    mode: str = "best"
    jobs: int = 1
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        # "inline" marks experiments on an explicit task list (no generator).
        if self.family not in ("pendulum", "unicycle", "inline"):
            raise DomainError(f"unknown task family {self.family!r}")
        if self.n_tasks < 1 or self.collections < 1 or self.jobs < 1:
            raise DomainError("n_tasks, collections, and jobs must be >= 1")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise DomainError("seed must fit in 64 unsigned bits")
        if self.mode not in ("constructive", "optimized", "best"):
            raise DomainError(f"unknown certificate mode {self.mode!r}")


def gen_pendulum(seed: int, n: int) -> list[Task]:
    """n inverted-pendulum tasks drawn from the documented seeded recipe."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = Xoshiro256StarStar(seed)
    tasks = []
    for k in range(n):
        length = rng.uniform(0.5, 1.0)
        mass = rng.uniform(0.1, 0.5)
        q = rng.uniform(0.1, 0.5)
        r = rng.uniform(0.01, 0.05)
        a = np.array([[1.0, DT], [PENDULUM_GRAVITY * DT / length, 1.0]])
        b = np.array([[0.0], [DT / (mass * length * length)]])
        tasks.append(Task(A=a, B=b, Q=q * np.eye(2), R=np.array([[r]]),
                          Sigma0=0.01 * np.eye(2), id=f"pendulum-{k}"))
    return tasks


def gen_unicycle(seed: int, n: int) -> list[Task]:
    """n linearized-unicycle tasks drawn from the documented seeded recipe."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = Xoshiro256StarStar(seed)
    tasks = []
    for k in range(n):
        v0 = rng.uniform(0.1, 1.75)
        theta0 = rng.uniform(0.0, math.pi / 2.0)
        q = rng.uniform(0.1, 0.5)
        r = rng.uniform(0.01, 0.05)
        sin, cos = math.sin(theta0), math.cos(theta0)
        a = np.array([
            [1.0, 0.0, -DT * v0 * sin],
            [0.0, 1.0, DT * v0 * cos],
            [0.0, 0.0, 1.0],
        ])
        b = np.array([
            [DT * cos, 0.0],
            [DT * sin, 0.0],
            [0.0, DT],
        ])
        tasks.append(Task(A=a, B=b, Q=q * np.eye(3), R=r * np.eye(2),
                          Sigma0=np.eye(3), id=f"unicycle-{k}"))
    return tasks


def generate_tasks(family: str, seed: int, n: int) -> list[Task]:
    if family == "pendulum":
        return gen_pendulum(seed, n)
    if family == "unicycle":
        return gen_unicycle(seed, n)
    raise DomainError(f"unknown task family {family!r}")


def reduction_stats(ours: Sequence[float], baseline: Sequence[float]) -> float:
    """Mean percentage reduction of ours relative to baseline entries."""
    if len(ours) != len(baseline):
        raise DomainError("series must have equal length")
    if len(ours) == 0:
        raise DomainError("series must be nonempty")
    if any(b <= 0.0 for b in baseline):
        raise DomainError("baseline entries must be strictly positive")
    return float(np.mean([(1.0 - o / b) * 100.0 for o, b in zip(ours, baseline)]))


def validate_bounds(tasks: Sequence[Task], log: RunLog, mode: str = "best",
                    tol: Tolerances = DEFAULT_TOL,
                    constants: Sequence[BoundConstants] | None = None,
                    b_values: Sequence[float] | None = None) -> dict:
    """Suboptimality-bound report at the converged controller of a run.

    For each task, compares the actual optimality gap against the certified
    bound 3 ||Sigma*|| b_i^2 / (4 lmin(Sigma0)^2 smin(R)) and also reports
    the algorithm-independent variant with the 2/(...) constant, treating
    the converged iterate as the average-cost minimizer surrogate.
    """
    if not log.converged:
        raise DomainError(
            "run did not converge (final ||grad J_avg||_F = "
            f"{log.final_grad_norm:.3e}); refusing to validate bounds")
    return controller_bound_report(
        tasks, log.K_final, mode=mode, tol=tol, constants=constants,
        b_values=b_values, final_iter=int(log.final_iter),
        final_grad_norm=log.final_grad_norm)


def controller_bound_report(tasks: Sequence[Task], k_f: np.ndarray,
                            mode: str = "best", tol: Tolerances = DEFAULT_TOL,
                            constants: Sequence[BoundConstants] | None = None,
                            b_values: Sequence[float] | None = None,
                            final_iter: int = -1,
                            final_grad_norm: float = float("nan")) -> dict:
    """Bound report for an explicit controller (shared by run and validate)."""
    if constants is None:
        constants = [dare_solve(t, tol) for t in tasks]
    if b_values is None:
        b_values = hetero_profile(tasks, k_f, mode, tol)

    entries = []
    all_pass = True
    for task, consts, b_i in zip(tasks, constants, b_values):
        gap = solve_task(task, k_f, tol).J - consts.J_star
        denom = consts.lam_min_Sigma0 ** 2 * consts.sig_min_R
        bound_asym = 3.0 * consts.sigma_star_norm * b_i * b_i / (4.0 * denom)
        bound_min = 2.0 * consts.sigma_star_norm * b_i * b_i / denom
        ok = bool(gap <= bound_asym * (1.0 + 1e-9) + 1e-12)
        all_pass = all_pass and ok
        entries.append({
            "task_id": task.id,
            "gap": gap,
            "b_i": float(b_i),
            "bound_asymptotic": bound_asym,
            "bound_minimizer": bound_min,
            "ratio_asymptotic": (bound_asym / gap) if gap > 0 else float("inf"),
            "passed": ok,
        })
    return {
        "final_iter": final_iter,
        "final_grad_norm": final_grad_norm,
        "tasks": entries,
        "all_passed": all_pass,
    }


def run_experiment(cfg: ExperimentConfig, out_dir: str,
                   tasks: Sequence[Task] | None = None,
                   K0: np.ndarray | None = None) -> dict:
    """Full experiment: generate, descend, certify, validate, write files.

    Returns a summary dict (also what lands in the manifest). Output files
    are removed again if anything fails midway.
    """
    tol = cfg.tolerances
    if tasks is None:
        tasks = generate_tasks(cfg.family, cfg.seed, cfg.n_tasks)
    if K0 is None:
        K0 = initial_controller(tasks, tol)
    constants = [dare_solve(t, tol) for t in tasks]

    log = run_pg(tasks, K0, cfg.pg, tol, constants, bisim_mode=cfg.mode)
    certificates = certify_all_pairs(tasks, log.K_final, cfg.mode, tol, cfg.jobs)
    b_values = hetero_profile(tasks, log.K_final, cfg.mode, tol,
                              certificates=certificates)
    bounds = validate_bounds(tasks, log, cfg.mode, tol, constants, b_values)

    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    try:
        csv_path = os.path.join(out_dir, RUN_CSV)
        log.to_csv(csv_path)
        written.append(csv_path)

        certs_path = os.path.join(out_dir, CERTIFICATES_JSON)
        dump_json([c.to_json() for c in certificates], certs_path)
        written.append(certs_path)

        bounds_path = os.path.join(out_dir, BOUNDS_JSON)
        dump_json(bounds, bounds_path)
        written.append(bounds_path)

        manifest = {
            "config": {
                "family": cfg.family,
                "n_tasks": cfg.n_tasks,
                "seed": cfg.seed,
                "alpha": cfg.pg.alpha,
                "max_iters": cfg.pg.max_iters,
                "grad_tol": cfg.pg.grad_tol,
                "log_every": cfg.pg.log_every,
                "log_bisim_every": cfg.pg.log_bisim_every,
                "mode": cfg.mode,
                "collections": cfg.collections,
            },
            "tasks": [t.to_json() for t in tasks],
            "initial_controller": K0.tolist(),
            "final_controller": log.K_final.tolist(),
            "final_iter": int(log.final_iter),
            "final_grad_norm": log.final_grad_norm,
            "converged": log.converged,
            "versions": _versions(),
        }
        manifest_path = os.path.join(out_dir, MANIFEST_JSON)
        dump_json(manifest, manifest_path)
        written.append(manifest_path)
    except BaseException:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise

    return {
        "out_dir": out_dir,
        "files": [RUN_CSV, CERTIFICATES_JSON, BOUNDS_JSON, MANIFEST_JSON],
        "final_iter": int(log.final_iter),
        "final_grad_norm": log.final_grad_norm,
        "converged": log.converged,
        "max_gap": max(e["gap"] for e in bounds["tasks"]),
        "max_b": max(e["b_i"] for e in bounds["tasks"]),
        "bounds_all_passed": bounds["all_passed"],
    }


def collection_stats(cfg: ExperimentConfig) -> dict:
    """Rerun the experiment over many sampled collections, seeds seed..seed+C-1.

    Aggregates the per-collection worst heterogeneity and optimality gap at
    convergence; the cross-collection aggregate is the mean (labeled as such).
    """
    if cfg.family == "inline":
        raise DomainError("collection statistics need a generator family")
    tol = cfg.tolerances
    per = []
    for offset in range(cfg.collections):
        seed = cfg.seed + offset
        tasks = generate_tasks(cfg.family, seed, cfg.n_tasks)
        constants = [dare_solve(t, tol) for t in tasks]
        log = run_pg(tasks, initial_controller(tasks, tol), cfg.pg, tol, constants)
        b_values = hetero_profile(tasks, log.K_final, cfg.mode, tol, cfg.jobs)
        gaps = [solve_task(t, log.K_final, tol).J - c.J_star
                for t, c in zip(tasks, constants)]
        per.append({
            "seed": seed,
            "converged": log.converged,
            "final_iter": int(log.final_iter),
            "max_b": max(b_values),
            "max_gap": max(gaps),
        })
    return {
        "collections": cfg.collections,
        "aggregate": "mean",
        "mean_max_b": float(np.mean([p["max_b"] for p in per])),
        "mean_max_gap": float(np.mean([p["max_gap"] for p in per])),
        "per_collection": per,
    }


def _versions() -> dict:
    import clarabel  # version surfaced for reproducibility

    return {
        "mtlqr": __version__,
        "numpy": np.__version__,
        "clarabel": getattr(clarabel, "__version__", "unknown"),
        "python": platform.python_version(),
    }
