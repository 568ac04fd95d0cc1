"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them inline).

The randomized sections use fixed seeds so the suite is reproducible.
"""

import time

import numpy as np
import pytest

from mtlqr import (
    ExperimentConfig,
    bisim_value,
    certify_pair,
    dare_solve,
    gen_pendulum,
    gen_unicycle,
    hetero_profile,
    initial_controller,
    pairwise_gaps,
    run_experiment,
    run_pg,
    solve_task,
    validate_bounds,
)
from mtlqr.bisim import build_pair, lambda_for_pair
from mtlqr.matops import DEFAULT_TOL
from mtlqr.policy_grad import PGConfig, avg_gradient
from conftest import random_stabilized, random_stable_pair, scalar_task


def _check(name: str, ok: bool, detail: str = ""):
    line = f"{'PASS' if ok else 'FAIL'}: {name}" + (f" [{detail}]" if detail else "")
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def certified_pairs():
    """100 random pairs (d_x <= 3) with constructive and optimized certificates."""
    rng = np.random.default_rng(2024)
    out = []
    for idx in range(100):
        d_x = int(rng.integers(1, 4))
        d_u = int(rng.integers(1, min(d_x, 2) + 1))
        ti, tj, k = random_stable_pair(rng, d_x, d_u, max_rho=0.92)
        con = certify_pair(ti, tj, k, mode="constructive")
        opt = certify_pair(ti, tj, k, mode="optimized")
        out.append((ti, tj, k, con, opt))
    return out


@pytest.fixture(scope="module")
def pendulum_run():
    tasks = gen_pendulum(0, 6)
    k0 = initial_controller(tasks)
    cfg = PGConfig(alpha=0.01, max_iters=2_000_000, grad_tol=1e-6,
                   log_every=1000, log_bisim_every=50_000)
    start = time.time()
    log = run_pg(tasks, k0, cfg)
    return tasks, log, time.time() - start


@pytest.fixture(scope="module")
def unicycle_run():
    tasks = gen_unicycle(0, 6)
    k0 = initial_controller(tasks)
    cfg = PGConfig(alpha=0.05, max_iters=2_000_000, grad_tol=1e-6,
                   log_every=10, log_bisim_every=500)
    start = time.time()
    log = run_pg(tasks, k0, cfg)
    return tasks, log, time.time() - start


def test_gradient_oracle():
    """Analytic gradients match central finite differences on 50 random cases."""
    rng = np.random.default_rng(7)
    start = time.time()
    worst = 0.0
    h = DEFAULT_TOL.fd_step
    for idx in range(50):
        d_x = int(rng.integers(1, 4))
        d_u = int(rng.integers(1, 3))
        task, k = random_stabilized(rng, d_x, d_u, id=f"grad-{idx}")
        grad = solve_task(task, k).grad
        fd = np.zeros_like(grad)
        for r in range(d_u):
            for c in range(d_x):
                dk = np.zeros_like(k)
                dk[r, c] = h
                fd[r, c] = (solve_task(task, k + dk).J
                            - solve_task(task, k - dk).J) / (2.0 * h)
        rel = np.max(np.abs(grad - fd) / np.maximum(np.abs(fd), 1.0))
        worst = max(worst, float(rel))
    elapsed = time.time() - start
    _check("gradient oracle (50 random tasks, rel err <= 1e-5, < 10 s)",
           worst <= 1e-5 and elapsed < 10.0,
           f"max rel err {worst:.2e}, {elapsed:.1f}s")


def test_scalar_closed_forms():
    """Riccati fixed point and exact gradient agree with the quadratic root."""
    consts = dare_solve(scalar_task())
    grad = solve_task(scalar_task(), [[0.0]]).grad[0, 0]
    ok = (abs(consts.J_star - 1.132782) <= 1e-6          # P* (Sigma0 = 1)
          and abs(consts.K_star[0, 0] - 0.265564) <= 1e-6
          and abs(grad + 16.0 / 9.0) <= 1e-9)
    _check("scalar closed forms (P*, K*, grad)", ok,
           f"P*={consts.J_star:.9f}, K*={consts.K_star[0, 0]:.9f}, grad={grad:.12f}")


def test_certificate_feasibility(certified_pairs):
    """Both certificate flavors validate on 100 random pairs within 2 minutes."""
    start = time.time()
    worst = 0.0
    for ti, tj, k, con, opt in certified_pairs:
        worst = max(worst, con.feas_slack, opt.feas_slack)
    elapsed = time.time() - start
    _check("certificate feasibility (100 pairs, slack <= 1e-6, 10a sampled)",
           worst <= 1e-6, f"max slack {worst:.2e}, check {elapsed:.1f}s")


def test_bound_chain(certified_pairs, pendulum_run):
    """Exact gradient gaps never exceed certified values; per-task average
    deviation never exceeds b_i."""
    worst_pair = -np.inf
    for ti, tj, k, con, opt in certified_pairs:
        gap = pairwise_gaps([ti, tj], k)[0, 1]
        bound = min(con.value, opt.value)
        worst_pair = max(worst_pair, gap - bound)

    tasks, log, _ = pendulum_run
    worst_dev = -np.inf
    for controller in (log.K_logged[0], log.K_final):
        b = hetero_profile(tasks, controller, "best")
        g_avg = avg_gradient(tasks, controller)
        for task, b_i in zip(tasks, b):
            dev = float(np.linalg.norm(solve_task(task, controller).grad - g_avg))
            worst_dev = max(worst_dev, dev - b_i)
    _check("bound chain (g_ij <= b_ij and ||grad_i - grad_avg|| <= b_i)",
           worst_pair <= 1e-6 and worst_dev <= 1e-6,
           f"pair margin {worst_pair:.2e}, collection margin {worst_dev:.2e}")


def test_geometric_decay_envelope():
    """Certificate decay along the covariance recursion obeys the geometric
    envelope for 200 steps on 20 random pairs."""
    rng = np.random.default_rng(99)
    worst = -np.inf
    for _ in range(20):
        d_x = int(rng.integers(1, 4))
        ti, tj, k = random_stable_pair(rng, d_x, 1, max_rho=0.9)
        cert = certify_pair(ti, tj, k, mode="best")
        pair = build_pair(ti, tj, k)
        a_i, a_j, _, _, s0_i, s0_j = pair.blocks()
        v0 = bisim_value(cert.M, cert.lam, s0_i, s0_j)
        sig_i, sig_j = s0_i.copy(), s0_j.copy()
        for t in range(201):
            v_t = bisim_value(cert.M, cert.lam, sig_i, sig_j)
            decay = (1.0 - cert.lam) ** t
            envelope = decay * v0 + (1.0 - decay) / cert.lam * v0
            worst = max(worst, v_t - envelope)
            sig_i = a_i @ sig_i @ a_i.T + s0_i
            sig_j = a_j @ sig_j @ a_j.T + s0_j
    _check("geometric decay envelope (20 pairs, t <= 200, slack 1e-8)",
           worst <= 1e-8, f"max envelope excess {worst:.2e}")


def test_optimizer_dominance(certified_pairs):
    """Optimized certificates never lose to the constructive ones, and the
    zero-output case matches the analytic floor value."""
    worst = -np.inf
    genuinely_optimized = 0
    for ti, tj, k, con, opt in certified_pairs:
        worst = max(worst, opt.value - con.value)
        genuinely_optimized += int(opt.method == "optimized")

    t1 = scalar_task(id="f1")
    t2 = scalar_task(id="f2")
    k_star = dare_solve(t1).K_star
    cert = certify_pair(t1, t2, k_star, mode="optimized")
    pair = build_pair(t1, t2, k_star)
    lam = lambda_for_pair(pair)
    analytic = np.sqrt(2.0) * np.sqrt(DEFAULT_TOL.eps_s) * np.trace(
        pair.Sigma0_ij) / lam
    floor_rel = abs(cert.value - analytic) / analytic
    _check("optimizer dominance and analytic floor case",
           worst <= 1e-7 and floor_rel <= 1e-6,
           f"max excess {worst:.2e}, genuine solves {genuinely_optimized}/100, "
           f"floor rel err {floor_rel:.2e}")


def test_pendulum_end_to_end(pendulum_run):
    """Seed-0 pendulum collection: convergence, stability, bounds, gap size."""
    tasks, log, elapsed = pendulum_run
    report = validate_bounds(tasks, log, "best")
    max_gap = max(entry["gap"] for entry in report["tasks"])
    ok = (log.converged
          and log.final_grad_norm <= 1e-6
          and float(log.rho_max.max()) < 1.0
          and report["all_passed"]
          and max_gap <= 1.0
          and elapsed < 300.0)
    _check("pendulum end-to-end (seed 0, n=6, alpha=0.01)", ok,
           f"iters {log.final_iter}, max gap {max_gap:.4f}, "
           f"rho_max {log.rho_max.max():.4f}, {elapsed:.0f}s")


def test_unicycle_end_to_end(unicycle_run):
    """Seed-0 unicycle collection: convergence, finite heterogeneity, bounds."""
    tasks, log, elapsed = unicycle_run
    b = hetero_profile(tasks, log.K_final, "best")
    report = validate_bounds(tasks, log, "best", b_values=b)
    ok = (log.converged
          and float(log.rho_max.max()) < 1.0
          and all(np.isfinite(v) for v in b)
          and report["all_passed"]
          and elapsed < 600.0)
    _check("unicycle end-to-end (seed 0, n=6)", ok,
           f"iters {log.final_iter}, max b {max(b):.3f}, {elapsed:.0f}s")


def test_determinism(tmp_path):
    """Identical configs produce byte-identical output files."""
    cfg = ExperimentConfig(
        family="unicycle", n_tasks=6, seed=0,
        pg=PGConfig(alpha=0.05, max_iters=2_000_000, grad_tol=1e-6,
                    log_every=10, log_bisim_every=500),
        mode="best",
    )
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    run_experiment(cfg, str(out_a))
    run_experiment(cfg, str(out_b))
    same = all(
        (out_a / name).read_bytes() == (out_b / name).read_bytes()
        for name in ("run.csv", "certificates.json", "bounds.json",
                     "manifest.json"))
    _check("determinism (byte-identical rerun)", same)


def test_single_task_degeneration():
    """N = 1: policy gradient recovers the Riccati optimum and b_1 = 0."""
    task = gen_pendulum(0, 1)[0]
    consts = dare_solve(task)
    # the cost Hessian at K* has eigenvalues ~1e-3, so the gradient norm
    # must be driven well below 1e-5 * lambda_min(H) for 1e-5 in K
    log = run_pg([task], consts.K_star * 0.9,
                 PGConfig(alpha=0.05, max_iters=2_000_000, grad_tol=1e-9,
                          log_every=10_000))
    b = hetero_profile([task], log.K_final)
    entry_err = float(np.max(np.abs(log.K_final - consts.K_star)))
    _check("single-task degeneration (K -> K*, b_1 = 0)",
           log.converged and entry_err <= 1e-5 and b == [0.0],
           f"entrywise err {entry_err:.2e}")
