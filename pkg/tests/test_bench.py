import math

import numpy as np
import pytest

from mtlqr import (
    DomainError,
    ExperimentConfig,
    gen_pendulum,
    gen_unicycle,
    reduction_stats,
    run_experiment,
    run_pg,
    validate_bounds,
)
from mtlqr.bench import DT, PENDULUM_GRAVITY, collection_stats
from mtlqr.policy_grad import PGConfig
from mtlqr.prng import Xoshiro256StarStar, splitmix64
from conftest import scalar_task


class TestPrng:
    def test_splitmix64_reference_vectors(self):
        # first outputs for seed 0, standard across implementations
        state = 0
        outs = []
        for _ in range(4):
            state, word = splitmix64(state)
            outs.append(word)
        assert outs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4,
                        0x06C45D188009454F, 0xF88BB8A8724C81EC]

    def test_deterministic_streams(self):
        a = Xoshiro256StarStar(42)
        b = Xoshiro256StarStar(42)
        assert [a.next_u64() for _ in range(16)] == [b.next_u64() for _ in range(16)]

    def test_uniform_range(self):
        rng = Xoshiro256StarStar(7)
        draws = [rng.uniform(0.5, 1.0) for _ in range(2000)]
        assert all(0.5 <= d < 1.0 for d in draws)
        assert 0.70 < np.mean(draws) < 0.80


class TestGenerators:
    def test_pendulum_formula_mapping(self):
        tasks = gen_pendulum(0, 6)
        for t in tasks:
            length = PENDULUM_GRAVITY * DT / t.A[1, 0]
            mass = DT / (t.B[1, 0] * length * length)
            assert 0.5 <= length <= 1.0
            assert 0.1 <= mass <= 0.5
            assert np.allclose(t.A, [[1.0, DT],
                                     [PENDULUM_GRAVITY * DT / length, 1.0]])
            assert t.B[0, 0] == 0.0
            assert 0.1 <= t.Q[0, 0] <= 0.5 and t.Q[0, 1] == 0.0
            assert 0.01 <= t.R[0, 0] <= 0.05
            assert np.allclose(t.Sigma0, 0.01 * np.eye(2))

    def test_pendulum_documented_draw_order(self):
        rng = Xoshiro256StarStar(3)
        expected = [rng.uniform(0.5, 1.0), rng.uniform(0.1, 0.5),
                    rng.uniform(0.1, 0.5), rng.uniform(0.01, 0.05)]
        task = gen_pendulum(3, 1)[0]
        assert task.A[1, 0] == pytest.approx(PENDULUM_GRAVITY * DT / expected[0])
        assert task.B[1, 0] == pytest.approx(
            DT / (expected[1] * expected[0] ** 2))
        assert task.Q[0, 0] == pytest.approx(expected[2])
        assert task.R[0, 0] == pytest.approx(expected[3])

    def test_pendulum_example_point(self):
        # length 0.5, mass 0.1 map to A lower-left 1.0 and B bottom 2.0
        a_ll = PENDULUM_GRAVITY * DT / 0.5
        b_bot = DT / (0.1 * 0.5 ** 2)
        assert a_ll == pytest.approx(1.0) and b_bot == pytest.approx(2.0)

    def test_pendulum_seed_reproducibility(self):
        one = [t.to_json() for t in gen_pendulum(11, 4)]
        two = [t.to_json() for t in gen_pendulum(11, 4)]
        other = [t.to_json() for t in gen_pendulum(12, 4)]
        assert one == two
        assert one != other

    def test_unicycle_formula_mapping(self):
        tasks = gen_unicycle(0, 6)
        for t in tasks:
            # recover the operating point from the B columns
            cos_t = t.B[0, 0] / DT
            sin_t = t.B[1, 0] / DT
            assert cos_t ** 2 + sin_t ** 2 == pytest.approx(1.0, rel=1e-12)
            v0 = math.hypot(t.A[0, 2], t.A[1, 2]) / DT
            assert 0.1 <= v0 <= 1.75
            assert t.A[0, 2] == pytest.approx(-DT * v0 * sin_t)
            assert t.A[1, 2] == pytest.approx(DT * v0 * cos_t)
            assert t.B[2, 1] == pytest.approx(DT)
            assert np.allclose(t.Sigma0, np.eye(3))

    def test_unicycle_operating_point_example(self):
        # v0 = 1, theta0 = 0: heading column couples only p_y
        a = np.array([[1, 0, -DT * 1 * math.sin(0)],
                      [0, 1, DT * 1 * math.cos(0)],
                      [0, 0, 1]])
        assert np.allclose(a, [[1, 0, 0], [0, 1, DT], [0, 0, 1]])
        # theta0 = pi/2: first row gets -dt * v0
        assert -DT * 1.0 * math.sin(math.pi / 2) == pytest.approx(-0.05)


class TestReductionStats:
    def test_simple(self):
        assert reduction_stats([1.0], [100.0]) == pytest.approx(99.0)

    def test_no_reduction(self):
        assert reduction_stats([2.0, 3.0], [2.0, 3.0]) == 0.0

    def test_mean_of_percentages(self):
        assert reduction_stats([1.0, 1.0], [10.0, 1000.0]) == pytest.approx(94.95)

    def test_nonpositive_baseline_rejected(self):
        with pytest.raises(DomainError):
            reduction_stats([1.0], [0.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(DomainError):
            reduction_stats([1.0], [1.0, 2.0])


class TestValidateBounds:
    def test_single_task_trivial(self):
        t = scalar_task()
        log = run_pg([t], [[0.0]], PGConfig(alpha=0.1, grad_tol=1e-9))
        report = validate_bounds([t], log)
        entry = report["tasks"][0]
        assert entry["gap"] <= 1e-8
        assert entry["b_i"] == 0.0
        assert entry["passed"]

    def test_identical_collection(self):
        t1, t2 = scalar_task(id="t1"), scalar_task(id="t2")
        log = run_pg([t1, t2], [[0.0]], PGConfig(alpha=0.1, grad_tol=1e-9))
        report = validate_bounds([t1, t2], log)
        assert report["all_passed"]
        assert all(e["gap"] <= 1e-8 for e in report["tasks"])

    def test_unconverged_refused(self):
        t = scalar_task()
        log = run_pg([t], [[0.0]], PGConfig(alpha=0.01, max_iters=3, grad_tol=1e-12))
        assert not log.converged
        with pytest.raises(DomainError):
            validate_bounds([t], log)


SMALL_CFG = ExperimentConfig(
    family="pendulum", n_tasks=3, seed=5,
    pg=PGConfig(alpha=0.01, max_iters=300_000, grad_tol=2e-4,
                log_every=200, log_bisim_every=5000),
    mode="best",
)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    """One small experiment written twice, shared across file-shape tests."""
    root = tmp_path_factory.mktemp("bench")
    out_a, out_b = root / "a", root / "b"
    summary = run_experiment(SMALL_CFG, str(out_a))
    run_experiment(SMALL_CFG, str(out_b))
    return out_a, out_b, summary


class TestRunExperiment:
    def test_run_converges_and_bounds_pass(self, small_run):
        _, _, summary = small_run
        assert summary["converged"]
        assert summary["bounds_all_passed"]

    def test_rows_per_logged_iteration(self, small_run):
        out_a, _, _ = small_run
        csv_lines = (out_a / "run.csv").read_text().strip().split("\n")
        n_logged = (len(csv_lines) - 1) / SMALL_CFG.n_tasks
        assert n_logged == int(n_logged)  # exactly n_tasks rows per iteration

    def test_byte_identical_rerun(self, small_run):
        out_a, out_b, _ = small_run
        for name in ("run.csv", "certificates.json", "bounds.json", "manifest.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    def test_manifest_contents(self, small_run):
        import json
        out, _, _ = small_run
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["family"] == "pendulum"
        assert manifest["config"]["seed"] == 5
        assert len(manifest["tasks"]) == 3
        assert manifest["converged"] is True
        assert "numpy" in manifest["versions"]
        k = np.asarray(manifest["final_controller"])
        assert k.shape == (1, 2)

    def test_certificates_file_structure(self, small_run):
        import json
        out, _, _ = small_run
        certs = json.loads((out / "certificates.json").read_text())
        assert len(certs) == 3  # unordered pairs of 3 tasks
        for cert in certs:
            assert set(cert) == {"i", "j", "lambda", "value", "method",
                                 "feas_slack", "M"}


class TestCollectionStats:
    def test_two_collections(self):
        cfg = ExperimentConfig(
            family="pendulum", n_tasks=2, seed=21,
            pg=PGConfig(alpha=0.01, max_iters=300_000, grad_tol=5e-4,
                        log_every=1000),
            collections=2, mode="constructive",
        )
        stats = collection_stats(cfg)
        assert stats["collections"] == 2
        assert stats["aggregate"] == "mean"
        assert len(stats["per_collection"]) == 2
        assert stats["per_collection"][0]["seed"] == 21
        assert stats["per_collection"][1]["seed"] == 22
        assert stats["mean_max_b"] == pytest.approx(
            np.mean([p["max_b"] for p in stats["per_collection"]]))
