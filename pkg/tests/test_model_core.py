import json

import numpy as np
import pytest

from mspc.kalman import dare_steady_state
from mspc.model import (MultiStepMatrices, StateSpaceModel, Trajectory,
                        build_msd_chain, multi_step_from_model, simulate,
                        to_observer_canonical, to_output_normal_form)


def _chain_continuous(n, mass, spring, damping):
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] = 2.0 if i < n - 1 else 1.0
        if i > 0:
            K[i, i - 1] = K[i - 1, i] = -1.0
    K *= spring
    D = K / spring * damping
    return np.block([[np.zeros((n, n)), np.eye(n)],
                     [-K / mass, -D / mass]])


class TestBuildMsdChain:
    def test_benchmark_dimensions(self):
        m = build_msd_chain(3, 1.0, 10.0, 2.0, 0.5,
                            np.concatenate([np.zeros(3), 1e-3 * np.ones(3)]),
                            1e-3)
        assert (m.n_x, m.n_u, m.n_y) == (6, 1, 3)
        assert np.allclose(m.R, 1e-3 * np.eye(3))
        assert np.allclose(m.E @ m.E.T,
                           np.diag([0, 0, 0, 1e-3, 1e-3, 1e-3]))

    def test_small_dt_first_order(self):
        dt = 1e-4
        m = build_msd_chain(3, 1.0, 10.0, 2.0, dt)
        Ac = _chain_continuous(3, 1.0, 10.0, 2.0)
        assert np.linalg.norm(m.A - (np.eye(6) + Ac * dt)) < 10 * dt ** 2 * (
            np.linalg.norm(Ac) ** 2)

    def test_eigenvalues_exact_discretization(self):
        dt = 0.5
        m = build_msd_chain(3, 1.0, 10.0, 2.0, dt)
        lam_c = np.linalg.eigvals(_chain_continuous(3, 1.0, 10.0, 2.0))
        lam_d = np.sort_complex(np.linalg.eigvals(m.A))
        assert np.allclose(lam_d, np.sort_complex(np.exp(lam_c * dt)),
                           atol=1e-9)

    def test_rejects_nonpositive_parameters(self):
        with pytest.raises(ValueError):
            build_msd_chain(3, mass=-1.0)


class TestOutputNormalForm:
    def test_identity_case(self):
        m = build_msd_chain(2)
        out, T = to_output_normal_form(m)
        assert np.allclose(T, np.eye(4))
        assert np.allclose(out.A, m.A)

    def test_markov_invariance(self, random_model):
        out, _ = to_output_normal_form(random_model)
        Ai, Ai2 = np.eye(4), np.eye(4)
        for _ in range(11):
            assert np.allclose(random_model.C @ Ai @ random_model.B,
                               out.C @ Ai2 @ out.B, atol=1e-10)
            Ai = random_model.A @ Ai
            Ai2 = out.A @ Ai2

    def test_msd_chain_output_rows(self):
        out, _ = to_output_normal_form(build_msd_chain(3))
        assert np.allclose(out.C, np.hstack([np.eye(3), np.zeros((3, 3))]))

    def test_rank_deficient_c_rejected(self):
        m = build_msd_chain(2)
        bad = StateSpaceModel(A=m.A, B=m.B,
                              C=np.vstack([m.C[0], m.C[0]]), E=m.E,
                              R=np.eye(2))
        with pytest.raises(ValueError):
            to_output_normal_form(bad)


class TestObserverCanonical:
    def test_structure_and_markov(self, random_model):
        out, _ = to_observer_canonical(random_model)
        n_y, n_x = out.C.shape
        assert np.allclose(out.C, np.hstack([np.eye(n_y),
                                             np.zeros((n_y, n_x - n_y))]))
        # identity blocks on the block superdiagonal
        assert np.allclose(out.A[:n_y, n_y:2 * n_y], np.eye(n_y), atol=1e-10)
        for i in range(5):
            assert np.allclose(
                out.C @ np.linalg.matrix_power(out.A, i) @ out.B,
                random_model.C @ np.linalg.matrix_power(random_model.A, i)
                @ random_model.B, atol=1e-9)


class TestSimulate:
    def test_zero_dynamics(self):
        n = 2
        m = StateSpaceModel(A=np.zeros((n, n)), B=np.zeros((n, 1)),
                            C=np.eye(n), E=np.zeros((n, n)),
                            R=1e-300 * np.eye(n))
        traj = simulate(m, np.zeros(n), np.zeros((50, 1)), seed=0)
        assert np.abs(traj.Y).max() < 1e-140

    def test_determinism(self, bench):
        u = np.ones((100, 1))
        t1 = simulate(bench, np.zeros(6), u, seed=42)
        t2 = simulate(bench, np.zeros(6), u, seed=42)
        assert np.array_equal(t1.Y, t2.Y)
        t3 = simulate(bench, np.zeros(6), u, seed=43)
        assert not np.array_equal(t1.Y, t3.Y)

    def test_stationary_output_covariance(self):
        # A = 0, C = I: cov(y) = E E' + R exactly at every step.
        n = 3
        gen = np.random.default_rng(1)
        E = gen.standard_normal((n, n)) * 0.3
        m = StateSpaceModel(A=np.zeros((n, n)), B=np.zeros((n, 1)),
                            C=np.eye(n), E=E, R=0.05 * np.eye(n))
        traj = simulate(m, np.zeros(n), np.zeros((100_000, 1)), seed=5)
        target = E @ E.T + m.R
        sample = np.cov(traj.Y.T)
        assert np.linalg.norm(sample - target) < 0.05 * np.linalg.norm(target)


class TestMultiStepMatrices:
    def test_k1(self, bench, bench_inno):
        msm = multi_step_from_model(bench, bench_inno.L, 1)
        assert np.allclose(msm.G0, bench.C @ bench.A)
        assert np.allclose(msm.Gu, bench.C @ bench.B)
        assert np.allclose(msm.Gw, bench.C @ bench.E)
        assert np.allclose(msm.Ge, np.hstack([np.zeros((3, 3)), np.eye(3)]))

    def test_nilpotent(self):
        n = 3
        m = StateSpaceModel(A=np.zeros((n, n)),
                            B=np.arange(n, dtype=float)[:, None] + 1,
                            C=np.eye(n), E=np.zeros((n, 1)), R=np.eye(n))
        msm = multi_step_from_model(m, np.zeros((n, n)), 3)
        assert np.allclose(msm.G0, 0.0)
        assert np.allclose(msm.Gu[:, :2], 0.0)
        assert np.allclose(msm.Gu[:, 2:], m.C @ m.B)

    def test_recursion_in_k(self, bench, bench_inno):
        for k in range(1, 6):
            a = multi_step_from_model(bench, bench_inno.L, k)
            b = multi_step_from_model(bench, bench_inno.L, k + 1)
            Ak = np.linalg.matrix_power(bench.A, k)
            assert np.allclose(b.Gu[:, :1], bench.C @ Ak @ bench.B)
            assert np.allclose(b.Gu[:, 1:], a.Gu, atol=1e-12)

    def test_stacked_equals_iteration(self, bench, bench_inno):
        # Deterministic rollout: stacked maps match direct iteration.
        gen = np.random.default_rng(7)
        x0 = gen.standard_normal(6)
        U = gen.standard_normal((8, 1))
        x = x0.copy()
        for k in range(1, 9):
            x = bench.A @ x + bench.B @ U[k - 1]
            msm = multi_step_from_model(bench, bench_inno.L, k)
            y_direct = bench.C @ x
            y_stacked = msm.G0 @ x0 + msm.Gu @ U[:k].ravel()
            assert np.allclose(y_direct, y_stacked, atol=1e-10)

    def test_similarity_invariance(self, bench, bench_inno):
        gen = np.random.default_rng(11)
        T = gen.standard_normal((6, 6)) + 3 * np.eye(6)
        Ti = np.linalg.inv(T)
        tm = StateSpaceModel(A=T @ bench.A @ Ti, B=T @ bench.B,
                             C=bench.C @ Ti, E=T @ bench.E, R=bench.R)
        for k in (1, 4):
            a = multi_step_from_model(bench, bench_inno.L, k)
            b = multi_step_from_model(tm, T @ bench_inno.L, k)
            assert np.allclose(a.Gu, b.Gu, atol=1e-9)
            assert np.allclose(a.Gw, b.Gw, atol=1e-9)
            assert np.allclose(a.Ge, b.Ge, atol=1e-9)

    def test_residual_window_covariance_mc(self, bench, bench_inno):
        # Sample covariance of the k-step prediction residuals around the
        # true multi-step map matches Ge diag(S) Ge'.
        from mspc.kalman import kalman_filter
        from mspc.model import GaussianBelief
        k = 4
        T = 30_000
        gen = np.random.default_rng(2)
        U = gen.normal(0, 2.0, size=(T, 1))
        traj = simulate(bench, np.zeros(6), U, seed=2)
        fo = kalman_filter(bench, bench_inno, traj,
                           GaussianBelief(np.zeros(6), bench_inno.P_post))
        msm = multi_step_from_model(bench, bench_inno.L, k)
        ts = np.arange(100, T - k + 1)
        pred = (fo.x_filt[ts - 1] @ msm.G0.T
                + np.column_stack([traj.U[ts + i] for i in range(k)])
                @ msm.Gu.T)
        resid = traj.Y[ts + k - 1] - pred
        target = msm.Ge @ np.kron(np.eye(k + 1), bench_inno.S) @ msm.Ge.T
        sample = resid.T @ resid / resid.shape[0]
        assert (np.linalg.norm(sample - target)
                < 0.05 * np.linalg.norm(target))

    def test_invalid_horizon(self, bench, bench_inno):
        with pytest.raises(ValueError):
            multi_step_from_model(bench, bench_inno.L, 0)


class TestSerialization:
    def test_model_json_roundtrip(self, bench):
        m2 = StateSpaceModel.from_json(bench.to_json())
        for name in ("A", "B", "C", "E", "R"):
            assert np.allclose(getattr(bench, name), getattr(m2, name))

    def test_model_json_dimension_check(self, bench):
        d = json.loads(bench.to_json())
        d["n_u"] = 2
        with pytest.raises(ValueError):
            StateSpaceModel.from_json(json.dumps(d))

    def test_trajectory_csv_roundtrip(self, tmp_path, bench):
        traj = simulate(bench, np.zeros(6), np.ones((20, 1)), seed=0)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "t,u_0,y_0,y_1,y_2"
        back = Trajectory.from_csv(path, n_u=1)
        assert np.allclose(back.U, traj.U)
        assert np.allclose(back.Y, traj.Y)

    def test_multi_step_block_validation(self):
        with pytest.raises(ValueError):
            MultiStepMatrices(k=2, G0=np.eye(2), Gu=np.ones((2, 3)),
                              Gw=np.ones((2, 2)), Ge=np.ones((2, 6)))
