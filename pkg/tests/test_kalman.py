import numpy as np
import pytest

from mspc.kalman import (_riccati_step, dare_steady_state, kalman_filter,
                         rts_smooth)
from mspc.model import GaussianBelief, StateSpaceModel, Trajectory, simulate
from reference_oracles import time_varying_filter


class TestDare:
    def test_a_zero(self):
        gen = np.random.default_rng(0)
        E = gen.standard_normal((3, 2)) * 0.5
        m = StateSpaceModel(A=np.zeros((3, 3)), B=np.zeros((3, 1)),
                            C=np.eye(3), E=E, R=0.1 * np.eye(3))
        inno = dare_steady_state(m)
        assert np.allclose(inno.P_prior, E @ E.T, atol=1e-12)
        assert np.allclose(inno.S, m.C @ E @ E.T @ m.C.T + m.R, atol=1e-12)

    def test_noise_free_state(self):
        A = np.diag([0.5, -0.3])
        m = StateSpaceModel(A=A, B=np.zeros((2, 1)), C=np.eye(2),
                            E=np.zeros((2, 1)), R=0.2 * np.eye(2))
        inno = dare_steady_state(m)
        assert np.abs(inno.P_prior).max() < 1e-10
        assert np.abs(inno.L).max() < 1e-9
        assert np.allclose(inno.S, m.R, atol=1e-10)

    def test_fixed_point_residual(self, bench):
        inno = dare_steady_state(bench)
        Q = bench.E @ bench.E.T
        P2 = _riccati_step(inno.P_prior, bench.A, bench.C, Q, bench.R)
        rel = (np.linalg.norm(P2 - inno.P_prior)
               / max(np.linalg.norm(inno.P_prior), 1e-300))
        assert rel < 1e-10

    def test_initialization_insensitive(self, bench):
        Q = bench.E @ bench.E.T
        sols = []
        for P0 in (np.zeros((6, 6)), np.eye(6), 100 * np.eye(6)):
            P = P0
            for _ in range(100_000):
                P_next = _riccati_step(P, bench.A, bench.C, Q, bench.R)
                if np.abs(P_next - P).max() <= 1e-13 * (1 + np.abs(P_next).max()):
                    break
                P = P_next
            sols.append(P_next)
        assert np.abs(sols[0] - sols[1]).max() < 1e-8
        assert np.abs(sols[0] - sols[2]).max() < 1e-8

    def test_innovation_whiteness(self, bench, bench_inno):
        T = 10_000
        gen = np.random.default_rng(4)
        traj = simulate(bench, np.zeros(6), gen.normal(0, 2, (T, 1)), seed=4)
        fo = kalman_filter(bench, bench_inno, traj,
                           GaussianBelief(np.zeros(6), bench_inno.P_post))
        e = fo.innovations[100:]
        e = e - e.mean(axis=0)
        norm = np.sqrt((e ** 2).mean(axis=0))
        for lag in range(1, 6):
            corr = (e[lag:] * e[:-lag]).mean(axis=0) / norm ** 2
            assert np.abs(corr).max() < 3.0 / np.sqrt(e.shape[0])

    def test_innovation_covariance_sampled(self, bench, bench_inno):
        T = 100_000
        gen = np.random.default_rng(9)
        traj = simulate(bench, np.zeros(6), gen.normal(0, 2, (T, 1)), seed=9)
        fo = kalman_filter(bench, bench_inno, traj,
                           GaussianBelief(np.zeros(6), bench_inno.P_post))
        sample = np.cov(fo.innovations[200:].T)
        assert (np.linalg.norm(sample - bench_inno.S)
                < 0.05 * np.linalg.norm(bench_inno.S))


class TestFilter:
    def test_noise_free_exact_init(self, bench, bench_inno):
        # Deterministic data with known x0: innovations vanish.
        gen = np.random.default_rng(3)
        U = gen.standard_normal((60, 1))
        x = np.zeros(6)
        Y = np.empty((60, 3))
        for t in range(60):
            x = bench.A @ x + bench.B @ U[t]
            Y[t] = bench.C @ x
        fo = kalman_filter(bench, bench_inno, Trajectory(U=U, Y=Y),
                           GaussianBelief(np.zeros(6), np.zeros((6, 6))))
        assert np.abs(fo.innovations).max() < 1e-8

    def test_loglik_definition(self, bench, bench_inno):
        traj = simulate(bench, np.zeros(6), np.ones((50, 1)), seed=1)
        fo = kalman_filter(bench, bench_inno, traj,
                           GaussianBelief(np.zeros(6), bench_inno.P_post))
        S = bench_inno.S
        Sinv = np.linalg.inv(S)
        _, logdet = np.linalg.slogdet(S)
        ll = sum(-0.5 * (e @ Sinv @ e + logdet + 3 * np.log(2 * np.pi))
                 for e in fo.innovations)
        assert abs(ll - fo.loglik) < 1e-9 * max(1.0, abs(ll))

    def test_matches_time_varying_after_burn_in(self, bench, bench_inno):
        gen = np.random.default_rng(8)
        traj = simulate(bench, np.zeros(6), gen.normal(0, 2, (400, 1)), seed=8)
        init = GaussianBelief(np.zeros(6), bench_inno.P_post)
        fo = kalman_filter(bench, bench_inno, traj, init)
        ref = time_varying_filter(bench, traj, init)
        assert np.abs(fo.x_filt[50:] - ref[50:]).max() < 1e-6

    def test_degenerate_inversion(self):
        # C square invertible, R tiny: the filter state tracks C^{-1} y.
        gen = np.random.default_rng(12)
        A = np.diag([0.7, -0.2])
        C = np.array([[1.0, 0.3], [0.0, 1.0]])
        m = StateSpaceModel(A=A, B=np.ones((2, 1)), C=C,
                            E=0.2 * np.eye(2), R=1e-12 * np.eye(2))
        inno = dare_steady_state(m)
        traj = simulate(m, np.zeros(2), gen.standard_normal((200, 1)), seed=3)
        fo = kalman_filter(m, inno, traj,
                           GaussianBelief(np.zeros(2), inno.P_post))
        ref = traj.Y[20:] @ np.linalg.inv(C).T
        assert np.abs(fo.x_filt[20:] - ref).max() < 1e-4


class TestSmoother:
    def _scalar_system(self):
        return StateSpaceModel(A=np.array([[0.8]]), B=np.array([[1.0]]),
                               C=np.array([[1.0]]), E=np.array([[0.5]]),
                               R=np.array([[0.3]]))

    def test_single_step_equals_filter_update(self):
        m = self._scalar_system()
        traj = Trajectory(U=np.array([[0.7]]), Y=np.array([[1.1]]))
        init = GaussianBelief(np.array([0.2]), np.array([[0.4]]))
        sm = rts_smooth(m, traj, init)
        # Manual one-step predict/update.
        xp = 0.8 * 0.2 + 0.7
        Pp = 0.8 ** 2 * 0.4 + 0.25
        K = Pp / (Pp + 0.3)
        xf = xp + K * (1.1 - xp)
        assert abs(sm.x_smooth[1, 0] - xf) < 1e-12
        assert abs(sm.P_smooth[1, 0, 0] - (1 - K) * Pp) < 1e-12

    def test_matches_joint_gaussian_conditioning(self):
        # 4-step scalar system: smoothed moments from dense conditioning.
        m = self._scalar_system()
        T = 4
        a, q, r = 0.8, 0.25, 0.3
        gen = np.random.default_rng(5)
        U = gen.standard_normal((T, 1))
        traj = simulate(m, np.array([0.3]), U, seed=6)
        init = GaussianBelief(np.array([0.3]), np.array([[0.2]]))

        # Joint over (x_0..x_4); y_t = x_t + v_t for t = 1..4.
        n = T + 1
        mean_x = np.empty(n)
        mean_x[0] = init.mean[0]
        for t in range(T):
            mean_x[t + 1] = a * mean_x[t] + U[t, 0]
        P = np.zeros((n, n))
        P[0, 0] = init.cov[0, 0]
        for t in range(T):   # propagate joint covariance row by row
            P[t + 1, :t + 1] = a * P[t, :t + 1]
            P[:t + 1, t + 1] = P[t + 1, :t + 1]
            P[t + 1, t + 1] = a ** 2 * P[t, t] + q
        H = np.zeros((T, n))
        for t in range(T):
            H[t, t + 1] = 1.0
        S = H @ P @ H.T + r * np.eye(T)
        K = P @ H.T @ np.linalg.inv(S)
        mean_post = mean_x + K @ (traj.Y[:, 0] - H @ mean_x)
        P_post = P - K @ H @ P

        sm = rts_smooth(m, traj, init)
        assert np.abs(sm.x_smooth[:, 0] - mean_post).max() < 1e-9
        assert np.abs(sm.P_smooth[:, 0, 0] - np.diag(P_post)).max() < 1e-9
        cross = np.array([P_post[t, t + 1] for t in range(T)])
        assert np.abs(sm.cross[:, 0, 0] - cross).max() < 1e-9

    def test_smoothing_reduces_variance(self, bench):
        gen = np.random.default_rng(14)
        traj = simulate(bench, np.zeros(6), gen.normal(0, 2, (80, 1)), seed=14)
        init = GaussianBelief(np.zeros(6), np.eye(6))
        sm = rts_smooth(bench, traj, init)
        # Filtered covariances from an in-test time-varying recursion.
        Q = bench.E @ bench.E.T
        P = init.cov.copy()
        for t in range(traj.T):
            Pp = bench.A @ P @ bench.A.T + Q
            S = bench.C @ Pp @ bench.C.T + bench.R
            K = np.linalg.solve(S, bench.C @ Pp).T
            P = Pp - K @ bench.C @ Pp
            gap = np.linalg.eigvalsh(P - sm.P_smooth[t + 1]).min()
            assert gap > -1e-10 * max(1.0, np.abs(P).max())
        # At the final time smoothing adds nothing.
        assert np.abs(sm.P_smooth[-1] - P).max() < 1e-10
