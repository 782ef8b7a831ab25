"""Steady-state Kalman filtering, log-likelihood, and RTS smoothing.

Filter timing follows the measurement-update convention
    x_{t+1|t+1} = A x_{t|t} + B u_t + L e_{t+1},
    e_{t+1} = y_{t+1} - C (A x_{t|t} + B u_t),
which is self-consistent with the innovation definition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import GaussianBelief, StateSpaceModel, Trajectory
from .util import symmetrize

_LOG2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class InnovationForm:
    """Steady-state gain L, innovation covariance S and Riccati covariances."""
    L: np.ndarray
    S: np.ndarray
    P_prior: np.ndarray
    P_post: np.ndarray


@dataclass(frozen=True)
class FilterOutput:
    x_filt: np.ndarray      # x_{t|t} for t = 1..T, shape (T, n_x)
    innovations: np.ndarray  # e_t for t = 1..T, shape (T, n_y)
    loglik: float


def _riccati_step(P, A, C, Q, R):
    S = C @ P @ C.T + R
    K = np.linalg.solve(S, C @ P).T
    return symmetrize(A @ (P - K @ C @ P) @ A.T + Q)


def dare_steady_state(model: StateSpaceModel, tol: float = 1e-14,
                      max_iter: int = 100_000) -> InnovationForm:
    """Fixed-point iteration for the filtering Riccati equation.

    P = A (P - P C' (C P C' + R)^{-1} C P) A' + E E', symmetrized each step.
    """
    A, C, R = model.A, model.C, model.R
    Q = model.E @ model.E.T
    P = Q.copy()
    for _ in range(max_iter):
        P_next = _riccati_step(P, A, C, Q, R)
        if np.abs(P_next - P).max() <= tol * (1.0 + np.abs(P_next).max()):
            P = P_next
            break
        P = P_next
    else:
        raise RuntimeError("DARE fixed-point iteration did not converge")
    S = symmetrize(C @ P @ C.T + R)
    L = np.linalg.solve(S, C @ P).T
    P_post = symmetrize((np.eye(model.n_x) - L @ C) @ P)
    return InnovationForm(L=L, S=S, P_prior=P, P_post=P_post)


def kalman_filter(model: StateSpaceModel, inno: InnovationForm,
                  traj: Trajectory, init: GaussianBelief) -> FilterOutput:
    """Stationary filter with fixed gain; loglik = sum_t log N(e_t; 0, S)."""
    A, B, C = model.A, model.B, model.C
    L, S = inno.L, inno.S
    T = traj.T
    chol = cho_factor(S, lower=True)
    logdet = 2.0 * np.log(np.diag(chol[0])).sum()
    x = init.mean.copy()
    x_filt = np.empty((T, model.n_x))
    innovations = np.empty((T, model.n_y))
    loglik = 0.0
    for t in range(T):
        x_pred = A @ x + B @ traj.U[t]
        e = traj.Y[t] - C @ x_pred
        x = x_pred + L @ e
        x_filt[t] = x
        innovations[t] = e
        loglik -= 0.5 * (e @ cho_solve(chol, e) + logdet + model.n_y * _LOG2PI)
    return FilterOutput(x_filt=x_filt, innovations=innovations, loglik=loglik)


@dataclass(frozen=True)
class SmootherOutput:
    """Fixed-interval smoother over states x_0..x_T.

    cross[t] = Cov(x_t, x_{t+1} | Y), so E[x_t x_{t+1}'|Y] adds the
    outer product of the smoothed means.
    """
    x_smooth: np.ndarray   # (T+1, n_x)
    P_smooth: np.ndarray   # (T+1, n_x, n_x)
    cross: np.ndarray      # (T, n_x, n_x)
    loglik: float


def rts_smooth(model: StateSpaceModel, traj: Trajectory,
               init: GaussianBelief) -> SmootherOutput:
    """Time-varying filter and RTS smoother with pairwise cross-covariances.

    The covariance recursions are data-independent, so they are frozen once
    converged; this makes long trajectories cheap without approximation
    beyond the convergence tolerance.
    """
    A, B, C, R = model.A, model.B, model.C, model.R
    Q = model.E @ model.E.T
    n_x, T = model.n_x, traj.T
    freeze_tol = 1e-13

    # Forward covariance recursion (frozen once stationary).
    P_filt = np.empty((T + 1, n_x, n_x))
    gains = [None] * T
    P_pred_all = np.empty((T, n_x, n_x))
    chols = [None] * T
    P_filt[0] = init.cov
    frozen_at = None
    for t in range(T):
        if frozen_at is not None:
            P_pred_all[t] = P_pred_all[t - 1]
            gains[t] = gains[t - 1]
            chols[t] = chols[t - 1]
            P_filt[t + 1] = P_filt[t]
            continue
        P_pred = symmetrize(A @ P_filt[t] @ A.T + Q)
        S = symmetrize(C @ P_pred @ C.T + R)
        chol = cho_factor(S, lower=True)
        K = cho_solve(chol, C @ P_pred).T
        P_new = symmetrize(P_pred - K @ C @ P_pred)
        P_pred_all[t] = P_pred
        gains[t] = K
        chols[t] = chol
        P_filt[t + 1] = P_new
        if t > 0 and np.abs(P_new - P_filt[t]).max() <= freeze_tol * (1.0 + np.abs(P_new).max()):
            frozen_at = t

    # Forward mean recursion.
    x_filt = np.empty((T + 1, n_x))
    x_pred_all = np.empty((T, n_x))
    x_filt[0] = init.mean
    loglik = 0.0
    n_y = model.n_y
    for t in range(T):
        x_pred = A @ x_filt[t] + B @ traj.U[t]
        e = traj.Y[t] - C @ x_pred
        x_filt[t + 1] = x_pred + gains[t] @ e
        x_pred_all[t] = x_pred
        chol = chols[t]
        loglik -= 0.5 * (e @ cho_solve(chol, e)
                         + 2.0 * np.log(np.diag(chol[0])).sum() + n_y * _LOG2PI)

    # Backward smoother (covariances frozen symmetrically).
    x_smooth = np.empty_like(x_filt)
    P_smooth = np.empty_like(P_filt)
    cross = np.empty((T, n_x, n_x))
    x_smooth[T] = x_filt[T]
    P_smooth[T] = P_filt[T]
    J_prev = None
    Ps_frozen = False
    stationary_from = frozen_at if frozen_at is not None else T + 1
    for t in range(T - 1, -1, -1):
        P_pred = P_pred_all[t]
        if Ps_frozen and t >= stationary_from:
            J = J_prev
            Ps_new = P_smooth[t + 1]
        else:
            Ps_frozen = False
            J = P_filt[t] @ A.T @ np.linalg.pinv(P_pred)
            Ps_new = symmetrize(P_filt[t] + J @ (P_smooth[t + 1] - P_pred) @ J.T)
            if (J_prev is not None
                    and np.abs(Ps_new - P_smooth[t + 1]).max() <= freeze_tol * (1.0 + np.abs(Ps_new).max())
                    and np.abs(J - J_prev).max() <= 1e-12 * (1.0 + np.abs(J).max())):
                Ps_frozen = True
        x_smooth[t] = x_filt[t] + J @ (x_smooth[t + 1] - x_pred_all[t])
        P_smooth[t] = Ps_new
        cross[t] = J @ P_smooth[t + 1]
        J_prev = J
    return SmootherOutput(x_smooth=x_smooth, P_smooth=P_smooth,
                          cross=cross, loglik=loglik)
