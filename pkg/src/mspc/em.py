"""State-space identification from a single input-output trajectory via EM.

The disturbance and measurement-noise covariances are structured as
E E' = q * (Ep Ep') and R = r * Rp with known patterns and unknown positive
scales (q, r), matching an experiment where the noise geometry is known up
to scaling.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kalman import rts_smooth
from .model import (GaussianBelief, StateSpaceModel, Trajectory,
                    observer_canonical_structure, to_observer_canonical)
from .util import psd_sqrt, rng, symmetrize

# Relative ridge applied to a rank-deficient disturbance pattern so the
# complete-data likelihood stays finite; used consistently in E and M steps.
_QP_RIDGE = 1e-6


@dataclass
class EMConfig:
    n_x: int
    max_iters: int = 500
    loglik_tol: float = 1e-6
    seed: int = 0
    E_pattern: np.ndarray | None = None
    R_pattern: np.ndarray | None = None
    arx_lag: int | None = None  # defaults to 2 * n_x
    # Constrain the estimate to the observer canonical realization
    # (C = [I, 0] fixed, A block companion).  Pins the state coordinates
    # uniquely, so state-space quantities are comparable across trials.
    canonical: bool = False

    def __post_init__(self):
        if self.max_iters < 1 or self.loglik_tol <= 0:
            raise ValueError("max_iters >= 1 and loglik_tol > 0 required")


def markov_params(model: StateSpaceModel, n: int) -> np.ndarray:
    """Markov parameters C A^i B for i = 0..n, stacked along axis 0."""
    out = np.empty((n + 1, model.n_y, model.n_u))
    Ai = np.eye(model.n_x)
    for i in range(n + 1):
        out[i] = model.C @ Ai @ model.B
        Ai = model.A @ Ai
    return out


def _fir_markov_estimates(traj: Trajectory, lag: int) -> np.ndarray:
    """Estimate h_i = C A^{i-1} B, i = 1..lag, by regressing y on past inputs.

    With exogenous excitation this is consistent regardless of the noise
    correlation structure.
    """
    U, Y = traj.U, traj.Y
    T, n_u = U.shape
    n_y = Y.shape[1]
    rows = T - lag
    if rows < lag * n_u + 1:
        raise ValueError("trajectory too short for the requested ARX lag")
    # Row t of Y is y_{t+1}; y_{t+1} depends on u_t, u_{t-1}, ...
    Phi = np.empty((rows, lag * n_u))
    for i in range(1, lag + 1):
        Phi[:, (i - 1) * n_u:i * n_u] = U[lag - i:T - i]
    targets = Y[lag - 1:T - 1]
    cond = np.linalg.cond(Phi)
    if cond > 1e8:
        warnings.warn(f"input excitation is weak (regressor cond {cond:.2e})",
                      stacklevel=3)
    coef, *_ = np.linalg.lstsq(Phi, targets, rcond=None)
    return coef.T.reshape(n_y, lag, n_u).transpose(1, 0, 2)  # (lag, n_y, n_u)


def _ho_kalman(markov: np.ndarray, n_x: int, seed: int) -> tuple[np.ndarray, ...]:
    """Balanced state-space realization of order n_x from Markov parameters."""
    lag, n_y, n_u = markov.shape
    m = (lag - 1) // 2  # Hankel block rows/cols; needs markov up to index 2m
    H0 = np.block([[markov[i + j] for j in range(m)] for i in range(m)])
    H1 = np.block([[markov[i + j + 1] for j in range(m)] for i in range(m)])
    U, s, Vt = np.linalg.svd(H0)
    if s[n_x - 1] < 1e-10 * s[0]:
        # Rank-deficient Hankel: perturb deterministically and retry once.
        H0 = H0 + 1e-8 * s[0] * rng(seed, 9).standard_normal(H0.shape)
        U, s, Vt = np.linalg.svd(H0)
    sqrt_s = np.sqrt(s[:n_x])
    Ob = U[:, :n_x] * sqrt_s
    Co = (Vt[:n_x].T * sqrt_s).T
    A = np.linalg.pinv(Ob) @ H1 @ np.linalg.pinv(Co)
    B = Co[:, :n_u]
    C = Ob[:n_y, :]
    return A, B, C


def _canonical_from_markov(markov: np.ndarray, n_x: int
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Observer-canonical (A, B) fitted to Markov parameters h_1..h_lag.

    The last block row [W_1 ... W_mu] of the block-companion A satisfies
    the recursion h_{i+mu} = W_mu h_{i+mu-1} + ... + W_1 h_i, solved here in
    least squares over all available lags; this averages estimation noise
    over horizons instead of inverting a single observability window.
    B stacks the leading Markov parameters directly.
    """
    lag, n_y, n_u = markov.shape
    if n_x % n_y:
        raise ValueError("canonical form needs n_x divisible by n_y")
    mu = n_x // n_y
    if lag < mu + 1:
        raise ValueError("need Markov parameters beyond the observability index")
    # Rows: h_{i+mu}' = [h_i', h_{i+1}', ..., h_{i+mu-1}'] [W_1'; ...; W_mu'].
    Phi = np.vstack([
        np.hstack([markov[i + j].T for j in range(mu)])
        for i in range(lag - mu)])
    targets = np.vstack([markov[i + mu].T for i in range(lag - mu)])
    sol, *_ = np.linalg.lstsq(Phi, targets, rcond=None)
    A_fixed, _ = observer_canonical_structure(n_x, n_y)
    A = A_fixed.copy()
    A[(mu - 1) * n_y:, :] = sol.T
    B = markov[:mu].reshape(n_x, n_u)
    return A, B


def _initial_model(traj: Trajectory, cfg: EMConfig,
                   Ep: np.ndarray, Rp: np.ndarray) -> StateSpaceModel:
    lag = cfg.arx_lag or 2 * cfg.n_x
    lag = max(lag, 2 * cfg.n_x + 3)
    markov = _fir_markov_estimates(traj, lag)
    if cfg.canonical:
        n_y = traj.Y.shape[1]
        A, B = _canonical_from_markov(markov, cfg.n_x)
        C = np.hstack([np.eye(n_y), np.zeros((n_y, cfg.n_x - n_y))])
    else:
        A, B, C = _ho_kalman(markov, cfg.n_x, cfg.seed)
    # Crude noise scales from the FIR residual energy; EM refines them.
    resid_var = float(np.var(traj.Y, axis=0).mean())
    r0 = max(0.5 * resid_var / max(np.trace(Rp) / Rp.shape[0], 1e-300), 1e-10)
    q0 = r0
    Qp_reg = _regularized_pattern(Ep)
    return StateSpaceModel(A=A, B=B, C=C, E=psd_sqrt(q0 * Qp_reg),
                           R=r0 * Rp)


def _regularized_pattern(Ep: np.ndarray) -> np.ndarray:
    Qp = Ep @ Ep.T
    scale = np.trace(Qp) / Qp.shape[0]
    if scale <= 0:
        raise ValueError("disturbance pattern must be nonzero")
    return Qp + _QP_RIDGE * scale * np.eye(Qp.shape[0])


def em_identify(traj: Trajectory, cfg: EMConfig
                ) -> tuple[StateSpaceModel, np.ndarray]:
    """EM over (A, B, C, q, r) with structured noise; returns loglik trace.

    The E-step is an exact RTS smoothing pass, the M-step is closed form,
    so the trace is non-decreasing up to the stopping tolerance. The initial
    state belief is re-estimated alongside the parameters.

    An optional warm start at known parameters can be given via
    cfg-independent keyword use of `em_refine`.
    """
    Ep = np.eye(cfg.n_x) if cfg.E_pattern is None else np.asarray(cfg.E_pattern, float)
    Rp = np.eye(traj.Y.shape[1]) if cfg.R_pattern is None else np.asarray(cfg.R_pattern, float)
    if traj.T < 10 * cfg.n_x:
        raise ValueError("need T >= 10 * n_x samples")
    model = _initial_model(traj, cfg, Ep, Rp)
    return em_refine(traj, cfg, model, Ep, Rp)


def em_refine(traj: Trajectory, cfg: EMConfig, model: StateSpaceModel,
              Ep: np.ndarray | None = None, Rp: np.ndarray | None = None,
              init: GaussianBelief | None = None
              ) -> tuple[StateSpaceModel, np.ndarray]:
    """Run the EM iteration from a given starting model."""
    Ep = np.eye(model.n_x) if Ep is None else np.asarray(Ep, float)
    Rp = np.eye(model.n_y) if Rp is None else np.asarray(Rp, float)
    Qp_reg = _regularized_pattern(Ep)
    # Scale updates weight residuals by the pattern pseudo-inverse: the MLE
    # of q under a singular disturbance pattern uses only the noise-carrying
    # subspace.  Weighting by inv(Qp_reg) instead would put 1/ridge weight on
    # the deterministic rows, where smoother round-off then drives q to zero.
    Qp_pinv = np.linalg.pinv(Ep @ Ep.T)
    q_dof = np.linalg.matrix_rank(Ep @ Ep.T)
    Rp_inv = np.linalg.inv(Rp)
    n_x, n_y = model.n_x, model.n_y
    U, Y = traj.U, traj.Y
    T = traj.T
    if init is None:
        init = GaussianBelief(mean=np.zeros(n_x), cov=np.eye(n_x))
    A, B, C = model.A, model.B, model.C
    if cfg.canonical:
        A_fixed, A_free = observer_canonical_structure(n_x, n_y)
        C_canon = np.hstack([np.eye(n_y), np.zeros((n_y, n_x - n_y))])
        if not (np.allclose(C, C_canon, atol=1e-8)
                and np.allclose(np.where(A_free, 0.0, A), A_fixed, atol=1e-6)):
            raise ValueError("canonical EM needs a canonical starting model")
        C = C_canon
        A = np.where(A_free, A, A_fixed)
        # The per-row M-step below is the exact maximizer only if rows
        # coupled through the disturbance weight share the same fixed
        # entries of A (then the weighting drops out of the argmin).
        Qi = np.linalg.inv(Qp_reg)
        coupled = np.abs(Qi) > 1e-12 * np.abs(Qi).max()
        for i in range(n_x):
            for j in range(i + 1, n_x):
                if coupled[i, j] and not (
                        np.array_equal(A_fixed[i], A_fixed[j])
                        and np.array_equal(A_free[i], A_free[j])):
                    raise ValueError(
                        "canonical EM: disturbance pattern couples rows "
                        f"{i} and {j} with different fixed structure")
    # Recover scales consistent with the regularized pattern.
    q = max(np.trace(model.E @ model.E.T) / np.trace(Qp_reg), 1e-12)
    r = max(np.trace(model.R) / np.trace(Rp), 1e-12)

    trace = []
    for _ in range(cfg.max_iters):
        cur = StateSpaceModel(A=A, B=B, C=C, E=psd_sqrt(q * Qp_reg), R=r * Rp)
        sm = rts_smooth(cur, traj, init)
        ll = sm.loglik
        if trace:
            tol_abs = cfg.loglik_tol * (1.0 + abs(trace[-1]))
            if ll < trace[-1] - 10.0 * tol_abs:
                raise RuntimeError(
                    f"EM log-likelihood decreased ({trace[-1]:.6f} -> {ll:.6f})")
            if ll - trace[-1] < tol_abs:
                trace.append(ll)
                break
        trace.append(ll)

        xs, Ps, cross = sm.x_smooth, sm.P_smooth, sm.cross
        Exx = Ps + np.einsum("ti,tj->tij", xs, xs)   # E[x_t x_t'] over t=0..T
        # Transition statistics over t = 0..T-1.
        Sxx0 = Exx[:T].sum(axis=0)
        Sxu = xs[:T].T @ U
        Suu = U.T @ U
        Szz = np.block([[Sxx0, Sxu], [Sxu.T, Suu]])
        Ex1x = cross.transpose(0, 2, 1) + np.einsum("ti,tj->tij", xs[1:], xs[:T])
        Sx1z = np.hstack([Ex1x.sum(axis=0), xs[1:].T @ U])
        Sx1x1 = Exx[1:].sum(axis=0)
        try:
            if cfg.canonical:
                # Per-row least squares over the free entries only; fixed
                # identity blocks contribute regressors with coefficient
                # one.  Rows with identical free sets share a factorization.
                AB = np.zeros((n_x, n_x + U.shape[1]))
                AB[:, :n_x] = A_fixed
                n_in = U.shape[1]
                solved: dict[bytes, np.ndarray] = {}
                for i in range(n_x):
                    key = A_free[i].tobytes()
                    free_cols = np.concatenate([
                        np.flatnonzero(A_free[i]),
                        np.arange(n_x, n_x + n_in)])
                    rhs_i = Sx1z[i, free_cols]
                    fix = np.flatnonzero(A_fixed[i])
                    if fix.size:
                        rhs_i = rhs_i - Szz[np.ix_(free_cols, fix)].sum(axis=1)
                    if key not in solved:
                        solved[key] = np.linalg.cholesky(
                            Szz[np.ix_(free_cols, free_cols)])
                    Lf = solved[key]
                    sol_i = np.linalg.solve(
                        Lf.T, np.linalg.solve(Lf, rhs_i))
                    AB[i, free_cols] += sol_i
            else:
                AB = np.linalg.solve(Szz, Sx1z.T).T
        except np.linalg.LinAlgError as exc:
            raise RuntimeError("singular M-step normal equations") from exc
        A, B = AB[:, :n_x], AB[:, n_x:]
        W = symmetrize(Sx1x1 - AB @ Sx1z.T - Sx1z @ AB.T + AB @ Szz @ AB.T)
        q = float(np.einsum("ij,ji->", Qp_pinv, W)) / (T * q_dof)
        # Emission statistics over t = 1..T (rows of Y).
        Sxx1 = Sx1x1
        Syx = Y.T @ xs[1:]
        if not cfg.canonical:
            C = np.linalg.solve(Sxx1, Syx.T).T
        V = symmetrize(Y.T @ Y - C @ Syx.T - Syx @ C.T + C @ Sxx1 @ C.T)
        r = float(np.einsum("ij,ji->", Rp_inv, V)) / (T * n_y)
        if q <= 0 or r <= 0:
            raise RuntimeError("non-positive noise scale in M-step")
        init = GaussianBelief(mean=xs[0], cov=Ps[0])

    est = StateSpaceModel(A=A, B=B, C=C, E=psd_sqrt(q * Qp_reg), R=r * Rp)
    return est, np.asarray(trace)
