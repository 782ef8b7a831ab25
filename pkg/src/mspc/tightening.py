"""Probabilistic constants and tightened second-order-cone constraint rows.

Risk splitting: the chance level p is enforced as p~ = p / delta against any
parameter in a set of probability >= delta. The ellipsoidal route bounds the
parameter-dependent variance term over a chi-squared confidence ellipsoid;
the proposed route uses the quantile of the Gaussian quadratic form directly,
which stays independent of the parameter dimension.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .model import GaussianBelief
from .msp import MultiStepPredictor
from .util import psd_sqrt, rng, symmetrize


@dataclass(frozen=True)
class ChanceSpec:
    p: float = 0.9
    delta: float = 0.95
    epsilon: float = 0.975

    def __post_init__(self):
        if not (0.0 < self.p < self.delta < 1.0):
            raise ValueError("need 0 < p < delta < 1")
        if not (self.p_tilde < self.epsilon < 1.0):
            raise ValueError("need epsilon in (p/delta, 1)")
        if not (0.0 < 1.0 + self.delta - self.epsilon < 1.0):
            raise ValueError("need 1 + delta - epsilon in (0, 1)")

    @property
    def p_tilde(self) -> float:
        return self.p / self.delta

    @property
    def c_p(self) -> float:
        return np.sqrt(chi2_quantile(1, 2.0 * self.p - 1.0))

    @property
    def c_p_tilde(self) -> float:
        return np.sqrt(chi2_quantile(1, 2.0 * self.p_tilde - 1.0))

    @property
    def c_eps(self) -> float:
        return np.sqrt(chi2_quantile(1, 2.0 * self.epsilon - 1.0))

    def d_delta(self, n_theta: int) -> float:
        return np.sqrt(chi2_quantile(n_theta, self.delta))


@dataclass(frozen=True)
class HalfspaceConstraint:
    """Output constraint h' y <= 1."""
    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).ravel()
        if not np.all(np.isfinite(h)) or not np.any(h):
            raise ValueError("constraint direction must be finite and nonzero")
        object.__setattr__(self, "h", h)
        h.setflags(write=False)


@dataclass(frozen=True)
class SocRow:
    """Constraint `offset + linear_coeff'u + scale * ||cone_matrix u + cone_offset|| <= rhs`."""
    linear_coeff: np.ndarray
    offset: float
    cone_matrix: np.ndarray
    cone_offset: np.ndarray
    scale: float
    rhs: float
    meta: dict = field(default=None, compare=False)

    def margin(self, u: np.ndarray) -> float:
        """rhs minus the left-hand side; nonnegative iff satisfied."""
        lhs = self.offset + self.linear_coeff @ u + self.scale * np.linalg.norm(
            self.cone_matrix @ u + self.cone_offset)
        return self.rhs - lhs

    @property
    def trivially_infeasible(self) -> bool:
        return (self.rhs < self.offset + self.scale * np.linalg.norm(self.cone_offset)
                and not self.linear_coeff.any() and not self.cone_matrix.any())


def chi2_quantile(dof: int, prob: float) -> float:
    """Quantile of the chi-squared distribution with `dof` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if not (0.0 <= prob < 1.0):
        raise ValueError("prob must lie in [0, 1)")
    return float(stats.chi2.ppf(prob, dof))


def trust_region_max(M: np.ndarray, theta_hat: np.ndarray, Sigma: np.ndarray,
                     radius: float) -> float:
    """Exact maximum of theta' M theta over the Mahalanobis ball
    ||theta - theta_hat||_{Sigma^{-1}} <= radius.

    Substituting theta = theta_hat + F z with F F' = Sigma turns the problem
    into maximizing a convex quadratic over a Euclidean ball, solved on the
    boundary via the secular equation in the multiplier, with explicit
    hard-case handling at the largest eigenvalue.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    theta_hat = np.asarray(theta_hat, dtype=float).ravel()
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    if radius < 0:
        raise ValueError("radius must be >= 0")
    scale = max(np.abs(M).max(), 1.0)
    if np.linalg.eigvalsh(symmetrize(M)).min() < -1e-10 * scale:
        raise ValueError("M must be PSD")
    try:
        F = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Sigma must be positive definite") from exc

    c0 = float(theta_hat @ M @ theta_hat)
    if radius == 0.0 or not M.any():
        return c0
    At = symmetrize(F.T @ M @ F)
    lam, Q = np.linalg.eigh(At)
    beta = Q.T @ (F.T @ (M @ theta_hat))
    lam_max = lam[-1]

    def value(z):
        return c0 + 2.0 * beta @ z + z @ (lam * z)

    bnorm = np.linalg.norm(beta)
    if bnorm == 0.0 and lam_max <= 0.0:
        return c0

    # Hard-case candidate: multiplier at lam_max, degenerate component fills
    # the remaining radius along a top eigendirection.
    tau = 1e-12 * max(abs(lam_max), 1.0)
    nondeg = lam < lam_max - tau
    best = -np.inf
    z_nd = np.zeros_like(beta)
    z_nd[nondeg] = beta[nondeg] / (lam_max - lam[nondeg])
    nrm2 = z_nd @ z_nd
    if nrm2 <= radius ** 2:
        t = np.sqrt(radius ** 2 - nrm2)
        deg_b = np.linalg.norm(beta[~nondeg])
        best = value(z_nd) + lam_max * t * t + 2.0 * deg_b * t

    # Secular equation for the boundary multiplier mu = lam_max + sigma.
    if bnorm > 0.0:
        sig_hi = bnorm / radius
        def norm2(sig):
            z = beta / (lam_max + sig - lam)
            return z @ z
        sig_lo = sig_hi
        for _ in range(80):
            cand = sig_lo / 8.0
            if cand < 1e-16 * max(abs(lam_max), 1.0) or norm2(cand) > radius ** 2:
                break
            sig_lo = cand
        if norm2(sig_lo) >= radius ** 2 >= norm2(sig_hi):
            for _ in range(200):
                mid = 0.5 * (sig_lo + sig_hi)
                if norm2(mid) > radius ** 2:
                    sig_lo = mid
                else:
                    sig_hi = mid
            z = beta / (lam_max + sig_hi - lam)
            best = max(best, value(z))
    if not np.isfinite(best):
        # Boundary point along the top eigendirection, sign-aligned with beta.
        z = np.zeros_like(beta)
        z[-1] = radius * (1.0 if beta[-1] >= 0 else -1.0)
        best = value(z)
    return float(best)


def quad_form_quantile(M: np.ndarray, theta_hat: np.ndarray, Sigma: np.ndarray,
                       level: float, n_samples: int = 100_000,
                       seed: int = 0) -> float:
    """Monte Carlo quantile of theta' M theta with theta ~ N(theta_hat, Sigma).

    Sampling happens in the (typically low-dimensional) range of M, and the
    conservative upper order statistic is returned. Deterministic given
    (seed, n_samples).
    """
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    M = symmetrize(np.atleast_2d(np.asarray(M, dtype=float)))
    theta_hat = np.asarray(theta_hat, dtype=float).ravel()
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    lam, V = np.linalg.eigh(M)
    keep = lam > 1e-14 * max(lam.max(initial=0.0), 1.0)
    if not keep.any():
        return 0.0
    Fm = V[:, keep] * np.sqrt(lam[keep])   # M = Fm Fm'
    mean_g = Fm.T @ theta_hat
    cov_g = symmetrize(Fm.T @ Sigma @ Fm)
    if np.abs(cov_g).max() == 0.0:
        return float(mean_g @ mean_g)
    Fg = psd_sqrt(cov_g)
    Z = rng(seed, 7).standard_normal((int(n_samples), mean_g.size))
    G = mean_g + Z @ Fg.T
    vals = np.sort(np.einsum("ij,ij->i", G, G))
    idx = min(int(np.ceil(level * n_samples)), n_samples - 1)
    return float(vals[idx])


def _kron_map(h: np.ndarray, n_cols: int) -> np.ndarray:
    """Matrix K with K a = a (x) h for a of length n_cols."""
    n_y = h.size
    K = np.zeros((n_cols * n_y, n_cols))
    for j in range(n_cols):
        K[j * n_y:(j + 1) * n_y, j] = h
    return K


def build_quadratic_form(init: GaussianBelief, h: np.ndarray, k: int,
                         n_u: int) -> np.ndarray:
    """M = diag(Sigma_x0, 0) (x) h h' over the parameter vector of horizon k."""
    n_x = init.mean.size
    D = np.zeros((n_x + k * n_u, n_x + k * n_u))
    D[:n_x, :n_x] = init.cov
    return np.kron(D, np.outer(h, h))


def _row_common(msp: MultiStepPredictor, h: np.ndarray, init: GaussianBelief,
                n_vars: int | None):
    k = msp.k
    n_y, n_x = msp.G0_hat.shape
    n_u = msp.Gu_hat.shape[1] // k
    n_vars = n_vars if n_vars is not None else k * n_u
    if n_vars < k * n_u:
        raise ValueError("n_vars must cover the horizon inputs")
    d_kj = float(h @ (msp.Gw_hat @ msp.Gw_hat.T + msp.R_hat) @ h)
    K = _kron_map(h, n_x + k * n_u)
    try:
        Fth = np.linalg.cholesky(msp.Sigma_theta).T
    except np.linalg.LinAlgError:
        Fth = psd_sqrt(msp.Sigma_theta)
    cone_full = Fth @ K   # columns: [x0-block, u-block]
    cone_offset = cone_full[:, :n_x] @ init.mean
    cone_matrix = np.zeros((cone_full.shape[0], n_vars))
    cone_matrix[:, :k * n_u] = cone_full[:, n_x:]
    linear = np.zeros(n_vars)
    linear[:k * n_u] = h @ msp.Gu_hat
    offset = float(h @ msp.G0_hat @ init.mean)
    M = build_quadratic_form(init, h, k, n_u)
    return d_kj, M, cone_matrix, cone_offset, linear, offset


def build_rows_proposed(msp: MultiStepPredictor, h: HalfspaceConstraint,
                        init: GaussianBelief, spec: ChanceSpec,
                        n_vars: int | None = None, mc_samples: int = 100_000,
                        seed: int = 0) -> SocRow:
    """Tightened row using the quantile of the Gaussian quadratic form."""
    d_kj, M, cone_matrix, cone_offset, linear, offset = _row_common(
        msp, h.h, init, n_vars)
    level = 1.0 + spec.delta - spec.epsilon
    if np.abs(init.cov).max() == 0.0:
        f_eps = 0.0
    else:
        f_eps = quad_form_quantile(M, msp.theta_hat, msp.Sigma_theta, level,
                                   n_samples=mc_samples, seed=seed)
    rhs = 1.0 - spec.c_p_tilde * np.sqrt(f_eps + d_kj)
    meta = {"k": msp.k, "d_kj": d_kj, "f": f_eps, "method": "proposed",
            "cone_scale": spec.c_eps, "rhs_term": rhs, "infeasible_rhs": rhs <= 0.0}
    return SocRow(linear_coeff=linear, offset=offset, cone_matrix=cone_matrix,
                  cone_offset=cone_offset, scale=spec.c_eps, rhs=rhs, meta=meta)


def build_rows_ellipsoidal(msp: MultiStepPredictor, h: HalfspaceConstraint,
                           init: GaussianBelief, spec: ChanceSpec,
                           n_vars: int | None = None) -> SocRow:
    """Tightened row using the chi-squared confidence ellipsoid."""
    d_kj, M, cone_matrix, cone_offset, linear, offset = _row_common(
        msp, h.h, init, n_vars)
    d_delta = spec.d_delta(msp.n_theta)
    if np.abs(init.cov).max() == 0.0:
        f = 0.0
    elif np.abs(msp.Sigma_theta).max() == 0.0:
        f = float(msp.theta_hat @ M @ msp.theta_hat)
    else:
        f = trust_region_max(M, msp.theta_hat, msp.Sigma_theta, d_delta)
    rhs = 1.0 - spec.c_p_tilde * np.sqrt(f + d_kj)
    meta = {"k": msp.k, "d_kj": d_kj, "f": f, "method": "ellipsoidal",
            "cone_scale": d_delta, "rhs_term": rhs, "infeasible_rhs": rhs <= 0.0}
    return SocRow(linear_coeff=linear, offset=offset, cone_matrix=cone_matrix,
                  cone_offset=cone_offset, scale=d_delta, rhs=rhs, meta=meta)
