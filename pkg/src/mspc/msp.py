"""Per-horizon multi-step predictor identification via generalized least squares.

For each horizon k the regression y_{t+k} = Phi_{k,t} theta_k + e~_{t,k} is
solved with the exact block-banded covariance of the overlapping residual
windows, yielding both the estimate theta_k and its covariance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .kalman import FilterOutput, InnovationForm
from .model import MultiStepMatrices, StateSpaceModel, Trajectory, multi_step_from_model
from .util import symmetrize


@dataclass(frozen=True)
class RegressorSet:
    """Compact regressors: row t is [x_{t|t}', u_{[t:t+k-1]}'].

    The full regressor is the Kronecker product with I_{n_y}; it is expanded
    only where the normal equations are formed.
    """
    k: int
    compact: np.ndarray   # (n_t, n_x + k*n_u)
    y_stack: np.ndarray   # (n_t, n_y)
    n_y: int

    @property
    def n_theta(self) -> int:
        return self.n_y * self.compact.shape[1]

    def expand(self) -> np.ndarray:
        """Dense stacked Phi of shape (n_t * n_y, n_theta)."""
        return np.kron(self.compact, np.eye(self.n_y))


@dataclass(frozen=True)
class BandedCovariance:
    """Symmetric PD block-banded matrix stored as its lower diagonals.

    blocks[i] = E[e~_{t+i} e~_t'] for block lags i = 0..bandwidth; zero
    beyond. A banded Cholesky factor is computed at construction, which also
    certifies positive definiteness.
    """
    blocks: tuple
    n_rows: int
    block_size: int

    def __post_init__(self):
        object.__setattr__(self, "_chol", cholesky_banded(self.banded(), lower=True))

    @property
    def bandwidth(self) -> int:
        return len(self.blocks) - 1

    def banded(self) -> np.ndarray:
        """Lower banded storage (scipy convention ab[r, c] = A[c + r, c])."""
        ny, nt = self.block_size, self.n_rows
        bw = (self.bandwidth + 1) * ny - 1
        ab = np.zeros((bw + 1, nt * ny))
        for i, blk in enumerate(self.blocks):
            for a in range(ny):
                for b in range(ny):
                    r = i * ny + a - b
                    if r < 0:
                        continue
                    lim = nt - i
                    cols = np.arange(lim) * ny + b
                    ab[r, cols] = blk[a, b]
        return ab

    def to_dense(self) -> np.ndarray:
        ny, nt = self.block_size, self.n_rows
        M = np.zeros((nt * ny, nt * ny))
        for i, blk in enumerate(self.blocks):
            for t in range(nt - i):
                M[(t + i) * ny:(t + i + 1) * ny, t * ny:(t + 1) * ny] = blk
                if i:
                    M[t * ny:(t + 1) * ny, (t + i) * ny:(t + i + 1) * ny] = blk.T
        return M

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve_banded((self._chol, True), rhs)


@dataclass(frozen=True)
class MultiStepPredictor:
    k: int
    theta_hat: np.ndarray
    Sigma_theta: np.ndarray
    G0_hat: np.ndarray
    Gu_hat: np.ndarray
    Gw_hat: np.ndarray
    R_hat: np.ndarray

    @property
    def n_theta(self) -> int:
        return self.theta_hat.size


def vec(M: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(M).T.ravel()


def unvec(theta: np.ndarray, n_y: int) -> np.ndarray:
    """Inverse of `vec` for an n_y-row matrix."""
    return np.asarray(theta).reshape(-1, n_y).T


def extract_matrices(theta: np.ndarray, n_y: int, n_x: int
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Split vec([G0, Gu]) back into (G0, Gu)."""
    M = unvec(theta, n_y)
    return M[:, :n_x], M[:, n_x:]


def build_regressors(filter_out: FilterOutput, traj: Trajectory, k: int,
                     burn_in: int = 50) -> RegressorSet:
    """Stack [x_{t|t}, u_{[t:t+k-1]}] -> y_{t+k} pairs for t past the burn-in."""
    x_filt = filter_out.x_filt  # row j holds x_{j+1|j+1}
    T = traj.T
    n_x = x_filt.shape[1]
    n_u = traj.U.shape[1]
    n_y = traj.Y.shape[1]
    t0 = max(burn_in, 1)
    ts = np.arange(t0, T - k + 1)
    n_theta = n_y * (k * n_u + n_x)
    if ts.size * n_y <= n_theta:
        raise ValueError("insufficient data for horizon k after burn-in")
    compact = np.empty((ts.size, n_x + k * n_u))
    compact[:, :n_x] = x_filt[ts - 1]
    for i in range(k):
        compact[:, n_x + i * n_u:n_x + (i + 1) * n_u] = traj.U[ts + i]
    y_stack = traj.Y[ts + k - 1]
    return RegressorSet(k=k, compact=compact, y_stack=y_stack, n_y=n_y)


def build_noise_covariance(msm: MultiStepMatrices, S: np.ndarray,
                           n_rows: int) -> BandedCovariance:
    """Exact covariance of the overlapping residual windows e~_{t,k}.

    Block lag i: E[e~_{t+i} e~_t'] = sum_m Ge_m S Ge_{m+i}', zero for
    i >= k (no window overlap beyond the bandwidth).
    """
    ge = msm.ge_blocks()
    k = msm.k
    blocks = []
    for i in range(min(k, n_rows)):
        blk = sum(ge[m] @ S @ ge[m + i].T for m in range(k + 1 - i))
        blocks.append(blk if i else symmetrize(blk))
    try:
        return BandedCovariance(blocks=tuple(blocks), n_rows=n_rows,
                                block_size=S.shape[0])
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            "residual covariance is not positive definite; "
            "filter-timing convention mismatch") from exc


def gls_identify(reg: RegressorSet, cov: BandedCovariance
                 ) -> tuple[np.ndarray, np.ndarray]:
    """GLS estimate and covariance: theta = (Phi' W Phi)^{-1} Phi' W y.

    The weighting solve goes through the banded Cholesky factor of the
    residual covariance (O(T (k n_y)^2)), never a dense inverse.
    """
    Phi = reg.expand()
    y = reg.y_stack.ravel()
    Winv_Phi = cov.solve(Phi)
    N = symmetrize(Phi.T @ Winv_Phi)
    rhs = Winv_Phi.T @ y
    try:
        cN = np.linalg.cholesky(N)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("insufficient excitation: singular GLS normal matrix") from exc
    theta = np.linalg.solve(cN.T, np.linalg.solve(cN, rhs))
    Sigma = symmetrize(np.linalg.inv(N))
    return theta, Sigma


def surrogate_disturbance_terms(est_model: StateSpaceModel, inno: InnovationForm,
                                k: int, inflation: float = 1.2
                                ) -> tuple[np.ndarray, np.ndarray]:
    """Over-approximated disturbance terms (Gw_hat, R_hat) at horizon k."""
    if inflation < 1.0:
        raise ValueError("inflation must be >= 1")
    msm = multi_step_from_model(est_model, inno.L, k)
    return np.sqrt(inflation) * msm.Gw, inflation * est_model.R


def identify_predictor(filter_out: FilterOutput, traj: Trajectory,
                       est_model: StateSpaceModel, inno: InnovationForm,
                       k: int, burn_in: int = 50, inflation: float = 1.2
                       ) -> MultiStepPredictor:
    """Full per-horizon identification: regressors, GLS, surrogate terms."""
    reg = build_regressors(filter_out, traj, k, burn_in)
    msm = multi_step_from_model(est_model, inno.L, k)
    cov = build_noise_covariance(msm, inno.S, reg.compact.shape[0])
    theta, Sigma = gls_identify(reg, cov)
    G0, Gu = extract_matrices(theta, reg.n_y, est_model.n_x)
    Gw_hat, R_hat = surrogate_disturbance_terms(est_model, inno, k, inflation)
    return MultiStepPredictor(k=k, theta_hat=theta, Sigma_theta=Sigma,
                              G0_hat=G0, Gu_hat=Gu, Gw_hat=Gw_hat, R_hat=R_hat)


def predictors_to_json(preds: dict[int, MultiStepPredictor]) -> str:
    out = {}
    for k, p in sorted(preds.items()):
        chol = np.linalg.cholesky(symmetrize(p.Sigma_theta))
        out[str(k)] = {
            "theta_hat": p.theta_hat.tolist(),
            "sigma_theta_chol": chol.tolist(),
            "G0_hat": p.G0_hat.tolist(),
            "Gu_hat": p.Gu_hat.tolist(),
            "Gw_hat": p.Gw_hat.tolist(),
            "R_hat": p.R_hat.tolist(),
        }
    return json.dumps(out)


def predictors_from_json(s: str) -> dict[int, MultiStepPredictor]:
    raw = json.loads(s)
    preds = {}
    for ks, d in raw.items():
        chol = np.array(d["sigma_theta_chol"])
        preds[int(ks)] = MultiStepPredictor(
            k=int(ks), theta_hat=np.array(d["theta_hat"]),
            Sigma_theta=chol @ chol.T, G0_hat=np.array(d["G0_hat"]),
            Gu_hat=np.array(d["Gu_hat"]), Gw_hat=np.array(d["Gw_hat"]),
            R_hat=np.array(d["R_hat"]))
    return preds
