"""Linear-Gaussian state-space models, simulation and multi-step prediction matrices.

Conventions:
    x_{t+1} = A x_t + B u_t + E w_t,   w_t ~ N(0, I)
    y_t     = C x_t + v_t,             v_t ~ N(0, R)

A trajectory of length T collects inputs u_0..u_{T-1} and outputs y_1..y_T.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .util import check_psd, psd_sqrt, rng, symmetrize


@dataclass(frozen=True)
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    E: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        n_x = A.shape[0]
        if A.shape != (n_x, n_x):
            raise ValueError("A must be square")
        if B.shape[0] != n_x or E.shape[0] != n_x or C.shape[1] != n_x:
            raise ValueError("inconsistent state dimension across A, B, C, E")
        n_y = C.shape[0]
        if R.shape != (n_y, n_y):
            raise ValueError("R must be n_y x n_y")
        R = symmetrize(R)
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be positive definite")
        for name, M in (("A", A), ("B", B), ("C", C), ("E", E), ("R", R)):
            object.__setattr__(self, name, M)
            M.setflags(write=False)
        # Detectability proxy: observability rank of (A, C), warning only.
        obs = np.vstack([C @ np.linalg.matrix_power(A, i) for i in range(n_x)])
        if np.linalg.matrix_rank(obs) < n_x:
            warnings.warn("(A, C) pair is not observable; filter may not converge",
                          stacklevel=2)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @property
    def n_w(self) -> int:
        return self.E.shape[1]

    def to_json(self) -> str:
        d = {"n_x": self.n_x, "n_u": self.n_u, "n_y": self.n_y, "n_w": self.n_w}
        for name in ("A", "B", "C", "E", "R"):
            d[name] = getattr(self, name).tolist()
        return json.dumps(d)

    @classmethod
    def from_json(cls, s: str) -> "StateSpaceModel":
        d = json.loads(s)
        m = cls(A=np.array(d["A"]), B=np.array(d["B"]), C=np.array(d["C"]),
                E=np.array(d["E"]), R=np.array(d["R"]))
        for k in ("n_x", "n_u", "n_y", "n_w"):
            if getattr(m, k) != d[k]:
                raise ValueError(f"dimension field {k} disagrees with matrix shapes")
        return m


@dataclass(frozen=True)
class Trajectory:
    """Inputs u_0..u_{T-1} (rows of U) and outputs y_1..y_T (rows of Y)."""
    U: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.U, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if U.shape[0] != Y.shape[0]:
            raise ValueError("U and Y must have the same length")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "Y", Y)
        U.setflags(write=False)
        Y.setflags(write=False)

    @property
    def T(self) -> int:
        return self.U.shape[0]

    def to_csv(self, path) -> None:
        n_u, n_y = self.U.shape[1], self.Y.shape[1]
        header = ",".join(["t"] + [f"u_{i}" for i in range(n_u)]
                          + [f"y_{i}" for i in range(n_y)])
        data = np.column_stack([np.arange(self.T), self.U, self.Y])
        np.savetxt(path, data, delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path, n_u: int) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(U=data[:, 1:1 + n_u], Y=data[:, 1 + n_u:])


@dataclass(frozen=True)
class MultiStepMatrices:
    """Exact k-step prediction matrices.

    y_{t+k} = G0 x_{t|t} + Gu u_{[t:t+k-1]} + (noise terms); Ge maps the
    stacked innovation window e_{[t:t+k]} (k+1 blocks, leading block zero)
    to the residual under the measurement-update filter timing.
    """
    k: int
    G0: np.ndarray
    Gu: np.ndarray
    Gw: np.ndarray
    Ge: np.ndarray

    def __post_init__(self):
        n_y = self.G0.shape[0]
        if self.Gu.shape[1] % self.k or self.Ge.shape[1] != (self.k + 1) * n_y:
            raise ValueError("block widths inconsistent with horizon k")

    def ge_blocks(self) -> list[np.ndarray]:
        n_y = self.G0.shape[0]
        return [self.Ge[:, i * n_y:(i + 1) * n_y] for i in range(self.k + 1)]


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray = field(default=None)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.zeros((mean.size, mean.size)) if self.cov is None else self.cov
        cov = check_psd(cov, "belief covariance")
        if cov.shape != (mean.size, mean.size):
            raise ValueError("mean/cov dimension mismatch")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        mean.setflags(write=False)
        cov.setflags(write=False)


def build_msd_chain(n_masses: int = 3, mass: float = 1.0, spring: float = 10.0,
                    damping: float = 2.0, dt: float = 0.5,
                    dist_cov_diag=None, meas_cov_scale: float = 1e-3
                    ) -> StateSpaceModel:
    """Mass-spring-damper chain, exactly discretized.

    Masses are connected in series, the first anchored to a wall, with the
    control force acting on the last mass. State ordering is positions then
    velocities; only positions are measured.
    """
    if min(n_masses, mass, spring, damping, dt) <= 0:
        raise ValueError("all physical parameters and dt must be positive")
    n = n_masses
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] = 2.0 if i < n - 1 else 1.0
        if i > 0:
            K[i, i - 1] = K[i - 1, i] = -1.0
    K *= spring
    D = K / spring * damping
    Ac = np.block([[np.zeros((n, n)), np.eye(n)],
                   [-K / mass, -D / mass]])
    Bc = np.zeros((2 * n, 1))
    Bc[-1, 0] = 1.0 / mass
    # Exact zero-order-hold discretization of the augmented system.
    aug = np.zeros((2 * n + 1, 2 * n + 1))
    aug[:2 * n, :2 * n] = Ac
    aug[:2 * n, 2 * n:] = Bc
    Phi = expm(aug * dt)
    if not np.all(np.isfinite(Phi)):
        raise ValueError("discretization produced non-finite values")
    A = Phi[:2 * n, :2 * n]
    B = Phi[:2 * n, 2 * n:]
    C = np.hstack([np.eye(n), np.zeros((n, n))])
    if dist_cov_diag is None:
        dist_cov_diag = np.concatenate([np.zeros(n), 1e-3 * np.ones(n)])
    E = psd_sqrt(np.diag(np.asarray(dist_cov_diag, dtype=float)))
    R = meas_cov_scale * np.eye(n)
    return StateSpaceModel(A=A, B=B, C=C, E=E, R=R)


def to_output_normal_form(model: StateSpaceModel
                          ) -> tuple[StateSpaceModel, np.ndarray]:
    """Similarity transform x' = T x such that C' = [I, 0].

    The first n_y coordinates of the transformed state are the noise-free
    outputs; the remaining coordinates complete the basis orthonormally.
    Input-output behavior is unchanged.
    """
    C = model.C
    n_y, n_x = C.shape
    if np.linalg.matrix_rank(C) < n_y:
        raise ValueError("C must have full row rank")
    rows = [C[i] for i in range(n_y)]
    # Complete with coordinate directions, Gram-Schmidt against the row space.
    basis = list(np.linalg.qr(C.T)[0].T)
    extra = []
    for cand in np.eye(n_x):
        v = cand.copy()
        for b in basis:
            v -= (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            v /= nv
            basis.append(v)
            extra.append(v)
        if len(extra) == n_x - n_y:
            break
    T = np.vstack(rows + extra)
    Tinv = np.linalg.inv(T)
    out = StateSpaceModel(A=T @ model.A @ Tinv, B=T @ model.B,
                          C=C @ Tinv, E=T @ model.E, R=model.R)
    return out, T


def observer_canonical_structure(n_x: int, n_y: int
                                 ) -> tuple[np.ndarray, np.ndarray]:
    """Fixed part and free-entry mask of the canonical A matrix.

    For a uniform observability index mu = n_x / n_y the canonical A is
    block companion: identity blocks on the block superdiagonal, free
    n_y-by-n_y blocks across the last block row, zeros elsewhere.  With
    C = [I, 0] the state block i then holds the noise-free outputs
    predicted i steps ahead.  Returns (A_fixed, free_mask) with free_mask
    boolean.
    """
    if n_x % n_y:
        raise ValueError("canonical form needs n_x divisible by n_y")
    mu = n_x // n_y
    fixed = np.zeros((n_x, n_x))
    free = np.zeros((n_x, n_x), dtype=bool)
    free[(mu - 1) * n_y:, :] = True
    for b in range(mu - 1):
        r = slice(b * n_y, (b + 1) * n_y)
        c = slice((b + 1) * n_y, (b + 2) * n_y)
        fixed[r, c] = np.eye(n_y)
    return fixed, free


def to_observer_canonical(model: StateSpaceModel
                          ) -> tuple[StateSpaceModel, np.ndarray]:
    """Similarity transform to the block-companion observability form.

    The transformed model has C' = [I, 0] and A' block companion (identity
    blocks on the superdiagonal, free blocks across the last block row):
    state block i holds the noise-free outputs predicted i steps ahead.
    This realization is unique given the input-output behavior, so two
    models of the same system land in identical state coordinates — which
    makes state-space quantities such as initial beliefs comparable across
    independently identified models.

    Requires a uniform observability index mu = n_x / n_y, i.e. the rows of
    [C; CA; ...; CA^{mu-1}] must form a basis.
    """
    C, A = model.C, model.A
    n_y, n_x = C.shape
    if n_x % n_y:
        raise ValueError("canonical form needs n_x divisible by n_y")
    mu = n_x // n_y
    powers = [C]
    for _ in range(mu):
        powers.append(powers[-1] @ A)
    T = np.vstack(powers[:mu])
    cond = np.linalg.cond(T)
    if cond > 1e12:
        raise ValueError(
            f"model is not observable with uniform index {mu} "
            f"(observability matrix condition {cond:.2e})")
    Tinv = np.linalg.inv(T)
    out = StateSpaceModel(A=T @ A @ Tinv, B=T @ model.B,
                          C=C @ Tinv, E=T @ model.E, R=model.R)
    return out, T


def simulate(model: StateSpaceModel, x0: np.ndarray, inputs: np.ndarray,
             seed: int) -> Trajectory:
    """Simulate the model forward; identical seed gives identical draws.

    Disturbance and measurement-noise streams come from independent
    counter-based generators keyed by (seed, stream-id).
    """
    U = np.atleast_2d(np.asarray(inputs, dtype=float))
    if U.shape[1] != model.n_u:
        U = U.reshape(-1, model.n_u)
    T = U.shape[0]
    if T < 1:
        raise ValueError("need at least one input step")
    W = rng(seed, 0).standard_normal((T, model.n_w))
    Rsqrt = psd_sqrt(model.R)
    V = rng(seed, 1).standard_normal((T, model.n_y)) @ Rsqrt.T
    x = np.asarray(x0, dtype=float).ravel().copy()
    Y = np.empty((T, model.n_y))
    for t in range(T):
        x = model.A @ x + model.B @ U[t] + model.E @ W[t]
        Y[t] = model.C @ x + V[t]
    if not np.all(np.isfinite(Y)):
        warnings.warn("simulation overflowed to non-finite outputs", stacklevel=2)
    return Trajectory(U=U, Y=Y)


def multi_step_from_model(model: StateSpaceModel, L: np.ndarray, k: int
                          ) -> MultiStepMatrices:
    """Exact k-step matrices from state-space data and a filter gain L.

    Under the measurement-update filter timing
    x_{t+1|t+1} = A x_{t|t} + B u_t + L e_{t+1} the k-step output satisfies
    y_{t+k} = C A^k x_{t|t} + sum_i C A^{k-1-i} B u_{t+i}
              + sum_{i=1}^{k-1} C A^{k-i} L e_{t+i} + e_{t+k},
    so Ge has k+1 blocks over e_{[t:t+k]} with a zero leading block.
    """
    if k < 1:
        raise ValueError("horizon k must be >= 1")
    A, B, C, E = model.A, model.B, model.C, model.E
    n_y = model.n_y
    powers = [np.eye(model.n_x)]
    for _ in range(k):
        powers.append(A @ powers[-1])
    G0 = C @ powers[k]
    Gu = np.hstack([C @ powers[k - 1 - i] @ B for i in range(k)])
    Gw = np.hstack([C @ powers[k - 1 - i] @ E for i in range(k)])
    ge = [np.zeros((n_y, n_y))]
    ge += [C @ powers[k - i] @ L for i in range(1, k)]
    ge.append(np.eye(n_y))
    return MultiStepMatrices(k=k, G0=G0, Gu=Gu, Gw=Gw, Ge=np.hstack(ge))
