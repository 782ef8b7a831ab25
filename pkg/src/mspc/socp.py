"""Conic program assembly and a dense primal-dual interior-point solver.

Programs have a convex quadratic objective 0.5 u'Hu + g'u (+ const), linear
inequality rows a'u <= b and second-order-cone rows. The solver works on the
homogeneous self-dual embedding of the conic form min c'x s.t. Ax + s = b,
s in K, with Nesterov-Todd scaling and Mehrotra predictor-corrector steps;
infeasibility is declared from the embedding's certificate. The quadratic
objective is rotated into an epigraph second-order cone.

Problem sizes here are tiny (tens of variables, ~100 cones), so all linear
algebra is dense.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .model import GaussianBelief, StateSpaceModel, multi_step_from_model
from .msp import MultiStepPredictor
from .tightening import (ChanceSpec, HalfspaceConstraint, SocRow,
                         build_rows_ellipsoidal, build_rows_proposed)
from .util import symmetrize

METHODS = ("nominal", "ellipsoidal", "proposed")


@dataclass(frozen=True)
class ConicProgram:
    """min 0.5 u'Hu + g'u + const  s.t.  a'u <= b rows and SocRow cones."""
    n_vars: int
    H: np.ndarray
    g: np.ndarray
    lin_rows: tuple = ()
    soc_rows: tuple = ()
    const: float = 0.0

    def __post_init__(self):
        H = symmetrize(np.asarray(self.H, dtype=float))
        if H.shape != (self.n_vars, self.n_vars):
            raise ValueError("H dimension mismatch")
        if np.linalg.eigvalsh(H).min() < -1e-9 * max(1.0, np.abs(H).max()):
            raise ValueError("H must be PSD")
        object.__setattr__(self, "H", H)
        for a, b in self.lin_rows:
            if np.asarray(a).size != self.n_vars:
                raise ValueError("linear row dimension mismatch")
        for row in self.soc_rows:
            if row.linear_coeff.size != self.n_vars or row.cone_matrix.shape[1] != self.n_vars:
                raise ValueError("SOC row dimension mismatch")

    def objective(self, u: np.ndarray) -> float:
        return float(0.5 * u @ self.H @ u + self.g @ u + self.const)

    def max_violation(self, u: np.ndarray) -> float:
        """Largest constraint violation at u (0 if feasible)."""
        v = 0.0
        for a, b in self.lin_rows:
            v = max(v, float(np.asarray(a) @ u - b))
        for row in self.soc_rows:
            v = max(v, -row.margin(u))
        return v


@dataclass(frozen=True)
class Solution:
    status: str   # Optimal | PrimalInfeasible | MaxIterations
    u_star: np.ndarray
    objective: float
    kkt_residuals: dict
    iterations: int
    wall_time: float


# ---------------------------------------------------------------------------
# Cone utilities. The cone is R_+^l x Q^{m_1} x ... x Q^{m_p}, flat-packed.
# ---------------------------------------------------------------------------

class _Cones:
    def __init__(self, l: int, soc_dims: list[int]):
        self.l = l
        self.soc_dims = list(soc_dims)
        self.dim = l + sum(soc_dims)
        self.degree = l + len(soc_dims)
        offs = [l]
        for m in soc_dims:
            offs.append(offs[-1] + m)
        self.offs = offs  # soc i occupies offs[i]:offs[i+1]

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[:self.l] = 1.0
        for i in range(len(self.soc_dims)):
            e[self.offs[i]] = 1.0
        return e

    def inside(self, v: np.ndarray, margin: float = 0.0) -> bool:
        if self.l and v[:self.l].min() <= margin:
            return False
        for i, m in enumerate(self.soc_dims):
            blk = v[self.offs[i]:self.offs[i] + m]
            if blk[0] - np.linalg.norm(blk[1:]) <= margin:
                return False
        return True

    def step_to_boundary(self, v: np.ndarray, dv: np.ndarray) -> float:
        """sup { alpha >= 0 : v + alpha dv in closure(K) } for interior v."""
        alpha = np.inf
        if self.l:
            neg = dv[:self.l] < 0
            if neg.any():
                alpha = min(alpha, (-v[:self.l][neg] / dv[:self.l][neg]).min())
        for i, m in enumerate(self.soc_dims):
            p = v[self.offs[i]:self.offs[i] + m]
            d = dv[self.offs[i]:self.offs[i] + m]
            alpha = min(alpha, _soc_step(p, d))
        return alpha


def _soc_step(p: np.ndarray, d: np.ndarray) -> float:
    """Boundary step for one second-order cone from an interior point."""
    a = d[0] ** 2 - d[1:] @ d[1:]
    b = 2.0 * (p[0] * d[0] - p[1:] @ d[1:])
    c = p[0] ** 2 - p[1:] @ p[1:]
    roots = []
    if abs(a) < 1e-300:
        if b < 0:
            roots.append(-c / b)
    else:
        disc = b * b - 4.0 * a * c
        if disc >= 0:
            sq = np.sqrt(disc)
            roots.extend([(-b - sq) / (2 * a), (-b + sq) / (2 * a)])
    # Also the hyperplane p0 + alpha d0 = 0 bounds the cone.
    if d[0] < 0:
        roots.append(-p[0] / d[0])
    pos = [r for r in roots if r > 1e-300]
    return min(pos) if pos else np.inf


def _soc_prod(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    out[0] = u @ v
    out[1:] = u[0] * v[1:] + v[0] * u[1:]
    return out


def _soc_solve(lam: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Solve lam o x = d (arrow system) for one SOC block."""
    det = lam[0] ** 2 - lam[1:] @ lam[1:]
    x = np.empty_like(d)
    x[0] = (lam[0] * d[0] - lam[1:] @ d[1:]) / det
    x[1:] = (d[1:] - x[0] * lam[1:]) / lam[0]
    return x


class _Scaling:
    """Nesterov-Todd scaling for the product cone; W symmetric per block."""

    def __init__(self, cones: _Cones, s: np.ndarray, z: np.ndarray):
        self.cones = cones
        l = cones.l
        self.w_lin = np.sqrt(s[:l] / z[:l]) if l else np.zeros(0)
        self.W_socs = []
        self.Winv_socs = []
        lam = np.empty(cones.dim)
        lam[:l] = np.sqrt(s[:l] * z[:l])
        for i, m in enumerate(cones.soc_dims):
            o = cones.offs[i]
            sb, zb = s[o:o + m], z[o:o + m]
            J = -np.eye(m)
            J[0, 0] = 1.0
            rho = np.sqrt(sb @ J @ sb)
            sig = np.sqrt(zb @ J @ zb)
            sbar, zbar = sb / rho, zb / sig
            gamma = np.sqrt((1.0 + sbar @ zbar) / 2.0)
            w = (sbar + J @ zbar) / (2.0 * gamma)
            beta = np.sqrt(rho / sig)
            Wb = np.empty((m, m))
            Wb[0, 0] = w[0]
            Wb[0, 1:] = w[1:]
            Wb[1:, 0] = w[1:]
            Wb[1:, 1:] = np.eye(m - 1) + np.outer(w[1:], w[1:]) / (1.0 + w[0])
            W = beta * Wb
            Winv = (J @ Wb @ J) / beta
            self.W_socs.append(W)
            self.Winv_socs.append(Winv)
            lam[o:o + m] = W @ zb
        self.lam = lam

    def apply_W(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        l = self.cones.l
        out[:l] = self.w_lin * v[:l]
        for i, m in enumerate(self.cones.soc_dims):
            o = self.cones.offs[i]
            out[o:o + m] = self.W_socs[i] @ v[o:o + m]
        return out

    def apply_Winv(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        l = self.cones.l
        out[:l] = v[:l] / self.w_lin
        for i, m in enumerate(self.cones.soc_dims):
            o = self.cones.offs[i]
            out[o:o + m] = self.Winv_socs[i] @ v[o:o + m]
        return out

    def lam_prod(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Jordan product u o v blockwise."""
        out = np.empty_like(u)
        l = self.cones.l
        out[:l] = u[:l] * v[:l]
        for i, m in enumerate(self.cones.soc_dims):
            o = self.cones.offs[i]
            out[o:o + m] = _soc_prod(u[o:o + m], v[o:o + m])
        return out

    def lam_solve(self, d: np.ndarray) -> np.ndarray:
        """Solve lam o x = d blockwise."""
        out = np.empty_like(d)
        l = self.cones.l
        out[:l] = d[:l] / self.lam[:l]
        for i, m in enumerate(self.cones.soc_dims):
            o = self.cones.offs[i]
            out[o:o + m] = _soc_solve(self.lam[o:o + m], d[o:o + m])
        return out

    def G_blocks(self):
        """W^{-2} as (lin vector, list of dense blocks)."""
        return 1.0 / self.w_lin ** 2, [Wi @ Wi for Wi in self.Winv_socs]

    def W2_dense(self) -> np.ndarray:
        """W^2 as a dense matrix (for the augmented Newton system)."""
        out = np.zeros((self.cones.dim, self.cones.dim))
        l = self.cones.l
        out[:l, :l] = np.diag(self.w_lin ** 2)
        for i, m in enumerate(self.cones.soc_dims):
            o = self.cones.offs[i]
            W = self.W_socs[i]
            out[o:o + m, o:o + m] = W @ W
        return out

    def apply_G(self, V: np.ndarray) -> np.ndarray:
        """W^{-2} V for matrix or vector V (dtype-preserving)."""
        g_lin, g_socs = self.G_blocks()
        out = np.array(V, copy=True)
        l = self.cones.l
        if V.ndim == 1:
            out[:l] *= g_lin
        else:
            out[:l] *= g_lin[:, None]
        for i, m in enumerate(self.cones.soc_dims):
            o = self.cones.offs[i]
            out[o:o + m] = g_socs[i] @ out[o:o + m]
        return out


# ---------------------------------------------------------------------------
# Standard-form conversion and the HSD interior-point loop.
# ---------------------------------------------------------------------------

def _to_standard_form(prog: ConicProgram):
    """Return (c, A, b, cones, n_u) for min c'x, Ax + s = b, s in K.

    x stacks the decision inputs and, when H is nonzero, the epigraph
    variable t with 0.5 ||Wq u||^2 <= 0.5 t encoded as a second-order cone.
    """
    n = prog.n_vars
    lam, V = np.linalg.eigh(prog.H)
    keep = lam > 1e-12 * max(lam.max(initial=0.0), 1.0)
    Wq = (np.sqrt(lam[keep]) * V[:, keep]).T  # H = Wq' Wq
    has_epi = Wq.shape[0] > 0
    nx = n + (1 if has_epi else 0)
    c = np.zeros(nx)
    c[:n] = prog.g
    rows_A, rows_b = [], []
    l = 0
    for a, b in prog.lin_rows:
        r = np.zeros(nx)
        r[:n] = np.asarray(a, dtype=float)
        rows_A.append(r[None, :])
        rows_b.append(np.array([b]))
        l += 1
    soc_dims = []
    if has_epi:
        c[n] = 0.5
        r = Wq.shape[0]
        A_epi = np.zeros((r + 2, nx))
        b_epi = np.zeros(r + 2)
        A_epi[0, n] = -1.0
        b_epi[0] = 1.0            # s0 = t + 1
        A_epi[1:r + 1, :n] = -2.0 * Wq   # s_mid = 2 Wq u
        A_epi[r + 1, n] = -1.0
        b_epi[r + 1] = -1.0       # s_last = t - 1
        rows_A.append(A_epi)
        rows_b.append(b_epi)
        soc_dims.append(r + 2)
    for row in prog.soc_rows:
        m = row.cone_matrix.shape[0]
        if row.scale == 0.0 or m == 0:
            # pure linear rows must precede cones in the flat layout
            raise ValueError("zero-scale SOC rows should be linear rows")
        Ce = row.scale * row.cone_matrix
        de = row.scale * row.cone_offset
        if m > n + 2:
            # ||Ce u + de|| splits into an n-dimensional part along
            # range(Ce) plus a constant: compressing tall cone blocks keeps
            # the Newton systems small.
            Q, Rt = np.linalg.qr(Ce)
            dproj = Q.T @ de
            dperp = float(np.linalg.norm(de - Q @ dproj))
            de = np.concatenate([dproj, [dperp]])
            Ce = np.vstack([Rt, np.zeros((1, n))])
            m = Ce.shape[0]
        A_soc = np.zeros((m + 1, nx))
        b_soc = np.zeros(m + 1)
        A_soc[0, :n] = row.linear_coeff
        b_soc[0] = row.rhs - row.offset
        A_soc[1:, :n] = -Ce
        b_soc[1:] = de
        rows_A.append(A_soc)
        rows_b.append(b_soc)
        soc_dims.append(m + 1)
    if not rows_A:
        # Unconstrained: trivial nonneg slack keeps the embedding well posed.
        rows_A.append(np.zeros((1, nx)))
        rows_b.append(np.array([1.0]))
        l += 1
    A = np.vstack(rows_A)
    b = np.concatenate(rows_b)
    return c, A, b, _Cones(l, soc_dims), n


def solve(prog: ConicProgram, tol: float = 1e-8, max_iter: int = 100) -> Solution:
    """Homogeneous self-dual interior-point solve of a ConicProgram."""
    t_start = time.perf_counter()
    c, A, b, cones, n_u = _to_standard_form(prog)
    nx = A.shape[1]
    e = cones.identity()
    x = np.zeros(nx)
    s = e.copy()
    z = e.copy()
    tau, kappa = 1.0, 1.0
    norm_b = max(1.0, np.linalg.norm(b))
    norm_c = max(1.0, np.linalg.norm(c))
    status = "MaxIterations"
    res = {}
    it = 0
    best = (np.inf, x / tau, res)
    force_augmented = False
    for it in range(1, max_iter + 1):
        r_d = A.T @ z + c * tau
        r_p = A @ x + s - b * tau
        r_g = kappa + c @ x + b @ z
        mu = (s @ z + tau * kappa) / (cones.degree + 1)

        # Termination checks on the de-homogenized iterate.
        xh = x / tau
        sh = s / tau
        zh = z / tau
        pres = np.linalg.norm(A @ xh + sh - b) / norm_b
        dres = np.linalg.norm(A.T @ zh + c) / norm_c
        pcost = c @ xh
        dcost = -b @ zh
        relgap = abs(pcost - dcost) / max(1.0, abs(pcost), abs(dcost))
        res = {"primal": float(pres), "dual": float(dres), "gap": float(relgap)}
        score = max(pres, dres, relgap)
        if score < best[0]:
            best = (score, xh.copy(), res)
        if score <= tol:
            status = "Optimal"
            break
        # Numerical breakdown: the iterate has degraded far past the best one
        # seen, so further Newton steps are noise. Return the best iterate.
        if score > 1e4 * best[0] and best[0] < 1e-4:
            status = "Optimal" if best[0] <= tol else "MaxIterations"
            res = best[2]
            x, tau = best[1], 1.0
            break
        # Infeasibility certificate: z in K*, A'z ~ 0, b'z < 0.
        if b @ z < -tol and tau < 1e-8 * max(1.0, kappa):
            zc = z / (-(b @ z))
            cert = np.linalg.norm(A.T @ zc)
            if cert <= np.sqrt(tol):
                status = "PrimalInfeasible"
                res["certificate"] = float(cert)
                break

        scal = _Scaling(cones, s, z)
        lam = scal.lam

        # Elimination strategy: the reduced (n+1) system is cheapest but its
        # normal-equations conditioning (~1/mu^2) exhausts double precision
        # near convergence, so the endgame switches to the sparser-information
        # augmented system in (dx, dz, dtau), which keeps W^2 unsquared.
        m = A.shape[0]
        augmented = force_augmented or score < 1e-5
        if augmented:
            aug = np.zeros((nx + m + 1, nx + m + 1))
            aug[:nx, nx:nx + m] = A.T
            aug[:nx, -1] = c
            aug[nx:nx + m, :nx] = A
            aug[nx:nx + m, nx:nx + m] = -scal.W2_dense()
            aug[nx:nx + m, -1] = -b
            aug[-1, :nx] = c
            aug[-1, nx:nx + m] = b
            aug[-1, -1] = -kappa / tau
            factor = lu_factor(aug)
        else:
            GA = scal.apply_G(A)
            Gb = scal.apply_G(b)
            AGb = A.T @ Gb
            kkt = np.zeros((nx + 1, nx + 1))
            kkt[:nx, :nx] = A.T @ GA
            kkt[:nx, nx] = c - AGb
            kkt[nx, :nx] = c + AGb
            kkt[nx, nx] = -(b @ Gb + kappa / tau)
            kkt[:nx, :nx] += (1e-13 * max(1.0, np.abs(kkt[:nx, :nx]).max())
                              * np.eye(nx))
            factor = lu_factor(kkt)

        def solve_once(rhs1, rhs2, rhs3, ds_rhs, dk_rhs):
            ds_tilde = scal.lam_solve(ds_rhs)
            Wdst = scal.apply_W(ds_tilde)
            if augmented:
                rhs = np.concatenate([rhs1, rhs2 - Wdst,
                                      [rhs3 - dk_rhs / tau]])
                sol = lu_solve(factor, rhs)
                dx, dz, dtau = sol[:nx], sol[nx:nx + m], sol[-1]
                dsv = Wdst - scal.apply_W(scal.apply_W(dz))
            else:
                v = Wdst - rhs2
                h1 = rhs1 - A.T @ scal.apply_G(v)
                h2 = rhs3 - dk_rhs / tau - b @ scal.apply_G(v)
                sol = lu_solve(factor, np.concatenate([h1, [h2]]))
                dx, dtau = sol[:nx], sol[nx]
                dz = scal.apply_G(A @ dx - b * dtau + v)
                dsv = scal.apply_W(ds_tilde - scal.apply_W(dz))
            dkappa = (dk_rhs - kappa * dtau) / tau
            return [dx, dz, dsv, dtau, dkappa]

        def residuals_of(d, rhs):
            dx, dz, dsv, dtau, dkappa = d
            e1 = rhs[0] - (A.T @ dz + c * dtau)
            e2 = rhs[1] - (A @ dx + dsv - b * dtau)
            e3 = rhs[2] - (c @ dx + b @ dz + dkappa)
            e4 = rhs[3] - scal.lam_prod(lam, scal.apply_W(dz)
                                        + scal.apply_Winv(dsv))
            e5 = rhs[4] - (tau * dkappa + kappa * dtau)
            err = max(np.abs(e1).max(initial=0), np.abs(e2).max(initial=0),
                      abs(e3), np.abs(e4).max(initial=0), abs(e5))
            return (e1, e2, e3, np.asarray(e4), e5), err

        def solve_dirs(ds_rhs, dkappa_rhs):
            """Newton direction with iterative refinement against the
            unreduced optimality system. One LU solve per pass; passes
            that stop improving are reverted."""
            rhs = (-r_d, -r_p, -r_g, ds_rhs, dkappa_rhs)
            d = solve_once(*rhs)
            eq_res, err = residuals_of(d, rhs)
            for _ in range(15):
                if err < 1e-13 * (1.0 + mu):
                    break
                trial = [di + ci for di, ci in zip(d, solve_once(*eq_res))]
                eq_trial, err_trial = residuals_of(trial, rhs)
                if err_trial >= err:
                    break
                d, eq_res, err = trial, eq_trial, err_trial
            return d

        # Predictor (affine) direction.
        dxa, dza, dsa, dtaua, dkappaa = solve_dirs(-scal.lam_prod(lam, lam),
                                                   -tau * kappa)
        alpha_aff = min(cones.step_to_boundary(s, dsa),
                        cones.step_to_boundary(z, dza),
                        np.inf if dtaua >= 0 else -tau / dtaua,
                        np.inf if dkappaa >= 0 else -kappa / dkappaa)
        alpha_aff = min(1.0, alpha_aff)
        sigma = min(1.0, max(0.0, (1.0 - alpha_aff)) ** 3)

        # Corrector direction.
        corr = scal.lam_prod(scal.apply_Winv(dsa), scal.apply_W(dza))
        ds_rhs = -scal.lam_prod(lam, lam) - corr + sigma * mu * e
        dk_rhs = -tau * kappa - dtaua * dkappaa + sigma * mu
        dx, dz, ds, dtau, dkappa = solve_dirs(ds_rhs, dk_rhs)

        alpha = min(cones.step_to_boundary(s, ds),
                    cones.step_to_boundary(z, dz),
                    np.inf if dtau >= 0 else -tau / dtau,
                    np.inf if dkappa >= 0 else -kappa / dkappa)
        alpha = min(1.0, 0.99 * alpha)
        if not np.isfinite(alpha) or alpha <= 0:
            break
        # In exact arithmetic the embedding's residuals contract by (1-alpha);
        # a step that instead grows them signals a corrupted direction, so
        # backtrack and, failing that, stop.
        r_norm = np.linalg.norm(np.concatenate([r_d, r_p, [r_g]]))
        ok = False
        for _ in range(6):
            xn = x + alpha * dx
            zn = z + alpha * dz
            sn = s + alpha * ds
            taun = tau + alpha * dtau
            kapn = kappa + alpha * dkappa
            rn = np.linalg.norm(np.concatenate(
                [A.T @ zn + c * taun, A @ xn + sn - b * taun,
                 [kapn + c @ xn + b @ zn]]))
            if rn <= (1.0 - 0.5 * alpha) * r_norm + 1e-10:
                ok = True
                break
            alpha *= 0.5
        if not ok:
            # Corrupted direction from the cheap reduced system: redo the
            # iteration on the better-conditioned augmented system.
            if not augmented:
                force_augmented = True
                continue
            break
        x, z, s, tau, kappa = xn, zn, sn, taun, kapn

    if status == "MaxIterations" and np.isfinite(best[0]):
        x, tau = best[1], 1.0
        res = best[2]
    u = x[:n_u] / tau if tau > 0 else x[:n_u]
    return Solution(status=status, u_star=u, objective=prog.objective(u),
                    kkt_residuals=res, iterations=it,
                    wall_time=time.perf_counter() - t_start)


# ---------------------------------------------------------------------------
# Assembly of the predictive-control programs.
# ---------------------------------------------------------------------------

def exact_predictors(model: StateSpaceModel, L: np.ndarray, N: int
                     ) -> dict[int, MultiStepPredictor]:
    """Zero-uncertainty predictors built from known system matrices."""
    from .msp import vec
    preds = {}
    for k in range(1, N + 1):
        msm = multi_step_from_model(model, L, k)
        theta = vec(np.hstack([msm.G0, msm.Gu]))
        preds[k] = MultiStepPredictor(
            k=k, theta_hat=theta, Sigma_theta=np.zeros((theta.size, theta.size)),
            G0_hat=msm.G0, Gu_hat=msm.Gu, Gw_hat=msm.Gw, R_hat=model.R)
    return preds


def assemble(msps: dict[int, MultiStepPredictor],
             constraints: list[HalfspaceConstraint],
             init: GaussianBelief, spec: ChanceSpec,
             cost: tuple[np.ndarray, np.ndarray],
             input_box: float | None, method: str,
             mc_samples: int = 100_000, seed: int = 0) -> ConicProgram:
    """Build the finite-horizon control program for one tightening method.

    Objective: sum_k ||yhat_{k}||^2_Qc + ||u_{k-1}||^2_Rc over k = 1..N with
    yhat_k from the per-horizon predictors; input box |u_t| <= input_box.
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    N = max(msps)
    if set(msps) != set(range(1, N + 1)):
        missing = sorted(set(range(1, N + 1)) - set(msps))
        raise ValueError(f"missing predictors for horizons {missing}")
    p0 = msps[1]
    n_y, n_x = p0.G0_hat.shape
    n_u = p0.Gu_hat.shape[1]
    n_vars = N * n_u
    Qc, Rc = np.atleast_2d(cost[0]), np.atleast_2d(cost[1])

    S0 = np.zeros((N * n_y, n_x))
    Su = np.zeros((N * n_y, n_vars))
    for k in range(1, N + 1):
        S0[(k - 1) * n_y:k * n_y] = msps[k].G0_hat
        Su[(k - 1) * n_y:k * n_y, :k * n_u] = msps[k].Gu_hat
    Qbar = np.kron(np.eye(N), Qc)
    Rbar = np.kron(np.eye(N), Rc)
    y0 = S0 @ init.mean
    H = 2.0 * (Su.T @ Qbar @ Su + Rbar)
    g = 2.0 * Su.T @ Qbar @ y0
    const = float(y0 @ Qbar @ y0)

    lin_rows = []
    soc_rows = []
    if input_box is not None and np.isfinite(input_box):
        for i in range(n_vars):
            a = np.zeros(n_vars)
            a[i] = 1.0
            lin_rows.append((a.copy(), float(input_box)))
            lin_rows.append((-a, float(input_box)))
    for k in range(1, N + 1):
        msp = msps[k]
        for j, hc in enumerate(constraints):
            if method == "nominal":
                h = hc.h
                var = float(h @ (msp.G0_hat @ init.cov @ msp.G0_hat.T
                                 + msp.Gw_hat @ msp.Gw_hat.T + msp.R_hat) @ h)
                a = np.zeros(n_vars)
                a[:k * n_u] = h @ msp.Gu_hat
                rhs = 1.0 - spec.c_p * np.sqrt(var) - float(h @ msp.G0_hat @ init.mean)
                lin_rows.append((a, rhs))
            elif method == "proposed":
                soc_rows.append(build_rows_proposed(
                    msp, hc, init, spec, n_vars=n_vars, mc_samples=mc_samples,
                    seed=seed * 1_000_003 + k * 101 + j))
            else:
                soc_rows.append(build_rows_ellipsoidal(
                    msp, hc, init, spec, n_vars=n_vars))
    return ConicProgram(n_vars=n_vars, H=H, g=g, lin_rows=tuple(lin_rows),
                        soc_rows=tuple(soc_rows), const=const)


def solve_nominal_exact(model: StateSpaceModel, L: np.ndarray, N: int,
                        constraints: list[HalfspaceConstraint],
                        init: GaussianBelief, spec: ChanceSpec,
                        cost: tuple[np.ndarray, np.ndarray],
                        input_box: float | None, tol: float = 1e-8,
                        max_iter: int = 100) -> Solution:
    """Assemble and solve the exact-model baseline problem."""
    preds = exact_predictors(model, L, N)
    prog = assemble(preds, constraints, init, spec, cost, input_box, "nominal")
    return solve(prog, tol=tol, max_iter=max_iter)
