"""Independent reference implementations used as test oracles.

Everything in this module is deliberately written with different methods
than the library: the conic reference solver is a first-order dual method
(the library uses an interior-point method), the filter oracle is the full
time-varying recursion (the library uses the stationary gain), and the
trust-region oracle is randomized search plus projected gradient ascent
(the library solves the secular equation).
"""
from __future__ import annotations

import numpy as np

from mspc.socp import ConicProgram
from mspc.tightening import SocRow


# ---------------------------------------------------------------------------
# First-order conic reference solver with a certified duality gap.
# ---------------------------------------------------------------------------

def _soc_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {(y, w): ||w|| <= y}."""
    y, w = v[0], v[1:]
    nw = np.linalg.norm(w)
    if nw <= y:
        return v
    if nw <= -y:
        return np.zeros_like(v)
    a = 0.5 * (y + nw)
    out = np.empty_like(v)
    out[0] = a
    out[1:] = a * w / nw if nw > 0 else 0.0
    return out


def reference_solve(prog: ConicProgram, u_anchor: np.ndarray,
                    max_iter: int = 200_000, gap_tol: float = 1e-10
                    ) -> tuple[float, float]:
    """High-accuracy objective reference for a strictly feasible program.

    Method: the Lagrange dual of the row form is a concave quadratic over a
    product of nonnegative and second-order cones (the inner minimization
    over u is closed-form since H is positive definite). That dual is
    maximized by accelerated projected gradient with restarts; every dual
    value is a valid lower bound, and the primal candidate is repaired to
    feasibility by shrinking toward the strictly feasible anchor, giving a
    valid upper bound. Returns (upper bound, certified duality gap).
    """
    n = prog.n_vars
    Hinv = np.linalg.inv(prog.H)
    rows_G, h, blocks = [], [], []
    pos = 0
    for a, b in prog.lin_rows:
        rows_G.append(np.asarray(a, float)[None, :])
        h.append(np.array([b]))
        blocks.append(("lin", pos, 1))
        pos += 1
    for row in prog.soc_rows:
        m = row.cone_matrix.shape[0]
        blk = np.vstack([row.linear_coeff[None, :],
                         row.scale * row.cone_matrix])
        rows_G.append(blk)
        h.append(np.concatenate([[row.rhs - row.offset],
                                 -row.scale * row.cone_offset]))
        blocks.append(("soc", pos, m + 1))
        pos += m + 1
    G = np.vstack(rows_G)
    h = np.concatenate(h)
    GHG = G @ Hinv @ G.T
    L = np.linalg.eigvalsh(0.5 * (GHG + GHG.T)).max() + 1e-12

    def project(v):
        out = v.copy()
        for kind, o, m in blocks:
            if kind == "lin":
                out[o] = max(out[o], 0.0)
            else:
                out[o:o + m] = _soc_project(out[o:o + m])
        return out

    def qval(z):
        v = prog.g + G.T @ z
        return -0.5 * v @ Hinv @ v - z @ h + prog.const

    def upper(u):
        if prog.max_violation(u) <= 0:
            return prog.objective(u)
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if prog.max_violation(u + mid * (u_anchor - u)) > 0:
                lo = mid
            else:
                hi = mid
        return prog.objective(u + hi * (u_anchor - u))

    z = np.zeros(G.shape[0])
    zy = z.copy()
    t_acc = 1.0
    best = upper(u_anchor)
    gap = np.inf
    for it in range(max_iter):
        u = -Hinv @ (prog.g + G.T @ zy)
        grad = G @ u - h
        z_new = project(zy + grad / L)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t_acc ** 2))
        zy = z_new + (t_acc - 1) / t_new * (z_new - z)
        if qval(z_new) < qval(z):
            zy, t_new = z_new, 1.0
        z, t_acc = z_new, t_new
        if it % 50 == 0 or it == max_iter - 1:
            best = min(best, upper(-Hinv @ (prog.g + G.T @ z)))
            gap = best - qval(z)
            if gap <= gap_tol * max(1.0, abs(best)):
                break
    return best, gap


def random_feasible_program(seed: int, n_max: int = 30, cones_max: int = 40
                            ) -> tuple[ConicProgram, np.ndarray]:
    """Random strictly feasible SOCP and a strictly feasible anchor point."""
    g_ = np.random.default_rng(seed)
    n = int(g_.integers(2, n_max + 1))
    F = g_.standard_normal((n, n))
    H = F.T @ F + np.eye(n)
    g = g_.standard_normal(n)
    u0 = g_.standard_normal(n) * 0.5
    lin = []
    for _ in range(int(g_.integers(1, 6))):
        a = g_.standard_normal(n)
        lin.append((a, float(a @ u0 + abs(g_.standard_normal()) + 0.1)))
    socs = []
    for _ in range(int(g_.integers(1, cones_max + 1))):
        m = int(g_.integers(1, 5))
        Cm = g_.standard_normal((m, n))
        d = g_.standard_normal(m)
        lc = g_.standard_normal(n)
        off = float(g_.standard_normal())
        sc = float(abs(g_.standard_normal()) + 0.2)
        lhs0 = off + lc @ u0 + sc * np.linalg.norm(Cm @ u0 + d)
        rhs = lhs0 + abs(g_.standard_normal()) + 0.1
        socs.append(SocRow(linear_coeff=lc, offset=off, cone_matrix=Cm,
                           cone_offset=d, scale=sc, rhs=rhs))
    return ConicProgram(n_vars=n, H=H, g=g, lin_rows=tuple(lin),
                        soc_rows=tuple(socs)), u0


# ---------------------------------------------------------------------------
# Trust-region brute-force oracle.
# ---------------------------------------------------------------------------

def trust_region_brute(M: np.ndarray, theta_hat: np.ndarray,
                       Sigma: np.ndarray, radius: float, seed: int,
                       n_random: int = 100_000) -> tuple[float, float]:
    """Randomized lower bound and refined estimate of the ball maximum.

    Transforms to z-coordinates (theta = theta_hat + F z, F F' = Sigma;
    the value is c0 + 2 b'z + z'Az over ||z|| <= radius), samples random
    boundary points, then refines the best candidates with projected
    gradient ascent. Returns (best random-point value, refined value).
    """
    F = np.linalg.cholesky(Sigma)
    A = F.T @ M @ F
    A = 0.5 * (A + A.T)
    b = F.T @ (M @ theta_hat)
    c0 = float(theta_hat @ M @ theta_hat)
    n = b.size

    def val(z):
        return c0 + 2.0 * b @ z + z @ A @ z

    gen = np.random.default_rng(seed)
    Z = gen.standard_normal((n_random, n))
    Z *= radius / np.linalg.norm(Z, axis=1, keepdims=True)
    vals = c0 + 2.0 * Z @ b + np.einsum("ij,jk,ik->i", Z, A, Z)
    order = np.argsort(vals)
    best_random = float(vals[order[-1]])

    lam, V = np.linalg.eigh(A)
    starts = [Z[i] for i in order[-10:]]
    starts += [radius * V[:, -1], -radius * V[:, -1]]
    best = best_random
    for z in starts:
        z = z.copy()
        step = 0.5 * radius / max(np.abs(lam).max(), np.linalg.norm(b), 1e-12)
        v = val(z)
        for _ in range(3000):
            zn = z + step * 2.0 * (A @ z + b)
            nz = np.linalg.norm(zn)
            if nz > radius:
                zn *= radius / nz
            vn = val(zn)
            if vn <= v + 1e-18 * max(1.0, abs(v)):
                step *= 0.5
                if step < 1e-14 * radius:
                    break
                continue
            z, v = zn, vn
        best = max(best, v)
    return best_random, float(best)


# ---------------------------------------------------------------------------
# Time-varying Kalman filter oracle.
# ---------------------------------------------------------------------------

def time_varying_filter(model, traj, init) -> np.ndarray:
    """Posterior means x_{t|t} from the exact time-varying recursion."""
    A, B, C, R = model.A, model.B, model.C, model.R
    Q = model.E @ model.E.T
    x = init.mean.copy()
    P = init.cov.copy()
    out = np.empty((traj.T, model.n_x))
    for t in range(traj.T):
        x = A @ x + B @ traj.U[t]
        P = A @ P @ A.T + Q
        S = C @ P @ C.T + R
        K = np.linalg.solve(S, C @ P).T
        x = x + K @ (traj.Y[t] - C @ x)
        P = P - K @ C @ P
        out[t] = x
    return out
