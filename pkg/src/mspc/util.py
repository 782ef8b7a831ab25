"""Small numeric helpers shared across the package."""
import numpy as np


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def check_psd(M: np.ndarray, name: str = "matrix", tol: float = 1e-10) -> np.ndarray:
    """Symmetrize and verify eigenvalues >= -tol."""
    M = symmetrize(np.asarray(M, dtype=float))
    if M.size:
        lam_min = np.linalg.eigvalsh(M).min()
        if lam_min < -tol:
            raise ValueError(f"{name} is not PSD (min eigenvalue {lam_min:.3e})")
    return M


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix (negative roundoff clipped)."""
    M = symmetrize(np.asarray(M, dtype=float))
    lam, V = np.linalg.eigh(M)
    lam = np.clip(lam, 0.0, None)
    return (V * np.sqrt(lam)) @ V.T


def rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, key...).

    Philox streams derived from the same seed but different keys are
    independent; identical (seed, key) gives bit-identical draws.
    """
    ss = np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
