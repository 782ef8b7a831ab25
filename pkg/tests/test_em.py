"""Tests for EM state-space identification from a single I/O trajectory."""

import numpy as np
import pytest

from mspc.em import EMConfig, em_identify, em_refine, markov_params
from mspc.harness import ExperimentConfig
from mspc.model import (
    StateSpaceModel,
    observer_canonical_structure,
    simulate,
)
from mspc.util import rng


def _training_data(cfg: ExperimentConfig, seed: int, T: int):
    true = cfg.true_model()
    U = rng(seed, 5).normal(0.0, cfg.excitation_std, size=(T, 1))
    return true, simulate(true, np.zeros(true.n_x), U, seed=seed)


def _markov_err(model: StateSpaceModel, true: StateSpaceModel, n: int = 20):
    """Relative Frobenius error over the first n Markov parameters."""
    mh = markov_params(model, n)
    mt = markov_params(true, n)
    return np.linalg.norm(mh - mt) / np.linalg.norm(mt)


class TestWarmStart:
    def test_loglik_monotone_and_markov_stable(self, cfg):
        true, traj = _training_data(cfg, seed=11, T=1000)
        em_cfg = EMConfig(n_x=cfg.n_x, max_iters=50, seed=11,
                          R_pattern=np.eye(cfg.n_masses))
        model, trace = em_refine(traj, em_cfg, true)
        # EM from an exact-structure start: likelihood never decreases and
        # the input-output map it describes barely moves.
        assert len(trace) >= 1
        diffs = np.diff(trace)
        assert np.all(diffs >= -1e-7 * (1.0 + np.abs(trace[:-1])))
        assert _markov_err(model, true) <= 0.05


class TestColdStart:
    def test_markov_error_small_at_t1000(self, cfg):
        # Single noisy trajectory of length 1000 recovers the I/O map to
        # within 0.15 relative error on the first 20 Markov parameters.
        true, traj = _training_data(cfg, seed=0, T=1000)
        em_cfg = EMConfig(n_x=cfg.n_x, max_iters=cfg.em_max_iters,
                          loglik_tol=cfg.em_tol, seed=0,
                          R_pattern=np.eye(cfg.n_masses))
        model, trace = em_identify(traj, em_cfg)
        assert np.all(np.diff(trace) >= -1e-7 * (1.0 + np.abs(trace[:-1])))
        assert _markov_err(model, true) <= 0.15

    def test_consistency_in_sample_size(self, cfg):
        # More data lowers the Markov-parameter error on average.
        errs = {T: [] for T in (1000, 4000)}
        for seed in (1, 2, 3):
            for T in errs:
                true, traj = _training_data(cfg, seed=seed, T=T)
                em_cfg = EMConfig(n_x=cfg.n_x, max_iters=cfg.em_max_iters,
                                  loglik_tol=cfg.em_tol, seed=seed,
                                  R_pattern=np.eye(cfg.n_masses))
                model, _ = em_identify(traj, em_cfg)
                errs[T].append(_markov_err(model, true))
        assert np.mean(errs[4000]) < np.mean(errs[1000])

    def test_noise_scales_positive(self, cfg):
        true, traj = _training_data(cfg, seed=4, T=1000)
        em_cfg = EMConfig(n_x=cfg.n_x, max_iters=60, seed=4,
                          R_pattern=np.eye(cfg.n_masses))
        model, _ = em_identify(traj, em_cfg)
        # Structured noise: E = sqrt(q) * I, R = r * I with q, r > 0.
        q = np.trace(model.E @ model.E.T) / model.n_x
        r = np.trace(model.R) / model.n_y
        assert q > 0 and r > 0
        assert np.allclose(model.E @ model.E.T, q * np.eye(model.n_x),
                           atol=1e-12 * max(q, 1.0))
        assert np.allclose(model.R, r * np.eye(model.n_y),
                           atol=1e-12 * max(r, 1.0))


class TestCanonicalMode:
    def test_structure_enforced(self, cfg):
        true, traj = _training_data(cfg, seed=5, T=1000)
        em_cfg = EMConfig(n_x=cfg.n_x, max_iters=60, seed=5,
                          R_pattern=np.eye(cfg.n_masses), canonical=True)
        model, _ = em_identify(traj, em_cfg)
        n_x, n_y = model.n_x, model.n_y
        A_fixed, A_free = observer_canonical_structure(n_x, n_y)
        assert np.allclose(model.C,
                           np.hstack([np.eye(n_y), np.zeros((n_y, n_x - n_y))]),
                           atol=1e-10)
        assert np.allclose(np.where(A_free, 0.0, model.A), A_fixed, atol=1e-8)
        # And the canonical fit still recovers the I/O map.
        assert _markov_err(model, true) <= 0.2


class TestValidation:
    def test_short_trajectory_rejected(self, cfg):
        true, traj = _training_data(cfg, seed=6, T=40)
        em_cfg = EMConfig(n_x=cfg.n_x, R_pattern=np.eye(cfg.n_masses))
        with pytest.raises(ValueError):
            em_identify(traj, em_cfg)

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            EMConfig(n_x=6, max_iters=0)
        with pytest.raises(ValueError):
            EMConfig(n_x=6, loglik_tol=0.0)
