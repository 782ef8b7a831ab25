import sys
import pathlib

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from mspc.harness import ExperimentConfig
from mspc.kalman import dare_steady_state


@pytest.fixture(scope="session")
def cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def bench(cfg):
    """True benchmark plant."""
    return cfg.true_model()


@pytest.fixture(scope="session")
def bench_inno(bench):
    return dare_steady_state(bench)


@pytest.fixture(scope="session")
def random_model():
    """A small random stable model for invariance checks."""
    gen = np.random.default_rng(3)
    n_x, n_y, n_u = 4, 2, 1
    A = gen.standard_normal((n_x, n_x))
    A *= 0.9 / np.abs(np.linalg.eigvals(A)).max()
    from mspc.model import StateSpaceModel
    return StateSpaceModel(A=A, B=gen.standard_normal((n_x, n_u)),
                           C=gen.standard_normal((n_y, n_x)),
                           E=0.1 * gen.standard_normal((n_x, n_x)),
                           R=0.01 * np.eye(n_y))
