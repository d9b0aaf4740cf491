import numpy as np
import pytest

from bornbench import ImageShape, TrainingConfig, bas_target_distribution, train


@pytest.fixture(scope="session")
def shape22():
    return ImageShape(2, 2)


@pytest.fixture(scope="session")
def target22(shape22):
    return bas_target_distribution(shape22)


@pytest.fixture(scope="session")
def trained_dc2_L2():
    """Converged reference run: d_c=2, L=2, 2048 training shots, seed 0."""
    config = TrainingConfig(
        d_c=2, n_layers=2, n_shots_train=2048, n_steps=100, alpha=0.2, seed=0
    )
    return config, train(config)


@pytest.fixture(scope="session")
def trained_dc4_L2():
    config = TrainingConfig(
        d_c=4, n_layers=2, n_shots_train=2048, n_steps=100, alpha=0.2, seed=0
    )
    return config, train(config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
