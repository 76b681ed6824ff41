"""Shared fixtures for the triage test suite."""

import numpy as np
import pytest

from src.config import DataSource, ExperimentConfig
from src.core.mlp import TrainConfig
from src.data import SynthConfig, synth_generate


@pytest.fixture
def small_train_config():
    """A network small enough to train in milliseconds."""
    return TrainConfig(hidden=6, epochs=15, learning_rate=0.01, minibatch_size=16, seed=0)


@pytest.fixture
def synthetic_dataset():
    """300 synthetic plans with a 15% unsafe rate."""
    return synth_generate(SynthConfig(n=300, unsafe_rate=0.15, seed=3))


@pytest.fixture
def linear_data():
    """Noiseless y = 2x on [-1, 1], split into train and held-out halves."""
    rng = np.random.default_rng(42)
    X = rng.uniform(-1.0, 1.0, size=(400, 1))
    y = 2.0 * X[:, 0]
    return X[:200], y[:200], X[200:], y[200:]


@pytest.fixture
def tiny_experiment(tmp_path):
    """Fast end-to-end experiment configuration."""
    return ExperimentConfig(
        name='tiny',
        data=DataSource(synthetic=SynthConfig(n=200, unsafe_rate=0.15, seed=3)),
        ensemble_size=2,
        repeats=2,
        hidden=4,
        epochs=5,
        learning_rate=0.01,
        output_dir=str(tmp_path / 'output'),
    )
