"""Relative behaviour of the methods on a pooled population with 5% unsafe plans."""

import numpy as np
import pytest

from src.config import DataSource, ExperimentConfig
from src.data import SynthConfig
from src.experiments import ExperimentRunner
from src.experiments.runner import mean_detail


SEEDS = range(10)


@pytest.fixture(scope='module')
def pooled_runs(tmp_path_factory):
    output_dir = str(tmp_path_factory.mktemp('ordering'))
    runs = []
    for seed in SEEDS:
        config = ExperimentConfig(
            name=f'ordering_{seed}',
            data=DataSource(synthetic=SynthConfig(n=2000, unsafe_rate=0.05, seed=seed)),
            methods=('base', 'cp', 'crc', 'ta_crc'),
            ensemble_size=1,
            repeats=1,
            hidden=20,
            epochs=100,
            feature_selection=False,
            master_seed=seed,
            output_dir=output_dir,
        )
        runs.append(ExperimentRunner(config).run())
    return runs


@pytest.mark.slow
class TestPooledLowUnsafeRate:

    def test_risk_controlled_methods_select_zero_width(self, pooled_runs):
        # the unsafe fraction of the validation split already meets the risk budget at lambda = 0
        for artifact in pooled_runs:
            assert mean_detail(artifact, 'crc', 'I') == 0.0
            assert mean_detail(artifact, 'ta_crc', 'I') == 0.0

    def test_training_aware_width_below_split_conformal(self, pooled_runs):
        ta_crc = [mean_detail(artifact, 'ta_crc', 'I') for artifact in pooled_runs]
        cp = [mean_detail(artifact, 'cp', 'I') for artifact in pooled_runs]
        assert np.mean(ta_crc) < np.mean(cp)
        assert all(width > 0 for width in cp)

    def test_zero_width_crc_triages_like_the_base_model(self, pooled_runs):
        for artifact in pooled_runs:
            outcome = artifact.outcomes[0]
            base = outcome.metrics['base']['prospective']
            crc = outcome.metrics['crc']['prospective']
            assert crc.reduction_in_measurement == base.reduction_in_measurement
            assert crc.sensitivity == base.sensitivity
            assert crc.mean_interval_width == 0.0
