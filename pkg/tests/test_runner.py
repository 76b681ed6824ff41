"""End-to-end tests of the experiment runner and report merging."""

import json
import os

import pandas as pd
import pytest

from src.config import DataSource
from src.core.exporter import METRICS_CSV_COLUMNS, TABLE_COLUMNS
from src.data import SynthConfig
from src.experiments import ExperimentRunner, build_report, load_artifact, merge_tables
from src.experiments import runner as runner_module
from src.utils.errors import EmptyInputError, ExportError, IncompatibleArtifactsError, TriageError


def _read(path):
    with open(path, 'rb') as f:
        return f.read()


@pytest.fixture
def finished_run(tiny_experiment, tmp_path):
    run_dir = str(tmp_path / 'run')
    artifact = ExperimentRunner(tiny_experiment, run_dir=run_dir).run()
    return artifact, run_dir


class TestExperimentRunner:

    def test_writes_expected_files(self, finished_run, tiny_experiment):
        _, run_dir = finished_run
        files = set(os.listdir(run_dir))
        for method in tiny_experiment.methods:
            assert f'metrics_{method}.csv' in files
        assert {'aggregate.csv', 'table_prospective.txt', 'table_retrospective.txt',
                'timings.csv', 'run_artifact.json'} <= files

    def test_metrics_csv_layout(self, finished_run):
        _, run_dir = finished_run
        frame = pd.read_csv(os.path.join(run_dir, 'metrics_cp.csv'))
        assert list(frame.columns) == METRICS_CSV_COLUMNS
        # two repeats, two threshold modes each
        assert len(frame) == 4
        assert set(frame['mode']) == {'prospective', 'retrospective'}
        assert frame['coverage'].between(0, 1).all()

    def test_base_model_reports_na_interval_metrics(self, finished_run):
        artifact, run_dir = finished_run
        assert artifact.aggregates['base']['prospective'].means['coverage'] is None
        table = open(os.path.join(run_dir, 'table_prospective.txt'), encoding='utf-8').read()
        base_row = next(line for line in table.splitlines() if line.strip().startswith('Base Model'))
        assert 'NA' in base_row

    def test_table_lists_methods_in_order(self, finished_run):
        _, run_dir = finished_run
        table = open(os.path.join(run_dir, 'table_prospective.txt'), encoding='utf-8').read()
        assert table.startswith('alpha=0.1 safety_threshold=95\n')
        rows = [line.strip() for line in table.splitlines()]
        labels = ('Base Model', 'CP', 'CQR', 'CRC', 'CT', 'TA-CRC')
        positions = [next(i for i, row in enumerate(rows) if row.startswith(label + ' ')) for label in labels]
        assert positions == sorted(positions)
        assert all(column in table for column in TABLE_COLUMNS[1:])

    def test_artifact_records_seeds(self, finished_run):
        _, run_dir = finished_run
        artifact = load_artifact(run_dir)
        assert artifact['seeds'] == {'master_seed': 0, 'repeat_seeds': [0, 1], 'member_seeds': [0, 1]}
        assert [r['seed'] for r in artifact['repeats']] == [0, 1]
        assert artifact['failures'] == []

    def test_identical_configs_give_identical_metrics(self, tiny_experiment, tmp_path):
        first = str(tmp_path / 'first')
        second = str(tmp_path / 'second')
        ExperimentRunner(tiny_experiment, run_dir=first).run()
        ExperimentRunner(tiny_experiment, run_dir=second).run()
        for method in tiny_experiment.methods:
            name = f'metrics_{method}.csv'
            assert _read(os.path.join(first, name)) == _read(os.path.join(second, name))

    def test_thread_count_does_not_change_results(self, tiny_experiment, tmp_path):
        config = tiny_experiment.with_overrides(methods=('cp', 'crc', 'ct'))
        single = str(tmp_path / 'single')
        threaded = str(tmp_path / 'threaded')
        ExperimentRunner(config, run_dir=single).run()
        ExperimentRunner(config.with_overrides(max_workers=2), run_dir=threaded).run()
        for method in config.methods:
            name = f'metrics_{method}.csv'
            assert _read(os.path.join(single, name)) == _read(os.path.join(threaded, name))

    def test_failed_repeat_is_recorded(self, tiny_experiment, tmp_path, monkeypatch):
        original = runner_module.prepare_splits

        def failing(config, dataset, seed, *args, **kwargs):
            if seed == 1:
                raise EmptyInputError("forced failure")
            return original(config, dataset, seed, *args, **kwargs)

        monkeypatch.setattr(runner_module, 'prepare_splits', failing)
        artifact = ExperimentRunner(tiny_experiment.with_overrides(methods=('cp',)),
                                    run_dir=str(tmp_path / 'run')).run()
        assert [o.repeat for o in artifact.outcomes] == [0]
        assert len(artifact.failures) == 1
        assert artifact.failures[0]['repeat'] == 1
        assert artifact.failures[0]['error'].startswith('error=EmptyInputError')
        assert artifact.aggregates['cp']['prospective'].std_undefined

    def test_all_repeats_failing_raises(self, tiny_experiment, tmp_path, monkeypatch):
        def failing(*args, **kwargs):
            raise EmptyInputError("forced failure")

        monkeypatch.setattr(runner_module, 'prepare_splits', failing)
        with pytest.raises(TriageError):
            ExperimentRunner(tiny_experiment, run_dir=str(tmp_path / 'run')).run()

    def test_distribution_shift_tests_on_second_population(self, tiny_experiment, tmp_path):
        config = tiny_experiment.with_overrides(
            methods=('cp', 'crc'),
            data=DataSource(synthetic=SynthConfig(n=200, unsafe_rate=0.15, seed=3, weights_seed=50)),
            test_data=DataSource(synthetic=SynthConfig(n=80, unsafe_rate=0.2, seed=4, weights_seed=50,
                                                       covariate_shift=0.25)),
        )
        artifact = ExperimentRunner(config, run_dir=str(tmp_path / 'shift')).run()
        for outcome in artifact.outcomes:
            assert outcome.metrics['cp']['prospective'].n_test == 80

    def test_pooled_feature_selection(self, tiny_experiment, tmp_path):
        config = tiny_experiment.with_overrides(methods=('cp',), feature_selection_scope='all')
        artifact = ExperimentRunner(config, run_dir=str(tmp_path / 'pooled')).run()
        assert artifact.outcomes[0].features == artifact.outcomes[1].features

    def test_artifact_written_before_workbook(self, tiny_experiment, tmp_path):
        run_dir = tmp_path / 'run'
        (run_dir / 'comparison.xlsx').mkdir(parents=True)
        with pytest.raises(ExportError):
            ExperimentRunner(tiny_experiment.with_overrides(methods=('cp',)), run_dir=str(run_dir)).run()
        assert load_artifact(str(run_dir))['failures'] == []

    def test_retrospective_threshold_recorded(self, finished_run):
        artifact, _ = finished_run
        for outcome in artifact.outcomes:
            assert outcome.metrics['cp']['prospective'].threshold_used == 95.0
            retrospective = outcome.metrics['cp']['retrospective']
            assert retrospective.sensitivity >= outcome.metrics['cp']['prospective'].sensitivity


class TestReport:

    def test_single_artifact_reproduces_run_table(self, finished_run, tmp_path):
        _, run_dir = finished_run
        report_dir = str(tmp_path / 'report')
        build_report([run_dir], report_dir)
        for mode in ('prospective', 'retrospective'):
            name = f'table_{mode}.txt'
            assert _read(os.path.join(report_dir, name)) == _read(os.path.join(run_dir, name))

    def test_two_artifacts_double_rows(self, finished_run):
        _, run_dir = finished_run
        artifact = load_artifact(run_dir)
        other = json.loads(json.dumps(artifact))
        other['config']['name'] = 'other'
        tables, header = merge_tables([artifact, other])
        assert len(tables['prospective']) == 2 * len(artifact['aggregates'])
        assert tables['prospective']['Method'].iloc[0] == 'Base Model [tiny]'
        assert tables['prospective']['Method'].iloc[1] == 'Base Model [other]'
        assert header == 'alpha=0.1 safety_threshold=95'

    def test_alpha_mismatch_rejected(self, finished_run):
        _, run_dir = finished_run
        artifact = load_artifact(run_dir)
        other = json.loads(json.dumps(artifact))
        other['config']['alpha'] = 0.2
        with pytest.raises(IncompatibleArtifactsError):
            merge_tables([artifact, other])

    def test_no_artifacts(self):
        with pytest.raises(EmptyInputError):
            merge_tables([])

    def test_not_an_artifact(self, tmp_path):
        path = tmp_path / 'bogus.json'
        path.write_text('{"foo": 1}', encoding='utf-8')
        with pytest.raises(IncompatibleArtifactsError):
            load_artifact(str(path))
