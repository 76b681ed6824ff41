"""Tests for the command-line interface."""

import logging
import os

import pytest

from main import EXIT_ERROR, EXIT_OK, EXIT_USAGE, main
from src.config import ConfigLoader
from src.data import load_csv
from src.utils.logger import LOGGER_NAME


SHIPPED_CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


@pytest.fixture(autouse=True)
def fresh_logger():
    yield
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)


@pytest.fixture
def log_dir(tmp_path):
    return str(tmp_path / 'logs')


def _read(path):
    with open(path, 'rb') as f:
        return f.read()


class TestGenData:

    def test_same_arguments_give_identical_files(self, tmp_path, log_dir):
        paths = [str(tmp_path / 'a.csv'), str(tmp_path / 'b.csv')]
        for path in paths:
            code = main(['--log-dir', log_dir, 'gen-data', '--n', '200', '--unsafe-rate', '0.1',
                         '--seed', '7', '--out', path])
            assert code == EXIT_OK
        assert _read(paths[0]) == _read(paths[1])
        assert _read(paths[0] + '.meta') == _read(paths[1] + '.meta')

        dataset = load_csv(paths[0])
        assert len(dataset) == 200
        assert len(dataset.feature_names) == 12

    def test_unreachable_rate_reports_generator_error(self, tmp_path, log_dir, capsys):
        code = main(['--log-dir', log_dir, 'gen-data', '--n', '10', '--unsafe-rate', '0.01',
                     '--out', str(tmp_path / 'x.csv')])
        assert code == EXIT_ERROR
        assert 'error=GeneratorError' in capsys.readouterr().err


class TestCheckGuarantees:

    def test_too_few_trials_is_a_precondition_error(self, tmp_path, log_dir, capsys):
        code = main(['--log-dir', log_dir, 'check-guarantees', '--method', 'cp', '--trials', '99',
                     '--output-dir', str(tmp_path)])
        assert code == EXIT_ERROR
        assert capsys.readouterr().err.startswith('error=PreconditionError')

    def test_unknown_method_is_a_usage_error(self, log_dir, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(['--log-dir', log_dir, 'check-guarantees', '--method', 'cqr'])
        assert excinfo.value.code == EXIT_USAGE
        err = capsys.readouterr().err
        assert err.startswith('error=UsageError message="argument --method')
        assert 'prog="' in err.splitlines()[0]

    def test_writes_summary(self, tmp_path, log_dir, capsys):
        code = main(['--log-dir', log_dir, 'check-guarantees', '--method', 'cp', '--trials', '100',
                     '--n-cal', '50', '--n-test', '100', '--unsafe-rate', '0.15',
                     '--output-dir', str(tmp_path)])
        out = capsys.readouterr().out
        assert 'method=cp' in out
        assert 'trials=100' in out
        summary = (tmp_path / 'guarantees.txt').read_text(encoding='utf-8')
        assert summary.splitlines()[-1] in ('result=PASS', 'result=FAIL')
        assert code in (EXIT_OK, 3)


class TestRunAndReport:

    @pytest.fixture
    def config_path(self, tmp_path, tiny_experiment):
        return ConfigLoader(str(tmp_path / 'configs')).save_experiment_config(tiny_experiment)

    def test_run_then_report(self, tmp_path, log_dir, config_path):
        run_dir = str(tmp_path / 'run')
        code = main(['--log-dir', log_dir, 'run', config_path, '--methods', 'base', 'cp', 'crc',
                     '--repeats', '1', '--run-dir', run_dir])
        assert code == EXIT_OK
        assert os.path.exists(os.path.join(run_dir, 'run_artifact.json'))
        assert not os.path.exists(os.path.join(run_dir, 'metrics_ct.csv'))
        assert any(name.startswith('triage_run_') for name in os.listdir(log_dir))

        report_dir = str(tmp_path / 'report')
        assert main(['--log-dir', log_dir, 'report', run_dir, '--output-dir', report_dir]) == EXIT_OK
        assert _read(os.path.join(report_dir, 'table_prospective.txt')) == \
            _read(os.path.join(run_dir, 'table_prospective.txt'))

    def test_report_fails_when_workbook_cannot_be_written(self, tmp_path, log_dir, config_path, capsys):
        run_dir = str(tmp_path / 'run')
        assert main(['--log-dir', log_dir, 'run', config_path, '--methods', 'cp',
                     '--repeats', '1', '--run-dir', run_dir]) == EXIT_OK
        report_dir = tmp_path / 'report'
        # a directory where the workbook should go makes the write fail
        (report_dir / 'comparison.xlsx').mkdir(parents=True)
        capsys.readouterr()

        code = main(['--log-dir', log_dir, 'report', run_dir, '--output-dir', str(report_dir)])
        assert code == EXIT_ERROR
        assert capsys.readouterr().err.startswith('error=ExportError')
        assert (report_dir / 'table_prospective.txt').exists()

    def test_missing_config(self, tmp_path, log_dir, capsys):
        code = main(['--log-dir', log_dir, 'run', 'absent', '--config-dir', str(tmp_path)])
        assert code == EXIT_ERROR
        assert 'error=FileNotFoundError' in capsys.readouterr().err

    def test_invalid_override(self, log_dir, config_path, capsys):
        code = main(['--log-dir', log_dir, 'run', config_path, '--alpha', '1.5'])
        assert code == EXIT_ERROR
        assert 'error=ValueError' in capsys.readouterr().err

    def test_report_without_artifact(self, tmp_path, log_dir, capsys):
        code = main(['--log-dir', log_dir, 'report', str(tmp_path / 'nothing')])
        assert code == EXIT_ERROR
        assert 'error=FileNotFoundError' in capsys.readouterr().err


def test_list_shows_shipped_experiments(log_dir, capsys):
    assert main(['--log-dir', log_dir, 'list', '--config-dir', SHIPPED_CONFIG_DIR]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ('pooled', 'shift_a_to_b', 'shift_b_to_a', 'smoke'):
        assert name in out
    assert 'distribution shift' in out


def test_missing_subcommand_is_a_usage_error(log_dir, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(['--log-dir', log_dir])
    assert excinfo.value.code == EXIT_USAGE
    assert capsys.readouterr().err.startswith('error=UsageError')
