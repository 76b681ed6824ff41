"""Main entry point for the GPR triage experiment system."""

import argparse
import logging
import os
import sys
from typing import List, Optional

from src.config import ConfigLoader, ExperimentConfig, METHOD_NAMES
from src.core import ReportExporter
from src.data import SynthConfig, synth_generate, write_synthetic
from src.experiments import ExperimentRunner, HyperparameterTuner, build_report, check_guarantees, prepare_splits
from src.experiments.runner import mean_detail, summarize_failures
from src.methods import METHOD_LABELS
from src.utils import TriageError, log_file_path, setup_logger


# Exit codes
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_GUARANTEE_FAILED = 3


def _synth_config(args: argparse.Namespace, **overrides) -> SynthConfig:
    values = {
        'n': getattr(args, 'n', None),
        'unsafe_rate': args.unsafe_rate,
        'noise_sd': args.noise_sd,
        'seed': args.seed,
        'dim': args.dim,
        'weights_seed': args.weights_seed,
        'covariate_shift': args.covariate_shift,
        'signal_scale': args.signal_scale,
    }
    values.update(overrides)
    return SynthConfig(**{k: v for k, v in values.items() if v is not None})


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """Load the config named on the command line and apply flag overrides."""
    config = ConfigLoader(args.config_dir).load_experiment_config(args.config) if args.config \
        else ExperimentConfig()
    return config.with_overrides(
        methods=tuple(args.methods) if args.methods else None,
        alpha=args.alpha,
        safety_threshold=args.safety_threshold,
        ensemble_size=args.ensemble_size,
        repeats=args.repeats,
        hidden=args.hidden,
        activation=args.activation,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        minibatch_size=args.minibatch_size,
        master_seed=args.master_seed,
        max_workers=args.max_workers,
        output_dir=args.output_dir,
        ct_penalty=args.ct_penalty,
        feature_selection=False if args.no_feature_selection else None,
        recalibrate=True if args.recalibrate else None,
        tune_hyperparameters=True if getattr(args, 'tune', False) else None,
    )


def cmd_gen_data(args: argparse.Namespace) -> int:
    """Generate a synthetic CSV and its metadata sidecar."""
    logger = logging.getLogger('gpr_triage')
    cfg = _synth_config(args)
    dataset = synth_generate(cfg)
    csv_path, meta_path = write_synthetic(dataset, args.out)
    unsafe = int(dataset.unsafe_mask().sum())
    logger.info(f"Wrote {len(dataset)} plans ({unsafe} below 95) to {csv_path}")
    logger.info(f"Metadata: {meta_path}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    """Run the method comparison described by an experiment config."""
    logger = logging.getLogger('gpr_triage')
    config = _experiment_config(args)

    logger.info("="*70)
    logger.info(f"STARTING EXPERIMENT: {config.name}")
    logger.info("="*70)

    runner = ExperimentRunner(config, run_dir=args.run_dir)
    artifact = runner.run()

    logger.info("="*70)
    logger.info("EXPERIMENT COMPLETED")
    logger.info(f"Successful repeats: {len(artifact.outcomes)}/{config.repeats}")
    logger.info(f"Failed repeats: {summarize_failures(artifact)}")
    for method in config.methods:
        width = mean_detail(artifact, method, 'I')
        if width is not None:
            logger.info(f"{METHOD_LABELS[method]}: mean one-sided width I = {width:.4f}")
    logger.info(f"Output directory: {artifact.run_dir}")
    logger.info(f"Log file: {log_file_path()}")
    logger.info("="*70)
    return EXIT_OK


def cmd_check_guarantees(args: argparse.Namespace) -> int:
    """Monte-Carlo check of the cp coverage or crc risk guarantee."""
    logger = logging.getLogger('gpr_triage')
    generator = _synth_config(args)

    logger.info("="*70)
    logger.info(f"CHECKING {args.method.upper()} GUARANTEE ({args.trials} trials)")
    logger.info("="*70)

    summary = check_guarantees(
        args.method, args.trials, generator,
        n_cal=args.n_cal, n_test=args.n_test, alpha=args.alpha,
        safety_threshold=args.safety_threshold,
    )
    text = summary.to_text()
    ReportExporter(args.output_dir).export_text('guarantees.txt', text)
    print(text, end='')
    return EXIT_OK if summary.passed else EXIT_GUARANTEE_FAILED


def cmd_report(args: argparse.Namespace) -> int:
    """Merge run artifacts into one comparison report."""
    logger = logging.getLogger('gpr_triage')
    paths = build_report(args.artifacts, args.output_dir)
    logger.info("="*70)
    logger.info(f"REPORT WRITTEN ({len(args.artifacts)} artifacts)")
    for path in paths:
        logger.info(f"  {path}")
    logger.info("="*70)
    return EXIT_OK


def cmd_tune(args: argparse.Namespace) -> int:
    """Grid search of the base model hyperparameters on the first repeat's split."""
    logger = logging.getLogger('gpr_triage')
    config = _experiment_config(args)
    dataset = config.data.load()
    test_dataset = config.test_data.load() if config.test_data is not None else None
    prepared = prepare_splits(config, dataset, config.repeat_seed(0), test_dataset)

    result = HyperparameterTuner(config.tuning_grid).tune(
        prepared.train, prepared.val, config.train_config(config.master_seed)
    )
    run_dir = args.run_dir or os.path.join(config.output_dir, config.name)
    ReportExporter(run_dir).export_tuning(result.scores)

    logger.info("="*70)
    logger.info(f"BEST HYPERPARAMETERS: {result.best} (val_mse={result.best_mse:.4f})")
    logger.info("="*70)
    return EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    """List all available experiment configurations."""
    config_loader = ConfigLoader(args.config_dir)
    experiments = config_loader.list_experiments()

    print("\nAvailable experiments:")
    print("-" * 40)

    if not experiments:
        print("No experiment configurations found.")
        print(f"Add .json files to: {config_loader.experiments_dir}/")
    else:
        for name in experiments:
            try:
                config = config_loader.load_experiment_config(name)
                mode = "distribution shift" if config.distribution_shift else "pooled"
                print(f"✓ {name} ({mode}, methods: {', '.join(config.methods)})")
            except (ValueError, TriageError) as e:
                print(f"⚠ {name} (invalid: {e})")

    print("-" * 40)
    print()
    return EXIT_OK


def _add_generator_flags(parser: argparse.ArgumentParser, defaults: SynthConfig) -> None:
    parser.add_argument('--unsafe-rate', type=float, default=defaults.unsafe_rate,
                        help=f'Target fraction of plans below 95 (default: {defaults.unsafe_rate})')
    parser.add_argument('--noise-sd', type=float, default=None,
                        help=f'Label noise standard deviation (default: {defaults.noise_sd})')
    parser.add_argument('--seed', type=int, default=defaults.seed,
                        help=f'Generator seed (default: {defaults.seed})')
    parser.add_argument('--dim', type=int, default=None,
                        help=f'Number of features (default: {defaults.dim})')
    parser.add_argument('--weights-seed', type=int, default=None,
                        help='Seed of the label mechanism (default: same as --seed)')
    parser.add_argument('--covariate-shift', type=float, default=None,
                        help='Offset added to every feature mean (default: 0)')
    parser.add_argument('--signal-scale', type=float, default=None,
                        help=f'Norm of the generator weights (default: {defaults.signal_scale})')


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('config', nargs='?',
                        help='Experiment name under configs/experiments or path to a JSON config')
    parser.add_argument('--config-dir', default='configs',
                        help='Configuration directory (default: configs)')
    parser.add_argument('--run-dir', default=None,
                        help='Output directory of this run (default: <output-dir>/<experiment name>)')
    parser.add_argument('--output-dir', default=None, help='Base output directory')
    parser.add_argument('--methods', nargs='+', choices=METHOD_NAMES, default=None,
                        help='Methods to compare (default: all six)')
    parser.add_argument('--alpha', type=float, default=None, help='Miscoverage level / risk budget')
    parser.add_argument('--safety-threshold', type=float, default=None, help='Safety threshold on the pass rate')
    parser.add_argument('--ensemble-size', type=int, default=None, help='Ensemble members per method')
    parser.add_argument('--repeats', type=int, default=None, help='Repeated random splits')
    parser.add_argument('--hidden', type=int, default=None, help='Hidden nodes')
    parser.add_argument('--activation', choices=['sigmoid', 'relu'], default=None, help='Hidden activation')
    parser.add_argument('--epochs', type=int, default=None, help='Training epochs')
    parser.add_argument('--learning-rate', type=float, default=None, help='Learning rate')
    parser.add_argument('--minibatch-size', type=int, default=None, help='Minibatch size')
    parser.add_argument('--master-seed', type=int, default=None, help='Master seed')
    parser.add_argument('--max-workers', type=int, default=None, help='Threads for ensemble members')
    parser.add_argument('--ct-penalty', choices=['lower', 'two_sided'], default=None,
                        help='Conformal training penalty')
    parser.add_argument('--no-feature-selection', action='store_true', help='Keep every feature')
    parser.add_argument('--recalibrate', action='store_true',
                        help='Recompute I on validation data after ct/ta_crc training')


class TriageArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors print the same `error=...` line as other failures."""

    def error(self, message: str):
        escaped = message.replace('"', "'")
        print(f'error=UsageError message="{escaped}" prog="{self.prog}"', file=sys.stderr)
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = TriageArgumentParser(
        description='GPR triage - conformal interval methods for IMRT QA pass-rate triage',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
Examples:
  # Generate a synthetic dataset
  python main.py gen-data --n 1000 --unsafe-rate 0.05 --seed 7 --out data/synth.csv

  # Run the pooled comparison
  python main.py run pooled

  # Quick run of two methods with overrides
  python main.py run smoke --methods cp ta_crc --repeats 2

  # Check the CRC risk guarantee
  python main.py check-guarantees --method crc --trials 500

  # Merge the tables of several runs
  python main.py report output/shift_a_to_b output/shift_b_to_a --output-dir output/report

  # List available experiments
  python main.py list
        '''
    )
    parser.add_argument('--log-dir', default='logs', help='Directory for log files (default: logs)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Show debug output on the console')
    subparsers = parser.add_subparsers(dest='command', required=True)
    defaults = SynthConfig()

    gen = subparsers.add_parser('gen-data', help='Generate a synthetic plan CSV')
    gen.add_argument('--n', type=int, default=defaults.n, help=f'Number of plans (default: {defaults.n})')
    _add_generator_flags(gen, defaults)
    gen.add_argument('--out', required=True, help='Output CSV path')
    gen.set_defaults(handler=cmd_gen_data)

    run = subparsers.add_parser('run', help='Run a method comparison experiment')
    _add_experiment_flags(run)
    run.add_argument('--tune', action='store_true', help='Tune hyperparameters before the repeats')
    run.set_defaults(handler=cmd_run)

    guarantees = subparsers.add_parser('check-guarantees', help='Monte-Carlo guarantee check')
    guarantees.add_argument('--method', choices=['cp', 'crc'], required=True, help='Guarantee to check')
    guarantees.add_argument('--trials', type=int, default=500, help='Number of trials (>= 100, default: 500)')
    guarantees.add_argument('--n-cal', type=int, default=100, help='Calibration points per trial (default: 100)')
    guarantees.add_argument('--n-test', type=int, default=500, help='Test points per trial (default: 500)')
    guarantees.add_argument('--alpha', type=float, default=0.1, help='Miscoverage level / risk budget')
    guarantees.add_argument('--safety-threshold', type=float, default=95.0, help='Risk loss threshold')
    guarantees.add_argument('--output-dir', default='output', help='Directory for guarantees.txt')
    _add_generator_flags(guarantees, defaults)
    guarantees.set_defaults(handler=cmd_check_guarantees)

    report = subparsers.add_parser('report', help='Merge run artifacts into one table')
    report.add_argument('artifacts', nargs='+', help='run_artifact.json files or run directories')
    report.add_argument('--output-dir', default=os.path.join('output', 'report'), help='Report directory')
    report.set_defaults(handler=cmd_report)

    tune = subparsers.add_parser('tune', help='Grid search of the base model hyperparameters')
    _add_experiment_flags(tune)
    tune.set_defaults(handler=cmd_tune)

    list_cmd = subparsers.add_parser('list', help='List available experiments')
    list_cmd.add_argument('--config-dir', default='configs', help='Configuration directory (default: configs)')
    list_cmd.set_defaults(handler=cmd_list)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logger = setup_logger(log_dir=args.log_dir, level=logging.DEBUG if args.verbose else logging.INFO,
                          run_label=args.command)

    try:
        return args.handler(args)
    except TriageError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        print(e.to_line(), file=sys.stderr)
        return EXIT_ERROR
    except (FileNotFoundError, ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        message = str(e).replace('"', "'")
        print(f'error={e.__class__.__name__} message="{message}"', file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
