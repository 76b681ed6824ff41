#!/usr/bin/env python3
"""
GPR Triage - Run All Experiments

Runs every experiment configuration found under configs/experiments (the
quick `smoke` config is skipped unless named explicitly), merges the runs
that succeeded into one report and prints a colored summary.
"""

import argparse
import os
import sys
from datetime import datetime
from typing import Dict, List

from main import EXIT_OK, main as cli
from src.config import ConfigLoader

GREEN = '\033[0;32m'
RED = '\033[0;31m'
YELLOW = '\033[1;33m'
BLUE = '\033[0;34m'
RESET = '\033[0m'

SKIPPED_BY_DEFAULT = ('smoke',)


def study_experiments(config_dir: str) -> List[str]:
    """Experiment names of the comparison study, in config-name order."""
    names = ConfigLoader(config_dir).list_experiments()
    return [name for name in names if name not in SKIPPED_BY_DEFAULT]


def run_study(names: List[str], config_dir: str, output_dir: str, extra: List[str]) -> Dict[str, int]:
    """Run each experiment through the CLI and return its exit code by name."""
    codes: Dict[str, int] = {}
    for name in names:
        print(f"\n{YELLOW}>>> {name}{RESET}")
        codes[name] = cli(['run', name, '--config-dir', config_dir, '--output-dir', output_dir, *extra])
        mark = f"{GREEN}✓" if codes[name] == EXIT_OK else f"{RED}✗"
        print(f"{mark} {name} (exit code {codes[name]}){RESET}")
    return codes


def print_summary(codes: Dict[str, int], started: datetime, report_code: int, output_dir: str) -> None:
    passed = [name for name, code in codes.items() if code == EXIT_OK]
    print()
    print("=" * 70)
    print(f"{BLUE}STUDY SUMMARY{RESET}  ({datetime.now() - started} elapsed)")
    print("=" * 70)
    for name, code in codes.items():
        color = GREEN if code == EXIT_OK else RED
        print(f"  {color}{name:<20} exit={code}{RESET}")
    print(f"{len(passed)}/{len(codes)} experiments succeeded")
    if report_code != EXIT_OK:
        print(f"{RED}Merged report could not be written (exit={report_code}){RESET}")
    else:
        print(f"Merged report: {os.path.join(output_dir, 'report')}/")
    print("=" * 70)


def main() -> int:
    parser = argparse.ArgumentParser(
        description='Run every experiment configuration and merge the results',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run the full study
  python3 run_all_experiments.py

  # Quick pass over the smoke config only
  python3 run_all_experiments.py --experiments smoke

  # Fewer repeats for every experiment
  python3 run_all_experiments.py -- --repeats 1
        """
    )
    parser.add_argument('--experiments', nargs='+', default=None,
                        help='Experiments to run (default: every config except smoke)')
    parser.add_argument('--config-dir', default='configs', help='Configuration directory (default: configs)')
    parser.add_argument('--output-dir', default='output', help='Base output directory (default: output)')
    parser.add_argument('extra', nargs=argparse.REMAINDER, help='Flags forwarded to `main.py run` (after --)')
    args = parser.parse_args()

    names = args.experiments or study_experiments(args.config_dir)
    if not names:
        print(f"{RED}No experiment configurations found in {args.config_dir}{RESET}")
        return 1

    started = datetime.now()
    codes = run_study(names, args.config_dir, args.output_dir, [a for a in args.extra if a != '--'])

    runs = [os.path.join(args.output_dir, name) for name, code in codes.items() if code == EXIT_OK]
    report_code = EXIT_OK
    if runs:
        report_code = cli(['report', *runs, '--output-dir', os.path.join(args.output_dir, 'report')])

    print_summary(codes, started, report_code, args.output_dir)
    return 0 if len(runs) == len(codes) and report_code == EXIT_OK else 1


if __name__ == '__main__':
    sys.exit(main())
