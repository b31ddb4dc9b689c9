"""
RoadHawkes command-line entry point
Simulation, Monte Carlo ensembles, parameter sweeps and accident log analysis.
"""

import sys
import copy
import json
import logging
import argparse
from pathlib import Path
from logging.handlers import RotatingFileHandler
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from roadhawkes import __version__
from roadhawkes.analysis import (
    build_inflow_profile,
    exponential_bin_shares,
    exponentiality_test,
    gap_histogram,
    hourly_profile,
    intermediate_times,
    load_event_log,
    load_hourly_counts,
)
from roadhawkes.errors import ConfigError, RoadHawkesError
from roadhawkes.harness.config import DEFAULT_CONFIG, ExperimentConfig, load_experiment_document, parse_experiment_config
from roadhawkes.harness.monte_carlo import best_cell, run_monte_carlo, sweep
from roadhawkes.harness.results import (
    RunRecord,
    write_accidents_csv,
    write_frame_csv,
    write_runs_csv,
    write_snapshots_csv,
    write_summary_json,
)
from roadhawkes.harness.simulation import simulate

DEFAULT_CONFIG_PATH = 'config.yaml'

# Bin width of the gap histogram per time unit
DEFAULT_BIN_WIDTH = {'minutes': 2.0, 'hours': 2.0 / 60.0}

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_DOMAIN_ERROR = 2


def setup_logging(config: dict) -> None:
    """
    Setup logging with file and console handlers.

    Args:
        config: Configuration document holding a 'logging' block
    """
    log_config = config.get('logging') or {}
    level = getattr(logging, str(log_config.get('level', 'INFO')).upper(), logging.INFO)
    fmt = log_config.get('format', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    logger = logging.getLogger()
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(fmt))
    logger.addHandler(console_handler)

    log_file = log_config.get('file')
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=log_config.get('max_bytes', 10485760),
            backupCount=log_config.get('backup_count', 3)
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(fmt))
        logger.addHandler(file_handler)


def load_config(config_path: Optional[str] = None) -> dict:
    """
    Load the configuration document.

    Without an explicit path a missing config.yaml falls back to the built-in defaults.
    """
    if config_path is not None:
        return load_experiment_document(config_path)
    try:
        return load_experiment_document(DEFAULT_CONFIG_PATH)
    except ConfigError as e:
        print(f"Error loading config: {e}", file=sys.stderr)
        print("Using default configuration", file=sys.stderr)
        return copy.deepcopy(DEFAULT_CONFIG)


def parse_times(text: str) -> List[float]:
    """Comma-separated list of times."""
    try:
        return [float(value) for value in text.split(',') if value.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def _experiment(args: argparse.Namespace, document: dict) -> ExperimentConfig:
    config = parse_experiment_config(document)
    return config.with_cli_overrides(
        seed=args.seed,
        runs=args.runs,
        out=args.out,
        snapshots=args.snapshots,
    )


def cmd_simulate(args: argparse.Namespace, document: dict) -> None:
    """One run: runs.csv, summary.json, accidents.csv and optional snapshots.csv."""
    config = _experiment(args, document)
    out = Path(config.output.dir)
    result = simulate(config)
    record = RunRecord.from_result(result)

    write_runs_csv([record], out / 'runs.csv')
    write_accidents_csv([(result.run, result.accidents)], out / 'accidents.csv')
    if config.output.snapshots:
        write_snapshots_csv(result.snapshots, config.network, out / 'snapshots.csv')
    body = {
        'run': record.to_row(),
        'max_mass_residual': result.max_mass_residual,
    }
    if result.report.cm_traces:
        body['cm_max'] = {road: max(trace) for road, trace in result.report.cm_traces.items() if trace}
    write_summary_json(out / 'summary.json', 'simulate', body, config.document)


def cmd_mc(args: argparse.Namespace, document: dict) -> None:
    """Monte Carlo ensemble: runs.csv, summary.json, accidents.csv."""
    config = _experiment(args, document)
    out = Path(config.output.dir)
    result = run_monte_carlo(config, keep_accidents=True)

    write_runs_csv(result.aggregate.records, out / 'runs.csv')
    write_accidents_csv(sorted(result.accidents.items()), out / 'accidents.csv')
    write_summary_json(out / 'summary.json', 'mc', {'aggregate': result.aggregate.to_dict()}, config.document)


def cmd_sweep(args: argparse.Namespace, document: dict) -> None:
    """Grid of junction splits: sweep.csv plus summary.json."""
    config = _experiment(args, document)
    out = Path(config.output.dir)
    cells = sweep(config)

    write_frame_csv(pd.DataFrame([cell.to_row() for cell in cells]), out / 'sweep.csv')
    best = best_cell(cells)
    body = {
        'cells': len(cells),
        'best': {'alpha_1': best.alpha_1, 'alpha_2': best.alpha_2, 'ttt_mean': best.report.ttt_mean},
    }
    write_summary_json(out / 'summary.json', 'sweep', body, config.document)


def cmd_fit(args: argparse.Namespace, document: dict) -> None:
    """Intermediate accident times of a log: gaps.csv and fit.json."""
    if not args.log:
        raise ConfigError("fit needs --log PATH")
    out = Path(args.out or (document.get('output') or {}).get('dir', 'results'))
    log = load_event_log(args.log)
    gaps = intermediate_times(log, args.time_unit)
    unit = args.time_unit or ('minutes' if log.wall_clock else 'raw')

    bin_width = args.bin_width
    if bin_width is None:
        if unit not in DEFAULT_BIN_WIDTH:
            raise ConfigError("Logs with raw time units need --bin-width")
        bin_width = DEFAULT_BIN_WIDTH[unit]

    test = exponentiality_test(gaps, args.level)
    histogram = gap_histogram(gaps, bin_width)
    expected = exponential_bin_shares(test.rate, histogram.edges) * len(gaps)
    frame = pd.DataFrame({
        'bin_start': histogram.edges[:-1],
        'bin_end': histogram.edges[1:],
        'count': histogram.counts,
        'expected': expected,
    })
    write_frame_csv(frame, out / 'gaps.csv')

    body = {
        'log': str(args.log),
        'time_unit': unit,
        'bin_width': bin_width,
        'events': len(log),
        'runs': log.run_count,
        'mean_gap': float(np.mean(gaps)),
        'first_bin_share': float(histogram.shares[0]),
        'first_bin_expected_share': float(expected[0] / len(gaps)),
        'test': test.to_dict(),
    }
    write_summary_json(out / 'fit.json', 'fit', body)
    logging.getLogger(__name__).info(
        f"Exponential fit: rate {test.rate:.4f} per {unit}, KS {test.statistic:.4f} "
        f"(critical {test.critical_value:.4f}) -> {body['test']['verdict']}"
    )


def cmd_analyze(args: argparse.Namespace, document: dict) -> None:
    """Hourly accident profile of a log, or an inflow profile from vehicle counts."""
    if not args.log and not args.counts:
        raise ConfigError("analyze needs --log PATH or --counts PATH")
    out = Path(args.out or (document.get('output') or {}).get('dir', 'results'))

    if args.log:
        profile = hourly_profile(load_event_log(args.log), args.day)
        write_frame_csv(profile.to_frame(), out / 'hourly_profile.csv')
        logging.getLogger(__name__).info(f"Peak hours: {', '.join(str(h) for h in profile.peak_hours())}")

    if args.counts:
        counts = load_hourly_counts(args.counts)
        inflow = build_inflow_profile(counts, args.scale)
        frame = pd.DataFrame({
            'hour': np.arange(len(counts)),
            'count': counts,
            'inflow': [inflow.value(h + 0.5) for h in range(len(counts))],
        })
        write_frame_csv(frame, out / 'inflow_profile.csv')


COMMANDS: Dict[str, Callable[[argparse.Namespace, dict], None]] = {
    'simulate': cmd_simulate,
    'mc': cmd_mc,
    'sweep': cmd_sweep,
    'fit': cmd_fit,
    'analyze': cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='RoadHawkes - traffic flow on road networks with self-exciting accidents'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=None, help=f'Config file (default: {DEFAULT_CONFIG_PATH})')
    common.add_argument('--out', default=None, help='Output directory (overrides output.dir)')

    experiment = argparse.ArgumentParser(add_help=False)
    experiment.add_argument('--seed', type=int, default=None, help='Ensemble seed')
    experiment.add_argument('--runs', type=int, default=None, help='Number of Monte Carlo runs')
    experiment.add_argument('--snapshots', type=parse_times, default=None,
                            help='Density snapshot times, e.g. 10,50,100')

    subparsers.add_parser('simulate', parents=[common, experiment], help='Run one simulation')
    subparsers.add_parser('mc', parents=[common, experiment], help='Run a Monte Carlo ensemble')
    subparsers.add_parser('sweep', parents=[common, experiment], help='Sweep two junction splits')

    fit = subparsers.add_parser('fit', parents=[common], help='Fit intermediate accident times')
    fit.add_argument('--log', required=True, help='Accident log CSV')
    fit.add_argument('--bin-width', type=float, default=None, help='Histogram bin width (default 2 minutes)')
    fit.add_argument('--time-unit', choices=['minutes', 'hours', 'raw'], default=None,
                     help='Unit of the intermediate times')
    fit.add_argument('--level', type=float, default=0.01, help='Significance level of the KS test')

    analyze = subparsers.add_parser('analyze', parents=[common], help='Hourly profiles')
    analyze.add_argument('--log', default=None, help='Accident log CSV')
    analyze.add_argument('--day', choices=['all', 'weekday', 'saturday', 'sunday'], default='all',
                         help='Day filter for the hourly accident profile')
    analyze.add_argument('--counts', default=None, help='Hourly vehicle counts CSV')
    analyze.add_argument('--scale', type=float, default=1.0, help='Vehicles per hour -> flux units')
    return parser


def error_record(error: BaseException, command: Optional[str]) -> str:
    """Single-line JSON error record."""
    return json.dumps({'error': type(error).__name__, 'message': str(error), 'command': command})


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)

    try:
        document = load_config(args.config)
    except RoadHawkesError as e:
        print(error_record(e, args.command), file=sys.stderr)
        return EXIT_DOMAIN_ERROR

    setup_logging(document)
    logger = logging.getLogger(__name__)

    logger.info("=" * 60)
    logger.info(f"RoadHawkes v{__version__} - {args.command}")
    logger.info("=" * 60)

    try:
        COMMANDS[args.command](args, document)
    except RoadHawkesError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(error_record(e, args.command), file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_UNEXPECTED
    except Exception as e:
        logger.exception(f"Fatal error: {e}")
        print(error_record(e, args.command), file=sys.stderr)
        return EXIT_UNEXPECTED

    logger.info("Done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
