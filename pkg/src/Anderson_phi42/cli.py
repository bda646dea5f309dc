#!/usr/bin/env python
"""
Command-line entry point ``anderson-phi42``

Exit codes: 0 success, 1 a check tagged for acceptance failed, 2 invalid
configuration, 3 numerical failure.
"""
import sys
import logging
import argparse

from .constants import *
from .utils import ConfigurationError, NumericalError, resolve_workers
from .__metadata__ import __version__
from .Input import ExperimentConfig
from .Output import RunOutput
from .Experiment import EXPERIMENTS
from .Acceptance import run_acceptance

__all__ = ['make_parser', 'run', 'main']

logger = logging.getLogger(__name__)


def make_parser():
    parser = argparse.ArgumentParser(prog=CLI_NAME,
                                     description="Lattice simulations of the Anderson Phi^4_2 dynamics")
    parser.add_argument('subcommand', choices=SUBCOMMANDS, help="Experiment to run")
    parser.add_argument('--config', metavar='PATH', default=None,
                        help="JSON configuration; defaults apply when omitted")
    parser.add_argument('--out', metavar='DIR', default=None,
                        help="Output directory, overriding the configured one")
    parser.add_argument('--seed', type=int, default=None, help="Master seed, overriding the configured one")
    parser.add_argument('--workers', type=int, default=None,
                        help=f"Process pool size, default from ${WORKERS_ENV_VAR} or 1")
    parser.add_argument('--modes', metavar='N', type=int, nargs='+', default=None,
                        help="Truncations N of the wick statistics, overriding experiment.modes")
    parser.add_argument('--samples', metavar='S', type=int, default=None,
                        help="Monte Carlo sample count, overriding experiment.samples")
    parser.add_argument('--stat', choices=WICK_STATS, default=None,
                        help="Wick statistic, overriding experiment.stat")
    parser.add_argument('--profile', choices=PROFILES, default='quick', help="Size profile of the accept suite")
    parser.add_argument('-v', '--verbose', action='count', default=0, help="More logging, repeatable")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    return parser


def run(argv=None):
    """Parses argv, runs the subcommand and returns the exit code"""
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=max(logging.DEBUG, logging.WARNING - 10*args.verbose),
                        format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    output = None
    try:
        workers = resolve_workers(args.workers, WORKERS_ENV_VAR)
        if args.subcommand == 'accept':
            _seed = DEFAULT_CONFIG[CTAGS.seed] if args.seed is None else args.seed
            output = run_acceptance(args.out or DEFAULT_CONFIG[CTAGS.output], args.profile, _seed, workers)
        else:
            config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig.default()
            if args.seed is not None:
                config = config.replace(seed=args.seed)
            _overrides = {_key: _value for _key, _value in ((CTAGS.modes, args.modes), (CTAGS.samples, args.samples),
                                                             (CTAGS.stat, args.stat)) if _value is not None}
            if _overrides:
                config = config.replace(**{CTAGS.experiment: _overrides})
            output = RunOutput(args.out or config.output, config, args.subcommand)
            logger.info("Running %s with configuration %s", args.subcommand, config.config_hash)
            EXPERIMENTS[args.subcommand](config, output, workers)
        _code = output.finalize()
        if _code == EXIT_CHECK_FAILED:
            logger.warning("Failed checks: %s", ', '.join(output.manifest.failed_checks))
        return _code
    except ConfigurationError as _error:
        logger.error("Invalid configuration: %s", _error)
        return EXIT_CONFIG
    except (NumericalError, ValueError) as _error:
        logger.error("Numerical failure in %s: %s", args.subcommand, _error)
        if output is not None:
            output.finalize(EXIT_NUMERICAL)
        return EXIT_NUMERICAL


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
