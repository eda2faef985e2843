"""
qsiset command line.

    python cli.py tail --model P2 --levels 0..40 --out fig2.csv
    python cli.py mincard --model P4 --eps 0.1,0.3,1,4
    python cli.py sumjn --N 20
    python cli.py ehrhart --model P5
    python cli.py volume --model my_model.json --method lattice_scaling
    python cli.py check --model P2 --period 3

Exit codes: 0 ok, 2 argument error, 3 domain error, 4 resource ceiling,
5 consistency failure.
"""
import argparse
import json
import logging
import sys

from commands import register_commands
from utils.config import Config
from utils.errors import QsiSetError
from utils.logger import (
    DEBUG_FLAGS, LOG_LEVELS, debug_log, get_logging_config, log_run_event, set_debug_flag, setup_logging,
)

logger = logging.getLogger('QsiSet.cli')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='qsiset',
        description='Quasi-optimal index sets: exact truncation errors and their estimates',
    )
    parser.add_argument('--version', action='version', version=f'qsiset {Config.APP_VERSION}')
    parser.add_argument('--log-level', default=None, choices=sorted(LOG_LEVELS), help='Console log level (default INFO)')
    parser.add_argument('--debug', action='append', default=[], choices=sorted(DEBUG_FLAGS),
                        help='Enable verbose logging for one subsystem (repeatable)')
    parser.add_argument('--log-dir', default=None, help='Write qsiset.log and run_events.json to this directory')
    parser.add_argument('--log-file', action='store_true',
                        help='Write qsiset.log and run_events.json under DATA_DIR/QsiSetData/logs unless --log-dir is given')
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='command')
    register_commands(subparsers)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = args.log_level or ('DEBUG' if args.debug else 'INFO')
    log_dir = args.log_dir or (Config.get_log_dir() if args.log_file else None)
    setup_logging(level, log_dir)
    for flag in args.debug:
        set_debug_flag(flag, True)
    debug_log('cli', f"Logging configuration: {get_logging_config()}")

    issues = Config.validate_config()
    for issue in issues:
        logger.warning(f"Configuration: {issue}")

    try:
        return args.handler(args)
    except QsiSetError as e:
        logger.error(f"{args.command} failed: {e.message}")
        print(json.dumps(e.to_dict(), default=str), file=sys.stderr)
        log_run_event('error', {'command': args.command, **e.to_dict()})
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())
