"""
Argument parsing and row scheduling shared by the subcommands.
"""
import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Sequence

from services.presets import resolve_model
from utils.config import Config
from utils.errors import ArgumentError, QsiSetError
from utils.logger import debug_log, get_logging_config
from utils.output import emit, error_cell, join_reasons

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Parsers for list-valued flags
# ----------------------------------------------------------------------

def float_list(text: str) -> List[float]:
    try:
        values = [float(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def int_list(text: str) -> List[int]:
    try:
        values = [int(x) for x in text.split(',') if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def level_range(text: str) -> List[int]:
    """'J1..J2' (inclusive) or a single level."""
    try:
        if '..' in text:
            lo, hi = (int(x) for x in text.split('..', 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected J1..J2, got {text!r}")
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"expected 0 <= J1 <= J2, got {text!r}")
    return list(range(lo, hi + 1))


# ----------------------------------------------------------------------
# Flags
# ----------------------------------------------------------------------

def add_model_argument(parser, required=True):
    parser.add_argument('--model', required=required,
                        help='Preset name (P1..P6) or path to a model JSON document')


def add_output_arguments(parser):
    parser.add_argument('--out', default=None, help='Output file; a .meta.json sidecar is written next to it')
    parser.add_argument('--format', default='csv', choices=('csv', 'json'), help='Output format')


def add_run_arguments(parser):
    parser.add_argument('--tol', type=float, default=None, help='Relative tolerance')
    parser.add_argument('--seed', type=int, default=None, help='Seed for sampled checks')
    parser.add_argument('--workers', type=int, default=None, help='Threads for independent rows')


def load_model(args):
    return resolve_model(args.model)


def provenance(args, **extra) -> Dict:
    """Run configuration recorded in the sidecar."""
    config = {k: v for k, v in vars(args).items() if k != 'handler'}
    config.update(extra)
    settings = {
        'enumeration': Config.get_enumeration_config(),
        'tails': Config.get_tail_config(),
        'polytope': Config.get_polytope_config(),
        'logging': get_logging_config(),
    }
    return {'command': args.command, 'config': config, 'settings': settings}


def workers(args) -> int:
    count = Config.WORKERS if getattr(args, 'workers', None) is None else args.workers
    if count < 1:
        raise ArgumentError(f"--workers must be >= 1, got {count}")
    return count


# ----------------------------------------------------------------------
# Rows
# ----------------------------------------------------------------------

def run_rows(jobs: Sequence, build_row: Callable[..., Dict], thread_count: int) -> List[Dict]:
    """build_row over jobs, concurrently, returned in job order."""
    if thread_count == 1 or len(jobs) <= 1:
        return [build_row(job) for job in jobs]
    debug_log('cli', f"Scheduling {len(jobs)} rows on {thread_count} threads")
    with ThreadPoolExecutor(max_workers=thread_count, thread_name_prefix='qsiset-row') as pool:
        return list(pool.map(build_row, jobs))


class RowBuilder:
    """Collects cells of one output row; failing or non-positive cells stay empty with a reason."""

    def __init__(self, **fixed):
        self.row = dict(fixed)
        self.reasons: List[str] = []

    def cell(self, column: str, compute: Callable[[], float], positive: bool = True):
        try:
            value = compute()
        except QsiSetError as e:
            self.skip(column, e)
            return None
        if value is not None and not (math.isfinite(value) and (value > 0 or not positive)):
            self.reasons.append(f"{column}:{'underflow' if value == 0 else 'not_finite'}")
            return None
        self.row[column] = value
        return value

    def skip(self, column: str, exc: QsiSetError):
        self.reasons.append(error_cell(column, exc))

    def note(self, column: str, reason: str):
        self.reasons.append(f"{column}:{reason}")

    def finish(self) -> Dict:
        self.row['reason'] = join_reasons(self.reasons)
        return self.row


def write_rows(args, rows: List[Dict], columns: List[str], **extra) -> int:
    emit(rows, columns, fmt=args.format, out=args.out, provenance=provenance(args, **extra),
         stream=None if args.out else sys.stdout)
    if args.out:
        logger.info(f"Wrote {len(rows)} rows to {args.out}")
    return 0
