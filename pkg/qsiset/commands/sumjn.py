"""
`sumjn`: sum_{j >= J} j^N e^{-j} against its asymptotic and pre-asymptotic bounds.
"""
from commands.common import RowBuilder, add_output_arguments, level_range, write_rows
from services.estimates import pre_asymptotic_sum_bound, sum_jN_bound, sum_jN_exact, sum_jN_lower
from utils.errors import ArgumentError
from utils.logger import log_run_event

COLUMNS = ['J', 'exact', 'lower', 'asym_bound', 'asym_bound_Lnp1', 'preasym_bound', 'reason']


def register_sumjn_command(subparsers):
    parser = subparsers.add_parser('sumjn', help='Bounds on sum_{j >= J} j^N e^{-j}')
    parser.add_argument('--N', type=int, default=20, help='Exponent N (default 20)')
    parser.add_argument('--levels', type=level_range, default=None, help='Range J1..J2 (default 1..40)')
    add_output_arguments(parser)
    parser.set_defaults(handler=cmd_sumjn)
    return parser


def sumjn_row(J: int, N: int):
    row = RowBuilder(J=J)
    row.cell('exact', lambda: sum_jN_exact(J, N))
    row.cell('lower', lambda: sum_jN_lower(J, N))
    row.cell('asym_bound', lambda: sum_jN_bound(J, N, 2))
    row.cell('asym_bound_Lnp1', lambda: sum_jN_bound(J, N, N + 1))
    row.cell('preasym_bound', lambda: pre_asymptotic_sum_bound(J, N))
    return row.finish()


def cmd_sumjn(args):
    if args.N < 1:
        raise ArgumentError(f"--N must be >= 1, got {args.N}")
    levels = args.levels or list(range(1, 41))
    if levels[0] < 1:
        raise ArgumentError("sumjn levels start at J = 1")
    rows = [sumjn_row(J, args.N) for J in levels]
    log_run_event('sumjn', {'N': args.N, 'rows': len(rows)})
    return write_rows(args, rows, COLUMNS)
