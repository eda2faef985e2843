"""
`tail`: exact truncation errors of Lambda_M next to every applicable estimate.
"""
import logging

from commands.common import (
    RowBuilder, add_model_argument, add_output_arguments, add_run_arguments, float_list, int_list,
    level_range, load_model, run_rows, workers, write_rows,
)
from services.bounds import WEIGHTED_LINEAR
from services.estimates import (
    complex_bound, iso_optimized, iso_stechkin, lower_asymptotic, pre_asymptotic_tail_bound, stechkin,
    stechkin_optimized, upper_asymptotic, xi_max,
)
from services.index_sets import count_superlevel, level_cardinalities
from services.polytope import ehrhart_fit, exact_volume, lattice_point_count, volume
from services.tails import exact_tail
from utils.config import Config
from utils.errors import DomainError, QsiSetError
from utils.logger import log_run_event

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = '0..20'


def register_tail_command(subparsers):
    parser = subparsers.add_parser('tail', help='Exact tails of Lambda_M against the asymptotic and Stechkin bounds')
    add_model_argument(parser)
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--M', type=int_list, default=None, help='Comma-separated cardinalities')
    group.add_argument('--levels', type=level_range, default=None,
                       help=f'Level range J1..J2; M = #P_J for each J (default {DEFAULT_LEVELS})')
    parser.add_argument('--eps', type=float_list, default=None, help='Comma-separated eps values for the upper bound')
    parser.add_argument('--p', type=float_list, default=None, help='Comma-separated Stechkin exponents')
    parser.add_argument('--xi', type=float, default=None, help='Rate adjusting parameter of the optimized Stechkin bound')
    add_run_arguments(parser)
    add_output_arguments(parser)
    parser.set_defaults(handler=cmd_tail)
    return parser


class _TailContext:
    """Model-level quantities shared by every row; a failure is kept and reported per cell."""

    def __init__(self, model):
        self.model = model
        self.n = model.dimension
        self.volP, self.volP_error = self._attempt(lambda: self._volume())
        self.q, self.q_error = self._attempt(lambda: ehrhart_fit(model).q)
        self.sigma, self.sigma_error = self._attempt(lambda: lattice_point_count(model))
        self.max_M, self.max_M_error = self._attempt(lambda: count_superlevel(model, float(self.n)))
        self.weighted = model.family == WEIGHTED_LINEAR
        self.isotropic = self.weighted and len(set(model.lam)) == 1

    @staticmethod
    def _attempt(compute):
        try:
            return compute(), None
        except QsiSetError as e:
            return None, e

    def _volume(self):
        if self.model.is_rational_homogeneous:
            return float(exact_volume(self.model))
        return volume(self.model).volume


def _need(value, error):
    if value is None:
        raise error
    return value


def tail_columns(epsilons, p_grid, isotropic):
    columns = ['J', 'M', 'exact', 'exact_abs_error']
    columns += [f'upper_eps{e:g}' for e in epsilons]
    columns += ['lower']
    columns += [f'stechkin_p{p:g}' for p in p_grid]
    columns += ['optim_xi', 'preasym']
    if isotropic:
        columns += [f'iso_stech_p{p:g}' for p in p_grid]
        columns += ['iso_optim', 'complex']
    columns.append('reason')
    return columns


def tail_row(ctx: _TailContext, J, M, epsilons, p_grid, xi, tol):
    model = ctx.model
    scale = model.prefactor
    n = ctx.n
    row = RowBuilder(J=J, M=M)

    try:
        tail = exact_tail(model, M, tol=tol)
        row.row['exact'] = tail.tail
        row.row['exact_abs_error'] = tail.abs_error_bound
    except QsiSetError as e:
        row.skip('exact', e)

    for eps in epsilons:
        row.cell(f'upper_eps{eps:g}', lambda: scale * upper_asymptotic(M, n, _need(ctx.volP, ctx.volP_error), eps))
    row.cell('lower', lambda: scale * lower_asymptotic(M, n, _need(ctx.volP, ctx.volP_error), _need(ctx.q, ctx.q_error)))

    not_weighted = DomainError('Stechkin bounds apply to WeightedLinear models', reason='not_weighted_linear')
    for p in p_grid:
        if ctx.weighted:
            row.cell(f'stechkin_p{p:g}', lambda: scale * stechkin(M, model.lam, p))
        else:
            row.skip(f'stechkin_p{p:g}', not_weighted)
    if ctx.weighted:
        row.cell('optim_xi', lambda: scale * stechkin_optimized(M, n, model.lam, xi))
    else:
        row.skip('optim_xi', not_weighted)

    if model.is_homogeneous:
        row.cell('preasym', lambda: scale * pre_asymptotic_tail_bound(
            M, n, _need(ctx.sigma, ctx.sigma_error), max_M=_need(ctx.max_M, ctx.max_M_error)))
    else:
        row.note('preasym', 'domain_not_homogeneous')

    if ctx.isotropic:
        lam = model.lam[0]
        for p in p_grid:
            row.cell(f'iso_stech_p{p:g}', lambda: scale * iso_stechkin(M, n, lam, p))
        row.cell('iso_optim', lambda: scale * iso_optimized(M, n, lam))
        row.cell('complex', lambda: scale * complex_bound(M, n, lam))
    return row.finish()


def cmd_tail(args):
    model = load_model(args)
    epsilons = args.eps or list(Config.DEFAULT_EPSILONS)
    p_grid = args.p or list(Config.DEFAULT_P_GRID)
    xi = xi_max() if args.xi is None else args.xi

    if args.M is not None:
        jobs = [(None, M) for M in args.M]
    else:
        levels = args.levels or level_range(DEFAULT_LEVELS)
        jobs = list(zip(levels, level_cardinalities(model, levels)))

    ctx = _TailContext(model)
    logger.info(f"tail: {model.model_id}, {len(jobs)} rows, |P|={ctx.volP}, q={ctx.q}, sigma={ctx.sigma}")
    rows = run_rows(jobs, lambda job: tail_row(ctx, job[0], job[1], epsilons, p_grid, xi, args.tol), workers(args))
    log_run_event('tail', {'model': model.model_id, 'rows': len(rows)})
    return write_rows(args, rows, tail_columns(epsilons, p_grid, ctx.isotropic), model=model.to_dict())
