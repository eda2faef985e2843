"""
`mincard`: theoretical minimum cardinalities M_eps and M'_eps per eps, with the
empirical level from which the upper bound actually holds and, for WeightedLinear
models, the level from which it stays below the Stechkin bounds.
"""
import logging

from commands.common import add_model_argument, add_output_arguments, add_run_arguments, float_list, load_model, write_rows
from services.bounds import WEIGHTED_LINEAR
from services.estimates import empirical_min_cardinality, level_comparisons, min_cardinality, stechkin_crossover
from services.polytope import ehrhart_fit
from utils.config import Config
from utils.logger import log_run_event

logger = logging.getLogger(__name__)

COLUMNS = ['epsilon', 'Delta_eps', 'J_eps', 'M_eps', 'Jp_eps', 'Mp_eps', 'rate_factor', 'scan_ceiling', 'scan_start',
           'empirical_J', 'empirical_M', 'stechkin_cross_J']


def register_mincard_command(subparsers):
    parser = subparsers.add_parser('mincard', help='Minimum cardinalities for the asymptotic upper bound')
    add_model_argument(parser)
    parser.add_argument('--eps', type=float_list, default=None, help='Comma-separated eps values')
    parser.add_argument('--period', type=int, default=None, help='Force the Ehrhart period (no escalation)')
    parser.add_argument('--empirical', type=int, default=None, metavar='J_MAX',
                        help='Also report the first level up to J_MAX from which exact <= upper holds')
    parser.add_argument('--crossover-jmax', type=int, default=40, metavar='J_MAX',
                        help='Last level searched for the Stechkin crossover (WeightedLinear only)')
    add_run_arguments(parser)
    add_output_arguments(parser)
    parser.set_defaults(handler=cmd_mincard)
    return parser


def cmd_mincard(args):
    model = load_model(args)
    epsilons = args.eps or list(Config.DEFAULT_EPSILONS)
    qp = ehrhart_fit(model, period=args.period)
    volP = float(qp.leading)

    rows = []
    for eps in epsilons:
        row = min_cardinality(model, eps, qp).to_dict()
        if args.empirical is not None:
            comparisons = level_comparisons(model, eps, args.empirical, volP=volP, tol=args.tol)
            found = empirical_min_cardinality(model, eps, comparisons=comparisons)
            row['empirical_J'], row['empirical_M'] = found if found is not None else (None, None)
        if model.family == WEIGHTED_LINEAR:
            row['stechkin_cross_J'] = stechkin_crossover(model, model.lam, eps, J_max=args.crossover_jmax, volP=volP)
        rows.append(row)
        logger.info(f"mincard {model.model_id} eps={eps}: Delta={row['Delta_eps']} M_eps={row['M_eps']} Mp_eps={row['Mp_eps']}")

    log_run_event('mincard', {'model': model.model_id, 'q': qp.q, 'epsilons': epsilons})
    return write_rows(args, rows, COLUMNS, model=model.to_dict(), ehrhart=qp.to_dict())
