"""
`check`: runs the verification suites against a model and reports them as JSON.

Suites:
- assumptions: b(0), Theta(|nu|) constants and monotonicity of H (advisory)
- oracles: exact tails against brute-force box sums (N <= 3)
- ehrhart: fit, held-out verification, |P| j^N <= E*(j) <= sigma j^N
- volume: independent volume methods agree
- sum-bounds: J^N e^{-J} e/(e-1) <= sum_{j>=J} j^N e^{-j} <= L J^N e^{-J} e/(e-1)
- preasymptotic: pre-asymptotic bounds dominate the exact values
- stechkin: Stechkin bounds dominate exact tails (WeightedLinear)
- polylog: Li_{-N} against closed forms and mpmath
- sandwich: lower <= exact tail <= upper on the levels from M_eps up to J = 40
- optimality: Lambda_M beats every downward closed set of the same size (N <= 4, M <= 6)
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import mpmath

from commands.common import add_model_argument, load_model, provenance
from services.bounds import LEGENDRE_SQRT, SUP_AFFINE, WEIGHTED_LINEAR, b_scalar, check_assumptions
from services.estimates import (
    lower_asymptotic, min_cardinality, polylog_neg, pre_asymptotic_sum_bound, pre_asymptotic_tail_bound, stechkin,
    sum_jN_bound, sum_jN_exact, sum_jN_lower, sum_jN_threshold, upper_asymptotic,
)
from services.index_sets import (
    build_quasi_optimal, count_superlevel, downward_closed_sets, is_downward_closed, level_cardinalities,
)
from services.polytope import (
    ANALYTIC_SIMPLEX, CONVEX_HULL, LATTICE_SCALING, count_bounds_hold, ehrhart_fit, lattice_point_count, volume,
)
from services.tails import box_oracle_tail, exact_tail
from utils.config import Config
from utils.errors import ConsistencyError, QsiSetError, ResourceLimitError
from utils.logger import log_run_event
from utils.output import emit_document

logger = logging.getLogger(__name__)

ORACLE_ABS_TOL = 1e-10
ORACLE_MAX_DIMENSION = 3
ORACLE_M = (1, 2, 3, 5, 10, 20, 50)
SUM_BOUND_DIMENSIONS = (1, 2, 4, 8, 20)
PREASYMPTOTIC_N = 20
PREASYMPTOTIC_RATIO = 1.5
POLYLOG_CLOSED_TOL = 1e-14
POLYLOG_MPMATH_TOL = 1e-12
VOLUME_EXACT_TOL = 1e-9
STECHKIN_LEVELS = 20
SANDWICH_J_MAX = 40
OPTIMALITY_MAX_DIMENSION = 4
OPTIMALITY_MAX_M = 6
OPTIMALITY_TOL = 1e-12


@dataclass
class SuiteResult:
    suite: str
    status: str = 'pass'
    checked: int = 0
    violations: List[Dict] = field(default_factory=list)
    notes: Dict = field(default_factory=dict)

    def expect(self, ok: bool, **detail):
        self.checked += 1
        if not ok:
            self.violations.append(detail)
            self.status = 'fail'

    def skip(self, reason: str):
        self.status = 'skipped'
        self.notes['reason'] = reason

    def to_dict(self):
        return {'suite': self.suite, 'status': self.status, 'checked': self.checked,
                'violations': self.violations[:20], 'violation_count': len(self.violations), 'notes': self.notes}


# ----------------------------------------------------------------------
# Suites
# ----------------------------------------------------------------------

def suite_assumptions(model, args) -> SuiteResult:
    result = SuiteResult('assumptions')
    report = check_assumptions(model, seed=args.seed)
    result.notes.update(report.to_dict())
    result.expect(report.c_est > 0, check='c_est > 0', value=report.c_est)
    if report.zero_deviation > 0:
        result.notes['advisory'] = f"b(0) = {report.b_at_zero!r} differs from 0"
    return result


def suite_oracles(model, args) -> SuiteResult:
    result = SuiteResult('oracles')
    if model.dimension > ORACLE_MAX_DIMENSION:
        result.skip(f"box oracle runs for N <= {ORACLE_MAX_DIMENSION}")
        return result
    for M in ORACLE_M:
        computed = exact_tail(model, M).tail
        try:
            oracle = box_oracle_tail(model, M)
        except ResourceLimitError as e:
            if result.status != 'fail':
                result.skip(str(e))
            result.notes.update({'limit': e.limit, 'stopped_at_M': M})
            break
        result.expect(abs(computed - oracle) <= ORACLE_ABS_TOL, M=M, exact=computed, oracle=oracle)
    return result


def suite_ehrhart(model, args) -> SuiteResult:
    result = SuiteResult('ehrhart')
    if not model.is_rational_homogeneous:
        result.skip('model is not homogeneous with rational weights')
        return result
    # a forced period that fails raises ConsistencyError out of the suite
    qp = ehrhart_fit(model, period=args.period)
    sigma = lattice_point_count(model)
    result.notes.update({'q': qp.q, 'volume': str(qp.leading), 'sigma': sigma,
                         'verified_points': len(qp.verified_points)})
    result.expect(len(qp.verified_points) >= 2 * qp.q, check='held-out points >= 2q')
    for j in count_bounds_hold(qp, sigma, qp.fitted_points):
        result.expect(False, check='|P| j^N <= E*(j) <= sigma j^N', j=j)
    result.checked += len(qp.fitted_points)
    if model.family == WEIGHTED_LINEAR:
        analytic = volume(model, method=ANALYTIC_SIMPLEX).volume
        result.expect(abs(float(qp.leading) - analytic) <= VOLUME_EXACT_TOL * analytic,
                      check='leading coefficient = analytic volume', fitted=float(qp.leading), analytic=analytic)
    return result


def suite_volume(model, args) -> SuiteResult:
    result = SuiteResult('volume')
    if model.family == WEIGHTED_LINEAR or (model.family == SUP_AFFINE and model.is_rational_homogeneous):
        reference = volume(model).volume
        hull = volume(model, method=CONVEX_HULL).volume
        result.notes.update({'volume': reference, 'convex_hull': hull})
        result.expect(abs(reference - hull) <= VOLUME_EXACT_TOL * reference, check='convex hull volume', reference=reference, hull=hull)
        return result
    if model.dimension > ORACLE_MAX_DIMENSION:
        result.skip(f"lattice scaling cross-check runs for N <= {ORACLE_MAX_DIMENSION}")
        return result
    scaled = volume(model, method=LATTICE_SCALING, tol=args.tol)
    result.notes.update(scaled.to_dict())
    if model.family == LEGENDRE_SQRT:
        analytic = volume(model, method=ANALYTIC_SIMPLEX).volume
        result.expect(abs(scaled.volume - analytic) <= 10 * Config.VOLUME_TOL * analytic,
                      check='lattice scaling vs analytic', scaled=scaled.volume, analytic=analytic)
    else:
        result.expect(scaled.volume > 0, check='volume > 0', scaled=scaled.volume)
    return result


def suite_sum_bounds(model, args) -> SuiteResult:
    result = SuiteResult('sum-bounds')
    for n in SUM_BOUND_DIMENSIONS:
        for J in range(1, 3 * n + 1):
            exact = sum_jN_exact(J, n)
            result.expect(sum_jN_lower(J, n) <= exact, N=n, J=J, check='lower')
            for L in sorted({2, n + 1}):
                if J >= sum_jN_threshold(n, L):
                    bound = sum_jN_bound(J, n, L)
                    result.expect(exact <= bound, N=n, J=J, L=L, exact=exact, bound=bound)
    return result


def suite_preasymptotic(model, args) -> SuiteResult:
    result = SuiteResult('preasymptotic')
    n = PREASYMPTOTIC_N
    for J in range(1, n + 2):
        exact = sum_jN_exact(J, n)
        bound = pre_asymptotic_sum_bound(J, n)
        result.expect(bound >= exact, N=n, J=J, bound=bound, exact=exact)
        if J <= 5:
            result.expect(bound / exact <= PREASYMPTOTIC_RATIO, N=n, J=J, ratio=bound / exact)
    if model.family == WEIGHTED_LINEAR and len(set(model.lam)) == 1:
        sigma = lattice_point_count(model)
        max_M = count_superlevel(model, float(model.dimension))
        levels = list(range(model.dimension + 1))
        for J, M in zip(levels, level_cardinalities(model, levels)):
            tail = exact_tail(model, M).tail / model.prefactor
            bound = pre_asymptotic_tail_bound(M, model.dimension, sigma, max_M=max_M)
            result.expect(bound >= tail, J=J, M=M, bound=bound, exact=tail)
    return result


def suite_stechkin(model, args) -> SuiteResult:
    result = SuiteResult('stechkin')
    if model.family != WEIGHTED_LINEAR:
        result.skip('Stechkin bounds apply to WeightedLinear models')
        return result
    levels = list(range(STECHKIN_LEVELS + 1))
    for J, M in zip(levels, level_cardinalities(model, levels)):
        tail = exact_tail(model, M).tail / model.prefactor
        for p in Config.DEFAULT_P_GRID:
            bound = stechkin(M, model.lam, p)
            result.expect(bound >= tail, J=J, M=M, p=p, bound=bound, exact=tail)
    return result


def suite_polylog(model, args) -> SuiteResult:
    result = SuiteResult('polylog')
    closed = {
        0: lambda z: z / (1 - z),
        1: lambda z: z / (1 - z) ** 2,
        2: lambda z: z * (1 + z) / (1 - z) ** 3,
        3: lambda z: z * (1 + 4 * z + z * z) / (1 - z) ** 4,
    }
    for n, form in closed.items():
        for z in (0.1, 0.5, 1 / math.e, 0.9):
            value, expected = polylog_neg(n, z), form(z)
            result.expect(abs(value - expected) <= POLYLOG_CLOSED_TOL * expected, N=n, z=z, value=value, expected=expected)
    for n in (4, 8, 12, 20):
        value = polylog_neg(n, 1 / math.e)
        expected = float(mpmath.polylog(-n, mpmath.e ** -1))
        result.expect(abs(value - expected) <= POLYLOG_MPMATH_TOL * expected, N=n, value=value, expected=expected)
    return result


def suite_sandwich(model, args) -> SuiteResult:
    result = SuiteResult('sandwich')
    if not model.is_rational_homogeneous:
        result.skip('model is not homogeneous with rational weights')
        return result
    qp = ehrhart_fit(model, period=args.period)
    volP = float(qp.leading)
    n = model.dimension
    levels = list(range(SANDWICH_J_MAX + 1))
    cards = level_cardinalities(model, levels)
    tails = {}
    floors = {}
    for eps in Config.DEFAULT_EPSILONS:
        floor = min_cardinality(model, eps, qp).M
        floors[f"{eps:g}"] = floor
        for J, M in zip(levels, cards):
            if M < floor:
                continue
            if M not in tails:
                tails[M] = exact_tail(model, M).tail / model.prefactor
            lower = lower_asymptotic(M, n, volP, qp.q)
            upper = upper_asymptotic(M, n, volP, eps)
            result.expect(lower <= tails[M] <= upper, J=J, M=M, eps=eps, lower=lower, exact=tails[M], upper=upper)
    result.notes.update({'q': qp.q, 'volume': volP, 'M_eps': floors, 'J_max': SANDWICH_J_MAX})
    return result


def suite_optimality(model, args) -> SuiteResult:
    result = SuiteResult('optimality')
    if model.dimension > OPTIMALITY_MAX_DIMENSION:
        result.skip(f"downward closed sets are enumerated for N <= {OPTIMALITY_MAX_DIMENSION}")
        return result
    for M in range(1, OPTIMALITY_MAX_M + 1):
        chosen = build_quasi_optimal(model, M)
        head = math.fsum(math.exp(-b) for b in chosen.b_values)
        candidates = downward_closed_sets(model.dimension, M)
        best = max(math.fsum(math.exp(-b_scalar(model, nu)) for nu in members) for members in candidates)
        result.expect(head >= best - OPTIMALITY_TOL * best, M=M, head=head, best_downward_closed=best)
        if model.is_coordinate_monotone:
            result.expect(is_downward_closed(chosen.indices), M=M, check='Lambda_M downward closed')
            result.expect(abs(head - best) <= OPTIMALITY_TOL * best, M=M, head=head, best_downward_closed=best)
    result.notes['M_max'] = OPTIMALITY_MAX_M
    return result


SUITES: Dict[str, Callable] = {
    'assumptions': suite_assumptions,
    'oracles': suite_oracles,
    'ehrhart': suite_ehrhart,
    'volume': suite_volume,
    'sum-bounds': suite_sum_bounds,
    'preasymptotic': suite_preasymptotic,
    'stechkin': suite_stechkin,
    'polylog': suite_polylog,
    'sandwich': suite_sandwich,
    'optimality': suite_optimality,
}


def _suite_list(text: str) -> List[str]:
    names = [s.strip() for s in text.split(',') if s.strip()]
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown suites {unknown}; available: {', '.join(SUITES)}")
    return names


def register_check_command(subparsers):
    parser = subparsers.add_parser('check', help='Run the verification suites')
    add_model_argument(parser)
    parser.add_argument('--suite', type=_suite_list, default=None, help='Comma-separated suites (default: all)')
    parser.add_argument('--period', type=int, default=None, help='Force the Ehrhart period (no escalation)')
    parser.add_argument('--tol', type=float, default=None, help='Relative tolerance of lattice scaling')
    parser.add_argument('--seed', type=int, default=None, help='Seed for sampled assumption checks')
    parser.add_argument('--out', default=None, help='Output JSON report')
    parser.set_defaults(handler=cmd_check)
    return parser


def run_suites(model, args, names=None) -> List[SuiteResult]:
    results = []
    for name in names or list(SUITES):
        logger.info(f"check {model.model_id}: suite {name}")
        try:
            results.append(SUITES[name](model, args))
        except ConsistencyError:
            raise
        except QsiSetError as e:
            failed = SuiteResult(name, status='error')
            failed.notes.update(e.to_dict())
            results.append(failed)
    return results


def cmd_check(args):
    model = load_model(args)
    results = run_suites(model, args, args.suite)
    failures = [r.suite for r in results if r.status in ('fail', 'error')]
    report = {
        'model_id': model.model_id,
        'status': 'fail' if failures else 'pass',
        'suites': [r.to_dict() for r in results],
    }
    log_run_event('check', {'model': model.model_id, 'failures': failures})
    emit_document(report, out=args.out, provenance=provenance(args, model=model.to_dict()),
                  stream=None if args.out else sys.stdout)
    if failures:
        raise ConsistencyError(f"Verification failed for {model.model_id}: {', '.join(failures)}",
                               suites=failures, reason='check_failed')
    return 0
