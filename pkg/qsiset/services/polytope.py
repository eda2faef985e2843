"""
The limiting set P = lim P_tau / tau: its volume, its vertices, its lattice
point count sigma, and Ehrhart quasi-polynomials E*(j) = #(jP on the lattice)
for homogeneous models with rational weights.

Ehrhart quasi-polynomials are fitted by counting: for each residue r of j
modulo the period q an exact rational interpolation through N + 1 counts,
then verified on held-out dilations with integer equality.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull
from scipy.special import xlogy

from services.bounds import (
    BoundModel, FACTORIAL_ALPHA, LEGENDRE_SQRT, SUP_AFFINE, WEIGHTED_LINEAR,
)
from services.index_sets import level_histogram
from utils.config import Config
from utils.errors import ArgumentError, ConsistencyError, DomainError, ResourceLimitError
from utils.logger import debug_log
from utils.rationals import (
    evaluate_polynomial, lcm_of_denominators, polynomial_through, solve_exact,
)

logger = logging.getLogger(__name__)

ANALYTIC_SIMPLEX = 'analytic_simplex'
LATTICE_SCALING = 'lattice_scaling'
CONVEX_HULL = 'convex_hull'
EHRHART = 'ehrhart'
VOLUME_METHODS = ('auto', ANALYTIC_SIMPLEX, LATTICE_SCALING, CONVEX_HULL, EHRHART)

VERTEX_COMBINATION_LIMIT = 2_000_000
FLOAT_FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class LimitingSet:
    model_id: str
    volume: float
    method: str
    tau_used: float
    error_estimate: float
    exact_volume: Optional[Fraction] = None

    def to_dict(self):
        return {
            'model_id': self.model_id,
            'volume': self.volume,
            'method': self.method,
            'tau_used': self.tau_used,
            'error_estimate': self.error_estimate,
            'exact_volume': str(self.exact_volume) if self.exact_volume is not None else None,
        }


@dataclass(frozen=True)
class EhrhartQP:
    model_id: str
    N: int
    q: int
    coeffs: Tuple[Tuple[Fraction, ...], ...]
    fitted_points: Tuple[int, ...] = ()
    verified_points: Tuple[int, ...] = ()
    vertices: int = 0
    metadata: Dict = field(default_factory=dict, compare=False)

    @property
    def leading(self) -> Fraction:
        return self.coeffs[0][self.N]

    @property
    def volume(self) -> float:
        return float(self.leading)

    def evaluate(self, j: int):
        """E*(j); an int whenever the value is integral."""
        if j < 0:
            raise ArgumentError(f"Ehrhart quasi-polynomial is evaluated at j >= 0, got {j}")
        value = evaluate_polynomial(self.coeffs[j % self.q], j)
        return int(value) if value.denominator == 1 else value

    def lower_coefficient_maxima(self) -> Tuple[Fraction, ...]:
        """max_r |c_i(r)| for each i < N."""
        return tuple(max(abs(row[i]) for row in self.coeffs) for i in range(self.N))

    def lower_coefficient_mass(self) -> Fraction:
        """sum over i < N of max_r |c_i(r)|."""
        return sum(self.lower_coefficient_maxima(), Fraction(0))

    def integer_rows(self, leading_shift: Fraction = Fraction(0)) -> Tuple[int, Tuple[Tuple[int, ...], ...]]:
        """(D, rows) with D (E*(j) - leading_shift j^N) = sum_i rows[j % q][i] j^i in integers."""
        shifted = [list(row[:self.N]) + [row[self.N] - leading_shift] for row in self.coeffs]
        D = lcm_of_denominators([c for row in shifted for c in row])
        return D, tuple(tuple(int(c * D) for c in row) for row in shifted)

    def to_dict(self):
        return {
            'model_id': self.model_id,
            'N': self.N,
            'q': self.q,
            'rows': [[str(c) for c in row] for row in self.coeffs],
            'volume': self.volume,
            'volume_exact': str(self.leading),
            'fitted_points': list(self.fitted_points),
            'verified_points': list(self.verified_points),
            'vertices': self.vertices,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data):
        try:
            coeffs = tuple(tuple(Fraction(c) for c in row) for row in data['rows'])
            return cls(model_id=data.get('model_id', ''), N=int(data['N']), q=int(data['q']), coeffs=coeffs,
                       verified_points=tuple(data.get('verified_points', ())),
                       fitted_points=tuple(data.get('fitted_points', ())),
                       vertices=int(data.get('vertices', 0)))
        except (KeyError, ValueError, ZeroDivisionError) as e:
            raise ArgumentError(f"Invalid Ehrhart document: {e}")


# ----------------------------------------------------------------------
# Vertices and periods
# ----------------------------------------------------------------------

def _constraint_rows(model: BoundModel):
    """Rows w with P = {nu >= 0 : <w, nu> <= 1 for every row} for the linear families."""
    if model.family == WEIGHTED_LINEAR:
        exact = [model.rational_weights] if model.rational_weights is not None else None
        return [model.lam], exact
    if model.family == SUP_AFFINE:
        rows = [t.weights for t in model.affine_terms]
        exact = None
        if all(t.rational_weights is not None for t in model.affine_terms):
            exact = [t.rational_weights for t in model.affine_terms]
        return rows, exact
    if model.family == LEGENDRE_SQRT:
        exact = None
        if model.rational_weights is not None:
            exact = [tuple(2 * r for r in model.rational_weights)]
        return [tuple(2.0 * lam_i for lam_i in model.lam)], exact
    raise DomainError(f"{model.model_id}: the limiting set of {model.family} is not a polytope",
                      reason='not_polytope')


def limiting_vertices(model: BoundModel) -> List[tuple]:
    """Vertices of the limiting polytope, exact Fractions when the weights are rational.

    Every choice of N tight constraints among the rows and the coordinate
    planes is solved in floating point in one batch; feasible solutions are
    deduplicated and re-solved exactly.
    """
    rows, exact_rows = _constraint_rows(model)
    n = model.dimension
    k = len(rows)
    a_float = np.vstack([np.asarray(rows, dtype=float), -np.eye(n)])
    b_float = np.concatenate([np.ones(k), np.zeros(n)])

    total = math.comb(k + n, n)
    if total > VERTEX_COMBINATION_LIMIT:
        raise ResourceLimitError(f"{total} constraint subsets exceed the vertex enumeration limit",
                                 ceiling='VERTEX_COMBINATION_LIMIT', limit=VERTEX_COMBINATION_LIMIT,
                                 reason='vertex_limit')

    subsets = np.array(list(combinations(range(k + n), n)), dtype=int)
    systems = a_float[subsets]
    rhs = b_float[subsets]
    regular = np.abs(np.linalg.det(systems)) > 1e-12
    subsets, systems, rhs = subsets[regular], systems[regular], rhs[regular]
    points = np.linalg.solve(systems, rhs[..., None])[..., 0]
    feasible = np.all(points @ a_float.T <= b_float + FLOAT_FEASIBILITY_TOL, axis=1)

    seen = {}
    for subset, point in zip(subsets[feasible], points[feasible]):
        key = tuple(np.round(point, 9) + 0.0)
        seen.setdefault(key, subset)

    if exact_rows is None:
        return sorted(tuple(float(x) for x in key) for key in seen)

    a_exact = [list(r) for r in exact_rows] + [[Fraction(-1 if i == j else 0) for j in range(n)] for i in range(n)]
    b_exact = [Fraction(1)] * k + [Fraction(0)] * n
    vertices = set()
    for subset in seen.values():
        solution = solve_exact([a_exact[i] for i in subset], [b_exact[i] for i in subset])
        if solution is None:
            continue
        if all(sum(a * x for a, x in zip(row, solution)) <= rhs_i for row, rhs_i in zip(a_exact, b_exact)):
            vertices.add(tuple(solution))
    debug_log('ehrhart', f"{model.model_id}: {len(vertices)} vertices from {len(subsets)} regular subsets")
    return sorted(vertices)


def period_heuristic(model: BoundModel) -> int:
    """lcm of vertex coordinate denominators; for WeightedLinear those of 1/lam_i."""
    if model.family == WEIGHTED_LINEAR:
        return lcm_of_denominators([1 / r for r in model.rational_weights])
    return lcm_of_denominators([x for v in limiting_vertices(model) for x in v])


# ----------------------------------------------------------------------
# Ehrhart fitting
# ----------------------------------------------------------------------

def _fit_nodes(q: int, n: int) -> Dict[int, List[int]]:
    nodes = {}
    for r in range(q):
        start = 1 if r == 0 else 0
        nodes[r] = [r + k * q for k in range(start, start + n + 1)]
    return nodes


def ehrhart_fit(model: BoundModel, max_verify: int = None, period: int = None) -> EhrhartQP:
    """Fit and verify E*(j) = #(P_j on the lattice) for a homogeneous rational model.

    With `period` given the fit uses exactly that period and fails instead of
    escalating.
    """
    if not model.is_rational_homogeneous:
        raise DomainError(f"{model.model_id}: Ehrhart fitting needs a homogeneous model with rational weights",
                          reason='not_rational_homogeneous')
    if period is not None and period < 1:
        raise ArgumentError(f"period must be a positive integer, got {period}")
    n = model.dimension
    escalate = period is None
    vertices = 0
    if period is None:
        q = period_heuristic(model)
        if model.family != WEIGHTED_LINEAR:
            vertices = len(limiting_vertices(model))
    else:
        q = period
    initial_q = q

    while True:
        verify = max(max_verify or 0, 2 * q, Config.EHRHART_MIN_VERIFY)
        nodes = _fit_nodes(q, n)
        fit_top = max(j for js in nodes.values() for j in js)
        held_out = list(range(fit_top + 1, fit_top + 1 + verify))
        histogram = level_histogram(model, float(held_out[-1]))
        cumulative = histogram.cumulative()
        d = histogram.denominator

        def count(j):
            return cumulative[j * d]

        rows = tuple(tuple(polynomial_through(nodes[r], [count(j) for j in nodes[r]])) for r in range(q))
        candidate = EhrhartQP(model_id=model.model_id, N=n, q=q, coeffs=rows,
                              fitted_points=tuple(sorted(j for js in nodes.values() for j in js)),
                              verified_points=tuple(held_out), vertices=vertices,
                              metadata={'initial_period': initial_q})

        mismatches = [j for j in held_out if candidate.evaluate(j) != count(j)]
        leading = {row[n] for row in rows}
        if not mismatches and len(leading) == 1:
            debug_log('ehrhart', f"{model.model_id}: period {q} verified on {len(held_out)} dilations")
            logger.info(f"Ehrhart fit for {model.model_id}: q={q}, leading={candidate.leading}")
            return candidate

        logger.warning(f"Ehrhart fit for {model.model_id} with q={q} failed at j={mismatches[:5]}"
                       f"{' (residue rows disagree on the leading term)' if len(leading) > 1 else ''}")
        if not escalate or 2 * q > Config.EHRHART_PERIOD_CAP:
            raise ConsistencyError(
                f"Ehrhart quasi-polynomial of {model.model_id} with period {q} does not reproduce the lattice counts",
                period=q, mismatches=mismatches[:10], reason='ehrhart_verification')
        q *= 2


# ----------------------------------------------------------------------
# Lattice counts of dilations of P
# ----------------------------------------------------------------------

class _ScaledCounter:
    """Counts lattice nu with nu / tau in P, one coordinate prefix at a time."""

    def __init__(self, model: BoundModel, tau: float, ceiling: int):
        self.model = model
        self.tau = tau
        self.ceiling = ceiling
        self.n = model.dimension
        self.nodes = 0
        if model.family == FACTORIAL_ALPHA:
            lam = np.asarray(model.weights)
            self.lam = lam
            # f(nu) >= sum_i ((1 - p) lam_i - log sum alpha^p) nu_i
            self.envelopes = []
            for p in tuple(Config.FACTORIAL_MARGINS) + (1.0,):
                s = math.fsum(a ** p for a in model.alpha)
                if s <= 1.0:
                    self.envelopes.append(tuple((1.0 - p) * lam_i - math.log(s) for lam_i in lam))
        else:
            rows, _ = _constraint_rows(model)
            self.rows = [tuple(r) for r in rows]

    def _bump(self, amount=1):
        self.nodes += amount
        if self.nodes > self.ceiling:
            raise ResourceLimitError(f"Lattice count of {self.tau} * P exceeds MEMBER_CEILING={self.ceiling}",
                                     ceiling='MEMBER_CEILING', limit=self.ceiling, reason='member_ceiling')

    def count(self) -> int:
        if self.model.family == FACTORIAL_ALPHA:
            return self._factorial(0, [], [0.0] * len(self.envelopes))
        return self._linear(0, [0.0] * len(self.rows))

    def _linear(self, depth, partials) -> int:
        tau = self.tau
        if depth == self.n - 1:
            slack = min((tau - p) / row[depth] for p, row in zip(partials, self.rows))
            if slack < 0:
                return 0
            self._bump()
            return math.floor(slack + 1e-9) + 1
        total = 0
        v = 0
        while True:
            nxt = [p + row[depth] * v for p, row in zip(partials, self.rows)]
            if max(nxt) > tau + 1e-9 * max(1.0, tau):
                return total
            self._bump()
            total += self._linear(depth + 1, nxt)
            v += 1

    def _factorial(self, depth, prefix, partials) -> int:
        half = 0.5 * self.tau
        if depth == self.n - 1:
            steps = [e[depth] for e in self.envelopes]
            top = min((half - p) / s for p, s in zip(partials, steps))
            if top < 0:
                return 0
            xs = np.arange(0, math.floor(top) + 1, dtype=float)
            self._bump(len(xs))
            head = np.asarray(prefix, dtype=float)
            total = head.sum() + xs
            g = xlogy(total, total) - np.sum(xlogy(head, head)) - xlogy(xs, xs)
            f = float(head @ self.lam[:depth]) + self.lam[depth] * xs - g
            return int(np.count_nonzero(f < half))
        total = 0
        v = 0
        while True:
            nxt = [p + e[depth] * v for p, e in zip(partials, self.envelopes)]
            if max(nxt) >= half:
                return total
            self._bump()
            prefix.append(v)
            total += self._factorial(depth + 1, prefix, nxt)
            prefix.pop()
            v += 1


def scaled_lattice_count(model: BoundModel, tau: float, ceiling: int = None) -> int:
    """#(tau * P on the lattice)."""
    if not tau > 0:
        raise ArgumentError(f"tau must be positive, got {tau}")
    ceiling = Config.MEMBER_CEILING if ceiling is None else ceiling
    if model.is_rational_homogeneous and float(tau).is_integer():
        return level_histogram(model, tau).count_at(tau)
    return _ScaledCounter(model, float(tau), ceiling).count()


def lattice_point_count(model: BoundModel) -> int:
    """sigma = #(P on the lattice)."""
    return scaled_lattice_count(model, 1.0)


# ----------------------------------------------------------------------
# Volume
# ----------------------------------------------------------------------

def _analytic_simplex(model: BoundModel) -> LimitingSet:
    n = model.dimension
    if model.family == WEIGHTED_LINEAR:
        scale = 1
        exact_weights = model.rational_weights
    elif model.family == LEGENDRE_SQRT:
        scale = 2 ** n
        exact_weights = model.rational_weights
    else:
        raise DomainError(f"{model.model_id}: analytic_simplex applies to WeightedLinear and LegendreSqrt only",
                          reason='no_analytic_volume')
    exact = None
    if exact_weights is not None:
        exact = Fraction(1, scale * math.factorial(n))
        for r in exact_weights:
            exact /= r
        value = float(exact)
    else:
        value = math.exp(-math.log(scale) - math.lgamma(n + 1) - math.fsum(math.log(w) for w in model.lam))
    return LimitingSet(model_id=model.model_id, volume=value, method=ANALYTIC_SIMPLEX, tau_used=0.0,
                       error_estimate=0.0, exact_volume=exact)


def _convex_hull(model: BoundModel) -> LimitingSet:
    vertices = np.array([[float(x) for x in v] for v in limiting_vertices(model)])
    if model.dimension == 1:
        value = float(vertices.max())
    else:
        value = float(ConvexHull(vertices).volume)
    return LimitingSet(model_id=model.model_id, volume=value, method=CONVEX_HULL, tau_used=0.0,
                       error_estimate=abs(value) * 1e-12)


def _lattice_scaling(model: BoundModel, tol: float) -> LimitingSet:
    n = model.dimension
    tau = float(Config.VOLUME_TAU_START)
    previous_density = None
    previous_extrapolant = None
    best = None
    while True:
        try:
            density = scaled_lattice_count(model, tau) / tau ** n
        except ResourceLimitError as e:
            raise ResourceLimitError(
                f"Volume of {model.model_id} did not reach tol={tol} before the count ceiling: {e.message}",
                ceiling=e.ceiling, limit=e.limit, best_estimate=best, reason='volume_tol_unreachable')
        if previous_density is not None:
            extrapolant = 2.0 * density - previous_density
            best = extrapolant
            if previous_extrapolant is not None:
                change = abs(extrapolant - previous_extrapolant)
                debug_log('volume', f"{model.model_id}: tau={tau:g} density={density:.8g} extrapolant={extrapolant:.8g} change={change:.3g}")
                if change < tol * abs(extrapolant):
                    return LimitingSet(model_id=model.model_id, volume=extrapolant, method=LATTICE_SCALING,
                                       tau_used=tau, error_estimate=change)
            previous_extrapolant = extrapolant
        previous_density = density
        tau *= 2.0
        if tau > Config.VOLUME_TAU_CAP:
            raise ResourceLimitError(
                f"Volume of {model.model_id} did not reach tol={tol} by tau={Config.VOLUME_TAU_CAP}",
                ceiling='VOLUME_TAU_CAP', limit=Config.VOLUME_TAU_CAP, best_estimate=best,
                reason='volume_tol_unreachable')


def volume(model: BoundModel, method: str = 'auto', tol: float = None) -> LimitingSet:
    """|P| by the requested method; 'auto' picks the most exact one available."""
    tol = Config.VOLUME_TOL if tol is None else float(tol)
    if not tol > 0:
        raise ArgumentError(f"tol must be positive, got {tol}")
    if method not in VOLUME_METHODS:
        raise ArgumentError(f"Unknown volume method {method!r}; expected one of {', '.join(VOLUME_METHODS)}")

    if method == 'auto':
        if model.family in (WEIGHTED_LINEAR, LEGENDRE_SQRT):
            method = ANALYTIC_SIMPLEX
        elif model.is_rational_homogeneous:
            method = EHRHART
        elif model.family == SUP_AFFINE:
            method = CONVEX_HULL
        else:
            method = LATTICE_SCALING

    if method == ANALYTIC_SIMPLEX:
        return _analytic_simplex(model)
    if method == CONVEX_HULL:
        return _convex_hull(model)
    if method == EHRHART:
        qp = ehrhart_fit(model)
        return LimitingSet(model_id=model.model_id, volume=qp.volume, method=EHRHART, tau_used=float(qp.verified_points[-1]),
                           error_estimate=0.0, exact_volume=qp.leading)
    return _lattice_scaling(model, tol)


def exact_volume(model: BoundModel) -> Fraction:
    """|P| as a Fraction for rational homogeneous models."""
    if model.family == WEIGHTED_LINEAR and model.rational_weights is not None:
        return _analytic_simplex(model).exact_volume
    return ehrhart_fit(model).leading


def count_bounds_hold(qp: EhrhartQP, sigma: int, points: Sequence[int]) -> List[int]:
    """Dilations j where |P| j^N <= E*(j) <= sigma j^N fails (empty when both lattice bounds hold)."""
    bad = []
    for j in points:
        value = qp.evaluate(j)
        if value < qp.leading * j ** qp.N or (j >= 1 and value > sigma * j ** qp.N):
            bad.append(j)
    return bad
