"""
Closed-form truncation-error estimates for quasi-optimal index sets.

Includes:
- the asymptotic upper and lower bounds in terms of |P|, eps and the Ehrhart period
- the sum_{j >= J} j^N e^{-j} bounds and their pre-asymptotic counterpart
- polylogarithms of negative integer order
- Stechkin-type comparison bounds (weighted, optimized, isotropic, complex)
- theoretical and empirical minimum cardinalities

Every evaluator validates its regime and raises instead of clamping.
"""
import logging
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from services.bounds import BoundModel
from services.index_sets import level_cardinalities
from services.polytope import EhrhartQP, ehrhart_fit, exact_volume
from services.tails import exact_tail
from utils.config import Config
from utils.errors import ArgumentError, DomainError
from utils.logger import debug_log

logger = logging.getLogger(__name__)

E = math.e
E_RATIO = E / (E - 1.0)


def _require(condition, message):
    if not condition:
        raise ArgumentError(message)


def _positive(name, value):
    _require(isinstance(value, numbers.Real) and not isinstance(value, bool)
             and math.isfinite(float(value)) and value > 0, f"{name} must be a finite positive number, got {value!r}")
    return float(value)


def _positive_int(name, value, minimum=1):
    _require(isinstance(value, (int, np.integer)) and not isinstance(value, bool) and value >= minimum,
             f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _weights(lam):
    lam = tuple(float(x) for x in lam)
    _require(lam and all(math.isfinite(x) and x > 0 for x in lam), f"lambda must be positive, got {lam}")
    return lam


# ----------------------------------------------------------------------
# Asymptotic bounds
# ----------------------------------------------------------------------

def upper_constant(eps) -> float:
    """C_u(eps) = (4e + 4 eps e - 2) e / (e - 1)."""
    eps = 0.0 if eps == 0 else _positive('eps', eps)
    return (4.0 * E + 4.0 * eps * E - 2.0) * E_RATIO


def rate_factor(eps, N: int) -> float:
    """(1 + eps)^{-1/N}, the rate adjustment of the upper bound."""
    return (1.0 + _positive('eps', eps)) ** (-1.0 / _positive_int('N', N))


def xi_max() -> float:
    return (E - 1.0) / E


def upper_asymptotic(M, N: int, volP, eps, relaxed: bool = False) -> float:
    M = _positive('M', M)
    _require(M >= 1, f"M must be >= 1, got {M}")
    N = _positive_int('N', N)
    volP = _positive('volP', volP)
    eps = _positive('eps', eps)
    rate = math.exp((math.log(M) - math.log(volP) - math.log1p(eps)) / N)
    value = upper_constant(eps) * M * math.exp(-rate)
    return value * (N + 1) / 2.0 if relaxed else value


def lower_constant(N: int, volP, q: int) -> float:
    """C_l = 1/2 (2/3)^{1 - 1/N} N |P|^{1/N} q / (e^q - 1)."""
    N = _positive_int('N', N)
    volP = _positive('volP', volP)
    q = _positive_int('q', q)
    return 0.5 * (2.0 / 3.0) ** (1.0 - 1.0 / N) * N * volP ** (1.0 / N) * q / math.expm1(q)


def lower_asymptotic(M, N: int, volP, q: int) -> float:
    M = _positive('M', M)
    _require(M >= 1, f"M must be >= 1, got {M}")
    constant = lower_constant(N, volP, q)
    rate = math.exp((math.log(M) - math.log(float(volP))) / N)
    return constant * M ** (1.0 - 1.0 / N) * math.exp(-rate)


# ----------------------------------------------------------------------
# sum_{j >= J} j^N e^{-j}
# ----------------------------------------------------------------------

def sum_jN_threshold(N: int, L) -> float:
    """Smallest J for which the L-form bound is valid."""
    N = _positive_int('N', N)
    L = _positive('L', L)
    _require(L >= 2, f"L must be >= 2, got {L}")
    return max(1.0 / math.expm1(1.0 / N), L / math.expm1((L - 1.0) / N))


def sum_jN_bound(J, N: int, L=2) -> float:
    """L J^N e^{-J} e / (e - 1)."""
    J = _positive('J', J)
    threshold = sum_jN_threshold(N, L)
    if J < threshold:
        raise DomainError(f"sum_jN_bound with N={N}, L={L} needs J >= {threshold:.6g}, got J={J:g}",
                          threshold=threshold, reason='below_threshold')
    return L * math.exp(N * math.log(J) - J) * E_RATIO


def sum_jN_lower(J, N: int) -> float:
    """J^N e^{-J} e / (e - 1), a lower bound of the sum for every J."""
    J = _positive('J', J)
    _positive_int('N', N)
    return math.exp(N * math.log(J) - J) * E_RATIO


def _log_power_series(N: int, log_z: float, start: int, rel_tol: float) -> float:
    """fsum of j^N z^j for j >= start, stopped past the peak once terms fall below rel_tol * partial."""
    peak = N / -log_z
    terms = []
    partial = 0.0
    j = start
    while True:
        term = math.exp(N * math.log(j) + j * log_z) if j > 0 else float(N == 0)
        terms.append(term)
        partial += term
        if j > peak and term < rel_tol * partial:
            break
        j += 1
    return math.fsum(terms)


def sum_jN_exact(J: int, N: int) -> float:
    J = _positive_int('J', J)
    N = _positive_int('N', N, minimum=0)
    return _log_power_series(N, -1.0, J, Config.SUMJN_REL_TOL)


def polylog_neg(N: int, z) -> float:
    """Li_{-N}(z) = sum_{j >= 1} j^N z^j for 0 < z < 1."""
    N = _positive_int('N', N, minimum=0)
    z = _positive('z', z)
    _require(z < 1.0, f"z must lie in (0, 1), got {z}")
    return _log_power_series(N, math.log(z), 1, Config.POLYLOG_REL_TOL)


# ----------------------------------------------------------------------
# Pre-asymptotic bounds
# ----------------------------------------------------------------------

def pre_asymptotic_sum_bound(J: int, N: int) -> float:
    J = _positive_int('J', J)
    N = _positive_int('N', N)
    if J > N + 1:
        raise DomainError(f"Pre-asymptotic sum bound holds for J <= N + 1 = {N + 1}, got J={J}",
                          threshold=N + 1, reason='pre_asymptotic_regime')
    head = polylog_neg(N, 1.0 / E)
    if J == 1:
        return head
    correction = math.exp((N + 1) * math.log(J - 1) - math.log(N + 1) - (J - 1) * (N + 1) / (N + 2))
    return head - correction


def pre_asymptotic_tail_bound(M, N: int, sigma: int, max_M: int = None) -> float:
    """e sigma [Li_{-N}(1/e) - (M/sigma)^{(N+1)/N} exp(-(M/sigma)^{1/N} (N+1)/(N+2)) / (N+1)].

    `max_M` is #(P_N on the lattice); when given, larger M raise DomainError.
    """
    M = _positive('M', M)
    N = _positive_int('N', N)
    sigma = _positive_int('sigma', sigma)
    if max_M is not None and M > max_M:
        raise DomainError(f"Pre-asymptotic tail bound holds for M <= #P_N = {max_M}, got M={M:g}",
                          threshold=max_M, reason='pre_asymptotic_regime')
    ratio = M / sigma
    root = ratio ** (1.0 / N)
    correction = math.exp((N + 1) * math.log(root) - root * (N + 1) / (N + 2)) / (N + 1)
    value = E * sigma * (polylog_neg(N, 1.0 / E) - correction)
    if not value > 0:
        raise DomainError(f"Pre-asymptotic tail bound is not positive at M={M:g}", reason='pre_asymptotic_regime')
    return value


# ----------------------------------------------------------------------
# Stechkin-type comparison bounds
# ----------------------------------------------------------------------

def stechkin(M, lam: Sequence[float], p) -> float:
    """(prod 1 / (1 - e^{-p lam_i}))^{1/p} M^{1 - 1/p}."""
    M = _positive('M', M)
    lam = _weights(lam)
    p = _positive('p', p)
    _require(p < 1.0, f"p must lie in (0, 1), got {p}")
    log_factor = -math.fsum(math.log(-math.expm1(-p * x)) for x in lam)
    return math.exp(log_factor / p + (1.0 - 1.0 / p) * math.log(M))


def stechkin_optimized(M, N: int, lam: Sequence[float], xi) -> float:
    """M exp(-(1/e) (M prod lam)^{1/N} N xi)."""
    M = _positive('M', M)
    N = _positive_int('N', N)
    lam = _weights(lam)
    xi = _positive('xi', xi)
    _require(xi <= xi_max() + 1e-15, f"xi must lie in (0, (e-1)/e], got {xi}")
    root = math.exp((math.log(M) + math.fsum(math.log(x) for x in lam)) / N)
    return M * math.exp(-root * N * xi / E)


def iso_stechkin(M, N: int, lam, p) -> float:
    M = _positive('M', M)
    N = _positive_int('N', N)
    lam = _positive('lambda', lam)
    p = _positive('p', p)
    log_value = (-N * math.log(-math.expm1(-lam / 2.0)) - math.log(M) / p
                 - (N / p) * math.log(-math.expm1(-p * lam / 2.0)))
    return math.exp(log_value)


def iso_optimized(M, N: int, lam) -> float:
    M = _positive('M', M)
    N = _positive_int('N', N)
    lam = _positive('lambda', lam)
    c = Config.ISO_OPTIMIZED_CONSTANT
    if M <= c ** N:
        raise DomainError(f"iso_optimized needs M > {c}^N = {c ** N:.6g}, got M={M:g}",
                          threshold=c ** N, reason='below_threshold')
    eps = xi_max() * (1.0 - c / M ** (1.0 / N))
    return (-math.expm1(-lam / 2.0)) ** (-N) * math.exp(lam * N / (2.0 * E) * math.log1p(-eps) * M ** (1.0 / N))


def tangency_grid(size: int = None) -> np.ndarray:
    size = Config.TANGENCY_GRID_SIZE if size is None else size
    return np.geomspace(4.0 / size, 4.0, size)


def min_iso_stechkin(M, N: int, lam, grid: Sequence[float] = None) -> Tuple[float, float]:
    """Smallest iso_stechkin over a p grid in (0, 4], and its minimizer."""
    grid = tangency_grid() if grid is None else grid
    values = [(iso_stechkin(M, N, lam, float(p)), float(p)) for p in grid]
    return min(values)


def complex_bound(M, N: int, lam) -> float:
    """exp(-lam (M N!)^{1/N}) / (e^lam - 1)."""
    M = _positive('M', M)
    N = _positive_int('N', N)
    lam = _positive('lambda', lam)
    root = math.exp((math.log(M) + math.lgamma(N + 1)) / N)
    return math.exp(-lam * root) / math.expm1(lam)


def complex_level_bound(J, lam) -> float:
    """e^{-lam J} / (e^lam - 1)."""
    J = float(J)
    _require(J >= 0, f"J must be >= 0, got {J}")
    lam = _positive('lambda', lam)
    return math.exp(-lam * J) / math.expm1(lam)


# ----------------------------------------------------------------------
# Minimum cardinalities
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MinCardinality:
    model_id: str
    epsilon: float
    delta: int
    J: float
    M: int
    J_prime: float
    M_prime: int
    rate_factor: float
    scan_ceiling: int
    scan_start: int

    def to_dict(self):
        return {
            'model_id': self.model_id,
            'epsilon': self.epsilon,
            'Delta_eps': self.delta,
            'J_eps': self.J,
            'M_eps': self.M,
            'Jp_eps': self.J_prime,
            'Mp_eps': self.M_prime,
            'rate_factor': self.rate_factor,
            'scan_ceiling': self.scan_ceiling,
            'scan_start': self.scan_start,
        }


def _integer_root_ceiling(r: Fraction, k: int) -> int:
    """Smallest j >= 1 with j^k >= r."""
    j = max(1, math.floor(float(r) ** (1.0 / k)))
    while j > 1 and (j - 1) ** k >= r:
        j -= 1
    while j ** k < r:
        j += 1
    return j


def delta_scan(qp: EhrhartQP, eps) -> Tuple[int, int, int]:
    """Largest j >= 1 with E*(j) > (1 + eps)|P| j^N (0 if none), the dominance ceiling and the scan start.

    Beyond ceil(sum_i max_r |c_i(r)| / (eps |P|)) the lower-order terms cannot
    exceed eps |P| j^N. The scan starts lower, below the first j where every
    degree i < N has max_r |c_i(r)| j^i <= eps |P| j^N / N, and compares in
    integers over the common denominator of the shifted rows.
    """
    eps_exact = Fraction(_positive('eps', eps))
    volP = qp.leading
    ceiling = max(1, math.ceil(qp.lower_coefficient_mass() / (eps_exact * volP)))
    dominated = 1
    for i, m in enumerate(qp.lower_coefficient_maxima()):
        if m:
            dominated = max(dominated, _integer_root_ceiling(qp.N * m / (eps_exact * volP), qp.N - i))
    start = max(1, min(ceiling, dominated - 1))
    _, rows = qp.integer_rows((1 + eps_exact) * volP)
    debug_log('estimates', f"{qp.model_id}: eps={eps} scan from {start} (ceiling {ceiling})")
    for j in range(start, 0, -1):
        excess = 0
        for c in reversed(rows[j % qp.q]):
            excess = excess * j + c
        if excess > 0:
            return j, ceiling, start
    return 0, ceiling, start


def min_cardinality(model: BoundModel, eps, ehrhart: EhrhartQP = None) -> MinCardinality:
    if not model.is_rational_homogeneous:
        raise DomainError(f"{model.model_id}: minimum cardinalities need a homogeneous model with rational weights",
                          reason='not_rational_homogeneous')
    qp = ehrhart if ehrhart is not None else ehrhart_fit(model)
    if qp.N != model.dimension:
        raise ArgumentError(f"Ehrhart quasi-polynomial degree {qp.N} does not match dimension {model.dimension}")
    n = model.dimension
    delta, ceiling, start = delta_scan(qp, eps)
    j_eps = max(2.0 / math.expm1(1.0 / n), float(delta))
    j_prime = max(1.0 / math.expm1(1.0 / n), float(delta))
    result = MinCardinality(
        model_id=model.model_id,
        epsilon=float(eps),
        delta=delta,
        J=j_eps,
        M=int(qp.evaluate(math.ceil(j_eps))),
        J_prime=j_prime,
        M_prime=int(qp.evaluate(math.ceil(j_prime))),
        rate_factor=rate_factor(eps, n),
        scan_ceiling=ceiling,
        scan_start=start,
    )
    debug_log('estimates', f"{model.model_id}: eps={eps} Delta={delta} J={j_eps:.4g} M={result.M}")
    return result


@dataclass(frozen=True)
class LevelComparison:
    """Exact tails and the asymptotic upper bound on the level cardinalities M_J."""
    J: int
    M: int
    exact: float
    upper: float


def level_comparisons(model: BoundModel, eps, J_max: int, volP=None, tol: float = None) -> List[LevelComparison]:
    """exact_tail / prefactor against upper_asymptotic at every level J = 0..J_max."""
    J_max = _positive_int('J_max', J_max, minimum=0)
    volP = float(exact_volume(model)) if volP is None else _positive('volP', volP)
    levels = list(range(J_max + 1))
    out = []
    for J, M in zip(levels, level_cardinalities(model, levels)):
        tail = exact_tail(model, M, tol=tol).tail / model.prefactor
        out.append(LevelComparison(J=J, M=M, exact=tail, upper=upper_asymptotic(M, model.dimension, volP, eps)))
    return out


def empirical_min_cardinality(model: BoundModel, eps, J_max: int = 40, volP=None,
                              comparisons: List[LevelComparison] = None) -> Optional[Tuple[int, int]]:
    """(J, M_J) for the first level from which exact <= upper holds through J_max."""
    rows = comparisons if comparisons is not None else level_comparisons(model, eps, J_max, volP=volP)
    first = None
    for row in rows:
        if row.exact <= row.upper:
            if first is None:
                first = row
        else:
            first = None
    return (first.J, first.M) if first is not None else None


def stechkin_crossover(model: BoundModel, lam: Sequence[float], eps, J_max: int = 40,
                       p_grid: Sequence[float] = None, volP=None) -> Optional[int]:
    """First level J from which upper_asymptotic stays below min_p stechkin through J_max."""
    p_grid = Config.DEFAULT_P_GRID if p_grid is None else p_grid
    volP = float(exact_volume(model)) if volP is None else _positive('volP', volP)
    levels = list(range(J_max + 1))
    crossover = None
    for J, M in zip(levels, level_cardinalities(model, levels)):
        upper = upper_asymptotic(M, model.dimension, volP, eps)
        best = min(stechkin(M, lam, p) for p in p_grid)
        if upper < best:
            if crossover is None:
                crossover = J
        else:
            crossover = None
    logger.info(f"Stechkin crossover for {model.model_id} at eps={eps}: J={crossover}")
    return crossover

