"""
Exact truncation errors sum_{nu not in Lambda_M} prefactor * e^{-b(nu)}.

The tail is summed directly over the indices outside Lambda_M up to a level
T and closed with an analytic remainder bound for b > T, so it keeps its
relative accuracy even when it is many orders of magnitude below the total.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from services.bounds import (
    BoundModel, FACTORIAL_ALPHA, LEGENDRE_SQRT, WEIGHTED_LINEAR, b_scalar, eval_b_many,
)
from services.index_sets import build_quasi_optimal, enumerate_superlevel, level_histogram
from utils.config import Config
from utils.errors import ArgumentError, ResourceLimitError
from utils.logger import debug_log

logger = logging.getLogger(__name__)

CLOSED_FORM = 'closed_form'
CONTROLLED_ENUMERATION = 'controlled_enumeration'

# fsum is correctly rounded; a few ulps cover the exp() evaluations feeding it
ROUNDING_ULPS = 8 * 2.0 ** -52


class TotalSum(NamedTuple):
    value: float
    method: str
    abs_error: float


@dataclass(frozen=True)
class TailValue:
    model_id: str
    M: int
    head_sum: float
    total_sum: float
    tail: float
    abs_error_bound: float
    method: str
    head_method: str
    remainder_level: float

    def to_dict(self):
        return {
            'model_id': self.model_id,
            'M': self.M,
            'head_sum': self.head_sum,
            'total_sum': self.total_sum,
            'tail': self.tail,
            'abs_error_bound': self.abs_error_bound,
            'method': self.method,
            'head_method': self.head_method,
            'remainder_level': self.remainder_level,
        }


# ----------------------------------------------------------------------
# Remainder envelopes
# ----------------------------------------------------------------------

def _splits(model: BoundModel) -> List[Tuple[float, float]]:
    """Pairs (theta, S) with sum_{b > T} e^{-b} <= e^{-theta T} * S for every T."""
    out = []
    if model.family == FACTORIAL_ALPHA:
        # e^{-b} = (|nu|!/nu! alpha^nu)^2 and the base is <= 1, so for
        # 2(1 - theta) = p the envelope sum is at most 1 / (1 - sum alpha^p)
        for p in sorted(set(Config.FACTORIAL_MARGINS) | {1.0}):
            s = math.fsum(a ** p for a in model.alpha)
            if s < 1.0:
                out.append((1.0 - p / 2.0, 1.0 / (1.0 - s)))
        return out

    for theta in Config.TAIL_THETA_GRID:
        s = 1.0 - theta
        if model.family == WEIGHTED_LINEAR:
            envelope = math.prod(1.0 / -math.expm1(-s * lam_i) for lam_i in model.lam)
        elif model.family == LEGENDRE_SQRT:
            # (2n + 1)^s <= 2n + 1 for s <= 1
            envelope = 1.0
            for lam_i in model.lam:
                x = math.exp(-2.0 * s * lam_i)
                envelope *= (1.0 + x) / (1.0 - x) ** 2
        else:
            envelope = min(
                math.exp(s * term.offset) * math.prod(1.0 / -math.expm1(-s * w) for w in term.weights)
                for term in model.affine_terms
            )
        out.append((theta, envelope))
    return out


def remainder_bound(model: BoundModel, T: float) -> float:
    """Upper bound on sum_{b(nu) > T} e^{-b(nu)} (without the prefactor)."""
    return min(math.exp(-theta * T) * envelope for theta, envelope in _splits(model))


def remainder_level(model: BoundModel, target: float) -> float:
    """Smallest level T on the split grid with remainder_bound(T) <= target."""
    if not target > 0:
        raise ArgumentError(f"Remainder target must be positive, got {target}")
    return max(0.0, min(math.log(envelope / target) / theta for theta, envelope in _splits(model)))


# ----------------------------------------------------------------------
# Totals
# ----------------------------------------------------------------------

def _check_tol(tol):
    tol = Config.TAIL_REL_TOL if tol is None else float(tol)
    if not (tol > 0 and math.isfinite(tol)):
        raise ArgumentError(f"tol must be positive, got {tol}")
    return tol


def _closed_form_total(model: BoundModel):
    if model.family == WEIGHTED_LINEAR:
        return math.prod(1.0 / -math.expm1(-lam_i) for lam_i in model.lam)
    if model.family == LEGENDRE_SQRT:
        value = 1.0
        for lam_i in model.lam:
            x = math.exp(-2.0 * lam_i)
            value *= (1.0 + x) / (1.0 - x) ** 2
        return value
    return None


def _sum_below(model: BoundModel, T: float) -> Tuple[float, int]:
    """fsum of e^{-b} over b <= T and the number of terms."""
    if model.is_rational_homogeneous:
        histogram = level_histogram(model, T)
        d = histogram.denominator
        terms = [c * math.exp(-v / d) for v, c in histogram.occupied_levels()]
        return math.fsum(terms), sum(histogram.counts)
    members = enumerate_superlevel(model, T)
    return math.fsum(math.exp(-b) for b in members.b_values), len(members)


def _raw_total(model: BoundModel, tol: float) -> TotalSum:
    closed = _closed_form_total(model)
    if closed is not None:
        return TotalSum(closed, CLOSED_FORM, closed * ROUNDING_ULPS)

    # every total is at least the nu = 0 term
    floor = max(1.0, math.exp(-b_scalar(model, (0,) * model.dimension)))
    target = 0.5 * tol * floor
    T = remainder_level(model, target)
    try:
        value, count = _sum_below(model, T)
    except ResourceLimitError as e:
        raise ResourceLimitError(
            f"Total of {model.model_id} to tol={tol} needs level T={T:.4g}: {e.message}",
            ceiling=e.ceiling, limit=e.limit, reason='tol_unreachable')
    error = remainder_bound(model, T) + value * ROUNDING_ULPS
    debug_log('tails', f"{model.model_id}: total {value!r} from {count} terms up to T={T:.4g}, error <= {error:.3g}")
    return TotalSum(value, CONTROLLED_ENUMERATION, error)


def total_sum(model: BoundModel, tol: float = None) -> TotalSum:
    """prefactor * sum over all nu of e^{-b(nu)}, with method tag and error bound."""
    tol = _check_tol(tol)
    raw = _raw_total(model, tol)
    p = model.prefactor
    return TotalSum(p * raw.value, raw.method, p * raw.abs_error)


# ----------------------------------------------------------------------
# Tails
# ----------------------------------------------------------------------

def _histogram_head_and_tail(model: BoundModel, M: int, tol: float):
    """Head, directly summed tail, remainder and level for rational homogeneous models."""
    tau = 1.0
    histogram = level_histogram(model, tau)
    while sum(histogram.counts) < M:
        tau *= 2.0
        histogram = level_histogram(model, tau)
    d = histogram.denominator

    cumulative = histogram.cumulative()
    v_star = next(v for v, c in enumerate(cumulative) if c >= M)
    below = cumulative[v_star - 1] if v_star > 0 else 0
    head_terms = [c * math.exp(-v / d) for v, c in histogram.occupied_levels() if v < v_star]
    head_terms.append((M - below) * math.exp(-v_star / d))
    head = math.fsum(head_terms)
    b_m = v_star / d

    leftover = cumulative[v_star] - M
    T = b_m + 8.0
    while True:
        histogram = level_histogram(model, T)
        terms = [leftover * math.exp(-v_star / d)]
        terms.extend(c * math.exp(-v / d) for v, c in histogram.occupied_levels() if v > v_star)
        part = math.fsum(terms)
        remainder = remainder_bound(model, T)
        if remainder <= tol * part:
            return head, part, remainder, T, b_m
        target = 0.5 * tol * part if part > 0 else 0.5 * tol * math.exp(-T)
        T = max(T + 8.0, remainder_level(model, target))
        debug_log('tails', f"{model.model_id}: Lambda_{M} tail needs T={T:.4g}")


def _members_head_and_tail(model: BoundModel, M: int, tol: float):
    """Same quantities from materialized members for every other model."""
    lam_m = build_quasi_optimal(model, M)
    head = math.fsum(math.exp(-b) for b in lam_m.b_values)
    b_m = lam_m.max_b
    T = max(b_m, 0.0) + 8.0
    while True:
        around = enumerate_superlevel(model, T)
        if len(around) < M:
            raise ArgumentError(f"Superlevel set at T={T} is smaller than Lambda_{M}")
        part = math.fsum(math.exp(-b) for b in around.b_values[M:])
        remainder = remainder_bound(model, T)
        if part > 0 and remainder <= tol * part:
            return head, part, remainder, T, b_m
        target = 0.5 * tol * part if part > 0 else 0.5 * tol * math.exp(-T)
        T = max(T + 8.0, remainder_level(model, target))
        debug_log('tails', f"{model.model_id}: Lambda_{M} tail needs T={T:.4g}")


def exact_tail(model: BoundModel, M: int, tol: float = None) -> TailValue:
    """Exact best-M-term surrogate error of the quasi-optimal set Lambda_M."""
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        raise ArgumentError(f"M must be a positive integer, got {M!r}")
    tol = _check_tol(tol)
    total = _raw_total(model, tol)

    if model.is_rational_homogeneous:
        head, part, remainder, T, b_m = _histogram_head_and_tail(model, M, tol)
        head_method = 'level_histogram'
    else:
        head, part, remainder, T, b_m = _members_head_and_tail(model, M, tol)
        head_method = 'members'

    tail = part + 0.5 * remainder
    error = 0.5 * remainder + part * ROUNDING_ULPS
    p = model.prefactor
    result = TailValue(
        model_id=model.model_id,
        M=M,
        head_sum=p * head,
        total_sum=p * total.value,
        tail=p * tail,
        abs_error_bound=p * error,
        method=total.method,
        head_method=head_method,
        remainder_level=T,
    )
    debug_log('tails', f"{model.model_id}: M={M} b_M={b_m:.6g} tail={result.tail!r} (+-{result.abs_error_bound:.2g})")
    return result



# ----------------------------------------------------------------------
# Brute-force box oracle
# ----------------------------------------------------------------------

# exponents p of the multinomial envelope tried per coordinate
FACTORIAL_BOX_EXPONENTS = np.append(np.geomspace(1.0 / 64.0, 64.0, 97), 1.0)


def _factorial_box_envelope(model: BoundModel) -> Tuple[float, ...]:
    """Per-coordinate slopes e_i with b(nu) >= e_i nu_i for FactorialAlpha.

    Every p > 0 gives b(nu) >= sum_i (2 (1 - p) lam_i - 2 log sum(alpha^p)) nu_i.
    A row with all slopes positive bounds each coordinate on its own, so
    the box takes the largest slope per coordinate over those rows. The
    p = 1 row is always among them.
    """
    alpha = np.asarray(model.alpha, dtype=float)
    lam = np.asarray(model.weights, dtype=float)
    ps = FACTORIAL_BOX_EXPONENTS
    with np.errstate(under='ignore'):
        s = (alpha[None, :] ** ps[:, None]).sum(axis=1)
    rows = 2.0 * (1.0 - ps)[:, None] * lam[None, :] - 2.0 * np.log(s)[:, None]
    rows = rows[rows.min(axis=1) > 0]
    return tuple(float(e) for e in rows.max(axis=0))


def _linear_envelope(model: BoundModel) -> Tuple[Tuple[float, ...], float]:
    """(e, c) with b(nu) >= <e, nu> - c and e > 0."""
    if model.family == WEIGHTED_LINEAR:
        return model.lam, 0.0
    if model.family == LEGENDRE_SQRT:
        # 2 lam n - log(1 + 2n) >= lam n + min_k (lam k - log(1 + 2k))
        const = 0.0
        for lam_i in model.lam:
            k = 0
            while lam_i * (k + 1) - math.log1p(2.0 * (k + 1)) < lam_i * k - math.log1p(2.0 * k):
                k += 1
            const -= lam_i * k - math.log1p(2.0 * k)
        return model.lam, const
    if model.family == FACTORIAL_ALPHA:
        return _factorial_box_envelope(model), 0.0
    term = max(model.affine_terms, key=lambda t: min(t.weights))
    return term.weights, term.offset


def box_oracle_tail(model: BoundModel, M: int, target: float = 1e-13, max_points: Optional[int] = None) -> float:
    """Tail of Lambda_M by summing e^{-b} over a box that holds every nu with b <= T.

    T is the remainder level for `target`, so the result is exact up to
    `target` plus rounding. Ties do not change the tail sum.
    """
    max_points = Config.ORACLE_BOX_CEILING if max_points is None else max_points
    T = remainder_level(model, target)
    weights, const = _linear_envelope(model)
    radii = [math.floor((T + const) / w) for w in weights]
    size = math.prod(r + 1 for r in radii)
    if size > max_points:
        raise ResourceLimitError(f"Oracle box of {size} points exceeds {max_points}",
                                 ceiling='ORACLE_BOX_CEILING', limit=max_points, reason='oracle_box_ceiling')
    grids = np.meshgrid(*[np.arange(r + 1, dtype=float) for r in radii], indexing='ij')
    points = np.stack([g.ravel() for g in grids], axis=1)
    b = np.sort(eval_b_many(model, points))
    b = b[b <= T]
    if M > len(b):
        raise ArgumentError(f"M={M} exceeds the {len(b)} indices of the oracle box")
    return model.prefactor * math.fsum(np.exp(-b[M:]).tolist())
