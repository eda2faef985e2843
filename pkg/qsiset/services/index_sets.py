"""
Superlevel sets P_tau = {nu : b(nu) <= tau} on the lattice and the
quasi-optimal sets Lambda_M of the M largest bounds e^{-b(nu)}.

Members are always ordered by (b, |nu|, nu) so that Lambda_M is unique.
For rational homogeneous models b is compared exactly as an integer level
D * b(nu); everything else compares floats.
"""
import csv
import heapq
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Sequence, Tuple

from services.bounds import (
    BoundModel, FACTORIAL_ALPHA, LEGENDRE_SQRT, b_scalar,
)
from utils.config import Config
from utils.errors import ArgumentError, ResourceLimitError
from utils.logger import debug_log

logger = logging.getLogger(__name__)

ORDER_RULE = 'b_value, |nu|, lexicographic nu'

MultiIndex = Tuple[int, ...]


# ----------------------------------------------------------------------
# Neighbours and closure
# ----------------------------------------------------------------------

def get_lower_neighbours(nu: Sequence[int]) -> List[MultiIndex]:
    """Indices nu - e_i for every coordinate with nu_i > 0."""
    out = []
    for i, n in enumerate(nu):
        if n > 0:
            out.append(tuple(nu[:i]) + (n - 1,) + tuple(nu[i + 1:]))
    return out


def get_upper_neighbours(nu: Sequence[int]) -> List[MultiIndex]:
    return [tuple(nu[:i]) + (n + 1,) + tuple(nu[i + 1:]) for i, n in enumerate(nu)]


def is_downward_closed(indices: Iterable[Sequence[int]]) -> bool:
    """Checks that every lower neighbour of every member is a member."""
    members = {tuple(nu) for nu in indices}
    return all(parent in members for nu in members for parent in get_lower_neighbours(nu))


def downward_closed_sets(dimension: int, M: int) -> List[frozenset]:
    """Every downward closed subset of N^dimension with exactly M members.

    Grows the sets one index at a time from {0}; an index joins once all of its
    lower neighbours are in. The count explodes quickly, so keep M small.
    """
    if not isinstance(dimension, int) or dimension < 1:
        raise ArgumentError(f"dimension must be a positive integer, got {dimension!r}")
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        raise ArgumentError(f"M must be a positive integer, got {M!r}")
    layer = {frozenset([(0,) * dimension])}
    for _ in range(M - 1):
        grown = set()
        for members in layer:
            for nu in members:
                for up in get_upper_neighbours(nu):
                    if up not in members and all(low in members for low in get_lower_neighbours(up)):
                        grown.add(members | {up})
        layer = grown
    return sorted(layer, key=sorted)


# ----------------------------------------------------------------------
# IndexSet
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class IndexSet:
    model_id: str
    dimension: int
    members: Tuple[Tuple[MultiIndex, float], ...]
    order_rule: str = ORDER_RULE
    metadata: Dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def indices(self) -> List[MultiIndex]:
        return [nu for nu, _ in self.members]

    @property
    def b_values(self) -> List[float]:
        return [b for _, b in self.members]

    @property
    def max_b(self) -> float:
        return self.members[-1][1] if self.members else -math.inf

    def as_set(self):
        return {nu for nu, _ in self.members}

    def write_csv(self, stream):
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow([f"nu_{i + 1}" for i in range(self.dimension)] + ['b_value', 'rank'])
        for rank, (nu, b) in enumerate(self.members, start=1):
            writer.writerow(list(nu) + [repr(b), rank])

    def to_csv(self, path=None):
        """Write one row per member; returns the text when no path is given."""
        if path is None:
            buffer = io.StringIO()
            self.write_csv(buffer)
            return buffer.getvalue()
        with open(path, 'w', newline='', encoding='utf-8') as f:
            self.write_csv(f)
        return path


def order_key(model: BoundModel, nu: MultiIndex, b: float):
    level = model.exact_level(nu) if model.is_rational_homogeneous else b
    return (level, sum(nu), nu)


def level_cap(denominator: int, tau: float) -> int:
    """Largest integer level v with v / D <= tau, computed exactly."""
    return math.floor(Fraction(tau) * denominator)


def _sorted_members(model, found):
    found.sort(key=lambda item: order_key(model, item[0], item[1]))
    return tuple(found)


# ----------------------------------------------------------------------
# Depth-first traversal of P_tau
# ----------------------------------------------------------------------

def _factorial_envelopes(model: BoundModel):
    """Linear lower envelopes b(nu) >= sum_i e_i nu_i for FactorialAlpha.

    For any p with sum(alpha^p) <= 1 the multinomial theorem gives
    |nu|!/nu! alpha^(p nu) <= (sum alpha^p)^|nu|, hence
    b(nu) >= sum_i (2 (1 - p) lam_i - 2 log sum(alpha^p)) nu_i.
    """
    lam = model.weights
    envelopes = []
    for p in tuple(Config.FACTORIAL_MARGINS) + (1.0,):
        s = math.fsum(a ** p for a in model.alpha)
        if s <= 1.0:
            envelopes.append((p, tuple(2.0 * (1.0 - p) * l_i - 2.0 * math.log(s) for l_i in lam)))
    return envelopes


def _legendre_phi(lam_i: float, n: int) -> float:
    return 2.0 * lam_i * n - math.log1p(2.0 * n)


def _legendre_min_phi(lam_i: float) -> float:
    n = 0
    while _legendre_phi(lam_i, n + 1) < _legendre_phi(lam_i, n):
        n += 1
    return _legendre_phi(lam_i, n)


class _Traversal:
    """Collects every lattice nu with b(nu) <= tau."""

    def __init__(self, model: BoundModel, tau: float, ceiling: int):
        self.model = model
        self.tau = tau
        self.ceiling = ceiling
        self.n = model.dimension
        self.found: List[Tuple[MultiIndex, float]] = []
        self.nodes = 0
        self.exact = model.is_rational_homogeneous
        if self.exact:
            denominator, _ = model.integer_weights()
            self.cap = level_cap(denominator, tau)

    def _bump(self):
        self.nodes += 1
        if self.nodes > self.ceiling or len(self.found) > self.ceiling:
            raise ResourceLimitError(
                f"Superlevel traversal of {self.model.model_id} at tau={self.tau} exceeded "
                f"MEMBER_CEILING={self.ceiling}",
                ceiling='MEMBER_CEILING', limit=self.ceiling, reason='member_ceiling')

    def _exceeds(self, candidate) -> Tuple[bool, float]:
        b = b_scalar(self.model, candidate)
        if self.exact:
            return self.model.exact_level(candidate) > self.cap, b
        return b > self.tau, b

    def run(self):
        model = self.model
        if model.is_coordinate_monotone:
            envelope = 'monotone_prefix'
            self._monotone(0, [])
        elif model.family == LEGENDRE_SQRT:
            envelope = 'legendre_convex_minimum'
            lam = model.lam
            mins = [_legendre_min_phi(l_i) for l_i in lam]
            self.rest_min = [math.fsum(mins[i:]) for i in range(self.n + 1)]
            self._legendre(0, [], 0.0)
        elif model.family == FACTORIAL_ALPHA:
            self.envelopes = _factorial_envelopes(model)
            envelope = 'factorial_linear(' + ','.join(f"p={p:g}" for p, _ in self.envelopes) + ')'
            self._factorial(0, [], [0.0] * len(self.envelopes))
        else:
            raise ArgumentError(f"No traversal for family {model.family}")
        debug_log('enumeration', f"{model.model_id} tau={self.tau}: {len(self.found)} members, "
                                 f"{self.nodes} nodes, envelope {envelope}")
        return envelope

    def _monotone(self, depth, prefix):
        pad = (0,) * (self.n - depth - 1)
        v = 0
        while True:
            self._bump()
            candidate = tuple(prefix) + (v,) + pad
            over, b = self._exceeds(candidate)
            if over:
                return
            if depth == self.n - 1:
                self.found.append((candidate, b))
            else:
                prefix.append(v)
                self._monotone(depth + 1, prefix)
                prefix.pop()
            v += 1

    def _legendre(self, depth, prefix, partial):
        lam_i = self.model.lam[depth]
        rest = self.rest_min[depth + 1]
        v = 0
        while True:
            self._bump()
            phi = _legendre_phi(lam_i, v)
            if partial + phi + rest > self.tau:
                # phi is convex: once it is past its minimum it only grows
                if _legendre_phi(lam_i, v + 1) >= phi:
                    return
                v += 1
                continue
            if depth == self.n - 1:
                candidate = tuple(prefix) + (v,)
                b = b_scalar(self.model, candidate)
                if b <= self.tau:
                    self.found.append((candidate, b))
            else:
                prefix.append(v)
                self._legendre(depth + 1, prefix, partial + phi)
                prefix.pop()
            v += 1

    def _factorial(self, depth, prefix, partials):
        v = 0
        while True:
            self._bump()
            bounds = [s + e[depth] * v for s, (_, e) in zip(partials, self.envelopes)]
            if bounds and max(bounds) > self.tau:
                return
            if depth == self.n - 1:
                candidate = tuple(prefix) + (v,)
                b = b_scalar(self.model, candidate)
                if b <= self.tau:
                    self.found.append((candidate, b))
            else:
                prefix.append(v)
                self._factorial(depth + 1, prefix, bounds)
                prefix.pop()
            v += 1


def enumerate_superlevel(model: BoundModel, tau: float, ceiling: int = None) -> IndexSet:
    """All lattice nu with b(nu) <= tau, in the canonical order."""
    if not math.isfinite(tau) or tau < 0:
        raise ArgumentError(f"tau must be a finite number >= 0, got {tau}")
    ceiling = Config.MEMBER_CEILING if ceiling is None else ceiling
    traversal = _Traversal(model, float(tau), ceiling)
    envelope = traversal.run()
    members = _sorted_members(model, traversal.found)
    return IndexSet(model_id=model.model_id, dimension=model.dimension, members=members,
                    metadata={'tau': float(tau), 'envelope': envelope, 'nodes_visited': traversal.nodes})


# ----------------------------------------------------------------------
# Level histogram for rational homogeneous models
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LevelHistogram:
    """counts[v] = #{nu : D * b(nu) = v} for 0 <= v <= limit."""
    model_id: str
    denominator: int
    limit: int
    counts: Tuple[int, ...]

    def cumulative(self) -> List[int]:
        out, acc = [], 0
        for c in self.counts:
            acc += c
            out.append(acc)
        return out

    def count_at(self, tau: float) -> int:
        cap = level_cap(self.denominator, tau)
        if cap > self.limit:
            raise ArgumentError(f"tau={tau} lies beyond the histogram range {self.limit}/{self.denominator}")
        return sum(self.counts[:cap + 1]) if cap >= 0 else 0

    def occupied_levels(self) -> List[Tuple[int, int]]:
        return [(v, c) for v, c in enumerate(self.counts) if c]


def _knapsack_counts(weights: Sequence[int], limit: int) -> List[int]:
    counts = [0] * (limit + 1)
    counts[0] = 1
    for a in weights:
        for x in range(a, limit + 1):
            counts[x] += counts[x - a]
    return counts


def _merged_row_counts(rows: Sequence[Sequence[int]], limit: int, state_ceiling: int, model_id: str) -> List[int]:
    """Histogram of max_k <rows[k], nu> over the lattice, coordinate by coordinate.

    Rows whose remaining weights coincide contribute identically from here on,
    so only their running maximum is kept.
    """
    n = len(rows[0])
    groups = []
    for i in range(n + 1):
        keys: Dict[Tuple[int, ...], int] = {}
        for row in rows:
            keys.setdefault(tuple(row[i:]), len(keys))
        groups.append(keys)

    states: Dict[Tuple[int, ...], int] = {(0,) * len(groups[0]): 1}
    for i in range(n):
        current = sorted(groups[i].items(), key=lambda kv: kv[1])
        coef = [key[0] for key, _ in current]
        parent = [groups[i + 1][key[1:]] for key, _ in current]
        width = len(groups[i + 1])
        nxt: Dict[Tuple[int, ...], int] = defaultdict(int)
        for state, count in states.items():
            v = 0
            while True:
                values = [p + c * v for p, c in zip(state, coef)]
                if max(values) > limit:
                    break
                merged = [-1] * width
                for g, value in enumerate(values):
                    if value > merged[parent[g]]:
                        merged[parent[g]] = value
                nxt[tuple(merged)] += count
                v += 1
        states = nxt
        debug_log('histogram', f"{model_id}: coordinate {i + 1}/{n}, {len(states)} states")
        if len(states) > state_ceiling:
            raise ResourceLimitError(
                f"Level histogram of {model_id} needs more than STATE_CEILING={state_ceiling} states",
                ceiling='STATE_CEILING', limit=state_ceiling, reason='state_ceiling')

    counts = [0] * (limit + 1)
    for (value,), count in states.items():
        counts[value] += count
    return counts


def level_histogram(model: BoundModel, tau: float) -> LevelHistogram:
    """Exact per-level lattice counts up to tau for a rational homogeneous model."""
    if not model.is_rational_homogeneous:
        raise ArgumentError(f"Level histogram needs a homogeneous model with rational weights ({model.model_id})",
                            reason='not_rational_homogeneous')
    if not math.isfinite(tau) or tau < 0:
        raise ArgumentError(f"tau must be a finite number >= 0, got {tau}")
    denominator, rows = model.integer_weights()
    limit = level_cap(denominator, tau)
    if limit + 1 > Config.LEVEL_CEILING:
        raise ResourceLimitError(
            f"tau={tau} needs {limit + 1} integer levels, above LEVEL_CEILING={Config.LEVEL_CEILING}",
            ceiling='LEVEL_CEILING', limit=Config.LEVEL_CEILING, reason='level_ceiling')

    distinct_rows = sorted(set(rows))
    if len(distinct_rows) == 1:
        counts = _knapsack_counts(distinct_rows[0], limit)
    else:
        counts = _merged_row_counts(distinct_rows, limit, Config.STATE_CEILING, model.model_id)
    return LevelHistogram(model_id=model.model_id, denominator=denominator, limit=limit, counts=tuple(counts))


def count_superlevel(model: BoundModel, tau: float) -> int:
    """#(P_tau on the lattice) without materializing members when the model allows it."""
    if model.is_rational_homogeneous:
        return level_histogram(model, tau).count_at(tau)
    return len(enumerate_superlevel(model, tau))


def cardinality_profile(model: BoundModel, tau_list: Sequence[float]) -> List[Tuple[float, int]]:
    """(tau, #P_tau) for an ascending list of levels."""
    taus = [float(t) for t in tau_list]
    if not taus:
        return []
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ArgumentError(f"tau_list must be ascending, got {taus}")
    if taus[0] < 0:
        raise ArgumentError("tau values must be >= 0")

    if model.is_rational_homogeneous:
        histogram = level_histogram(model, taus[-1])
        return [(t, histogram.count_at(t)) for t in taus]

    largest = enumerate_superlevel(model, taus[-1])
    b_values = largest.b_values
    profile = []
    for t in taus:
        profile.append((t, sum(1 for b in b_values if b <= t)))
    return profile


def level_cardinalities(model: BoundModel, levels: Sequence[int]) -> List[int]:
    """#(P_J on the lattice) for each integer level J."""
    return [count for _, count in cardinality_profile(model, sorted(levels))]


# ----------------------------------------------------------------------
# Quasi-optimal sets
# ----------------------------------------------------------------------

def _best_first(model: BoundModel, M: int) -> List[Tuple[MultiIndex, float]]:
    """Pop indices in canonical order; push a child once all of its parents are popped."""
    n = model.dimension
    start = (0,) * n
    b0 = b_scalar(model, start)
    heap = [order_key(model, start, b0) + (b0,)]
    visited = set()
    members = []
    while heap and len(members) < M:
        _, _, nu, b = heapq.heappop(heap)
        members.append((nu, b))
        visited.add(nu)
        for child in get_upper_neighbours(nu):
            if all(parent in visited for parent in get_lower_neighbours(child)):
                bc = b_scalar(model, child)
                heapq.heappush(heap, order_key(model, child, bc) + (bc,))
    return members


def build_quasi_optimal(model: BoundModel, M: int, ceiling: int = None) -> IndexSet:
    """The M indices with the largest e^{-b(nu)} under the canonical total order."""
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        raise ArgumentError(f"M must be a positive integer, got {M!r}")
    ceiling = Config.MEMBER_CEILING if ceiling is None else ceiling
    if M > ceiling:
        raise ResourceLimitError(f"M={M} exceeds MEMBER_CEILING={ceiling}",
                                 ceiling='MEMBER_CEILING', limit=ceiling, reason='member_ceiling')

    if model.is_coordinate_monotone:
        members = _best_first(model, M)
        debug_log('enumeration', f"{model.model_id}: best-first Lambda_{M}, last b={members[-1][1]:.6g}")
        return IndexSet(model_id=model.model_id, dimension=model.dimension, members=tuple(members),
                        metadata={'method': 'best_first'})

    # Non-monotone b: grow a superlevel set until it holds M indices; everything
    # outside it has b above tau and so ranks after all of its members.
    tau = 1.0
    while True:
        candidates = enumerate_superlevel(model, tau, ceiling)
        if len(candidates) >= M:
            debug_log('enumeration', f"{model.model_id}: threshold Lambda_{M} from tau={tau}")
            return IndexSet(model_id=model.model_id, dimension=model.dimension,
                            members=candidates.members[:M],
                            metadata={'method': 'threshold', 'tau': tau,
                                      'envelope': candidates.metadata.get('envelope')})
        tau *= 2.0
