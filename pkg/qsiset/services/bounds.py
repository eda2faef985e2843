"""
Coefficient bound models e^{-b(nu)}.

Four families are supported:

    WeightedLinear   b(nu) = sum_i lam_i nu_i
    SupAffine        b(nu) = max_k (sum_i w_ki nu_i - offset_k), offset_k >= 0
    LegendreSqrt     b(nu) = sum_i (2 lam_i nu_i - log(2 nu_i + 1))
    FactorialAlpha   b(nu) = 2 sum_i lam_i nu_i - 2 log(|nu|! / prod nu_i!), lam_i = -log alpha_i

Models are immutable; every evaluator is a pure function of the model and
the index, so a model can be shared between worker threads.
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, xlogy

from utils.config import Config
from utils.errors import ArgumentError, DomainError
from utils.rationals import lcm_of_denominators, parse_rational, rational_to_json

logger = logging.getLogger(__name__)

WEIGHTED_LINEAR = 'WeightedLinear'
SUP_AFFINE = 'SupAffine'
LEGENDRE_SQRT = 'LegendreSqrt'
FACTORIAL_ALPHA = 'FactorialAlpha'
FAMILIES = (WEIGHTED_LINEAR, SUP_AFFINE, LEGENDRE_SQRT, FACTORIAL_ALPHA)

# phi(n) = 2 lam n - log(2n + 1) is nondecreasing on the integers iff phi(1) >= phi(0)
LEGENDRE_MONOTONE_LAMBDA = math.log(3.0) / 2.0


def _rational_matches(exact: Fraction, value: float) -> bool:
    return math.isclose(float(exact), value, rel_tol=4 * np.finfo(float).eps, abs_tol=0.0)


def _parse_weight_list(raw, what):
    """Numbers stay floats; rational strings / pairs also yield exact values."""
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ArgumentError(f"{what} must be a nonempty list")
    floats, exact = [], []
    for item in raw:
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            floats.append(float(item))
            exact.append(Fraction(item) if isinstance(item, int) else None)
        else:
            value = parse_rational(item)
            floats.append(float(value))
            exact.append(value)
    if any(e is None for e in exact):
        exact = None
    return tuple(floats), (tuple(exact) if exact is not None else None)


@dataclass(frozen=True)
class AffineTerm:
    """One member of the admissible set of a SupAffine model."""
    offset: float
    weights: Tuple[float, ...]
    rational_weights: Optional[Tuple[Fraction, ...]] = None

    def value(self, nu) -> float:
        return math.fsum(w * n for w, n in zip(self.weights, nu)) - self.offset

    def to_dict(self):
        data = {'offset': self.offset, 'weights': list(self.weights)}
        if self.rational_weights is not None:
            data['rational_weights'] = [rational_to_json(r) for r in self.rational_weights]
        return data


@dataclass(frozen=True)
class BoundModel:
    dimension: int
    family: str
    lam: Tuple[float, ...] = ()
    affine_terms: Tuple[AffineTerm, ...] = ()
    alpha: Tuple[float, ...] = ()
    prefactor: float = 1.0
    rational_weights: Optional[Tuple[Fraction, ...]] = None
    name: str = ''
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        validate_model(self)

    # ------------------------------------------------------------------
    # Derived properties
    # ------------------------------------------------------------------

    @property
    def model_id(self) -> str:
        if self.name:
            return self.name
        digest = hashlib.sha1(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:10]
        return f"{self.family}-{digest}"

    @property
    def weights(self) -> Tuple[float, ...]:
        """lam for the separable families, -log(alpha) for FactorialAlpha."""
        if self.family == FACTORIAL_ALPHA:
            return tuple(-math.log(a) for a in self.alpha)
        return self.lam

    @property
    def is_coordinate_monotone(self) -> bool:
        if self.family in (WEIGHTED_LINEAR, SUP_AFFINE):
            return True
        if self.family == LEGENDRE_SQRT:
            return all(lam_i >= LEGENDRE_MONOTONE_LAMBDA for lam_i in self.lam)
        return self.dimension == 1

    @property
    def is_homogeneous(self) -> bool:
        """True when P_tau = tau * P for every tau."""
        if self.family == WEIGHTED_LINEAR:
            return True
        if self.family == SUP_AFFINE:
            return all(t.offset == 0 for t in self.affine_terms)
        return False

    @property
    def is_rational_homogeneous(self) -> bool:
        if not self.is_homogeneous:
            return False
        if self.family == WEIGHTED_LINEAR:
            return self.rational_weights is not None
        return all(t.rational_weights is not None for t in self.affine_terms)

    def integer_weights(self) -> Tuple[int, Tuple[Tuple[int, ...], ...]]:
        """Common denominator D and integer rows D*w_k for rational homogeneous models.

        b(nu) * D = max_k sum_i rows[k][i] * nu_i exactly.
        """
        if 'integer_weights' in self._cache:
            return self._cache['integer_weights']
        if not self.is_rational_homogeneous:
            raise ArgumentError(f"Model {self.model_id} has no exact rational weights", reason='not_rational')
        if self.family == WEIGHTED_LINEAR:
            exact_rows = [self.rational_weights]
        else:
            exact_rows = [t.rational_weights for t in self.affine_terms]
        denom = lcm_of_denominators([w for row in exact_rows for w in row])
        rows = tuple(tuple(int(w * denom) for w in row) for row in exact_rows)
        self._cache['integer_weights'] = (denom, rows)
        return denom, rows

    def exact_level(self, nu) -> int:
        """D * b(nu) as an integer (rational homogeneous models only)."""
        _, rows = self.integer_weights()
        return max(sum(r * n for r, n in zip(row, nu)) for row in rows)

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self):
        data = {'dimension': self.dimension, 'family': self.family, 'prefactor': self.prefactor}
        if self.name:
            data['name'] = self.name
        if self.family in (WEIGHTED_LINEAR, LEGENDRE_SQRT):
            data['lambda'] = list(self.lam)
        if self.family == SUP_AFFINE:
            data['affine_terms'] = [t.to_dict() for t in self.affine_terms]
        if self.family == FACTORIAL_ALPHA:
            data['alpha'] = list(self.alpha)
        if self.rational_weights is not None:
            data['rational_weights'] = [rational_to_json(r) for r in self.rational_weights]
        return data

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ArgumentError("Model document must be a JSON object")
        try:
            dimension = int(data['dimension'])
            family = data['family']
        except KeyError as e:
            raise ArgumentError(f"Model document is missing {e}")
        except (TypeError, ValueError):
            raise ArgumentError(f"Invalid dimension {data.get('dimension')!r}")

        rational = None
        if data.get('rational_weights') is not None:
            rational = tuple(parse_rational(r) for r in data['rational_weights'])

        lam = ()
        if data.get('lambda') is not None:
            lam, exact = _parse_weight_list(data['lambda'], 'lambda')
            if rational is None and exact is not None and family == WEIGHTED_LINEAR:
                rational = exact
        elif rational is not None:
            lam = tuple(float(r) for r in rational)

        terms = []
        for raw in data.get('affine_terms') or []:
            if not isinstance(raw, dict):
                raise ArgumentError("Each affine term must be an object with offset and weights")
            term_rational = None
            if raw.get('rational_weights') is not None:
                term_rational = tuple(parse_rational(r) for r in raw['rational_weights'])
            if raw.get('weights') is not None:
                weights, exact = _parse_weight_list(raw['weights'], 'affine term weights')
                if term_rational is None:
                    term_rational = exact
            elif term_rational is not None:
                weights = tuple(float(r) for r in term_rational)
            else:
                raise ArgumentError("Affine term needs weights")
            terms.append(AffineTerm(offset=float(raw.get('offset', 0.0)), weights=weights,
                                    rational_weights=term_rational))

        alpha = ()
        if data.get('alpha') is not None:
            alpha, _ = _parse_weight_list(data['alpha'], 'alpha')

        return cls(
            dimension=dimension,
            family=family,
            lam=lam,
            affine_terms=tuple(terms),
            alpha=alpha,
            prefactor=float(data.get('prefactor', 1.0)),
            rational_weights=rational,
            name=str(data.get('name', '')),
        )

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ArgumentError(f"Model is not valid JSON: {e}")

    @classmethod
    def from_json_file(cls, path):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return cls.from_json(f.read())
        except OSError as e:
            raise ArgumentError(f"Cannot read model file {path}: {e}")


def validate_model(model: BoundModel):
    """Raise ArgumentError when the model violates its family's invariants."""
    n = model.dimension
    if n < 1:
        raise ArgumentError(f"dimension must be a positive integer, got {n}")
    if model.family not in FAMILIES:
        raise ArgumentError(f"Unknown family {model.family!r}; expected one of {', '.join(FAMILIES)}")
    if not (model.prefactor > 0 and math.isfinite(model.prefactor)):
        raise ArgumentError(f"prefactor must be a positive finite number, got {model.prefactor}")

    if model.family in (WEIGHTED_LINEAR, LEGENDRE_SQRT):
        if len(model.lam) != n:
            raise ArgumentError(f"lambda has {len(model.lam)} entries for dimension {n}")
        if not all(lam_i > 0 and math.isfinite(lam_i) for lam_i in model.lam):
            raise ArgumentError(f"All lambda_i must be positive, got {list(model.lam)}")
        if model.rational_weights is not None:
            if len(model.rational_weights) != n:
                raise ArgumentError("rational_weights must match lambda in length")
            for exact, value in zip(model.rational_weights, model.lam):
                if not _rational_matches(exact, value):
                    raise ArgumentError(f"rational weight {exact} does not equal lambda entry {value}")

    elif model.family == SUP_AFFINE:
        if not model.affine_terms:
            raise ArgumentError("SupAffine needs at least one affine term")
        for term in model.affine_terms:
            if len(term.weights) != n:
                raise ArgumentError(f"Affine term has {len(term.weights)} weights for dimension {n}")
            if not all(w > 0 and math.isfinite(w) for w in term.weights):
                raise ArgumentError(f"Affine term weights must be strictly positive, got {list(term.weights)}")
            if not (term.offset >= 0 and math.isfinite(term.offset)):
                raise ArgumentError(f"Affine term offsets must be >= 0, got {term.offset}")
            if term.rational_weights is not None:
                for exact, value in zip(term.rational_weights, term.weights):
                    if not _rational_matches(exact, value):
                        raise ArgumentError(f"rational weight {exact} does not equal weight {value}")

    elif model.family == FACTORIAL_ALPHA:
        if len(model.alpha) != n:
            raise ArgumentError(f"alpha has {len(model.alpha)} entries for dimension {n}")
        if not all(0 < a < 1 for a in model.alpha):
            raise ArgumentError(f"All alpha_i must lie in (0, 1), got {list(model.alpha)}")
        if not math.fsum(model.alpha) < 1:
            raise DomainError(f"sum(alpha) must be < 1 for summability, got {math.fsum(model.alpha)}", reason='not_summable')


# ----------------------------------------------------------------------
# Evaluation
# ----------------------------------------------------------------------

def _check_index(model: BoundModel, nu, allow_real=True) -> np.ndarray:
    arr = np.asarray(nu, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != model.dimension:
        raise ArgumentError(f"Index of length {arr.shape[0] if arr.ndim == 1 else arr.shape} "
                            f"does not match dimension {model.dimension}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("Index entries must be finite")
    if np.any(arr < 0):
        raise ArgumentError(f"Index entries must be nonnegative, got {arr.tolist()}")
    return arr


def b_scalar(model: BoundModel, nu: Sequence[int]) -> float:
    """b(nu) for a validated integer index; used by the traversal hot loops."""
    family = model.family
    if family == WEIGHTED_LINEAR:
        return math.fsum(lam_i * n for lam_i, n in zip(model.lam, nu))
    if family == SUP_AFFINE:
        return max(t.value(nu) for t in model.affine_terms)
    if family == LEGENDRE_SQRT:
        return math.fsum(2.0 * lam_i * n - math.log1p(2.0 * n) for lam_i, n in zip(model.lam, nu))
    total = sum(nu)
    log_multinomial = math.lgamma(total + 1) - math.fsum(math.lgamma(n + 1) for n in nu)
    linear = math.fsum(-math.log(a) * n for a, n in zip(model.alpha, nu))
    return 2.0 * linear - 2.0 * log_multinomial


def eval_b_many(model: BoundModel, points: np.ndarray) -> np.ndarray:
    """Vectorized b over the rows of a (K, N) array of nonnegative reals."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != model.dimension:
        raise ArgumentError(f"Expected an array of shape (K, {model.dimension}), got {pts.shape}")
    if np.any(pts < 0):
        raise ArgumentError("Index entries must be nonnegative")
    family = model.family
    if family == WEIGHTED_LINEAR:
        return pts @ np.asarray(model.lam)
    if family == SUP_AFFINE:
        w = np.array([t.weights for t in model.affine_terms])
        off = np.array([t.offset for t in model.affine_terms])
        return np.max(pts @ w.T - off, axis=1)
    if family == LEGENDRE_SQRT:
        lam = np.asarray(model.lam)
        return np.sum(2.0 * lam * pts - np.log1p(2.0 * pts), axis=1)
    lam = -np.log(np.asarray(model.alpha))
    total = pts.sum(axis=1)
    log_multinomial = gammaln(total + 1) - gammaln(pts + 1).sum(axis=1)
    return 2.0 * (pts @ lam) - 2.0 * log_multinomial


def eval_b(model: BoundModel, nu) -> float:
    """b(nu) for an integer multi-index or a nonnegative real vector."""
    arr = _check_index(model, nu)
    if np.all(arr == np.floor(arr)):
        return b_scalar(model, tuple(int(x) for x in arr))
    return float(eval_b_many(model, arr[None, :])[0])


def factorial_limit_excess(model: BoundModel, nu) -> float:
    """sum lam_i nu_i - G(nu), G(nu) = |nu| log|nu| - sum nu_i log nu_i (0 log 0 = 0)."""
    arr = np.asarray(nu, dtype=float)
    lam = -np.log(np.asarray(model.alpha))
    total = arr.sum()
    g = float(xlogy(total, total) - np.sum(xlogy(arr, arr)))
    return float(arr @ lam) - g


def limiting_value(model: BoundModel, nu) -> float:
    """Value of the defining function of the limiting set P at nu.

    nu lies in P iff limiting_value <= 1 (strictly < 1/2 for FactorialAlpha).
    """
    family = model.family
    if family == WEIGHTED_LINEAR:
        return math.fsum(lam_i * n for lam_i, n in zip(model.lam, nu))
    if family == SUP_AFFINE:
        return max(math.fsum(w * n for w, n in zip(t.weights, nu)) for t in model.affine_terms)
    if family == LEGENDRE_SQRT:
        return math.fsum(2.0 * lam_i * n for lam_i, n in zip(model.lam, nu))
    return factorial_limit_excess(model, nu)


def in_limiting_set(model: BoundModel, nu) -> bool:
    """Membership without the positivity requirement (boundary faces allowed)."""
    value = limiting_value(model, nu)
    if model.family == FACTORIAL_ALPHA:
        return value < 0.5
    return value <= 1.0


def limiting_membership(model: BoundModel, nu) -> bool:
    """True iff nu lies in the limiting set P of the model."""
    arr = _check_index(model, nu)
    if model.family == FACTORIAL_ALPHA and np.any(arr == 0):
        raise ArgumentError("FactorialAlpha limiting set is defined on (0, inf)^N; zero entry given")
    if model.family == WEIGHTED_LINEAR:
        return eval_b(model, arr) <= 1.0
    return in_limiting_set(model, arr.tolist())


# ----------------------------------------------------------------------
# Assumption checks
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    model_id: str
    b_at_zero: float
    zero_deviation: float
    box_radius: int
    shell_points: int
    c_est: float
    C_est: float
    tau_grid: Tuple[float, ...]
    directions: Tuple[Tuple[float, ...], ...]
    direction_classes: Tuple[str, ...]
    classification: str

    def to_dict(self):
        return {
            'model_id': self.model_id,
            'b_at_zero': self.b_at_zero,
            'zero_deviation': self.zero_deviation,
            'box_radius': self.box_radius,
            'shell_points': self.shell_points,
            'c_est': self.c_est,
            'C_est': self.C_est,
            'tau_grid': list(self.tau_grid),
            'directions': [list(d) for d in self.directions],
            'direction_classes': list(self.direction_classes),
            'classification': self.classification,
        }


SHELL_EXHAUSTIVE_LIMIT = 200_000


def _shell_points(dimension: int, radius: int, rng: np.random.Generator) -> np.ndarray:
    """Lattice points with |nu| = radius; all of them when few, else a seeded sample."""
    size = math.comb(radius + dimension - 1, dimension - 1)
    if size <= SHELL_EXHAUSTIVE_LIMIT:
        rows = []
        # stars and bars
        for bars in combinations(range(radius + dimension - 1), dimension - 1):
            prev = -1
            row = []
            for b in bars:
                row.append(b - prev - 1)
                prev = b
            row.append(radius + dimension - 2 - prev)
            rows.append(row)
        return np.array(rows, dtype=float)
    sample = rng.multinomial(radius, np.full(dimension, 1.0 / dimension), size=SHELL_EXHAUSTIVE_LIMIT // 4)
    axes = radius * np.eye(dimension)
    return np.vstack([axes, sample]).astype(float)


def classify_sequence(values: Sequence[float]) -> str:
    diffs = np.diff(np.asarray(values, dtype=float))
    scale = max(1.0, float(np.max(np.abs(values))))
    tol = 1e-10 * scale
    if np.all(np.abs(diffs) <= tol):
        return 'constant'
    if np.all(diffs >= -tol):
        return 'increasing'
    if np.all(diffs <= tol):
        return 'decreasing'
    return 'mixed'


def _combine_classes(classes: List[str]) -> str:
    strict = set(classes) - {'constant'}
    if not strict:
        return 'constant'
    if len(strict) == 1:
        return strict.pop()
    return 'mixed'


def check_assumptions(model: BoundModel, box_radius: int = None, tau_grid: Sequence[float] = None,
                      seed: int = None) -> AssumptionReport:
    """Empirical look at b(0) = 0, b = Theta(|nu|) and the monotonicity of H(tau) = b(tau d)/tau.

    Advisory only: a finite box can estimate the Theta constants but not prove them.
    """
    box_radius = Config.DEFAULT_BOX_RADIUS if box_radius is None else int(box_radius)
    tau_grid = tuple(Config.DEFAULT_TAU_GRID if tau_grid is None else (float(t) for t in tau_grid))
    seed = Config.DEFAULT_SEED if seed is None else seed
    if box_radius < 2:
        raise ArgumentError(f"box_radius must be at least 2, got {box_radius}")
    if len(tau_grid) < 2 or any(t <= 0 for t in tau_grid) or any(b <= a for a, b in zip(tau_grid, tau_grid[1:])):
        raise ArgumentError(f"tau_grid must be positive and strictly increasing, got {list(tau_grid)}")

    rng = np.random.default_rng(seed)
    n = model.dimension

    b0 = b_scalar(model, (0,) * n)

    shell = _shell_points(n, box_radius, rng)
    ratios = eval_b_many(model, shell) / box_radius
    c_est, C_est = float(np.min(ratios)), float(np.max(ratios))

    directions = [tuple(row) for row in np.eye(n)]
    directions.append(tuple(np.ones(n) / n))
    for row in rng.random((Config.RANDOM_DIRECTIONS, n)) + 0.05:
        directions.append(tuple(row / row.sum()))

    taus = np.asarray(tau_grid)
    classes = []
    for d in directions:
        pts = taus[:, None] * np.asarray(d)[None, :]
        h = eval_b_many(model, pts) / taus
        classes.append(classify_sequence(h))

    report = AssumptionReport(
        model_id=model.model_id,
        b_at_zero=b0,
        zero_deviation=abs(b0),
        box_radius=box_radius,
        shell_points=int(shell.shape[0]),
        c_est=c_est,
        C_est=C_est,
        tau_grid=tau_grid,
        directions=tuple(tuple(float(x) for x in d) for d in directions),
        direction_classes=tuple(classes),
        classification=_combine_classes(classes),
    )
    logger.debug(f"Assumption report for {model.model_id}: c={c_est:.4g}, C={C_est:.4g}, H {report.classification}")
    return report
