"""
Exact rational helpers shared by the polytope and index-set services.
"""
import math
from fractions import Fraction
from typing import List, Optional, Sequence

from utils.errors import ArgumentError


def parse_rational(value) -> Fraction:
    """Accept 3, "5/16", ["5", "16"], (5, 16) or a Fraction."""
    try:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ArgumentError(f"Rational pair must have two entries, got {value!r}")
            return Fraction(int(value[0]), int(value[1]))
        if isinstance(value, float):
            raise ArgumentError(f"Refusing float {value!r} as an exact rational; give 'p/q'")
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise ArgumentError(f"Invalid rational {value!r}: {e}")


def rational_to_json(value: Fraction):
    return [str(value.numerator), str(value.denominator)]


def lcm_of_denominators(values: Sequence[Fraction]) -> int:
    result = 1
    for v in values:
        result = math.lcm(result, Fraction(v).denominator)
    return result


def solve_exact(matrix: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[Fraction]]:
    """Gauss-Jordan elimination over the rationals; None when singular."""
    n = len(matrix)
    aug = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return [row[n] for row in aug]


def polynomial_through(points: Sequence[int], values: Sequence[int]) -> List[Fraction]:
    """Coefficients c_0..c_d of the unique polynomial of degree d = len(points) - 1
    through (points[k], values[k]), lowest degree first."""
    d = len(points) - 1
    matrix = [[Fraction(x) ** i for i in range(d + 1)] for x in points]
    coeffs = solve_exact(matrix, [Fraction(v) for v in values])
    if coeffs is None:
        raise ArgumentError(f"Interpolation nodes are not distinct: {list(points)}")
    return coeffs


def evaluate_polynomial(coeffs: Sequence[Fraction], x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc
