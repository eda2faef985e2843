"""
Tests for rationals module.

Tests the utils/rationals.py module including:
- Parsing exact rationals
- Exact linear solves and interpolation
"""

from fractions import Fraction

import pytest


class TestParseRational:
    """Tests for parse_rational"""

    @pytest.mark.parametrize('value,expected', [
        (3, Fraction(3)),
        ('5/16', Fraction(5, 16)),
        (['5', '16'], Fraction(5, 16)),
        ((2, 4), Fraction(1, 2)),
        (Fraction(7, 3), Fraction(7, 3)),
    ])
    def test_accepted_forms(self, value, expected):
        """Test every accepted input form"""
        from utils.rationals import parse_rational

        assert parse_rational(value) == expected

    @pytest.mark.parametrize('value', [0.5, 'abc', '1/0', [1, 2, 3]])
    def test_rejected_forms(self, value):
        """Test that floats and malformed values are rejected"""
        from utils.errors import ArgumentError
        from utils.rationals import parse_rational

        with pytest.raises(ArgumentError):
            parse_rational(value)

    def test_json_form(self):
        """Test the [numerator, denominator] JSON form"""
        from utils.rationals import rational_to_json

        assert rational_to_json(Fraction(-3, 8)) == ['-3', '8']


class TestExactAlgebra:
    """Tests for exact linear algebra helpers"""

    def test_lcm_of_denominators(self):
        """Test the common denominator"""
        from utils.rationals import lcm_of_denominators

        assert lcm_of_denominators([Fraction(1, 4), Fraction(5, 6), 2]) == 12
        assert lcm_of_denominators([]) == 1

    def test_solve_exact(self):
        """Test an exact 2x2 solve"""
        from utils.rationals import solve_exact

        solution = solve_exact([[1, Fraction(1, 2)], [Fraction(1, 2), 1]], [1, 1])
        assert solution == [Fraction(2, 3), Fraction(2, 3)]

    def test_solve_singular(self):
        """Test that a singular system returns None"""
        from utils.rationals import solve_exact

        assert solve_exact([[1, 2], [2, 4]], [1, 2]) is None

    def test_polynomial_through(self):
        """Test interpolation of C(j + 2, 2)"""
        from utils.rationals import evaluate_polynomial, polynomial_through

        coeffs = polynomial_through([0, 1, 2], [1, 3, 6])
        assert coeffs == [Fraction(1), Fraction(3, 2), Fraction(1, 2)]
        assert evaluate_polynomial(coeffs, 10) == 66

    def test_repeated_nodes(self):
        """Test that repeated nodes are rejected"""
        from utils.errors import ArgumentError
        from utils.rationals import polynomial_through

        with pytest.raises(ArgumentError):
            polynomial_through([1, 1], [2, 2])
