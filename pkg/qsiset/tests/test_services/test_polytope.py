"""
Tests for polytope module.

Tests the services/polytope.py module including:
- Vertices and the period heuristic
- Ehrhart quasi-polynomial fitting and verification
- Lattice counts of dilations
- Volume by every method
"""

import math
from fractions import Fraction

import pytest
from scipy.integrate import quad
from scipy.special import xlogy

from tests.conftest import make_factorial, make_legendre, make_sup_affine, make_weighted


class TestVertices:
    """Tests for limiting_vertices and period_heuristic"""

    def test_weighted_linear_simplex(self, p2_model):
        """Test that P2 has the origin and the axis points 1/lambda_i e_i"""
        from services.polytope import limiting_vertices

        vertices = set(limiting_vertices(p2_model))
        expected = {
            (0, 0, 0, 0),
            (1, 0, 0, 0),
            (0, 1, 0, 0),
            (0, 0, Fraction(1, 2), 0),
            (0, 0, 0, Fraction(1, 4)),
        }
        assert vertices == expected

    def test_p5_vertex_count(self):
        """Test the 65 vertices of the 8-dimensional SupAffine preset P5"""
        from services.polytope import limiting_vertices, period_heuristic
        from services.presets import load_preset

        model = load_preset('P5')
        vertices = limiting_vertices(model)
        assert len(vertices) == 65
        assert (Fraction(6, 5), Fraction(4, 5), 0, 0, 0, 0, 0, 0) in vertices
        assert period_heuristic(model) == 5

    def test_period_heuristic_weighted_linear(self, p2_model):
        """Test lcm of the denominators of 1/lambda_i"""
        from services.polytope import period_heuristic

        assert period_heuristic(p2_model) == 4
        assert period_heuristic(make_weighted(['2/3', 1])) == 2

    def test_factorial_is_not_a_polytope(self):
        """Test that FactorialAlpha has no vertex description"""
        from services.polytope import limiting_vertices
        from utils.errors import DomainError

        with pytest.raises(DomainError):
            limiting_vertices(make_factorial([0.3, 0.4]))

    def test_sup_affine_square(self):
        """Test a two-row SupAffine polytope"""
        from services.polytope import limiting_vertices

        model = make_sup_affine([(0.0, (1, '1/2')), (0.0, ('1/2', 1))])
        vertices = set(limiting_vertices(model))
        assert vertices == {(0, 0), (1, 0), (0, 1), (Fraction(2, 3), Fraction(2, 3))}


class TestEhrhart:
    """Tests for ehrhart_fit"""

    def test_isotropic_8_simplex(self):
        """Test that P3 gives E*(j) = C(j + 8, 8) with period 1"""
        from services.polytope import ehrhart_fit
        from services.presets import load_preset

        qp = ehrhart_fit(load_preset('P3'))
        assert qp.q == 1
        assert qp.leading == Fraction(1, math.factorial(8))
        for j in range(26):
            assert qp.evaluate(j) == math.comb(j + 8, 8)

    def test_p2_quasi_polynomial(self, p2_model):
        """Test P2: period 4, volume 1/192, and the known counts"""
        from services.polytope import ehrhart_fit

        qp = ehrhart_fit(p2_model)
        assert qp.q == 4
        assert qp.leading == Fraction(1, 192)
        assert [qp.evaluate(j) for j in range(6)] == [1, 3, 7, 13, 23, 37]
        assert len(qp.verified_points) >= max(2 * qp.q, 16)

    def test_verified_points_follow_fit(self, p2_model):
        """Test that held-out points lie strictly above the fitted ones"""
        from services.polytope import ehrhart_fit

        qp = ehrhart_fit(p2_model, max_verify=20)
        assert min(qp.verified_points) > max(qp.fitted_points)
        assert len(qp.verified_points) == 20

    def test_forced_wrong_period_fails(self, p2_model):
        """Test that a forced period which cannot fit raises ConsistencyError"""
        from services.polytope import ehrhart_fit
        from utils.errors import ConsistencyError

        with pytest.raises(ConsistencyError) as exc_info:
            ehrhart_fit(p2_model, period=3)
        assert exc_info.value.exit_code == 5
        assert exc_info.value.details['reason'] == 'ehrhart_verification'

    def test_forced_multiple_of_period(self, p2_model):
        """Test that any multiple of the true period also fits"""
        from services.polytope import ehrhart_fit

        qp = ehrhart_fit(p2_model, period=8)
        assert qp.q == 8
        assert qp.leading == Fraction(1, 192)

    def test_escalates_from_small_heuristic(self, p2_model, monkeypatch):
        """Test that a too-small initial period is doubled until it verifies"""
        from services import polytope

        monkeypatch.setattr(polytope, 'period_heuristic', lambda model: 1)
        qp = polytope.ehrhart_fit(p2_model)
        assert qp.q == 4
        assert qp.metadata['initial_period'] == 1

    @pytest.mark.slow
    def test_p5_volume_matches_hull(self):
        """Test the fitted leading coefficient of P5 against the convex hull volume"""
        from services.polytope import CONVEX_HULL, ehrhart_fit, volume
        from services.presets import load_preset

        model = load_preset('P5')
        qp = ehrhart_fit(model)
        assert qp.q == 5
        hull = volume(model, method=CONVEX_HULL).volume
        assert float(qp.leading) == pytest.approx(hull, rel=1e-9)

    def test_needs_rational_homogeneous(self):
        """Test that offsets or float weights are rejected"""
        from services.polytope import ehrhart_fit
        from utils.errors import DomainError

        with pytest.raises(DomainError):
            ehrhart_fit(make_sup_affine([(0.5, (1, 1))]))
        with pytest.raises(DomainError):
            ehrhart_fit(make_weighted([math.pi, 1.0]))

    def test_document_round_trip(self, p2_model):
        """Test EhrhartQP serialization"""
        from services.polytope import EhrhartQP, ehrhart_fit

        qp = ehrhart_fit(p2_model)
        data = qp.to_dict()
        assert data['volume_exact'] == '1/192'
        again = EhrhartQP.from_dict(data)
        assert again.coeffs == qp.coeffs
        assert again.evaluate(17) == qp.evaluate(17)

    def test_invalid_document(self):
        """Test that a malformed document raises ArgumentError"""
        from services.polytope import EhrhartQP
        from utils.errors import ArgumentError

        with pytest.raises(ArgumentError):
            EhrhartQP.from_dict({'N': 2})

    def test_count_bounds(self, p2_model):
        """Test |P| j^N <= E*(j) <= sigma j^N on P2"""
        from services.polytope import count_bounds_hold, ehrhart_fit, lattice_point_count

        qp = ehrhart_fit(p2_model)
        sigma = lattice_point_count(p2_model)
        assert sigma == 3
        assert count_bounds_hold(qp, sigma, range(0, 30)) == []
        assert count_bounds_hold(qp, 1, range(1, 5)) != []


class TestLatticeCounts:
    """Tests for scaled_lattice_count"""

    def test_integer_dilation_uses_histogram(self, p2_model):
        """Test #(j P) = E*(j) for P2"""
        from services.polytope import scaled_lattice_count

        assert [scaled_lattice_count(p2_model, j) for j in (1, 2, 5)] == [3, 7, 37]

    def test_fractional_dilation(self, p2_model):
        """Test that a non-integer dilation counts the same points as its floor for integer weights"""
        from services.polytope import scaled_lattice_count

        assert scaled_lattice_count(p2_model, 5.5) == 37

    def test_legendre_dilation(self):
        """Test #(tau P) for LegendreSqrt where P = {2 lambda nu <= 1}"""
        from services.polytope import scaled_lattice_count

        model = make_legendre([1.0])
        assert scaled_lattice_count(model, 9.0) == 5

    def test_factorial_matches_direct_scan(self):
        """Test the FactorialAlpha counter against a direct scan"""
        from services.bounds import factorial_limit_excess
        from services.polytope import scaled_lattice_count

        model = make_factorial([0.3, 0.4])
        tau = 12.0
        direct = sum(
            1 for a in range(60) for b in range(60)
            if factorial_limit_excess(model, (a, b)) < tau / 2
        )
        assert scaled_lattice_count(model, tau) == direct

    def test_tau_must_be_positive(self, p2_model):
        """Test that tau <= 0 is rejected"""
        from services.polytope import scaled_lattice_count
        from utils.errors import ArgumentError

        with pytest.raises(ArgumentError):
            scaled_lattice_count(p2_model, 0)


class TestVolume:
    """Tests for volume"""

    def test_analytic_simplex(self, p2_model):
        """Test |P| = 1/(N! prod lambda_i)"""
        from services.polytope import ANALYTIC_SIMPLEX, volume

        result = volume(p2_model)
        assert result.method == ANALYTIC_SIMPLEX
        assert result.exact_volume == Fraction(1, 192)
        assert result.volume == 1 / 192

    def test_legendre_analytic(self):
        """Test that LegendreSqrt with lambda = 1 has volume 1/2"""
        from services.polytope import volume

        assert volume(make_legendre([1.0])).volume == pytest.approx(0.5, rel=1e-15)
        assert volume(make_legendre([1.0, 2.0])).volume == pytest.approx(1 / 16, rel=1e-14)

    def test_convex_hull_matches_analytic(self, p2_model):
        """Test the hull volume of P2"""
        from services.polytope import CONVEX_HULL, volume

        assert volume(p2_model, method=CONVEX_HULL).volume == pytest.approx(1 / 192, rel=1e-9)

    def test_auto_picks_ehrhart_for_rational_sup_affine(self):
        """Test method selection for a homogeneous rational SupAffine model"""
        from services.polytope import EHRHART, volume

        model = make_sup_affine([(0.0, (1, '1/2')), (0.0, ('1/2', 1))])
        result = volume(model)
        assert result.method == EHRHART
        # two triangles of area 1/3 meeting at (2/3, 2/3)
        assert result.exact_volume == Fraction(2, 3)

    def test_auto_picks_hull_for_offsets(self):
        """Test that SupAffine with offsets uses the convex hull of its homogeneous limit"""
        from services.polytope import CONVEX_HULL, volume

        model = make_sup_affine([(0.5, (1, 2))])
        result = volume(model)
        assert result.method == CONVEX_HULL
        assert result.volume == pytest.approx(0.25, rel=1e-12)

    def test_lattice_scaling_weighted_linear(self):
        """Test lattice scaling on a triangle"""
        from services.polytope import LATTICE_SCALING, volume

        result = volume(make_weighted([1.0, 2.0]), method=LATTICE_SCALING)
        assert result.method == LATTICE_SCALING
        assert result.volume == pytest.approx(0.25, rel=1e-3)

    def test_factorial_area_against_quadrature(self):
        """Test the FactorialAlpha area for alpha = (1/e, 1/e) against a one-dimensional integral"""
        from services.polytope import LATTICE_SCALING, volume

        def entropy(s):
            return -float(xlogy(s, s) + xlogy(1 - s, 1 - s))

        area, _ = quad(lambda s: 1.0 / (8.0 * (1.0 - entropy(s)) ** 2), 0.0, 1.0)
        model = make_factorial([math.exp(-1), math.exp(-1)])
        result = volume(model)
        assert result.method == LATTICE_SCALING
        assert result.volume == pytest.approx(area, rel=1e-2)

    def test_analytic_rejected_for_factorial(self):
        """Test that analytic_simplex is refused for FactorialAlpha"""
        from services.polytope import ANALYTIC_SIMPLEX, volume
        from utils.errors import DomainError

        with pytest.raises(DomainError):
            volume(make_factorial([0.3, 0.4]), method=ANALYTIC_SIMPLEX)

    def test_unknown_method(self, p2_model):
        """Test that an unknown method is rejected"""
        from services.polytope import volume
        from utils.errors import ArgumentError

        with pytest.raises(ArgumentError):
            volume(p2_model, method='monte_carlo')

    def test_unreachable_tolerance(self, monkeypatch):
        """Test that the dilation cap raises with a best estimate"""
        from services.polytope import LATTICE_SCALING, volume
        from utils.config import Config
        from utils.errors import ResourceLimitError

        monkeypatch.setattr(Config, 'VOLUME_TAU_CAP', 32)
        with pytest.raises(ResourceLimitError) as exc_info:
            volume(make_factorial([0.3, 0.4]), method=LATTICE_SCALING, tol=1e-12)
        assert exc_info.value.best_estimate is not None
        assert exc_info.value.details['reason'] == 'volume_tol_unreachable'

    def test_exact_volume(self, p2_model):
        """Test exact volumes of rational models"""
        from services.polytope import exact_volume
        from services.presets import load_preset

        assert exact_volume(p2_model) == Fraction(1, 192)
        assert exact_volume(load_preset('P3')) == Fraction(1, 40320)
