"""
Tests for estimates module.

Tests the services/estimates.py module including:
- Asymptotic upper and lower bounds
- Sums of j^N e^{-j} and Li_{-N}
- Pre-asymptotic bounds
- Stechkin-type and complex bounds
- Minimum cardinalities and level comparisons
"""

import math

import mpmath
import pytest

from tests.conftest import make_weighted

E = math.e


class TestAsymptoticBounds:
    """Tests for upper and lower asymptotic bounds"""

    def test_upper_constant_values(self):
        """Test C_u at eps = 0 and eps = 0.3"""
        from services.estimates import upper_constant

        assert upper_constant(0) == pytest.approx((4 * E - 2) * E / (E - 1), rel=1e-15)
        assert upper_constant(0) == pytest.approx(14.0371, abs=1e-3)
        assert upper_constant(0.3) == pytest.approx(19.1974, abs=1e-3)

    def test_rate_factor(self):
        """Test (1 + eps)^{-1/N}"""
        from services.estimates import rate_factor

        assert rate_factor(1.0, 1) == 0.5
        assert rate_factor(15.0, 4) == pytest.approx(0.5, rel=1e-15)

    def test_upper_formula(self):
        """Test C_u M exp(-(M / (|P| (1 + eps)))^{1/N})"""
        from services.estimates import upper_asymptotic, upper_constant

        value = upper_asymptotic(23, 4, 1 / 192, 0.3)
        expected = upper_constant(0.3) * 23 * math.exp(-(23 * 192 / 1.3) ** 0.25)
        assert value == pytest.approx(expected, rel=1e-13)

    def test_relaxed_upper(self):
        """Test that the relaxed form multiplies by (N + 1)/2"""
        from services.estimates import upper_asymptotic

        strict = upper_asymptotic(100, 3, 0.5, 1.0)
        assert upper_asymptotic(100, 3, 0.5, 1.0, relaxed=True) == pytest.approx(2 * strict, rel=1e-15)

    def test_upper_increases_with_eps(self):
        """Test monotonicity of the upper bound in eps"""
        from services.estimates import upper_asymptotic

        values = [upper_asymptotic(500, 4, 1 / 192, eps) for eps in (0.1, 0.3, 1.0, 4.0)]
        assert values == sorted(values)

    def test_lower_constant(self):
        """Test C_l for N = 1, q = 1, |P| = 1 and for P2"""
        from services.estimates import lower_constant

        assert lower_constant(1, 1.0, 1) == pytest.approx(0.5 / (E - 1), rel=1e-14)
        assert lower_constant(4, 1 / 192, 4) == pytest.approx(0.029585, abs=1e-5)

    def test_lower_formula(self):
        """Test C_l M^{1 - 1/N} exp(-(M/|P|)^{1/N})"""
        from services.estimates import lower_asymptotic, lower_constant

        value = lower_asymptotic(23, 4, 1 / 192, 4)
        expected = lower_constant(4, 1 / 192, 4) * 23 ** 0.75 * math.exp(-(23 * 192) ** 0.25)
        assert value == pytest.approx(expected, rel=1e-13)

    def test_invalid_arguments(self):
        """Test that M < 1, eps <= 0 and N < 1 are rejected"""
        from services.estimates import upper_asymptotic
        from utils.errors import ArgumentError

        for args in ((0.5, 2, 1.0, 1.0), (10, 0, 1.0, 1.0), (10, 2, 1.0, 0.0), (10, 2, -1.0, 1.0)):
            with pytest.raises(ArgumentError):
                upper_asymptotic(*args)


class TestSumJN:
    """Tests for sum_{j >= J} j^N e^{-j} and its bounds"""

    def test_exact_against_polylog_difference(self):
        """Test sum_{j >= 3} j e^{-j} = Li_{-1}(1/e) - e^{-1} - 2 e^{-2}"""
        from services.estimates import sum_jN_exact

        z = math.exp(-1)
        expected = z / (1 - z) ** 2 - z - 2 * z * z
        assert sum_jN_exact(3, 1) == pytest.approx(expected, rel=1e-13)
        assert sum_jN_exact(3, 1) == pytest.approx(0.282124, abs=1e-6)

    def test_exact_against_mpmath(self):
        """Test large N against an mpmath sum"""
        from services.estimates import sum_jN_exact

        with mpmath.workdps(30):
            expected = mpmath.nsum(lambda j: j ** 20 * mpmath.e ** (-j), [10, mpmath.inf])
        assert sum_jN_exact(10, 20) == pytest.approx(float(expected), rel=1e-12)

    def test_bound_value(self):
        """Test the L = 2 bound at J = 3, N = 1"""
        from services.estimates import sum_jN_bound

        assert sum_jN_bound(3, 1) == pytest.approx(2 * 3 * math.exp(-3) * E / (E - 1), rel=1e-14)
        assert sum_jN_bound(3, 1) == pytest.approx(0.4726, abs=1e-4)

    def test_threshold(self):
        """Test max(1/(e^{1/N} - 1), L/(e^{(L-1)/N} - 1))"""
        from services.estimates import sum_jN_threshold

        assert sum_jN_threshold(1, 2) == pytest.approx(max(1 / (E - 1), 2 / (E - 1)), rel=1e-15)
        assert sum_jN_threshold(20, 2) == pytest.approx(2 / math.expm1(1 / 20), rel=1e-15)

    def test_below_threshold(self):
        """Test DomainError with the threshold below the regime"""
        from services.estimates import sum_jN_bound
        from utils.errors import DomainError

        with pytest.raises(DomainError) as exc_info:
            sum_jN_bound(10, 20)
        assert exc_info.value.details['reason'] == 'below_threshold'
        assert exc_info.value.details['threshold'] == pytest.approx(39.0, abs=0.1)

    def test_bracket_holds(self):
        """Test lower <= exact <= bound above the threshold"""
        from services.estimates import sum_jN_bound, sum_jN_exact, sum_jN_lower, sum_jN_threshold

        for N in (1, 2, 4, 8, 20):
            for L in (2, N + 1):
                if L < 2:
                    continue
                start = math.ceil(sum_jN_threshold(N, L))
                for J in range(start, start + 3 * N + 5):
                    exact = sum_jN_exact(J, N)
                    assert sum_jN_lower(J, N) <= exact <= sum_jN_bound(J, N, L), (N, L, J)

    def test_L_below_two(self):
        """Test that L < 2 is rejected"""
        from services.estimates import sum_jN_threshold
        from utils.errors import ArgumentError

        with pytest.raises(ArgumentError):
            sum_jN_threshold(3, 1.5)


class TestPolylog:
    """Tests for polylog_neg"""

    def test_closed_forms(self):
        """Test Li_{-1}(1/e), Li_0(1/2) and Li_{-2}(1/2)"""
        from services.estimates import polylog_neg

        assert polylog_neg(1, 1 / E) == pytest.approx(E / (E - 1) ** 2, rel=1e-14)
        assert polylog_neg(1, 1 / E) == pytest.approx(0.92067, abs=1e-5)
        assert polylog_neg(0, 0.5) == pytest.approx(1.0, rel=1e-14)
        assert polylog_neg(2, 0.5) == pytest.approx(6.0, rel=1e-14)

    def test_against_mpmath(self):
        """Test N in {4, 8, 12, 20} against mpmath.polylog"""
        from services.estimates import polylog_neg

        for N in (4, 8, 12, 20):
            expected = float(mpmath.polylog(-N, mpmath.e ** -1))
            assert polylog_neg(N, 1 / E) == pytest.approx(expected, rel=1e-12), N

    def test_z_out_of_range(self):
        """Test that z outside (0, 1) is rejected"""
        from services.estimates import polylog_neg
        from utils.errors import ArgumentError

        for z in (0.0, 1.0, 1.5):
            with pytest.raises(ArgumentError):
                polylog_neg(2, z)


class TestPreAsymptotic:
    """Tests for pre-asymptotic bounds"""

    def test_first_level_equals_polylog(self):
        """Test that the sum bound at J = 1 is Li_{-N}(1/e)"""
        from services.estimates import polylog_neg, pre_asymptotic_sum_bound

        assert pre_asymptotic_sum_bound(1, 20) == polylog_neg(20, 1 / E)

    def test_dominates_and_is_tight(self):
        """Test bound >= exact for J <= N + 1 and ratio <= 1.5 for J <= 5 at N = 20"""
        from services.estimates import pre_asymptotic_sum_bound, sum_jN_exact

        for J in range(1, 22):
            bound = pre_asymptotic_sum_bound(J, 20)
            exact = sum_jN_exact(J, 20)
            assert bound >= exact, J
            if J <= 5:
                assert bound / exact <= 1.5, J

    def test_outside_regime(self):
        """Test that J > N + 1 raises DomainError"""
        from services.estimates import pre_asymptotic_sum_bound
        from utils.errors import DomainError

        with pytest.raises(DomainError):
            pre_asymptotic_sum_bound(5, 3)

    def test_tail_bound_dominates_isotropic_tails(self, p1_model):
        """Test the pre-asymptotic tail bound on P1 at levels J <= N"""
        from services.estimates import pre_asymptotic_tail_bound
        from services.index_sets import count_superlevel
        from services.tails import exact_tail

        max_M = count_superlevel(p1_model, 4)
        for J in range(5):
            M = math.comb(J + 4, 4)
            bound = pre_asymptotic_tail_bound(M, 4, sigma=5, max_M=max_M)
            assert bound >= exact_tail(p1_model, M).tail, J

    def test_tail_bound_beyond_max_M(self):
        """Test that M above #P_N raises DomainError"""
        from services.estimates import pre_asymptotic_tail_bound
        from utils.errors import DomainError

        with pytest.raises(DomainError):
            pre_asymptotic_tail_bound(100, 4, sigma=5, max_M=70)


class TestStechkin:
    """Tests for Stechkin-type bounds"""

    def test_stechkin_at_one(self):
        """Test that M = 1 leaves only the l^p norm factor"""
        from services.estimates import stechkin

        lam = [1.0, 2.0]
        expected = (1 / ((1 - math.exp(-0.5)) * (1 - math.exp(-1.0)))) ** 2
        assert stechkin(1, lam, 0.5) == pytest.approx(expected, rel=1e-14)

    def test_stechkin_dominates_exact_tails(self, p2_model):
        """Test that every Stechkin bound dominates the exact tail on P2"""
        from services.estimates import stechkin
        from services.index_sets import level_cardinalities
        from services.tails import exact_tail

        levels = list(range(0, 21, 4))
        for M in level_cardinalities(p2_model, levels):
            tail = exact_tail(p2_model, M).tail
            for p in (0.3, 0.5, 0.7, 0.9):
                assert stechkin(M, p2_model.lam, p) >= tail

    def test_stechkin_p_range(self):
        """Test that p must lie in (0, 1)"""
        from services.estimates import stechkin
        from utils.errors import ArgumentError

        for p in (0.0, 1.0, 1.2):
            with pytest.raises(ArgumentError):
                stechkin(5, [1.0], p)

    def test_optimized_xi_range(self):
        """Test that xi above (e - 1)/e is rejected"""
        from services.estimates import stechkin_optimized, xi_max
        from utils.errors import ArgumentError

        assert stechkin_optimized(10, 2, [1.0, 1.0], xi_max()) > 0
        with pytest.raises(ArgumentError):
            stechkin_optimized(10, 2, [1.0, 1.0], 0.7)

    def test_optimized_formula(self):
        """Test M exp(-(1/e)(M prod lambda)^{1/N} N xi)"""
        from services.estimates import stechkin_optimized

        value = stechkin_optimized(16, 2, [1.0, 4.0], 0.5)
        assert value == pytest.approx(16 * math.exp(-(1 / E) * 8 * 2 * 0.5), rel=1e-14)

    def test_iso_optimized_threshold(self):
        """Test that M <= 1.09^N raises DomainError"""
        from services.estimates import iso_optimized
        from utils.errors import DomainError

        with pytest.raises(DomainError):
            iso_optimized(1, 8, 1.0)
        assert iso_optimized(2, 8, 1.0) > 0

    def test_min_iso_stechkin(self):
        """Test that the grid minimum is no larger than any grid value"""
        from services.estimates import iso_stechkin, min_iso_stechkin, tangency_grid

        grid = tangency_grid()
        assert len(grid) == 64
        assert grid[-1] == pytest.approx(4.0)
        value, p = min_iso_stechkin(500, 8, 1.0)
        assert p in list(grid)
        assert all(value <= iso_stechkin(500, 8, 1.0, float(q)) for q in grid)

    def test_complex_bound_one_dimensional(self):
        """Test that the complex bound at N = 1 is the level bound"""
        from services.estimates import complex_bound, complex_level_bound

        for M in (1, 5, 12):
            assert complex_bound(M, 1, 0.7) == pytest.approx(complex_level_bound(M, 0.7), rel=1e-14)

    def test_crossover_on_p2(self, p2_model):
        """Test that the asymptotic bound falls below Stechkin before J = 40"""
        from services.estimates import stechkin_crossover

        crossover = stechkin_crossover(p2_model, p2_model.lam, 0.3, J_max=40)
        assert crossover is not None
        assert crossover < 40


class TestMinCardinality:
    """Tests for min_cardinality and delta_scan"""

    def test_isotropic_four_simplex(self, p1_model):
        """Test Delta, J, M and M' on P1 for eps = 4 and eps = 1"""
        from services.estimates import min_cardinality

        result = min_cardinality(p1_model, 4.0)
        assert result.delta == 4
        assert result.J == pytest.approx(2 / math.expm1(0.25), rel=1e-14)
        assert result.M == math.comb(12, 4)
        assert result.J_prime == 4.0
        assert result.M_prime == math.comb(8, 4)

        result = min_cardinality(p1_model, 1.0)
        assert result.delta == 12
        assert result.J == 12.0
        assert result.M == math.comb(16, 4)
        assert result.M_prime == math.comb(16, 4)
        assert result.scan_ceiling == 119
        assert result.scan_start == 39
        assert min_cardinality(p1_model, 4.0).scan_start == 9

    def test_scan_matches_direct_evaluation(self, p2_model):
        """Test that the integer scan finds the same Delta as evaluating E*(j) up to the dominance ceiling"""
        from fractions import Fraction
        from services.estimates import delta_scan
        from services.polytope import ehrhart_fit

        qp = ehrhart_fit(p2_model)
        for eps in (0.05, 0.3, 1.0, 4.0):
            delta, ceiling, start = delta_scan(qp, eps)
            assert 1 <= start <= ceiling
            factor = (1 + Fraction(eps)) * qp.leading
            violations = [j for j in range(1, ceiling + 1) if qp.evaluate(j) > factor * j ** 4]
            assert delta == max(violations, default=0), eps

    def test_eight_simplex_scan_start(self):
        """Test that P3 at eps = 0.1 scans from 2879 instead of the 3628790 dominance ceiling"""
        from fractions import Fraction
        from services.estimates import delta_scan
        from services.polytope import ehrhart_fit
        from services.presets import load_preset

        qp = ehrhart_fit(load_preset('P3'))
        delta, ceiling, start = delta_scan(qp, 0.1)
        assert ceiling == 3628790
        assert start == 2879
        factor = (1 + Fraction(0.1)) / 40320
        violations = [j for j in range(1, 2 * start) if math.comb(j + 8, 8) > factor * j ** 8]
        assert delta == max(violations)
        assert delta < start

    def test_delta_nonincreasing_in_eps(self, p2_model):
        """Test that Delta_eps does not grow with eps"""
        from services.estimates import min_cardinality
        from services.polytope import ehrhart_fit

        qp = ehrhart_fit(p2_model)
        deltas = [min_cardinality(p2_model, eps, ehrhart=qp).delta for eps in (0.05, 0.1, 0.3, 1.0, 4.0)]
        assert deltas == sorted(deltas, reverse=True)

    def test_J_at_least_regime_threshold(self, p2_model):
        """Test J_eps >= 2/(e^{1/N} - 1) and M_eps = E*(ceil J_eps)"""
        from services.estimates import min_cardinality
        from services.polytope import ehrhart_fit

        qp = ehrhart_fit(p2_model)
        for eps in (0.3, 1.0, 4.0):
            result = min_cardinality(p2_model, eps, ehrhart=qp)
            assert result.J >= 2 / math.expm1(1 / 4)
            assert result.M == qp.evaluate(math.ceil(result.J))
            assert result.rate_factor == pytest.approx((1 + eps) ** -0.25)

    def test_no_violation_gives_zero(self):
        """Test that Delta = 0 when E*(j) never exceeds (1 + eps)|P| j^N"""
        from services.estimates import delta_scan
        from services.polytope import ehrhart_fit

        qp = ehrhart_fit(make_weighted([1]))
        # E*(j) = j + 1 <= (1 + eps) j for j >= 1 once eps >= 1
        assert delta_scan(qp, 1.0)[0] == 0

    def test_needs_rational_homogeneous(self):
        """Test DomainError for models without an Ehrhart fit"""
        from services.estimates import min_cardinality
        from utils.errors import DomainError

        with pytest.raises(DomainError):
            min_cardinality(make_weighted([math.pi]), 1.0)

    def test_to_dict_keys(self, p1_model):
        """Test the serialized column names"""
        from services.estimates import min_cardinality

        data = min_cardinality(p1_model, 4.0).to_dict()
        assert set(data) == {'model_id', 'epsilon', 'Delta_eps', 'J_eps', 'M_eps', 'Jp_eps', 'Mp_eps',
                             'rate_factor', 'scan_ceiling', 'scan_start'}


class TestLevelComparisons:
    """Tests for level comparisons and empirical minimum cardinalities"""

    def test_sandwich_on_p2(self, p2_model):
        """Test lower <= exact <= upper from J = 4 on for eps = 0.3"""
        from services.estimates import level_comparisons, lower_asymptotic

        for row in level_comparisons(p2_model, 0.3, J_max=40):
            if row.J >= 4:
                assert row.exact <= row.upper, row.J
                assert lower_asymptotic(row.M, 4, 1 / 192, 4) <= row.exact, row.J

    def test_empirical_thresholds(self, p2_model):
        """Test the first holding level on P2 for eps = 4, 1 and 0.3"""
        from services.estimates import empirical_min_cardinality

        assert empirical_min_cardinality(p2_model, 4.0, J_max=40) == (0, 1)
        assert empirical_min_cardinality(p2_model, 1.0, J_max=40) == (1, 3)
        assert empirical_min_cardinality(p2_model, 0.3, J_max=40) == (4, 23)

    def test_empirical_respects_later_failures(self):
        """Test that a failure after a holding level resets the threshold"""
        from services.estimates import LevelComparison, empirical_min_cardinality

        rows = [LevelComparison(0, 1, 2.0, 1.0), LevelComparison(1, 3, 1.0, 2.0),
                LevelComparison(2, 7, 1.0, 0.5), LevelComparison(3, 13, 0.1, 0.2)]
        assert empirical_min_cardinality(None, 1.0, comparisons=rows) == (3, 13)
        assert empirical_min_cardinality(None, 1.0, comparisons=rows[:1]) is None
