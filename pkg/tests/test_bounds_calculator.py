"""
Tests for the closed-form bounds and their certified enclosures.
"""
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from src.models.bounds_calculator import (
    BoundParams,
    BoundResult,
    BoundsCalculator,
    ConstantsProfile,
    Quantity,
    check_regime,
    eval_cell_decomposition,
    eval_g2_bound,
    eval_g3_bound,
    eval_kst,
    eval_main_bound,
    eval_rich_points_bound,
    eval_three_surface_cases,
    eval_total_and_dominance,
    eval_two_surface_cases,
    eval_zero_set_cases,
)
from src.models.errors import DomainError, InvariantViolationError
from src.models.incidence_counter import zarankiewicz_bruteforce

HALF = Fraction(1, 2)
TENTH = Fraction(1, 10)
UNIT = ConstantsProfile()


def precise(fn):
    """Evaluate fn well beyond the 128-bit enclosures."""
    with mpmath.workprec(512):
        return fn()


def encloses(result: BoundResult, value) -> bool:
    return result.lower <= value <= result.upper


class TestQuantity:
    @pytest.mark.unit
    def test_exact_powers_stay_exact(self):
        assert (Quantity.of(100) ** Fraction(3, 2)).exact == 1000
        assert (Quantity.of(Fraction(1, 16)) ** Fraction(-1, 4)).exact == 2
        assert (Quantity.of(0) ** HALF).exact == 0

    @pytest.mark.unit
    def test_irrational_power_is_enclosed(self):
        root = Quantity.of(2) ** HALF
        assert root.exact is None
        assert encloses(BoundResult("root", root), precise(lambda: mpmath.sqrt(2)))
        assert root.upper - root.lower < mpmath.mpf(2) ** -100

    @pytest.mark.unit
    def test_negative_base(self):
        with pytest.raises(DomainError):
            Quantity.of(-4) ** HALF
        with pytest.raises(DomainError):
            Quantity.of(0) ** -1

    @pytest.mark.unit
    def test_exact_zero_absorbs_an_enclosure(self):
        root = Quantity.of(2) ** HALF
        assert (Quantity.of(0) * root).exact == 0
        assert (root * 0).exact == 0
        assert eval_kst(5, 4, 1, 3).exact == 10

    @pytest.mark.unit
    def test_value_of_exact_fraction(self):
        assert Quantity.of(Fraction(1, 4)).value == mpmath.mpf("0.25")


class TestParams:
    @pytest.mark.unit
    @pytest.mark.parametrize(
        "kwargs",
        [{"L": 0, "S": 1}, {"L": 1, "S": -1}, {"L": 1, "S": 1, "D": 1}, {"L": 1, "S": 1, "epsilon": 0}],
    )
    def test_invalid_bound_params(self, kwargs):
        with pytest.raises(InvariantViolationError):
            BoundParams(**kwargs)

    @pytest.mark.unit
    def test_derived_constant(self):
        assert ConstantsProfile(2, 3).C3 == 9
        assert UNIT.C3 == Fraction(3, 2)
        with pytest.raises(InvariantViolationError):
            ConstantsProfile(1, 1, 1, C3=2)
        with pytest.raises(InvariantViolationError):
            ConstantsProfile(0, 1)
        assert ConstantsProfile(C4=0).C4 == 0

    @pytest.mark.unit
    def test_regime(self):
        assert check_regime(10 ** 6, 10 ** 4)[0]
        ok, detail = check_regime(10 ** 4, 2000)
        assert not ok and "S too large" in detail
        ok, detail = check_regime(10 ** 4, 10)
        assert not ok and "S too small" in detail
        assert check_regime(10 ** 4, 2001, factor=5)[0] is False
        assert check_regime(10 ** 4, 500, factor=5)[0] is True


class TestMainAndCells:
    @pytest.mark.unit
    def test_exponents_collapse(self):
        result = eval_main_bound(BoundParams(10 ** 4, 10 ** 3, epsilon=HALF))
        assert result.exact == 2 * 10 ** 7
        assert result.text() == "20000000"

    @pytest.mark.unit
    def test_irrational_main_bound(self):
        result = eval_main_bound(BoundParams(10 ** 4, 10 ** 3, epsilon=TENTH))
        expected = mpmath.mpf(10) ** mpmath.mpf("6.2") + mpmath.mpf(10) ** mpmath.mpf("5.8")
        assert float(result.value) == pytest.approx(2_215_850.5, abs=1)
        assert abs(result.value - expected) < 1e-6

    @pytest.mark.unit
    def test_single_line_single_flat(self):
        for eps in (TENTH, HALF, Fraction(3)):
            assert eval_main_bound(BoundParams(1, 1, epsilon=eps)).exact == 2

    @pytest.mark.unit
    def test_cell_decomposition(self):
        cells = eval_cell_decomposition(BoundParams(10 ** 4, 10 ** 3, D=16, epsilon=HALF))
        assert cells.summed_cell_bound.exact == 1_250_000
        assert cells.cell_count == 16 ** 4

    @pytest.mark.unit
    def test_per_cell_counts(self):
        cells = eval_cell_decomposition(BoundParams(8000, 1000, D=2))
        assert (cells.L_i, cells.cell_count) == (1000, 16)
        assert cells.S_i == 250

    @pytest.mark.property
    @settings(max_examples=40, deadline=None)
    @given(
        L=st.integers(1, 10 ** 7),
        S=st.integers(0, 10 ** 5),
        D=st.integers(2, 64),
        eps=st.fractions(min_value=Fraction(1, 100), max_value=1, max_denominator=100),
    )
    def test_cells_never_exceed_main(self, L, S, D, eps):
        p = BoundParams(L, S, D, eps)
        assert eval_cell_decomposition(p).summed_cell_bound.lower <= eval_main_bound(p).upper


class TestSurfaceBounds:
    @pytest.mark.unit
    def test_g2_collapses(self):
        result = eval_g2_bound(BoundParams(10 ** 6, 1, D=2, epsilon=HALF))
        assert result.exact == 16
        assert result.hypothesis_satisfied

    @pytest.mark.unit
    def test_g2_hypothesis_fails(self):
        result = eval_g2_bound(BoundParams(10 ** 6, 1, D=4, epsilon=TENTH))
        assert not result.hypothesis_satisfied
        assert "328" in result.hypothesis_detail
        assert result.value > 0

    @pytest.mark.unit
    def test_g3_collapses(self):
        result = eval_g3_bound(BoundParams(1, 10 ** 4, D=2, epsilon=HALF))
        assert result.exact == 8
        assert result.hypothesis_satisfied

    @pytest.mark.unit
    def test_g3_hypothesis_fails(self):
        assert not eval_g3_bound(BoundParams(1, 100, D=4, epsilon=TENTH)).hypothesis_satisfied

    @pytest.mark.unit
    def test_details_report_the_smallest_working_epsilon(self):
        g2 = eval_g2_bound(BoundParams(10 ** 6, 1, D=2, epsilon=Fraction(1, 5)))
        assert "holds for epsilon > 0.20" in g2.hypothesis_detail
        g3 = eval_g3_bound(BoundParams(1, 10 ** 4, D=2, epsilon=HALF))
        assert "holds for epsilon > " in g3.hypothesis_detail
        assert "no epsilon satisfies it" in eval_g2_bound(BoundParams(8, 1, D=2)).hypothesis_detail

    @pytest.mark.unit
    def test_three_surface_cases_without_flats(self):
        cases = eval_three_surface_cases(BoundParams(5, 0), UNIT)
        assert cases.case1.exact == 0 and cases.case2.exact == 0
        assert not cases.case1.hypothesis_satisfied
        assert cases.kst is None

    @pytest.mark.unit
    def test_two_surface_cases(self):
        case1, case2, case3 = eval_two_surface_cases(BoundParams(10 ** 4, 10 ** 3, D=2, epsilon=HALF), UNIT)
        assert case1.exact == 32_000
        assert case3.exact == 320_000
        assert float(case2.value) == pytest.approx(3_794_733.19, abs=1)
        assert encloses(case2, precise(lambda: 12 * 10 ** 4 * mpmath.sqrt(1000)))

    @pytest.mark.unit
    def test_two_surface_case2_single_flat(self):
        _, case2, _ = eval_two_surface_cases(BoundParams(10 ** 4, 1, D=2, epsilon=HALF), UNIT)
        assert case2.exact == Fraction(3, 2) * 8 * 10 ** 4

    @pytest.mark.unit
    def test_two_surface_case2_needs_separation(self):
        _, case2, _ = eval_two_surface_cases(BoundParams(10 ** 4, 10 ** 3, D=2, epsilon=HALF), UNIT)
        assert not case2.hypothesis_satisfied
        assert "100*G2" in case2.hypothesis_detail

    @pytest.mark.unit
    def test_three_surface_cases(self):
        cases = eval_three_surface_cases(BoundParams(10 ** 4, 10 ** 3, D=2, epsilon=HALF), UNIT)
        assert cases.case1.exact == 160_000
        assert cases.case2.exact == 9 * 10 ** 7
        assert cases.kst is not None and cases.kst.exact == 80_000

    @pytest.mark.unit
    def test_three_surface_single_line(self):
        cases = eval_three_surface_cases(BoundParams(1, 16, D=2, epsilon=HALF), UNIT)
        # second term of case 2 is S^(1/2+eps) = 16
        assert cases.case2.exact == 2 * 4 * 16 + 16


class TestKst:
    @pytest.mark.unit
    def test_integer_case(self):
        assert eval_kst(4, 4, 2, 2).exact == 10

    @pytest.mark.unit
    def test_dominates_bruteforce(self):
        result = eval_kst(2, 2, 2, 2)
        assert encloses(result, precise(lambda: mpmath.sqrt(2) + 2))
        assert zarankiewicz_bruteforce(2, 2, 2, 2) <= result.lower

    @pytest.mark.unit
    def test_s_equal_one(self):
        assert eval_kst(5, 4, 1, 3).exact == 10

    @pytest.mark.unit
    def test_domain(self):
        with pytest.raises(DomainError):
            eval_kst(0, 4, 2, 2)
        with pytest.raises(DomainError):
            eval_kst(4, 2, 2, 3)


class TestRichPoints:
    @pytest.mark.unit
    def test_exact_value(self):
        result = eval_rich_points_bound(100, 2, 0, 4)
        assert result.exact == 1000
        assert result.hypothesis_satisfied

    @pytest.mark.unit
    def test_irrational_value(self):
        result = eval_rich_points_bound(100, 2, TENTH, 2)
        assert float(result.value) == pytest.approx(792.45, abs=0.01)

    @pytest.mark.unit
    def test_doubling_r_quarters_the_value(self):
        a = eval_rich_points_bound(100, 2, TENTH, 2)
        b = eval_rich_points_bound(100, 4, TENTH, 2)
        assert abs(a.value / b.value - 4) < 1e-12

    @pytest.mark.unit
    def test_r_out_of_range(self):
        result = eval_rich_points_bound(100, 21, 0, 1)
        assert not result.hypothesis_satisfied
        assert "outside" in result.hypothesis_detail


class TestZeroSet:
    @pytest.mark.unit
    def test_case_sum(self):
        cases = eval_zero_set_cases(BoundParams(100, 25, D=2, epsilon=HALF), UNIT)
        assert [c.exact for c in cases.cases] == [200, 50, 1250, 2500]
        assert cases.total.exact == 4000

    @pytest.mark.unit
    def test_no_flats(self):
        cases = eval_zero_set_cases(BoundParams(100, 0, D=2, epsilon=HALF), UNIT)
        assert cases.total.exact == 200

    @pytest.mark.unit
    def test_case3_gated_by_constant(self):
        cases = eval_zero_set_cases(BoundParams(100, 25, D=2, epsilon=TENTH), ConstantsProfile(C4=0))
        assert cases.cases[2].upper == 0

    @pytest.mark.unit
    def test_case3_hypothesis(self):
        assert eval_zero_set_cases(BoundParams(1000, 100), UNIT).cases[2].hypothesis_satisfied
        assert not eval_zero_set_cases(BoundParams(100, 25), UNIT).cases[2].hypothesis_satisfied


class TestTotal:
    @pytest.mark.unit
    def test_total_composition(self):
        p = BoundParams(10 ** 4, 10 ** 3, D=2, epsilon=HALF)
        d = eval_total_and_dominance(p, UNIT)
        assert d.main.exact == 2 * 10 ** 7
        assert set(d.summands) == {
            "cells",
            "two-surface case 1",
            "two-surface case 2",
            "two-surface case 3",
            "three-surface case 1",
            "three-surface case 2",
            "zero-set",
        }
        expected = precise(lambda: (
            10 ** 7 + 32_000 + 320_000 + 160_000 + 9 * 10 ** 7 + 15_022_000
            + 12 * 10 ** 4 * mpmath.sqrt(1000)
        ))
        assert encloses(d.total, expected)
        assert abs(d.ratio - expected / (2 * 10 ** 7)) < 1e-9
        assert d.dominated
        assert not d.total.hypothesis_satisfied

    @pytest.mark.unit
    def test_single_line_single_flat(self):
        d = eval_total_and_dominance(BoundParams(1, 1), UNIT)
        assert all(mpmath.isfinite(r.value) for r in d.summands.values())
        assert d.total.lower >= 1

    @pytest.mark.unit
    def test_no_flats_leaves_ratios_undefined(self):
        d = eval_total_and_dominance(BoundParams(5, 0, D=2, epsilon=HALF), UNIT)
        assert d.main.exact == 0
        assert d.ratio is None and d.max_summand_ratio is None
        assert "undefined" in d.detail
        assert all(mpmath.isfinite(r.upper) for r in d.summands.values())

    @pytest.mark.unit
    def test_small_dominance_constant(self):
        p = BoundParams(10 ** 4, 10 ** 3, D=2, epsilon=HALF)
        assert not BoundsCalculator(dominance_constant=1).eval_total_and_dominance(p, UNIT).dominated


class TestSupplements:
    @pytest.mark.unit
    def test_szemeredi_trotter(self):
        assert BoundsCalculator().eval_szemeredi_trotter(8, 8).exact == 32

    @pytest.mark.unit
    def test_binomial_truncation(self):
        expansion = BoundsCalculator().eval_binomial_expansion(10 ** 4, 16, terms=2)
        assert expansion.relative_error < 0.01
        assert expansion.partial <= expansion.exact
        with pytest.raises(InvariantViolationError):
            BoundsCalculator().eval_binomial_expansion(1, 1, terms=0)

    @pytest.mark.unit
    def test_min_epsilon_for_pruning(self):
        calc = BoundsCalculator()
        eps = calc.min_epsilon_for_pruning(10 ** 6, 2)
        assert mpmath.mpf("0.2") < eps < mpmath.mpf("0.21")
        assert not eval_g2_bound(BoundParams(10 ** 6, 1, D=2, epsilon=Fraction(1, 5))).hypothesis_satisfied
        assert eval_g2_bound(BoundParams(10 ** 6, 1, D=2, epsilon=Fraction(21, 100))).hypothesis_satisfied

    @pytest.mark.unit
    def test_min_epsilon_unreachable(self):
        assert BoundsCalculator().min_epsilon_for_pruning(8, 2) is None
