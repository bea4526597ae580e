"""
Tests for polynomial partitioning and crossing statistics.
"""
import logging
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from src.models.configurations import ConfigurationGenerator
from src.models.errors import (
    BezoutBoundViolation,
    FlatInZeroSetError,
    InvariantViolationError,
    LineInZeroSetError,
    SearchBudgetExceededError,
)
from src.models.exact_core import sign
from src.models.geometry4 import Flat2, Line4
from src.models.partition_engine import (
    PartitionEngine,
    PartitionParams,
    PartitionPolynomial,
    SignVector,
    build_partition,
    cell_id,
    default_lift_schedule,
    dumps_partition,
    flat2_crossing_stats,
    ham_sandwich_bisect,
    line_crossing_stats,
    loads_partition,
    monomial_count,
    monomial_exponents,
    veronese_lift,
)
from tests.conftest import e, x

ORIGIN = (0, 0, 0, 0)


def split_counts(h, X):
    signs = [sign(h.evaluate(p)) for p in X]
    return signs.count(1), signs.count(-1)


class TestLift:
    @pytest.mark.unit
    @pytest.mark.parametrize("k, m", [(1, 4), (2, 14), (3, 34), (4, 69)])
    def test_monomial_count(self, k, m):
        assert monomial_count(k) == m
        assert len(monomial_exponents(k)) == m
        assert len(monomial_exponents(k, include_constant=True)) == m + 1

    @pytest.mark.unit
    def test_linear_lift_is_the_point(self):
        assert veronese_lift((1, 2, 3, 4), 1) == (1, 2, 3, 4)

    @pytest.mark.unit
    def test_quadratic_lift(self):
        lifted = veronese_lift((1, 2, 0, 0), 2)
        assert len(lifted) == 14
        assert lifted[:4] == (1, 2, 0, 0)
        assert sorted(lifted[4:]) == sorted([1, 2, 0, 0, 4, 0, 0, 0, 0, 0])

    @pytest.mark.unit
    def test_lift_degree_zero_rejected(self):
        with pytest.raises(InvariantViolationError):
            veronese_lift(ORIGIN, 0)

    @pytest.mark.unit
    def test_default_schedule(self):
        assert default_lift_schedule(0) == ()
        assert default_lift_schedule(3) == (1, 1, 2)
        schedule = default_lift_schedule(8)
        assert all(monomial_count(k) >= 2 ** (j - 1) + 1 for j, k in enumerate(schedule, start=1))


class TestPartitionParams:
    @pytest.mark.unit
    def test_cell_cap(self):
        params = PartitionParams(8, Fraction(1, 10))
        assert params.cell_cap(1024, 8) == 9
        assert PartitionParams(2).cell_cap(8, 2) == 2

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"J": -1},
            {"J": 1, "delta": Fraction(1)},
            {"J": 2, "lift_degree_schedule": (1,)},
            {"J": 4, "lift_degree_schedule": (1, 1, 1, 1)},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvariantViolationError):
            PartitionParams(**kwargs)


class TestCells:
    @pytest.mark.unit
    def test_cell_id_signs(self):
        part = PartitionPolynomial((x(1), x(2) - 1))
        assert cell_id((3, -2, 0, 0), part) == SignVector((1, -1))
        assert cell_id((0, 5, 0, 0), part).on_zero_set
        assert cell_id((0, 5, 0, 0), part).label == "0+"

    @pytest.mark.unit
    def test_zero_factors_rejected(self):
        with pytest.raises(InvariantViolationError):
            PartitionPolynomial((x(1) - x(1),))

    @pytest.mark.unit
    def test_no_rounds(self, collinear_points):
        part = build_partition(collinear_points, PartitionParams(0))
        assert part.J == 0 and part.total_degree == 0
        assert {cell_id(p, part) for p in collinear_points} == {SignVector(())}


class TestBuildPartition:
    @pytest.mark.unit
    def test_collinear_factors(self, collinear_partition):
        f1, f2, f3 = collinear_partition.factors
        assert f1 == x(1) - Fraction(9, 2)
        assert f2 == (x(1) - Fraction(5, 2)) * (x(1) - Fraction(13, 2))
        assert f3 == (
            (x(1) - Fraction(3, 2)) * (x(1) - Fraction(7, 2))
            * (x(1) - Fraction(11, 2)) * (x(1) - Fraction(15, 2))
        )
        assert collinear_partition.total_degree == 7
        assert collinear_partition.theorem_degree == pytest.approx(2 ** 0.75)

    @pytest.mark.unit
    def test_collinear_cells_are_singletons(self, collinear_points, collinear_partition):
        cells = [cell_id(p, collinear_partition) for p in collinear_points]
        assert len(set(cells)) == 8
        assert not any(c.on_zero_set for c in cells)

    @pytest.mark.unit
    def test_random_points_respect_caps(self):
        points = ConfigurationGenerator(2024).gen_points(64)
        params = PartitionParams(3, Fraction(1, 10))
        part = PartitionEngine().build_partition(points, params)
        cells = {}
        for p in points:
            c = cell_id(p, part)
            if not c.on_zero_set:
                cells[c] = cells.get(c, 0) + 1
        assert max(cells.values()) <= params.cell_cap(64, 3)

    @pytest.mark.unit
    def test_bisector_of_several_sets(self):
        generator = ConfigurationGenerator(77)
        sets = [generator.gen_points(10, coordinate_range=50) for _ in range(3)]
        h = ham_sandwich_bisect(sets, 2, Fraction(1, 2))
        assert h.degree <= 2
        for X in sets:
            positive, negative = split_counts(h, X)
            assert positive <= 8 and negative <= 8

    @pytest.mark.unit
    def test_two_sets_on_skew_lines(self):
        X1 = [(i, 0, 0, 0) for i in range(4)]
        X2 = [(0, 1, i, 1) for i in range(4)]
        h = ham_sandwich_bisect([X1, X2], 2, Fraction(0))
        assert not h.is_zero and h.degree <= 2
        for X in (X1, X2):
            positive, negative = split_counts(h, X)
            assert positive <= 2 and negative <= 2

    @pytest.mark.unit
    def test_eight_sets_in_the_quadratic_lift(self):
        generator = ConfigurationGenerator(5)
        sets = [generator.gen_points(12, coordinate_range=40) for _ in range(8)]
        h = ham_sandwich_bisect(sets, 2, Fraction(1, 5))
        assert h.degree <= 2
        for X in sets:
            positive, negative = split_counts(h, X)
            assert positive <= 8 and negative <= 8

    @pytest.mark.unit
    def test_round_retries_with_a_higher_lift(self, monkeypatch, collinear_points, caplog):
        engine = PartitionEngine()
        bisect = engine.ham_sandwich_bisect
        degrees = []

        def scheduled_lift_fails(sets, k, delta=Fraction(0), caps=None):
            degrees.append(k)
            if k == 1:
                raise SearchBudgetExceededError("no certified degree-1 bisector")
            return bisect(sets, k, delta, caps)

        monkeypatch.setattr(engine, "ham_sandwich_bisect", scheduled_lift_fails)
        with caplog.at_level(logging.WARNING):
            part = engine.build_partition(collinear_points, PartitionParams(1, Fraction(0), (1,)))
        assert degrees == [1, 2]
        assert part.J == 1 and part.factors[0].degree <= 2
        assert "retrying with a degree-2 lift" in caplog.text

    @pytest.mark.unit
    def test_round_gives_up_after_the_raised_lifts(self, monkeypatch, collinear_points):
        engine = PartitionEngine()
        degrees = []

        def always_fails(sets, k, delta=Fraction(0), caps=None):
            degrees.append(k)
            raise SearchBudgetExceededError(f"no certified degree-{k} bisector")

        monkeypatch.setattr(engine, "ham_sandwich_bisect", always_fails)
        with pytest.raises(SearchBudgetExceededError):
            engine.build_partition(collinear_points, PartitionParams(1, Fraction(0), (1,)))
        assert degrees == [1, 2, 3]

    @pytest.mark.unit
    def test_too_many_sets_for_the_lift(self):
        with pytest.raises(InvariantViolationError):
            ham_sandwich_bisect([[(i, 0, 0, 0)] for i in range(5)], 1)

    @pytest.mark.unit
    def test_text_dump(self, collinear_partition):
        text = dumps_partition(collinear_partition)
        assert loads_partition(text).factors == collinear_partition.factors
        assert '"D": 7' in text


class TestLineCrossings:
    @pytest.mark.unit
    def test_axis_line_meets_every_cell(self, collinear_partition):
        stats = line_crossing_stats(Line4(ORIGIN, e(1)), collinear_partition, object_id=0)
        assert stats.distinct_cells == 8
        assert stats.zero_set_hits == 7
        assert len(stats.intervals) == 8

    @pytest.mark.unit
    def test_transverse_line_stays_in_one_cell(self, collinear_partition):
        stats = line_crossing_stats(Line4(ORIGIN, e(2)), collinear_partition)
        assert (stats.distinct_cells, stats.zero_set_hits) == (1, 0)

    @pytest.mark.unit
    def test_line_inside_zero_set(self, collinear_partition):
        with pytest.raises(LineInZeroSetError) as info:
            line_crossing_stats(Line4((Fraction(9, 2), 0, 0, 0), e(2)), collinear_partition)
        assert info.value.factor_index == 0

    @pytest.mark.unit
    def test_samples_report_their_own_cells(self, collinear_partition):
        ln = Line4((0, 1, 0, 0), (2, 1, 0, 0))
        stats = line_crossing_stats(ln, collinear_partition)
        for t, sv in stats.intervals:
            assert cell_id(ln.point_at(t), collinear_partition) == sv

    @pytest.mark.property
    @settings(max_examples=20, deadline=None)
    @given(
        base=st.tuples(*[st.integers(-9, 9)] * 4),
        direction=st.tuples(*[st.integers(-3, 3)] * 4).filter(any),
    )
    def test_adding_a_factor_never_loses_cells(self, base, direction):
        factors = (x(1) * x(2) - 1, x(3) ** 2 + x(4) - 2, x(1) - x(4))
        ln = Line4(base, direction)
        try:
            full = line_crossing_stats(ln, PartitionPolynomial(factors))
        except LineInZeroSetError:
            return
        for size in range(1, len(factors)):
            prefix = line_crossing_stats(ln, PartitionPolynomial(factors[:size]))
            assert prefix.distinct_cells <= full.distinct_cells

    @pytest.mark.unit
    def test_shared_root_counted_once(self):
        part = PartitionPolynomial((x(1), x(1) + x(2)))
        stats = line_crossing_stats(Line4(ORIGIN, e(1)), part)
        assert stats.zero_set_hits == 1
        assert stats.distinct_cells == 2

    @pytest.mark.property
    @settings(max_examples=25, deadline=None)
    @given(
        base=st.tuples(*[st.integers(-9, 9)] * 4),
        direction=st.tuples(*[st.integers(-3, 3)] * 4).filter(any),
    )
    def test_cells_bounded_by_degree(self, base, direction):
        part = PartitionPolynomial((x(1) * x(2) - 1, x(3) ** 2 + x(4) - 2, x(1) - x(4)))
        try:
            stats = line_crossing_stats(Line4(base, direction), part)
        except LineInZeroSetError:
            return
        assert stats.distinct_cells <= part.total_degree + 1
        assert stats.distinct_cells <= stats.zero_set_hits + 1


class TestFlatCrossings:
    @pytest.mark.unit
    def test_coordinate_plane_sees_four_quadrants(self):
        part = PartitionPolynomial((x(1), x(2)))
        assert flat2_crossing_stats(Flat2(ORIGIN, e(1), e(2)), part) == 4

    @pytest.mark.unit
    def test_plane_crossing_one_factor(self):
        part = PartitionPolynomial((x(1), x(2) - 100))
        assert flat2_crossing_stats(Flat2(ORIGIN, e(1), e(3)), part) == 2

    @pytest.mark.unit
    def test_plane_inside_zero_set(self):
        part = PartitionPolynomial((x(2) - 1, x(4)))
        with pytest.raises(FlatInZeroSetError) as info:
            flat2_crossing_stats(Flat2(ORIGIN, e(1), e(3)), part)
        assert info.value.factor_index == 1

    @pytest.mark.unit
    def test_collinear_partition_seen_by_a_plane(self, collinear_partition):
        count = flat2_crossing_stats(Flat2(ORIGIN, e(1), e(2)), collinear_partition)
        assert count == 8
        assert count <= 7 * 7 + 7 + 1


class TestCrossingBound:
    @pytest.mark.unit
    def test_violation_reported(self, monkeypatch):
        part = PartitionPolynomial((x(1),))
        engine = PartitionEngine()
        monkeypatch.setattr(
            "src.models.partition_engine._merged_roots",
            # corrupt isolation: the middle sample lands on the root of x1
            lambda restricted: [(Fraction(-1), Fraction(-1, 2)), (Fraction(1, 2), Fraction(1))],
        )
        with pytest.raises(BezoutBoundViolation):
            engine.line_crossing_stats(Line4(ORIGIN, e(1)), part)
