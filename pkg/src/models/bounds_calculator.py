"""
Closed-form incidence bounds with certified enclosures.

Every calculator returns a BoundResult: the value enclosed in a 128-bit
interval (or held exactly when all powers are rational), together with an
explicit verdict on the hypothesis the bound was derived under.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

import mpmath
from mpmath.ctx_iv import MPIntervalContext
from sympy import integer_nthroot

from .errors import DomainError, InvariantViolationError
from .exact_core import format_exact, to_exact

logger = logging.getLogger(__name__)

ENCLOSURE_BITS = 128
IV = MPIntervalContext()
IV.prec = ENCLOSURE_BITS

Number = Union[int, Fraction, str, "Quantity"]


def _enclose(value: Fraction):
    return IV.mpf(value.numerator) / IV.mpf(value.denominator)


def _endpoint(point) -> mpmath.mpf:
    with mpmath.workprec(ENCLOSURE_BITS):
        return mpmath.mpf(point._mpi_[0])


def _exact_root(value: Fraction, q: int) -> Optional[Fraction]:
    """The rational q-th root of a non-negative value, if there is one."""
    num, num_exact = integer_nthroot(value.numerator, q)
    den, den_exact = integer_nthroot(value.denominator, q)
    if num_exact and den_exact:
        return Fraction(num, den)
    return None


class Quantity:
    """A real number kept exact while possible, otherwise as an interval."""

    __slots__ = ("exact", "interval")

    def __init__(self, exact: Optional[Fraction] = None, interval=None):
        self.exact = exact
        self.interval = _enclose(exact) if exact is not None else interval

    @classmethod
    def of(cls, value: Number) -> "Quantity":
        if isinstance(value, Quantity):
            return value
        return cls(to_exact(value))

    def _combine(self, other, exact_op, interval_op) -> "Quantity":
        other = Quantity.of(other)
        if self.exact is not None and other.exact is not None:
            return Quantity(exact_op(self.exact, other.exact))
        return Quantity(interval=interval_op(self.interval, other.interval))

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b, lambda a, b: a - b)

    def __mul__(self, other):
        other = Quantity.of(other)
        if self.exact == 0 or other.exact == 0:
            return Quantity(Fraction(0))
        return self._combine(other, lambda a, b: a * b, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, lambda a, b: a / b, lambda a, b: a / b)

    def __pow__(self, exponent: Number) -> "Quantity":
        exponent = to_exact(exponent)
        if self.exact is not None:
            base = self.exact
            if base < 0:
                raise DomainError(f"real power of negative base {format_exact(base)}")
            if base == 0:
                if exponent < 0:
                    raise DomainError("negative power of zero")
                return Quantity(Fraction(1) if exponent == 0 else Fraction(0))
            if base == 1:
                return Quantity(Fraction(1))
            if exponent.denominator <= 4:
                root = _exact_root(base, exponent.denominator)
                if root is not None:
                    return Quantity(root ** exponent.numerator)
        if self.lower < 0:
            raise DomainError("real power of a possibly negative base")
        return Quantity(interval=self.interval ** _enclose(exponent))

    @property
    def lower(self) -> mpmath.mpf:
        return _endpoint(self.interval.a)

    @property
    def upper(self) -> mpmath.mpf:
        return _endpoint(self.interval.b)

    @property
    def value(self) -> mpmath.mpf:
        if self.exact is not None:
            with mpmath.workprec(ENCLOSURE_BITS):
                return mpmath.mpf(self.exact.numerator) / self.exact.denominator
        return _endpoint(self.interval.mid)

    def __repr__(self) -> str:
        if self.exact is not None:
            return f"Quantity({format_exact(self.exact)})"
        return f"Quantity([{mpmath.nstr(self.lower, 20)}, {mpmath.nstr(self.upper, 20)}])"


@dataclass(frozen=True)
class BoundParams:
    """Line count L, 2-flat count S, degree D and exponent slack epsilon."""

    L: int
    S: int
    D: int = 2
    epsilon: Fraction = Fraction(1, 2)
    J: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "epsilon", to_exact(self.epsilon))
        if self.L < 1 or self.S < 0:
            raise InvariantViolationError("need L >= 1 and S >= 0")
        if self.D < 2:
            raise InvariantViolationError("D must be at least 2")
        if self.epsilon <= 0:
            raise InvariantViolationError("epsilon must be positive")


@dataclass(frozen=True)
class ConstantsProfile:
    """Implied constants; C3 is always 3 * C1 * C2 / 2."""

    C1: Fraction = Fraction(1)
    C2: Fraction = Fraction(1)
    C4: Fraction = Fraction(1)
    C3: Optional[Fraction] = None

    def __post_init__(self):
        for name in ("C1", "C2", "C4"):
            object.__setattr__(self, name, to_exact(getattr(self, name)))
        if self.C1 <= 0 or self.C2 <= 0 or self.C4 < 0:
            raise InvariantViolationError("C1, C2 must be positive and C4 non-negative")
        expected = 3 * self.C1 * self.C2 / 2
        if self.C3 is not None and to_exact(self.C3) != expected:
            raise InvariantViolationError(f"C3 must equal 3*C1*C2/2 = {format_exact(expected)}")
        object.__setattr__(self, "C3", expected)


@dataclass(frozen=True)
class BoundResult:
    name: str
    quantity: Quantity = field(repr=False)
    hypothesis_satisfied: bool = True
    hypothesis_detail: str = ""

    MAX_RELATIVE_WIDTH = mpmath.mpf("1e-9")

    def __post_init__(self):
        if not self.hypothesis_satisfied and not self.hypothesis_detail:
            raise InvariantViolationError(f"{self.name}: a failed hypothesis needs a detail")
        width = self.upper - self.lower
        if width > self.MAX_RELATIVE_WIDTH * max(abs(self.upper), mpmath.mpf(1)):
            raise InvariantViolationError(f"{self.name}: enclosure too wide")

    @property
    def value(self) -> mpmath.mpf:
        return self.quantity.value

    @property
    def lower(self) -> mpmath.mpf:
        return self.quantity.lower

    @property
    def upper(self) -> mpmath.mpf:
        return self.quantity.upper

    @property
    def exact(self) -> Optional[Fraction]:
        return self.quantity.exact

    def text(self, digits: int = 15) -> str:
        if self.exact is not None:
            return format_exact(self.exact)
        return mpmath.nstr(self.value, digits)


@dataclass(frozen=True)
class CellDecomposition:
    L_i: Fraction
    S_i: Fraction
    cell_count: int
    summed_cell_bound: BoundResult


@dataclass(frozen=True)
class ThreeSurfaceCases:
    case1: BoundResult
    case2: BoundResult
    kst: Optional[BoundResult]


@dataclass(frozen=True)
class ZeroSetCases:
    cases: Tuple[BoundResult, BoundResult, BoundResult, BoundResult]
    total: BoundResult


@dataclass(frozen=True)
class TotalDominance:
    """Ratios are None when the main bound is 0, i.e. with no 2-flats."""

    total: BoundResult
    main: BoundResult
    ratio: Optional[mpmath.mpf]
    summands: Dict[str, BoundResult]
    max_summand_ratio: Optional[mpmath.mpf]
    dominated: bool
    detail: str = ""


@dataclass(frozen=True)
class BinomialExpansion:
    """(S + G2)^(3/2) against the first few terms of its binomial series."""

    exact: mpmath.mpf
    partial: mpmath.mpf
    terms: int
    relative_error: mpmath.mpf


class BoundsCalculator:
    """Evaluates every closed form at one regime factor and dominance constant."""

    REGIME_FACTOR = 10
    DOMINANCE_CONSTANT = 100
    # S >> G2 is read as S >= SEPARATION * G2
    SEPARATION = 100

    def __init__(self, regime_factor: int = REGIME_FACTOR, dominance_constant=DOMINANCE_CONSTANT):
        self.regime_factor = regime_factor
        self.dominance_constant = to_exact(dominance_constant)

    def check_regime(self, L: int, S: int) -> Tuple[bool, str]:
        """factor * sqrt(L) <= S <= L / factor, decided exactly."""
        k = self.regime_factor
        low_ok = S * S >= k * k * L
        high_ok = k * S <= L
        detail = f"regime {k}*L^(1/2) <= S <= L/{k} with L={L}, S={S}: "
        if low_ok and high_ok:
            return True, detail + "inside"
        return False, detail + ("S too small" if not low_ok else "S too large")

    def eval_main_bound(self, p: BoundParams) -> BoundResult:
        e = p.epsilon
        L, S = Quantity.of(p.L), Quantity.of(p.S)
        value = L ** (Fraction(3, 4) + e / 2) * S + L * S ** (Fraction(1, 2) + e)
        ok, detail = self.check_regime(p.L, p.S)
        return BoundResult("main", value, ok, detail)

    def eval_cell_decomposition(self, p: BoundParams) -> CellDecomposition:
        e, D = p.epsilon, Quantity.of(p.D)
        L, S = Quantity.of(p.L), Quantity.of(p.S)
        summed = (
            D ** (-Fraction(1, 4) - Fraction(3, 2) * e) * L ** (Fraction(3, 4) + e / 2) * S
            + D ** (-2 * e) * L * S ** (Fraction(1, 2) + e)
        )
        main = self.eval_main_bound(p)
        if summed.lower > main.upper:
            raise InvariantViolationError("summed cell bound exceeds the main bound")
        result = BoundResult("cells", summed, main.hypothesis_satisfied, main.hypothesis_detail)
        return CellDecomposition(Fraction(p.L, p.D ** 3), Fraction(p.S, p.D ** 2), p.D ** 4, result)

    def eval_g2_bound(self, p: BoundParams) -> BoundResult:
        """Rich 2-surfaces after pruning at A = (L/D^3)^(1/2+eps)."""
        e, D, L = p.epsilon, Quantity.of(p.D), Quantity.of(p.L)
        A = Quantity.of(Fraction(p.L, p.D ** 3)) ** (Fraction(1, 2) + e)
        need = 2 * D * L ** Fraction(1, 2)
        ok = A.lower > need.upper
        detail = f"A = {mpmath.nstr(A.value, 10)} {'>' if ok else '<='} 2*D*L^(1/2) = {mpmath.nstr(need.value, 10)}"
        detail += self._pruning_note(p.L, p.D, 3)
        value = 2 * D ** (Fraction(3, 2) + 3 * e) * L ** (Fraction(1, 2) - e)
        return BoundResult("G2", value, ok, detail)

    def eval_g3_bound(self, p: BoundParams) -> BoundResult:
        """Rich 3-surfaces after pruning at A = (S/D^2)^(1/2+eps)."""
        e, D, S = p.epsilon, Quantity.of(p.D), Quantity.of(p.S)
        A = Quantity.of(Fraction(p.S, p.D ** 2)) ** (Fraction(1, 2) + e)
        need = 2 * D * S ** Fraction(1, 2)
        ok = A.lower > need.upper
        detail = f"A = {mpmath.nstr(A.value, 10)} {'>' if ok else '<='} 2*D*S^(1/2) = {mpmath.nstr(need.value, 10)}"
        if p.S == 0:
            return BoundResult("G3", Quantity.of(0), False, "no 2-flats")
        value = 2 * D ** (1 + 2 * e) * S ** (Fraction(1, 2) - e)
        return BoundResult("G3", value, ok, detail + self._pruning_note(p.S, p.D, 2))

    def _pruning_note(self, count: int, D: int, dimension: int) -> str:
        eps = self.min_epsilon_for_pruning(count, D, dimension)
        if eps is None:
            return "; no epsilon satisfies it"
        return f"; holds for epsilon > {mpmath.nstr(eps, 10)}"

    def eval_two_surface_cases(self, p: BoundParams, c: ConstantsProfile) -> Tuple[BoundResult, BoundResult, BoundResult]:
        e, D = p.epsilon, Quantity.of(p.D)
        L, S = Quantity.of(p.L), Quantity.of(p.S)
        g2 = self.eval_g2_bound(p)
        ok, detail = g2.hypothesis_satisfied, g2.hypothesis_detail
        case1 = 2 * D ** (Fraction(5, 2) + 3 * e) * L ** (Fraction(1, 2) - e) * S
        case2 = c.C3 * D ** (Fraction(3, 2) + 3 * e) * L * S ** Fraction(1, 2)
        case3 = 2 * D ** (Fraction(5, 2) + 3 * e) * L

        separated = p.S >= self.SEPARATION * g2.upper
        small = (S ** (2 * e)).upper < Quantity.of(c.C1 ** 2).lower
        problems = [
            text for fails, text in (
                (not ok, detail),
                (not separated, f"S = {p.S} is not >= {self.SEPARATION}*G2"),
                (not small, "S^(2 eps) >= C1^2"),
            ) if fails
        ]
        return (
            BoundResult("two-surface case 1", case1, ok, detail),
            BoundResult("two-surface case 2", case2, not problems, "; ".join(problems)),
            BoundResult("two-surface case 3", case3, ok, detail),
        )

    def eval_three_surface_cases(self, p: BoundParams, c: ConstantsProfile) -> ThreeSurfaceCases:
        e, D = p.epsilon, Quantity.of(p.D)
        L, S = Quantity.of(p.L), Quantity.of(p.S)
        g3 = self.eval_g3_bound(p)
        if p.S == 0:
            none = Quantity.of(0)
            return ThreeSurfaceCases(
                BoundResult("three-surface case 1", none, False, g3.hypothesis_detail),
                BoundResult("three-surface case 2", none, False, g3.hypothesis_detail),
                None,
            )
        case1 = 2 * D ** (2 + 2 * e) * L * S ** (Fraction(1, 2) - e)
        case2 = (
            2 * D ** (1 + 2 * e) * L ** (Fraction(3, 4) + e / 2) * S
            + L * S ** (Fraction(1, 2) + e)
        )
        kst = None
        if g3.lower >= 2:
            kst = self.eval_kst(p.L, g3.quantity, L ** (Fraction(1, 2) + e) + 1, 2)
        ok, detail = g3.hypothesis_satisfied, g3.hypothesis_detail
        return ThreeSurfaceCases(
            BoundResult("three-surface case 1", case1, ok, detail),
            BoundResult("three-surface case 2", case2, ok, detail),
            kst,
        )

    def eval_kst(self, m: Number, n: Number, s: Number, t: int) -> BoundResult:
        """(s-1)^(1/t) (n-t+1) m^(1-1/t) + (t-1) m."""
        m, n, s = Quantity.of(m), Quantity.of(n), Quantity.of(s)
        if t < 1 or m.lower < 1 or n.lower < 1 or s.lower < 1:
            raise DomainError("need m, n, s >= 1 and t >= 1")
        if n.upper < t:
            raise DomainError(f"t = {t} exceeds n")
        value = (s - 1) ** Fraction(1, t) * (n - t + 1) * m ** (1 - Fraction(1, t)) + (t - 1) * m
        return BoundResult("KST", value, True, "")

    def eval_rich_points_bound(self, n: int, r: int, epsilon: Number, c4: Number) -> BoundResult:
        """c4 n^(3/2+eps) / r^2, flagged outside 2 <= r <= 2 n^(1/2)."""
        e = to_exact(epsilon)
        if e < 0:
            raise InvariantViolationError("epsilon must be non-negative")
        value = Quantity.of(c4) * Quantity.of(n) ** (Fraction(3, 2) + e) / (r * r)
        ok = 2 <= r and r * r <= 4 * n
        detail = f"r = {r} {'within' if ok else 'outside'} [2, 2*n^(1/2)] for n = {n}"
        return BoundResult("rich points", value, ok, detail)

    def eval_zero_set_cases(self, p: BoundParams, c: ConstantsProfile) -> ZeroSetCases:
        e = p.epsilon
        L, S = Quantity.of(p.L), Quantity.of(p.S)
        half = Fraction(1, 2) + e
        ok3 = p.L >= self.regime_factor * p.S
        detail3 = f"L >> S read as L >= {self.regime_factor}*S: L={p.L}, S={p.S}"
        cases = (
            BoundResult("zero-set case 1", Quantity.of(p.D * p.L)),
            BoundResult("zero-set case 2", Quantity.of(p.D * p.S)),
            BoundResult("zero-set case 3", (Fraction(3, 8) + e / 4) * c.C4 * L ** half * S, ok3, detail3),
            BoundResult("zero-set case 4", L * S ** half),
        )
        total = cases[0].quantity + cases[1].quantity + cases[2].quantity + cases[3].quantity
        return ZeroSetCases(cases, BoundResult("zero-set", total, ok3, detail3))

    def eval_total_and_dominance(self, p: BoundParams, c: ConstantsProfile) -> TotalDominance:
        """Cells + five surface cases + zero set, and each summand against the main bound."""
        main = self.eval_main_bound(p)
        summands: Dict[str, BoundResult] = {"cells": self.eval_cell_decomposition(p).summed_cell_bound}
        for case in self.eval_two_surface_cases(p, c):
            summands[case.name] = case
        three = self.eval_three_surface_cases(p, c)
        summands[three.case1.name] = three.case1
        summands[three.case2.name] = three.case2
        summands["zero-set"] = self.eval_zero_set_cases(p, c).total

        total = Quantity.of(0)
        for summand in summands.values():
            total = total + summand.quantity
        failed = [r.name for r in summands.values() if not r.hypothesis_satisfied]
        total_result = BoundResult(
            "total", total, not failed, "unsatisfied: " + ", ".join(failed) if failed else ""
        )
        if main.upper == 0:
            logger.debug("main bound is 0 at L=%d S=%d; ratios undefined", p.L, p.S)
            ratio = max_summand_ratio = None
            detail = f"main bound is 0 with S = {p.S}; ratios undefined, comparison vacuous"
        else:
            ratio = total_result.value / main.value
            max_summand_ratio = max(r.value / main.value for r in summands.values())
            detail = ""
        ceiling = (main.quantity * self.dominance_constant).lower
        dominated = all(r.upper <= ceiling for r in summands.values())
        if not dominated:
            logger.debug("summand exceeds %s x main bound at L=%d S=%d D=%d",
                         self.dominance_constant, p.L, p.S, p.D)
        return TotalDominance(total_result, main, ratio, summands, max_summand_ratio, dominated, detail)

    def eval_szemeredi_trotter(self, n_points: int, m_lines: int) -> BoundResult:
        """Planar point-line incidences: n^(2/3) m^(2/3) + n + m."""
        n, m = Quantity.of(n_points), Quantity.of(m_lines)
        return BoundResult("Szemeredi-Trotter", (n * m) ** Fraction(2, 3) + n + m)

    def eval_binomial_expansion(self, S: Number, G2: Number, terms: int = 2) -> BinomialExpansion:
        if terms < 1:
            raise InvariantViolationError("need at least one term")
        with mpmath.workprec(ENCLOSURE_BITS):
            s, g = mpmath.mpf(Quantity.of(S).value), mpmath.mpf(Quantity.of(G2).value)
            exact = (s + g) ** mpmath.mpf(1.5)
            partial = sum(
                mpmath.binomial(mpmath.mpf(1.5), k) * s ** (mpmath.mpf(1.5) - k) * g ** k
                for k in range(terms)
            )
            return BinomialExpansion(exact, partial, terms, abs(exact - partial) / exact)

    def min_epsilon_for_pruning(self, count: int, D: int, dimension: int = 3) -> Optional[mpmath.mpf]:
        """
        Infimum of the epsilons for which the pruning hypothesis
        (count/D^dimension)^(1/2+eps) > 2 D count^(1/2) holds; dimension 3 is
        the line lemma, 2 the 2-flat lemma.  None when no epsilon works.
        """
        with mpmath.workprec(ENCLOSURE_BITS):
            base = mpmath.mpf(count) / mpmath.mpf(D) ** dimension
            if base <= 1:
                return None
            target = mpmath.log(2 * D) + mpmath.log(count) / 2

            def excess(eps):
                return (mpmath.mpf(1) / 2 + eps) * mpmath.log(base) - target

            if excess(0) > 0:
                return mpmath.mpf(0)
            hi = mpmath.mpf(1)
            while excess(hi) <= 0:
                hi *= 2
            return mpmath.findroot(excess, (mpmath.mpf(0), hi), solver="bisect", tol=mpmath.mpf("1e-24"))


_default = BoundsCalculator()


def check_regime(L: int, S: int, factor: int = BoundsCalculator.REGIME_FACTOR) -> Tuple[bool, str]:
    return BoundsCalculator(factor).check_regime(L, S)


def eval_main_bound(p: BoundParams) -> BoundResult:
    return _default.eval_main_bound(p)


def eval_cell_decomposition(p: BoundParams) -> CellDecomposition:
    return _default.eval_cell_decomposition(p)


def eval_g2_bound(p: BoundParams) -> BoundResult:
    return _default.eval_g2_bound(p)


def eval_g3_bound(p: BoundParams) -> BoundResult:
    return _default.eval_g3_bound(p)


def eval_two_surface_cases(p: BoundParams, c: ConstantsProfile):
    return _default.eval_two_surface_cases(p, c)


def eval_three_surface_cases(p: BoundParams, c: ConstantsProfile) -> ThreeSurfaceCases:
    return _default.eval_three_surface_cases(p, c)


def eval_kst(m: Number, n: Number, s: Number, t: int) -> BoundResult:
    return _default.eval_kst(m, n, s, t)


def eval_rich_points_bound(n: int, r: int, epsilon: Number, c4: Number) -> BoundResult:
    return _default.eval_rich_points_bound(n, r, epsilon, c4)


def eval_zero_set_cases(p: BoundParams, c: ConstantsProfile) -> ZeroSetCases:
    return _default.eval_zero_set_cases(p, c)


def eval_total_and_dominance(p: BoundParams, c: ConstantsProfile) -> TotalDominance:
    return _default.eval_total_and_dominance(p, c)
