"""
Exact polynomial arithmetic over the rationals.

Scalars are ``fractions.Fraction`` values (always reduced, positive
denominator), so every predicate built on this module is decided exactly.
There is no floating point anywhere in here.

  MultiPoly4  sparse polynomial in x1..x4 (partition factors, surfaces)
  BiPoly      sparse polynomial in a, b (restriction to a 2-flat)
  UniPoly     dense polynomial in t (restriction to a line)

The zero polynomial has no stored terms and degree -1.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import sympy

from .errors import (
    BezoutBoundViolation,
    DomainError,
    InvariantViolationError,
    SearchBudgetExceededError,
    ZeroPolynomialError,
)

if TYPE_CHECKING:
    from .geometry4 import Flat2, Line4

logger = logging.getLogger(__name__)

ExactScalar = Fraction
Exponent = Tuple[int, ...]
Point4 = Tuple[Fraction, Fraction, Fraction, Fraction]
Bound = Union[int, Fraction, float]

ZERO = Fraction(0)
ONE = Fraction(1)
T = sympy.Symbol("t")


def to_exact(value: Union[int, Fraction, str]) -> Fraction:
    """Convert an int, Fraction or "num/den" string to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise DomainError(f"booleans are not scalars: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise DomainError(f"not a rational literal: {value!r}") from e
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    raise DomainError(f"cannot convert {value!r} to an exact rational")


def format_exact(value: Fraction) -> str:
    """Lossless text form: "3", "-7/2"."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def as_point(values: Sequence) -> Point4:
    """Coerce four coordinates to an exact point of R^4."""
    if len(values) != 4:
        raise InvariantViolationError(f"expected 4 coordinates, got {len(values)}")
    return tuple(to_exact(v) for v in values)  # type: ignore[return-value]


def sign(value: Fraction) -> int:
    return (value > 0) - (value < 0)


class _SparsePoly:
    """Sparse polynomial with Fraction coefficients in NVARS variables."""

    NVARS = 0
    VAR_NAMES: Tuple[str, ...] = ()
    __slots__ = ("terms", "degree", "_hash")

    def __init__(self, terms: Optional[Mapping[Exponent, Union[int, Fraction, str]]] = None):
        clean: Dict[Exponent, Fraction] = {}
        for exponent, coefficient in (terms or {}).items():
            exponent = tuple(int(e) for e in exponent)
            if len(exponent) != self.NVARS or any(e < 0 for e in exponent):
                raise InvariantViolationError(f"bad exponent {exponent} for {type(self).__name__}")
            value = clean.get(exponent, ZERO) + to_exact(coefficient)
            if value:
                clean[exponent] = value
            else:
                clean.pop(exponent, None)
        self.terms: Mapping[Exponent, Fraction] = MappingProxyType(clean)
        self.degree: int = max((sum(e) for e in clean), default=-1)
        self._hash: Optional[int] = None

    @classmethod
    def constant(cls, value: Union[int, Fraction]):
        return cls({(0,) * cls.NVARS: value})

    @classmethod
    def variable(cls, index: int):
        if not 0 <= index < cls.NVARS:
            raise DomainError(f"variable index {index} out of range")
        exponent = [0] * cls.NVARS
        exponent[index] = 1
        return cls({tuple(exponent): 1})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, type(self)):
            return NotImplemented
        return dict(self.terms) == dict(other.terms)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__, frozenset(self.terms.items())))
        return self._hash

    def _coerce(self, other):
        if isinstance(other, type(self)):
            return other
        if isinstance(other, (int, Fraction)):
            return self.constant(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        merged = dict(self.terms)
        for exponent, coefficient in other.terms.items():
            merged[exponent] = merged.get(exponent, ZERO) + coefficient
        return type(self)(merged)

    __radd__ = __add__

    def __neg__(self):
        return type(self)({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        product: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exponent = tuple(a + b for a, b in zip(e1, e2))
                product[exponent] = product.get(exponent, ZERO) + c1 * c2
        return type(self)(product)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if power < 0:
            raise DomainError("negative powers are not polynomials")
        result = self.constant(1)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def evaluate(self, values: Sequence) -> Fraction:
        """Exact value at the given point."""
        if len(values) != self.NVARS:
            raise DomainError(f"expected {self.NVARS} coordinates, got {len(values)}")
        values = [to_exact(v) for v in values]
        powers: List[Dict[int, Fraction]] = [{0: ONE} for _ in values]
        total = ZERO
        for exponent, coefficient in self.terms.items():
            term = coefficient
            for i, e in enumerate(exponent):
                if e:
                    cache = powers[i]
                    if e not in cache:
                        cache[e] = values[i] ** e
                    term *= cache[e]
            total += term
        return total

    def to_sparse(self) -> List[Tuple[List[int], str]]:
        """Monomial/coefficient pairs in a stable order, coefficients as text."""
        return [(list(e), format_exact(c)) for e, c in sorted(self.terms.items(), reverse=True)]

    @classmethod
    def from_sparse(cls, pairs: Sequence[Tuple[Sequence[int], str]]):
        terms: Dict[Exponent, Fraction] = {}
        for exponent, coefficient in pairs:
            key = tuple(int(e) for e in exponent)
            terms[key] = terms.get(key, ZERO) + to_exact(coefficient)
        return cls(terms)

    def to_sympy(self) -> sympy.Expr:
        symbols = sympy.symbols(" ".join(self.VAR_NAMES))
        expr = sympy.Integer(0)
        for exponent, coefficient in self.terms.items():
            monomial = sympy.Rational(coefficient.numerator, coefficient.denominator)
            for symbol, e in zip(symbols, exponent):
                monomial *= symbol ** e
            expr += monomial
        return expr

    def __repr__(self) -> str:
        if self.is_zero:
            return f"{type(self).__name__}(0)"
        parts = []
        for exponent, coefficient in sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), kv[0])):
            factors = [
                name if e == 1 else f"{name}^{e}"
                for name, e in zip(self.VAR_NAMES, exponent) if e
            ]
            if not factors:
                parts.append(format_exact(coefficient))
            elif coefficient == 1:
                parts.append("*".join(factors))
            else:
                parts.append(f"{format_exact(coefficient)}*" + "*".join(factors))
        return f"{type(self).__name__}({' + '.join(parts)})"


class MultiPoly4(_SparsePoly):
    """Polynomial in the coordinates x1..x4 of R^4."""

    NVARS = 4
    VAR_NAMES = ("x1", "x2", "x3", "x4")
    __slots__ = ()


class BiPoly(_SparsePoly):
    """Polynomial in the two parameters (a, b) of a 2-flat."""

    NVARS = 2
    VAR_NAMES = ("a", "b")
    __slots__ = ()


class UniPoly:
    """Dense univariate polynomial, coefficients lowest degree first.

    Evaluation stays on Fractions; division, gcd, square-free parts and
    Sturm chains go through sympy.Poly over QQ.
    """

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: Sequence[Union[int, Fraction, str]] = ()):
        coeffs = [to_exact(c) for c in coefficients]
        while coeffs and not coeffs[-1]:
            coeffs.pop()
        self.coefficients: Tuple[Fraction, ...] = tuple(coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    @property
    def leading_coefficient(self) -> Fraction:
        return self.coefficients[-1] if self.coefficients else ZERO

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UniPoly):
            return NotImplemented
        return self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def __repr__(self) -> str:
        return f"UniPoly({[format_exact(c) for c in self.coefficients]})"

    def __add__(self, other: "UniPoly") -> "UniPoly":
        size = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (ZERO,) * (size - len(self.coefficients))
        b = other.coefficients + (ZERO,) * (size - len(other.coefficients))
        return UniPoly([x + y for x, y in zip(a, b)])

    def __neg__(self) -> "UniPoly":
        return UniPoly([-c for c in self.coefficients])

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def __mul__(self, other: Union["UniPoly", int, Fraction]) -> "UniPoly":
        if not isinstance(other, UniPoly):
            return self.scale(to_exact(other))
        if self.is_zero or other.is_zero:
            return UniPoly()
        product = [ZERO] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            if a:
                for j, b in enumerate(other.coefficients):
                    product[i + j] += a * b
        return UniPoly(product)

    __rmul__ = __mul__

    def scale(self, factor: Fraction) -> "UniPoly":
        return UniPoly([c * factor for c in self.coefficients])

    def __call__(self, t: Union[int, Fraction]) -> Fraction:
        return self.evaluate(t)

    def evaluate(self, t: Union[int, Fraction]) -> Fraction:
        """Horner evaluation at an exact parameter."""
        t = to_exact(t)
        value = ZERO
        for c in reversed(self.coefficients):
            value = value * t + c
        return value

    def derivative(self) -> "UniPoly":
        return UniPoly([i * c for i, c in enumerate(self.coefficients)][1:])

    def to_sympy(self) -> sympy.Poly:
        coefficients = [sympy.Rational(c.numerator, c.denominator) for c in reversed(self.coefficients)]
        return sympy.Poly.from_list(coefficients or [0], T, domain=sympy.QQ)

    @classmethod
    def from_sympy(cls, poly: sympy.Poly) -> "UniPoly":
        return cls([to_exact(sympy.Rational(c)) for c in reversed(poly.all_coeffs())])

    def divmod(self, divisor: "UniPoly") -> Tuple["UniPoly", "UniPoly"]:
        """Euclidean division over Q."""
        if divisor.is_zero:
            raise ZeroPolynomialError("division by the zero polynomial")
        quotient, remainder = self.to_sympy().div(divisor.to_sympy())
        return UniPoly.from_sympy(quotient), UniPoly.from_sympy(remainder)

    def __mod__(self, divisor: "UniPoly") -> "UniPoly":
        return self.divmod(divisor)[1]

    def __floordiv__(self, divisor: "UniPoly") -> "UniPoly":
        return self.divmod(divisor)[0]

    def monic(self) -> "UniPoly":
        if self.is_zero:
            return self
        return self.scale(1 / self.leading_coefficient)

    def sign_at(self, t: Bound) -> int:
        """Sign of the value at t; t may be +/- infinity."""
        if self.is_zero:
            return 0
        if isinstance(t, float):
            if not math.isinf(t):
                raise DomainError("finite endpoints must be exact rationals")
            lead = sign(self.leading_coefficient)
            if t > 0 or self.degree % 2 == 0:
                return lead
            return -lead
        return sign(self.evaluate(t))


def poly_gcd(f: UniPoly, g: UniPoly) -> UniPoly:
    """Monic greatest common divisor (zero only if both inputs are zero)."""
    return UniPoly.from_sympy(f.to_sympy().gcd(g.to_sympy())).monic()


def squarefree_part(f: UniPoly) -> UniPoly:
    """f divided by gcd(f, f'), made monic; same distinct roots as f."""
    if f.is_zero:
        raise ZeroPolynomialError("the zero polynomial has no square-free part")
    if f.degree <= 0:
        return UniPoly([1])
    return UniPoly.from_sympy(f.to_sympy().sqf_part()).monic()


def sturm_sequence(f: UniPoly) -> List[UniPoly]:
    """Sturm chain s, s', -rem(s, s'), ... of the square-free part s of f.

    Built on s so that a multiple root of f at an interval endpoint does not
    zero the whole chain there.
    """
    if f.is_zero:
        raise ZeroPolynomialError("Sturm sequence of the zero polynomial")
    s = squarefree_part(f)
    if s.degree <= 0:
        return [s]
    return [UniPoly.from_sympy(p) for p in s.to_sympy().sturm()]


def _sign_changes(signs: Sequence[int]) -> int:
    nonzero = [s for s in signs if s]
    return sum(1 for a, b in zip(nonzero, nonzero[1:]) if a != b)


def _variations(sequence: Sequence[UniPoly], t: Bound) -> int:
    return _sign_changes([p.sign_at(t) for p in sequence])


def _check_bound(t: Bound) -> Bound:
    if isinstance(t, float):
        if not math.isinf(t):
            raise DomainError("finite endpoints must be exact rationals, not floats")
        return t
    return to_exact(t)


def sturm_root_count(
    f: UniPoly,
    interval: Tuple[Bound, Bound] = (-math.inf, math.inf),
    sequence: Optional[Sequence[UniPoly]] = None,
) -> int:
    """
    Number of distinct real roots of f in (lo, hi].

    Endpoints may be exact rationals or +/- math.inf; with both infinite the
    total number of distinct real roots is returned.

    :raises ZeroPolynomialError: if f is the zero polynomial
    """
    if f.is_zero:
        raise ZeroPolynomialError("cannot count the roots of the zero polynomial")
    lo, hi = (_check_bound(t) for t in interval)
    if f.degree == 0 or lo >= hi:
        return 0
    sequence = sequence if sequence is not None else sturm_sequence(f)
    count = _variations(sequence, lo) - _variations(sequence, hi)
    if count > f.degree:
        raise BezoutBoundViolation(f"{count} distinct roots for a degree {f.degree} polynomial")
    return count


def cauchy_bound(f: UniPoly) -> Fraction:
    """Every real root of f has absolute value strictly below this bound."""
    lead = abs(f.leading_coefficient)
    return 1 + max((abs(c) / lead for c in f.coefficients[:-1]), default=ZERO)


def isolate_real_roots(f: UniPoly) -> List[Tuple[Fraction, Fraction]]:
    """
    Disjoint rational intervals (lo, hi), sorted, each holding exactly one
    distinct real root of f, with f nonzero at both endpoints.
    """
    if f.is_zero:
        raise ZeroPolynomialError("cannot isolate the roots of the zero polynomial")
    s = squarefree_part(f)
    if s.degree <= 0:
        return []
    sequence = sturm_sequence(s)
    bound = cauchy_bound(s)
    pending = [(-bound, bound)]
    isolated: List[Tuple[Fraction, Fraction]] = []
    while pending:
        lo, hi = pending.pop()
        count = sturm_root_count(s, (lo, hi), sequence)
        if count == 0:
            continue
        if count == 1:
            isolated.append((lo, hi))
            continue
        mid = _split_point(s, lo, hi)
        pending.append((lo, mid))
        pending.append((mid, hi))
    isolated.sort()
    return isolated


def _split_point(s: UniPoly, lo: Fraction, hi: Fraction) -> Fraction:
    """A point strictly inside (lo, hi) where s does not vanish."""
    k = 2
    while True:
        mid = lo + (hi - lo) / k if k > 2 else (lo + hi) / 2
        if s.evaluate(mid):
            return mid
        k += 1


def refine_isolating_interval(s: UniPoly, lo: Fraction, hi: Fraction) -> Tuple[Fraction, Fraction]:
    """Halve an isolating interval of a square-free polynomial."""
    mid = _split_point(s, lo, hi)
    if s.sign_at(lo) != s.sign_at(mid):
        return lo, mid
    return mid, hi


def poly_eval(p: MultiPoly4, x: Sequence) -> Fraction:
    """Exact value of p at a point of R^4."""
    return p.evaluate(x)


def restrict_to_line(p: MultiPoly4, ln: "Line4") -> UniPoly:
    """f(t) = p(base + t * direction), computed exactly."""
    if all(d == 0 for d in ln.direction):
        raise InvariantViolationError("line direction must be nonzero")
    linear = [UniPoly([b, d]) for b, d in zip(ln.base, ln.direction)]
    powers: List[Dict[int, UniPoly]] = [{0: UniPoly([1])} for _ in linear]
    result = UniPoly()
    for exponent, coefficient in p.terms.items():
        term = UniPoly([coefficient])
        for i, e in enumerate(exponent):
            if e:
                cache = powers[i]
                if e not in cache:
                    cache[e] = _power(linear[i], e, cache)
                term = term * cache[e]
        result = result + term
    return result


def _power(base, e: int, cache: Dict[int, object]):
    known = max(k for k in cache if k <= e)
    value = cache[known]
    for k in range(known + 1, e + 1):
        value = value * base
        cache[k] = value
    return value


def restrict_to_flat2(p: MultiPoly4, fl: "Flat2") -> BiPoly:
    """g(a, b) = p(base + a*u + b*v), computed exactly."""
    linear = [
        BiPoly({(0, 0): q, (1, 0): u, (0, 1): v})
        for q, u, v in zip(fl.base, fl.u, fl.v)
    ]
    powers: List[Dict[int, BiPoly]] = [{0: BiPoly.constant(1)} for _ in linear]
    result = BiPoly()
    for exponent, coefficient in p.terms.items():
        term = BiPoly.constant(coefficient)
        for i, e in enumerate(exponent):
            if e:
                cache = powers[i]
                if e not in cache:
                    cache[e] = _power(linear[i], e, cache)
                term = term * cache[e]
        result = result + term
    return result


@dataclass(frozen=True)
class BezoutCheck:
    """Outcome of a planar Bezout check; count is None when a factor is shared."""

    common_factor: bool
    isolated_intersection_count: Optional[int]
    degree_bound: int


class BezoutCounter:
    """Exact real intersection counting for two plane curves."""

    # Shear parameters tried to bring the ideal into shape position.
    SHEARS = tuple(Fraction(k) for k in [0] + [s * n for n in range(1, 21) for s in (1, -1)])

    def __init__(self):
        self.a, self.b = sympy.symbols("a b")

    def has_common_factor(self, e1: sympy.Expr, e2: sympy.Expr) -> bool:
        """A shared factor makes the resultant in some variable vanish identically."""
        for var in (self.b, self.a):
            if sympy.degree(e1, var) < 1 or sympy.degree(e2, var) < 1:
                continue
            if sympy.expand(sympy.resultant(e1, e2, var)) == 0:
                return True
        return False

    def count_real_points(self, e1: sympy.Expr, e2: sympy.Expr) -> int:
        a, b = self.a, self.b
        for lam in self.SHEARS:
            shift = sympy.Rational(lam.numerator, lam.denominator) * a
            f1 = sympy.expand(e1.subs(b, b + shift))
            f2 = sympy.expand(e2.subs(b, b + shift))
            shape = self._shape_basis(f1, f2)
            if shape is None:
                logger.debug("shear %s not in shape position, retrying", lam)
                continue
            if shape == 1:
                return 0
            return len(isolate_real_roots(UniPoly.from_sympy(sympy.Poly(shape, b, domain=sympy.QQ))))
        raise SearchBudgetExceededError("no shear brought the intersection into shape position")

    def _shape_basis(self, f1: sympy.Expr, f2: sympy.Expr):
        """
        Univariate h(b) of a radical lex basis {a - g(b), h(b)}, 1 for an
        empty intersection, or None when the basis is not in shape position.
        """
        a, b = self.a, self.b
        basis = sympy.groebner([f1, f2], a, b, order="lex", domain=sympy.QQ)
        if list(basis.exprs) == [1]:
            return 1
        reverse = sympy.groebner([f1, f2], b, a, order="lex", domain=sympy.QQ)
        eliminant_b = self._univariate(basis.exprs, b)
        eliminant_a = self._univariate(reverse.exprs, a)
        if eliminant_a is None or eliminant_b is None:
            return None
        radical = sympy.groebner(
            [f1, f2, sympy.sqf_part(eliminant_b, b), sympy.sqf_part(eliminant_a, a)],
            a, b, order="lex", domain=sympy.QQ,
        )
        exprs = list(radical.exprs)
        if exprs == [1]:
            return 1
        h = self._univariate(exprs, b)
        if h is None or len(exprs) != 2:
            return None
        other = exprs[0] if exprs[1] == h else exprs[1]
        if sympy.degree(other, a) != 1 or sympy.Poly(other, a).LC().free_symbols:
            return None
        return h

    @staticmethod
    def _univariate(exprs: Sequence[sympy.Expr], var: sympy.Symbol):
        for expr in exprs:
            if expr.free_symbols <= {var} and sympy.degree(expr, var) > 0:
                return expr
        return None


def bezout_point_check(q1: BiPoly, q2: BiPoly) -> BezoutCheck:
    """
    Decide whether q1, q2 share a factor; otherwise count the real points of
    Z(q1) n Z(q2) exactly and check the count against deg q1 * deg q2.

    :raises ZeroPolynomialError: if either polynomial is zero
    :raises BezoutBoundViolation: if the count exceeds the degree product
    """
    if q1.is_zero or q2.is_zero:
        raise ZeroPolynomialError("Bezout check needs nonzero polynomials")
    bound = q1.degree * q2.degree
    if q1.degree == 0 or q2.degree == 0:
        return BezoutCheck(common_factor=False, isolated_intersection_count=0, degree_bound=bound)
    counter = BezoutCounter()
    e1, e2 = q1.to_sympy(), q2.to_sympy()
    if counter.has_common_factor(e1, e2):
        return BezoutCheck(common_factor=True, isolated_intersection_count=None, degree_bound=bound)
    count = counter.count_real_points(e1, e2)
    if count > bound:
        raise BezoutBoundViolation(f"{count} real intersection points exceed {bound}")
    return BezoutCheck(common_factor=False, isolated_intersection_count=count, degree_bound=bound)
