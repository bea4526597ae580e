"""
Affine flats of R^4 with exact incidence predicates.

Lines, 2-flats and hyperplanes are frozen dataclasses over Fractions.  Each
type has a canonical form, so two descriptions of the same flat compare and
hash equal after ``canonical()``.
"""
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import IdenticalLinesError, InvariantViolationError
from .exact_core import ZERO, Point4, as_point

Vector = Tuple[Fraction, ...]


def dot(x: Sequence[Fraction], y: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(x, y)), ZERO)


def add(x: Sequence[Fraction], y: Sequence[Fraction]) -> Vector:
    return tuple(a + b for a, b in zip(x, y))


def sub(x: Sequence[Fraction], y: Sequence[Fraction]) -> Vector:
    return tuple(a - b for a, b in zip(x, y))


def scale(c: Fraction, x: Sequence[Fraction]) -> Vector:
    return tuple(c * a for a in x)


def rref(rows: Sequence[Sequence[Fraction]]) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form and pivot columns, exact; zero rows dropped."""
    matrix = [[Fraction(x) for x in r] for r in rows]
    width = len(matrix[0]) if matrix else 0
    pivots: List[int] = []
    row = 0
    for col in range(width):
        pivot = next((r for r in range(row, len(matrix)) if matrix[r][col]), None)
        if pivot is None:
            continue
        matrix[row], matrix[pivot] = matrix[pivot], matrix[row]
        lead = matrix[row][col]
        matrix[row] = [x / lead for x in matrix[row]]
        for r in range(len(matrix)):
            if r != row and matrix[r][col]:
                factor = matrix[r][col]
                matrix[r] = [x - factor * y for x, y in zip(matrix[r], matrix[row])]
        pivots.append(col)
        row += 1
        if row == len(matrix):
            break
    return matrix[:row], pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(rref(rows)[1]) if rows else 0


def null_vector(rows: Sequence[Sequence[Fraction]]) -> Vector:
    """A nonzero vector orthogonal to every row; needs rank = width - 1."""
    reduced, pivots = rref(rows)
    width = len(rows[0])
    if len(pivots) != width - 1:
        raise InvariantViolationError("null space is not one-dimensional")
    free = next(c for c in range(width) if c not in pivots)
    vector = [ZERO] * width
    vector[free] = Fraction(1)
    for r, col in enumerate(pivots):
        vector[col] = -reduced[r][free]
    return tuple(vector)


@dataclass(frozen=True)
class Line4:
    """Affine line base + t * direction."""

    base: Point4
    direction: Point4

    def __post_init__(self):
        object.__setattr__(self, "base", as_point(self.base))
        object.__setattr__(self, "direction", as_point(self.direction))
        if not any(self.direction):
            raise InvariantViolationError("line direction must be nonzero")

    def point_at(self, t: Fraction) -> Point4:
        return add(self.base, scale(Fraction(t), self.direction))  # type: ignore[return-value]

    def canonical(self) -> "Line4":
        """Direction with first nonzero entry 1, base zero at that pivot."""
        pivot = next(i for i, d in enumerate(self.direction) if d)
        direction = scale(1 / self.direction[pivot], self.direction)
        base = sub(self.base, scale(self.base[pivot], direction))
        return Line4(base, direction)

    def contains_point(self, x: Sequence[Fraction]) -> bool:
        return rank([self.direction, sub(as_point(x), self.base)]) == 1


@dataclass(frozen=True)
class Flat2:
    """Affine 2-flat base + a*u + b*v."""

    base: Point4
    u: Point4
    v: Point4

    def __post_init__(self):
        for name in ("base", "u", "v"):
            object.__setattr__(self, name, as_point(getattr(self, name)))
        if rank([self.u, self.v]) != 2:
            raise InvariantViolationError("2-flat spanning vectors must be independent")

    def point_at(self, a: Fraction, b: Fraction) -> Point4:
        return add(self.base, add(scale(Fraction(a), self.u), scale(Fraction(b), self.v)))  # type: ignore

    def canonical(self) -> "Flat2":
        """RREF span with base reduced against both pivots."""
        (r1, r2), (p1, p2) = rref([self.u, self.v])
        base = sub(self.base, add(scale(self.base[p1], r1), scale(self.base[p2], r2)))
        return Flat2(base, tuple(r1), tuple(r2))

    def contains_point(self, x: Sequence[Fraction]) -> bool:
        return rank([self.u, self.v, sub(as_point(x), self.base)]) == 2

    def contains_direction(self, d: Sequence[Fraction]) -> bool:
        return rank([self.u, self.v, d]) == 2


@dataclass(frozen=True)
class Hyperplane3:
    """Affine hyperplane normal . x = offset."""

    normal: Point4
    offset: Fraction

    def __post_init__(self):
        object.__setattr__(self, "normal", as_point(self.normal))
        object.__setattr__(self, "offset", Fraction(self.offset))
        if not any(self.normal):
            raise InvariantViolationError("hyperplane normal must be nonzero")

    def canonical(self) -> "Hyperplane3":
        pivot = next(i for i, c in enumerate(self.normal) if c)
        factor = 1 / self.normal[pivot]
        return Hyperplane3(scale(factor, self.normal), self.offset * factor)  # type: ignore[arg-type]

    def contains_point(self, x: Sequence[Fraction]) -> bool:
        return dot(self.normal, as_point(x)) == self.offset


class IncidenceKind(Enum):
    DISJOINT = "disjoint"
    POINT = "point"
    CONTAINED = "contained"


@dataclass(frozen=True)
class IncidenceOutcome:
    """How a line meets a 2-flat; location is set only for POINT."""

    kind: IncidenceKind
    location: Optional[Point4] = None

    @classmethod
    def disjoint(cls) -> "IncidenceOutcome":
        return cls(IncidenceKind.DISJOINT)

    @classmethod
    def contained(cls) -> "IncidenceOutcome":
        return cls(IncidenceKind.CONTAINED)


def classify_line_flat2(ln: Line4, fl: Flat2) -> IncidenceOutcome:
    """
    Solve base_ln + t*d = base_fl + a*u + b*v exactly.

    Inconsistent system -> DISJOINT, unique solution -> POINT with its
    location, one-parameter family -> CONTAINED.
    """
    # columns t, a, b | rhs
    rows = [
        [ln.direction[i], -fl.u[i], -fl.v[i], fl.base[i] - ln.base[i]]
        for i in range(4)
    ]
    reduced, pivots = rref(rows)
    if 3 in pivots:
        return IncidenceOutcome.disjoint()
    if len(pivots) == 2:
        return IncidenceOutcome.contained()
    t = reduced[pivots.index(0)][3]
    return IncidenceOutcome(IncidenceKind.POINT, ln.point_at(t))


def line_in_flat2(ln: Line4, fl: Flat2) -> bool:
    return classify_line_flat2(ln, fl).kind is IncidenceKind.CONTAINED


def flat2_in_hyperplane(fl: Flat2, h: Hyperplane3) -> bool:
    return (
        dot(h.normal, fl.base) == h.offset
        and dot(h.normal, fl.u) == 0
        and dot(h.normal, fl.v) == 0
    )


def span_flat2_of_lines(l1: Line4, l2: Line4) -> Optional[Flat2]:
    """
    The unique 2-flat containing two distinct coplanar lines (intersecting or
    parallel), canonical; None when the lines are skew.

    :raises IdenticalLinesError: if both lines are the same line
    """
    c1, c2 = l1.canonical(), l2.canonical()
    if c1 == c2:
        raise IdenticalLinesError("cannot span a 2-flat from a single line")
    offset = sub(c2.base, c1.base)
    if rank([c1.direction, c2.direction]) == 1:
        return Flat2(c1.base, c1.direction, offset).canonical()
    if rank([c1.direction, c2.direction, offset]) == 2:
        return Flat2(c1.base, c1.direction, c2.direction).canonical()
    return None


def hyperplane_of_flat2_pair(f1: Flat2, f2: Flat2) -> Optional[Hyperplane3]:
    """The hyperplane spanned by two 2-flats whose affine hull is 3-dimensional."""
    spanning = [f1.u, f1.v, f2.u, f2.v, sub(f2.base, f1.base)]
    if rank(spanning) != 3:
        return None
    normal = null_vector(spanning)
    return Hyperplane3(normal, dot(normal, f1.base)).canonical()


def line_intersection(l1: Line4, l2: Line4) -> Optional[Point4]:
    """The single common point of two non-parallel lines, if they meet."""
    rows = [[l1.direction[i], -l2.direction[i], l2.base[i] - l1.base[i]] for i in range(4)]
    reduced, pivots = rref(rows)
    if pivots != [0, 1]:
        return None
    return l1.point_at(reduced[0][2])
