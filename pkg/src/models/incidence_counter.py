"""
Incidence counter model: exact line / 2-flat incidence counting, attribution to
partition cells, bipartite incidence graphs and rich-flat detection.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from sympy import integer_nthroot

from .configurations import ConfigurationSet
from .errors import BezoutBoundViolation, IdenticalLinesError, InvariantViolationError, TooLargeError
from .exact_core import Point4, restrict_to_line, to_exact
from .geometry4 import (
    Flat2,
    Hyperplane3,
    IncidenceKind,
    Line4,
    classify_line_flat2,
    flat2_in_hyperplane,
    hyperplane_of_flat2_pair,
    line_in_flat2,
    line_intersection,
    span_flat2_of_lines,
)
from .partition_engine import PartitionPolynomial, SignVector, cell_id

logger = logging.getLogger(__name__)

ZERO_SET = "ZERO_SET"


@dataclass(frozen=True)
class IncidenceRecord:
    """Line i meets 2-flat j in exactly one point."""

    line_index: int
    plane_index: int
    location: Point4


@dataclass
class IncidenceReport:
    """Incidence totals, optionally split over the cells of a partition."""

    point_incidences: int = 0
    containments: int = 0
    incidence_records: List[IncidenceRecord] = field(default_factory=list)
    per_cell: Dict[SignVector, int] = field(default_factory=dict)
    zero_set_count: int = 0
    # zero-set incidences on lines that are / are not inside Z(P)
    zero_set_uncontained: int = 0
    zero_set_contained: int = 0
    record_cells: List[Optional[SignVector]] = field(default_factory=list)
    partitioned: bool = False

    def __post_init__(self):
        if len(self.incidence_records) != self.point_incidences:
            raise InvariantViolationError("one record is needed per point incidence")
        if self.partitioned and sum(self.per_cell.values()) + self.zero_set_count != self.point_incidences:
            raise InvariantViolationError("cell counts do not reconcile with the incidence total")

    def rows(self) -> List[Tuple[int, int, Point4, str]]:
        """(line_idx, plane_idx, location, cell signature or ZERO_SET) per record."""
        cells = self.record_cells or [None] * len(self.incidence_records)
        rows = []
        for record, cell in zip(self.incidence_records, cells):
            if cell is None:
                label = ""
            elif cell.on_zero_set:
                label = ZERO_SET
            else:
                label = cell.label
            rows.append((record.line_index, record.plane_index, record.location, label))
        return rows


@dataclass(frozen=True)
class BipartiteIncidenceGraph:
    left_size: int
    right_size: int
    edges: FrozenSet[Tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))
        for left, right in self.edges:
            if not (0 <= left < self.left_size and 0 <= right < self.right_size):
                raise InvariantViolationError(f"edge {(left, right)} is out of range")

    def left_neighbors(self, right: int) -> FrozenSet[int]:
        return frozenset(a for a, b in self.edges if b == right)


@dataclass(frozen=True)
class KstWitness:
    """s left and t right vertices with all s*t edges present."""

    left: Tuple[int, ...]
    right: Tuple[int, ...]


@dataclass(frozen=True)
class RichFlatRecord:
    flat: Union[Flat2, Hyperplane3]
    members: Tuple[int, ...]

    @property
    def multiplicity(self) -> int:
        return len(self.members)


class IncidenceCounter:
    """Exact pair-by-pair incidence classification."""

    def __init__(self):
        self.errors: List[str] = []
        self._progress_callback: Optional[Callable[[int, int], None]] = None

    def set_progress_callback(self, callback: Optional[Callable[[int, int], None]]) -> None:
        """Called with (done, total) once per line."""
        self._progress_callback = callback

    def count_incidences(self, cfg: ConfigurationSet) -> IncidenceReport:
        records: List[IncidenceRecord] = []
        containments = 0
        for i, ln in enumerate(cfg.lines):
            for j, fl in enumerate(cfg.planes):
                outcome = classify_line_flat2(ln, fl)
                if outcome.kind is IncidenceKind.POINT:
                    records.append(IncidenceRecord(i, j, outcome.location))
                elif outcome.kind is IncidenceKind.CONTAINED:
                    containments += 1
            if self._progress_callback:
                self._progress_callback(i + 1, cfg.L)
        logger.debug("%d point incidences, %d containments over %d pairs",
                     len(records), containments, cfg.L * cfg.S)
        return IncidenceReport(len(records), containments, records)

    def classify_by_partition(
        self,
        cfg: ConfigurationSet,
        part: PartitionPolynomial,
        base: Optional[IncidenceReport] = None,
    ) -> IncidenceReport:
        """
        Attribute every incidence to its open cell or to Z(P), and split the
        zero-set share by whether the line lies inside Z(P).

        :raises BezoutBoundViolation: if a line not inside Z(P) meets it in
            more than D distinct incidence points
        """
        base = base or self.count_incidences(cfg)
        per_cell: Dict[SignVector, int] = defaultdict(int)
        cells: List[Optional[SignVector]] = []
        inside: Dict[int, bool] = {}
        hits: Dict[int, set] = defaultdict(set)
        zero, zero_inside = 0, 0
        for record in base.incidence_records:
            cell = cell_id(record.location, part)
            cells.append(cell)
            if not cell.on_zero_set:
                per_cell[cell] += 1
                continue
            zero += 1
            i = record.line_index
            if i not in inside:
                ln = cfg.lines[i]
                inside[i] = any(restrict_to_line(f, ln).is_zero for f in part.factors)
                if inside[i]:
                    self.errors.append(f"line {i} lies inside the zero set")
            if inside[i]:
                zero_inside += 1
            else:
                hits[i].add(record.location)
        D = part.total_degree
        for i, points in hits.items():
            if len(points) > D:
                raise BezoutBoundViolation(f"line {i} meets Z(P) in {len(points)} > D = {D} points")
        return IncidenceReport(
            base.point_incidences,
            base.containments,
            list(base.incidence_records),
            dict(sorted(per_cell.items())),
            zero,
            zero - zero_inside,
            zero_inside,
            cells,
            partitioned=True,
        )


def count_incidences(cfg: ConfigurationSet) -> IncidenceReport:
    return IncidenceCounter().count_incidences(cfg)


def classify_by_partition(cfg: ConfigurationSet, part: PartitionPolynomial) -> IncidenceReport:
    return IncidenceCounter().classify_by_partition(cfg, part)


def incidence_graph(cfg: ConfigurationSet, report: Optional[IncidenceReport] = None) -> BipartiteIncidenceGraph:
    """Edge (i, j) iff line i meets 2-flat j in a single point."""
    report = report or count_incidences(cfg)
    return BipartiteIncidenceGraph(
        cfg.L, cfg.S, frozenset((r.line_index, r.plane_index) for r in report.incidence_records)
    )


def kst_free_check(g: BipartiteIncidenceGraph, s: int, t: int) -> Tuple[bool, Optional[KstWitness]]:
    """
    True when no s left and t right vertices span a complete K_{s,t};
    otherwise False with such a witness.
    """
    if not (1 <= s <= g.left_size and 1 <= t <= g.right_size):
        raise InvariantViolationError(f"need 1 <= s <= {g.left_size} and 1 <= t <= {g.right_size}")
    neighbors = {right: g.left_neighbors(right) for right in range(g.right_size)}
    for rights in combinations(range(g.right_size), t):
        common = frozenset.intersection(*(neighbors[r] for r in rights))
        if len(common) >= s:
            witness = KstWitness(tuple(sorted(common)[:s]), rights)
            assert all((a, b) in g.edges for a in witness.left for b in witness.right)
            return False, witness
    return True, None


class ZarankiewiczSearch:
    """Exhaustive maximum of K_{s,t}-free m x n bipartite graphs."""

    MAX_CELLS = 25

    def __init__(self, m: int, n: int, s: int, t: int):
        if m < 0 or n < 0 or s < 1 or t < 1:
            raise InvariantViolationError("need m, n >= 0 and s, t >= 1")
        if m * n > self.MAX_CELLS:
            raise TooLargeError(f"{m}x{n} has more than {self.MAX_CELLS} cells")
        # rows are left vertices; the forbidden pattern is t columns shared by s rows
        self.m, self.n, self.s, self.t = m, n, s, t
        self.rows = sorted(range(1 << n), key=lambda r: (-bin(r).count("1"), r))
        self.subsets = {
            row: [sum(1 << c for c in cols) for cols in combinations(
                [c for c in range(n) if row >> c & 1], t)]
            for row in self.rows
        }
        self.best = 0

    def solve(self) -> int:
        self._extend(0, 0, 0, defaultdict(int))
        return self.best

    def _extend(self, depth: int, start: int, edges: int, shared: Dict[int, int]) -> None:
        if depth == self.m:
            self.best = max(self.best, edges)
            return
        for index in range(start, len(self.rows)):
            row = self.rows[index]
            width = bin(row).count("1")
            # rows are sorted by weight, so this caps every later choice too
            if edges + width * (self.m - depth) <= self.best:
                return
            if any(shared[key] + 1 >= self.s for key in self.subsets[row]):
                continue
            for key in self.subsets[row]:
                shared[key] += 1
            self._extend(depth + 1, index, edges + width, shared)
            for key in self.subsets[row]:
                shared[key] -= 1


def zarankiewicz_bruteforce(m: int, n: int, s: int, t: int) -> int:
    """z(m, n; s, t) by exhaustive search.

    :raises TooLargeError: if m * n > 25
    """
    return ZarankiewiczSearch(m, n, s, t).solve()


def _check_threshold(threshold) -> None:
    if threshold < 2:
        raise InvariantViolationError("richness threshold must be at least 2")


def detect_rich_flat2(lines: Sequence[Line4], threshold) -> List[RichFlatRecord]:
    """2-flats containing at least threshold of the given lines."""
    _check_threshold(threshold)
    buckets: Dict[Flat2, set] = defaultdict(set)
    for (i, l1), (j, l2) in combinations(enumerate(lines), 2):
        try:
            flat = span_flat2_of_lines(l1, l2)
        except IdenticalLinesError:
            continue
        if flat is not None:
            buckets[flat].update((i, j))
    records = []
    for flat, members in buckets.items():
        if len(members) >= threshold:
            assert all(line_in_flat2(lines[i], flat) for i in members)
            records.append(RichFlatRecord(flat, tuple(sorted(members))))
    return sorted(records, key=lambda r: r.members)


def detect_rich_hyperplane(planes: Sequence[Flat2], threshold) -> List[RichFlatRecord]:
    """Hyperplanes containing at least threshold of the given 2-flats."""
    _check_threshold(threshold)
    buckets: Dict[Hyperplane3, set] = defaultdict(set)
    for (i, f1), (j, f2) in combinations(enumerate(planes), 2):
        hyperplane = hyperplane_of_flat2_pair(f1, f2)
        if hyperplane is not None:
            buckets[hyperplane].update((i, j))
    records = []
    for hyperplane, members in buckets.items():
        if len(members) >= threshold:
            assert all(flat2_in_hyperplane(planes[i], hyperplane) for i in members)
            records.append(RichFlatRecord(hyperplane, tuple(sorted(members))))
    return sorted(records, key=lambda r: r.members)


def count_rich_points(lines: Sequence[Line4], r: int = 2) -> int:
    """Number of points lying on at least r of the lines."""
    if r < 2:
        raise InvariantViolationError("r must be at least 2")
    through: Dict[Point4, set] = defaultdict(set)
    for (i, l1), (j, l2) in combinations(enumerate(lines), 2):
        point = line_intersection(l1, l2)
        if point is not None:
            through[point].update((i, j))
    return sum(1 for members in through.values() if len(members) >= r)


def detection_threshold(count: int, epsilon) -> int:
    """Smallest integer multiplicity reaching count^(1/2 + epsilon), at least 2.

    m >= count^(p/q) exactly when m^q >= count^p, so the ceiling comes from an
    integer q-th root.
    """
    exponent = Fraction(1, 2) + to_exact(epsilon)
    if count < 0 or exponent < 0:
        raise InvariantViolationError("need count >= 0 and epsilon >= -1/2")
    root, exact = integer_nthroot(count ** exponent.numerator, exponent.denominator)
    return max(2, root if exact else root + 1)
