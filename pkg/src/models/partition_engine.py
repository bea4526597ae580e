"""
Polynomial partitioning of finite point sets in R^4.

Each round adds one factor that simultaneously bisects every current cell
(a ham-sandwich cut in the Veronese-lifted space).  Cells are sign vectors
over the factors.  Candidate cuts are searched in floating point and only
accepted after an exact check over the rationals.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BezoutBoundViolation,
    FlatInZeroSetError,
    InvariantViolationError,
    LineInZeroSetError,
    SearchBudgetExceededError,
)
from .exact_core import (
    MultiPoly4,
    Point4,
    UniPoly,
    as_point,
    format_exact,
    isolate_real_roots,
    poly_gcd,
    refine_isolating_interval,
    restrict_to_flat2,
    restrict_to_line,
    sign,
    squarefree_part,
    sturm_root_count,
    to_exact,
)
from .geometry4 import Flat2, Line4

logger = logging.getLogger(__name__)


def monomial_count(k: int) -> int:
    """Number of monomials of total degree 1..k in four variables."""
    return math.comb(4 + k, 4) - 1


def monomial_exponents(k: int, include_constant: bool = False) -> List[Tuple[int, int, int, int]]:
    """Exponents of degree 1..k (optionally 0), graded, lexicographic within a degree."""
    exponents = [(0, 0, 0, 0)] if include_constant else []
    for degree in range(1, k + 1):
        block = []
        for combo in combinations_with_replacement(range(4), degree):
            exponent = [0, 0, 0, 0]
            for var in combo:
                exponent[var] += 1
            block.append(tuple(exponent))
        exponents.extend(sorted(block, reverse=True))
    return exponents


def veronese_lift(x: Sequence, k: int) -> Tuple[Fraction, ...]:
    """All monomials of degree 1..k evaluated at x, in monomial_exponents order."""
    if k < 1:
        raise InvariantViolationError("lift degree must be at least 1")
    x = as_point(x)
    values = []
    for exponent in monomial_exponents(k):
        value = Fraction(1)
        for coordinate, e in zip(x, exponent):
            if e:
                value *= coordinate ** e
        values.append(value)
    return tuple(values)


def default_lift_schedule(J: int) -> Tuple[int, ...]:
    """Smallest degree per round with at least 2^(j-1) + 1 monomials."""
    schedule = []
    for j in range(1, J + 1):
        k = 1
        while monomial_count(k) < 2 ** (j - 1) + 1:
            k += 1
        schedule.append(k)
    return tuple(schedule)


@dataclass(frozen=True)
class PartitionParams:
    """Rounds J, balance slack delta and the lift degree used in each round."""

    J: int
    delta: Fraction = Fraction(0)
    lift_degree_schedule: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "delta", to_exact(self.delta) if not isinstance(self.delta, float) else Fraction(str(self.delta)))
        if self.J < 0:
            raise InvariantViolationError("J must be non-negative")
        if not 0 <= self.delta < 1:
            raise InvariantViolationError("delta must lie in [0, 1)")
        schedule = tuple(self.lift_degree_schedule) or default_lift_schedule(self.J)
        if len(schedule) != self.J:
            raise InvariantViolationError("lift schedule needs one degree per round")
        for j, k in enumerate(schedule, start=1):
            if k < 1 or monomial_count(k) < 2 ** (j - 1) + 1:
                raise InvariantViolationError(f"round {j} lift degree {k} has too few monomials")
        object.__setattr__(self, "lift_degree_schedule", schedule)

    def cell_cap(self, total: int, j: int) -> int:
        """ceil(total * 2^-j * (1 + delta)^j)."""
        return math.ceil(Fraction(total, 2 ** j) * (1 + self.delta) ** j)


@dataclass(frozen=True)
class SignVector:
    """Signs of the partition factors at a point; any 0 means on Z(P)."""

    signs: Tuple[int, ...]

    @property
    def on_zero_set(self) -> bool:
        return 0 in self.signs

    @property
    def label(self) -> str:
        return "".join("+" if s > 0 else "-" if s < 0 else "0" for s in self.signs)

    def __lt__(self, other: "SignVector") -> bool:
        return self.signs < other.signs


@dataclass(frozen=True)
class PartitionPolynomial:
    """Ordered bisecting factors; P is their product."""

    factors: Tuple[MultiPoly4, ...]
    delta: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if any(f.is_zero for f in self.factors):
            raise InvariantViolationError("partition factors must be nonzero")

    @property
    def J(self) -> int:
        return len(self.factors)

    @property
    def total_degree(self) -> int:
        return sum(f.degree for f in self.factors)

    @property
    def theorem_degree(self) -> float:
        """The degree 2^(J/4) promised by the existence theorem, for comparison."""
        return 2 ** (self.J / 4)


@dataclass(frozen=True)
class CrossingStats:
    """Cells entered by one object and the roots met along the way."""

    object_id: Optional[int]
    distinct_cells: int
    zero_set_hits: int
    intervals: Tuple[Tuple[Fraction, SignVector], ...] = ()

    def __post_init__(self):
        if self.intervals and self.distinct_cells > self.zero_set_hits + 1:
            raise InvariantViolationError("a line cannot enter more cells than hits + 1")


def cell_id(x: Sequence, part: PartitionPolynomial) -> SignVector:
    x = as_point(x)
    return SignVector(tuple(sign(f.evaluate(x)) for f in part.factors))


class PartitionEngine:
    """Builds partitioning polynomials and measures how objects cross them."""

    ATTEMPT_BUDGET = 8
    SWEEPS = 40
    STALL_SWEEPS = 3
    RANDOM_STEPS = 64
    COEFFICIENT_BITS = 40
    SEARCH_SEED = 0x5EED
    # extra lift degrees tried for a round once the attempt budget runs out
    LIFT_RAISES = 2

    def __init__(self, attempt_budget: Optional[int] = None):
        self.attempt_budget = attempt_budget or self.ATTEMPT_BUDGET
        self.attempts_used = 0

    # -- bisection ---------------------------------------------------------

    def ham_sandwich_bisect(
        self,
        sets: Sequence[Sequence[Point4]],
        k: int,
        delta: Fraction = Fraction(0),
        caps: Optional[Sequence[int]] = None,
    ) -> MultiPoly4:
        """
        A nonzero polynomial of degree <= k leaving at most cap points of
        every set on each side; cap defaults to ceil(|X|(1 + delta)/2).

        :raises SearchBudgetExceededError: if no candidate is certified
        """
        sets = [[as_point(x) for x in X] for X in sets]
        delta = to_exact(delta)
        if len(sets) > monomial_count(k):
            raise InvariantViolationError(f"{len(sets)} sets exceed the {monomial_count(k)} lifted dimensions")
        if caps is None:
            caps = [math.ceil(len(X) * (1 + delta) / 2) for X in sets]
        if not any(sets):
            return MultiPoly4.variable(0)

        for candidate in self._axis_candidates(sets, k):
            if self._certify(candidate, sets, caps):
                return candidate
        candidate = self._lifted_search(sets, k, caps)
        if candidate is None:
            raise SearchBudgetExceededError(
                f"no certified degree-{k} bisector of {len(sets)} sets in {self.attempt_budget} attempts"
            )
        return candidate

    @staticmethod
    def _certify(h: MultiPoly4, sets: Sequence[Sequence[Point4]], caps: Sequence[int]) -> bool:
        if h.is_zero:
            return False
        all_zero = True
        for X, cap in zip(sets, caps):
            positive = negative = 0
            for x in X:
                s = sign(h.evaluate(x))
                positive += s > 0
                negative += s < 0
            if positive > cap or negative > cap:
                return False
            all_zero = all_zero and positive == negative == 0
        return not all_zero

    @staticmethod
    def _axis_candidates(sets: Sequence[Sequence[Point4]], k: int) -> Iterable[MultiPoly4]:
        """Products of per-set median cuts along one coordinate axis."""
        nonempty = [X for X in sets if X]
        if len(nonempty) > k:
            return
        for axis in range(4):
            h = MultiPoly4.constant(1)
            for X in nonempty:
                values = sorted(x[axis] for x in X)
                n = len(values)
                if n == 1:
                    cut = values[0] + Fraction(1, 2)
                else:
                    cut = (values[n // 2 - 1] + values[n // 2]) / 2
                h = h * (MultiPoly4.variable(axis) - cut)
            yield h

    def _lifted_search(self, sets: Sequence[Sequence[Point4]], k: int, caps: Sequence[int]) -> Optional[MultiPoly4]:
        """
        Coordinate descent on the total cap excess in lifted space.

        Each move is an exact line search along one direction: the excess only
        changes where some point changes sign, so trying one value of the step
        between consecutive sign changes finds the best step on that line.
        """
        exponents = monomial_exponents(k, include_constant=True)
        nonempty = [(X, cap) for X, cap in zip(sets, caps) if X]
        points = [x for X, _ in nonempty for x in X]
        owner = np.concatenate([np.full(len(X), i) for i, (X, _) in enumerate(nonempty)])
        group_caps = np.array([cap for _, cap in nonempty], dtype=float)
        onehot = np.zeros((len(points), len(nonempty)))
        onehot[np.arange(len(points)), owner] = 1.0

        scale_exp = max(0, math.ceil(math.log2(max(float(abs(c)) for x in points for c in x) or 1.0)))
        scale = 2 ** scale_exp
        coords = np.array([[float(c) / scale for c in x] for x in points])
        powers = np.array(exponents, dtype=float)
        features = np.prod(coords[:, None, :] ** powers[None, :, :], axis=2)

        # per-set indicator fits: moving along one mostly shifts that set alone
        fits, *_ = np.linalg.lstsq(features, onehot, rcond=None)
        shifts = features @ fits

        rng = np.random.default_rng(self.SEARCH_SEED + k)
        for attempt in range(self.attempt_budget):
            self.attempts_used += 1
            w = rng.standard_normal(len(exponents))
            h = features @ w
            medians = np.array([np.median(h[owner == i]) for i in range(len(nonempty))])
            w -= fits @ medians
            h = features @ w
            excess = self._excess(h[None, :], onehot, group_caps)[0]
            stalled = 0
            for sweep in range(self.SWEEPS):
                if not excess.any():
                    candidate = self._exact_candidate(w, exponents, scale, k)
                    if self._certify(candidate, sets, caps):
                        logger.debug("degree-%d bisector of %d sets certified on attempt %d, sweep %d",
                                     k, len(nonempty), attempt, sweep)
                        return candidate
                    break
                before = excess.sum()
                for i in np.argsort(-excess, kind="stable"):
                    if not excess[i]:
                        continue
                    alphas = self._step_candidates(h, shifts[:, i], owner == i)
                    w, h, excess = self._best_step(w, h, excess, fits[:, i], shifts[:, i], alphas, onehot, group_caps)
                direction = rng.standard_normal(len(exponents))
                moved = features @ direction
                alphas = self._step_candidates(h, moved, excess[owner] > 0, self.RANDOM_STEPS)
                w, h, excess = self._best_step(w, h, excess, direction, moved, alphas, onehot, group_caps)
                stalled = stalled + 1 if excess.sum() >= before else 0
                if stalled >= self.STALL_SWEEPS:
                    logger.debug("attempt %d stalled at excess %d after %d sweeps", attempt, int(excess.sum()), sweep)
                    break
        return None

    @staticmethod
    def _excess(values: np.ndarray, onehot: np.ndarray, caps: np.ndarray) -> np.ndarray:
        """Points above cap on either side, per set, for each row of values."""
        positive = (values > 0).astype(float) @ onehot
        negative = (values < 0).astype(float) @ onehot
        return np.maximum(positive - caps, 0) + np.maximum(negative - caps, 0)

    @staticmethod
    def _step_candidates(h: np.ndarray, d: np.ndarray, mask: np.ndarray, limit: Optional[int] = None) -> np.ndarray:
        """One step size between each pair of consecutive sign changes of the masked points."""
        mask = mask & (d != 0)
        breaks = np.sort(-h[mask] / d[mask])
        if limit is not None and len(breaks) > limit:
            breaks = breaks[np.sort(np.argsort(np.abs(breaks), kind="stable")[:limit])]
        if not len(breaks):
            return np.zeros(1)
        margin = max(1.0, float(breaks[-1] - breaks[0]))
        inner = (breaks[:-1] + breaks[1:]) / 2
        return np.concatenate([[0.0, breaks[0] - margin], inner, [breaks[-1] + margin]])

    def _best_step(self, w, h, excess, direction, moved, alphas, onehot, caps):
        trial = self._excess(h[None, :] + alphas[:, None] * moved[None, :], onehot, caps)
        totals = trial.sum(axis=1)
        best = min(range(len(alphas)), key=lambda r: (totals[r], abs(alphas[r])))
        if totals[best] >= excess.sum():
            return w, h, excess
        alpha = alphas[best]
        return w + alpha * direction, h + alpha * moved, trial[best]

    def _exact_candidate(self, w: np.ndarray, exponents, scale: int, k: int) -> MultiPoly4:
        """Round to integer coefficients and undo the coordinate scaling exactly."""
        peak = float(np.max(np.abs(w)))
        if peak == 0:
            return MultiPoly4()
        integers = np.rint(w / peak * 2 ** self.COEFFICIENT_BITS)
        return MultiPoly4({
            exponent: int(c) * scale ** (k - sum(exponent))
            for exponent, c in zip(exponents, integers) if c
        })

    # -- partition ---------------------------------------------------------

    def _bisect_round(self, j: int, sets, k: int, delta: Fraction, caps: Sequence[int]) -> MultiPoly4:
        """Bisect with the scheduled lift, then with up to LIFT_RAISES higher ones."""
        for lift in range(k, k + self.LIFT_RAISES):
            try:
                return self.ham_sandwich_bisect(sets, lift, delta, caps)
            except SearchBudgetExceededError as e:
                logger.warning("round %d: %s; retrying with a degree-%d lift", j, e, lift + 1)
        return self.ham_sandwich_bisect(sets, k + self.LIFT_RAISES, delta, caps)

    def build_partition(self, points: Sequence, params: PartitionParams) -> PartitionPolynomial:
        """
        J factors such that after round j every sign cell of the first j
        factors holds at most ceil(N 2^-j (1+delta)^j) points off Z(P).

        A round whose scheduled lift finds no certified bisector is retried
        with higher lift degrees, so a factor may exceed its scheduled degree.
        """
        points = [as_point(x) for x in points]
        total = len(points)
        cells: Dict[Tuple[int, ...], List[Point4]] = {(): points}
        factors: List[MultiPoly4] = []
        for j, k in enumerate(params.lift_degree_schedule, start=1):
            cap = params.cell_cap(total, j)
            keys = sorted(key for key, X in cells.items() if X)
            sets = [cells[key] for key in keys]
            caps = [min(math.ceil(len(X) * (1 + params.delta) / 2), cap) for X in sets]
            h = self._bisect_round(j, sets, k, params.delta, caps)
            factors.append(h)
            refined: Dict[Tuple[int, ...], List[Point4]] = {}
            for key, X in zip(keys, sets):
                for x in X:
                    s = sign(h.evaluate(x))
                    if s:
                        refined.setdefault(key + (s,), []).append(x)
            cells = refined
            largest = max((len(X) for X in cells.values()), default=0)
            if largest > cap:
                raise InvariantViolationError(f"round {j}: a cell holds {largest} > {cap} points")
            logger.debug("round %d: degree %d factor, %d cells, largest %d (cap %d)",
                         j, h.degree, len(cells), largest, cap)
        return PartitionPolynomial(tuple(factors), params.delta)

    # -- crossing statistics -------------------------------------------------

    def line_crossing_stats(
        self, ln: Line4, part: PartitionPolynomial, object_id: Optional[int] = None
    ) -> CrossingStats:
        """
        Exact count of the sign cells a line passes through.

        :raises LineInZeroSetError: if some factor vanishes on the whole line
        :raises BezoutBoundViolation: if more than D + 1 cells are entered
        """
        restricted = [restrict_to_line(f, ln) for f in part.factors]
        for index, r in enumerate(restricted):
            if r.is_zero:
                raise LineInZeroSetError(index)
        roots = _merged_roots(restricted)
        if roots:
            samples = [roots[0][0] - 1]
            samples += [(a[1] + b[0]) / 2 for a, b in zip(roots, roots[1:])]
            samples.append(roots[-1][1] + 1)
        else:
            samples = [Fraction(0)]
        intervals = tuple(
            (t, SignVector(tuple(sign(r.evaluate(t)) for r in restricted))) for t in samples
        )
        distinct = len({sv for _, sv in intervals})
        if distinct > part.total_degree + 1:
            raise BezoutBoundViolation(f"line enters {distinct} cells, more than D+1 = {part.total_degree + 1}")
        return CrossingStats(object_id, distinct, len(roots), intervals)

    def flat2_crossing_stats(
        self,
        fl: Flat2,
        part: PartitionPolynomial,
        sample_budget: int = 256,
        radius: Fraction = Fraction(10),
    ) -> int:
        """
        Distinct open-cell sign vectors seen at low-discrepancy rational
        samples of the 2-flat: a certified lower bound on cells entered.

        :raises FlatInZeroSetError: if some factor vanishes on the whole flat
        :raises BezoutBoundViolation: if the count exceeds D^2 + D + 1
        """
        restricted = [restrict_to_flat2(f, fl) for f in part.factors]
        for index, g in enumerate(restricted):
            if g.is_zero:
                raise FlatInZeroSetError(index)
        radius = to_exact(radius)
        seen = set()
        for i in range(1, sample_budget + 1):
            a = -radius + 2 * radius * _radical_inverse(i, 2)
            b = -radius + 2 * radius * _radical_inverse(i, 3)
            signs = tuple(sign(g.evaluate((a, b))) for g in restricted)
            if 0 not in signs:
                seen.add(signs)
        D = part.total_degree
        if len(seen) > D * D + D + 1:
            raise BezoutBoundViolation(f"2-flat shows {len(seen)} cells, more than D^2+D+1 = {D * D + D + 1}")
        return len(seen)


def _radical_inverse(index: int, base: int) -> Fraction:
    """Van der Corput value of index in the given base, exact."""
    value = Fraction(0)
    weight = Fraction(1, base)
    while index:
        index, digit = divmod(index, base)
        value += digit * weight
        weight /= base
    return value


@dataclass
class _Root:
    lo: Fraction
    hi: Fraction
    poly: UniPoly  # square-free, exactly one root in (lo, hi)


def _merged_roots(restricted: Sequence[UniPoly]) -> List[Tuple[Fraction, Fraction]]:
    """Disjoint isolating intervals of the distinct real roots of all factors."""
    roots: List[_Root] = []
    for r in restricted:
        if r.degree < 1:
            continue
        s = squarefree_part(r)
        roots.extend(_Root(lo, hi, s) for lo, hi in isolate_real_roots(s))
    merging = True
    while merging:
        merging = False
        roots.sort(key=lambda root: root.lo)
        for i in range(len(roots) - 1):
            a, b = roots[i], roots[i + 1]
            if a.hi <= b.lo:
                continue
            merging = True
            lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
            common = poly_gcd(a.poly, b.poly)
            if common.degree >= 1 and sturm_root_count(common, (lo, hi)) == 1:
                roots[i:i + 2] = [_Root(lo, hi, common)]
            else:
                a.lo, a.hi = refine_isolating_interval(a.poly, a.lo, a.hi)
                b.lo, b.hi = refine_isolating_interval(b.poly, b.lo, b.hi)
            break
    return [(root.lo, root.hi) for root in roots]


def line_crossing_stats(ln: Line4, part: PartitionPolynomial, object_id: Optional[int] = None) -> CrossingStats:
    return PartitionEngine().line_crossing_stats(ln, part, object_id)


def flat2_crossing_stats(fl: Flat2, part: PartitionPolynomial, sample_budget: int = 256) -> int:
    return PartitionEngine().flat2_crossing_stats(fl, part, sample_budget)


def ham_sandwich_bisect(sets, k: int, delta: Fraction = Fraction(0)) -> MultiPoly4:
    return PartitionEngine().ham_sandwich_bisect(sets, k, delta)


def build_partition(points: Sequence, params: PartitionParams) -> PartitionPolynomial:
    return PartitionEngine().build_partition(points, params)


def dumps_partition(part: PartitionPolynomial) -> str:
    """Text dump: factors as sparse monomial/coefficient pairs plus J, delta, D."""
    return json.dumps(
        {
            "J": part.J,
            "delta": format_exact(part.delta),
            "D": part.total_degree,
            "theorem_degree": part.theorem_degree,
            "factors": [f.to_sparse() for f in part.factors],
        },
        indent=2,
    ) + "\n"


def loads_partition(text: str) -> PartitionPolynomial:
    data = json.loads(text)
    factors = tuple(MultiPoly4.from_sparse(pairs) for pairs in data["factors"])
    part = PartitionPolynomial(factors, to_exact(data.get("delta", "0")))
    if part.J != data.get("J", part.J) or part.total_degree != data.get("D", part.total_degree):
        raise InvariantViolationError("partition dump header disagrees with its factors")
    return part
