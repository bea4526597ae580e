"""
Seeded generation of line / 2-flat configurations and their text format.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ConfigParseError,
    InvariantViolationError,
    RangeTooSmallError,
    RejectionBudgetExceededError,
)
from .exact_core import Point4, as_point, format_exact
from .geometry4 import Flat2, Hyperplane3, Line4, add, null_vector, rank, scale

logger = logging.getLogger(__name__)

ORIGIN: Point4 = (Fraction(0),) * 4  # type: ignore[assignment]


@dataclass
class ConfigurationSet:
    """The L lines and S 2-flats of one experiment."""

    lines: List[Line4] = field(default_factory=list)
    planes: List[Flat2] = field(default_factory=list)
    seed: Optional[int] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len({ln.canonical() for ln in self.lines}) != len(self.lines):
            raise InvariantViolationError("configuration contains duplicate lines")
        if len({fl.canonical() for fl in self.planes}) != len(self.planes):
            raise InvariantViolationError("configuration contains duplicate 2-flats")
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise InvariantViolationError(f"seed {self.seed} is not a 64-bit unsigned integer")

    @property
    def L(self) -> int:
        return len(self.lines)

    @property
    def S(self) -> int:
        return len(self.planes)

    def canonical(self) -> "ConfigurationSet":
        return ConfigurationSet(
            [ln.canonical() for ln in self.lines],
            [fl.canonical() for fl in self.planes],
            self.seed,
            dict(self.provenance),
        )


class GeneratorKind(Enum):
    GENERIC = "generic"
    STAR = "star"
    PLANTED_RICH_FLAT = "planted-rich-flat"
    PLANTED_RICH_HYPERPLANE = "planted-rich-hyperplane"
    MIXED = "mixed"


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate; planted counts apply to the planted kinds only."""

    kind: GeneratorKind
    L: int
    S: int
    planted_lines: int = 0
    planted_planes: int = 0
    coordinate_range: int = 10 ** 6
    center: Tuple[Fraction, ...] = ORIGIN

    def __post_init__(self):
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        object.__setattr__(self, "center", as_point(self.center))
        if min(self.L, self.S, self.planted_lines, self.planted_planes) < 0:
            raise InvariantViolationError("counts must be non-negative")
        if self.planted_lines > self.L:
            raise InvariantViolationError("planted lines exceed the line count")
        if self.planted_planes > self.S:
            raise InvariantViolationError("planted 2-flats exceed the 2-flat count")
        if self.coordinate_range < 2:
            raise InvariantViolationError("coordinate range must be at least 2")

    def parameters(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "L": self.L,
            "S": self.S,
            "planted_lines": self.planted_lines,
            "planted_planes": self.planted_planes,
            "coordinate_range": self.coordinate_range,
            "center": [format_exact(c) for c in self.center],
        }


@dataclass(frozen=True)
class PlantedObject:
    """Ground truth of a planted rich flat: the flat and its member indices."""

    flat: Union[Flat2, Hyperplane3]
    members: Tuple[int, ...]


class ConfigurationGenerator:
    """Draws configurations with integer coordinates from a seeded stream."""

    MAX_REJECTIONS = 10_000
    PLANTED_RANGE = 50  # parameter range inside a planted flat

    def __init__(self, seed: Optional[int] = None):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.rejections = 0

    def _ints(self, bound: int, size: int = 4) -> Tuple[int, ...]:
        return tuple(int(x) for x in self.rng.integers(-bound, bound + 1, size=size))

    def _draw(self, make, seen: set, reject=lambda obj: False):
        """Draw until make() yields a valid, unseen, non-rejected object."""
        for _ in range(self.MAX_REJECTIONS):
            try:
                obj = make()
            except InvariantViolationError:
                self.rejections += 1
                continue
            key = obj.canonical()
            if key in seen or reject(obj):
                self.rejections += 1
                continue
            seen.add(key)
            return obj
        return None

    def _random_lines(self, count: int, bound: int, seen: set) -> List[Line4]:
        lines = []
        for _ in range(count):
            line = self._draw(lambda: Line4(self._ints(bound), self._ints(bound)), seen)
            if line is None:
                raise RangeTooSmallError(f"could not draw {count} distinct lines in range {bound}")
            lines.append(line)
        return lines

    def _random_planes(self, count: int, bound: int, seen: set) -> List[Flat2]:
        planes = []
        for _ in range(count):
            plane = self._draw(
                lambda: Flat2(self._ints(bound), self._ints(bound), self._ints(bound)), seen
            )
            if plane is None:
                raise RangeTooSmallError(f"could not draw {count} distinct 2-flats in range {bound}")
            planes.append(plane)
        return planes

    def gen_generic(self, L: int, S: int, coordinate_range: int = 10 ** 6) -> ConfigurationSet:
        spec = GeneratorSpec(GeneratorKind.GENERIC, L, S, coordinate_range=coordinate_range)
        lines = self._random_lines(L, coordinate_range, set())
        planes = self._random_planes(S, coordinate_range, set())
        logger.debug("generic configuration L=%d S=%d after %d rejections", L, S, self.rejections)
        return ConfigurationSet(lines, planes, self.seed, self._provenance("gen_generic", spec))

    def gen_star(
        self, L: int, S: int, center: Sequence = ORIGIN, coordinate_range: int = 1000
    ) -> ConfigurationSet:
        """Lines and 2-flats all through center, no line inside any 2-flat."""
        spec = GeneratorSpec(GeneratorKind.STAR, L, S, coordinate_range=coordinate_range, center=tuple(center))
        center = spec.center
        seen_lines: set = set()
        lines = []
        for _ in range(L):
            line = self._draw(lambda: Line4(center, self._ints(coordinate_range)), seen_lines)
            if line is None:
                raise RejectionBudgetExceededError("star line directions exhausted")
            lines.append(line)

        def contains_some_line(plane: Flat2) -> bool:
            return any(plane.contains_direction(ln.direction) for ln in lines)

        seen_planes: set = set()
        planes = []
        for _ in range(S):
            plane = self._draw(
                lambda: Flat2(center, self._ints(coordinate_range), self._ints(coordinate_range)),
                seen_planes,
                contains_some_line,
            )
            if plane is None:
                raise RejectionBudgetExceededError("star 2-flat spans exhausted")
            planes.append(plane)
        return ConfigurationSet(lines, planes, self.seed, self._provenance("gen_star", spec))

    def gen_planted(self, spec: GeneratorSpec) -> Tuple[ConfigurationSet, List[PlantedObject]]:
        """
        Generic configuration with a rich 2-flat and/or rich hyperplane planted.

        Planted members come first in the object lists; the ground truth is
        returned alongside the configuration.
        """
        bound = spec.coordinate_range
        truth: List[PlantedObject] = []
        seen_lines: set = set()
        seen_planes: set = set()
        lines: List[Line4] = []
        planes: List[Flat2] = []

        if spec.kind in (GeneratorKind.PLANTED_RICH_FLAT, GeneratorKind.MIXED) and spec.planted_lines:
            flat = self._random_planes(1, bound, set())[0].canonical()
            lines = self._lines_in_flat(flat, spec.planted_lines, seen_lines)
            truth.append(PlantedObject(flat, tuple(range(len(lines)))))
        lines += self._random_lines(spec.L - len(lines), bound, seen_lines)

        if spec.kind in (GeneratorKind.PLANTED_RICH_HYPERPLANE, GeneratorKind.MIXED) and spec.planted_planes:
            hyperplane, planes = self._planes_in_hyperplane(spec.planted_planes, bound, seen_planes)
            truth.append(PlantedObject(hyperplane, tuple(range(len(planes)))))
        planes += self._random_planes(spec.S - len(planes), bound, seen_planes)

        cfg = ConfigurationSet(lines, planes, self.seed, self._provenance("gen_planted", spec))
        return cfg, truth

    def _lines_in_flat(self, flat: Flat2, count: int, seen: set) -> List[Line4]:
        r = self.PLANTED_RANGE

        def make() -> Line4:
            a, b, alpha, beta = self._ints(r)
            return Line4(flat.point_at(a, b), add(scale(Fraction(alpha), flat.u), scale(Fraction(beta), flat.v)))

        lines = []
        for _ in range(count):
            line = self._draw(make, seen)
            if line is None:
                raise RangeTooSmallError("could not plant distinct lines in the 2-flat")
            lines.append(line)
        return lines

    def _planes_in_hyperplane(self, count: int, bound: int, seen: set) -> Tuple[Hyperplane3, List[Flat2]]:
        for _ in range(self.MAX_REJECTIONS):
            frame = [self._ints(bound) for _ in range(3)]
            if rank(frame) == 3:
                break
        else:
            raise RangeTooSmallError("could not draw a hyperplane frame")
        origin = self._ints(bound)
        normal = null_vector(frame)
        hyperplane = Hyperplane3(normal, sum(n * x for n, x in zip(normal, origin))).canonical()
        r = self.PLANTED_RANGE

        def combine(coefficients: Sequence[int]):
            total = (Fraction(0),) * 4
            for c, w in zip(coefficients, frame):
                total = add(total, scale(Fraction(c), w))
            return total

        def make() -> Flat2:
            return Flat2(add(origin, combine(self._ints(r, 3))), combine(self._ints(r, 3)), combine(self._ints(r, 3)))

        planes = []
        for _ in range(count):
            plane = self._draw(make, seen)
            if plane is None:
                raise RangeTooSmallError("could not plant distinct 2-flats in the hyperplane")
            planes.append(plane)
        return hyperplane, planes

    def gen_points(self, count: int, coordinate_range: int = 1000) -> List[Point4]:
        """Distinct random integer points, e.g. as partition input."""
        seen: set = set()
        points: List[Point4] = []
        while len(points) < count:
            point = as_point(self._ints(coordinate_range))
            if point not in seen:
                seen.add(point)
                points.append(point)
        return points

    def generate(self, spec: GeneratorSpec) -> Tuple[ConfigurationSet, List[PlantedObject]]:
        """Dispatch on the generator kind."""
        if spec.kind is GeneratorKind.GENERIC:
            return self.gen_generic(spec.L, spec.S, spec.coordinate_range), []
        if spec.kind is GeneratorKind.STAR:
            return self.gen_star(spec.L, spec.S, spec.center, min(spec.coordinate_range, 1000)), []
        return self.gen_planted(spec)

    def _provenance(self, generator: str, spec: GeneratorSpec) -> Dict[str, Any]:
        return {"generator": generator, "parameters": spec.parameters()}


def gen_generic(L: int, S: int, seed: Optional[int], coordinate_range: int = 10 ** 6) -> ConfigurationSet:
    return ConfigurationGenerator(seed).gen_generic(L, S, coordinate_range)


def gen_star(L: int, S: int, center: Sequence = ORIGIN, seed: Optional[int] = None) -> ConfigurationSet:
    return ConfigurationGenerator(seed).gen_star(L, S, center)


def gen_planted(spec: GeneratorSpec, seed: Optional[int]) -> Tuple[ConfigurationSet, List[PlantedObject]]:
    return ConfigurationGenerator(seed).gen_planted(spec)


def _vector(values: Sequence[Fraction]) -> List[str]:
    return [format_exact(v) for v in values]


def config_to_dict(cfg: ConfigurationSet) -> Dict[str, Any]:
    return {
        "lines": [{"p": _vector(ln.base), "d": _vector(ln.direction)} for ln in cfg.lines],
        "planes": [{"q": _vector(fl.base), "u": _vector(fl.u), "v": _vector(fl.v)} for fl in cfg.planes],
        "seed": cfg.seed,
        "provenance": cfg.provenance,
    }


def dumps_config(cfg: ConfigurationSet) -> str:
    """Canonical serialization: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(config_to_dict(cfg), sort_keys=True, indent=2) + "\n"


def config_digest(cfg: ConfigurationSet) -> str:
    return hashlib.sha256(dumps_config(cfg).encode("utf-8")).hexdigest()


def save_config(cfg: ConfigurationSet, destination: Union[str, Path]) -> None:
    Path(destination).write_text(dumps_config(cfg), encoding="utf-8")


def _parse_vector(entry: Dict[str, Any], key: str, where: str) -> Point4:
    if key not in entry:
        raise ConfigParseError(f"{where}: missing field {key!r}")
    values = entry[key]
    if not isinstance(values, list) or len(values) != 4:
        raise ConfigParseError(f"{where}: field {key!r} must be a list of 4 rationals")
    # floats and booleans would not survive a round trip exactly
    if any(isinstance(v, bool) or not isinstance(v, (int, str)) for v in values):
        raise ConfigParseError(f"{where}: field {key!r} must hold integers or \"p/q\" strings")
    try:
        return as_point(values)
    except ValueError as e:
        raise ConfigParseError(f"{where}: {e}") from e


def loads_config(text: str) -> ConfigurationSet:
    """
    Parse the JSON configuration format.

    :raises ConfigParseError: malformed text (with line and column) or fields
    :raises InvariantViolationError: zero directions, dependent spans, duplicates
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(e.msg, e.lineno, e.colno) from e
    if not isinstance(data, dict):
        raise ConfigParseError("top level must be an object")
    lines = [
        Line4(_parse_vector(entry, "p", f"lines[{i}]"), _parse_vector(entry, "d", f"lines[{i}]"))
        for i, entry in enumerate(data.get("lines", []))
    ]
    planes = [
        Flat2(
            _parse_vector(entry, "q", f"planes[{i}]"),
            _parse_vector(entry, "u", f"planes[{i}]"),
            _parse_vector(entry, "v", f"planes[{i}]"),
        )
        for i, entry in enumerate(data.get("planes", []))
    ]
    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigParseError("seed must be an integer or null")
    return ConfigurationSet(lines, planes, seed, data.get("provenance") or {})


def load_config(source: Union[str, Path]) -> ConfigurationSet:
    return loads_config(Path(source).read_text(encoding="utf-8"))
