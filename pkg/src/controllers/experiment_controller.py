"""
Controller that runs experiments end to end: generate or load a configuration,
count, partition, detect rich flats, evaluate bounds and compare.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath
from tqdm import tqdm

from ..models.bounds_calculator import (
    BoundParams,
    BoundResult,
    BoundsCalculator,
    ConstantsProfile,
    TotalDominance,
)
from ..models.configurations import (
    ConfigurationGenerator,
    ConfigurationSet,
    GeneratorKind,
    GeneratorSpec,
    PlantedObject,
    config_digest,
    load_config,
)
from ..models.errors import (
    ConfigParseError,
    FlatInZeroSetError,
    IncidenceLabError,
    InvariantViolationError,
    LineInZeroSetError,
)
from ..models.exact_core import Point4, format_exact, to_exact
from ..models.geometry4 import Flat2
from ..models.incidence_counter import (
    IncidenceCounter,
    IncidenceReport,
    RichFlatRecord,
    count_rich_points,
    detect_rich_flat2,
    detect_rich_hyperplane,
    detection_threshold,
    incidence_graph,
)
from ..models.partition_engine import CrossingStats, PartitionEngine, PartitionParams, PartitionPolynomial

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "INCIDENCE_LAB_OUTPUT_DIR"
FORMATS = ("text", "csv")

PASS = "pass"
FAIL = "fail"
INFORMATIONAL = "out-of-regime, informational"
VACUOUS = "vacuous"


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or ".")


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines one experiment's report."""

    generator: GeneratorSpec
    bound_params: BoundParams
    constants: ConstantsProfile = ConstantsProfile()
    seed: Optional[int] = None
    partition: Optional[PartitionParams] = None
    config_path: Optional[Path] = None
    output: Optional[Path] = None
    format: str = "text"
    strict: bool = False

    def __post_init__(self):
        if self.format not in FORMATS:
            raise InvariantViolationError(f"format must be one of {FORMATS}")

    def to_dict(self) -> Dict[str, Any]:
        g, p, c = self.generator, self.bound_params, self.constants
        return {
            "generator": g.parameters(),
            "seed": self.seed,
            "partition": None if self.partition is None else {
                "J": self.partition.J,
                "delta": format_exact(self.partition.delta),
                "lift_degree_schedule": list(self.partition.lift_degree_schedule),
            },
            "bounds": {"D": p.D, "epsilon": format_exact(p.epsilon)},
            "constants": {k: format_exact(getattr(c, k)) for k in ("C1", "C2", "C3", "C4")},
            "config_path": None if self.config_path is None else str(self.config_path),
            "format": self.format,
            "strict": self.strict,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        try:
            g = dict(data["generator"])
            generator = GeneratorSpec(
                GeneratorKind(g.pop("kind")),
                g.pop("L"),
                g.pop("S"),
                center=tuple(g.pop("center", ("0",) * 4)),
                **g,
            )
            part = data.get("partition")
            partition = None if part is None else PartitionParams(
                part["J"], to_exact(str(part.get("delta", "0"))), tuple(part.get("lift_degree_schedule", ()))
            )
            bounds = data.get("bounds", {})
            constants = {k: to_exact(str(v)) for k, v in data.get("constants", {}).items() if k != "C3"}
            config_path = data.get("config_path")
            return cls(
                generator,
                BoundParams(generator.L or 1, generator.S, bounds.get("D", 2), to_exact(str(bounds.get("epsilon", "1/2")))),
                ConstantsProfile(**constants),
                data.get("seed"),
                partition,
                None if config_path is None else Path(config_path),
                None,
                data.get("format", "text"),
                bool(data.get("strict", False)),
            )
        except (KeyError, TypeError) as e:
            raise ConfigParseError(f"experiment spec: missing or malformed field {e}") from e


def load_experiment_spec(path: Path) -> ExperimentSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(e.msg, e.lineno, e.colno) from e
    return ExperimentSpec.from_dict(data)


@dataclass(frozen=True)
class Verdict:
    """Empirical count against one bound."""

    bound: str
    empirical: int
    bound_upper: mpmath.mpf
    hypothesis_satisfied: bool
    status: str


@dataclass
class PartitionSummary:
    partition: PartitionPolynomial
    point_count: int
    line_stats: List[CrossingStats] = field(default_factory=list)
    flat_cells: List[int] = field(default_factory=list)


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    config: ConfigurationSet
    digest: str
    incidences: IncidenceReport
    rich_flats: List[RichFlatRecord]
    rich_hyperplanes: List[RichFlatRecord]
    flat_threshold: int
    hyperplane_threshold: int
    bounds: TotalDominance
    rich_points: int
    rich_points_bound: BoundResult
    verdicts: List[Verdict]
    planted: List[PlantedObject] = field(default_factory=list)
    partition: Optional[PartitionSummary] = None
    errors: List[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(v.status == FAIL for v in self.verdicts)

    def exit_code(self) -> int:
        return 3 if self.failed else 0


@dataclass(frozen=True)
class GridRow:
    params: BoundParams
    constants: ConstantsProfile
    dominance: TotalDominance
    in_regime: bool


@dataclass
class GridResult:
    rows: List[GridRow]

    @property
    def summary(self) -> str:
        if not self.rows:
            return "no rows"
        ratios = [row.dominance.ratio for row in self.rows if row.in_regime and row.dominance.ratio is not None]
        if not ratios:
            return f"{len(self.rows)} rows, none in regime"
        return f"{len(self.rows)} rows, max total/main ratio over {len(ratios)} in-regime rows: {mpmath.nstr(max(ratios), 12)}"


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


class ExperimentController:
    """Coordinates the models and hands results to the report view."""

    FLAT_SAMPLE_BUDGET = 128

    def __init__(self, show_progress: bool = True):
        self.show_progress = show_progress
        self.calculator = BoundsCalculator()
        self.errors: List[str] = []

    def _progress(self, iterable: Iterable, total: Optional[int] = None, desc: str = ""):
        return tqdm(iterable, total=total, desc=desc, disable=not self.show_progress, leave=False)

    # -- single steps -------------------------------------------------------

    def generate(self, spec: GeneratorSpec, seed: Optional[int]) -> Tuple[ConfigurationSet, List[PlantedObject]]:
        logger.info("Generating %s configuration (L=%d, S=%d, seed=%s)", spec.kind.value, spec.L, spec.S, seed)
        return ConfigurationGenerator(seed).generate(spec)

    def count(self, cfg: ConfigurationSet) -> IncidenceReport:
        logger.info("Counting incidences over %d pairs", cfg.L * cfg.S)
        counter = IncidenceCounter()
        with tqdm(total=cfg.L, desc="pairs", disable=not self.show_progress, leave=False) as bar:
            counter.set_progress_callback(lambda done, total: bar.update(1))
            return counter.count_incidences(cfg)

    @staticmethod
    def partition_points(cfg: ConfigurationSet, report: IncidenceReport) -> List[Point4]:
        """Incidence locations plus the base point of every line and 2-flat, deduplicated."""
        points = [r.location for r in report.incidence_records]
        points += [ln.base for ln in cfg.lines] + [fl.base for fl in cfg.planes]
        return sorted(set(points))

    def partition(
        self, cfg: ConfigurationSet, params: PartitionParams, report: IncidenceReport
    ) -> Tuple[PartitionSummary, IncidenceReport]:
        points = self.partition_points(cfg, report)
        logger.info("Building a %d-round partition of %d points", params.J, len(points))
        engine = PartitionEngine()
        part = engine.build_partition(points, params)
        counter = IncidenceCounter()
        attributed = counter.classify_by_partition(cfg, part, report)
        self.errors.extend(counter.errors)
        summary = PartitionSummary(part, len(points))
        for i, ln in enumerate(self._progress(cfg.lines, cfg.L, "line crossings")):
            try:
                summary.line_stats.append(engine.line_crossing_stats(ln, part, i))
            except LineInZeroSetError as e:
                self.errors.append(f"line {i}: {e}")
        for j, fl in enumerate(self._progress(cfg.planes, cfg.S, "2-flat crossings")):
            try:
                summary.flat_cells.append(engine.flat2_crossing_stats(fl, part, self.FLAT_SAMPLE_BUDGET))
            except FlatInZeroSetError as e:
                self.errors.append(f"2-flat {j}: {e}")
        return summary, attributed

    def degeneracy(self, cfg: ConfigurationSet, epsilon: Fraction) -> Tuple[int, List[RichFlatRecord], int, List[RichFlatRecord]]:
        """Rich 2-flats at L^(1/2+eps) lines and rich hyperplanes at S^(1/2+eps) 2-flats."""
        flat_threshold = detection_threshold(cfg.L, epsilon)
        hyperplane_threshold = detection_threshold(cfg.S, epsilon)
        logger.info("Detecting rich flats (thresholds %d, %d)", flat_threshold, hyperplane_threshold)
        return (
            flat_threshold,
            detect_rich_flat2(cfg.lines, flat_threshold),
            hyperplane_threshold,
            detect_rich_hyperplane(cfg.planes, hyperplane_threshold),
        )

    def bounds(self, params: BoundParams, constants: ConstantsProfile) -> TotalDominance:
        return self.calculator.eval_total_and_dominance(params, constants)

    # -- composite operations ---------------------------------------------

    def run_experiment(self, spec: ExperimentSpec) -> ExperimentReport:
        self.errors = []
        if spec.config_path is not None:
            cfg, planted = load_config(spec.config_path), []
        else:
            cfg, planted = self.generate(spec.generator, spec.seed)
        incidences = self.count(cfg)

        summary = None
        if spec.partition is not None:
            summary, incidences = self.partition(cfg, spec.partition, incidences)

        epsilon = spec.bound_params.epsilon
        flat_threshold, flats, hyperplane_threshold, hyperplanes = self.degeneracy(cfg, epsilon)

        params = BoundParams(max(cfg.L, 1), cfg.S, spec.bound_params.D, epsilon)
        dominance = self.bounds(params, spec.constants)
        rich_points = count_rich_points(cfg.lines, 2)
        rich_bound = self.calculator.eval_rich_points_bound(max(cfg.L, 1), 2, epsilon, spec.constants.C4)

        # with no 2-flats the main bound is 0 and there is nothing to compare
        vacuous = dominance.ratio is None
        verdicts = [
            self._verdict(dominance.main, incidences.point_incidences, spec.strict, vacuous),
            self._verdict(dominance.total, incidences.point_incidences, spec.strict, vacuous),
            self._verdict(rich_bound, rich_points, spec.strict),
        ]
        for verdict in verdicts:
            if verdict.status == INFORMATIONAL:
                logger.warning("%s bound is out of regime; comparison is informational", verdict.bound)

        return ExperimentReport(
            spec=spec,
            config=cfg,
            digest=config_digest(cfg),
            incidences=incidences,
            rich_flats=flats,
            rich_hyperplanes=hyperplanes,
            flat_threshold=flat_threshold,
            hyperplane_threshold=hyperplane_threshold,
            bounds=dominance,
            rich_points=rich_points,
            rich_points_bound=rich_bound,
            verdicts=verdicts,
            planted=planted,
            partition=summary,
            errors=list(self.errors),
        )

    @staticmethod
    def _verdict(bound: BoundResult, empirical: int, strict: bool, vacuous: bool = False) -> Verdict:
        if vacuous:
            status = VACUOUS
        elif not bound.hypothesis_satisfied and not strict:
            status = INFORMATIONAL
        elif bound.hypothesis_satisfied and empirical <= bound.upper:
            status = PASS
        else:
            status = FAIL
        return Verdict(bound.name, empirical, bound.upper, bound.hypothesis_satisfied, status)

    def run_grid(
        self,
        Ls: Sequence[int],
        Ss: Sequence[int],
        Ds: Sequence[int],
        epsilons: Sequence[Fraction],
        constants: ConstantsProfile = ConstantsProfile(),
    ) -> GridResult:
        """One dominance row per grid point, sorted by (L, S, D, epsilon)."""
        points = sorted(set(product(Ls, Ss, Ds, (to_exact(e) for e in epsilons))))
        rows = []
        for L, S, D, epsilon in self._progress(points, len(points), "grid"):
            params = BoundParams(L, S, D, epsilon)
            in_regime, _ = self.calculator.check_regime(L, S)
            rows.append(GridRow(params, constants, self.bounds(params, constants), in_regime))
        return GridResult(rows)

    def verify(
        self,
        cfg: ConfigurationSet,
        params: Optional[PartitionParams] = None,
        planted: Sequence[PlantedObject] = (),
    ) -> List[Check]:
        """Re-run the consistency checks the exact oracles allow on one configuration."""
        checks: List[Check] = []
        report = self.count(cfg)
        graph = incidence_graph(cfg, report)
        checks.append(Check(
            "graph edges equal point incidences",
            len(graph.edges) == report.point_incidences,
            f"{len(graph.edges)} edges, {report.point_incidences} incidences",
        ))
        if params is not None:
            try:
                summary, attributed = self.partition(cfg, params, report)
            except IncidenceLabError as e:
                checks.append(Check("partition", False, str(e)))
            else:
                D = summary.partition.total_degree
                total = sum(attributed.per_cell.values()) + attributed.zero_set_count
                checks.append(Check("cells and zero set reconcile", total == report.point_incidences,
                                    f"{total} attributed, {report.point_incidences} counted"))
                worst = max((s.distinct_cells for s in summary.line_stats), default=0)
                checks.append(Check("lines enter at most D+1 cells", worst <= D + 1, f"max {worst}, D = {D}"))
                worst = max(summary.flat_cells, default=0)
                checks.append(Check("2-flats show at most D^2+D+1 cells", worst <= D * D + D + 1,
                                    f"max {worst}, D = {D}"))
        for truth in planted:
            threshold = max(2, len(truth.members))
            if isinstance(truth.flat, Flat2):
                found = detect_rich_flat2(cfg.lines, threshold)
            else:
                found = detect_rich_hyperplane(cfg.planes, threshold)
            matched = [r for r in found if r.flat == truth.flat and r.members == truth.members]
            checks.append(Check(
                "planted flat recovered exactly",
                len(found) == 1 and len(matched) == 1,
                f"{len(found)} records at threshold {threshold}",
            ))
        return checks


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    return ExperimentController(show_progress=False).run_experiment(spec)


def run_grid(Ls, Ss, Ds, epsilons, constants: ConstantsProfile = ConstantsProfile()) -> GridResult:
    return ExperimentController(show_progress=False).run_grid(Ls, Ss, Ds, epsilons, constants)
