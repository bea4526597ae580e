"""
Main entry point for the Incidence Lab command line.
"""
import argparse
import logging
import os
import sys
import traceback
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.logging import RichHandler

from .controllers.experiment_controller import (
    OUTPUT_DIR_ENV,
    ExperimentController,
    ExperimentSpec,
    load_experiment_spec,
)
from .models.bounds_calculator import BoundParams, ConstantsProfile
from .models.configurations import GeneratorKind, GeneratorSpec, dumps_config, load_config
from .models.errors import BezoutBoundViolation, ConfigParseError, IncidenceLabError, InvariantViolationError
from .models.exact_core import to_exact
from .models.partition_engine import PartitionParams
from .views.report_view import ReportView

logger = logging.getLogger(__name__)

COMMANDS = ("gen", "count", "partition", "degeneracy", "bounds", "grid", "verify")


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True, show_path=verbose)],
        force=True,
    )


def _rational_list(text: str) -> List[Fraction]:
    return [to_exact(item.strip()) for item in text.split(",") if item.strip()]


def _int_list(text: str) -> List[int]:
    return [int(item) for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src",
        description="Exact line / 2-flat incidence experiments in R^4.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--spec", type=Path, help="Experiment spec JSON file")
    parser.add_argument("--config", type=Path, help="Load this configuration instead of generating one")
    parser.add_argument("--kind", default="generic", choices=[k.value for k in GeneratorKind])
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--L", type=str, default="50", help="Line count (comma list for grid)")
    parser.add_argument("--S", type=str, default="30", help="2-flat count (comma list for grid)")
    parser.add_argument("--planted-lines", type=int, default=0)
    parser.add_argument("--planted-planes", type=int, default=0)
    parser.add_argument("--range", type=int, default=10 ** 6, dest="coordinate_range")
    parser.add_argument("--D", type=str, default="2", help="Degree (comma list for grid)")
    parser.add_argument("--epsilon", type=str, default="1/2", help="Rational epsilon (comma list for grid)")
    parser.add_argument("--J", type=int, default=None, help="Partition rounds; omit to skip partitioning")
    parser.add_argument("--delta", type=str, default="1/10", help="Partition balance slack")
    parser.add_argument("--C1", type=str, default="1")
    parser.add_argument("--C2", type=str, default="1")
    parser.add_argument("--C4", type=str, default="1")
    parser.add_argument("--out", type=Path, default=None, help=f"Output file (default: ${OUTPUT_DIR_ENV} or stdout)")
    parser.add_argument("--format", choices=("text", "csv"), default="text")
    parser.add_argument("--strict", action="store_true", help="Treat out-of-regime comparisons as failures")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--quiet", action="store_true", help="Hide progress bars")
    return parser


def output_path(args: argparse.Namespace) -> Optional[Path]:
    if args.out is not None:
        return args.out
    directory = os.environ.get(OUTPUT_DIR_ENV)
    if directory:
        extension = "json" if args.command == "gen" else args.format.replace("text", "txt")
        return Path(directory) / f"{args.command}.{extension}"
    return None


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    if args.spec is not None:
        spec = load_experiment_spec(args.spec)
        return ExperimentSpec(
            spec.generator, spec.bound_params, spec.constants, spec.seed, spec.partition,
            spec.config_path, output_path(args), args.format, spec.strict or args.strict,
        )
    L, S = int(args.L), int(args.S)
    generator = GeneratorSpec(
        GeneratorKind(args.kind), L, S, args.planted_lines, args.planted_planes, args.coordinate_range
    )
    partition = None if args.J is None else PartitionParams(args.J, to_exact(args.delta))
    return ExperimentSpec(
        generator,
        BoundParams(max(L, 1), S, int(args.D), to_exact(args.epsilon)),
        ConstantsProfile(to_exact(args.C1), to_exact(args.C2), to_exact(args.C4)),
        args.seed,
        partition,
        args.config,
        output_path(args),
        args.format,
        args.strict,
    )


def run(args: argparse.Namespace) -> int:
    controller = ExperimentController(show_progress=not args.quiet and sys.stderr.isatty())
    view = ReportView()
    destination = output_path(args)

    if args.command == "bounds":
        params = BoundParams(int(args.L), int(args.S), int(args.D), to_exact(args.epsilon))
        constants = ConstantsProfile(to_exact(args.C1), to_exact(args.C2), to_exact(args.C4))
        grid = controller.run_grid([params.L], [params.S], [params.D], [params.epsilon], constants)
        view.write(view.render_grid(grid, args.format), destination)
        return 0
    if args.command == "grid":
        constants = ConstantsProfile(to_exact(args.C1), to_exact(args.C2), to_exact(args.C4))
        grid = controller.run_grid(
            _int_list(args.L), _int_list(args.S), _int_list(args.D), _rational_list(args.epsilon), constants
        )
        logger.info(grid.summary)
        view.write(view.render_grid(grid, args.format), destination)
        return 0

    spec = spec_from_args(args)
    if args.command == "count":
        report = controller.run_experiment(spec)
        view.write(view.render_experiment(report, spec.format), destination)
        if report.failed:
            logger.error("At least one verdict failed")
        return report.exit_code()

    if spec.config_path is not None:
        cfg, planted = load_config(spec.config_path), []
    else:
        cfg, planted = controller.generate(spec.generator, spec.seed)
    if args.command == "gen":
        view.write(dumps_config(cfg), destination)
        return 0
    if args.command == "partition":
        params = spec.partition or PartitionParams(4, to_exact(args.delta))
        summary, _ = controller.partition(cfg, params, controller.count(cfg))
        view.write(view.render_partition(summary), destination)
        return 0
    if args.command == "degeneracy":
        flat_threshold, flats, hyperplane_threshold, hyperplanes = controller.degeneracy(cfg, spec.bound_params.epsilon)
        view.write(view.render_degeneracy(flat_threshold, flats, hyperplane_threshold, hyperplanes), destination)
        return 0
    # verify
    checks = controller.verify(cfg, spec.partition, planted)
    view.write(view.render_checks(checks), destination)
    return 0 if all(c.passed for c in checks) else 3


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return run(args)
    except (InvariantViolationError, ConfigParseError, BezoutBoundViolation) as e:
        logger.error(f"Error: {e}")
        return 2
    except IncidenceLabError as e:
        logger.error(f"Error: {e}")
        return 1
    except Exception as e:
        logger.error(f"Error in main: {str(e)}")
        logger.error(traceback.format_exc())
        return 1


if __name__ == "__main__":
    sys.exit(main())
