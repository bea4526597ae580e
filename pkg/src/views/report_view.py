"""
Plain-text and CSV rendering of experiment reports.

Output depends only on the report, never on the terminal: rich renders into a
fixed-width, colourless console.
"""
import csv
import io
import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import mpmath
from rich import box
from rich.console import Console
from rich.table import Table

from ..controllers.experiment_controller import Check, ExperimentReport, GridResult, PartitionSummary
from ..models.partition_engine import dumps_partition
from .components.bounds_section import DIGITS, bound_table, grid_header, grid_row
from .components.degeneracy_section import rich_flat_table
from .components.incidence_section import CSV_HEADER, cell_table, incidence_rows, incidence_summary


class ReportView:
    """Turns controller results into report text."""

    WIDTH = 120

    def _console(self) -> Console:
        return Console(
            file=io.StringIO(),
            width=self.WIDTH,
            color_system=None,
            force_terminal=False,
            highlight=False,
            emoji=False,
        )

    def _render(self, renderables: Iterable) -> str:
        console = self._console()
        for renderable in renderables:
            console.print(renderable)
            console.print()
        return console.file.getvalue()

    @staticmethod
    def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buffer.getvalue()

    def partition_table(self, summary: PartitionSummary) -> Table:
        part = summary.partition
        table = Table(title="Partition", box=box.ASCII, show_header=False)
        table.add_column("quantity")
        table.add_column("value", justify="right")
        table.add_row("points partitioned", str(summary.point_count))
        table.add_row("rounds J", str(part.J))
        table.add_row("achieved degree D", str(part.total_degree))
        table.add_row("theorem degree 2^(J/4)", f"{part.theorem_degree:.6f}")
        table.add_row("max cells entered by a line", str(max((s.distinct_cells for s in summary.line_stats), default=0)))
        table.add_row("max cells seen on a 2-flat", str(max(summary.flat_cells, default=0)))
        return table

    def verdict_table(self, report: ExperimentReport) -> Table:
        table = Table(title="Verdicts", box=box.ASCII)
        for name in ("bound", "empirical", "bound (upper)", "hypothesis", "status"):
            table.add_column(name)
        for v in report.verdicts:
            table.add_row(v.bound, str(v.empirical), mpmath.nstr(v.bound_upper, DIGITS),
                          "yes" if v.hypothesis_satisfied else "no", v.status)
        return table

    def render_experiment(self, report: ExperimentReport, fmt: str = "text") -> str:
        if fmt == "csv":
            return self._csv(CSV_HEADER, incidence_rows(report.incidences))
        header = "\n".join([
            "Incidence Lab experiment report",
            f"configuration digest (sha256): {report.digest}",
            f"lines L = {report.config.L}, 2-flats S = {report.config.S}",
            "spec:",
            json.dumps(report.spec.to_dict(), sort_keys=True, indent=2),
            "",
        ])
        sections: List = [incidence_summary(report.incidences)]
        if report.incidences.partitioned:
            sections.append(cell_table(report.incidences))
        if report.partition is not None:
            sections.append(self.partition_table(report.partition))
        sections += [
            rich_flat_table("Rich 2-flats", report.flat_threshold, report.rich_flats),
            rich_flat_table("Rich hyperplanes", report.hyperplane_threshold, report.rich_hyperplanes),
            f"2-rich points: {report.rich_points}",
            bound_table(report.bounds, [report.rich_points_bound]),
            self.verdict_table(report),
        ]
        if report.errors:
            sections.append("Warnings:\n" + "\n".join(f"  {e}" for e in report.errors))
        return header + "\n" + self._render(sections)

    def render_grid(self, grid: GridResult, fmt: str = "csv") -> str:
        if not grid.rows:
            return grid.summary + "\n"
        header = grid_header(grid.rows[0].dominance)
        rows = [grid_row(row) for row in grid.rows]
        if fmt == "csv":
            return self._csv(header, rows)
        table = Table(title="Bound grid", box=box.ASCII)
        for name in header[:9] + ["total", "ratio", "in_regime"]:
            table.add_column(name)
        for row in rows:
            table.add_row(*row[:9], *self._tail(row, header))
        return self._render([table, grid.summary])

    @staticmethod
    def _tail(row: List[str], header: List[str]) -> List[str]:
        index = header.index("total")
        return row[index:index + 3]

    def render_checks(self, checks: Sequence[Check]) -> str:
        table = Table(title="Verification", box=box.ASCII)
        table.add_column("check")
        table.add_column("result")
        table.add_column("detail")
        for check in checks:
            table.add_row(check.name, "ok" if check.passed else "FAILED", check.detail)
        return self._render([table])

    def render_degeneracy(self, flat_threshold: int, flats, hyperplane_threshold: int, hyperplanes) -> str:
        return self._render([
            rich_flat_table("Rich 2-flats", flat_threshold, flats),
            rich_flat_table("Rich hyperplanes", hyperplane_threshold, hyperplanes),
        ])

    def render_partition(self, summary: PartitionSummary) -> str:
        return self._render([self.partition_table(summary)]) + dumps_partition(summary.partition)

    @staticmethod
    def write(text: str, destination: Optional[Path]) -> None:
        """Write to a file, or to stdout when no destination is given."""
        if destination is None:
            print(text, end="")
            return
        destination = Path(destination)
        destination.parent.mkdir(parents=True, exist_ok=True)
        destination.write_text(text, encoding="utf-8")
