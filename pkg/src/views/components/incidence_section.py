"""
Component rendering incidence counts and their per-cell split.
"""
from typing import List

from rich import box
from rich.table import Table

from ...models.exact_core import format_exact
from ...models.incidence_counter import IncidenceReport

CSV_HEADER = ["line_idx", "plane_idx", "x1", "x2", "x3", "x4", "cell"]


def incidence_summary(report: IncidenceReport) -> Table:
    table = Table(title="Incidences", box=box.ASCII, show_header=False)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("point incidences", str(report.point_incidences))
    table.add_row("containments", str(report.containments))
    if report.partitioned:
        table.add_row("open cells occupied", str(len(report.per_cell)))
        table.add_row("zero set", str(report.zero_set_count))
        table.add_row("zero set, line not inside Z(P)", str(report.zero_set_uncontained))
        table.add_row("zero set, line inside Z(P)", str(report.zero_set_contained))
    return table


def cell_table(report: IncidenceReport) -> Table:
    table = Table(title="Incidences per cell", box=box.ASCII)
    table.add_column("cell")
    table.add_column("incidences", justify="right")
    for cell, count in report.per_cell.items():
        table.add_row(cell.label, str(count))
    return table


def incidence_rows(report: IncidenceReport) -> List[List[str]]:
    """CSV rows: indices, exact coordinates, cell signature or ZERO_SET."""
    return [
        [str(i), str(j), *(format_exact(c) for c in location), cell]
        for i, j, location, cell in report.rows()
    ]
