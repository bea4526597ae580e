"""
Component listing detected rich 2-flats and hyperplanes.
"""
from typing import List

from rich import box
from rich.table import Table

from ...models.exact_core import format_exact
from ...models.geometry4 import Flat2
from ...models.incidence_counter import RichFlatRecord


def describe_flat(flat) -> str:
    if isinstance(flat, Flat2):
        vectors = (flat.base, flat.u, flat.v)
        return "2-flat " + " + ".join(
            f"{name}({', '.join(format_exact(c) for c in v)})" for name, v in zip(("", "a", "b"), vectors)
        )
    normal = ", ".join(format_exact(c) for c in flat.normal)
    return f"hyperplane ({normal}) . x = {format_exact(flat.offset)}"


def rich_flat_table(title: str, threshold: int, records: List[RichFlatRecord]) -> Table:
    table = Table(title=f"{title} (threshold {threshold})", box=box.ASCII)
    table.add_column("flat")
    table.add_column("multiplicity", justify="right")
    table.add_column("members")
    for record in records:
        table.add_row(describe_flat(record.flat), str(record.multiplicity),
                      " ".join(str(i) for i in record.members))
    return table
