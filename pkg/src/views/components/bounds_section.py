"""
Component rendering bound values, hypothesis verdicts and grid rows.
"""
from typing import List

import mpmath
from rich import box
from rich.table import Table

from ...models.bounds_calculator import BoundResult, TotalDominance
from ...models.exact_core import format_exact

DIGITS = 15
UNDEFINED = "undefined"


def ratio_text(value) -> str:
    return UNDEFINED if value is None else mpmath.nstr(value, DIGITS)


def bound_table(dominance: TotalDominance, extra: List[BoundResult] = ()) -> Table:
    table = Table(title="Bounds", box=box.ASCII)
    table.add_column("bound")
    table.add_column("value", justify="right")
    table.add_column("hypothesis")
    table.add_column("detail")
    results = [dominance.main, *dominance.summands.values(), dominance.total, *extra]
    for result in results:
        table.add_row(
            result.name,
            result.text(DIGITS),
            "yes" if result.hypothesis_satisfied else "no",
            result.hypothesis_detail,
        )
    table.caption = (
        f"total / main = {ratio_text(dominance.ratio)}; "
        f"max summand / main = {ratio_text(dominance.max_summand_ratio)}; "
        f"dominated: {'yes' if dominance.dominated else 'no'}"
    )
    if dominance.detail:
        table.caption += f"\n{dominance.detail}"
    return table


def grid_header(dominance: TotalDominance) -> List[str]:
    names = list(dominance.summands)
    return (
        ["L", "S", "D", "epsilon", "C1", "C2", "C3", "C4", "main"]
        + names
        + ["total", "ratio", "in_regime"]
        + [f"{name} hypothesis" for name in ["main", *names]]
    )


def grid_row(row) -> List[str]:
    p, c, d = row.params, row.constants, row.dominance
    summands = list(d.summands.values())
    return (
        [str(p.L), str(p.S), str(p.D), format_exact(p.epsilon)]
        + [format_exact(getattr(c, k)) for k in ("C1", "C2", "C3", "C4")]
        + [d.main.text(DIGITS)]
        + [s.text(DIGITS) for s in summands]
        + [d.total.text(DIGITS), ratio_text(d.ratio), str(row.in_regime).lower()]
        + [str(r.hypothesis_satisfied).lower() for r in [d.main, *summands]]
    )
