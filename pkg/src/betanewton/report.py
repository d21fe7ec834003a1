"""Benchmark tables over the registered functions.

Two layouts: a five-beta fixed sweep (iterations / convergence / relative
time per beta) and a three-mode comparison (beta 0, beta 1, annealing) that
adds the empirical convergence order.  Relative time normalizes each
function's time-per-converged-point against its own beta = 0 run, so it is
the one column that varies across machines and repetitions; everything else
is deterministic.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .basin import GridSpec, sweep
from .convergence import order_probe
from .core import BetaSchedule, IterationConfig, ScalarProblem, list_problems

TABLE1_BETAS: Tuple[Tuple[str, float], ...] = (
    ("-1", -1.0), ("-0.5", -0.5), ("0", 0.0), ("0.5", 0.5), ("1", 1.0))

TABLE2_MODES: Tuple[Tuple[str, BetaSchedule], ...] = (
    ("0", BetaSchedule.fixed(0.0)),
    ("1", BetaSchedule.fixed(1.0)),
    ("anneal", BetaSchedule.annealing()),
)

# display precision per metric (markdown output)
_FORMATS = {
    "iterations": "{:.1f}",
    "convergence_pct": "{:.0f}",
    "rel_time": "{:.2f}",
    "order": "{:.2f}",
}


@dataclass
class TableRow:
    """One function's metrics, keyed by (metric, beta descriptor)."""

    function_id: str
    columns: Dict[Tuple[str, str], Optional[float]] = field(default_factory=dict)


def _row_from_sweeps(fid: str, per_beta: Dict[str, Tuple], order: Optional[Dict] = None) -> TableRow:
    row = TableRow(fid)
    base_time = per_beta["0"][1].wall_time_per_point
    for desc, (bmap, metrics) in per_beta.items():
        row.columns[("iterations", desc)] = metrics.mean_iterations
        row.columns[("convergence_pct", desc)] = metrics.convergence_pct
        rel = metrics.wall_time_per_point / base_time if base_time else float("nan")
        row.columns[("rel_time", desc)] = rel
    if order is not None:
        for desc, q in order.items():
            row.columns[("order", desc)] = q
    return row


def build_table1(
    grid: GridSpec = GridSpec(),
    cfg: IterationConfig = IterationConfig(),
    jobs: int = 1,
    problems: Optional[Sequence[ScalarProblem]] = None,
) -> List[TableRow]:
    """Fixed-beta sweep table over beta in {-1, -0.5, 0, 0.5, 1}."""
    rows = []
    for p in problems if problems is not None else list_problems():
        per_beta = {}
        for desc, beta in TABLE1_BETAS:
            per_beta[desc] = sweep(p, grid, BetaSchedule.fixed(beta), cfg, jobs)
        rows.append(_row_from_sweeps(p.id, per_beta))
    return rows


def build_table2(
    grid: GridSpec = GridSpec(),
    cfg: IterationConfig = IterationConfig(),
    jobs: int = 1,
    problems: Optional[Sequence[ScalarProblem]] = None,
) -> List[TableRow]:
    """Three-mode table (beta 0, beta 1, annealing) with convergence orders."""
    rows = []
    for p in problems if problems is not None else list_problems():
        per_beta = {}
        order = {}
        for desc, sched in TABLE2_MODES:
            per_beta[desc] = sweep(p, grid, sched, cfg, jobs)
            hit = order_probe(p, sched, cfg, grid.re_coords(), grid.im_coords())
            order[desc] = hit[0].q_final if hit else None
        rows.append(_row_from_sweeps(p.id, per_beta, order))
    return rows


def order_estimate_for(
    p: ScalarProblem,
    sched: BetaSchedule,
    grid: GridSpec = GridSpec(),
    cfg: IterationConfig = IterationConfig(),
):
    """First qualifying order estimate for one function and schedule.

    Returns (OrderEstimate, start_point, IterationOutcome) or None.
    """
    return order_probe(p, sched, cfg, grid.re_coords(), grid.im_coords())


def to_csv(rows: Sequence[TableRow]) -> str:
    """Machine-precision long-format CSV; round-trips through rows_from_csv."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["function", "metric", "beta", "value"])
    for row in rows:
        for (metric, desc), value in row.columns.items():
            w.writerow([row.function_id, metric, desc,
                        "" if value is None else repr(float(value))])
    return buf.getvalue()


def rows_from_csv(text: str) -> List[TableRow]:
    rows: List[TableRow] = []
    by_id: Dict[str, TableRow] = {}
    for rec in csv.DictReader(io.StringIO(text)):
        row = by_id.get(rec["function"])
        if row is None:
            row = TableRow(rec["function"])
            by_id[rec["function"]] = row
            rows.append(row)
        value = None if rec["value"] == "" else float(rec["value"])
        row.columns[(rec["metric"], rec["beta"])] = value
    return rows


def to_json(rows: Sequence[TableRow]) -> str:
    """Full-precision JSON; column keys flattened to 'metric:beta'."""
    out = []
    for row in rows:
        cols = {f"{metric}:{desc}": value
                for (metric, desc), value in row.columns.items()}
        out.append({"function": row.function_id, "columns": cols})
    return json.dumps(out, indent=2)


def to_markdown(rows: Sequence[TableRow]) -> str:
    """Aligned table with per-metric display rounding."""
    if not rows:
        return ""
    keys = list(rows[0].columns.keys())
    headers = ["function"] + [f"{m} b={d}" for m, d in keys]
    body = []
    for row in rows:
        cells = [row.function_id]
        for key in keys:
            value = row.columns.get(key)
            if value is None or value != value:
                cells.append("-")
            else:
                cells.append(_FORMATS.get(key[0], "{:.3g}").format(value))
        body.append(cells)
    widths = [max(len(h), *(len(b[i]) for b in body)) for i, h in enumerate(headers)]
    lines = ["| " + " | ".join(h.ljust(w) for h, w in zip(headers, widths)) + " |",
             "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    for cells in body:
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |")
    return "\n".join(lines) + "\n"
