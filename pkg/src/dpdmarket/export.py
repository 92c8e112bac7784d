"""CSV export of clearing results and scenario reports.

All floats are written with 12 significant digits so repeated runs produce
identical files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import fields
from pathlib import Path

import numpy as np

from .clearing import ClearingSolution, DpdSolution, settle
from .scenario import ScenarioReport

BUS_COLUMNS = ["bus_id", "name", "lat", "lon", "black_lmp", "green_lmp"]
LINE_COLUMNS = ["line", "name", "from_bus", "to_bus", "flow_mw", "flow_min", "flow_max", "congested"]
PARTICIPANT_COLUMNS = ["kind", "id", "bus", "energy_class", "quantity_mwh", "green_mwh", "black_mwh", "settlement"]
REPORT_COLUMNS = [f.name for f in fields(ScenarioReport) if f.name != "alphas"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{float(value):.12g}"
    return str(value)


def _write(path: Path, header: list[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_bus_csv(sol: ClearingSolution, path) -> Path:
    green = sol.green_lmp if isinstance(sol, DpdSolution) else {}
    rows = []
    for b in sol.network.buses:
        lat, lon = b.coordinates if b.coordinates else (None, None)
        rows.append([b.id, b.name, lat, lon, sol.black_lmp[b.id], green.get(b.id)])
    return _write(Path(path), BUS_COLUMNS, rows)


def write_line_csv(sol: ClearingSolution, path) -> Path:
    congested = set(sol.congested_lines)
    rows = [[k, l.label, l.from_bus, l.to_bus, sol.flows[k],
             None if math.isinf(l.flow_min) else l.flow_min,
             None if math.isinf(l.flow_max) else l.flow_max,
             k in congested]
            for k, l in enumerate(sol.network.lines)]
    return _write(Path(path), LINE_COLUMNS, rows)


def write_participant_csv(sol: ClearingSolution, path) -> Path:
    money = settle(sol)
    dpd = isinstance(sol, DpdSolution)
    rows = []
    for g in sol.orderbook.generators:
        q = sol.output(g.id)
        rows.append(["generator", g.id, g.bus, g.energy_class, q,
                     q if g.is_green else 0.0, 0.0 if g.is_green else q, money.generator_revenues[g.id]])
    for ld in sol.orderbook.loads:
        q = sol.served(ld.id)
        rows.append(["load", ld.id, ld.bus, "", q,
                     sol.green_allocation[ld.id] if dpd else None,
                     sol.black_allocation[ld.id] if dpd else None,
                     money.load_payments[ld.id]])
    return _write(Path(path), PARTICIPANT_COLUMNS, rows)


def write_lmp_histogram(sol: ClearingSolution, path, bins: int = 20) -> Path:
    """Bus counts per LMP bin; black and green share one set of edges."""
    black = np.array(list(sol.black_lmp.values()), dtype=float)
    green = np.array(list(sol.green_lmp.values()), dtype=float) if isinstance(sol, DpdSolution) else np.array([])
    both = np.concatenate([black, green])
    lo, hi = (float(both.min()), float(both.max())) if both.size else (0.0, 1.0)
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    bc, _ = np.histogram(black, edges)
    gc, _ = np.histogram(green, edges)
    rows = [[edges[i], edges[i + 1], int(bc[i]), int(gc[i])] for i in range(bins)]
    return _write(Path(path), ["bin_left", "bin_right", "black_count", "green_count"], rows)


def write_report_csv(reports: list[ScenarioReport], path) -> Path:
    rows = [[getattr(r, c) for c in REPORT_COLUMNS] for r in reports]
    return _write(Path(path), REPORT_COLUMNS, rows)


def write_report_tables(reports: list[ScenarioReport], out_dir) -> list[Path]:
    """Three small tables: extra dispatch, lambda_green and average emissions per RES share."""
    out = Path(out_dir)
    pct = [round(100 * r.res_share, 6) for r in reports]
    return [
        _write(out / "table_additional_dispatch.csv", ["res_percent", "green_mwh", "black_mwh"],
               [[p, r.delta_green, r.delta_black] for p, r in zip(pct, reports)]),
        _write(out / "table_lambda_green.csv", ["res_percent", "lambda_green"],
               [[p, r.lambda_green] for p, r in zip(pct, reports)]),
        _write(out / "table_emissions.csv", ["res_percent", "without_dpd", "with_dpd"],
               [[p, r.avg_emissions_before, r.avg_emissions_after] for p, r in zip(pct, reports)]),
    ]


def export_results(result, out_dir) -> list[Path]:
    """Write every CSV that applies to ``result`` (a solution or a list of reports)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    if isinstance(result, ClearingSolution):
        return [
            write_bus_csv(result, out / "buses.csv"),
            write_line_csv(result, out / "lines.csv"),
            write_participant_csv(result, out / "participants.csv"),
            write_lmp_histogram(result, out / "lmp_histogram.csv"),
        ]
    reports = [result] if isinstance(result, ScenarioReport) else list(result)
    return [write_report_csv(reports, out / "report.csv"), *write_report_tables(reports, out)]
