"""Delimited output: solver traces, scheme comparisons, accuracy tables.

All floats print with 17 significant digits so files round-trip float64
exactly; repeated runs of the same config produce identical files except
for the wall_seconds column.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .optim import TraceRecord

__all__ = [
    "TRACE_COLUMNS",
    "write_trace",
    "read_trace",
    "final_gaps",
    "iterations_to_gap",
    "decade_rows",
    "write_rows",
    "read_rows",
]

TRACE_COLUMNS = (
    "iter",
    "wall_seconds",
    "energy",
    "energy_gap",
    "grad_norm",
    "alpha",
    "restarted",
)

SUMMARY_COLUMNS = ("run", "alpha", "gap", "iterations", "wall_seconds", "restarts")

ACCURACY_COLUMNS = ("dims", "coeff_error", "energy_error", "energy", "iterations")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace(path: str | Path, records: list[TraceRecord], meta: dict | None = None) -> None:
    """Write one trace CSV; energy_gap is against the best energy so far.

    The iteration-0 row records the initial state (alpha 0).  Meta entries
    become `# key = value` comment lines after the format line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(
            "# pfc trace v1; energy_gap = energy minus best energy attained so far\n"
        )
        for key, value in (meta or {}).items():
            f.write(f"# {key} = {value}\n")
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.iter,
                    _fmt(r.wall_seconds),
                    _fmt(r.energy),
                    _fmt(r.energy_gap),
                    _fmt(r.grad_norm),
                    _fmt(r.alpha),
                    int(r.restarted),
                ]
            )


def read_trace(path: str | Path) -> list[TraceRecord]:
    """Parse a trace CSV back into records (inverse of write_trace)."""
    records: list[TraceRecord] = []
    with open(path, newline="") as f:
        rows = csv.reader(line for line in f if not line.startswith("#"))
        header = next(rows, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path} does not look like a pfc trace file")
        for row in rows:
            if not row:
                continue
            records.append(
                TraceRecord(
                    iter=int(row[0]),
                    wall_seconds=float(row[1]),
                    energy=float(row[2]),
                    energy_gap=float(row[3]),
                    grad_norm=float(row[4]),
                    alpha=float(row[5]),
                    restarted=bool(int(row[6])),
                )
            )
    return records


def final_gaps(records: list[TraceRecord]) -> np.ndarray:
    """Post-hoc energy gaps against the run's final best energy."""
    energies = np.array([r.energy for r in records])
    return energies - energies.min()


def iterations_to_gap(records: list[TraceRecord], threshold: float) -> int | None:
    """First iteration whose post-hoc gap is at or below threshold."""
    gaps = final_gaps(records)
    hits = np.nonzero(gaps <= threshold)[0]
    if hits.size == 0:
        return None
    return records[int(hits[0])].iter


def decade_rows(
    run: str,
    alpha: float | None,
    records: list[TraceRecord],
    decades: tuple[float, ...] = tuple(10.0**-p for p in range(1, 14)),
) -> list[tuple]:
    """Per-decade summary rows (run, alpha, gap, iterations, wall, restarts).

    One row per decade target the run reached, plus a trailing `final` row
    with the totals.
    """
    gaps = final_gaps(records)
    restarts = np.cumsum([r.restarted for r in records])
    rows: list[tuple] = []
    alpha_txt = "" if alpha is None else _fmt(alpha)
    for target in decades:
        hits = np.nonzero(gaps <= target)[0]
        if hits.size == 0:
            continue
        i = int(hits[0])
        rows.append(
            (
                run,
                alpha_txt,
                _fmt(target),
                records[i].iter,
                _fmt(records[i].wall_seconds),
                int(restarts[i]),
            )
        )
    last = records[-1]
    rows.append(
        (
            run,
            alpha_txt,
            "final",
            last.iter,
            _fmt(last.wall_seconds),
            int(restarts[-1]) if records else 0,
        )
    )
    return rows


def write_rows(path: str | Path, columns: tuple[str, ...], rows: list[tuple]) -> None:
    """Write a plain CSV with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        writer.writerows(rows)


def read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV written by write_rows; returns (header, rows) as strings."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]
