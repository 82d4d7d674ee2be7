"""Lossless CSV import/export of nodal fields and legacy VTK export."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["write_field_csv", "read_field_csv", "write_vtk", "write_rows_csv"]

HEADER = ["i", "j", "x", "y", "value"]


def _fmt(v) -> str:
    # repr of a Python float is the shortest string that round-trips exactly
    return repr(float(v))


def write_field_csv(path, grid, values, name="value"):
    """One row per node ``i,j,x,y,value`` in row-major ``(i, j)`` order."""
    v = grid.values_of(values)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER[:-1] + [name])
        for i in range(grid.nx):
            xi = _fmt(grid.x[i])
            for j in range(grid.ny):
                w.writerow([i, j, xi, _fmt(grid.y[j]), _fmt(v[i, j])])
    return path


def read_field_csv(path, grid):
    """Read a CSV written by :func:`write_field_csv` back onto ``grid``."""
    out = np.full(grid.shape, np.nan)
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:4]] != HEADER[:4] or len(header) != 5:
            raise ValueError(f"{path}: expected header i,j,x,y,<name>")
        for lineno, row in enumerate(r, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns")
            i, j = int(row[0]), int(row[1])
            if not (0 <= i < grid.nx and 0 <= j < grid.ny):
                raise ValueError(f"{path}:{lineno}: node ({i}, {j}) outside the grid")
            x, y = float(row[2]), float(row[3])
            if abs(x - grid.x[i]) > 1e-9 or abs(y - grid.y[j]) > 1e-9:
                raise ValueError(f"{path}:{lineno}: coordinates do not match the grid")
            out[i, j] = float(row[4])
    if np.isnan(out).any():
        raise ValueError(f"{path}: missing nodes or non-finite values")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{path}: non-finite values")
    return out


def write_rows_csv(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_vtk(path, grid, fields: dict):
    """Legacy ASCII VTK structured-points file with one scalar array per entry."""
    path = Path(path)
    lines = [
        "# vtk DataFile Version 3.0",
        "nodal fields",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid.nx} {grid.ny} 1",
        f"ORIGIN {_fmt(grid.extent[0])} {_fmt(grid.extent[2])} 0",
        f"SPACING {_fmt(grid.h)} {_fmt(grid.h)} 1",
        f"POINT_DATA {grid.nx * grid.ny}",
    ]
    for name, values in fields.items():
        v = grid.values_of(np.asarray(values, dtype=float))
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        # VTK runs x fastest
        lines.extend(_fmt(a) for a in v.T.ravel())
    path.write_text("\n".join(lines) + "\n")
    return path
