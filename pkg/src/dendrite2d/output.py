"""Result serialization: legacy ASCII VTK, diagnostics CSV, grayscale PGM.

All writers are byte-stable for identical inputs; floats carry 17 significant
digits so CSV round-trips are exact.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .diagnostics import DiagRecord
from .fem import Field
from .stepper import Model, State, full_potential

_FMT = "{:.17g}"

CSV_COLUMNS = [f.name for f in dataclasses.fields(DiagRecord)]
_INT_COLUMNS = {"k", "iters_phase", "iters_poisson", "iters_conc"}


def _fnum(v: float) -> str:
    return _FMT.format(float(v))


def write_vtk(state: State, path: str | Path, model: Model) -> None:
    """Legacy ASCII VTK unstructured grid with point scalars u, c, phi.

    phi is the full potential (lifted value plus the applied bias profile).
    """
    mesh = state.u.mesh
    phi = full_potential(state.phi_bar, model)
    lines = [
        "# vtk DataFile Version 3.0",
        f"dendrite2d t={_fnum(state.t)}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    for x, y in mesh.nodes:
        lines.append(f"{_fnum(x)} {_fnum(y)} 0")
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    for a, b, c in mesh.triangles:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines.extend(["5"] * mesh.n_triangles)
    lines.append(f"POINT_DATA {mesh.n_nodes}")
    for name, values in (("u", state.u.values), ("c", state.c.values), ("phi", phi.values)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(_fnum(v) for v in values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_csv(records: list[DiagRecord], path: str | Path) -> None:
    """Diagnostics time series, one row per record, fixed column order."""
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        cells = []
        for name in CSV_COLUMNS:
            v = getattr(r, name)
            cells.append(str(v) if name in _INT_COLUMNS else _fnum(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_csv(path: str | Path) -> list[DiagRecord]:
    """Exact inverse of write_csv."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    header = lines[0].split(",")
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header in {path}")
    records = []
    for line in lines[1:]:
        cells = line.split(",")
        kwargs = {
            name: (int(cell) if name in _INT_COLUMNS else float(cell))
            for name, cell in zip(CSV_COLUMNS, cells)
        }
        records.append(DiagRecord(**kwargs))
    return records


def write_pgm(field: Field, path: str | Path, lo: float, hi: float) -> None:
    """ASCII PGM raster of the nodal grid, mapping [lo, hi] linearly to 0..255."""
    mesh = field.mesh
    if hi <= lo:
        raise ValueError(f"need hi > lo, got ({lo}, {hi})")
    grid = field.values.reshape(mesh.ny + 1, mesh.nx + 1)
    scaled = np.clip((grid - lo) / (hi - lo) * 255.0, 0.0, 255.0)
    pixels = np.rint(scaled).astype(int)
    lines = ["P2", f"{mesh.nx + 1} {mesh.ny + 1}", "255"]
    for row in pixels[::-1]:  # top row of the image is y = L2
        lines.append(" ".join(str(p) for p in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
