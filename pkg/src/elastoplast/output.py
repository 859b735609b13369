"""File output: legacy VTK meshes, CSV step records and run summaries."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .mesh import Mesh
from .reference_elements import Family

# VTK cell type per (family, dim)
VTK_CELL_TYPES = {
    (Family.P1, 2): 5, (Family.Q1, 2): 9, (Family.P2, 2): 22, (Family.Q2, 2): 23,
    (Family.P1, 3): 10, (Family.Q1, 3): 12, (Family.P2, 3): 24, (Family.Q2, 3): 25,
}
# local node permutations into VTK order where they differ
_VTK_ORDER = {(Family.P2, 3): [0, 1, 2, 3, 4, 5, 6, 9, 7, 8]}

CSV_COLUMNS = ["k", "load", "newton_iters", "n_plastic", "tangent_seconds", "derived_scalar"]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _field_block(name: str, values: np.ndarray, n: int, kind: str) -> list[str]:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    if values.shape[1] != n:
        raise ValueError(f"{kind} field {name!r} has {values.shape[1]} entries, expected {n}")
    ncomp = values.shape[0]
    if ncomp == 2:  # vectors are always 3D in VTK
        values = np.vstack([values, np.zeros((1, n))])
        ncomp = 3
    lines = [f"VECTORS {name} double" if ncomp == 3 else f"SCALARS {name} double {ncomp}"]
    if ncomp != 3:
        lines.append("LOOKUP_TABLE default")
    lines += [" ".join(_fmt(v) for v in col) for col in values.T]
    return lines


def write_vtk(mesh: Mesh, path, point_fields: dict | None = None,
              cell_fields: dict | None = None, displacement=None) -> Path:
    """Write an ASCII legacy VTK unstructured grid.

    Point fields have shape (n_n,) or (ncomp, n_n), cell fields (n_e,) or
    (ncomp, n_e). If ``displacement`` (dim, n_n) is given the nodes are
    written at their deformed positions.
    """
    path = Path(path)
    point_fields = point_fields or {}
    cell_fields = cell_fields or {}
    coord = mesh.coord
    if displacement is not None:
        coord = coord + np.asarray(displacement).reshape(coord.shape, order="F")
    pts = np.vstack([coord, np.zeros((3 - mesh.dim, mesh.n_n))])
    et = mesh.elem_type
    order = _VTK_ORDER.get((et.family, et.dim), list(range(et.n_p)))
    elem = mesh.elem[order]

    lines = ["# vtk DataFile Version 3.0", "elastoplast output", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_n} double"]
    lines += [" ".join(_fmt(v) for v in p) for p in pts.T]
    lines.append(f"CELLS {mesh.n_e} {mesh.n_e * (et.n_p + 1)}")
    lines += [f"{et.n_p} " + " ".join(map(str, c)) for c in elem.T]
    lines.append(f"CELL_TYPES {mesh.n_e}")
    lines += [str(VTK_CELL_TYPES[(et.family, et.dim)])] * mesh.n_e
    body = []
    if point_fields:
        body.append(f"POINT_DATA {mesh.n_n}")
        for name, v in point_fields.items():
            body += _field_block(name, v, mesh.n_n, "point")
    if cell_fields:
        body.append(f"CELL_DATA {mesh.n_e}")
        for name, v in cell_fields.items():
            body += _field_block(name, v, mesh.n_e, "cell")
    path.write_text("\n".join(lines + body) + "\n")
    return path


def write_csv_records(records, path) -> Path:
    """One header line plus one row per step record."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return path


def read_csv_records(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def write_summary(summary: dict, path) -> Path:
    """Flat ``key=value`` text file."""
    path = Path(path)
    path.write_text("".join(f"{k}={_fmt(v) if isinstance(v, (float, np.floating)) else v}\n"
                            for k, v in summary.items()))
    return path


def read_summary(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


@dataclass
class RunConfig:
    """Benchmark selection and solver overrides of one CLI run."""

    command: str
    dim: int = 2
    elem: str = "P1"
    level: int = 1
    output: str = "results"
    eps_newton: float = 1e-10
    max_iters: int = 25
    n_steps: int = 40
    du0: float = 1e-3
    u_max: float = 1.0
    theta: float = 1e-3
    linear_solver: str = "direct"
    deformed: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)
