"""Structured meshes for the benchmark geometries.

Every mesh is cut out of a regular lattice with half the cell spacing, so
that P2/Q2 nodes (edge, face and cell midpoints) are lattice points as well.
Nodes are numbered lexicographically by (x3, x2, x1) and unused lattice
points are dropped. Node indices are 0-based; degree of freedom ``i`` of node
``n`` is ``dim * n + i`` (column-major flattening of a ``(dim, n_n)`` array).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError
from .reference_elements import ElementType, Family, face_nodes

# cells per unit length at level 0 (elastic body) and cells per side of the
# 10x10 footing domain at level 0
ELASTIC_BODY_CELLS_PER_UNIT = 1
FOOTING_CELLS_LEVEL0 = {Family.P1: 20, Family.Q1: 20, Family.P2: 10, Family.Q2: 10}
FOOTING_REFERENCE_LEVEL = 4  # 320x320 (P1, Q1) and 160x160 (P2, Q2)

_TOL = 1e-9


@dataclass
class Mesh:
    """Finite element mesh with Dirichlet and Neumann data.

    Attributes
    ----------
    elem_type : ElementType
    coord : ndarray, shape (dim, n_n)
    elem : ndarray, shape (n_p, n_e)
        Node indices of every element (0-based).
    Q : ndarray of bool, shape (dim, n_n)
        True where the displacement component is unknown.
    dirichlet_values : ndarray, shape (dim, n_n)
        Prescribed displacements; zero wherever ``Q`` is True.
    neumann_faces : ndarray of int, shape (n_f, 2)
        Pairs (element id, local face id) carrying traction.
    node_sets : dict
        Named node index arrays (e.g. ``"footing"``).
    """

    elem_type: ElementType
    coord: np.ndarray
    elem: np.ndarray
    Q: np.ndarray
    dirichlet_values: np.ndarray
    neumann_faces: np.ndarray
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.coord.shape[0]

    @property
    def n_n(self) -> int:
        return self.coord.shape[1]

    @property
    def n_e(self) -> int:
        return self.elem.shape[1]

    @property
    def n_dof(self) -> int:
        return self.dim * self.n_n

    @property
    def n_unknowns(self) -> int:
        return int(self.Q.sum())

    def with_dirichlet(self, Q, values) -> Mesh:
        """Copy of the mesh with another set of Dirichlet conditions."""
        Q = np.asarray(Q, dtype=bool)
        values = np.where(Q, 0.0, np.asarray(values, dtype=float))
        return Mesh(self.elem_type, self.coord, self.elem, Q, values,
                    self.neumann_faces, dict(self.node_sets))


# ---------------------------------------------------------------------------
# lattice construction
# ---------------------------------------------------------------------------

def _cell_templates(elem_type: ElementType) -> list[np.ndarray]:
    """Element node positions inside one cell, in half-cell lattice units.

    Returns one ``(dim, n_p)`` integer array per element in the cell.
    """
    ref = elem_type.nodes  # (dim, n_p)
    dim = elem_type.dim
    if not elem_type.simplex:
        return [np.rint(ref + 1).astype(np.int64)]
    if dim == 2:
        simplices = [[(0, 0), (1, 0), (1, 1)], [(0, 0), (1, 1), (0, 1)]]
    else:
        simplices = []
        for perm in itertools.permutations(range(3)):
            e = np.eye(3, dtype=int)
            v1, v2 = e[perm[0]], e[perm[0]] + e[perm[1]]
            verts = [np.zeros(3, int), v1, v2, np.ones(3, int)]
            if np.linalg.det(np.array([verts[1], verts[2], verts[3]], float)) < 0:
                verts[1], verts[2] = verts[2], verts[1]
            simplices.append(verts)
    out = []
    for verts in simplices:
        v = 2 * np.array(verts, dtype=float).T  # (dim, dim+1)
        pos = v[:, :1] + (v[:, 1:] - v[:, :1]) @ ref
        out.append(np.rint(pos).astype(np.int64))
    return out


def structured_mesh(elem_type: ElementType, n_cells, lengths, active=None,
                    origin=None) -> Mesh:
    """Mesh of a box split into ``n_cells`` cells, optionally masked.

    Parameters
    ----------
    elem_type : ElementType
    n_cells : sequence of int
        Cell counts per axis.
    lengths : sequence of float
        Box side lengths.
    active : callable, optional
        ``active(centers)`` with centers of shape (dim, n_cells_total)
        returns a boolean mask of cells to keep.
    origin : sequence of float, optional

    The returned mesh has no Dirichlet or Neumann data.
    """
    dim = elem_type.dim
    n_cells = np.asarray(n_cells, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=float)
    origin = np.zeros(dim) if origin is None else np.asarray(origin, dtype=float)
    if n_cells.shape != (dim,) or lengths.shape != (dim,):
        raise ConfigurationError("n_cells and lengths must have one entry per axis")
    h = lengths / n_cells

    # cell corners, first axis fastest
    grids = np.meshgrid(*[np.arange(n) for n in n_cells[::-1]], indexing="ij")
    corners = np.vstack([g.ravel() for g in grids[::-1]])  # (dim, n_cells)
    if active is not None:
        centers = origin[:, None] + (corners + 0.5) * h[:, None]
        corners = corners[:, np.asarray(active(centers), dtype=bool)]

    lat_shape = 2 * n_cells + 1
    strides = np.concatenate([[1], np.cumprod(lat_shape[:-1])])
    blocks = []
    for tpl in _cell_templates(elem_type):
        pos = 2 * corners[:, None, :] + tpl[:, :, None]  # (dim, n_p, n_c)
        blocks.append(np.tensordot(strides, pos, axes=1))  # (n_p, n_c)
    # elements of one cell stay adjacent
    lat_elem = np.stack(blocks, axis=2).reshape(blocks[0].shape[0], -1)

    used, elem = np.unique(lat_elem, return_inverse=True)
    elem = elem.reshape(lat_elem.shape)
    ijk = np.vstack(np.unravel_index(used, lat_shape[::-1])[::-1])
    coord = origin[:, None] + ijk * (h[:, None] / 2)
    n_n = coord.shape[1]
    return Mesh(
        elem_type=elem_type,
        coord=coord,
        elem=elem.astype(np.int64),
        Q=np.ones((dim, n_n), dtype=bool),
        dirichlet_values=np.zeros((dim, n_n)),
        neumann_faces=np.zeros((0, 2), dtype=np.int64),
    )


def faces_where(mesh: Mesh, predicate) -> np.ndarray:
    """All (element, local face) pairs whose nodes all satisfy ``predicate``.

    ``predicate`` maps node coordinates (dim, m) to a boolean array (m,).
    """
    on = np.asarray(predicate(mesh.coord), dtype=bool)
    pairs = []
    for f, local in enumerate(face_nodes(mesh.elem_type)):
        hit = np.flatnonzero(np.all(on[mesh.elem[local]], axis=0))
        pairs.append(np.column_stack([hit, np.full(hit.size, f)]))
    return np.vstack(pairs).astype(np.int64) if pairs else np.zeros((0, 2), np.int64)


def face_keys(mesh: Mesh) -> dict[tuple[int, ...], list[tuple[int, int]]]:
    """Map sorted face-node tuples to the (element, local face) pairs using them."""
    table: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for f, local in enumerate(face_nodes(mesh.elem_type)):
        nodes = np.sort(mesh.elem[local], axis=0)
        for e in range(mesh.n_e):
            table.setdefault(tuple(nodes[:, e].tolist()), []).append((e, f))
    return table


def boundary_faces(mesh: Mesh) -> np.ndarray:
    """(element, local face) pairs of faces that belong to a single element."""
    pairs = [v[0] for v in face_keys(mesh).values() if len(v) == 1]
    return np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)


def boundary_nodes(mesh: Mesh) -> np.ndarray:
    local = face_nodes(mesh.elem_type)
    faces = boundary_faces(mesh)
    return np.unique(mesh.elem[local[faces[:, 1]].T, faces[:, 0]])


def _near(x, value):
    return np.abs(x - value) < _TOL


# ---------------------------------------------------------------------------
# benchmark geometries
# ---------------------------------------------------------------------------

def build_mesh_elastic_body(level: int, elem_type: ElementType, u_D: float = 0.5,
                            layers: int | None = None) -> Mesh:
    """L-shaped body: the square [0, 10]^2 without the square [0, 5)^2.

    Cells have size ``2**-level``; in 3D the body is extruded to thickness 1
    with ``layers`` cells (default ``2**level``).

    Boundary conditions: ``u1 = 0`` on the left side (x1 = 0), ``u2 = 0`` and
    ``u1 = u_D`` on the bottom side (x2 = 0); in 3D ``u3 = 0`` on x3 = 0 and
    x3 = 1. Faces on the top side x2 = 10 are Neumann faces. Pass ``u_D=None``
    to leave u1 free on the bottom (pure symmetry conditions).
    """
    if level < 0:
        raise ConfigurationError("level must be nonnegative")
    n = 10 * ELASTIC_BODY_CELLS_PER_UNIT * 2**level
    dim = elem_type.dim

    def active(c):
        return ~((c[0] < 5) & (c[1] < 5))

    if dim == 2:
        mesh = structured_mesh(elem_type, (n, n), (10.0, 10.0), active)
    else:
        nz = 2**level if layers is None else int(layers)
        mesh = structured_mesh(elem_type, (n, n, nz), (10.0, 10.0, 1.0), active)

    x = mesh.coord
    left = _near(x[0], 0.0)
    bottom = _near(x[1], 0.0)
    Q = mesh.Q.copy()
    vals = np.zeros_like(mesh.coord)
    Q[0, left] = False
    Q[1, bottom] = False
    if u_D is not None:
        Q[0, bottom] = False
        vals[0, bottom] = u_D
    if dim == 3:
        Q[2, _near(x[2], 0.0) | _near(x[2], 1.0)] = False
    mesh = mesh.with_dirichlet(Q, vals)
    mesh.neumann_faces = faces_where(mesh, lambda c: _near(c[1], 10.0))
    mesh.node_sets = {"left": np.flatnonzero(left), "bottom": np.flatnonzero(bottom),
                      "top": np.flatnonzero(_near(x[1], 10.0))}
    return mesh


def footing_cells(level: int, elem_type: ElementType) -> int:
    """Cells per side of the footing domain at ``level``."""
    return FOOTING_CELLS_LEVEL0[elem_type.family] * 2**level


def build_mesh_footing(level: int, elem_type: ElementType, u_D: float = 1.0,
                       rough: bool = True, layers: int = 1,
                       n_cells: int | None = None) -> Mesh:
    """Square [0, 10]^2 loaded by a rigid footing on x2 = 10, x1 in [0, 1].

    Level 0 has 20x20 cells for P1/Q1 and 10x10 for P2/Q2, and each level
    doubles the density, so level 4 gives 320x320 and 160x160. ``n_cells``
    overrides the density and must be a multiple of 10.

    Normal displacements vanish on the left, right and bottom sides (and on
    x3 = 0, 1 in 3D). Under the footing ``u2 = -u_D``; with ``rough`` also
    ``u1 = 0``.
    """
    if level < 0:
        raise ConfigurationError("level must be nonnegative")
    n = footing_cells(level, elem_type) if n_cells is None else int(n_cells)
    if n % 10:
        raise ConfigurationError("footing mesh needs a multiple of 10 cells per side")
    dim = elem_type.dim
    if dim == 2:
        mesh = structured_mesh(elem_type, (n, n), (10.0, 10.0))
    else:
        mesh = structured_mesh(elem_type, (n, n, layers), (10.0, 10.0, 1.0))
    x = mesh.coord
    Q = mesh.Q.copy()
    vals = np.zeros_like(x)
    Q[0, _near(x[0], 0.0) | _near(x[0], 10.0)] = False
    Q[1, _near(x[1], 0.0)] = False
    if dim == 3:
        Q[2, _near(x[2], 0.0) | _near(x[2], 1.0)] = False
    footing = _near(x[1], 10.0) & (x[0] <= 1.0 + _TOL)
    Q[1, footing] = False
    vals[1, footing] = -u_D
    if rough:
        Q[0, footing] = False
    mesh = mesh.with_dirichlet(Q, vals)
    mesh.node_sets = {"footing": np.flatnonzero(footing)}
    return mesh


# ---------------------------------------------------------------------------
# plain text import / export
# ---------------------------------------------------------------------------

def save_mesh_text(mesh: Mesh, path) -> None:
    """Write the mesh as plain text.

    Layout::

        elem_type <family> <dim>
        nodes <n_n>
        <index> <x1> ... <x_dim>
        elements <n_e>
        <index> <node_1> ... <node_np>
        constrained <count>
        <node> <component> <value>
        neumann <count>
        <element> <local face>

    All indices are 0-based.
    """
    path = Path(path)
    lines = [f"elem_type {mesh.elem_type.family.value} {mesh.dim}", f"nodes {mesh.n_n}"]
    for i, xyz in enumerate(mesh.coord.T):
        lines.append(f"{i} " + " ".join(repr(float(v)) for v in xyz))
    lines.append(f"elements {mesh.n_e}")
    for e, nodes in enumerate(mesh.elem.T):
        lines.append(f"{e} " + " ".join(str(int(v)) for v in nodes))
    comp, node = np.nonzero(~mesh.Q)
    order = np.lexsort((comp, node))
    lines.append(f"constrained {order.size}")
    for k in order:
        lines.append(f"{node[k]} {comp[k]} {float(mesh.dirichlet_values[comp[k], node[k]])!r}")
    lines.append(f"neumann {len(mesh.neumann_faces)}")
    for e, f in mesh.neumann_faces:
        lines.append(f"{e} {f}")
    path.write_text("\n".join(lines) + "\n")


def load_mesh_text(path) -> Mesh:
    """Read a mesh written by :func:`save_mesh_text`."""
    tokens = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    it = iter(tokens)

    def header(name):
        t = next(it)
        if t[0] != name:
            raise ConfigurationError(f"expected section {name!r}, got {t[0]!r}")
        return t[1:]

    family, dim = header("elem_type")
    elem_type = ElementType(family, int(dim))
    n_n = int(header("nodes")[0])
    coord = np.array([[float(v) for v in next(it)[1:]] for _ in range(n_n)]).T.reshape(elem_type.dim, n_n)
    n_e = int(header("elements")[0])
    elem = np.array([[int(v) for v in next(it)[1:]] for _ in range(n_e)], dtype=np.int64).T
    n_c = int(header("constrained")[0])
    Q = np.ones((elem_type.dim, n_n), dtype=bool)
    vals = np.zeros((elem_type.dim, n_n))
    for _ in range(n_c):
        node, comp, value = next(it)
        Q[int(comp), int(node)] = False
        vals[int(comp), int(node)] = float(value)
    n_f = int(header("neumann")[0])
    faces = np.array([[int(v) for v in next(it)] for _ in range(n_f)], dtype=np.int64).reshape(-1, 2)
    return Mesh(elem_type, coord, elem.reshape(elem_type.n_p, n_e), Q, vals, faces)
