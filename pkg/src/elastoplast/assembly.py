"""Vectorized assembly: Jacobians, strain-displacement matrix, stiffness, forces.

The global strain-displacement matrix ``B`` maps the displacement vector
(node-major, ``u[dim * node + i]``) to Voigt strains at all integration
points, ``n_s`` rows per point with integration point ``q = e * n_q + k``.
In 3D ``n_s = 6``; plane strain uses ``n_s = 3`` rows (e11, e22, 2 e12) and
reads the matching rows/columns (0, 1, 3) of the 6x6 constitutive blocks.

Stiffness matrices use the factorisations::

    K_elast   = B^T D_elast B
    K_tangent = K_elast + B^T (D_tangent - D_elast) B

where the D matrices are block diagonal with one weighted constitutive block
per integration point. Only plastic points contribute to the difference.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .constitutive import elastic_tangent
from .exceptions import ConfigurationError, DegenerateElementError
from .linalg import from_triplets, sandwich
from .mesh import Mesh
from .reference_elements import (
    QuadratureRule,
    ReferenceBasis,
    face_nodes,
    local_basis_face,
    local_basis_volume,
    quadrature_face,
    quadrature_volume,
)

VOIGT_ROWS = {2: np.array([0, 1, 3]), 3: np.arange(6)}

# (strain row, displacement component, derivative direction) of the nonzero
# entries of the local strain-displacement block
_B_PATTERN = {
    2: [(0, 0, 0), (1, 1, 1), (2, 0, 1), (2, 1, 0)],
    3: [(0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 0, 1), (3, 1, 0),
        (4, 1, 2), (4, 2, 1), (5, 0, 2), (5, 2, 0)],
}


def reduce_blocks(DS: np.ndarray, dim: int) -> np.ndarray:
    """Restrict 36-row tangent blocks to the rows/columns used in ``dim`` D."""
    if dim == 3:
        return DS
    r = VOIGT_ROWS[dim]
    n = DS.shape[1]
    return DS.reshape(6, 6, n, order="F")[np.ix_(r, r)].reshape(r.size**2, n, order="F")


def embed_strain(E_red: np.ndarray, dim: int) -> np.ndarray:
    """Embed reduced Voigt strains into the 6-component form (zeros elsewhere)."""
    if dim == 3:
        return E_red
    E = np.zeros((6, E_red.shape[1]))
    E[VOIGT_ROWS[dim]] = E_red
    return E


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def element_coordinates(mesh: Mesh) -> np.ndarray:
    """Node coordinates per element, shape (dim, n_p, n_e)."""
    return mesh.coord[:, mesh.elem]


def jacobians(mesh: Mesh, basis: ReferenceBasis):
    """Jacobian determinants and inverses at all integration points.

    ``J[i, j] = sum_p dPhi_p/dxi_i * x_j(N_p)``; the inverse is formed by
    cofactors. Returns ``DET`` (n_int,) and ``Jinv`` (dim, dim, n_int).

    Raises
    ------
    DegenerateElementError
        If any determinant is not strictly positive.
    """
    dim = mesh.dim
    X = element_coordinates(mesh)
    n_q = basis.DHatP.shape[2]
    J = np.einsum("ipk,jpe->ijek", basis.DHatP, X).reshape(dim, dim, -1)
    if dim == 2:
        (J11, J12), (J21, J22) = J
        DET = J11 * J22 - J12 * J21
        Jinv = np.array([[J22, -J12], [-J21, J11]]) / DET
    else:
        (J11, J12, J13), (J21, J22, J23), (J31, J32, J33) = J
        DET = J11 * (J22 * J33 - J23 * J32) - J12 * (J21 * J33 - J23 * J31) \
            + J13 * (J21 * J32 - J22 * J31)
        Jinv = np.array([
            [J22 * J33 - J23 * J32, -(J12 * J33 - J13 * J32), J12 * J23 - J13 * J22],
            [-(J21 * J33 - J23 * J31), J11 * J33 - J13 * J31, -(J11 * J23 - J13 * J21)],
            [J21 * J32 - J22 * J31, -(J11 * J32 - J12 * J31), J11 * J22 - J12 * J21],
        ]) / DET
    bad = np.flatnonzero(~(DET > 0))
    if bad.size:
        raise DegenerateElementError(int(bad[0] // n_q), float(DET[bad[0]]))
    return DET, Jinv


def basis_gradients(Jinv: np.ndarray, basis: ReferenceBasis) -> np.ndarray:
    """Physical gradients ``DPhi[i, p, q]`` of the local basis functions."""
    dim, n_p, n_q = basis.DHatP.shape
    n_e = Jinv.shape[2] // n_q
    Jinv = Jinv.reshape(dim, dim, n_e, n_q)
    return np.einsum("ijek,jpk->ipek", Jinv, basis.DHatP).reshape(dim, n_p, n_e * n_q)


def strain_displacement_matrix(mesh: Mesh, basis: ReferenceBasis,
                               Jinv: np.ndarray | None = None) -> sp.csr_matrix:
    """Global ``B`` of shape (n_s * n_int, dim * n_n); strains are ``B @ u``."""
    dim = mesh.dim
    if Jinv is None:
        _, Jinv = jacobians(mesh, basis)
    DPhi = basis_gradients(Jinv, basis)
    n_p, n_int = DPhi.shape[1:]
    n_q = n_int // mesh.n_e
    n_s = VOIGT_ROWS[dim].size
    pattern = np.array(_B_PATTERN[dim])
    row, comp, der = pattern.T
    nodes = np.repeat(mesh.elem, n_q, axis=1)  # (n_p, n_int)
    vB = DPhi[der]  # (T, n_p, n_int)
    iB = n_s * np.arange(n_int)[None, None, :] + row[:, None, None]
    jB = dim * nodes[None] + comp[:, None, None]
    iB = np.broadcast_to(iB, vB.shape)
    return from_triplets(iB, jB, vB, n_s * n_int, dim * mesh.n_n)


def block_pattern(n_int: int, n_s: int):
    """Triplet indices of a block diagonal matrix with ``n_s x n_s`` blocks.

    Entry ``r + n_s * c`` of column ``q`` maps to row ``n_s q + r`` and column
    ``n_s q + c``.
    """
    aux = np.arange(n_s * n_int).reshape(n_int, n_s).T  # (n_s, n_int)
    iD = np.tile(aux, (n_s, 1))
    jD = np.repeat(aux, n_s, axis=0)
    return iD, jD


def block_diag_D(DS: np.ndarray, WEIGHT: np.ndarray, pattern=None) -> sp.csr_matrix:
    """Block diagonal matrix with blocks ``WEIGHT[q] * DS[:, q]``.

    ``DS`` holds column-major ``n_s x n_s`` blocks, one per column.
    """
    n_s = int(round(np.sqrt(DS.shape[0])))
    n_int = DS.shape[1]
    iD, jD = block_pattern(n_int, n_s) if pattern is None else pattern
    return from_triplets(iD, jD, DS * WEIGHT, n_s * n_int, n_s * n_int)


# ---------------------------------------------------------------------------
# cached elastic data
# ---------------------------------------------------------------------------

@dataclass
class AssemblyCache:
    """Mesh-dependent operators that stay fixed during a nonlinear solve."""

    mesh: Mesh
    rule: QuadratureRule
    basis: ReferenceBasis
    DET: np.ndarray
    Jinv: np.ndarray
    WEIGHT: np.ndarray
    B: sp.csr_matrix
    Bt: sp.csr_matrix
    iD: np.ndarray
    jD: np.ndarray
    DS_elast: np.ndarray
    D_elast: sp.csr_matrix
    K_elast: sp.csr_matrix
    seconds: float = 0.0

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def n_s(self) -> int:
        return VOIGT_ROWS[self.dim].size

    @property
    def n_int(self) -> int:
        return self.WEIGHT.size

    @property
    def n_q(self) -> int:
        return self.rule.n_q

    def strain(self, u) -> np.ndarray:
        """Six-component strains (6, n_int) of the displacement vector ``u``."""
        u = np.asarray(u, dtype=float).ravel(order="F")
        E_red = (self.B @ u).reshape(self.n_s, self.n_int, order="F")
        return embed_strain(E_red, self.dim)

    def points(self) -> np.ndarray:
        """Physical integration point coordinates (dim, n_int)."""
        X = element_coordinates(self.mesh)
        return np.einsum("pk,jpe->jek", self.basis.HatP, X).reshape(self.dim, -1)


def build_cache(mesh: Mesh, shear, bulk) -> AssemblyCache:
    """Precompute B, integration weights, D_elast and K_elast.

    ``shear`` and ``bulk`` are scalars or arrays with one value per
    integration point.
    """
    t0 = time.perf_counter()
    rule = quadrature_volume(mesh.elem_type)
    basis = local_basis_volume(mesh.elem_type, rule.Xi)
    DET, Jinv = jacobians(mesh, basis)
    n_int = DET.size
    WEIGHT = np.abs(DET) * np.tile(rule.WF, mesh.n_e)
    B = strain_displacement_matrix(mesh, basis, Jinv)
    n_s = VOIGT_ROWS[mesh.dim].size
    iD, jD = block_pattern(n_int, n_s)
    DS = elastic_tangent(np.broadcast_to(shear, (n_int,)), np.broadcast_to(bulk, (n_int,)))
    D_elast = block_diag_D(reduce_blocks(DS, mesh.dim), WEIGHT, (iD, jD))
    K_elast = sandwich(B, D_elast)
    Bt = B.T.tocsr()
    return AssemblyCache(mesh, rule, basis, DET, Jinv, WEIGHT, B, Bt, iD, jD, DS,
                         D_elast, K_elast, time.perf_counter() - t0)


def assemble_elastic_stiffness(cache: AssemblyCache) -> sp.csr_matrix:
    """``B^T D_elast B``."""
    return sandwich(cache.B, cache.D_elast)


def tangent_difference_matrix(cache: AssemblyCache, DS: np.ndarray, plastic) -> sp.csr_matrix:
    """``D_tangent - D_elast`` with stored blocks only at plastic points."""
    idx = np.flatnonzero(plastic)
    n_s, n_int = cache.n_s, cache.n_int
    diff = reduce_blocks(DS[:, idx] - cache.DS_elast[:, idx], cache.dim) * cache.WEIGHT[idx]
    return from_triplets(cache.iD[:, idx], cache.jD[:, idx], diff, n_s * n_int, n_s * n_int)


def assemble_tangent_stiffness(cache: AssemblyCache, DS: np.ndarray, plastic) -> sp.csr_matrix:
    """``K_elast + B^T (D_tangent - D_elast) B``.

    The product only involves the rows of ``B`` that belong to plastic
    points, so the cost grows with their number.
    """
    idx = np.flatnonzero(plastic)
    if idx.size == 0:
        return cache.K_elast.copy()
    n_s = cache.n_s
    diff = reduce_blocks(DS[:, idx] - cache.DS_elast[:, idx], cache.dim) * cache.WEIGHT[idx]
    rows = (n_s * idx[None, :] + np.arange(n_s)[:, None]).ravel(order="F")
    Bp = cache.B[rows]
    iD, jD = block_pattern(idx.size, n_s)
    Dp = from_triplets(iD, jD, diff, n_s * idx.size, n_s * idx.size)
    return (cache.K_elast + Bp.T.tocsr() @ Dp @ Bp).tocsr()


def internal_forces(cache: AssemblyCache, S: np.ndarray) -> np.ndarray:
    """``B^T (S * WEIGHT)`` for six-component stresses ``S`` (6, n_int)."""
    S_red = S[VOIGT_ROWS[cache.dim]] * cache.WEIGHT
    return cache.Bt @ S_red.ravel(order="F")


# ---------------------------------------------------------------------------
# external loads
# ---------------------------------------------------------------------------

def _field_values(f, x: np.ndarray) -> np.ndarray:
    if callable(f):
        return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    v = np.asarray(f, dtype=float).reshape(-1, 1)
    if v.shape[0] != x.shape[0]:
        raise ConfigurationError(f"force vector must have {x.shape[0]} components")
    return np.broadcast_to(v, x.shape)


def _is_zero(f) -> bool:
    return f is None or (not callable(f) and not np.any(np.asarray(f, dtype=float)))


def external_forces(mesh: Mesh, f_V=None, f_t=None, cache: AssemblyCache | None = None) -> np.ndarray:
    """Load vector of a volume force ``f_V`` and a traction ``f_t``.

    Each force is a constant vector or a callable of the coordinates
    ``x`` (dim, m) returning values of shape (dim, m). Tractions act on
    ``mesh.neumann_faces``.
    """
    dim, n_dof = mesh.dim, mesh.n_dof
    f = np.zeros(n_dof)
    if not _is_zero(f_V):
        if cache is None:
            rule = quadrature_volume(mesh.elem_type)
            basis = local_basis_volume(mesh.elem_type, rule.Xi)
            DET, _ = jacobians(mesh, basis)
            WEIGHT = DET * np.tile(rule.WF, mesh.n_e)
        else:
            basis, WEIGHT = cache.basis, cache.WEIGHT
        X = element_coordinates(mesh)
        n_q = basis.HatP.shape[1]
        x = np.einsum("pk,jpe->jek", basis.HatP, X).reshape(dim, -1)
        g = (_field_values(f_V, x) * WEIGHT).reshape(dim, mesh.n_e, n_q)
        vals = np.einsum("pk,jek->jpe", basis.HatP, g)
        idx = dim * mesh.elem[None] + np.arange(dim)[:, None, None]
        f += np.bincount(idx.ravel(), vals.ravel(), minlength=n_dof)
    if not _is_zero(f_t):
        faces = mesh.neumann_faces
        if len(faces) == 0:
            raise ConfigurationError("traction given but the mesh has no Neumann faces")
        rule = quadrature_face(mesh.elem_type)
        fb = local_basis_face(mesh.elem_type, rule.Xi)
        local = face_nodes(mesh.elem_type)[faces[:, 1]]  # (n_f, n_fp)
        nodes = mesh.elem[local, faces[:, 0][:, None]]
        X = mesh.coord[:, nodes]  # (dim, n_f, n_fp)
        T = np.einsum("apk,jfp->ajfk", fb.DHatP, X)  # (dim-1, dim, n_f, n_qf)
        if dim == 2:
            da = np.linalg.norm(T[0], axis=0)
        else:
            da = np.linalg.norm(np.cross(T[0], T[1], axis=0), axis=0)
        x = np.einsum("pk,jfp->jfk", fb.HatP, X)
        g = _field_values(f_t, x.reshape(dim, -1)).reshape(x.shape) * (da * rule.WF)
        vals = np.einsum("pk,jfk->jfp", fb.HatP, g)
        idx = dim * nodes[None] + np.arange(dim)[:, None, None]
        f += np.bincount(idx.ravel(), vals.ravel(), minlength=n_dof)
    return f
