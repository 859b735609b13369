"""Reference cells: Lagrange basis functions and quadrature rules.

Supported families are P1/P2 simplices (triangles, tetrahedra) and Q1/Q2
(serendipity) quadrilaterals and hexahedra. Simplex reference cells use the
unit corner ``[0, 1]^d`` simplex, tensor cells use ``[-1, 1]^d``.

Arrays follow a points-in-columns layout: quadrature points ``Xi`` are
``(dim, n_q)``, basis values ``HatP`` are ``(n_p, n_q)`` and gradients
``DHatP`` are ``(dim, n_p, n_q)`` with ``DHatP[i]`` holding the derivative
with respect to the i-th reference coordinate.

Faces are described by the (dim - 1)-dimensional element of the same family;
segments are parametrised on ``[0, 1]`` for P families and ``[-1, 1]`` for Q
families.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .exceptions import InvalidElementError


class Family(str, Enum):
    P1 = "P1"
    P2 = "P2"
    Q1 = "Q1"
    Q2 = "Q2"


@dataclass(frozen=True)
class ElementType:
    """Element family together with the spatial dimension."""

    family: Family
    dim: int

    def __post_init__(self):
        try:
            object.__setattr__(self, "family", Family(self.family))
        except ValueError:
            raise InvalidElementError(f"unknown element family {self.family!r}") from None
        if self.dim not in (2, 3):
            raise InvalidElementError(f"unsupported dimension {self.dim}")

    @property
    def n_p(self) -> int:
        return len(_NODES[self.key])

    @property
    def simplex(self) -> bool:
        return self.family in (Family.P1, Family.P2)

    @property
    def key(self) -> tuple[Family, int]:
        return (self.family, self.dim)

    @property
    def nodes(self) -> np.ndarray:
        """Reference node coordinates, shape ``(dim, n_p)``."""
        return _NODES[self.key].T.copy()

    def __str__(self):
        return f"{self.family.value}/{self.dim}D"


@dataclass(frozen=True)
class QuadratureRule:
    Xi: np.ndarray  # (dim, n_q)
    WF: np.ndarray  # (n_q,)

    @property
    def n_q(self) -> int:
        return self.WF.size


@dataclass(frozen=True)
class ReferenceBasis:
    HatP: np.ndarray  # (n_p, n_q)
    DHatP: np.ndarray  # (dim, n_p, n_q)


# ---------------------------------------------------------------------------
# reference nodes
# ---------------------------------------------------------------------------

_P1_3D = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
_P2_3D = _P1_3D + [
    [0.5, 0, 0], [0.5, 0.5, 0], [0, 0.5, 0],
    [0.5, 0, 0.5], [0, 0.5, 0.5], [0, 0, 0.5],
]
_P1_2D = [[0, 0], [1, 0], [0, 1]]
_P2_2D = _P1_2D + [[0.5, 0], [0.5, 0.5], [0, 0.5]]
_P1_1D = [[0], [1]]
_P2_1D = _P1_1D + [[0.5]]

_Q1_3D = [
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
]
_Q2_3D = _Q1_3D + [
    [0, -1, -1], [1, 0, -1], [0, 1, -1], [-1, 0, -1],
    [0, -1, 1], [1, 0, 1], [0, 1, 1], [-1, 0, 1],
    [-1, -1, 0], [1, -1, 0], [1, 1, 0], [-1, 1, 0],
]
_Q1_2D = [[-1, -1], [1, -1], [1, 1], [-1, 1]]
_Q2_2D = _Q1_2D + [[0, -1], [1, 0], [0, 1], [-1, 0]]
_Q1_1D = [[-1], [1]]
_Q2_1D = _Q1_1D + [[0]]

_NODES = {
    (Family.P1, 1): np.array(_P1_1D, float),
    (Family.P2, 1): np.array(_P2_1D, float),
    (Family.P1, 2): np.array(_P1_2D, float),
    (Family.P2, 2): np.array(_P2_2D, float),
    (Family.P1, 3): np.array(_P1_3D, float),
    (Family.P2, 3): np.array(_P2_3D, float),
    (Family.Q1, 1): np.array(_Q1_1D, float),
    (Family.Q2, 1): np.array(_Q2_1D, float),
    (Family.Q1, 2): np.array(_Q1_2D, float),
    (Family.Q2, 2): np.array(_Q2_2D, float),
    (Family.Q1, 3): np.array(_Q1_3D, float),
    (Family.Q2, 3): np.array(_Q2_3D, float),
}

# P2 edge midpoints listed as (vertex a, vertex b), in node order after the vertices
_P2_EDGES = {
    1: [(0, 1)],
    2: [(0, 1), (1, 2), (0, 2)],
    3: [(0, 1), (1, 2), (0, 2), (1, 3), (2, 3), (0, 3)],
}

# face corners (local vertex ids); midpoints are appended in face-element order
_FACE_CORNERS = {
    (True, 2): [(0, 1), (1, 2), (2, 0)],
    (False, 2): [(0, 1), (1, 2), (2, 3), (3, 0)],
    (True, 3): [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)],
    (False, 3): [(0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)],
}


def _key(elem_type) -> tuple[Family, int]:
    if isinstance(elem_type, ElementType):
        return elem_type.key
    family, dim = elem_type
    try:
        key = (Family(family), int(dim))
    except ValueError:
        raise InvalidElementError(f"unknown element family {family!r}") from None
    if key not in _NODES:
        raise InvalidElementError(f"unsupported element {key}")
    return key


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_GAUSS_1D = {
    2: (np.array([-1.0, 1.0]) / np.sqrt(3.0), np.array([1.0, 1.0])),
    3: (np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)]), np.array([5.0, 8.0, 5.0]) / 9.0),
}

# 11-point tetrahedral rule, exact to order 4 (constants as tabulated, 15 digits)
_TET11_XI = np.array([
    [0.250000000000000, 0.250000000000000, 0.250000000000000],
    [0.071428571428571, 0.071428571428571, 0.071428571428571],
    [0.785714285714286, 0.071428571428571, 0.071428571428571],
    [0.071428571428571, 0.785714285714286, 0.071428571428571],
    [0.071428571428571, 0.071428571428571, 0.785714285714286],
    [0.399403576166799, 0.100596423833201, 0.100596423833201],
    [0.100596423833201, 0.399403576166799, 0.100596423833201],
    [0.100596423833201, 0.100596423833201, 0.399403576166799],
    [0.399403576166799, 0.399403576166799, 0.100596423833201],
    [0.399403576166799, 0.100596423833201, 0.399403576166799],
    [0.100596423833201, 0.399403576166799, 0.399403576166799],
]).T
_TET11_WF = np.array(
    [-0.013155555555555] + [0.007622222222222] * 4 + [0.024888888888888] * 6
)

# 6-point triangle rule, exact to order 4 (weights scaled to area 1/2)
_TRI6_A, _TRI6_B = 0.44594849091596489, 0.091576213509770743
_TRI6_WA, _TRI6_WB = 0.22338158967801147 / 2, 0.10995174365532187 / 2
_TRI6_XI = np.array([
    [_TRI6_A, _TRI6_A], [1 - 2 * _TRI6_A, _TRI6_A], [_TRI6_A, 1 - 2 * _TRI6_A],
    [_TRI6_B, _TRI6_B], [1 - 2 * _TRI6_B, _TRI6_B], [_TRI6_B, 1 - 2 * _TRI6_B],
]).T
_TRI6_WF = np.array([_TRI6_WA] * 3 + [_TRI6_WB] * 3)


def _tensor_gauss(n: int, dim: int) -> QuadratureRule:
    x, w = _GAUSS_1D[n]
    # first coordinate varies fastest
    idx = np.array(list(itertools.product(range(n), repeat=dim)))[:, ::-1]
    return QuadratureRule(x[idx].T.copy(), np.prod(w[idx], axis=1))


def _rule(key: tuple[Family, int]) -> QuadratureRule:
    family, dim = key
    if family is Family.Q1:
        return _tensor_gauss(2, dim)
    if family is Family.Q2:
        return _tensor_gauss(3, dim)
    if dim == 1:
        if family is Family.P1:
            return QuadratureRule(np.array([[0.5]]), np.array([1.0]))
        x, w = _GAUSS_1D[3]
        return QuadratureRule(((x + 1) / 2)[None, :], w / 2)
    if dim == 2:
        if family is Family.P1:
            return QuadratureRule(np.full((2, 1), 1.0 / 3.0), np.array([0.5]))
        return QuadratureRule(_TRI6_XI.copy(), _TRI6_WF.copy())
    if family is Family.P1:
        return QuadratureRule(np.full((3, 1), 0.25), np.array([1.0 / 6.0]))
    return QuadratureRule(_TET11_XI.copy(), _TET11_WF.copy())


def quadrature_volume(elem_type: ElementType) -> QuadratureRule:
    """Quadrature rule on the reference cell of ``elem_type``.

    P1 uses the one-point centroid rule, P2 a rule exact to total degree 4,
    Q1 the 2^d and Q2 the 3^d tensor Gauss rule.
    """
    key = _key(elem_type)
    if key[1] not in (2, 3):
        raise InvalidElementError(f"no volume rule for {key}")
    return _rule(key)


def quadrature_face(elem_type: ElementType) -> QuadratureRule:
    """Quadrature rule on the reference face of ``elem_type``.

    The face rule has the same polynomial order as the volume rule.
    """
    family, dim = _key(elem_type)
    return _rule((family, dim - 1))


# ---------------------------------------------------------------------------
# basis functions
# ---------------------------------------------------------------------------

def _basis_p(key, xi):
    family, dim = key
    m = xi.shape[1]
    lam = np.vstack([1.0 - xi.sum(axis=0), xi])  # barycentric (dim+1, m)
    dlam = np.zeros((dim, dim + 1))
    dlam[:, 0] = -1.0
    dlam[:, 1:] = np.eye(dim)
    if family is Family.P1:
        return lam, np.repeat(dlam[:, :, None], m, axis=2)
    edges = _P2_EDGES[dim]
    n_p = dim + 1 + len(edges)
    HatP = np.empty((n_p, m))
    DHatP = np.empty((dim, n_p, m))
    HatP[: dim + 1] = lam * (2 * lam - 1)
    DHatP[:, : dim + 1] = dlam[:, :, None] * (4 * lam - 1)[None]
    for k, (a, b) in enumerate(edges, start=dim + 1):
        HatP[k] = 4 * lam[a] * lam[b]
        DHatP[:, k] = 4 * (dlam[:, a, None] * lam[b] + dlam[:, b, None] * lam[a])
    return HatP, DHatP


def _basis_q(key, xi):
    family, dim = key
    nodes = _NODES[key]
    m = xi.shape[1]
    HatP = np.empty((len(nodes), m))
    DHatP = np.empty((dim, len(nodes), m))
    for p, s in enumerate(nodes):
        zero = np.flatnonzero(s == 0)
        if zero.size == 0:
            f = 1 + s[:, None] * xi  # (dim, m)
            c = 0.5**dim
            prod = np.prod(f, axis=0)
            if family is Family.Q1:
                HatP[p] = c * prod
                for j in range(dim):
                    DHatP[j, p] = c * s[j] * np.prod(np.delete(f, j, axis=0), axis=0)
            else:
                L = s @ xi - (dim - 1)
                HatP[p] = c * prod * L
                for j in range(dim):
                    others = np.prod(np.delete(f, j, axis=0), axis=0)
                    DHatP[j, p] = c * s[j] * (others * L + prod)
        else:
            mid = zero[0]
            c = 0.5 ** (dim - 1)
            f = 1 + s[:, None] * xi
            f[mid] = 1 - xi[mid] ** 2
            HatP[p] = c * np.prod(f, axis=0)
            for j in range(dim):
                others = np.prod(np.delete(f, j, axis=0), axis=0)
                d = -2 * xi[mid] if j == mid else s[j]
                DHatP[j, p] = c * d * others
    return HatP, DHatP


def _basis(key, points) -> ReferenceBasis:
    xi = np.atleast_2d(np.asarray(points, dtype=float))
    if xi.shape[0] != key[1]:
        raise ValueError(f"points must have {key[1]} rows, got {xi.shape[0]}")
    if key[0] in (Family.P1, Family.P2):
        HatP, DHatP = _basis_p(key, xi)
    else:
        HatP, DHatP = _basis_q(key, xi)
    return ReferenceBasis(HatP, DHatP)


def local_basis_volume(elem_type: ElementType, points) -> ReferenceBasis:
    """Basis values and reference gradients at ``points`` of shape (dim, m)."""
    key = _key(elem_type)
    return _basis(key, points)


def local_basis_face(elem_type: ElementType, points) -> ReferenceBasis:
    """Basis of the face element, evaluated at face points of shape (dim-1, m).

    Node order matches :func:`face_nodes`.
    """
    family, dim = _key(elem_type)
    return _basis((family, dim - 1), points)


# ---------------------------------------------------------------------------
# faces
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _face_tables(key) -> tuple[tuple[int, ...], ...]:
    family, dim = key
    simplex = family in (Family.P1, Family.P2)
    nodes = _NODES[key]
    quadratic = family in (Family.P2, Family.Q2)
    faces = []
    for corners in _FACE_CORNERS[(simplex, dim)]:
        local = list(corners)
        if quadratic:
            if dim == 2:
                pairs = [(corners[0], corners[1])]
            elif simplex:
                a, b, c = corners
                pairs = [(a, b), (b, c), (a, c)]
            else:
                pairs = list(zip(corners, corners[1:] + corners[:1]))
            for a, b in pairs:
                target = 0.5 * (nodes[a] + nodes[b])
                hit = np.flatnonzero(np.all(np.isclose(nodes, target), axis=1))
                local.append(int(hit[0]))
        faces.append(tuple(local))
    return tuple(faces)


def face_nodes(elem_type: ElementType) -> np.ndarray:
    """Local node ids of every face, shape ``(n_faces, n_face_nodes)``."""
    return np.array(_face_tables(_key(elem_type)), dtype=np.int64)
