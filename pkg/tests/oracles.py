"""Independent reference implementations used as test oracles.

Everything here is written point by point or element by element with dense
3x3 tensors and dense matrices, sharing no code paths with the vectorized
package routines except the reference basis functions.
"""

from __future__ import annotations

from math import factorial

import numpy as np

from elastoplast.reference_elements import local_basis_volume, quadrature_volume

I3 = np.eye(3)
_VOIGT_PAIRS = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0)]


# ---------------------------------------------------------------------------
# tensors
# ---------------------------------------------------------------------------

def strain_tensor(e) -> np.ndarray:
    """Voigt strain with engineering shears -> symmetric 3x3 tensor."""
    t = np.diag(e[:3]).astype(float)
    for k, (i, j) in enumerate(_VOIGT_PAIRS[3:], start=3):
        t[i, j] = t[j, i] = 0.5 * e[k]
    return t


def stress_tensor(s) -> np.ndarray:
    t = np.diag(s[:3]).astype(float)
    for k, (i, j) in enumerate(_VOIGT_PAIRS[3:], start=3):
        t[i, j] = t[j, i] = s[k]
    return t


def stress_voigt(t) -> np.ndarray:
    return np.array([t[i, j] for i, j in _VOIGT_PAIRS])


def strain_voigt(t) -> np.ndarray:
    return np.array([t[i, j] * (1 if i == j else 2) for i, j in _VOIGT_PAIRS])


def dev(t):
    return t - np.trace(t) / 3.0 * I3


def hooke(eps, G, K):
    return 2.0 * G * dev(eps) + K * np.trace(eps) * I3


def hooke_inverse(sig, G, K):
    return dev(sig) / (2.0 * G) + np.trace(sig) / (9.0 * K) * I3


# ---------------------------------------------------------------------------
# return mappings, one point at a time
# ---------------------------------------------------------------------------

def vm_point(e, ep, beta, G, K, a, Y):
    """Radial return with linear kinematic hardening.

    Inputs/outputs are Voigt vectors (strains engineering, stresses not).
    Returns ``(stress, plastic_strain, back_stress, plastic)``.
    """
    eps, eps_p, b = strain_tensor(e), strain_tensor(ep), stress_tensor(beta)
    sig = hooke(eps - eps_p, G, K)
    xi = dev(sig) - b
    nrm = np.linalg.norm(xi)
    if nrm - Y <= 0:
        return stress_voigt(sig), ep.copy(), beta.copy(), False
    n = xi / nrm
    dlam = (nrm - Y) / (2.0 * G + a)
    sig = sig - 2.0 * G * dlam * n
    return stress_voigt(sig), strain_voigt(eps_p + dlam * n), stress_voigt(b + a * dlam * n), True


def dp_point(e, ep, G, K, eta, c):
    """Drucker-Prager return for ``|dev s|/sqrt(2) + eta * tr(s)/3 <= c``.

    The apex case is detected when the smooth return would flip the sign of
    the deviator. Returns ``(stress, plastic_strain, regime)`` with regime in
    {"elastic", "smooth", "apex"}.
    """
    eps = strain_tensor(e)
    sig = hooke(eps - strain_tensor(ep), G, K)
    s = dev(sig)
    rho = np.linalg.norm(s)
    p = np.trace(sig) / 3.0
    f = rho / np.sqrt(2.0) + eta * p - c
    if f <= 0:
        return stress_voigt(sig), ep.copy(), "elastic"
    dlam = f / (G + K * eta**2)
    rho_new = rho - np.sqrt(2.0) * G * dlam
    if rho_new > 0:
        sig = s * (rho_new / rho) + (p - K * eta * dlam) * I3
        regime = "smooth"
    else:
        sig = c / eta * I3
        regime = "apex"
    return stress_voigt(sig), strain_voigt(eps - hooke_inverse(sig, G, K)), regime


def central_difference_tangent(stress_fn, e, h):
    """6x6 matrix of central differences of ``stress_fn`` at Voigt strain ``e``."""
    D = np.zeros((6, 6))
    for j in range(6):
        d = np.zeros(6)
        d[j] = h
        D[:, j] = (stress_fn(e + d) - stress_fn(e - d)) / (2.0 * h)
    return D


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def simplex_monomial_integral(powers) -> float:
    """Integral of prod x_i^a_i over the unit simplex."""
    num = np.prod([factorial(a) for a in powers])
    return num / factorial(sum(powers) + len(powers))


def cube_monomial_integral(powers) -> float:
    """Integral of prod x_i^a_i over [-1, 1]^d."""
    return float(np.prod([0.0 if a % 2 else 2.0 / (a + 1) for a in powers]))


# ---------------------------------------------------------------------------
# element loops
# ---------------------------------------------------------------------------

def lame_matrix(dim, G, K):
    """Elasticity matrix for engineering Voigt strains (plane strain in 2D)."""
    lam = K - 2.0 * G / 3.0
    if dim == 2:
        return np.array([[lam + 2 * G, lam, 0], [lam, lam + 2 * G, 0], [0, 0, G]])
    C = np.zeros((6, 6))
    C[:3, :3] = lam
    C[np.arange(3), np.arange(3)] += 2 * G
    C[np.arange(3, 6), np.arange(3, 6)] = G
    return C


def element_B(dphi):
    """Dense strain-displacement block from physical gradients (dim, n_p)."""
    dim, n_p = dphi.shape
    if dim == 2:
        B = np.zeros((3, 2 * n_p))
        B[0, 0::2] = dphi[0]
        B[1, 1::2] = dphi[1]
        B[2, 0::2] = dphi[1]
        B[2, 1::2] = dphi[0]
        return B
    B = np.zeros((6, 3 * n_p))
    for r, (i, j) in enumerate(_VOIGT_PAIRS):
        B[r, i::3] += dphi[j]
        if i != j:
            B[r, j::3] += dphi[i]
    return B


def element_quadrature(mesh):
    """Yield ``(element, weight, B_e)`` for every integration point."""
    rule = quadrature_volume(mesh.elem_type)
    basis = local_basis_volume(mesh.elem_type, rule.Xi)
    for e in range(mesh.n_e):
        X = mesh.coord[:, mesh.elem[:, e]]  # (dim, n_p)
        for k in range(rule.n_q):
            dref = basis.DHatP[:, :, k]
            J = dref @ X.T
            dphi = np.linalg.solve(J, dref)
            yield e, rule.WF[k] * abs(np.linalg.det(J)), element_B(dphi)


def dense_stiffness(mesh, G, K):
    """Element-loop stiffness with dense scatter."""
    dim = mesh.dim
    C = lame_matrix(dim, G, K)
    A = np.zeros((mesh.n_dof, mesh.n_dof))
    for e, w, B in element_quadrature(mesh):
        dofs = (dim * mesh.elem[:, e][:, None] + np.arange(dim)).ravel()
        A[np.ix_(dofs, dofs)] += w * B.T @ C @ B
    return A


def dense_internal_forces(mesh, S):
    """Element-loop ``sum_q w B_q^T s_q`` for reduced stresses S (n_s, n_int)."""
    dim = mesh.dim
    F = np.zeros(mesh.n_dof)
    for q, (e, w, B) in enumerate(element_quadrature(mesh)):
        dofs = (dim * mesh.elem[:, e][:, None] + np.arange(dim)).ravel()
        F[dofs] += w * B.T @ S[:, q]
    return F
