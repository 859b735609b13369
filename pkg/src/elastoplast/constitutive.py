"""Stress-strain operators and consistent tangents at integration points.

All arrays store one integration point per column. Stresses use the Voigt
order (s11, s22, s33, s12, s23, s31); strains carry engineering shears
(2 e12, 2 e23, 2 e31). ``DEV`` maps a strain-type vector to the stress-type
vector of its deviator, so tangent blocks map strain-type increments to
stress-type increments. Tangent blocks are stored column-major as 36-row
columns.

Three models are provided: linear elasticity, von Mises plasticity with
linear kinematic hardening, and perfectly plastic Drucker-Prager. Plane
strain problems embed their strains in the full 6-component form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IOTA = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
VOL = np.outer(IOTA, IOTA)
DEV = np.diag([1.0, 1.0, 1.0, 0.5, 0.5, 0.5]) - VOL / 3.0
_SHEAR_DOUBLE = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])[:, None]
SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# material data
# ---------------------------------------------------------------------------

def elastic_moduli(young: float, poisson: float) -> tuple[float, float]:
    """Bulk and shear moduli ``(K, G)`` from Young's modulus and Poisson's ratio."""
    if young <= 0:
        raise ValueError("Young's modulus must be positive")
    if not -1.0 < poisson < 0.5:
        raise ValueError("Poisson's ratio must lie in (-1, 1/2)")
    return young / (3.0 * (1.0 - 2.0 * poisson)), young / (2.0 * (1.0 + poisson))


def dp_parameters(c0: float, phi: float, mode: str = "three_d") -> tuple[float, float]:
    """Drucker-Prager ``(eta, c)`` from cohesion ``c0`` and friction angle ``phi``.

    ``mode`` is ``"three_d"`` or ``"plane_strain"``.
    """
    if c0 <= 0 or not 0.0 < phi < np.pi / 2:
        raise ValueError("need c0 > 0 and 0 < phi < pi/2")
    if mode == "three_d":
        d = np.sqrt(3.0) * (3.0 + np.sin(phi))
        return 6.0 * np.sin(phi) / d, c0 * 6.0 * np.cos(phi) / d
    if mode == "plane_strain":
        d = np.sqrt(9.0 + 12.0 * np.tan(phi) ** 2)
        return 3.0 * np.tan(phi) / d, c0 * 3.0 / d
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class Elastic:
    pass


@dataclass
class VonMisesKinematic:
    a: np.ndarray
    Y: np.ndarray


@dataclass
class DruckerPrager:
    eta: np.ndarray
    c: np.ndarray


@dataclass
class MaterialField:
    """Per integration point moduli and plastic parameters."""

    shear: np.ndarray
    bulk: np.ndarray
    model: Elastic | VonMisesKinematic | DruckerPrager = field(default_factory=Elastic)

    def __post_init__(self):
        self.shear = np.atleast_1d(np.asarray(self.shear, dtype=float))
        self.bulk = np.atleast_1d(np.asarray(self.bulk, dtype=float))
        if np.any(self.shear <= 0) or np.any(self.bulk <= 0):
            raise ValueError("moduli must be positive")
        n = self.shear.size
        m = self.model
        if isinstance(m, VonMisesKinematic):
            m.a = np.broadcast_to(np.asarray(m.a, float), (n,)).copy()
            m.Y = np.broadcast_to(np.asarray(m.Y, float), (n,)).copy()
            if np.any(m.a < 0) or np.any(m.Y <= 0):
                raise ValueError("need a >= 0 and Y > 0")
        elif isinstance(m, DruckerPrager):
            m.eta = np.broadcast_to(np.asarray(m.eta, float), (n,)).copy()
            m.c = np.broadcast_to(np.asarray(m.c, float), (n,)).copy()
            if np.any(m.eta <= 0) or np.any(m.c <= 0):
                raise ValueError("need eta > 0 and c > 0")

    @classmethod
    def uniform(cls, n_int: int, young: float, poisson: float, model=None) -> MaterialField:
        bulk, shear = elastic_moduli(young, poisson)
        return cls(np.full(n_int, shear), np.full(n_int, bulk),
                   Elastic() if model is None else model)

    @property
    def n_int(self) -> int:
        return self.shear.size


@dataclass
class IntegrationState:
    """Strain, plastic variables, stress and tangent at all integration points."""

    E: np.ndarray
    Ep: np.ndarray
    Hard: np.ndarray
    S: np.ndarray
    DS: np.ndarray
    plastic: np.ndarray
    smooth: np.ndarray
    apex: np.ndarray

    @classmethod
    def zeros(cls, n_int: int) -> IntegrationState:
        z = np.zeros((6, n_int))
        f = np.zeros(n_int, dtype=bool)
        return cls(z.copy(), z.copy(), z.copy(), z.copy(), np.zeros((36, n_int)),
                   f.copy(), f.copy(), f.copy())

    @property
    def n_int(self) -> int:
        return self.E.shape[1]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def stress_norm(s: np.ndarray) -> np.ndarray:
    """Tensor norm of stress-type Voigt columns."""
    return np.sqrt(np.sum(s[:3] ** 2, axis=0) + 2.0 * np.sum(s[3:] ** 2, axis=0))


def to_strain_type(s: np.ndarray) -> np.ndarray:
    """Stress-type columns to the strain-type representation of the same tensor."""
    return s * _SHEAR_DOUBLE


def elastic_tangent(shear, bulk) -> np.ndarray:
    """Blocks ``2 G DEV + K VOL``, shape (36, n)."""
    shear = np.atleast_1d(shear)
    bulk = np.atleast_1d(bulk)
    return 2.0 * DEV.reshape(36, 1, order="F") * shear + VOL.reshape(36, 1, order="F") * bulk


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise outer products ``a_q b_q^T`` as 36-row columns."""
    return (a[:, None, :] * b[None, :, :]).reshape(36, -1, order="F")


def _elastic_stress(E_el, shear, bulk):
    return 2.0 * shear * (DEV @ E_el) + bulk * (VOL @ E_el)


# ---------------------------------------------------------------------------
# constitutive operators
# ---------------------------------------------------------------------------

def constitutive_elastic(E, shear, bulk):
    """Linear elasticity: returns ``(S, DS)``."""
    E = np.asarray(E, dtype=float)
    return _elastic_stress(E, shear, bulk), elastic_tangent(shear, bulk)


def constitutive_vm(E, Ep_prev, Hard_prev, shear, bulk, a, Y):
    """Von Mises return mapping with linear kinematic hardening.

    Returns
    -------
    S, DS, Ep, Hard : ndarray
        Stress, tangent blocks, updated plastic strain and back stress.
    plastic : ndarray of bool
        Points with a plastic correction (``crit > 0``).
    crit : ndarray
        ``|s_tr| - Y`` with ``s_tr`` the shifted trial deviator.
    """
    E_tr = E - Ep_prev
    S = _elastic_stress(E_tr, shear, bulk)
    SD_tr = DEV @ (2.0 * shear * E_tr) - Hard_prev
    norm_SD = stress_norm(SD_tr)
    crit = norm_SD - Y
    P = crit > 0

    DS = elastic_tangent(shear, bulk)
    Ep = Ep_prev.copy()
    Hard = Hard_prev.copy()
    if np.any(P):
        G, aP, nrm = shear[P], a[P], norm_SD[P]
        N = SD_tr[:, P] / nrm
        denom = 2.0 * G + aP
        lam = crit[P] / denom
        S[:, P] -= 2.0 * G * lam * N
        ID = DEV.reshape(36, 1, order="F")
        const = (2.0 * G) ** 2 / denom
        DS[:, P] += -const * ID + const * Y[P] / nrm * (ID - _outer(N, N))
        Hard[:, P] += aP * lam * N
        Ep[:, P] += lam * to_strain_type(N)
    return S, DS, Ep, Hard, P, crit


def constitutive_dp(E, Ep_prev, shear, bulk, eta, c):
    """Drucker-Prager return mapping for perfect plasticity.

    The yield function is evaluated as ``rho/sqrt(2) + eta * p - c`` with
    ``rho = |dev sigma|`` and ``p = tr(sigma) / 3``.

    Returns
    -------
    S, DS, Ep : ndarray
    smooth, apex : ndarray of bool
        Points returned to the smooth part of the cone and to its apex.
    crit1 : ndarray
        Yield function of the trial stress.
    """
    E_tr = E - Ep_prev
    S = _elastic_stress(E_tr, shear, bulk)
    dev_E = DEV @ E_tr
    norm_E = np.sqrt(np.maximum(0.0, np.sum(E_tr * dev_E, axis=0)))
    rho_tr = 2.0 * shear * norm_E
    p_tr = bulk * (IOTA @ E_tr)

    denom_a = bulk * eta**2
    denom_s = shear + denom_a
    crit1 = rho_tr / SQRT2 + eta * p_tr - c
    crit2 = eta * p_tr - denom_a * rho_tr / (shear * SQRT2) - c
    smooth = (crit1 > 0) & (crit2 <= 0)
    apex = (crit1 > 0) & (crit2 > 0)

    DS = elastic_tangent(shear, bulk)
    Ep = Ep_prev.copy()
    if np.any(smooth):
        if np.any(norm_E[smooth] == 0):
            raise ArithmeticError("smooth return with vanishing trial deviator")
        G, K, et = shear[smooth], bulk[smooth], eta[smooth]
        lam = crit1[smooth] / denom_s[smooth]
        N = dev_E[:, smooth] / norm_E[smooth]
        M = SQRT2 * G * N + np.outer(IOTA, K * et)
        S[:, smooth] -= lam * M
        ID = DEV.reshape(36, 1, order="F")
        DS[:, smooth] -= (2.0 * SQRT2 * G**2 * lam / rho_tr[smooth] * (ID - _outer(N, N))
                          + _outer(M, M) / denom_s[smooth])
        Ep[:, smooth] += lam * (to_strain_type(N) / SQRT2 + np.outer(IOTA, et / 3.0))
    if np.any(apex):
        K, et, cA = bulk[apex], eta[apex], c[apex]
        S[:, apex] = np.outer(IOTA, cA / et)
        DS[:, apex] = 0.0
        Ep[:, apex] = E[:, apex] - np.outer(IOTA, cA / (3.0 * K * et))
    return S, DS, Ep, smooth, apex, crit1


def evaluate(material: MaterialField, E: np.ndarray, Ep_prev: np.ndarray,
             Hard_prev: np.ndarray) -> IntegrationState:
    """Apply the material's constitutive operator to strains ``E`` (6, n_int)."""
    G, K, m = material.shear, material.bulk, material.model
    none = np.zeros(E.shape[1], dtype=bool)
    if isinstance(m, VonMisesKinematic):
        S, DS, Ep, Hard, P, _ = constitutive_vm(E, Ep_prev, Hard_prev, G, K, m.a, m.Y)
        return IntegrationState(E, Ep, Hard, S, DS, P, P.copy(), none)
    if isinstance(m, DruckerPrager):
        S, DS, Ep, smooth, apex, _ = constitutive_dp(E, Ep_prev, G, K, m.eta, m.c)
        return IntegrationState(E, Ep, Hard_prev.copy(), S, DS, smooth | apex, smooth, apex)
    S, DS = constitutive_elastic(E, G, K)
    return IntegrationState(E, Ep_prev.copy(), Hard_prev.copy(), S, DS, none, none.copy(), none.copy())
