"""Random constitutive states sorted by regime, shared by several test modules."""

from __future__ import annotations

import numpy as np

from elastoplast.constitutive import DEV, IOTA, constitutive_dp, constitutive_vm, to_strain_type

# unit-scale material data so that finite differences are well conditioned
G, K = 1.0, 1.5
VM_Y = 1.0
DP_ETA, DP_C = 0.3, 0.2
MARGIN = 1e-3


def deviatoric_stress(rng, n, scale):
    s = rng.normal(size=(6, n))
    s[:3] -= s[:3].mean(axis=0)
    return s * scale


def vm_samples(n, a, regime, seed=0, margin=MARGIN):
    """``n`` states ``(E, Ep, Hard)`` whose trial criterion lies in ``regime``.

    ``regime`` is "elastic" or "plastic"; ``|crit| >= margin * Y`` always.
    """
    rng = np.random.default_rng(seed)
    out = []
    while sum(x.shape[1] for x in out) < n:
        m = 256
        E = rng.normal(size=(6, m)) * rng.uniform(0.05, 1.5, m)
        Ep = to_strain_type(deviatoric_stress(rng, m, 0.1))
        Hard = deviatoric_stress(rng, m, 0.2 * VM_Y)
        ones = np.ones(m)
        *_, crit = constitutive_vm(E, Ep, Hard, G * ones, K * ones, a * ones, VM_Y * ones)
        keep = crit > margin * VM_Y if regime == "plastic" else crit < -margin * VM_Y
        out.append(np.vstack([E, Ep, Hard])[:, keep])
    X = np.hstack(out)[:, :n]
    return X[:6], X[6:12], X[12:]


def dp_regime(E, Ep):
    """Regime labels of DP trial states and the distance to the regime borders."""
    ones = np.ones(E.shape[1])
    _, _, _, smooth, apex, crit1 = constitutive_dp(E, Ep, G * ones, K * ones, DP_ETA * ones, DP_C * ones)
    E_tr = E - Ep
    rho = 2 * G * np.sqrt(np.maximum(np.sum(E_tr * (DEV @ E_tr), axis=0), 0))
    p = K * (IOTA @ E_tr)
    crit2 = DP_ETA * p - K * DP_ETA**2 * rho / (G * np.sqrt(2)) - DP_C
    label = np.where(apex, "apex", np.where(smooth, "smooth", "elastic"))
    dist = np.minimum(np.abs(crit1), np.abs(crit2))
    return label, dist


def dp_samples(n, regime, seed=0, margin=MARGIN):
    """``n`` states ``(E, Ep)`` in the DP regime "elastic", "smooth" or "apex"."""
    rng = np.random.default_rng(seed)
    out = []
    while sum(x.shape[1] for x in out) < n:
        m = 256
        E = rng.normal(size=(6, m)) * rng.uniform(0.02, 0.6, m)
        E[:3] += rng.uniform(-0.5, 0.8, m)  # spread along the hydrostatic axis
        Ep = rng.normal(size=(6, m)) * 0.02
        label, dist = dp_regime(E, Ep)
        keep = (label == regime) & (dist > margin * DP_C)
        out.append(np.vstack([E, Ep])[:, keep])
    X = np.hstack(out)[:, :n]
    return X[:6], X[6:]
