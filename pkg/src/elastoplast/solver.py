"""Semismooth Newton solver and drivers for the three benchmark problems."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import assembly as asm
from .constitutive import (
    DruckerPrager,
    IntegrationState,
    MaterialField,
    VonMisesKinematic,
    dp_parameters,
    evaluate,
    stress_norm,
)
from .exceptions import ConfigurationError, NewtonConvergenceError, SolverFailure
from .linalg import energy_norm, restricted_solve
from .mesh import Mesh, build_mesh_elastic_body, build_mesh_footing
from .reference_elements import ElementType

log = logging.getLogger(__name__)

# benchmark data
ELASTIC_YOUNG, ELASTIC_POISSON = 206900.0, 0.29
ELASTIC_TRACTION, ELASTIC_VOLUME_FORCE, ELASTIC_U_D = 200.0, 1.0, 0.5
VM_HARDENING, VM_YIELD, VM_TRACTION_MAX = 1.0e4, 450.0 * np.sqrt(2.0 / 3.0), 200.0
DP_YOUNG, DP_POISSON, DP_COHESION, DP_FRICTION = 1.0e7, 0.48, 450.0, np.pi / 9.0


@dataclass
class NewtonSettings:
    """Stopping rule and failure policy of the Newton iteration.

    ``on_failure`` is ``"error"`` (raise) or ``"halve_step"`` (drivers retry
    with half the load increment).
    """

    eps_newton: float = 1e-10
    max_iters: int = 25
    on_failure: str = "error"
    linear_solver: str = "direct"

    def __post_init__(self):
        if not self.eps_newton > 0:
            raise ConfigurationError("eps_newton must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be at least 1")
        if self.on_failure not in ("error", "halve_step"):
            raise ConfigurationError(f"unknown failure policy {self.on_failure!r}")
        if self.linear_solver not in ("direct", "cg"):
            raise ConfigurationError(f"unknown linear solver {self.linear_solver!r}")


@dataclass
class TimeStepRecord:
    """Summary of one accepted load step.

    ``tangent_samples`` holds one ``(n_plastic, seconds)`` pair per Newton
    iteration; ``tangent_seconds`` is their total time.
    """

    k: int
    load: float
    newton_iters: int
    n_plastic: int
    tangent_seconds: float
    derived_scalar: float = float("nan")
    tangent_samples: list = field(default_factory=list)
    u: np.ndarray | None = None


@dataclass
class BenchmarkResult:
    mesh: Mesh
    cache: asm.AssemblyCache
    material: MaterialField
    u: np.ndarray
    state: IntegrationState
    records: list[TimeStepRecord]
    point_fields: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)

    @property
    def elastic_assembly_seconds(self) -> float:
        return self.cache.seconds


def newton_solve(mesh: Mesh, cache: asm.AssemblyCache, material: MaterialField,
                 state_prev: IntegrationState, dirichlet_values, f_ext,
                 settings: NewtonSettings | None = None, u_init=None):
    """Solve one load step by the semismooth Newton method.

    The iteration starts from ``u_init`` (default zero) with the prescribed
    values ``dirichlet_values`` (dim, n_n) written into constrained dofs, and
    stops when ``|du|_e / (|u_old|_e + |u_new|_e) <= eps_newton`` in the
    energy norm of ``K_elast``. ``state_prev`` is never modified.

    Returns
    -------
    u : ndarray, shape (dim * n_n,)
    state : IntegrationState
        Constitutive state evaluated at the converged ``u``.
    record : TimeStepRecord
        With ``k = 0`` and ``load = nan``; drivers fill in these fields.

    Raises
    ------
    NewtonConvergenceError
        If the stopping test fails within ``max_iters`` iterations.
    SolverFailure
        If a linear solve fails.
    """
    settings = settings or NewtonSettings()
    free = mesh.Q.ravel(order="F")
    f = np.asarray(f_ext, dtype=float).ravel(order="F")
    u_D = np.asarray(dirichlet_values, dtype=float).ravel(order="F")
    u = np.zeros(mesh.n_dof) if u_init is None else np.array(u_init, dtype=float).ravel(order="F")
    u[~free] = u_D[~free]
    K_el = cache.K_elast
    samples = []
    ratio = np.inf
    norm_u = energy_norm(K_el, u)
    for it in range(1, settings.max_iters + 1):
        st = evaluate(material, cache.strain(u), state_prev.Ep, state_prev.Hard)
        F = asm.internal_forces(cache, st.S)
        t0 = time.perf_counter()
        K = asm.assemble_tangent_stiffness(cache, st.DS, st.plastic)
        samples.append((int(st.plastic.sum()), time.perf_counter() - t0))
        du = restricted_solve(K, f - F, free, method=settings.linear_solver)
        u = u + du
        norm_new = energy_norm(K_el, u)
        denom = norm_u + norm_new
        ratio = 0.0 if denom == 0 else energy_norm(K_el, du) / denom
        norm_u = norm_new
        log.debug("newton it=%d ratio=%.3e plastic=%d", it, ratio, samples[-1][0])
        if not np.isfinite(ratio):
            break
        if ratio <= settings.eps_newton:
            state = evaluate(material, cache.strain(u), state_prev.Ep, state_prev.Hard)
            rec = TimeStepRecord(0, float("nan"), it, int(state.plastic.sum()),
                                 sum(s for _, s in samples), tangent_samples=samples)
            return u, state, rec
    raise NewtonConvergenceError(
        f"Newton method stopped after {it} iterations with ratio {ratio:.3e}", it, ratio)


def residual_norm(mesh: Mesh, cache: asm.AssemblyCache, state: IntegrationState, f_ext) -> float:
    """Max-norm of ``f - F(u)`` over the free dofs."""
    r = np.asarray(f_ext).ravel(order="F") - asm.internal_forces(cache, state.S)
    return float(np.abs(r[mesh.Q.ravel(order="F")]).max(initial=0.0))


def _default_elem(elem_type) -> ElementType:
    return elem_type if isinstance(elem_type, ElementType) else ElementType(*elem_type)


# ---------------------------------------------------------------------------
# elasticity
# ---------------------------------------------------------------------------

def run_elastic(elem_type: ElementType, level: int = 1, mesh: Mesh | None = None,
                settings: NewtonSettings | None = None, young: float = ELASTIC_YOUNG,
                poisson: float = ELASTIC_POISSON, traction: float = ELASTIC_TRACTION,
                volume_force: float = ELASTIC_VOLUME_FORCE, u_D: float = ELASTIC_U_D) -> BenchmarkResult:
    """Linear elastic L-shaped body under traction, gravity and a bottom shift."""
    elem_type = _default_elem(elem_type)
    mesh = mesh or build_mesh_elastic_body(level, elem_type, u_D=u_D)
    dim = mesh.dim
    rule_n_q = asm.quadrature_volume(elem_type).n_q
    material = MaterialField.uniform(mesh.n_e * rule_n_q, young, poisson)
    cache = asm.build_cache(mesh, material.shear, material.bulk)
    e2 = np.eye(dim)[1]
    f = asm.external_forces(mesh, volume_force * e2, traction * e2, cache=cache)
    u, state, rec = newton_solve(mesh, cache, material, IntegrationState.zeros(cache.n_int),
                                 mesh.dirichlet_values, f, settings)
    rec = replace(rec, k=1, load=1.0, derived_scalar=float(f @ u), u=u)
    U = u.reshape(dim, -1, order="F")
    summary = {"n_nodes": mesh.n_n, "n_elements": mesh.n_e, "n_dofs": mesh.n_dof,
               "n_unknowns": mesh.n_unknowns, "newton_iters": rec.newton_iters,
               "max_displacement": float(np.linalg.norm(U, axis=0).max()),
               "elastic_assembly_seconds": cache.seconds}
    return BenchmarkResult(mesh, cache, material, u, state, [rec],
                           {"displacement": U}, summary)


# ---------------------------------------------------------------------------
# von Mises plasticity, cyclic loading
# ---------------------------------------------------------------------------

def load_scale(t):
    """Piecewise linear traction history: 0 -> 1 -> -1 -> 0 over t in [0, 4]."""
    return np.interp(t, [0.0, 1.0, 3.0, 4.0], [0.0, 1.0, -1.0, 0.0])


def _vm_step(mesh, cache, material, state, u, f_max, z_from, z_to, settings, depth=0):
    """Advance from scale ``z_from`` to ``z_to``; halves the increment on failure."""
    try:
        return newton_solve(mesh, cache, material, state, mesh.dirichlet_values,
                            z_to * f_max, settings, u_init=u)
    except (NewtonConvergenceError, SolverFailure):
        if settings.on_failure != "halve_step" or depth >= 10:
            raise
    z_mid = 0.5 * (z_from + z_to)
    u1, st1, r1 = _vm_step(mesh, cache, material, state, u, f_max, z_from, z_mid, settings, depth + 1)
    u2, st2, r2 = _vm_step(mesh, cache, material, st1, u1, f_max, z_mid, z_to, settings, depth + 1)
    samples = r1.tangent_samples + r2.tangent_samples
    return u2, st2, replace(r2, newton_iters=r1.newton_iters + r2.newton_iters,
                            tangent_seconds=r1.tangent_seconds + r2.tangent_seconds,
                            tangent_samples=samples)


def run_vm_cyclic(elem_type: ElementType, level: int = 1, n_steps: int = 40,
                  mesh: Mesh | None = None, settings: NewtonSettings | None = None,
                  young: float = ELASTIC_YOUNG, poisson: float = ELASTIC_POISSON,
                  a: float = VM_HARDENING, Y: float = VM_YIELD,
                  traction_max: float = VM_TRACTION_MAX, t_end: float = 4.0,
                  keep_displacements: bool = False) -> BenchmarkResult:
    """L-shaped body with kinematic hardening under a cyclic top traction.

    Step ``k`` applies ``load_scale(t_k) * f_max``. The derived scalar is the
    work ``f_max^T u_k``. Back-stress norms are kept for the steps nearest
    t = 1, 2, 3, 4.
    """
    elem_type = _default_elem(elem_type)
    settings = settings or NewtonSettings()
    mesh = mesh or build_mesh_elastic_body(level, elem_type, u_D=None)
    dim = mesh.dim
    n_q = asm.quadrature_volume(elem_type).n_q
    material = MaterialField.uniform(mesh.n_e * n_q, young, poisson, VonMisesKinematic(a, Y))
    cache = asm.build_cache(mesh, material.shear, material.bulk)
    f_max = asm.external_forces(mesh, None, traction_max * np.eye(dim)[1], cache=cache)

    times = np.linspace(0.0, t_end, n_steps + 1)
    snap_steps = {int(np.argmin(np.abs(times - s))): s for s in (1.0, 2.0, 3.0, 4.0)
                  if s <= t_end + 1e-12}
    state = IntegrationState.zeros(cache.n_int)
    u = np.zeros(mesh.n_dof)
    records, snapshots = [], {}
    for k in range(1, n_steps + 1):
        z_prev, z = float(load_scale(times[k - 1])), float(load_scale(times[k]))
        u, state, rec = _vm_step(mesh, cache, material, state, u, f_max, z_prev, z, settings)
        rec = replace(rec, k=k, load=z, derived_scalar=float(f_max @ u),
                      u=u.copy() if keep_displacements else None)
        records.append(rec)
        if k in snap_steps:
            snapshots[k] = stress_norm(state.Hard)
    U = u.reshape(dim, -1, order="F")
    fields = {"displacement": U}
    summary = {"n_nodes": mesh.n_n, "n_dofs": mesh.n_dof, "n_int": cache.n_int,
               "n_steps": n_steps, "final_work": records[-1].derived_scalar,
               "peak_work": max(abs(r.derived_scalar) for r in records),
               "max_plastic": max(r.n_plastic for r in records),
               "elastic_assembly_seconds": cache.seconds}
    return BenchmarkResult(mesh, cache, material, u, state, records, fields, summary, snapshots)


def tangent_time_fit(records, include_elastic: bool = False) -> tuple[float, float, float]:
    """Least-squares line ``seconds = slope * n_plastic + intercept`` and its R^2.

    Samples without plastic points are skipped unless ``include_elastic``:
    they only copy ``K_elast`` and do not run the update.
    """
    data = np.array([s for r in records for s in r.tangent_samples], dtype=float)
    if not include_elastic:
        data = data[data[:, 0] > 0]
    x, y = data[:, 0], data[:, 1]
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = np.sum((y - (slope * x + intercept)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(slope), float(intercept), float(1.0 - ss_res / ss_tot) if ss_tot > 0 else 1.0


# ---------------------------------------------------------------------------
# Drucker-Prager plasticity, strip footing
# ---------------------------------------------------------------------------

def footing_pressure(mesh: Mesh, cache: asm.AssemblyCache, state: IntegrationState) -> float:
    """Mean pressure under the footing from the vertical internal forces."""
    F = asm.internal_forces(cache, state.S)
    nodes = mesh.node_sets["footing"]
    width = 1.0  # per unit thickness in 2D, thickness 1 in 3D
    return float(-F[mesh.dim * nodes + 1].sum() / width)


def run_dp_footing(elem_type: ElementType, level: int = 0, du0: float = 1e-3,
                   u_max: float = 1.0, theta: float = 1e-3, mesh: Mesh | None = None,
                   settings: NewtonSettings | None = None, n_cells: int | None = None,
                   young: float = DP_YOUNG, poisson: float = DP_POISSON,
                   c0: float = DP_COHESION, phi: float = DP_FRICTION,
                   max_halvings: int = 10) -> BenchmarkResult:
    """Rigid footing pressed into a Drucker-Prager soil.

    The footing displacement grows by ``du`` per step, starting at ``du0``;
    ``du`` doubles once the relative pressure increment drops below
    ``theta``. With ``on_failure == "halve_step"`` a failed step is retried
    with half the increment; when no retry is left the run stops and the last
    converged pressure is the limit estimate. The derived scalar is
    ``p / c0``.
    """
    elem_type = _default_elem(elem_type)
    settings = settings or NewtonSettings(on_failure="halve_step")
    mesh = mesh or build_mesh_footing(level, elem_type, u_D=1.0, n_cells=n_cells)
    dim = mesh.dim
    n_q = asm.quadrature_volume(elem_type).n_q
    eta, c = dp_parameters(c0, phi, "plane_strain" if dim == 2 else "three_d")
    material = MaterialField.uniform(mesh.n_e * n_q, young, poisson, DruckerPrager(eta, c))
    cache = asm.build_cache(mesh, material.shear, material.bulk)
    f = np.zeros(mesh.n_dof)
    base = mesh.dirichlet_values

    state = IntegrationState.zeros(cache.n_int)
    u = np.zeros(mesh.n_dof)
    u_D, du, p_prev = 0.0, du0, 0.0
    v = np.zeros(mesh.n_dof)  # displacement per unit footing displacement, last step
    records = []
    halvings, stopped = 0, "u_max"
    while u_D < u_max * (1.0 - 1e-12):
        target = min(u_D + du, u_max)
        # linear extrapolation of the last increment
        u_init = u + (target - u_D) * v
        try:
            u_new, st, rec = newton_solve(mesh, cache, material, state, target * base, f,
                                          settings, u_init=u_init)
        except (NewtonConvergenceError, SolverFailure):
            if settings.on_failure == "halve_step" and halvings < max_halvings:
                du *= 0.5
                halvings += 1
                continue
            if settings.on_failure == "error":
                raise
            stopped = "solver_failure"
            break
        v = (u_new - u) / (target - u_D)
        u, state, u_D = u_new, st, target
        p = footing_pressure(mesh, cache, state)
        records.append(replace(rec, k=len(records) + 1, load=u_D, derived_scalar=p / c0))
        # no growth right after a cut
        if halvings == 0 and abs(p - p_prev) / max(abs(p), np.finfo(float).tiny) < theta:
            du *= 2.0
        halvings = 0
        p_prev = p

    U = u.reshape(dim, -1, order="F")
    total = np.linalg.norm(U, axis=0)
    fields = {"displacement": U, "total_displacement_clamped": np.minimum(total, 0.01)}
    summary = {"n_nodes": mesh.n_n, "n_dofs": mesh.n_dof, "n_int": cache.n_int,
               "eta": eta, "c": c, "n_steps": len(records), "final_u_D": u_D,
               "limit_pressure_ratio": records[-1].derived_scalar if records else float("nan"),
               "stopped": stopped, "elastic_assembly_seconds": cache.seconds}
    return BenchmarkResult(mesh, cache, material, u, state, records, fields, summary)
