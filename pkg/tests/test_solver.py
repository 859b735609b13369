from __future__ import annotations

import numpy as np
import pytest

from elastoplast import assembly as asm
from elastoplast.constitutive import IntegrationState, MaterialField
from elastoplast.exceptions import ConfigurationError, NewtonConvergenceError
from elastoplast.linalg import restricted_solve
from elastoplast.mesh import build_mesh_elastic_body
from elastoplast.reference_elements import ElementType, Family
from elastoplast.solver import (
    NewtonSettings,
    TimeStepRecord,
    load_scale,
    newton_solve,
    residual_norm,
    run_dp_footing,
    run_elastic,
    run_vm_cyclic,
    tangent_time_fit,
)

P1_2 = ElementType(Family.P1, 2)
Q1_2 = ElementType(Family.Q1, 2)


class TestSettings:
    @pytest.mark.parametrize("kwargs", [
        {"eps_newton": 0.0}, {"eps_newton": -1e-8}, {"max_iters": 0},
        {"on_failure": "retry"}, {"linear_solver": "gmres"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            NewtonSettings(**kwargs)

    def test_defaults(self):
        s = NewtonSettings()
        assert (s.eps_newton, s.max_iters, s.on_failure) == (1e-10, 25, "error")


class TestNewtonElastic:
    def test_zero_load_converges_at_once(self):
        res = run_elastic(P1_2, level=0, traction=0.0, volume_force=0.0, u_D=0.0)
        assert res.records[0].newton_iters == 1
        assert np.all(res.u == 0)

    def test_two_iterations(self, elem_type):
        res = run_elastic(elem_type, level=0)
        assert res.records[0].newton_iters == 2

    @pytest.mark.parametrize("method", ["direct", "cg"])
    def test_matches_single_linear_solve(self, method):
        res = run_elastic(Q1_2, level=1, settings=NewtonSettings(linear_solver=method))
        mesh, cache = res.mesh, res.cache
        free = mesh.Q.ravel(order="F")
        e2 = np.eye(2)[1]
        f = asm.external_forces(mesh, e2, 200.0 * e2)
        u_D = mesh.dirichlet_values.ravel(order="F")
        u = u_D + restricted_solve(cache.K_elast, f - cache.K_elast @ u_D, free)
        tol = 1e-10 if method == "direct" else 1e-7
        assert np.abs(res.u - u).max() <= tol * np.abs(u).max()

    def test_constrained_values_kept(self):
        res = run_elastic(Q1_2, level=0)
        fixed = ~res.mesh.Q.ravel(order="F")
        assert np.array_equal(res.u[fixed], res.mesh.dirichlet_values.ravel(order="F")[fixed])

    def test_iteration_cap(self):
        with pytest.raises(NewtonConvergenceError) as info:
            run_elastic(P1_2, level=0, settings=NewtonSettings(max_iters=1))
        assert info.value.iterations == 1

    def test_state_not_modified(self):
        mesh = build_mesh_elastic_body(0, P1_2)
        n = mesh.n_e
        material = MaterialField.uniform(n, 206900.0, 0.29)
        cache = asm.build_cache(mesh, material.shear, material.bulk)
        prev = IntegrationState.zeros(n)
        f = asm.external_forces(mesh, [0.0, 1.0])
        newton_solve(mesh, cache, material, prev, mesh.dirichlet_values, f)
        assert not prev.E.any() and not prev.S.any()


@pytest.fixture(scope="module")
def loading():
    return run_vm_cyclic(P1_2, level=0, n_steps=8, t_end=1.0)


@pytest.fixture(scope="module")
def short():
    return run_dp_footing(P1_2, level=0, du0=1e-3, u_max=0.02)


class TestVonMisesRun:
    def test_yields(self, loading):
        assert loading.summary["max_plastic"] > 0

    def test_equilibrium(self, loading):
        f_max = asm.external_forces(loading.mesh, None, [0.0, 200.0])
        r = residual_norm(loading.mesh, loading.cache, loading.state, f_max)
        assert r <= 1e-8 * np.abs(f_max).max()

    def test_newton_stays_fast(self, loading):
        assert max(r.newton_iters for r in loading.records) <= 10

    def test_huge_yield_stress_is_linear(self):
        res = run_vm_cyclic(P1_2, level=0, n_steps=8, Y=1e12)
        assert res.summary["max_plastic"] == 0
        loads = np.array([r.load for r in res.records])
        work = np.array([r.derived_scalar for r in res.records])
        nz = loads != 0
        ratio = work[nz] / loads[nz]
        assert np.allclose(ratio, ratio[0], rtol=1e-8)
        assert abs(work[-1]) <= 1e-8 * np.abs(work).max()

    def test_permanent_deformation_after_cycle(self):
        res = run_vm_cyclic(P1_2, level=0, n_steps=16)
        assert abs(res.summary["final_work"]) > 1e-3 * res.summary["peak_work"]
        assert sorted(res.snapshots) == [4, 8, 12, 16]

    def test_bit_identical_reruns(self):
        a = run_vm_cyclic(Q1_2, level=0, n_steps=4, t_end=1.0)
        b = run_vm_cyclic(Q1_2, level=0, n_steps=4, t_end=1.0)
        assert np.array_equal(a.u, b.u)
        assert [r.newton_iters for r in a.records] == [r.newton_iters for r in b.records]

    def test_halving_policy(self):
        # two iterations never suffice once points yield, so every step is cut
        # until the recursion limit and the error surfaces
        s = NewtonSettings(max_iters=2, on_failure="halve_step")
        with pytest.raises(NewtonConvergenceError):
            run_vm_cyclic(P1_2, level=0, n_steps=2, t_end=1.0, settings=s)


def test_load_scale():
    t = np.array([0, 0.5, 1, 2, 3, 3.5, 4])
    assert np.allclose(load_scale(t), [0, 0.5, 1, 0, -1, -0.5, 0])


def test_tangent_time_fit_recovers_line():
    samples = [(n, 0.01 + 2e-5 * n) for n in range(0, 500, 50)]
    rec = TimeStepRecord(1, 1.0, len(samples), 0, 0.0, tangent_samples=samples)
    slope, intercept, r2 = tangent_time_fit([rec])
    assert slope == pytest.approx(2e-5) and intercept == pytest.approx(0.01)
    assert r2 == pytest.approx(1.0)


def test_tangent_time_fit_skips_elastic_samples():
    samples = [(0, 1.0)] + [(n, 0.01 + 2e-5 * n) for n in range(50, 500, 50)]
    rec = TimeStepRecord(1, 1.0, len(samples), 0, 0.0, tangent_samples=samples)
    assert tangent_time_fit([rec])[2] == pytest.approx(1.0)
    assert tangent_time_fit([rec], include_elastic=True)[2] < 0.9


class TestFooting:
    def test_reaches_target(self, short):
        assert short.summary["stopped"] == "u_max"
        assert short.summary["final_u_D"] == pytest.approx(0.02)

    def test_pressure_grows(self, short):
        p = np.array([r.derived_scalar for r in short.records])
        assert np.all(p > 0) and np.all(np.diff(p) > 0)

    def test_loads_increase(self, short):
        loads = np.array([r.load for r in short.records])
        assert np.all(np.diff(loads) > 0)

    def test_plane_strain_parameters(self, short):
        assert short.summary["eta"] == pytest.approx(0.33554, abs=1e-5)
        assert short.summary["c"] == pytest.approx(414.851, abs=1e-3)

    def test_initial_response_is_linear(self):
        res = run_dp_footing(P1_2, level=0, du0=1e-7, u_max=4e-7, theta=0.0)
        assert all(r.n_plastic == 0 for r in res.records)
        ratio = np.array([r.derived_scalar / r.load for r in res.records])
        assert np.allclose(ratio, ratio[0], rtol=1e-6)

    def test_error_policy_raises(self):
        with pytest.raises(NewtonConvergenceError):
            run_dp_footing(P1_2, level=0, du0=0.05, u_max=0.05,
                           settings=NewtonSettings(max_iters=2))
