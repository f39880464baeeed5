import math

import numpy as np
import pytest

from conftest import random_coeffs, random_state
from lowmach.euler import (
    CoefficientRangeError,
    PressureLaw,
    SolverConfig,
    cfl_dt,
    init_w0,
    integrate,
    rhs_compressible,
    rhs_incompressible,
    run_pair,
    step,
    step_incompressible,
    symmetrizer_energy,
)
from lowmach.norms import NormParams
from lowmach.spectral import SpectralField, StateU, TorusGrid, curl, divergence, leray_project

LINEAR = PressureLaw.linear_acoustics()


def plane_wave(grid, k, eps, t):
    kk = np.array(k, dtype=float)
    kn = np.linalg.norm(kk)
    phase = sum(kj * xj for kj, xj in zip(kk, grid.x)) - kn / eps * t
    p = SpectralField.from_physical(grid, np.cos(phase))
    v = tuple(SpectralField.from_physical(grid, kk[j] / kn * np.cos(phase)) for j in range(grid.d))
    return StateU(p, v, eps, t)


def state_err(a, b):
    return float(np.sqrt(np.sum(np.abs(a.stack() - b.stack()) ** 2)) * (2 * np.pi) ** (a.grid.d / 2))


def test_ideal_gas_coefficients():
    law = PressureLaw.ideal_gas(gamma=1.4, K=2.0, P_bar=3.0)
    assert law.a0 == pytest.approx(1 / 1.4, rel=1e-15)
    assert law.r0 == pytest.approx(2.0 * 3.0 ** (1 / 1.4 - 1), rel=1e-14)
    x = np.linspace(-0.5, 0.5, 11)
    c = 1 / 1.4 - 1
    exact = law.r0 * np.exp(c * x)
    assert np.allclose(law.r(x), exact, rtol=1e-13)
    assert np.allclose(law.a(x), 1 / 1.4)


def test_taylor_remainder_is_second_order():
    law = PressureLaw.ideal_gas()
    c = 1 / 1.4 - 1
    rem = []
    for eps in (0.1, 0.05, 0.025):
        x = np.array([eps])
        rem.append(abs(law.r(x)[0] - law.r0 - law.r0 * c * eps))
    assert 3.8 < rem[0] / rem[1] < 4.2
    assert 3.8 < rem[1] / rem[2] < 4.2


def test_law_validation_and_range():
    with pytest.raises(ValueError):
        PressureLaw.from_coefficients([0], [1])
    with pytest.raises(ValueError):
        PressureLaw.ideal_gas(gamma=1.0)
    law = PressureLaw.ideal_gas(radius=0.5)
    with pytest.raises(CoefficientRangeError) as info:
        law.r(np.array([0.1, -0.6]))
    assert info.value.sup_norm == pytest.approx(0.6)
    assert info.value.radius == 0.5


def test_constant_state_is_equilibrium():
    g = TorusGrid(2, 16)
    p = SpectralField.from_physical(g, np.full(g.shape, 0.3))
    v = tuple(SpectralField.from_physical(g, np.full(g.shape, c)) for c in (0.2, -0.1))
    u = StateU(p, v, 0.1)
    law = PressureLaw.ideal_gas()
    assert np.max(np.abs(rhs_compressible(u, law).stack())) < 1e-14
    u2 = integrate(u, law, SolverConfig(T=0.05))
    assert np.max(np.abs(u2.stack() - u.stack())) < 1e-14


def test_zero_state_stays_zero():
    g = TorusGrid(2, 16)
    u = StateU(SpectralField.zeros(g), (SpectralField.zeros(g),) * 2, 0.1)
    assert not np.any(step(u, PressureLaw.ideal_gas(), SolverConfig(), dt=1e-3).stack())


def test_plane_wave_rhs_matches_exact_derivative():
    g = TorusGrid(2, 32)
    eps = 0.1
    u = plane_wave(g, (1, 2), eps, 0.0)
    h = 1e-6
    fd = (plane_wave(g, (1, 2), eps, h).stack() - plane_wave(g, (1, 2), eps, -h).stack()) / (2 * h)
    rhs = rhs_compressible(u, LINEAR, advect=False).stack()
    assert np.max(np.abs(rhs - fd)) < 1e-4 * np.max(np.abs(fd))


def test_acoustic_rhs_scales_like_inverse_eps(grid2, rng):
    u = random_state(grid2, rng, eps=1.0)
    r1 = rhs_compressible(u, LINEAR, advect=False).stack()
    r2 = rhs_compressible(u.replace(eps=0.1), LINEAR, advect=False).stack()
    assert np.allclose(r2, 10 * r1, rtol=1e-13, atol=1e-14)


def test_plane_wave_one_period():
    g = TorusGrid(2, 32)
    eps = 0.1
    period = 2 * np.pi * eps
    n = math.ceil(period / 1e-4)
    u0 = plane_wave(g, (1, 0), eps, 0.0)
    u = integrate(u0, LINEAR, SolverConfig(T=period, dt=period / n, advect=False))
    assert state_err(u, u0) <= 1e-6


def test_rk4_observed_order(rng):
    g = TorusGrid(2, 16)
    u0 = random_state(g, rng, eps=0.1, decay=1.5)
    T = 0.1
    sols = [integrate(u0, LINEAR, SolverConfig(T=T, dt=T / n, advect=False)) for n in (50, 100, 200)]
    e1 = state_err(sols[0], sols[1])
    e2 = state_err(sols[1], sols[2])
    assert math.log2(e1 / e2) >= 3.9


def test_linear_energy_conserved(grid2, rng):
    u = random_state(grid2, rng, eps=0.1, decay=1.0)
    cfg = SolverConfig(dt=1e-4, advect=False)
    e0 = symmetrizer_energy(u, LINEAR)
    for _ in range(50):
        u = step(u, LINEAR, cfg)
    assert abs(symmetrizer_energy(u, LINEAR) - e0) / e0 <= 50 * 1e-10


def test_cfl_dt_shrinks_with_eps(grid2, rng):
    u = random_state(grid2, rng, eps=0.1)
    law = PressureLaw.ideal_gas()
    cfg = SolverConfig()
    assert cfl_dt(u.replace(eps=0.01), law, cfg) < cfl_dt(u, law, cfg)
    assert cfl_dt(u, law, SolverConfig(dt=1e-3)) == 1e-3


def test_init_w0_projection(grid2, rng):
    v = tuple(SpectralField(grid2, c) for c in random_coeffs(grid2, rng, 2))
    w = init_w0(v, PressureLaw.ideal_gas())
    assert divergence(w).l2_norm() < 1e-12
    assert curl(w)[0].__sub__(curl(v)[0]).l2_norm() < 1e-12
    assert np.allclose(w[0].coeffs[0, 0], v[0].coeffs[0, 0])


def test_incompressible_shear_is_steady():
    g = TorusGrid(2, 32)
    x2 = g.x[1]
    v = (SpectralField.from_physical(g, np.sin(x2)), SpectralField.zeros(g))
    assert max(np.max(np.abs(c.coeffs)) for c in rhs_incompressible(v)) < 1e-15


def test_taylor_green_is_steady():
    g = TorusGrid(2, 32)
    x1, x2 = g.x
    v = (
        SpectralField.from_physical(g, np.sin(x1) * np.cos(x2)),
        SpectralField.from_physical(g, -np.cos(x1) * np.sin(x2)),
    )
    assert max(np.max(np.abs(c.coeffs)) for c in rhs_incompressible(v)) < 1e-14


def test_incompressible_rhs_rejects_divergent_velocity():
    g = TorusGrid(2, 16)
    v = (SpectralField.from_physical(g, np.sin(g.x[0])), SpectralField.zeros(g))
    with pytest.raises(ValueError):
        rhs_incompressible(v)


def test_incompressible_flow_keeps_divergence_free(grid2, rng):
    v = leray_project(tuple(SpectralField(grid2, c) for c in random_coeffs(grid2, rng, 2)))
    for _ in range(5):
        v = step_incompressible(v, 1e-2)
    assert divergence(v).l2_norm() < 1e-12


def test_guard_aborts_before_stepping(grid2, rng):
    u = random_state(grid2, rng, eps=5.0)
    scale = 1.0 / np.max(np.abs(u.p.physical()))
    u = StateU.from_stack(grid2, u.stack() * scale, 5.0)
    law = PressureLaw.ideal_gas()
    with pytest.raises(CoefficientRangeError) as info:
        run_pair(u, law, SolverConfig(T=0.1), NormParams(0.5))
    assert info.value.partial_record.rows == []


def test_run_pair_records(grid2, rng):
    u = random_state(grid2, rng, eps=0.2, decay=1.0)
    rec = run_pair(u, PressureLaw.ideal_gas(), SolverConfig(T=0.02), NormParams(0.5))
    assert rec.rows[0]["t"] == 0.0 and rec.rows[-1]["t"] == pytest.approx(0.02, abs=1e-14)
    Ms = [r["M_eps"] for r in rec.rows]
    assert Ms == sorted(Ms) and rec.sup_M == max(r["A_tau_u"] for r in rec.rows)
    assert rec.final is not None and rec.final_inc is not None


def test_run_pair_rejects_horizon_overrun(grid2, rng):
    with pytest.raises(ValueError):
        run_pair(random_state(grid2, rng), LINEAR, SolverConfig(T=1.0), NormParams(0.5))


def test_three_dimensional_smoke(rng):
    g = TorusGrid(3, 16)
    u = random_state(g, rng, eps=0.2, decay=1.0)
    u = StateU.from_stack(g, 0.3 * u.stack(), 0.2)
    rec = run_pair(u, PressureLaw.ideal_gas(), SolverConfig(T=0.01), NormParams(0.5))
    assert all(np.isfinite(r["A_tau_u"]) for r in rec.rows)
    assert abs(rec.energy_drift) < 1e-3


def test_constant_law_fast_path_matches_general_path(grid2, rng):
    u = random_state(grid2, rng, eps=0.1)
    general = PressureLaw.from_coefficients([2], [3], radius=1e9)
    fast = PressureLaw.from_coefficients([2], [3])
    for advect in (False, True):
        a = rhs_compressible(u, general, advect).stack()
        b = rhs_compressible(u, fast, advect).stack()
        assert np.allclose(a, b, rtol=0, atol=1e-12 * np.max(np.abs(a)))
