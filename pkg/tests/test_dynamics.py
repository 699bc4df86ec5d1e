"""Tests for the leapfrog integrator, forcing helpers, and energy balance."""

from __future__ import annotations

import numpy as np
import pytest

from elastostab import (
    Forcing,
    ProblemInstance,
    compute_u2,
    conic_combine,
    energy_balance,
    flux_divergence,
    make_grid,
    manufactured_forcing,
    measure_apriori,
    quadratic_model,
    saturating_model,
    simulate,
    zero_forcing,
)
from elastostab.dynamics import AprioriBounds
from elastostab.grid import laplacian


def _quadratic_material(c=1.0, rho=1.0):
    return conic_combine([quadratic_model(c)], [1.0], rho=rho)


def _sine_field(grid, modes, amplitudes):
    x = grid.coords()
    comps = []
    for mode, amp in zip(modes, amplitudes):
        field = amp * np.ones(grid.shape)
        for axis, m in enumerate(np.atleast_1d(mode)):
            field = field * np.sin(m * np.pi * x[axis])
        comps.append(field)
    return np.stack(comps)


# --- conservative flux divergence ---


def test_flux_divergence_linear_case_is_lattice_laplacian_1d():
    # grad_Y of c|Y|^2 is 2cY, and in one dimension the staggered
    # gradient/divergence pair composes to the standard 3-point stencil.
    grid = make_grid(d=1, n=2, resolution=17)
    material = _quadratic_material(c=0.75)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((2,) + grid.shape)
    np.testing.assert_allclose(
        flux_divergence(grid, material, u), 1.5 * laplacian(grid, u),
        rtol=1e-13, atol=1e-13,
    )


def test_flux_divergence_is_self_adjoint_for_quadratic():
    # The conservative form keeps the linearized operator symmetric in 2d too.
    grid = make_grid(d=2, n=2, resolution=9)
    material = _quadratic_material()
    rng = np.random.default_rng(1)
    u = rng.standard_normal((2,) + grid.shape)
    v = rng.standard_normal((2,) + grid.shape)
    lhs = float(np.sum(flux_divergence(grid, material, u) * v))
    rhs = float(np.sum(flux_divergence(grid, material, v) * u))
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert lhs < 0.0 or u is None  # negative semidefinite on nonzero fields


def test_compute_u2_linear_closed_form():
    grid = make_grid(d=1, n=2, resolution=15)
    material = _quadratic_material(c=0.6, rho=2.0)
    u0 = _sine_field(grid, [1, 2], [0.01, -0.02])
    f0 = _sine_field(grid, [2, 1], [0.3, 0.1])
    problem = ProblemInstance(
        grid=grid, material=material, u0=u0, u1=np.zeros_like(u0),
        forcing=Forcing(f=lambda t: f0, fdot=lambda t: np.zeros_like(f0)),
        T=0.1, dt=0.01,
    )
    expected = 1.2 * laplacian(grid, u0) / 2.0 + f0
    np.testing.assert_allclose(compute_u2(problem), expected, rtol=1e-13, atol=1e-14)


# --- leapfrog integration ---


def test_standing_wave_matches_leapfrog_dispersion():
    # For the linear 1d system the scheme propagates each sine mode as
    # cos(omega_lf t) with 2 cos(omega_lf dt) = 2 - dt^2 omega_h^2 exactly.
    grid = make_grid(d=1, n=2, resolution=16)
    c = 0.5
    material = _quadratic_material(c=c)
    m = 2
    x = grid.coords()[0]
    mode = np.sin(m * np.pi * x)
    u0 = 0.01 * np.stack([mode, -mode])
    problem = ProblemInstance(
        grid=grid, material=material, u0=u0, u1=np.zeros_like(u0),
        forcing=zero_forcing(grid), T=1.0, dt=0.25 * grid.h, cfl=0.5,
    )
    traj = simulate(problem)
    omega_h_sq = 2.0 * c * 4.0 / grid.h**2 * np.sin(m * np.pi * grid.h / 2.0) ** 2
    dt = traj.dt
    omega_lf = np.arccos(1.0 - 0.5 * dt**2 * omega_h_sq) / dt
    expected = np.cos(omega_lf * traj.times)[:, np.newaxis, np.newaxis] * u0
    np.testing.assert_allclose(traj.snapshots, expected, rtol=0, atol=1e-12)


def test_simulate_reproduces_manufactured_solution():
    grid = make_grid(d=1, n=2, resolution=32)
    material = conic_combine(
        [saturating_model(1.0, 0.2, 1.0)], [1.0], rho=1.0
    )

    def u_exact(t, pts):
        base = np.sin(np.pi * pts[0])
        return 0.01 * np.cos(t) * np.stack([base, 2.0 * base])

    def u_tt(t, pts):
        return -u_exact(t, pts)

    forcing = manufactured_forcing(material, grid, u_exact, u_tt, mode="discrete")
    u0 = u_exact(0.0, grid.coords())
    problem = ProblemInstance(
        grid=grid, material=material, u0=u0, u1=np.zeros_like(u0),
        forcing=forcing, T=0.5, dt=0.25 * grid.h / np.sqrt(material.mu),
    )
    traj = simulate(problem)
    final = u_exact(problem.T, grid.coords())
    err = float(np.max(np.abs(traj.snapshots[-1] - final)))
    assert err <= 1e-5 * float(np.max(np.abs(u0)))


def test_simulate_guard_catches_unstable_step():
    # Past the leapfrog stability limit the highest mode grows geometrically.
    grid = make_grid(d=1, n=2, resolution=16)
    material = _quadratic_material(c=1.0)
    x = grid.coords()[0]
    mode = np.sin(grid.resolution * np.pi * x)
    u0 = 0.01 * np.stack([mode, mode])
    problem = ProblemInstance(
        grid=grid, material=material, u0=u0, u1=np.zeros_like(u0),
        forcing=zero_forcing(grid), T=2.0, dt=1.2 * grid.h / np.sqrt(2.0), cfl=1.2,
    )
    with pytest.raises(RuntimeError, match="blew up"):
        simulate(problem)


def test_problem_instance_validations():
    grid = make_grid(d=1, n=2, resolution=9)
    material = _quadratic_material()
    u0 = np.zeros((2,) + grid.shape)
    good = dict(grid=grid, material=material, u0=u0, u1=u0,
                forcing=zero_forcing(grid), T=1.0, dt=0.01)
    with pytest.raises(ValueError, match="u0 shape"):
        ProblemInstance(**{**good, "u0": np.zeros((1,) + grid.shape)})
    with pytest.raises(ValueError, match="non-finite"):
        ProblemInstance(**{**good, "u1": np.full_like(u0, np.inf)})
    with pytest.raises(ValueError, match="positive"):
        ProblemInstance(**{**good, "T": 0.0})
    with pytest.raises(ValueError, match="CFL"):
        ProblemInstance(**{**good, "dt": grid.h})


def test_manufactured_forcing_rejects_nonzero_trace():
    grid = make_grid(d=1, n=2, resolution=9)
    material = _quadratic_material()

    def u_exact(t, pts):
        return np.stack([np.cos(np.pi * pts[0]), np.cos(np.pi * pts[0])])

    with pytest.raises(ValueError, match="boundary trace"):
        manufactured_forcing(material, grid, u_exact, u_exact)


def test_manufactured_forcing_rejects_unknown_mode():
    grid = make_grid(d=1, n=2, resolution=9)
    material = _quadratic_material()

    def u_exact(t, pts):
        return np.zeros((2,) + pts.shape[1:])

    with pytest.raises(ValueError, match="unknown mode"):
        manufactured_forcing(material, grid, u_exact, u_exact, mode="spectral")


# --- forcing containers ---


def test_forcing_sample_carries_rates():
    grid = make_grid(d=1, n=2, resolution=9)
    base = _sine_field(grid, [1, 2], [1.0, 0.5])
    forcing = Forcing(
        f=lambda t: np.cos(t) * base, fdot=lambda t: -np.sin(t) * base
    )
    times = np.linspace(0.0, 1.0, 5)
    series = forcing.sample(grid, times)
    assert series.values.shape == (5, 2) + grid.shape
    assert series.rates is not None
    np.testing.assert_allclose(series.rates[3], -np.sin(times[3]) * base, rtol=1e-15)


def test_zero_forcing_has_zero_rates():
    grid = make_grid(d=2, n=1, resolution=6)
    series = zero_forcing(grid).sample(grid, np.linspace(0.0, 1.0, 3))
    np.testing.assert_array_equal(series.values, 0.0)
    np.testing.assert_array_equal(series.rates, 0.0)


# --- measured regularity magnitudes ---


def test_measure_apriori_pair_takes_maxima():
    grid = make_grid(d=1, n=2, resolution=12)
    material = _quadratic_material()
    u0a = _sine_field(grid, [1, 2], [0.01, 0.01])
    u0b = 2.0 * u0a
    kwargs = dict(grid=grid, material=material, forcing=zero_forcing(grid),
                  T=0.2, dt=0.2 * grid.h / np.sqrt(2.0))
    traj_a = simulate(ProblemInstance(u0=u0a, u1=np.zeros_like(u0a), **kwargs))
    traj_b = simulate(ProblemInstance(u0=u0b, u1=np.zeros_like(u0b), **kwargs))
    merged = measure_apriori(traj_a, traj_b)
    single_b = measure_apriori(traj_b)
    assert merged == single_b  # the doubled run dominates every magnitude
    assert merged.m3 >= measure_apriori(traj_a).m3


def test_measure_apriori_rejects_mismatched_axes():
    grid = make_grid(d=1, n=2, resolution=12)
    material = _quadratic_material()
    u0 = _sine_field(grid, [1, 2], [0.01, 0.01])
    kwargs = dict(grid=grid, material=material, u0=u0, u1=np.zeros_like(u0),
                  forcing=zero_forcing(grid))
    traj_a = simulate(ProblemInstance(T=0.2, dt=0.2 * grid.h / np.sqrt(2.0), **kwargs))
    traj_b = simulate(ProblemInstance(T=0.4, dt=0.2 * grid.h / np.sqrt(2.0), **kwargs))
    with pytest.raises(ValueError, match="mismatched"):
        measure_apriori(traj_a, traj_b)


def test_apriori_bounds_reject_negative_entries():
    with pytest.raises(ValueError, match="m2"):
        AprioriBounds(m0=0.0, m1=0.0, m2=-1.0, m3=0.0)


# --- energy balance ---


def test_energy_balance_unforced_run_passes_everywhere():
    grid = make_grid(d=1, n=2, resolution=32)
    material = conic_combine(
        [saturating_model(1.0, 0.2, 1.0), quadratic_model(0.5)], [1.0, 0.5], rho=1.0
    )
    u0 = _sine_field(grid, [1, 2], [0.01, -0.005])
    u1 = _sine_field(grid, [2, 1], [0.004, 0.006])
    problem = ProblemInstance(
        grid=grid, material=material, u0=u0, u1=u1, forcing=zero_forcing(grid),
        T=0.5, dt=0.25 * grid.h / np.sqrt(material.mu),
    )
    report = energy_balance(simulate(problem))
    assert report.passed
    assert np.all(report.margins >= 0.0)
    # the conserved energy drifts only at the time-discretization level
    drift = float(np.max(np.abs(report.energy - report.energy[0])))
    assert drift <= 1e-3 * report.energy[0]


def test_energy_balance_forced_run_passes():
    grid = make_grid(d=1, n=2, resolution=24)
    material = _quadratic_material()
    u0 = _sine_field(grid, [1, 2], [0.01, 0.01])
    base = _sine_field(grid, [1, 1], [0.05, 0.05])
    forcing = Forcing(f=lambda t: np.cos(t) * base,
                      fdot=lambda t: -np.sin(t) * base)
    problem = ProblemInstance(
        grid=grid, material=material, u0=u0, u1=np.zeros_like(u0),
        forcing=forcing, T=1.0, dt=0.25 * grid.h / np.sqrt(2.0),
    )
    report = energy_balance(simulate(problem))
    assert report.passed


def test_energy_balance_needs_attached_problem():
    grid = make_grid(d=1, n=2, resolution=12)
    material = _quadratic_material()
    u0 = _sine_field(grid, [1, 2], [0.01, 0.01])
    problem = ProblemInstance(
        grid=grid, material=material, u0=u0, u1=np.zeros_like(u0),
        forcing=zero_forcing(grid), T=0.2, dt=0.2 * grid.h / np.sqrt(2.0),
    )
    traj = simulate(problem)
    import dataclasses

    detached = dataclasses.replace(traj, problem=None)
    with pytest.raises(ValueError, match="problem"):
        energy_balance(detached)
