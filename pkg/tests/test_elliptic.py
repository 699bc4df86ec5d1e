"""Tests for the Poisson solver and the nondivergence contraction scheme."""

from __future__ import annotations

import numpy as np
import pytest

from elastostab import (
    apply_L,
    assemble_coefficients,
    check_cordes,
    conic_combine,
    cordes_constants,
    fixed_point_solve,
    make_grid,
    poisson_solve,
    quadratic_model,
    saturating_model,
    verify_h2_estimate,
)
from elastostab.grid import NormKind, estimate_khat, laplacian, norm


def _mixed_material():
    return conic_combine(
        [saturating_model(1.0, 0.2, 1.0), quadratic_model(0.5)], [1.0, 0.5], rho=1.0
    )


def _smooth_state(grid, amplitude=0.01):
    x = grid.coords()
    comps = [np.sin((j + 1) * np.pi * x[0]) * np.sin(np.pi * x[-1]) for j in range(grid.d)]
    return amplitude * np.stack(comps)[np.newaxis] * np.ones((grid.n, 1) + (1,) * grid.d)


# --- Poisson solves ---


def test_poisson_round_trip_random_rhs():
    grid = make_grid(d=2, n=1, resolution=15)
    rng = np.random.default_rng(0)
    rhs = rng.standard_normal((1,) + grid.shape)
    u = poisson_solve(grid, rhs, tol=1e-12)
    residual = norm(grid, laplacian(grid, u[0]) - rhs[0], NormKind.L2)
    assert residual <= 1e-11 * norm(grid, rhs, NormKind.L2)


def test_poisson_single_component_shape():
    grid = make_grid(d=2, n=1, resolution=9)
    rng = np.random.default_rng(1)
    rhs = rng.standard_normal(grid.shape)
    u = poisson_solve(grid, rhs)
    assert u.shape == grid.shape


def test_poisson_eigenmode_is_exact():
    # sin(m pi x) diagonalizes the lattice Laplacian with -4 sin^2(m pi h/2)/h^2.
    grid = make_grid(d=1, n=2, resolution=16)
    x = grid.coords()[0]
    for m in (1, 3):
        mode = np.sin(m * np.pi * x)
        lam = 4.0 / grid.h**2 * np.sin(m * np.pi * grid.h / 2.0) ** 2
        u = poisson_solve(grid, -lam * mode, tol=1e-13)
        np.testing.assert_allclose(u, mode, rtol=0, atol=1e-11)


def test_poisson_zero_rhs_returns_zero():
    grid = make_grid(d=1, n=2, resolution=9)
    u = poisson_solve(grid, np.zeros((2,) + grid.shape))
    np.testing.assert_array_equal(u, 0.0)


def test_poisson_validations():
    grid = make_grid(d=1, n=2, resolution=9)
    with pytest.raises(ValueError, match="tol"):
        poisson_solve(grid, np.zeros(grid.shape), tol=0.0)
    with pytest.raises(ValueError, match="non-finite"):
        poisson_solve(grid, np.full(grid.shape, np.nan))
    with pytest.raises(ValueError, match="incompatible"):
        poisson_solve(grid, np.zeros((3, 4)))


# --- nondivergence action ---


def test_apply_L_isotropic_matches_laplacian():
    # For C = c|Y|^2 the coefficients are 2c * identity, so L = 2c * Laplacian.
    grid = make_grid(d=2, n=1, resolution=11)
    material = conic_combine([quadratic_model(0.75)], [1.0], rho=1.0)
    coeffs = assemble_coefficients(material, grid, np.zeros((1, 2) + grid.shape))
    rng = np.random.default_rng(2)
    u = rng.standard_normal((1,) + grid.shape)
    np.testing.assert_allclose(
        apply_L(coeffs, u), 1.5 * laplacian(grid, u), rtol=1e-13, atol=1e-13
    )


def test_apply_L_validates_shape():
    grid = make_grid(d=2, n=1, resolution=8)
    material = conic_combine([quadratic_model(1.0)], [1.0], rho=1.0)
    coeffs = assemble_coefficients(material, grid, np.zeros((1, 2) + grid.shape))
    with pytest.raises(ValueError, match="field shape"):
        apply_L(coeffs, np.zeros((2,) + grid.shape))


# --- contraction scheme ---


def test_fixed_point_isotropic_converges_immediately():
    # With identity-scaled coefficients the damped map is exact in one sweep.
    grid = make_grid(d=2, n=1, resolution=11)
    material = conic_combine([quadratic_model(1.0)], [1.0], rho=1.0)
    coeffs = assemble_coefficients(material, grid, np.zeros((1, 2) + grid.shape))
    report = check_cordes(coeffs, material)
    rng = np.random.default_rng(3)
    f = rng.standard_normal((1,) + grid.shape)
    result = fixed_point_solve(coeffs, f, report, tol=1e-10)
    assert result.iterations <= 3
    lhs = apply_L(coeffs, result.solution)
    assert norm(grid, lhs - f, NormKind.L2) <= 1e-9 * norm(grid, f, NormKind.L2)


def test_fixed_point_solve_mixed_material():
    grid = make_grid(d=2, n=1, resolution=15)
    material = _mixed_material()
    coeffs = assemble_coefficients(material, grid, _smooth_state(grid))
    report = check_cordes(coeffs, material)
    rng = np.random.default_rng(4)
    f = rng.standard_normal((1,) + grid.shape)
    f /= norm(grid, f, NormKind.L2)
    result = fixed_point_solve(coeffs, f, report, tol=1e-10)
    assert result.residual <= 1e-10
    q = np.sqrt(1.0 - report.epsilon_used)
    assert all(r <= q + 0.05 for r in result.contraction_estimates)
    lhs = apply_L(coeffs, result.solution)
    np.testing.assert_allclose(lhs, f, rtol=0, atol=1e-9)


def test_fixed_point_matches_dense_solve():
    # Assemble the full lattice operator column by column and invert directly.
    grid = make_grid(d=1, n=2, resolution=9)
    material = _mixed_material()
    coeffs = assemble_coefficients(material, grid, _smooth_state(grid))
    report = check_cordes(coeffs, material)
    size = grid.n * grid.num_points
    dense = np.empty((size, size))
    for col in range(size):
        e = np.zeros(size)
        e[col] = 1.0
        dense[:, col] = apply_L(coeffs, e.reshape((grid.n,) + grid.shape)).ravel()
    rng = np.random.default_rng(5)
    f = rng.standard_normal((grid.n,) + grid.shape)
    expected = np.linalg.solve(dense, f.ravel()).reshape(f.shape)
    result = fixed_point_solve(coeffs, f, report, tol=1e-12)
    np.testing.assert_allclose(result.solution, expected, rtol=1e-8, atol=1e-12)


def test_fixed_point_requires_passing_report():
    grid = make_grid(d=2, n=1, resolution=8)
    material = conic_combine([quadratic_model(1.0)], [1.0], rho=1.0)
    coeffs = assemble_coefficients(material, grid, np.zeros((1, 2) + grid.shape))
    stiff = conic_combine([quadratic_model(5.0)], [1.0], rho=1.0)
    failed = check_cordes(coeffs, stiff)
    assert not failed.passed
    with pytest.raises(ValueError, match="Cordes"):
        fixed_point_solve(coeffs, np.zeros((1,) + grid.shape), failed)


def test_fixed_point_validates_rhs_shape_and_tol():
    grid = make_grid(d=2, n=1, resolution=8)
    material = conic_combine([quadratic_model(1.0)], [1.0], rho=1.0)
    coeffs = assemble_coefficients(material, grid, np.zeros((1, 2) + grid.shape))
    report = check_cordes(coeffs, material)
    with pytest.raises(ValueError, match="rhs shape"):
        fixed_point_solve(coeffs, np.zeros(grid.shape), report)
    with pytest.raises(ValueError, match="tol"):
        fixed_point_solve(coeffs, np.zeros((1,) + grid.shape), report, tol=-1.0)


# --- H2 estimate ---


def test_h2_estimate_holds_with_certified_constant():
    grid = make_grid(d=2, n=1, resolution=15)
    material = _mixed_material()
    coeffs = assemble_coefficients(material, grid, _smooth_state(grid))
    report = cordes_constants(
        check_cordes(coeffs, material), estimate_khat(grid), material
    )
    rng = np.random.default_rng(6)
    f = rng.standard_normal((1,) + grid.shape)
    result = fixed_point_solve(coeffs, f, report, tol=1e-10)
    h2_report = verify_h2_estimate(result, f, report.c_alpha)
    assert h2_report.passed
    assert h2_report.margin >= 0.0
    assert h2_report.h2_norm == pytest.approx(
        norm(grid, result.solution, NormKind.H2), rel=1e-15
    )


def test_h2_estimate_fails_honestly_with_tiny_constant():
    grid = make_grid(d=2, n=1, resolution=11)
    material = conic_combine([quadratic_model(1.0)], [1.0], rho=1.0)
    coeffs = assemble_coefficients(material, grid, np.zeros((1, 2) + grid.shape))
    report = check_cordes(coeffs, material)
    rng = np.random.default_rng(7)
    f = rng.standard_normal((1,) + grid.shape)
    result = fixed_point_solve(coeffs, f, report, tol=1e-10)
    h2_report = verify_h2_estimate(result, f, c_alpha=1e-9)
    assert not h2_report.passed
    assert h2_report.margin < 0.0
