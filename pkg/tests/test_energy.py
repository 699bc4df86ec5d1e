"""Stored-energy models: derivative stacks, bound tables, conic combination."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastostab.energy import (
    BoundsTable,
    conic_combine,
    finite_diff_audit,
    quadratic_model,
    saturating_model,
    verify_bounds,
)


def test_quadratic_closed_form_values():
    model = quadratic_model(1.5)
    y = np.array([[0.3], [-0.7]])  # n=2, d=1
    x = np.array([[0.5]])
    assert model.energy(x, y) == pytest.approx(1.5 * (0.3**2 + 0.7**2))
    np.testing.assert_allclose(model.grad_y(x, y), 2 * 1.5 * y)
    assert model.bounds.kappa1 == pytest.approx(3.0)
    assert model.bounds.mu1 == pytest.approx(3.0)
    assert model.bounds.mu2 == 0.0
    assert model.bounds.mu4 == 0.0  # constant coefficient: no x dependence


def test_quadratic_with_spatial_coefficient():
    model = quadratic_model(lambda x: 1.0 + 0.5 * x[0], d=1)
    assert model.bounds.kappa1 == pytest.approx(2.0, rel=1e-6)
    assert model.bounds.mu1 == pytest.approx(3.0, rel=1e-6)
    assert model.bounds.mu5 > 0.0  # gradient of c feeds the mixed bounds
    with pytest.raises(ValueError):
        quadratic_model(lambda x: 1.0 + x[0])  # callable needs d


def test_saturating_closed_form_bounds():
    a, b, s = 1.0, 0.5, 2.0
    model = saturating_model(a, b, s)
    assert model.bounds.kappa0 == pytest.approx(a)
    assert model.bounds.mu0 == pytest.approx(a + b)
    assert model.bounds.kappa1 == pytest.approx(2 * a - b / 2)
    assert model.bounds.mu1 == pytest.approx(2 * a + 2 * b)
    assert model.bounds.mu2 > 0.0
    assert model.bounds.mu3 > 0.0
    assert model.bounds.mu4 == 0.0  # spatially homogeneous
    with pytest.raises(ValueError):
        saturating_model(a=0.1, b=0.5, s=1.0)  # needs b < 4a


def test_energy_value_saturating():
    a, b, s = 1.0, 0.5, 1.0
    model = saturating_model(a, b, s)
    y = np.array([[0.5], [0.5]])
    r = float(np.sum(y**2)) / s**2
    want = a * np.sum(y**2) + b * s**2 * r / (1 + r)
    x = np.zeros((1, 1))
    assert model.energy(x, y) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("factory", [
    lambda: quadratic_model(0.8),
    lambda: quadratic_model(lambda x: 1.0 + 0.3 * np.sin(np.pi * x[0]), d=2),
    lambda: saturating_model(1.0, 0.5, 1.0),
])
def test_finite_difference_audit(factory):
    report = finite_diff_audit(factory(), samples=20, seed=3)
    assert report.ok, report


@pytest.mark.parametrize("factory", [
    lambda: quadratic_model(1.0),
    lambda: saturating_model(1.2, 0.9, 0.7),
])
def test_bound_tables_hold_on_samples(factory):
    report = verify_bounds(factory(), samples=300, seed=4)
    assert report.ok, report


def test_conic_combine_validation():
    quad = quadratic_model(1.0)
    with pytest.raises(ValueError):
        conic_combine([quad], [-0.5], rho=1.0)
    with pytest.raises(ValueError):
        conic_combine([quad], [0.0], rho=1.0)  # needs one alpha*kappa1 > 0
    with pytest.raises(ValueError):
        conic_combine([quad], [1.0, 2.0], rho=1.0)
    with pytest.raises(ValueError):
        conic_combine([quad], [1.0], rho=-1.0)


def test_conic_material_aggregates():
    quad = quadratic_model(1.0)
    sat = saturating_model(1.0, 0.4, 1.0)
    material = conic_combine([sat, quad], [2.0, 0.5], rho=1.0)
    assert material.kappa == pytest.approx(2 * (2 - 0.2) + 0.5 * 2)
    assert material.mu == pytest.approx(2 * (2 + 0.8) + 0.5 * 2)
    y = np.array([[0.2], [-0.1]])
    x = np.array([[0.5]])
    want = 2.0 * sat.energy(x, y) + 0.5 * quad.energy(x, y)
    assert material.aggregate_energy(x, y) == pytest.approx(want, rel=1e-12)
    grad = material.aggregate_grad(x, y)
    want_grad = 2.0 * sat.grad_y(x, y) + 0.5 * quad.grad_y(x, y)
    np.testing.assert_allclose(grad, want_grad, rtol=1e-12)

    doubled = material.with_alpha(2 * material.alpha)
    assert doubled.kappa == pytest.approx(2 * material.kappa)
    assert doubled.mu == pytest.approx(2 * material.mu)


def test_variable_density():
    quad = quadratic_model(1.0)
    material = conic_combine([quad], [1.0], rho=lambda x: 1.0 + x[0])
    grid_like = np.linspace(0.1, 0.9, 9)[None, :]

    class _G:
        def coords(self):
            return grid_like

    rho = material.rho_on(_G())
    np.testing.assert_allclose(rho, 1.0 + grid_like[0])
    assert material.rho_min == pytest.approx(1.0, abs=1e-6)
    assert material.rho_max == pytest.approx(2.0, abs=1e-6)


def test_bounds_table_rejects_inconsistent_entries():
    with pytest.raises(ValueError):
        BoundsTable(kappa0=1.0, mu0=0.5, kappa1=1.0, mu1=1.0,
                    mu2=0.0, mu3=0.0, mu4=0.0, mu5=0.0, mu6=0.0, mu7=0.0)
    with pytest.raises(ValueError):
        BoundsTable(kappa0=1.0, mu0=1.0, kappa1=-1.0, mu1=1.0,
                    mu2=0.0, mu3=0.0, mu4=0.0, mu5=0.0, mu6=0.0, mu7=0.0)


@given(
    seed=st.integers(min_value=0, max_value=2**31 - 1),
    a=st.floats(min_value=0.5, max_value=2.0),
    b=st.floats(min_value=0.0, max_value=1.5),
)
@settings(max_examples=30, deadline=None)
def test_gradient_monotonicity_bounds(seed, a, b):
    """kappa1 |Y-Z|^2 <= <grad(Y)-grad(Z), Y-Z> <= mu1 |Y-Z|^2 on samples."""
    model = saturating_model(a, b, 1.0)
    rng = np.random.default_rng(seed)
    y = rng.uniform(-2.0, 2.0, size=(2, 1))
    z = rng.uniform(-2.0, 2.0, size=(2, 1))
    x = np.zeros((1, 1))
    inner = float(np.sum((model.grad_y(x, y) - model.grad_y(x, z)) * (y - z)))
    gap = float(np.sum((y - z) ** 2))
    assert inner >= model.bounds.kappa1 * gap - 1e-9 * (1 + gap)
    assert inner <= model.bounds.mu1 * gap + 1e-9 * (1 + gap)
