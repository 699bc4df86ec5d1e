"""Poisson solves and the contraction scheme for nondivergence systems.

The system sum_lij a_klij(x) d_l d_j u_i = f_k with zero Dirichlet data is
solved by iterating

    Delta w_{m+1} = alpha(x) f + Delta w_m - alpha(x) (L w_m),    w_0 = 0,

which contracts in the W^{2,2}_{gamma0} seminorm with factor sqrt(1 - eps)
whenever the Cordes condition holds with margin eps.  On this lattice the
factor is an honest upper bound, not just an asymptotic one, because the
discrete Miranda-Talenti inequality holds exactly (see the grid module).
Each sweep is a component-wise Poisson solve by conjugate gradients on the
negated (positive definite) Dirichlet Laplacian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .cordes import CoefficientField, CordesReport
from .grid import Grid, NormKind, laplacian, norm, second_differences

__all__ = [
    "FixedPointResult",
    "H2Report",
    "apply_L",
    "fixed_point_solve",
    "poisson_solve",
    "verify_h2_estimate",
]

_CG_MAXITER = 10_000


def _cg_solve(op: LinearOperator, b: np.ndarray, tol: float) -> np.ndarray:
    try:
        x, info = cg(op, b, rtol=tol, atol=0.0, maxiter=_CG_MAXITER)
    except TypeError:  # older scipy spells the relative tolerance "tol"
        x, info = cg(op, b, tol=tol, atol=0.0, maxiter=_CG_MAXITER)
    if info != 0:
        raise RuntimeError(f"conjugate gradients failed to converge (info={info})")
    return x


def poisson_solve(grid: Grid, rhs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Solve Delta u = rhs componentwise with zero Dirichlet data.

    Conjugate gradients run on -Delta (symmetric positive definite); the
    returned iterate satisfies ||Delta u - rhs|| <= tol * ||rhs|| per
    component.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(rhs)):
        raise ValueError("rhs contains non-finite values")
    single = rhs.shape == grid.shape
    stacked = rhs[np.newaxis] if single else rhs
    if stacked.shape[1:] != grid.shape:
        raise ValueError(f"rhs spatial shape {rhs.shape} incompatible with {grid.shape}")

    npts = grid.num_points

    def neg_lap(flat: np.ndarray) -> np.ndarray:
        return -laplacian(grid, flat.reshape(grid.shape)).ravel()

    op = LinearOperator((npts, npts), matvec=neg_lap, dtype=float)
    out = np.empty_like(stacked, dtype=float)
    for k in range(stacked.shape[0]):
        b = -stacked[k].ravel()
        if not np.any(b):
            out[k] = 0.0
            continue
        out[k] = _cg_solve(op, b, tol).reshape(grid.shape)
    return out[0] if single else out


def apply_L(coeffs: CoefficientField, u: np.ndarray) -> np.ndarray:
    """Nondivergence action (L u)_k = sum_lij a_klij d_l d_j u_i."""
    grid = coeffs.grid
    expected = (grid.n,) + grid.shape
    if u.shape != expected:
        raise ValueError(f"field shape {u.shape} != {expected}")
    d2 = second_differences(grid, u)
    return np.einsum("klij...,ilj...->k...", coeffs.values, d2)


@dataclass(frozen=True)
class FixedPointResult:
    """Converged nondivergence solve with contraction diagnostics."""

    grid: Grid
    solution: np.ndarray
    iterations: int
    contraction_estimates: tuple[float, ...]
    residual: float
    increment: float
    tol: float


def fixed_point_solve(
    coeffs: CoefficientField,
    f: np.ndarray,
    report: CordesReport,
    tol: float = 1e-10,
) -> FixedPointResult:
    """Iterate the damped Poisson map until the increment drops below tol.

    The iteration cap is the contraction-predicted count
    ceil(log(tol/||w_1||) / log(sqrt(1-eps))) plus a fixed margin; hitting it
    signals the Cordes margin is too thin for the requested tolerance.
    """
    if not report.passed:
        raise ValueError("Cordes condition not satisfied; contraction not guaranteed")
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = coeffs.grid
    expected = (grid.n,) + grid.shape
    if f.shape != expected:
        raise ValueError(f"rhs shape {f.shape} != {expected}")

    alpha = report.alpha_values
    q = math.sqrt(1.0 - report.epsilon_used)
    cg_tol = min(1e-12, tol * 1e-2)
    f_l2 = norm(grid, f, NormKind.L2)

    def sweep(w: np.ndarray, lw: np.ndarray) -> np.ndarray:
        rhs = alpha * f + laplacian(grid, w) - alpha * lw
        return poisson_solve(grid, rhs, tol=cg_tol)

    w = np.zeros(expected)
    new = sweep(w, np.zeros_like(w))
    increment = norm(grid, new - w, NormKind.W22_GAMMA0)
    w = new
    iterations = 1
    ratios: list[float] = []
    if increment > 0.0 and tol < increment and q > 0.0:
        cap = math.ceil(math.log(tol / increment) / math.log(q)) + 20
    else:
        cap = 20
    cap = max(cap, 3)

    threshold = tol
    while True:
        while increment > threshold:
            if iterations >= cap:
                raise RuntimeError(
                    f"contraction iteration cap {cap} exceeded "
                    f"(increment {increment:.3e}, tol {threshold:.3e}); "
                    "Cordes margin too thin or lattice too coarse"
                )
            lw = apply_L(coeffs, w)
            new = sweep(w, lw)
            step = norm(grid, new - w, NormKind.W22_GAMMA0)
            if increment > 0.0:
                ratios.append(step / increment)
            increment = step
            w = new
            iterations += 1
        residual = norm(grid, apply_L(coeffs, w) - f, NormKind.L2)
        if residual <= max(tol, tol * f_l2) or iterations >= cap:
            break
        threshold /= 4.0

    return FixedPointResult(
        grid=grid,
        solution=w,
        iterations=iterations,
        contraction_estimates=tuple(ratios),
        residual=residual,
        increment=increment,
        tol=tol,
    )


@dataclass(frozen=True)
class H2Report:
    """Comparison of a solution's H2 norm against its Cordes bound."""

    h2_norm: float
    f_l2: float
    c_alpha: float
    bound: float
    margin: float
    slack: float
    passed: bool


def verify_h2_estimate(
    result: FixedPointResult,
    f: np.ndarray,
    c_alpha: float,
    slack: float = 0.05,
) -> H2Report:
    """Check ||u||_H2 <= c_alpha * ||f||_L2 up to relative slack."""
    grid = result.grid
    h2 = norm(grid, result.solution, NormKind.H2)
    f_l2 = norm(grid, f, NormKind.L2)
    bound = c_alpha * f_l2 * (1.0 + slack) + 1e-12
    return H2Report(
        h2_norm=h2,
        f_l2=f_l2,
        c_alpha=float(c_alpha),
        bound=bound,
        margin=bound - h2,
        slack=slack,
        passed=bool(h2 <= bound),
    )
