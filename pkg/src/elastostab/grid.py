"""Rectangular-domain discretization on the unit box.

Fields live at interior lattice points of Omega = (0,1)^d with homogeneous
Dirichlet boundary values; every stencil uses ghost-zero extension, which
matches the boundary data exactly.  A displacement field has n components;
arrays are laid out with component axes first and the d spatial axes last:

    scalar field  (*spatial,)
    vector field  (n, *spatial)
    matrix field  (n, d, *spatial)

Mixed second differences are composed centered first differences.  With that
choice the quadratic form sum_{l,j} ||D_{lj} f||^2 is dominated by ||Delta_h f||^2
for every zero-boundary lattice field: in d=1 the two coincide, and in d=2,
writing A = -E2 (1D Dirichlet second difference) and E1 (centered first),
the neighbor-gap inequality ((a+b)/2)^2 <= (a^2+b^2)/2 gives A >= E1^T E1 in the
semidefinite order, hence A (x) A >= (E1^T E1) (x) (E1^T E1) and

    ||Delta_h f||^2 - sum ||D_{lj} f||^2 = 2 <f, [A(x)A - (E1^T E1)(x)(E1^T E1)] f> >= 0.

That discrete Miranda-Talenti inequality is what makes the contraction solver's
per-iteration ratio provably at most sqrt(1-eps) on these grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

__all__ = [
    "Grid",
    "NormKind",
    "TimeSeries",
    "MirandaTalentiReport",
    "make_grid",
    "scalar_field",
    "vector_field",
    "first_difference",
    "second_difference",
    "jacobian",
    "divergence",
    "laplacian",
    "second_differences",
    "time_derivative",
    "time_second_derivative",
    "norm",
    "inner_l2",
    "estimate_khat",
    "check_miranda_talenti",
]

BOUNDARY_TOL = 1e-10

_trapz = getattr(np, "trapezoid", None) or np.trapz


class NormKind(str, Enum):
    """Discrete norms used by the estimates."""

    L2 = "L2"
    L2_RHO = "L2_rho"
    H1 = "H1"
    H2 = "H2"
    W22_GAMMA0 = "W22_gamma0"
    FROBENIUS_POINTWISE = "Frobenius_pointwise"
    W11_TIME = "W11_time"


@dataclass(frozen=True)
class Grid:
    """Uniform lattice of interior points on the unit box (0,1)^d.

    Parameters
    ----------
    d : int
        Spatial dimension, 1 or 2.
    n : int
        Number of displacement components, 1 or 2, with n*d >= 2.
    resolution : int
        Interior points per axis (>= 3); spacing h = 1/(resolution+1).
    """

    d: int
    n: int
    resolution: int

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        if self.n not in (1, 2):
            raise ValueError(f"n must be 1 or 2, got {self.n}")
        if self.n * self.d < 2:
            raise ValueError(
                f"n*d must be >= 2 (got n={self.n}, d={self.d}); "
                "the dimension condition is ill-formed below that"
            )
        if self.resolution < 3:
            raise ValueError(f"resolution must be >= 3, got {self.resolution}")

    @property
    def h(self) -> float:
        return 1.0 / (self.resolution + 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.resolution,) * self.d

    @property
    def vol(self) -> float:
        return 1.0

    @property
    def num_points(self) -> int:
        return self.resolution**self.d

    @property
    def axis(self) -> np.ndarray:
        """Interior coordinates along one axis: (i+1)*h for i = 0..res-1."""
        return self.h * np.arange(1, self.resolution + 1)

    def coords(self) -> np.ndarray:
        """Coordinates of every interior point, shape (d, *shape)."""
        if self.d == 1:
            return self.axis[np.newaxis, :]
        x, y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([x, y])

    def quadrature_weight(self) -> float:
        return self.h**self.d


def make_grid(d: int, n: int, resolution: int) -> Grid:
    """Build a grid; rejects n*d < 2 and resolution < 3."""
    return Grid(d=d, n=n, resolution=resolution)


def _boundary_points(grid: Grid, samples_per_face: int = 33) -> np.ndarray:
    """Sample points on the boundary of the unit box, shape (d, m)."""
    if grid.d == 1:
        return np.array([[0.0, 1.0]])
    t = np.linspace(0.0, 1.0, samples_per_face)
    faces = [
        np.stack([np.zeros_like(t), t]),
        np.stack([np.ones_like(t), t]),
        np.stack([t, np.zeros_like(t)]),
        np.stack([t, np.ones_like(t)]),
    ]
    return np.concatenate(faces, axis=1)


def _from_callable(grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate a profile on the lattice after checking its boundary trace.

    Profiles must vanish on the boundary of the unit box; a profile like
    u(x) = x is rejected here (not by the difference operators, which would
    silently pair it with ghost zeros).
    """
    bdry = np.asarray(fn(_boundary_points(grid)), dtype=float)
    worst = float(np.max(np.abs(bdry))) if bdry.size else 0.0
    if worst > BOUNDARY_TOL:
        raise ValueError(
            f"profile violates homogeneous Dirichlet data: |value| up to "
            f"{worst:.3e} on the boundary"
        )
    return np.asarray(fn(grid.coords()), dtype=float)


def scalar_field(grid: Grid, values: np.ndarray | float | Callable) -> np.ndarray:
    """Validate/construct a scalar field, shape (*grid.shape,)."""
    if callable(values):
        out = _from_callable(grid, values)
    elif np.isscalar(values):
        out = np.full(grid.shape, float(values))
    else:
        out = np.asarray(values, dtype=float)
    if out.shape != grid.shape:
        raise ValueError(f"scalar field shape {out.shape} != {grid.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("scalar field contains non-finite values")
    return out


def vector_field(grid: Grid, values: np.ndarray | Callable) -> np.ndarray:
    """Validate/construct a vector field, shape (n, *grid.shape)."""
    if callable(values):
        out = _from_callable(grid, values)
    else:
        out = np.asarray(values, dtype=float)
    expected = (grid.n, *grid.shape)
    if out.shape != expected:
        raise ValueError(f"vector field shape {out.shape} != {expected}")
    if not np.all(np.isfinite(out)):
        raise ValueError("vector field contains non-finite values")
    return out


def _shift(values: np.ndarray, spatial_axis: int, d: int, step: int) -> np.ndarray:
    """Ghost-zero shift along a spatial axis: out[i] = values[i+step]."""
    axis = values.ndim - d + spatial_axis
    out = np.zeros_like(values)
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if step == 1:
        src[axis] = slice(1, None)
        dst[axis] = slice(None, -1)
    elif step == -1:
        src[axis] = slice(None, -1)
        dst[axis] = slice(1, None)
    else:
        raise ValueError(f"step must be +-1, got {step}")
    out[tuple(dst)] = values[tuple(src)]
    return out


def first_difference(grid: Grid, values: np.ndarray, spatial_axis: int) -> np.ndarray:
    """Centered first difference along one axis with ghost-zero boundary."""
    plus = _shift(values, spatial_axis, grid.d, +1)
    minus = _shift(values, spatial_axis, grid.d, -1)
    return (plus - minus) / (2.0 * grid.h)


def second_difference(grid: Grid, values: np.ndarray, spatial_axis: int) -> np.ndarray:
    """Centered second difference along one axis with ghost-zero boundary."""
    plus = _shift(values, spatial_axis, grid.d, +1)
    minus = _shift(values, spatial_axis, grid.d, -1)
    return (plus - 2.0 * values + minus) / (grid.h**2)


def jacobian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """(J u)[k, l] = centered d u_k / d x_l; shape (n, d, *spatial)."""
    return np.stack([first_difference(grid, u, ax) for ax in range(grid.d)], axis=1)


def divergence(grid: Grid, p: np.ndarray) -> np.ndarray:
    """(div P)[k] = sum_l centered d P[k, l] / d x_l; shape (n, *spatial)."""
    cols = [first_difference(grid, p[:, ax], ax) for ax in range(grid.d)]
    return np.sum(cols, axis=0)


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Componentwise sum of pure centered second differences."""
    return np.sum([second_difference(grid, f, ax) for ax in range(grid.d)], axis=0)


def second_differences(grid: Grid, u: np.ndarray) -> np.ndarray:
    """All second differences D[..., l, j] = d_l d_j u, shape (..., d, d, *spatial).

    Diagonal entries use the pure second-difference stencil; off-diagonal
    entries compose centered first differences (see module docstring).  Works
    for any leading component axes; for a vector field (n, *spatial) the
    result is indexed D[k, l, j].
    """
    d = grid.d
    firsts = [first_difference(grid, u, ax) for ax in range(d)]
    insert_at = u.ndim - d
    rows = []
    for ell in range(d):
        row = []
        for j in range(d):
            if ell == j:
                row.append(second_difference(grid, u, ell))
            else:
                row.append(first_difference(grid, firsts[j], ell))
        rows.append(np.stack(row, axis=insert_at))
    return np.stack(rows, axis=insert_at)


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled time series of fields, values shape (m+1, ...).

    When the sampled quantity has a known time derivative, pass it as rates
    (same shape); norms that need rates then use it instead of differencing
    the samples.
    """

    times: np.ndarray
    values: np.ndarray
    rates: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.times) != self.values.shape[0]:
            raise ValueError("times and values lengths differ")
        if len(self.times) < 2:
            raise ValueError("time series needs at least two samples")
        if self.rates is not None and self.rates.shape != self.values.shape:
            raise ValueError("rates shape differs from values shape")


def time_derivative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Centered time differences, second-order one-sided at the endpoints."""
    m = len(times) - 1
    if m < 2:
        raise ValueError("need at least three time samples for derivatives")
    dt = times[1] - times[0]
    out = np.empty_like(values)
    out[1:m] = (values[2:] - values[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
    out[m] = (3.0 * values[m] - 4.0 * values[m - 1] + values[m - 2]) / (2.0 * dt)
    return out


def time_second_derivative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Centered second time differences, second-order one-sided at the ends."""
    m = len(times) - 1
    if m < 3:
        raise ValueError("need at least four time samples for second derivatives")
    dt = times[1] - times[0]
    out = np.empty_like(values)
    out[1:m] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / dt**2
    out[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / dt**2
    out[m] = (
        2.0 * values[m] - 5.0 * values[m - 1] + 4.0 * values[m - 2] - values[m - 3]
    ) / dt**2
    return out


def _quad_l2(grid: Grid, values: np.ndarray) -> float:
    """Rectangle-rule L2 norm over all component axes."""
    return float(np.sqrt(grid.quadrature_weight() * np.sum(values**2)))


def inner_l2(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Rectangle-rule L2 inner product over all component axes."""
    return float(grid.quadrature_weight() * np.sum(a * b))


def norm(
    grid: Grid,
    f: np.ndarray | TimeSeries,
    kind: NormKind = NormKind.L2,
    rho: np.ndarray | None = None,
) -> float:
    """Evaluate one of the discrete norms.

    L2_rho is the weighted-measure norm (integral of rho*|f|^2)^(1/2), the form
    under which the kinetic-energy identities hold.  H1/H2/W22_gamma0 treat f
    as a vector field (n, *spatial).  Frobenius_pointwise returns the lattice
    sup of the pointwise Frobenius norm over all leading component axes.
    W11_time takes a TimeSeries and returns trapz ||f(t)||_L2 + trapz ||f'(t)||_L2
    with f' by centered time differences.
    """
    kind = NormKind(kind)
    if kind == NormKind.W11_TIME:
        if not isinstance(f, TimeSeries):
            raise TypeError("W11_time norm requires a TimeSeries")
        value_norms = np.array([_quad_l2(grid, v) for v in f.values])
        dvalues = f.rates if f.rates is not None else time_derivative(f.times, f.values)
        rate_norms = np.array([_quad_l2(grid, v) for v in dvalues])
        return float(_trapz(value_norms, f.times) + _trapz(rate_norms, f.times))
    if isinstance(f, TimeSeries):
        raise TypeError(f"{kind.value} norm does not accept a TimeSeries")
    values = np.asarray(f, dtype=float)
    if kind == NormKind.L2:
        return _quad_l2(grid, values)
    if kind == NormKind.L2_RHO:
        if rho is None:
            raise ValueError("L2_rho norm requires rho")
        return float(
            np.sqrt(grid.quadrature_weight() * np.sum(rho * np.sum(
                values.reshape((-1,) + grid.shape) ** 2, axis=0)))
        )
    if kind == NormKind.FROBENIUS_POINTWISE:
        flat = values.reshape((-1,) + grid.shape)
        return float(np.sqrt(np.max(np.sum(flat**2, axis=0))))
    flat = values.reshape((-1,) + grid.shape)
    if kind == NormKind.H1:
        return float(np.sqrt(_quad_l2(grid, flat) ** 2
                             + _quad_l2(grid, jacobian(grid, flat)) ** 2))
    if kind == NormKind.W22_GAMMA0:
        return _quad_l2(grid, second_differences(grid, flat))
    if kind == NormKind.H2:
        return float(np.sqrt(
            _quad_l2(grid, flat) ** 2
            + _quad_l2(grid, jacobian(grid, flat)) ** 2
            + _quad_l2(grid, second_differences(grid, flat)) ** 2
        ))
    raise ValueError(f"unknown norm kind {kind!r}")


def _difference_matrices(resolution: int, h: float) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """1D centered first (E1) and second (E2) difference matrices."""
    m = resolution
    up = sp.diags([np.ones(m - 1)], [1], format="csr")
    dn = sp.diags([np.ones(m - 1)], [-1], format="csr")
    e1 = (up - dn) / (2.0 * h)
    e2 = (up - 2.0 * sp.identity(m, format="csr") + dn) / h**2
    return sp.csr_matrix(e1), sp.csr_matrix(e2)


def _khat_forms(grid: Grid) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Gram matrices A (L2 + Jacobian part) and B (second differences)."""
    e1, e2 = _difference_matrices(grid.resolution, grid.h)
    m = grid.resolution
    eye = sp.identity(m, format="csr")
    if grid.d == 1:
        a = sp.identity(m, format="csr") + e1.T @ e1
        b = e2.T @ e2
    else:
        d1x = sp.kron(e1, eye, format="csr")
        d1y = sp.kron(eye, e1, format="csr")
        dxx = sp.kron(e2, eye, format="csr")
        dyy = sp.kron(eye, e2, format="csr")
        dxy = sp.kron(e1, e1, format="csr")
        a = sp.identity(m * m, format="csr") + d1x.T @ d1x + d1y.T @ d1y
        b = dxx.T @ dxx + dyy.T @ dyy + 2.0 * (dxy.T @ dxy)
    return sp.csr_matrix(a), sp.csr_matrix(b)


def estimate_khat(
    grid: Grid,
    n: int | None = None,
    seed: int = 0,
    tol: float = 1e-12,
    max_iter: int = 2000,
) -> float:
    """Estimate the embedding constant K with ||f||_H2 <= K ||f||_W22_gamma0.

    K^2 = 1 + sup_f (||f||^2 + ||Jf||^2) / ||f||^2_W22_gamma0 over zero-boundary
    fields, computed by power iteration on the generalized eigenproblem
    A f = lambda B f.  Both quadratic forms are componentwise sums, so the
    vector-field sup equals the scalar-field sup and n does not change the
    answer; it is accepted for interface symmetry.
    """
    del n
    a_mat, b_mat = _khat_forms(grid)
    solver = splu(sp.csc_matrix(b_mat))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a_mat.shape[0])
    v /= np.linalg.norm(v)
    lam_old = 0.0
    for _ in range(max_iter):
        w = solver.solve(a_mat @ v)
        w /= np.linalg.norm(w)
        lam = float((w @ (a_mat @ w)) / (w @ (b_mat @ w)))
        v = w
        if abs(lam - lam_old) <= tol * max(1.0, abs(lam)):
            return float(np.sqrt(1.0 + lam))
        lam_old = lam
    residual = abs(lam - lam_old)
    raise RuntimeError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(last eigenvalue increment {residual:.3e})"
    )


@dataclass(frozen=True)
class MirandaTalentiReport:
    """Ratios ||D2 v||^2 / ||Delta v||^2 over random zero-boundary fields."""

    ratios: np.ndarray
    max_ratio: float
    h: float
    bound: float
    passed: bool


def _random_trig_field(grid: Grid, rng: np.random.Generator, max_mode: int = 4) -> np.ndarray:
    """Random combination of product-sine modes (zero boundary by construction)."""
    x = grid.coords()
    out = np.zeros((grid.n,) + grid.shape)
    for k in range(grid.n):
        if grid.d == 1:
            for mode in range(1, max_mode + 1):
                out[k] += rng.standard_normal() * np.sin(mode * np.pi * x[0])
        else:
            for mx in range(1, max_mode + 1):
                for my in range(1, max_mode + 1):
                    out[k] += rng.standard_normal() * np.sin(mx * np.pi * x[0]) * np.sin(
                        my * np.pi * x[1]
                    )
    return out


def check_miranda_talenti(grid: Grid, trials: int, seed: int = 0) -> MirandaTalentiReport:
    """Verify sum ||D_lj v||^2 <= ||Delta v||^2 (1 + 10 h^2) on random fields."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    ratios = np.empty(trials)
    for t in range(trials):
        v = _random_trig_field(grid, rng)
        num = _quad_l2(grid, second_differences(grid, v)) ** 2
        den = _quad_l2(grid, laplacian(grid, v)) ** 2
        ratios[t] = num / den
    bound = 1.0 + 10.0 * grid.h**2
    max_ratio = float(np.max(ratios))
    return MirandaTalentiReport(
        ratios=ratios, max_ratio=max_ratio, h=grid.h, bound=bound,
        passed=bool(max_ratio <= bound),
    )
