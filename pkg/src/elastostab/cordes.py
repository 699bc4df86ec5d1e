"""Nondivergence coefficients, the generalized Cordes condition, and its constants.

From a material and a displacement state Ju, the coefficients

    a_klij(x) = sum_K alpha_K  d^2 C_K / dY_kl dY_ij (x, Ju(x))

define the nondivergence operator (L u)_k = sum_lij a_klij d_l d_j u_i.  The
Cordes condition asks for an eps in (0,1] with

    sum a_klij(x)^2  /  (sum_kl a_klkl(x))^2  <=  1 / (n d - 1 + eps),

equivalently eps <= T(x)^2/S(x) - (nd - 1) with S = sum a^2 and T = trace.
Cauchy-Schwarz gives T^2 <= nd * S, so the admissible sup never exceeds 1,
with equality exactly at isotropic coefficients a = c * delta * delta.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .energy import ConicMaterial
from .grid import Grid

__all__ = [
    "CoefficientField",
    "CordesReport",
    "DimensionReport",
    "assemble_coefficients",
    "check_dimension_condition",
    "check_cordes",
    "cordes_constants",
    "downstream_epsilon",
]


@dataclass(frozen=True)
class CoefficientField:
    """Pointwise coefficient tensor a[k, l, i, j, *spatial] on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        n, d = self.grid.n, self.grid.d
        expected = (n, d, n, d) + self.grid.shape
        if self.values.shape != expected:
            raise ValueError(f"coefficient shape {self.values.shape} != {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("coefficients contain non-finite values")
        swapped = np.einsum("klij...->ijkl...", self.values)
        dev = float(np.max(np.abs(self.values - swapped)))
        scale = float(np.max(np.abs(self.values))) or 1.0
        if dev > 1e-10 * scale:
            raise ValueError(f"coefficients break (kl)<->(ij) symmetry by {dev:.3e}")

    @property
    def nd(self) -> int:
        return self.grid.n * self.grid.d

    def as_matrices(self) -> np.ndarray:
        """Reshape to (num_points, nd, nd) with row (k,l), column (i,j)."""
        n, d = self.grid.n, self.grid.d
        spatial_first = np.moveaxis(
            self.values.reshape(n * d, n * d, -1), -1, 0
        )
        return spatial_first


def assemble_coefficients(
    material: ConicMaterial, grid: Grid, state: np.ndarray
) -> CoefficientField:
    """Pointwise Hessian contraction of the material at the given state Ju."""
    expected = (grid.n, grid.d) + grid.shape
    if state.shape != expected:
        raise ValueError(f"state shape {state.shape} != {expected}")
    values = material.aggregate_hess(grid.coords(), state)
    return CoefficientField(grid=grid, values=values)


@dataclass(frozen=True)
class DimensionReport:
    """Aggregate Hessian bounds against the dimension condition."""

    kappa: float
    mu: float
    lower: float
    upper: float
    ok: bool


def check_dimension_condition(material: ConicMaterial, nd: int = None) -> DimensionReport:
    """Check ((nd-2)/(nd-1)) mu < kappa < (nd/(nd-1)) mu for the aggregates.

    nd defaults to 2, the smallest admissible product; pass the grid's n*d for
    a specific configuration.
    """
    if nd is None:
        nd = 2
    kappa = material.kappa
    mu = material.mu
    lower = (nd - 2) / (nd - 1) * mu
    upper = nd / (nd - 1) * mu
    return DimensionReport(
        kappa=kappa, mu=mu, lower=lower, upper=upper,
        ok=bool(lower < kappa < upper),
    )


def downstream_epsilon(eps_inf: float) -> float:
    """Safety-margined eps used by solvers and constants.

    Slightly below the lattice infimum (strict inequality) and capped below 1
    (keeps 1 - sqrt(1-eps) away from a zero denominator).
    """
    eps = max(eps_inf - 1e-12, (1.0 - 1e-9) * eps_inf)
    return min(eps, 1.0 - 1e-12)


@dataclass(frozen=True)
class CordesReport:
    """Outcome of the Cordes/ellipticity check, plus derived constants."""

    grid: Grid
    nd: int
    epsilon_max: np.ndarray
    epsilon_inf: float
    epsilon_used: float
    alpha_values: np.ndarray
    alpha_min: float
    alpha_max: float
    alpha_esssup: float
    trace_min: float
    eig_min: float
    lambda_ellipticity: float | None
    ellipticity_ok: bool
    passed: bool
    khat: float | None = None
    c_alpha: float | None = None
    chat_alpha: float | None = None
    chat_alpha_alt: float | None = None

    def summary_lines(self) -> list[str]:
        lines = [
            f"nd={self.nd}",
            f"epsilon_inf={self.epsilon_inf:.12g}",
            f"epsilon_used={self.epsilon_used:.12g}",
            f"alpha_min={self.alpha_min:.12g}",
            f"alpha_max={self.alpha_max:.12g}",
            f"alpha_esssup={self.alpha_esssup:.12g}",
            f"trace_min={self.trace_min:.12g}",
            f"eig_min={self.eig_min:.12g}",
            f"ellipticity_ok={self.ellipticity_ok}",
            f"pass={self.passed}",
        ]
        if self.lambda_ellipticity is not None:
            lines.insert(1, f"lambda={self.lambda_ellipticity:.12g}")
        for name in ("khat", "c_alpha", "chat_alpha", "chat_alpha_alt"):
            value = getattr(self, name)
            if value is not None:
                lines.append(f"{name}={value:.12g}")
        return lines


def check_cordes(
    coeffs: CoefficientField,
    material: ConicMaterial | None = None,
    tol_eps: float = 1e-10,
) -> CordesReport:
    """Evaluate the Cordes condition pointwise over the lattice.

    With a material, the ellipticity leg checks that the smallest eigenvalue
    of the reshaped coefficient matrix stays above the aggregate kappa (up to
    rounding) and reports lambda = kappa/(nd*mu); without one it only checks
    positivity.
    """
    nd = coeffs.nd
    values = coeffs.values
    s_field = np.sum(values**2, axis=(0, 1, 2, 3))
    t_field = np.einsum("klkl...->...", values)
    if np.any(t_field <= 0.0):
        idx = tuple(
            int(i) for i in np.unravel_index(int(np.argmin(t_field)), coeffs.grid.shape)
        )
        raise ValueError(
            f"nonpositive coefficient trace {float(np.min(t_field)):.6g} "
            f"at lattice index {idx}"
        )
    eps_field = np.minimum(t_field**2 / s_field - (nd - 1), 1.0)
    alpha_field = t_field / s_field
    eps_inf = float(np.min(eps_field))

    eig_min = float(np.min(np.linalg.eigvalsh(coeffs.as_matrices())[:, 0]))
    if material is not None:
        kappa, mu = material.kappa, material.mu
        lam = kappa / (nd * mu)
        ellipticity_ok = bool(eig_min >= kappa * (1.0 - 1e-9))
    else:
        lam = None
        ellipticity_ok = bool(eig_min > 0.0)

    passed = bool(eps_inf > tol_eps) and ellipticity_ok
    return CordesReport(
        grid=coeffs.grid,
        nd=nd,
        epsilon_max=eps_field,
        epsilon_inf=eps_inf,
        epsilon_used=downstream_epsilon(eps_inf),
        alpha_values=alpha_field,
        alpha_min=float(np.min(alpha_field)),
        alpha_max=float(np.max(alpha_field)),
        alpha_esssup=float(np.max(alpha_field)),
        trace_min=float(np.min(t_field)),
        eig_min=eig_min,
        lambda_ellipticity=lam,
        ellipticity_ok=ellipticity_ok,
        passed=passed,
    )


def cordes_constants(
    report: CordesReport, khat: float, material: ConicMaterial
) -> CordesReport:
    """Attach K-hat and the solvability constants to a passing report.

    c_alpha = khat * esssup alpha(x) / (1 - sqrt(1 - eps)) controls the
    H2 norm of nondivergence solutions.  chat_alpha is the material-level
    variant khat/(1-sqrt(1-eps)) * (sum alpha mu1)/(sum alpha kappa1)^p with
    p = 1, the form all downstream stability constants use; chat_alpha_alt is
    the p = 2 variant, reported side by side (it dominates c_alpha whenever
    alpha(x) <= 1/kappa, which holds pointwise since T >= nd*kappa and
    S >= T^2/nd).
    """
    if not report.passed:
        raise ValueError("Cordes condition not satisfied; constants undefined")
    denom = 1.0 - np.sqrt(1.0 - report.epsilon_used)
    c_alpha = khat * report.alpha_esssup / denom
    kappa, mu = material.kappa, material.mu
    chat = khat / denom * mu / kappa
    chat_alt = khat / denom * mu / kappa**2
    return dataclasses.replace(
        report, khat=float(khat), c_alpha=float(c_alpha),
        chat_alpha=float(chat), chat_alpha_alt=float(chat_alt),
    )
