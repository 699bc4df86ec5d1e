"""Explicit stability constants and trajectory-pair inequality verifiers.

Given two simulated trajectories whose problems differ in initial data,
forcing, and/or conic weights, this module evaluates every closed-form
constant of the perturbation theory -- the nonlinear Gronwall bound, the
curvature ratio cbar, the solvability factor chat, the six z-bound
functions C0..C5, the exponential factors E and F, and the assembled
main-estimate constants cbar0..cbar2 -- and checks the corresponding
inequalities at every sampled time.

Each verifier compares a measured discrete norm of the trajectory
difference v = u - u~ (or its time derivatives) against a bound built
only from problem data: measured regularity magnitudes M0..M3, the
material bound tables, the Cordes report, and the perturbation norms.
Bounds carry a relative slack (default 5%) plus a tiny absolute floor,
since discretization error enters both sides of every inequality.

Conventions baked into the constants:

* exponential-over-exponent factors (exp(x)-1)/x switch to their Taylor
  expansion for |x| < 1e-6 so that materials with vanishing third
  derivative bound (cbar = 0) produce finite constants; F keeps its
  printed exp(x) numerator away from that branch, which is the one
  intentional inconsistency between F and the C2/C3/C5 factors;
* the time-embedding constant bounds sup_t||g(t)|| by
  max(1, 1/T) * (int||g|| + int||g'||), from averaging the fundamental
  theorem of calculus over the start point;
* the main-estimate right-hand side enters the initial-velocity norm to
  the first power inside the square root, so the assembled bound is
  quantitatively valid for perturbations with ||u1 - u1~||_{H1} <= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .cordes import CordesReport, check_dimension_condition
from .dynamics import AprioriBounds, Trajectory
from .energy import ConicMaterial
from .grid import (
    Grid,
    NormKind,
    TimeSeries,
    jacobian,
    make_grid,
    norm,
    second_differences,
    time_derivative,
    time_second_derivative,
)

__all__ = [
    "GronwallProblem",
    "PairReport",
    "StabilityConstants",
    "cbar",
    "gronwall_bound",
    "stability_constants",
    "u2_difference_bound",
    "verify_v_bound",
    "verify_z_bound",
    "verify_h2_bound",
    "verify_main_estimate",
]

DEFAULT_SLACK = 0.05
ABS_TOL = 1e-12

_trapz = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class GronwallProblem:
    """Data of the integral inequality psi <= a + int b*psi + int k*psi^p.

    b and k are nonnegative step functions sampled at the nodes of the
    tau grid; all integrals are trapezoidal on that grid.
    """

    a: float
    b: np.ndarray
    k: np.ndarray
    p: float
    taus: np.ndarray

    def __post_init__(self) -> None:
        taus = np.asarray(self.taus, dtype=float)
        b = np.asarray(self.b, dtype=float)
        k = np.asarray(self.k, dtype=float)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "k", k)
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"p must lie strictly inside (0, 1), got {self.p}")
        if self.a < 0.0:
            raise ValueError(f"a must be nonnegative, got {self.a}")
        if taus.ndim != 1 or len(taus) < 2:
            raise ValueError("tau grid needs at least two nodes")
        if taus[0] != 0.0 or np.any(np.diff(taus) <= 0.0):
            raise ValueError("tau grid must start at 0 and increase strictly")
        for name, values in (("b", b), ("k", k)):
            if values.shape != taus.shape:
                raise ValueError(f"{name} must be sampled on the tau grid")
            if np.any(values < 0.0):
                raise ValueError(f"{name} must be nonnegative")


def gronwall_bound(prob: GronwallProblem, tau: float) -> float:
    """Closed-form bound exp(B)[a^(1-p) + (1-p) int k e^((p-1)B)]^(1/(1-p)).

    B(t) is the running integral of b; both integrals use trapezoidal
    quadrature on the problem's tau grid restricted to [0, tau], with the
    endpoint interpolated when tau falls between nodes.
    """
    horizon = float(prob.taus[-1])
    if not 0.0 <= tau <= horizon * (1.0 + 1e-12):
        raise ValueError(f"tau={tau} outside the grid horizon [0, {horizon}]")
    idx = int(np.searchsorted(prob.taus, tau, side="right"))
    ts = prob.taus[:idx]
    bs = prob.b[:idx]
    ks = prob.k[:idx]
    if ts.size == 0 or ts[-1] < tau * (1.0 - 1e-15):
        ts = np.append(ts, tau)
        bs = np.append(bs, np.interp(tau, prob.taus, prob.b))
        ks = np.append(ks, np.interp(tau, prob.taus, prob.k))
    if len(ts) == 1:
        return float(prob.a)
    b_int = cumulative_trapezoid(bs, ts, initial=0.0)
    q = 1.0 - prob.p
    k_int = float(_trapz(ks * np.exp(-q * b_int), ts))
    inner = prob.a**q + q * k_int
    return float(math.exp(b_int[-1]) * inner ** (1.0 / q))


def cbar(material: ConicMaterial) -> float:
    """Curvature ratio sum_K alpha_K mu2_K / sum_K alpha_K kappa1_K."""
    numerator = float(
        sum(a * m.bounds.mu2 for a, m in zip(material.alpha, material.models))
    )
    denominator = material.kappa
    if denominator <= 0.0:
        raise ValueError("sum alpha_K kappa1_K must be positive")
    return numerator / denominator


def _expm1_over(x: float) -> float:
    """(exp(x) - 1)/x with the exact small-argument limit."""
    if abs(x) < 1e-6:
        return 1.0 + 0.5 * x + x * x / 6.0
    return math.expm1(x) / x


def _exp_checked(x: float, name: str) -> float:
    """exp(x), rejecting arguments past float range with a clear message.

    The iteration exponents grow with the measured regularity magnitudes,
    the curvature ratio and the horizon; past ~709 the bound is not
    representable, which in practice means the trajectory data have left
    the perturbation regime the estimates are meant for.
    """
    if x > 709.0:
        raise ValueError(
            f"exponent {x:.6g} of {name} exceeds float range; shorten the "
            "horizon or reduce the solution magnitudes"
        )
    return math.exp(x)


@dataclass(frozen=True)
class StabilityConstants:
    """Every explicit constant of the perturbation bounds, plus input echoes.

    c1 is the variant consistent with the z-energy derivation (mu1 under
    the square root); c1_printed keeps the mu2 reading of the same
    display.  chat uses the single-power aggregate-curvature denominator
    used by the H2 bounds; chat_alt keeps the squared-denominator
    variant.  cbar0/cbar1/cbar2 multiply, respectively, the combined
    initial-data bracket, the forcing W11 difference, and the weight
    sup-difference in the final estimate.
    """

    cbar: float
    chat: float
    chat_alt: float
    c0: float
    c1: float
    c1_printed: float
    c2: float
    c3: float
    c4: float
    c5: float
    q2: float
    q3: float
    e_alpha: float
    f_alpha: float
    cbar0: float
    cbar1: float
    cbar2: float
    embed_bound: float
    kappa_alpha: float
    mu_alpha: float
    m0: float
    m1: float
    m2: float
    m3: float
    T: float
    n: int
    d: int
    vol: float
    rho_min: float
    rho_max: float
    khat: float
    epsilon: float

    def __post_init__(self) -> None:
        for name in (
            "cbar", "chat", "chat_alt", "c0", "c1", "c1_printed", "c2", "c3",
            "c4", "c5", "q2", "q3", "e_alpha", "f_alpha", "cbar0", "cbar1",
            "cbar2", "embed_bound", "kappa_alpha", "mu_alpha",
        ):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0.0:
                raise ValueError(f"constant {name} must be finite and >= 0, got {value}")

    def summary_lines(self) -> list[str]:
        """Human-readable table for the CLI."""
        pairs = [
            ("cbar", self.cbar), ("chat", self.chat), ("chat_alt", self.chat_alt),
            ("c0", self.c0), ("c1", self.c1), ("c1_printed", self.c1_printed),
            ("c2", self.c2), ("c3", self.c3), ("c4", self.c4), ("c5", self.c5),
            ("q2", self.q2), ("q3", self.q3),
            ("e_alpha", self.e_alpha), ("f_alpha", self.f_alpha),
            ("cbar0", self.cbar0), ("cbar1", self.cbar1), ("cbar2", self.cbar2),
            ("embed_bound", self.embed_bound),
            ("kappa_alpha", self.kappa_alpha), ("mu_alpha", self.mu_alpha),
            ("m0", self.m0), ("m1", self.m1), ("m2", self.m2), ("m3", self.m3),
            ("T", self.T), ("n", self.n), ("d", self.d), ("vol", self.vol),
            ("rho_min", self.rho_min), ("rho_max", self.rho_max),
            ("khat", self.khat), ("epsilon", self.epsilon),
        ]
        width = max(len(name) for name, _ in pairs)
        return [f"{name:<{width}} = {value:.17g}" for name, value in pairs]


def stability_constants(
    material: ConicMaterial,
    apriori: AprioriBounds,
    grid: Grid,
    T: float,
    cordes: CordesReport,
    tilde_u0_h2: float,
) -> StabilityConstants:
    """Evaluate the full constant stack for one material/regularity state.

    Requires a passed Cordes report that already carries the embedding
    constant and the solvability factors (``cordes_constants``);
    tilde_u0_h2 is the H2 norm of the reference initial displacement
    appearing in the weight-perturbation constant c2.
    """
    if not cordes.passed:
        raise ValueError("Cordes check failed; the stability constants are undefined")
    if cordes.khat is None or cordes.chat_alpha is None:
        raise ValueError(
            "Cordes report lacks the derived constants; run cordes_constants first"
        )
    if T <= 0.0:
        raise ValueError(f"T must be positive, got {T}")
    n, d = grid.n, grid.d
    nd = n * d
    vol = grid.vol
    rho_min, rho_max = material.rho_min, material.rho_max
    m0, m1, m2, m3 = apriori.m0, apriori.m1, apriori.m2, apriori.m3
    alpha = material.alpha
    tables = [model.bounds for model in material.models]

    cb = cbar(material)
    x = nd**2 * m1 * cb * T / 2.0
    e_alpha = _exp_checked(x, "e_alpha")
    # the pair of exponential-over-exponent factors; g_factor is the
    # (exp(x)-1)-numerator version used inside c2/c3/c5, f_alpha the
    # exp(x)-numerator version of the final assembly (see module docstring)
    g_factor = T * _expm1_over(x)
    f_alpha = T * e_alpha / x if x >= 1e-6 else g_factor

    sum_a_mu1 = float(sum(a * t.mu1 for a, t in zip(alpha, tables)))
    sum_a_mu2 = float(sum(a * t.mu2 for a, t in zip(alpha, tables)))
    c0 = (
        3.0 * nd * e_alpha
        * sum(
            a * (t.mu1 + n * d**1.5 * m3 * t.mu2 + math.sqrt(d) * t.mu5)
            for a, t in zip(alpha, tables)
        )
    )
    c1 = e_alpha * math.sqrt(sum_a_mu1)
    c1_printed = e_alpha * math.sqrt(sum_a_mu2)
    c2 = e_alpha * sum(
        math.sqrt(6.0) * nd * t.mu1 * tilde_u0_h2
        + math.sqrt(6.0 * vol) * math.sqrt(n) * d * t.mu4
        for t in tables
    ) + (
        2.0 * math.sqrt(2.0) * nd**2 / rho_min * g_factor
        * sum(
            math.sqrt(vol) * m2 * t.mu1
            + math.sqrt(n) * d * m0 * m1 * t.mu2
            + math.sqrt(vol) * m1 * t.mu6
            for t in tables
        )
    )
    c3 = (
        2.0 * math.sqrt(2.0) * nd**2.5 / rho_min * g_factor
        * sum(
            a * (m2 * t.mu2 + nd * m1 * m3 * t.mu3 + m1 * t.mu7)
            for a, t in zip(alpha, tables)
        )
    )
    c4 = 2.0 * math.sqrt(2.0) * n**2.5 * d**2 * m1 * e_alpha / rho_min * sum_a_mu2
    embed_bound = max(1.0, 1.0 / T)
    embed = max(embed_bound, 1.0)
    c5 = 2.0 * math.sqrt(3.0) * e_alpha * rho_max * embed + 2.0 * g_factor * embed

    q2 = math.sqrt(n) * d * sum(
        math.sqrt(n) * d**2 * t.mu1 + math.sqrt(vol) * t.mu4 for t in tables
    )
    q3 = n * math.sqrt(d) * sum(
        a * (nd * m3 * t.mu2 + t.mu5) for a, t in zip(alpha, tables)
    )

    kappa_alpha = material.kappa
    mu_alpha = material.mu
    chat = float(cordes.chat_alpha)
    chat_alt = float(cordes.chat_alpha_alt)

    # weight-channel coefficient of the velocity-energy bound
    g_alpha = sum(
        d * math.sqrt(n * vol) * t.mu4 + n * d**2 * m0 * t.mu1 for t in tables
    )
    # velocity-energy channel expressed against the main-estimate data
    a0 = e_alpha * math.sqrt(max(rho_max, 1.0))
    a1 = f_alpha * embed
    a2 = f_alpha * g_alpha / rho_min

    sqrt_kappa = math.sqrt(kappa_alpha)
    sqrt_mu = math.sqrt(mu_alpha)
    # displacement-H2 channel: closes the gradient feedback through the
    # velocity channel and carries the exp(cbar*c4*T) iteration factor
    big_h = _exp_checked(cb * c4 * T, "the H2 iteration factor") * chat
    h0 = big_h * (c0 / sqrt_mu + c1 + (c3 + q3) * a0 / sqrt_kappa)
    h1 = big_h * ((c5 + rho_max) + (c3 + q3) * a1 / sqrt_kappa)
    h2 = big_h * ((c2 + q2) + (c3 + q3) * a2 / sqrt_kappa)
    # acceleration-energy channel: the C4 term integrates the H2 channel
    b0 = c0 / sqrt_mu + c1 + c3 * a0 / sqrt_kappa + c4 * T * h0
    b1 = c5 + c3 * a1 / sqrt_kappa + c4 * T * h1
    b2 = c2 + c3 * a2 / sqrt_kappa + c4 * T * h2

    return StabilityConstants(
        cbar=cb, chat=chat, chat_alt=chat_alt,
        c0=float(c0), c1=float(c1), c1_printed=float(c1_printed),
        c2=float(c2), c3=float(c3), c4=float(c4), c5=float(c5),
        q2=float(q2), q3=float(q3),
        e_alpha=e_alpha, f_alpha=f_alpha,
        cbar0=float(a0 + b0 + h0), cbar1=float(a1 + b1 + h1),
        cbar2=float(a2 + b2 + h2),
        embed_bound=embed_bound,
        kappa_alpha=kappa_alpha, mu_alpha=mu_alpha,
        m0=m0, m1=m1, m2=m2, m3=m3,
        T=float(T), n=n, d=d, vol=vol,
        rho_min=rho_min, rho_max=rho_max,
        khat=float(cordes.khat), epsilon=float(cordes.epsilon_used),
    )


def _grid_from_field(u: np.ndarray) -> Grid:
    """Recover the interior lattice a component-leading field lives on."""
    d = u.ndim - 1
    spatial = u.shape[1:]
    if d not in (1, 2) or any(s != spatial[0] for s in spatial):
        raise ValueError(f"field shape {u.shape} is not (n, res) or (n, res, res)")
    return make_grid(d=d, n=u.shape[0], resolution=spatial[0])


def u2_difference_bound(
    material_a: ConicMaterial,
    material_b: ConicMaterial,
    u0: np.ndarray,
    u0_tilde: np.ndarray,
    f0: np.ndarray,
    f0_tilde: np.ndarray,
) -> float:
    """Closed-form bound on the initial-acceleration difference norm.

    Bounds ||u2 - u2~||_{L2} by the weight-difference term (sqrt(6)
    factors), the initial-displacement term (3nd factor, with the
    curvature magnitude measured from the initial data), and the initial
    forcing difference (sqrt(3) rho_max factor).  The displayed bound
    absorbs the density inverse, so it is a valid upper bound when the
    density is at least one everywhere.
    """
    if u0.shape != u0_tilde.shape or f0.shape != u0.shape or f0_tilde.shape != u0.shape:
        raise ValueError("u0, u0~, f0, f0~ must share one field shape")
    if len(material_a.models) != len(material_b.models) or any(
        x is not y for x, y in zip(material_a.models, material_b.models)
    ):
        raise ValueError("both materials must combine the same energy models")
    grid = _grid_from_field(u0)
    n, d = grid.n, grid.d
    vol = grid.vol
    rho_max = max(material_a.rho_max, material_b.rho_max)
    m3 = max(
        float(np.max(np.abs(second_differences(grid, u0)))),
        float(np.max(np.abs(second_differences(grid, u0_tilde)))),
    )
    u0_tilde_h2 = norm(grid, u0_tilde, NormKind.H2)
    diff_h2 = norm(grid, u0 - u0_tilde, NormKind.H2)
    f_diff = norm(grid, f0 - f0_tilde, NormKind.L2)

    term_alpha = sum(
        abs(aa - ab) * (
            math.sqrt(6.0 * vol) * math.sqrt(n) * d * t.mu4
            + math.sqrt(6.0) * n * d * t.mu1 * u0_tilde_h2
        )
        for aa, ab, t in zip(
            material_a.alpha, material_b.alpha,
            (m.bounds for m in material_a.models),
        )
    )
    term_u0 = 3.0 * n * d * sum(
        a * (math.sqrt(d) * t.mu5 + t.mu1 + n * d**1.5 * m3 * t.mu2)
        for a, t in zip(material_a.alpha, (m.bounds for m in material_a.models))
    ) * diff_h2
    term_f = math.sqrt(3.0) * rho_max * f_diff
    return float(term_alpha + term_u0 + term_f)


@dataclass(frozen=True)
class PairReport:
    """Per-time comparison of a measured quantity against its bound.

    margins already include the relative slack and absolute floor on the
    bound side, so pass means every margin is nonnegative.
    """

    name: str
    taus: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    min_margin: float
    slack: float
    perturbations: dict
    passed: bool


@dataclass(frozen=True)
class _PairData:
    """Measured difference fields and perturbation norms of a pair."""

    grid: Grid
    material: ConicMaterial
    taus: np.ndarray
    rho: np.ndarray
    v: np.ndarray
    vdot: np.ndarray
    vddot: np.ndarray
    jv: np.ndarray
    jz: np.ndarray
    d0_h2: float
    d1_h1: float
    df_w11: float
    dalpha: np.ndarray
    ju0_diff: float
    ju1_diff: float
    fdiff_norms: np.ndarray
    perturbations: dict


def _pair_data(pair: tuple[Trajectory, Trajectory]) -> _PairData:
    base, tilde = pair
    for traj in (base, tilde):
        if traj.problem is None:
            raise ValueError("verifiers need trajectories with attached problems")
    if base.grid != tilde.grid:
        raise ValueError("trajectory pair lives on different grids")
    if len(base.times) != len(tilde.times) or (
        float(np.max(np.abs(base.times - tilde.times))) > 1e-12
    ):
        raise ValueError("trajectory pair has mismatched time axes")
    mat_a, mat_b = base.material, tilde.material
    if len(mat_a.models) != len(mat_b.models) or any(
        x is not y for x, y in zip(mat_a.models, mat_b.models)
    ):
        raise ValueError("trajectory pair must share its stored-energy models")
    grid = base.grid
    rho = mat_a.rho_on(grid)
    if not np.allclose(rho, mat_b.rho_on(grid), rtol=1e-12, atol=1e-12):
        raise ValueError("trajectory pair must share the mass density")

    taus = base.times
    v = base.snapshots - tilde.snapshots
    vdot = time_derivative(taus, v)
    vddot = time_second_derivative(taus, v)
    jv = np.stack([jacobian(grid, vt) for vt in v])
    jz = np.stack([jacobian(grid, zt) for zt in vdot])

    prob_a, prob_b = base.problem, tilde.problem
    d0_h2 = norm(grid, prob_a.u0 - prob_b.u0, NormKind.H2)
    d1_h1 = norm(grid, prob_a.u1 - prob_b.u1, NormKind.H1)
    ju0_diff = norm(grid, jacobian(grid, prob_a.u0 - prob_b.u0), NormKind.L2)
    ju1_diff = norm(grid, jacobian(grid, prob_a.u1 - prob_b.u1), NormKind.L2)

    fa = prob_a.forcing.sample(grid, taus)
    fb = prob_b.forcing.sample(grid, taus)
    rates = None
    if fa.rates is not None and fb.rates is not None:
        rates = fa.rates - fb.rates
    fdiff = TimeSeries(times=taus, values=fa.values - fb.values, rates=rates)
    df_w11 = norm(grid, fdiff, NormKind.W11_TIME)
    fdiff_norms = np.array([norm(grid, ft, NormKind.L2) for ft in fdiff.values])

    dalpha = np.abs(mat_a.alpha - mat_b.alpha)
    perturbations = {
        "u0_h2": float(d0_h2),
        "u1_h1": float(d1_h1),
        "f_w11": float(df_w11),
        "alpha_inf": float(np.max(dalpha)) if dalpha.size else 0.0,
    }
    return _PairData(
        grid=grid, material=mat_a, taus=taus, rho=rho,
        v=v, vdot=vdot, vddot=vddot, jv=jv, jz=jz,
        d0_h2=d0_h2, d1_h1=d1_h1, df_w11=df_w11, dalpha=dalpha,
        ju0_diff=ju0_diff, ju1_diff=ju1_diff, fdiff_norms=fdiff_norms,
        perturbations=perturbations,
    )


def _weighted_energy(
    data: _PairData, fields: np.ndarray, jacobians: np.ndarray
) -> np.ndarray:
    """Per-time ||field||^2_rho + sum_K alpha_K kappa1_K ||J field||^2."""
    grid, material = data.grid, data.material
    w = grid.quadrature_weight()
    kinetic = np.array(
        [norm(grid, ft, NormKind.L2_RHO, rho=data.rho) ** 2 for ft in fields]
    )
    grad_sq = w * np.sum(jacobians**2, axis=tuple(range(1, jacobians.ndim)))
    return kinetic + material.kappa * grad_sq


def _report(
    name: str,
    data: _PairData,
    lhs: np.ndarray,
    rhs: np.ndarray,
    slack: float,
) -> PairReport:
    margins = rhs * (1.0 + slack) + ABS_TOL - lhs
    min_margin = float(np.min(margins))
    return PairReport(
        name=name, taus=data.taus, lhs=lhs, rhs=rhs, margins=margins,
        min_margin=min_margin, slack=slack, perturbations=data.perturbations,
        passed=bool(min_margin >= 0.0),
    )


def verify_v_bound(
    pair: tuple[Trajectory, Trajectory],
    constants: StabilityConstants,
    slack: float = DEFAULT_SLACK,
) -> PairReport:
    """Velocity-energy bound on the difference of two solutions.

    At every tau compares ||vdot||^2_rho + sum alpha kappa1 ||Jv||^2
    against the squared sum of the exponentially weighted initial term,
    the forcing convolution integral, and the weight-difference term.
    """
    data = _pair_data(pair)
    grid, material = data.grid, data.material
    nd = grid.n * grid.d
    c_rate = nd**2 * constants.m1 * constants.cbar / 2.0

    lhs = _weighted_energy(data, data.vdot, data.jv)

    u1_diff = pair[0].problem.u1 - pair[1].problem.u1
    init = math.sqrt(
        norm(grid, u1_diff, NormKind.L2_RHO, rho=data.rho) ** 2
        + sum(
            a * m.bounds.mu1 for a, m in zip(material.alpha, material.models)
        ) * data.ju0_diff**2
    )

    # exp-weighted convolution: exp(c*tau) * int_0^tau ||df|| exp(-c t) dt
    damped = data.fdiff_norms * np.exp(-c_rate * data.taus)
    conv = np.exp(c_rate * data.taus) * np.concatenate(
        ([0.0], cumulative_trapezoid(damped, data.taus))
    )

    alpha_coeff = sum(
        da * (
            math.sqrt(grid.n * grid.vol) * m.bounds.mu4
            + grid.d * grid.n * constants.m0 * m.bounds.mu1
        )
        for da, m in zip(data.dalpha, material.models)
    ) / material.rho_min
    alpha_factor = grid.d * data.taus * np.array(
        [_expm1_over(c_rate * t) for t in data.taus]
    )

    e_tau = np.exp(c_rate * data.taus)
    rhs = (e_tau * init + conv + alpha_coeff * alpha_factor) ** 2
    return _report("v_bound", data, lhs, rhs, slack)


def _z_bracket_terms(
    data: _PairData, constants: StabilityConstants
) -> tuple[float, float, float, np.ndarray, float]:
    """Shared pieces of the z and H2 bounds.

    Returns the three perturbation products (initial displacement,
    initial velocity gradient, forcing), the running integral of the
    difference H2 norm, and the global sup of ||Jv(t)||_{L2}.
    """
    grid = data.grid
    w = grid.quadrature_weight()
    jv_norms = np.sqrt(w * np.sum(data.jv**2, axis=tuple(range(1, data.jv.ndim))))
    jv_sup = float(np.max(jv_norms))
    v_h2 = np.array([norm(grid, vt, NormKind.H2) for vt in data.v])
    v_h2_int = np.concatenate(
        ([0.0], cumulative_trapezoid(v_h2, data.taus))
    )
    dalpha_inf = float(np.max(data.dalpha)) if data.dalpha.size else 0.0
    term0 = constants.c0 * data.d0_h2
    term1 = constants.c1 * data.ju1_diff
    term_alpha = dalpha_inf
    return term0, term1, term_alpha, v_h2_int, jv_sup


def verify_z_bound(
    pair: tuple[Trajectory, Trajectory],
    constants: StabilityConstants,
    slack: float = DEFAULT_SLACK,
) -> PairReport:
    """Acceleration-energy bound on z = udot - udot~ via C0..C5.

    z and zdot come from centered time differences of the trajectory
    difference; the C4 term integrates the measured H2 norm of v up to
    each tau, and the C3 term uses the global gradient sup.
    """
    data = _pair_data(pair)
    lhs = _weighted_energy(data, data.vddot, data.jz)
    term0, term1, dalpha_inf, v_h2_int, jv_sup = _z_bracket_terms(data, constants)
    bracket = (
        term0
        + term1
        + constants.c2 * dalpha_inf
        + constants.c3 * jv_sup
        + constants.c4 * v_h2_int
        + constants.c5 * data.df_w11
    )
    return _report("z_bound", data, lhs, bracket**2, slack)


def verify_h2_bound(
    pair: tuple[Trajectory, Trajectory],
    constants: StabilityConstants,
    slack: float = DEFAULT_SLACK,
) -> PairReport:
    """Pointwise-in-time H2 bound on the difference v.

    Combines the z-bound bracket (with the q2/q3 augmentations and the
    rho_max forcing shift) under the exp(cbar*c4*tau) iteration factor
    and the solvability constant chat.
    """
    data = _pair_data(pair)
    grid = data.grid
    lhs = np.array([norm(grid, vt, NormKind.H2) for vt in data.v])
    term0, term1, dalpha_inf, _, jv_sup = _z_bracket_terms(data, constants)
    bracket = (
        term0
        + term1
        + (constants.c2 + constants.q2) * dalpha_inf
        + (constants.c3 + constants.q3) * jv_sup
        + (constants.c5 + constants.rho_max) * data.df_w11
    )
    rhs = np.exp(constants.cbar * constants.c4 * data.taus) * constants.chat * bracket
    return _report("h2_bound", data, lhs, rhs, slack)


def verify_main_estimate(
    pair: tuple[Trajectory, Trajectory],
    constants: StabilityConstants,
    slack: float = DEFAULT_SLACK,
) -> PairReport:
    """Final five-term stability estimate for the trajectory difference.

    The left side gathers the weighted velocity/acceleration norms, both
    gradient energies, and the H2 norm of v; the right side is
    cbar0 * [mu(alpha)||u0-u0~||^2_H2 + ||u1-u1~||_H1]^(1/2)
    + cbar1 ||f-f~||_W11 + cbar2 ||alpha-alpha~||_inf.  Materials that
    fail the aggregate-curvature dimension condition raise instead of
    reporting a failure, since every constant presumes it.
    """
    data = _pair_data(pair)
    for traj in pair:
        report = check_dimension_condition(
            traj.material, nd=data.grid.n * data.grid.d
        )
        if not report.ok:
            raise ValueError(
                "material violates the dimension condition "
                f"({report.lower:.6g} < {report.kappa:.6g} < {report.upper:.6g} fails)"
            )
    grid = data.grid
    w = grid.quadrature_weight()
    rho = data.rho

    vdot_sq = np.array(
        [norm(grid, ft, NormKind.L2_RHO, rho=rho) ** 2 for ft in data.vdot]
    )
    vddot_sq = np.array(
        [norm(grid, ft, NormKind.L2_RHO, rho=rho) ** 2 for ft in data.vddot]
    )
    jv_sq = w * np.sum(data.jv**2, axis=tuple(range(1, data.jv.ndim)))
    jz_sq = w * np.sum(data.jz**2, axis=tuple(range(1, data.jz.ndim)))
    v_h2_sq = np.array([norm(grid, vt, NormKind.H2) ** 2 for vt in data.v])
    kappa = constants.kappa_alpha
    lhs = np.sqrt(vdot_sq + kappa * jv_sq + vddot_sq + kappa * jz_sq + v_h2_sq)

    dalpha_inf = data.perturbations["alpha_inf"]
    bracket = math.sqrt(constants.mu_alpha * data.d0_h2**2 + data.d1_h1)
    rhs_value = (
        constants.cbar0 * bracket
        + constants.cbar1 * data.df_w11
        + constants.cbar2 * dalpha_inf
    )
    rhs = np.full_like(lhs, rhs_value)
    return _report("main_estimate", data, lhs, rhs, slack)
