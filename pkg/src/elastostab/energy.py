"""Stored-energy models C(x, Y), their derivative stacks, and conic combinations.

Every model exposes analytic callables for the energy, its Y-derivatives up to
fourth order, and the mixed x-Y derivatives the stability constants need.  All
callables are vectorized: x has shape (d, *batch), Y has shape (n, d, *batch),
and derivative tensors carry their index axes in front of the batch axes, e.g.
hess_yy(x, Y)[k, l, i, j, ...] = d^2 C / dY_kl dY_ij.

The bound constants attached to each model are honest sup bounds of the
corresponding derivative entries.  Polynomial energies of degree > 2 cannot
have globally bounded third/fourth derivatives, so the shipped nonlinear model
uses the rational saturator g(r) = r/(1+r); every one of its bound constants
has a closed form (single-variable maxima solved exactly).

For the x-dependent quadratic model, the mixed derivative d_l dY_kl C =
2 d_l(c) Y_kl grows linearly in Y, so its sup bound mu4 is taken over the
sampling box |Y_entries| <= Y_SAMPLE_BOX used by verify_bounds; it is a valid
bound for any state whose deformation gradient stays inside that box (all
shipped configurations do, by a wide margin).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .grid import Grid

__all__ = [
    "BoundsTable",
    "EnergyModel",
    "ConicMaterial",
    "BoundsReport",
    "AuditReport",
    "quadratic_model",
    "saturating_model",
    "conic_combine",
    "verify_bounds",
    "finite_diff_audit",
    "Y_SAMPLE_BOX",
]

Y_SAMPLE_BOX = 3.0


@dataclass(frozen=True)
class BoundsTable:
    """Bound constants for one stored-energy model.

    kappa0/mu0: two-sided quadratic growth, kappa0*|Y|^2 <= C <= mu0*|Y|^2.
    kappa1/mu1: two-sided Hessian spectral bounds.
    mu2/mu3: sup of third/fourth Y-derivative entries.
    mu4: sup of d_l dY_kl C (over the verification box for x-dependent models).
    mu5/mu6: sup of the two orderings of the mixed second derivative
             dY_ij d_l dY_kl C = d_l dY_ij dY_kl C.
    mu7: sup of dY_pq d_l dY_ij dY_kl C.
    """

    kappa0: float
    mu0: float
    kappa1: float
    mu1: float
    mu2: float
    mu3: float
    mu4: float
    mu5: float
    mu6: float
    mu7: float

    def __post_init__(self) -> None:
        if not (0.0 < self.kappa0 <= self.mu0):
            raise ValueError(f"need 0 < kappa0 <= mu0, got {self.kappa0}, {self.mu0}")
        if not (0.0 < self.kappa1 <= self.mu1):
            raise ValueError(f"need 0 < kappa1 <= mu1, got {self.kappa1}, {self.mu1}")
        for name in ("mu2", "mu3", "mu4", "mu5", "mu6", "mu7"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True, eq=False)
class EnergyModel:
    """Analytic derivative surface of one stored-energy density."""

    kind: str
    params: dict
    energy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_y: Callable[[np.ndarray, np.ndarray], np.ndarray]
    hess_yy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    third_yyy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    fourth_yyyy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    mixed_x_grad: Callable[[np.ndarray, np.ndarray], np.ndarray]
    mixed_x_hess: Callable[[np.ndarray, np.ndarray], np.ndarray]
    mixed_x_third: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bounds: BoundsTable


@lru_cache(maxsize=None)
def _deltas(n: int, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Identity factors: eye(n), eye(d), and delta_ki*delta_lj as (n,d,n,d)."""
    idn = np.eye(n)
    idd = np.eye(d)
    dd = idn[:, None, :, None] * idd[None, :, None, :]
    return idn, idd, dd


def _batch_shape(y: np.ndarray) -> tuple[int, ...]:
    return y.shape[2:]


def _as_c_field(c: float | Callable, x: np.ndarray) -> np.ndarray:
    if callable(c):
        return np.asarray(c(x), dtype=float)
    return np.full(x.shape[1:], float(c))


def _fd_grad_of_scalar(c: Callable, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar spatial coefficient."""
    d = x.shape[0]
    out = np.empty_like(x)
    for axis in range(d):
        xp = x.copy()
        xm = x.copy()
        xp[axis] += step
        xm[axis] -= step
        out[axis] = (np.asarray(c(xp)) - np.asarray(c(xm))) / (2.0 * step)
    return out


def _dense_spatial_sample(d: int, points_per_axis: int = 401) -> np.ndarray:
    t = np.linspace(0.0, 1.0, points_per_axis)
    if d == 1:
        return t[np.newaxis, :]
    xx, yy = np.meshgrid(t, t, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()])


def quadratic_model(
    c: float | Callable,
    grad_c: Callable | None = None,
    d: int | None = None,
) -> EnergyModel:
    """C(x, Y) = c(x) * |Y|_F^2.

    ``c`` is a positive constant or a callable on coordinate arrays of shape
    (d, *batch); a callable requires ``d`` so the bound constants can be
    sampled.  ``grad_c`` optionally supplies the analytic spatial gradient
    (same signature, returns (d, *batch)); otherwise central differences with
    a 1e-6 step are used.
    """
    if callable(c):
        if d is None:
            raise ValueError("a callable coefficient requires the spatial dimension d")
        sample = _dense_spatial_sample(d)
        c_vals = np.asarray(c(sample), dtype=float)
        c_min = float(np.min(c_vals))
        c_max = float(np.max(c_vals))
        if c_min <= 0.0:
            raise ValueError(f"coefficient must be positive, found min {c_min}")
        gc = grad_c if grad_c is not None else (lambda x: _fd_grad_of_scalar(c, x))
        inner = np.clip(sample, 2e-6, 1.0 - 2e-6)
        sup_gc = float(np.max(np.abs(gc(inner))))
    else:
        c_val = float(c)
        if c_val <= 0.0:
            raise ValueError(f"coefficient must be positive, got {c_val}")
        c_min = c_max = c_val
        sup_gc = 0.0
        gc = lambda x: np.zeros_like(x)  # noqa: E731

    def energy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return _as_c_field(c, x) * np.sum(y**2, axis=(0, 1))

    def grad_y(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return 2.0 * _as_c_field(c, x) * y

    def hess_yy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        n, d_ = y.shape[:2]
        _, _, dd = _deltas(n, d_)
        return 2.0 * np.multiply.outer(dd, _as_c_field(c, x))

    def zeros_rank(extra: int) -> Callable:
        def f(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            n, d_ = y.shape[:2]
            return np.zeros((n, d_) * extra + _batch_shape(y))
        return f

    def mixed_x_grad(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return 2.0 * np.asarray(gc(x))[np.newaxis, :] * y

    def mixed_x_hess(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        n, d_ = y.shape[:2]
        idn, idd, _ = _deltas(n, d_)
        return 2.0 * np.einsum("ki,lj,l...->klij...", idn, idd, np.asarray(gc(x)))

    bounds = BoundsTable(
        kappa0=c_min, mu0=c_max, kappa1=2.0 * c_min, mu1=2.0 * c_max,
        mu2=0.0, mu3=0.0,
        mu4=2.0 * sup_gc * Y_SAMPLE_BOX, mu5=2.0 * sup_gc, mu6=2.0 * sup_gc,
        mu7=0.0,
    )
    params = {"c": ("callable" if callable(c) else float(c))}
    return EnergyModel(
        kind="quadratic", params=params,
        energy=energy, grad_y=grad_y, hess_yy=hess_yy,
        third_yyy=zeros_rank(3), fourth_yyyy=zeros_rank(4),
        mixed_x_grad=mixed_x_grad, mixed_x_hess=mixed_x_hess,
        mixed_x_third=zeros_rank(3), bounds=bounds,
    )


def saturating_model(a: float, b: float, s: float) -> EnergyModel:
    """C(x, Y) = a|Y|^2 + b s^2 g(|Y|^2/s^2) with g(r) = r/(1+r).

    The radial Hessian eigenvalue 2a + 2b(1-3r)/(1+r)^3 attains its minimum
    -b/4 relative term at r = 1, so kappa1 = 2a - b/2 and the construction
    requires b < 4a.  All sup bounds below are closed forms (see module
    docstring).
    """
    a = float(a)
    b = float(b)
    s = float(s)
    if a <= 0.0 or b < 0.0 or s <= 0.0:
        raise ValueError("need a > 0, b >= 0, s > 0")
    kappa1 = 2.0 * a - 0.5 * b
    if kappa1 <= 0.0:
        raise ValueError(
            f"Hessian lower bound 2a - b/2 = {kappa1} is nonpositive; "
            "the saturator requires b < 4a"
        )

    def radial(y: np.ndarray) -> tuple[np.ndarray, ...]:
        u = np.sum(y**2, axis=(0, 1))
        r = u / s**2
        one = 1.0 + r
        c1 = a + b / one**2
        c2 = -2.0 * b / (s**2 * one**3)
        c3 = 6.0 * b / (s**4 * one**4)
        c4 = -24.0 * b / (s**6 * one**5)
        return u, r, c1, c2, c3, c4

    def energy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        u = np.sum(y**2, axis=(0, 1))
        r = u / s**2
        return a * u + b * s**2 * (r / (1.0 + r))

    def grad_y(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        _, _, c1, _, _, _ = radial(y)
        return 2.0 * c1 * y

    def hess_yy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        n, d_ = y.shape[:2]
        _, _, dd = _deltas(n, d_)
        _, _, c1, c2, _, _ = radial(y)
        iso = 2.0 * np.multiply.outer(dd, c1)
        rank1 = 4.0 * c2 * np.einsum("kl...,ij...->klij...", y, y)
        return iso + rank1

    def third_yyy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        n, d_ = y.shape[:2]
        idn, idd, _ = _deltas(n, d_)
        _, _, _, c2, c3, _ = radial(y)
        t1 = np.einsum("ki,lj,pq...->klijpq...", idn, idd, y)
        t2 = np.einsum("kp,lq,ij...->klijpq...", idn, idd, y)
        t3 = np.einsum("ip,jq,kl...->klijpq...", idn, idd, y)
        yyy = np.einsum("kl...,ij...,pq...->klijpq...", y, y, y)
        return 4.0 * c2 * (t1 + t2 + t3) + 8.0 * c3 * yyy

    def fourth_yyyy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        n, d_ = y.shape[:2]
        idn, idd, dd = _deltas(n, d_)
        _, _, _, c2, c3, c4 = radial(y)
        dd1 = np.einsum("klij,pqrs->klijpqrs", dd, dd)
        dd2 = np.einsum("kp,lq,ir,js->klijpqrs", idn, idd, idn, idd)
        dd3 = np.einsum("ip,jq,kr,ls->klijpqrs", idn, idd, idn, idd)
        batch = _batch_shape(y)
        iso = 4.0 * np.multiply.outer(dd1 + dd2 + dd3, c2.reshape(batch))
        yy1 = np.einsum("ki,lj,pq...,rs...->klijpqrs...", idn, idd, y, y)
        yy2 = np.einsum("kp,lq,ij...,rs...->klijpqrs...", idn, idd, y, y)
        yy3 = np.einsum("ip,jq,kl...,rs...->klijpqrs...", idn, idd, y, y)
        yy4 = np.einsum("kr,ls,ij...,pq...->klijpqrs...", idn, idd, y, y)
        yy5 = np.einsum("ir,js,kl...,pq...->klijpqrs...", idn, idd, y, y)
        yy6 = np.einsum("pr,qs,kl...,ij...->klijpqrs...", idn, idd, y, y)
        yyyy = np.einsum("kl...,ij...,pq...,rs...->klijpqrs...", y, y, y, y)
        return iso + 8.0 * c3 * (yy1 + yy2 + yy3 + yy4 + yy5 + yy6) + 16.0 * c4 * yyyy

    def zeros_rank(extra: int) -> Callable:
        def f(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            n, d_ = y.shape[:2]
            return np.zeros((n, d_) * extra + _batch_shape(y))
        return f

    # Closed-form single-variable maxima behind the sup bounds:
    #   sqrt(r)/(1+r)^3  at r = 1/5,   r^(3/2)/(1+r)^4 at r = 3/5,
    #   r/(1+r)^4        at r = 1/3,   r^2/(1+r)^5     at r = 2/3.
    m_third_1 = np.sqrt(0.2) / 1.2**3
    m_third_2 = 0.6**1.5 / 1.6**4
    m_fourth_2 = (1.0 / 3.0) * (3.0 / 4.0) ** 4
    m_fourth_3 = (2.0 / 3.0) ** 2 * (3.0 / 5.0) ** 5
    mu2 = (b / s) * (24.0 * m_third_1 + 48.0 * m_third_2)
    mu3 = (b / s**2) * (24.0 + 288.0 * m_fourth_2 + 384.0 * m_fourth_3)

    bounds = BoundsTable(
        kappa0=a, mu0=a + b, kappa1=kappa1, mu1=2.0 * a + 2.0 * b,
        mu2=mu2, mu3=mu3, mu4=0.0, mu5=0.0, mu6=0.0, mu7=0.0,
    )
    return EnergyModel(
        kind="saturating", params={"a": a, "b": b, "s": s},
        energy=energy, grad_y=grad_y, hess_yy=hess_yy,
        third_yyy=third_yyy, fourth_yyyy=fourth_yyyy,
        mixed_x_grad=zeros_rank(1), mixed_x_hess=zeros_rank(2),
        mixed_x_third=zeros_rank(3), bounds=bounds,
    )


@dataclass(frozen=True, eq=False)
class ConicMaterial:
    """Conic combination sum_K alpha_K C_K with a mass density rho."""

    models: tuple[EnergyModel, ...]
    alpha: np.ndarray
    rho: float | Callable
    rho_min: float
    rho_max: float

    @property
    def kappa(self) -> float:
        """Aggregate Hessian lower bound sum_K alpha_K kappa1_K."""
        return float(sum(a * m.bounds.kappa1 for a, m in zip(self.alpha, self.models)))

    @property
    def mu(self) -> float:
        """Aggregate Hessian upper bound sum_K alpha_K mu1_K."""
        return float(sum(a * m.bounds.mu1 for a, m in zip(self.alpha, self.models)))

    def rho_on(self, grid: Grid) -> np.ndarray:
        if callable(self.rho):
            return np.asarray(self.rho(grid.coords()), dtype=float)
        return np.full(grid.shape, float(self.rho))

    def _weighted_sum(self, name: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        total = None
        for a, model in zip(self.alpha, self.models):
            term = a * getattr(model, name)(x, y)
            total = term if total is None else total + term
        return total

    def aggregate_energy(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._weighted_sum("energy", x, y)

    def aggregate_grad(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._weighted_sum("grad_y", x, y)

    def aggregate_hess(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._weighted_sum("hess_yy", x, y)

    def aggregate_mixed_x_grad(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._weighted_sum("mixed_x_grad", x, y)

    def with_alpha(self, alpha: Sequence[float]) -> "ConicMaterial":
        return conic_combine(list(self.models), alpha, self.rho)


def conic_combine(
    models: Sequence[EnergyModel],
    alpha: Sequence[float],
    rho: float | Callable,
) -> ConicMaterial:
    """Combine models with nonnegative weights; at least one alpha*kappa1 > 0."""
    if len(models) != len(alpha):
        raise ValueError(f"{len(models)} models but {len(alpha)} weights")
    alpha_arr = np.asarray(alpha, dtype=float)
    if np.any(alpha_arr < 0.0):
        raise ValueError(f"weights must be nonnegative, got {alpha_arr.tolist()}")
    if not any(a * m.bounds.kappa1 > 0.0 for a, m in zip(alpha_arr, models)):
        raise ValueError("at least one alpha_K * kappa1_K must be positive")
    if callable(rho):
        sample = _dense_spatial_sample(2)
        vals = np.asarray(rho(sample), dtype=float)
        rho_min, rho_max = float(np.min(vals)), float(np.max(vals))
    else:
        rho_min = rho_max = float(rho)
    if rho_min <= 0.0:
        raise ValueError(f"rho must be positive, found min {rho_min}")
    return ConicMaterial(
        models=tuple(models), alpha=alpha_arr, rho=rho,
        rho_min=rho_min, rho_max=rho_max,
    )


@dataclass(frozen=True)
class BoundsReport:
    """Worst margins of every bound at sampled (x, Y, H); margin >= 0 passes."""

    margins: dict
    symmetry_dev: float
    premise_dev: float
    ok: bool
    violations: tuple[str, ...]


def _draw_xy(
    rng: np.random.Generator, n: int, d: int, samples: int
) -> tuple[np.ndarray, np.ndarray]:
    x = rng.uniform(1e-5, 1.0 - 1e-5, size=(d, samples))
    y = rng.uniform(-Y_SAMPLE_BOX, Y_SAMPLE_BOX, size=(n, d, samples))
    return x, y


def verify_bounds(
    model: EnergyModel,
    samples: int = 200,
    seed: int = 0,
    n: int = 2,
    d: int = 2,
) -> BoundsReport:
    """Check every bound of the model's BoundsTable at random draws."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    x, y = _draw_xy(rng, n, d, samples)
    bounds = model.bounds

    ysq = np.sum(y**2, axis=(0, 1))
    c_vals = model.energy(x, y)
    margins = {
        "quad_lower": float(np.min(c_vals - bounds.kappa0 * ysq)),
        "quad_upper": float(np.min(bounds.mu0 * ysq - c_vals)),
    }

    hess = model.hess_yy(x, y)
    h_draw = rng.standard_normal((5, n, d, samples))
    h_draw /= np.sqrt(np.sum(h_draw**2, axis=(1, 2), keepdims=True))
    quad_form = np.einsum("mkl...,klij...,mij...->m...", h_draw, hess, h_draw)
    margins["hess_lower"] = float(np.min(quad_form - bounds.kappa1))
    margins["hess_upper"] = float(np.min(bounds.mu1 - quad_form))

    def sup_abs(t: np.ndarray) -> float:
        return float(np.max(np.abs(t))) if t.size else 0.0

    margins["mu2"] = bounds.mu2 - sup_abs(model.third_yyy(x, y))
    margins["mu3"] = bounds.mu3 - sup_abs(model.fourth_yyyy(x, y))
    margins["mu4"] = bounds.mu4 - sup_abs(model.mixed_x_grad(x, y))
    mixed_hess = model.mixed_x_hess(x, y)
    margins["mu5"] = bounds.mu5 - sup_abs(mixed_hess)
    margins["mu6"] = bounds.mu6 - sup_abs(mixed_hess)
    margins["mu7"] = bounds.mu7 - sup_abs(model.mixed_x_third(x, y))

    symmetry_dev = sup_abs(hess - np.einsum("klij...->ijkl...", hess))

    # Premise check by two finite-difference routes to the same mixed tensor.
    step = 1e-5
    sub = min(8, samples)
    xs, ys = x[:, :sub], y[:, :, :sub]
    fd_a = np.empty((n, d, n, d, sub))
    fd_b = np.empty((n, d, n, d, sub))
    for i in range(n):
        for j in range(d):
            yp = ys.copy()
            ym = ys.copy()
            yp[i, j] += step
            ym[i, j] -= step
            fd_a[:, :, i, j] = (
                model.mixed_x_grad(xs, yp) - model.mixed_x_grad(xs, ym)
            ) / (2.0 * step)
    for ell in range(d):
        xp = xs.copy()
        xm = xs.copy()
        xp[ell] += step
        xm[ell] -= step
        diff = (model.hess_yy(xp, ys) - model.hess_yy(xm, ys)) / (2.0 * step)
        fd_b[:, ell] = diff[:, ell]
    premise_dev = float(np.max(np.abs(fd_a - fd_b)))

    violations = tuple(
        name for name, margin in margins.items() if margin < -1e-12
    )
    ok = not violations and symmetry_dev <= 1e-10 and premise_dev <= 1e-5
    return BoundsReport(
        margins=margins, symmetry_dev=symmetry_dev, premise_dev=premise_dev,
        ok=ok, violations=violations,
    )


@dataclass(frozen=True)
class AuditReport:
    """Max relative deviation between analytic derivatives and central FD."""

    max_rel: dict
    ok: bool


def _rel_dev(analytic: np.ndarray, fd: np.ndarray) -> float:
    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(fd)))
    return float(np.max(np.abs(analytic - fd) / scale))


def finite_diff_audit(
    model: EnergyModel,
    samples: int = 50,
    step: float = 1e-3,
    seed: int = 0,
    n: int = 2,
    d: int = 2,
    tol: float = 1e-5,
) -> AuditReport:
    """Audit the whole derivative stack against central finite differences.

    Each derivative level is differenced from the analytic level below it, so
    every comparison carries a single O(step^2) truncation error.  x draws are
    kept 2*step away from the boundary of the unit box.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    rng = np.random.default_rng(seed)
    x = rng.uniform(2.0 * step, 1.0 - 2.0 * step, size=(d, samples))
    y = rng.uniform(-Y_SAMPLE_BOX, Y_SAMPLE_BOX, size=(n, d, samples))
    max_rel: dict[str, float] = {}

    def fd_in_y(fn: Callable, extra_rank: int) -> np.ndarray:
        """d fn / dY_pq appended as two trailing index axes before batch."""
        lead = (n, d) * extra_rank
        out = np.empty(lead + (n, d, samples))
        for p in range(n):
            for q in range(d):
                yp = y.copy()
                ym = y.copy()
                yp[p, q] += step
                ym[p, q] -= step
                out[..., p, q, :] = (fn(x, yp) - fn(x, ym)) / (2.0 * step)
        return out

    max_rel["grad"] = _rel_dev(model.grad_y(x, y), fd_in_y(model.energy, 0))
    max_rel["hess"] = _rel_dev(model.hess_yy(x, y), fd_in_y(model.grad_y, 1))
    # FD produces d/dY_pq hess[k,l,i,j] = third[p,q,k,l,i,j] up to symmetry;
    # the stack orders it [k,l,i,j,p,q], which equals by full symmetry.
    max_rel["third"] = _rel_dev(model.third_yyy(x, y), fd_in_y(model.hess_yy, 2))
    max_rel["fourth"] = _rel_dev(model.fourth_yyyy(x, y), fd_in_y(model.third_yyy, 3))

    grad_x_of_grad = np.empty((d, n, d, samples))
    grad_x_of_hess = np.empty((d, n, d, n, d, samples))
    for ell in range(d):
        xp = x.copy()
        xm = x.copy()
        xp[ell] += step
        xm[ell] -= step
        grad_x_of_grad[ell] = (model.grad_y(xp, y) - model.grad_y(xm, y)) / (2.0 * step)
        grad_x_of_hess[ell] = (model.hess_yy(xp, y) - model.hess_yy(xm, y)) / (2.0 * step)
    fd_mixed_grad = np.stack(
        [grad_x_of_grad[ell][:, ell] for ell in range(d)], axis=1
    )
    max_rel["mixed_x_grad"] = _rel_dev(model.mixed_x_grad(x, y), fd_mixed_grad)

    fd_mixed_hess_b = np.stack(
        [grad_x_of_hess[ell][:, ell] for ell in range(d)], axis=1
    )
    fd_mixed_hess_a = fd_in_y(model.mixed_x_grad, 1)
    analytic_mixed_hess = model.mixed_x_hess(x, y)
    max_rel["mixed_x_hess"] = _rel_dev(analytic_mixed_hess, fd_mixed_hess_a)
    max_rel["premise_symmetry"] = _rel_dev(fd_mixed_hess_a, fd_mixed_hess_b)
    max_rel["mixed_x_third"] = _rel_dev(
        model.mixed_x_third(x, y), fd_in_y(model.mixed_x_hess, 2)
    )

    ok = all(v <= tol for v in max_rel.values())
    return AuditReport(max_rel=max_rel, ok=ok)
