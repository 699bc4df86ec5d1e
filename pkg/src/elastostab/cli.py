"""Command-line front end: config files, perturbation experiments, reports.

Config schema (JSON)::

    {
      "grid":     {"d": 1, "n": 2, "resolution": 64},
      "material": {"models": [{"kind": "saturating", "a": 1.0, "b": 0.2, "s": 1.0},
                              {"kind": "quadratic", "c": 0.5}],
                   "alpha": [1.0, 0.5],
                   "rho": 1.0},
      "problem":  {"u0": [<profile>, ...n entries...],
                   "u1": [<profile>, ...],
                   "forcing": {"components": [<profile>, ...],
                               "omega": 1.0, "scale": 0.01},   // optional
                   "T": 0.5,
                   "dt": 0.002},                               // or "cfl": 0.25
      "perturbation": {"channels": ["u0", "u1", "f", "alpha"],
                       "magnitude": 0.01,        // or per-channel object
                       "trials": 20, "seed": 7},
      "output":   {"directory": "out", "dump_fields": false, "slack": 0.05}
    }

where <profile> is {"profile": "sine", "modes": [1], "amplitude": 0.005},
{"profile": "bump", "center": [0.5], "width": 0.1, "amplitude": 0.01} or
{"profile": "zero"}.  All profiles vanish on the domain boundary by
construction.  Forcing is scale * cos(omega t) * phi(x).

Subcommands: check-cordes, solve-elliptic, simulate, constants,
verify-stability; shared flags --config/--out/--seed/--verbose.  Exit
codes: 0 pass, 2 hypothesis failure (dimension or Cordes condition),
3 verifier failure, 64 usage or config error, 1 internal stage error.

Report CSVs never contain timestamps (identical config and seed must
reproduce them byte for byte); the run manifest carries the timestamp,
the canonical config hash, the seeds and the artifact paths, and is
written before any report so interrupted runs are detectable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .cordes import assemble_coefficients, check_cordes, check_dimension_condition, cordes_constants
from .dynamics import Forcing, ProblemInstance, measure_apriori, simulate, zero_forcing
from .energy import ConicMaterial, conic_combine, quadratic_model, saturating_model
from .grid import Grid, NormKind, TimeSeries, estimate_khat, jacobian, make_grid, norm
from .elliptic import fixed_point_solve, verify_h2_estimate
from .stability import (
    stability_constants,
    verify_h2_bound,
    verify_main_estimate,
    verify_v_bound,
    verify_z_bound,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "HypothesisFailure",
    "RunManifest",
    "StageError",
    "load_config",
    "main",
    "run_experiment",
]

VERSION = "0.1.0"

EXIT_PASS = 0
EXIT_INTERNAL = 1
EXIT_HYPOTHESIS = 2
EXIT_VERIFIER = 3
EXIT_USAGE = 64

CHANNELS = ("u0", "u1", "f", "alpha")
NUM_PERTURBATION_MODES = 5


class ConfigError(ValueError):
    """Malformed or invalid configuration, anchored to a file line."""


class StageError(RuntimeError):
    """Pipeline failure labelled with the stage that raised it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class HypothesisFailure(StageError):
    """A solvability hypothesis (dimension or Cordes condition) failed."""


# ---------------------------------------------------------------------------
# profiles


def _sine_profile(grid: Grid, params: dict) -> np.ndarray:
    modes = params.get("modes")
    if modes is None or len(modes) != grid.d:
        raise ValueError(f"sine profile needs {grid.d} integer modes")
    amplitude = float(params.get("amplitude", 1.0))
    coords = grid.coords()
    out = np.full(grid.shape, amplitude)
    for axis, m in enumerate(modes):
        out = out * np.sin(int(m) * math.pi * coords[axis])
    return out


def _bump_profile(grid: Grid, params: dict) -> np.ndarray:
    center = params.get("center")
    if center is None or len(center) != grid.d:
        raise ValueError(f"bump profile needs a {grid.d}-entry center")
    width = float(params.get("width", 0.1))
    if width <= 0.0:
        raise ValueError("bump width must be positive")
    amplitude = float(params.get("amplitude", 1.0))
    coords = grid.coords()
    r_sq = sum((coords[a] - float(center[a])) ** 2 for a in range(grid.d))
    mask = np.ones(grid.shape)
    for axis in range(grid.d):
        mask = mask * np.sin(math.pi * coords[axis])
    return amplitude * np.exp(-r_sq / (2.0 * width**2)) * mask


def _zero_profile(grid: Grid, params: dict) -> np.ndarray:
    return np.zeros(grid.shape)


PROFILES = {
    "bump": _bump_profile,
    "sine": _sine_profile,
    "zero": _zero_profile,
}


def _build_components(grid: Grid, specs, where: str) -> np.ndarray:
    """Assemble an (n, *spatial) field from per-component profile specs."""
    if not isinstance(specs, list) or len(specs) != grid.n:
        raise ValueError(f"{where} must list exactly {grid.n} component profiles")
    fields = []
    for k, spec in enumerate(specs):
        if not isinstance(spec, dict) or "profile" not in spec:
            raise ValueError(f'{where}[{k}] must be an object with a "profile" key')
        name = spec["profile"]
        factory = PROFILES.get(name)
        if factory is None:
            available = ", ".join(sorted(PROFILES))
            raise ValueError(
                f"{where}[{k}]: unknown profile {name!r}; available: {available}"
            )
        try:
            fields.append(factory(grid, spec))
        except ValueError as exc:
            raise ValueError(f"{where}[{k}]: {exc}") from exc
    return np.stack(fields)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description plus the raw document for hashing."""

    grid: Grid
    material: ConicMaterial
    u0: np.ndarray
    u1: np.ndarray
    forcing: Forcing
    T: float
    dt: float
    channels: tuple
    magnitudes: dict
    trials: int
    seed: int
    out_dir: str
    dump_fields: bool
    slack: float
    raw: dict
    source: str

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _line_of(text: str, needle: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _anchored(path: str, text: str, needle: str, message: str) -> ConfigError:
    line = _line_of(text, needle)
    where = f"{path}:{line}" if line is not None else path
    return ConfigError(f"{where}: {message}")


def _require(block: dict, key: str, context: str):
    if key not in block:
        raise ValueError(f"{context} is missing required key {key!r}")
    return block[key]


def _build_material(block: dict) -> ConicMaterial:
    model_specs = _require(block, "models", "material block")
    models = []
    for i, spec in enumerate(model_specs):
        kind = spec.get("kind")
        if kind == "quadratic":
            models.append(quadratic_model(float(_require(spec, "c", f"material.models[{i}]"))))
        elif kind == "saturating":
            models.append(
                saturating_model(
                    a=float(_require(spec, "a", f"material.models[{i}]")),
                    b=float(_require(spec, "b", f"material.models[{i}]")),
                    s=float(_require(spec, "s", f"material.models[{i}]")),
                )
            )
        else:
            raise ValueError(
                f"material.models[{i}]: unknown model kind {kind!r}; "
                "available: quadratic, saturating"
            )
    alpha = _require(block, "alpha", "material block")
    for i, a in enumerate(alpha):
        if a < 0:
            raise ValueError(f"material.alpha[{i}] must be nonnegative, got {a}")
    rho = float(block.get("rho", 1.0))
    if rho <= 0.0:
        raise ValueError(f"material.rho must be positive, got {rho}")
    return conic_combine(models, alpha, rho)


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Errors carry the config path and, when the offending token can be
    located, the 1-based line number.
    """
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"{path}: no such config file")
    text = file_path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")

    def anchored(needle: str, message: str) -> ConfigError:
        return _anchored(path, text, needle, message)

    try:
        grid_block = _require(raw, "grid", "config")
        grid = make_grid(
            d=int(_require(grid_block, "d", "grid block")),
            n=int(_require(grid_block, "n", "grid block")),
            resolution=int(_require(grid_block, "resolution", "grid block")),
        )
    except ValueError as exc:
        raise anchored('"grid"', str(exc)) from exc

    try:
        material = _build_material(_require(raw, "material", "config"))
    except ValueError as exc:
        needle = '"alpha"' if "alpha" in str(exc) else '"material"'
        raise anchored(needle, str(exc)) from exc

    try:
        problem = _require(raw, "problem", "config")
        u0 = _build_components(grid, _require(problem, "u0", "problem block"), "problem.u0")
        u1 = _build_components(grid, _require(problem, "u1", "problem block"), "problem.u1")
        T = float(_require(problem, "T", "problem block"))
        if T <= 0.0:
            raise ValueError(f"problem.T must be positive, got {T}")
        if "dt" in problem:
            dt = float(problem["dt"])
        elif "cfl" in problem:
            cfl = float(problem["cfl"])
            if not 0.0 < cfl <= 1.0:
                raise ValueError(f"problem.cfl must lie in (0, 1], got {cfl}")
            dt = cfl * grid.h / math.sqrt(material.mu / material.rho_min)
        else:
            raise ValueError('problem block needs "dt" or "cfl"')
        forcing_block = problem.get("forcing")
        if forcing_block is None:
            forcing = zero_forcing(grid)
        else:
            phi = _build_components(
                grid, _require(forcing_block, "components", "problem.forcing"),
                "problem.forcing.components",
            )
            omega = float(forcing_block.get("omega", 0.0))
            scale = float(forcing_block.get("scale", 1.0))
            forcing = Forcing(
                f=lambda t, _p=phi, _w=omega, _s=scale: _s * math.cos(_w * t) * _p,
                fdot=lambda t, _p=phi, _w=omega, _s=scale: -_s * _w * math.sin(_w * t) * _p,
            )
    except ValueError as exc:
        message = str(exc)
        needle = '"problem"'
        if "unknown profile" in message:
            needle = message.split("unknown profile ")[1].split(";")[0].strip("'\"")
        raise anchored(needle, message) from exc

    pert = raw.get("perturbation", {})
    channels = tuple(pert.get("channels", []))
    for ch in channels:
        if ch not in CHANNELS:
            raise anchored(
                '"channels"',
                f"perturbation.channels entry {ch!r} not one of {', '.join(CHANNELS)}",
            )
    magnitude = pert.get("magnitude", 0.0)
    if isinstance(magnitude, dict):
        magnitudes = {ch: float(magnitude.get(ch, 0.0)) for ch in CHANNELS}
    else:
        magnitudes = {ch: (float(magnitude) if ch in channels else 0.0) for ch in CHANNELS}
    for ch, mag in magnitudes.items():
        if mag < 0.0:
            raise anchored('"magnitude"', f"perturbation magnitude for {ch} must be >= 0, got {mag}")
    trials = int(pert.get("trials", 1))
    if trials < 1:
        raise anchored('"trials"', f"perturbation.trials must be >= 1, got {trials}")
    seed = int(pert.get("seed", 0))

    output = raw.get("output", {})
    out_dir = str(output.get("directory", "out"))
    dump_fields = bool(output.get("dump_fields", False))
    slack = float(output.get("slack", 0.05))
    if slack < 0.0:
        raise anchored('"slack"', f"output.slack must be >= 0, got {slack}")

    return ExperimentConfig(
        grid=grid, material=material, u0=u0, u1=u1, forcing=forcing, T=T, dt=dt,
        channels=channels, magnitudes=magnitudes, trials=trials, seed=seed,
        out_dir=out_dir, dump_fields=dump_fields, slack=slack,
        raw=raw, source=str(path),
    )


# ---------------------------------------------------------------------------
# perturbations


def _mode_fields(grid: Grid) -> np.ndarray:
    """The first boundary-compatible modes, shape (NUM_MODES, *spatial)."""
    coords = grid.coords()
    if grid.d == 1:
        modes = [(m,) for m in range(1, NUM_PERTURBATION_MODES + 1)]
    else:
        candidates = [(m1, m2) for m1 in range(1, 4) for m2 in range(1, 4)]
        candidates.sort(key=lambda m: (m[0] ** 2 + m[1] ** 2, m[0], m[1]))
        modes = candidates[:NUM_PERTURBATION_MODES]
    fields = []
    for mode in modes:
        out = np.ones(grid.shape)
        for axis, m in enumerate(mode):
            out = out * np.sin(m * math.pi * coords[axis])
        fields.append(out)
    return np.stack(fields)


def _random_combo(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Random mode combination per component, shape (n, *spatial)."""
    modes = _mode_fields(grid)
    coeffs = rng.standard_normal((grid.n, NUM_PERTURBATION_MODES))
    return np.tensordot(coeffs, modes, axes=(1, 0))


def _scaled_combo(grid: Grid, rng: np.random.Generator, magnitude: float,
                  kind: NormKind) -> np.ndarray:
    delta = _random_combo(grid, rng)
    if magnitude == 0.0:
        return np.zeros_like(delta)
    size = norm(grid, delta, kind)
    if size == 0.0:
        return np.zeros_like(delta)
    return delta * (magnitude / size)


def _perturbed_problem(
    config: ExperimentConfig, trial: int, times: np.ndarray
) -> ProblemInstance:
    """Build the perturbed twin of the base problem for one trial.

    Each requested channel draws a random combination of the first
    boundary-compatible modes (deterministic per (seed, trial)) and is
    scaled to the requested norm: H2 for u0, H1 for u1, the W11-in-time
    norm on the simulation time grid for f, and the sup norm for alpha.
    """
    grid = config.grid
    rng = np.random.default_rng([config.seed, trial])
    mags = config.magnitudes

    du0 = _scaled_combo(grid, rng, mags["u0"], NormKind.H2) if "u0" in config.channels \
        else np.zeros_like(config.u0)
    du1 = _scaled_combo(grid, rng, mags["u1"], NormKind.H1) if "u1" in config.channels \
        else np.zeros_like(config.u1)

    forcing = config.forcing
    if "f" in config.channels and mags["f"] > 0.0:
        psi = _scaled_combo(grid, rng, 1.0, NormKind.L2)
        omega_p = math.pi / config.T
        probe = TimeSeries(
            times=times,
            values=np.stack([math.sin(omega_p * t) * psi for t in times]),
            rates=np.stack([omega_p * math.cos(omega_p * t) * psi for t in times]),
        )
        base_w11 = norm(grid, probe, NormKind.W11_TIME)
        scale = mags["f"] / base_w11
        base_f, base_fdot = config.forcing.f, config.forcing.fdot
        forcing = Forcing(
            f=lambda t, _b=base_f: _b(t) + scale * math.sin(omega_p * t) * psi,
            fdot=(
                lambda t, _b=base_fdot: _b(t)
                + scale * omega_p * math.cos(omega_p * t) * psi
            ) if base_fdot is not None else None,
        )

    material = config.material
    if "alpha" in config.channels and mags["alpha"] > 0.0:
        g = rng.standard_normal(len(material.alpha))
        peak = float(np.max(np.abs(g)))
        if peak > 0.0:
            dalpha = mags["alpha"] * g / peak
            new_alpha = material.alpha + dalpha
            flip = new_alpha < 0.0
            new_alpha[flip] = material.alpha[flip] - dalpha[flip]
            material = material.with_alpha(new_alpha)

    return ProblemInstance(
        grid=grid, material=material,
        u0=config.u0 + du0, u1=config.u1 + du1,
        forcing=forcing, T=config.T, dt=config.dt,
    )


# ---------------------------------------------------------------------------
# manifest and report output


@dataclass(frozen=True)
class RunManifest:
    """Provenance of one run: hash, version, seeds, time, artifact paths."""

    config_hash: str
    version: str
    seed: int
    trials: int
    created: str
    artifacts: dict
    passed: bool
    path: str

    def lines(self) -> list[str]:
        out = [
            f"config_hash=sha256:{self.config_hash}",
            f"version={self.version}",
            f"seed={self.seed}",
            f"trials={self.trials}",
            f"trial_seeds={','.join(f'{self.seed}:{t}' for t in range(self.trials))}",
            f"created={self.created}",
            f"passed={'true' if self.passed else 'false'}",
        ]
        for name in sorted(self.artifacts):
            out.append(f"artifact.{name}={self.artifacts[name]}")
        return out


def _write_manifest(manifest: RunManifest) -> None:
    Path(manifest.path).write_text("\n".join(manifest.lines()) + "\n")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _render_margin_figure(path: Path, rows: list[dict]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({"figure.dpi": 120, "font.size": 9})
    names = ["v", "z", "h2", "main"]
    trials = np.array([row["trial"] for row in rows])
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    width = 0.2
    for i, name in enumerate(names):
        margins = np.array([row[f"margin_{name}"] for row in rows])
        ax.bar(trials + (i - 1.5) * width, margins, width, label=name)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("trial")
    ax.set_ylabel("min margin")
    ax.set_yscale("symlog", linthresh=1e-8)
    ax.legend(ncol=4, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _render_trace_figure(path: Path, report) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({"figure.dpi": 120, "font.size": 9})
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ax.plot(report.taus, report.lhs, label="measured")
    ax.plot(report.taus, report.rhs, label="bound", linestyle="--")
    ax.set_xlabel("tau")
    ax.set_ylabel(report.name)
    if np.any(np.asarray(report.lhs) > 0.0) and np.any(np.asarray(report.rhs) > 0.0):
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# pipeline


def _check_hypotheses(config: ExperimentConfig):
    grid, material = config.grid, config.material
    stage = "check-dimensions"
    dim = check_dimension_condition(material, nd=grid.n * grid.d)
    if not dim.ok:
        raise HypothesisFailure(
            stage,
            f"dimension condition fails: need {dim.lower:.6g} < kappa={dim.kappa:.6g} "
            f"< {dim.upper:.6g}",
        )
    stage = "check-cordes"
    try:
        coeffs = assemble_coefficients(material, grid, jacobian(grid, config.u0))
        report = check_cordes(coeffs, material)
    except ValueError as exc:
        raise HypothesisFailure(stage, str(exc)) from exc
    if not report.passed:
        raise HypothesisFailure(
            stage,
            f"Cordes condition fails at the initial state "
            f"(epsilon_inf={report.epsilon_inf:.6g}, "
            f"ellipticity_ok={report.ellipticity_ok})",
        )
    khat = estimate_khat(grid)
    return cordes_constants(report, khat, material)


def _base_problem(config: ExperimentConfig) -> ProblemInstance:
    return ProblemInstance(
        grid=config.grid, material=config.material, u0=config.u0, u1=config.u1,
        forcing=config.forcing, T=config.T, dt=config.dt,
    )


def run_experiment(config: ExperimentConfig, verbose: bool = False) -> RunManifest:
    """Run the full perturbation-verification pipeline and write reports.

    Deterministic given (config, seed): per-trial RNG streams derive from
    (seed, trial).  The manifest is written before any report file.
    Raises HypothesisFailure when the dimension or Cordes gate fails;
    verifier failures do not raise -- they are recorded per trial and
    reflected in the manifest's passed flag (CLI exit code 3).
    """

    def note(message: str) -> None:
        if verbose:
            print(message, file=sys.stderr)

    cordes_report = _check_hypotheses(config)
    note(f"hypotheses hold (epsilon={cordes_report.epsilon_used:.6g})")

    stage = "simulate-base"
    try:
        base_problem = _base_problem(config)
        base = simulate(base_problem)
    except (ValueError, RuntimeError) as exc:
        raise StageError(stage, str(exc)) from exc
    note(f"base trajectory: {len(base.times)} snapshots")

    rows: list[dict] = []
    worst: tuple[float, object] = (math.inf, None)
    for trial in range(config.trials):
        stage = f"perturb (trial {trial})"
        try:
            perturbed_problem = _perturbed_problem(config, trial, base.times)
        except (ValueError, RuntimeError) as exc:
            raise StageError(stage, str(exc)) from exc
        stage = f"simulate (trial {trial})"
        try:
            tilde = simulate(perturbed_problem)
        except (ValueError, RuntimeError) as exc:
            raise StageError(stage, str(exc)) from exc
        stage = f"verify (trial {trial})"
        try:
            apriori = measure_apriori(base, tilde)
            constants = stability_constants(
                config.material, apriori, config.grid, config.T, cordes_report,
                tilde_u0_h2=norm(config.grid, perturbed_problem.u0, NormKind.H2),
            )
            pair = (base, tilde)
            reports = {
                "v": verify_v_bound(pair, constants, slack=config.slack),
                "z": verify_z_bound(pair, constants, slack=config.slack),
                "h2": verify_h2_bound(pair, constants, slack=config.slack),
                "main": verify_main_estimate(pair, constants, slack=config.slack),
            }
        except ValueError as exc:
            raise StageError(stage, str(exc)) from exc
        row = {"trial": trial}
        row.update(
            {f"d_{k}": v for k, v in reports["main"].perturbations.items()}
        )
        for name, report in reports.items():
            row[f"margin_{name}"] = report.min_margin
            row[f"pass_{name}"] = report.passed
        rows.append(row)
        if reports["main"].min_margin < worst[0]:
            worst = (reports["main"].min_margin, reports["main"])
        note(
            f"trial {trial}: margins "
            + " ".join(f"{k}={reports[k].min_margin:.3g}" for k in reports)
        )

    passed = all(
        row[f"pass_{name}"] for row in rows for name in ("v", "z", "h2", "main")
    )

    stage = "write-reports"
    try:
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts = {
            "verify_csv": "verify.csv",
            "margins_png": "margins.png",
            "main_trace_png": "main_trace.png",
        }
        manifest = RunManifest(
            config_hash=config.config_hash(), version=VERSION,
            seed=config.seed, trials=config.trials,
            created=datetime.now(timezone.utc).isoformat(),
            artifacts=artifacts, passed=passed,
            path=str(out_dir / "manifest.txt"),
        )
        _write_manifest(manifest)
        header = (
            ["trial", "d_u0_h2", "d_u1_h1", "d_f_w11", "d_alpha_inf"]
            + [f"margin_{n}" for n in ("v", "z", "h2", "main")]
            + [f"pass_{n}" for n in ("v", "z", "h2", "main")]
        )
        _write_csv(out_dir / "verify.csv", header, [[row[k] for k in header] for row in rows])
        _render_margin_figure(out_dir / "margins.png", rows)
        if worst[1] is not None:
            _render_trace_figure(out_dir / "main_trace.png", worst[1])
    except OSError as exc:
        raise StageError(stage, str(exc)) from exc
    return manifest


# ---------------------------------------------------------------------------
# subcommands


def _cmd_check_cordes(config: ExperimentConfig, args) -> int:
    grid, material = config.grid, config.material
    dim = check_dimension_condition(material, nd=grid.n * grid.d)
    print(f"dimension_ok={dim.ok} ({dim.lower:.6g} < {dim.kappa:.6g} < {dim.upper:.6g})")
    if not dim.ok:
        return EXIT_HYPOTHESIS
    coeffs = assemble_coefficients(material, grid, jacobian(grid, config.u0))
    report = check_cordes(coeffs, material)
    print(f"epsilon_max={float(np.max(report.epsilon_max)):.12g}")
    for line in report.summary_lines():
        print(line)
    return EXIT_PASS if report.passed else EXIT_HYPOTHESIS


def _cmd_solve_elliptic(config: ExperimentConfig, args) -> int:
    grid = config.grid
    report = _check_hypotheses(config)
    rng = np.random.default_rng([config.seed, 0])
    rhs = _scaled_combo(grid, rng, 1.0, NormKind.L2)
    coeffs = assemble_coefficients(config.material, grid, jacobian(grid, config.u0))
    result = fixed_point_solve(coeffs, rhs, report)
    h2 = verify_h2_estimate(result, rhs, report.c_alpha, slack=config.slack)
    print(f"iterations={result.iterations}")
    print(f"residual={result.residual:.6g}")
    print(f"increment={result.increment:.6g}")
    print(f"h2_norm={h2.h2_norm:.12g}")
    print(f"h2_bound={h2.bound:.12g} (c_alpha={h2.c_alpha:.12g})")
    print(f"h2_pass={h2.passed}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        coords = grid.coords().reshape(grid.d, -1)
        values = result.solution.reshape(grid.n, -1)
        header = [f"x{a}" for a in range(grid.d)] + [f"u{k}" for k in range(grid.n)]
        rows = [list(coords[:, j]) + list(values[:, j]) for j in range(coords.shape[1])]
        _write_csv(out_dir / "solution.csv", header, rows)
    return EXIT_PASS if h2.passed else EXIT_VERIFIER


def _cmd_simulate(config: ExperimentConfig, args) -> int:
    problem = _base_problem(config)
    traj = simulate(problem)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = {"timeseries_csv": "timeseries.csv"}
    if config.dump_fields:
        artifacts["fields_csv"] = "fields.csv"
    manifest = RunManifest(
        config_hash=config.config_hash(), version=VERSION,
        seed=config.seed, trials=0,
        created=datetime.now(timezone.utc).isoformat(),
        artifacts=artifacts, passed=True,
        path=str(out_dir / "manifest.txt"),
    )
    _write_manifest(manifest)
    grid = config.grid
    velocity = traj.velocity()
    rho = config.material.rho_on(grid)
    rows = []
    for t, u_t, v_t in zip(traj.times, traj.snapshots, velocity):
        rows.append([
            t,
            norm(grid, u_t, NormKind.L2),
            norm(grid, u_t, NormKind.H1),
            norm(grid, u_t, NormKind.H2),
            norm(grid, v_t, NormKind.L2_RHO, rho=rho),
        ])
    _write_csv(out_dir / "timeseries.csv",
               ["time", "l2", "h1", "h2", "velocity_l2_rho"], rows)
    if config.dump_fields:
        coords = grid.coords().reshape(grid.d, -1)
        values = traj.snapshots[-1].reshape(grid.n, -1)
        header = [f"x{a}" for a in range(grid.d)] + [f"u{k}" for k in range(grid.n)]
        field_rows = [list(coords[:, j]) + list(values[:, j]) for j in range(coords.shape[1])]
        _write_csv(out_dir / "fields.csv", header, field_rows)
    print(f"snapshots={len(traj.times)} final_l2={rows[-1][1]:.12g}")
    return EXIT_PASS


def _cmd_constants(config: ExperimentConfig, args) -> int:
    report = _check_hypotheses(config)
    base = simulate(_base_problem(config))
    apriori = measure_apriori(base)
    constants = stability_constants(
        config.material, apriori, config.grid, config.T, report,
        tilde_u0_h2=norm(config.grid, config.u0, NormKind.H2),
    )
    for line in constants.summary_lines():
        print(line)
    return EXIT_PASS


def _cmd_verify_stability(config: ExperimentConfig, args) -> int:
    manifest = run_experiment(config, verbose=args.verbose)
    print(f"manifest={manifest.path} passed={manifest.passed}")
    return EXIT_PASS if manifest.passed else EXIT_VERIFIER


COMMANDS = {
    "check-cordes": (_cmd_check_cordes, "evaluate the Cordes and dimension conditions"),
    "solve-elliptic": (_cmd_solve_elliptic, "solve one nondivergence system and check its H2 bound"),
    "simulate": (_cmd_simulate, "integrate the base problem and write norm time series"),
    "constants": (_cmd_constants, "print the full stability-constant table"),
    "verify-stability": (_cmd_verify_stability, "run the paired-perturbation verification experiment"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="elastostab",
        description="Simulate conic hyperelastic motion and verify its stability bounds.",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="path to the JSON config")
        sub.add_argument("--out", default=None, help="override the output directory")
        sub.add_argument("--seed", type=int, default=None, help="override the perturbation seed")
        sub.add_argument("--verbose", action="store_true", help="progress notes on stderr")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a command is required")
    try:
        config = load_config(args.config)
        if args.out is not None:
            config = dataclasses.replace(config, out_dir=args.out)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        return COMMANDS[args.command][0](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypothesisFailure as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except StageError as exc:
        print(f"stage error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
