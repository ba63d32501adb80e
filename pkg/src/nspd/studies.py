"""Convergence studies: strong/weak order estimation, deterministic
splitting order, and sphere-constraint drift order."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import SolverConfig
from .fields import SystemState, initial_state
from .integrators import TrajectoryStepper, ito_noise_update, rodrigues_rotate, run_trajectory
from .mild import state_difference_norm
from .noise import (
    NoisePath,
    brownian_bridge_refine,
    coarsen_noise_path,
    sample_noise_path,
)
from .spectral import SpectralField, sobolev_norm, zero_field


@dataclass(frozen=True)
class StudyResult:
    name: str
    dts: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float


def fit_slope(dts, errors) -> float:
    """Least-squares order: slope of log error against log dt."""
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        raise ValueError("slope fit needs positive errors")
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


def validate_dt_list(dt_list, t_final: float | None = None) -> tuple[float, ...]:
    dts = tuple(float(x) for x in dt_list)
    if len(dts) < 2:
        raise ValueError("need at least two dt values")
    for a, b in zip(dts, dts[1:]):
        if abs(b - a / 2.0) > 1e-12 * a:
            raise ValueError(f"dt list must halve: {a} -> {b}")
    if t_final is not None:
        n = t_final / dts[0]
        if abs(n - round(n)) > 1e-9:
            raise ValueError(
                f"t_max = {t_final} is not a multiple of the coarsest dt = {dts[0]}"
            )
    return dts


def deterministic_convergence_study(cfg: SolverConfig, dt_list) -> StudyResult:
    """Splitting error with noise off, measured in the V_alpha norm at
    t_max against a reference run at an eighth of the finest dt (far enough
    below the sweep that self-convergence bias is negligible)."""
    dts = validate_dt_list(dt_list, cfg.scheme.t_max)
    quiet = cfg.with_overrides(
        noise=replace(cfg.noise, sigma=0.0),
        h_constant=(0.0, 0.0, 0.0),
        h_terms=(),
    )
    runs = list(dts) + [dts[-1] / 8.0]
    finals = []
    for dt in runs:
        c = quiet.with_overrides(scheme=replace(quiet.scheme, dt=dt))
        rec = run_trajectory(c, keep_states=True)
        if rec.status != "completed":
            raise RuntimeError(f"deterministic study run stopped early at dt={dt}")
        finals.append(rec.states[-1])
    ref = finals[-1]
    errors = tuple(
        state_difference_norm(s, ref, cfg.alpha, "V") for s in finals[:-1]
    )
    return StudyResult("deterministic", dts, errors, fit_slope(dts, errors))


def constraint_drift_study(cfg: SolverConfig, dt_list) -> StudyResult:
    """Max pointwise ||d|^2 - 1| at t_max with renormalization off.

    All levels consume the same Brownian motion (bridge-refined from the
    coarsest grid), so the measured drift is a smooth function of dt."""
    dts = validate_dt_list(dt_list, cfg.scheme.t_max)
    drifting = cfg.with_overrides(scheme=replace(cfg.scheme, renormalize_director=False))
    n_coarse = int(round(cfg.scheme.t_max / dts[0]))
    base = sample_noise_path(n_coarse, dts[0], cfg.noise)
    fine = brownian_bridge_refine(base, 2 ** (len(dts) - 1))
    errors = []
    for dt in dts:
        c = drifting.with_overrides(scheme=replace(drifting.scheme, dt=dt))
        path = coarsen_noise_path(fine, int(round(dt / fine.dt)))
        rec = run_trajectory(c, noise_path=path)
        if rec.status != "completed":
            raise RuntimeError(f"constraint study run stopped early at dt={dt}")
        errors.append(rec.max_constraint_dev[-1])
    return StudyResult("constraint_drift", dts, tuple(errors), fit_slope(dts, errors))


def _linear_velocity_run(
    stepper: TrajectoryStepper, v0: SpectralField, path: NoisePath, n_steps: int
) -> SpectralField:
    """dv = -Av dt + Q dW via the velocity step with zero drift."""
    grid = v0.grid
    zero_drift = zero_field(grid, grid.dim)
    d_dummy = zero_field(grid, 3)
    v = v0
    for i in range(n_steps):
        state = SystemState(i * path.dt, v, d_dummy)
        v = stepper.step_velocity(state, zero_drift, path.increment(i), path.dt)
    return v


def strong_convergence_study(
    cfg: SolverConfig, dt_list, n_paths: int = 200, ref_factor: int = 4
) -> StudyResult:
    """Strong error of the additive-noise linearized velocity problem
    against a bridge-refined reference: mean H^alpha end-state error."""
    dts = validate_dt_list(dt_list, cfg.scheme.t_max)
    t_final = cfg.scheme.t_max
    n_coarse = int(round(t_final / dts[0]))
    noise = replace(cfg.noise, multiplicative_gain=0.0)
    lin = cfg.with_overrides(noise=noise)
    stepper = TrajectoryStepper(lin)
    v0 = initial_state(cfg.grid, cfg.velocity_amplitude, 0.0).v
    total_factor = 2 ** (len(dts) - 1) * ref_factor

    sums = np.zeros(len(dts))
    for p in range(n_paths):
        base = sample_noise_path(n_coarse, dts[0], noise, trajectory_id=p)
        fine = brownian_bridge_refine(base, total_factor)
        v_ref = _linear_velocity_run(stepper, v0, fine, fine.n_steps)
        for j, dt in enumerate(dts):
            path = coarsen_noise_path(fine, int(round(dt / fine.dt)))
            v_end = _linear_velocity_run(stepper, v0, path, path.n_steps)
            diff = SpectralField(cfg.grid, v_end.coeffs - v_ref.coeffs)
            sums[j] += sobolev_norm(diff, cfg.alpha)
    errors = tuple(sums / n_paths)
    return StudyResult("strong_linear", dts, errors, fit_slope(dts, errors))


def weak_ito_stratonovich_study(
    dt_list,
    n_paths: int = 10_000,
    t_final: float = 1.0,
    h_vec=(1.0, 0.0, 0.0),
    d0=(0.0, 0.0, 1.0),
    seed: int = 2024,
    ito_correction_sign: float = 1.0,
) -> StudyResult:
    """Single-point model: |E d3(T)| difference between the exact-rotation
    and Ito-with-correction noise steps, common increments per level."""
    dts = validate_dt_list(dt_list)
    h = np.array(h_vec, dtype=float).reshape(3, 1)
    errors = []
    for lvl, dt in enumerate(dts):
        n_steps = int(round(t_final / dt))
        gen = np.random.Generator(np.random.Philox(key=[seed, lvl]))
        d_rot = np.tile(np.array(d0, dtype=float).reshape(3, 1), (1, n_paths))
        d_ito = d_rot.copy()
        h_b = np.broadcast_to(h, d_rot.shape)
        for _ in range(n_steps):
            deta = gen.standard_normal(n_paths) * np.sqrt(dt)
            d_rot = rodrigues_rotate(d_rot, h_b, deta)
            d_ito = ito_noise_update(d_ito, h_b, deta, dt, ito_correction_sign)
        errors.append(abs(float(d_ito[2].mean() - d_rot[2].mean())))
    return StudyResult("weak_ito_stratonovich", dts, tuple(errors), fit_slope(dts, errors))


def run_convergence_report(cfg: SolverConfig, dt_list, n_paths: int = 200) -> list[StudyResult]:
    """The three solver-level studies plus the single-point weak study."""
    dts = validate_dt_list(dt_list)
    if len(dts) < 4:
        raise ValueError("convergence report needs at least 4 halving dt values")
    results = [
        deterministic_convergence_study(cfg, dts),
        constraint_drift_study(cfg, dts),
        strong_convergence_study(
            cfg.with_overrides(grid=replace(cfg.grid, n=min(cfg.grid.n, 32))),
            dts,
            n_paths=n_paths,
        ),
        weak_ito_stratonovich_study((0.04, 0.02, 0.01, 0.005), n_paths=8000, t_final=1.0),
    ]
    return results
