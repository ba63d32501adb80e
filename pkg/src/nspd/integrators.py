"""Trajectory evolution by exponential-Euler splitting.

One step from state (v, d):

    v+  = S_stokes(dt)[v + dt * drift_v + Q(v) dW]
    d~  = S_heat(gamma dt)[d + dt * drift_d]
    d+  = rotation of d~ about h by the angle generated by (d x h) dEta
          (or the Ito update d~ + (d~ x h) dEta + 1/2 G^2(d~) dt)
    d+  <- d+/|d+|   pointwise, if renormalization is on

The rotation variant realizes the transport noise exactly and preserves
|d| at every grid point; the Ito variant carries the explicit 1/2 G^2
correction instead and is weakly equivalent to first order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SolverConfig, build_h_field, config_hash
from .diagnostics import constraint_report
from .fields import SystemState, initial_state, product_norm
from .nonlinear import cross3, double_cross, full_drift
from .noise import (
    NoiseIncrement,
    NoisePath,
    VelocityNoiseBasis,
    apply_velocity_noise,
    sample_increment,
    velocity_basis,
)
from .records import (
    STATUS_COMPLETED,
    STATUS_FAILED,
    STATUS_STOPPED,
    TrajectoryRecord,
)
from .spectral import (
    SpectralField,
    divergence_ratio,
    l2_norm,
    semigroup_apply,
    to_physical,
    to_spectral,
)


class NumericalFailure(RuntimeError):
    """Raised by the low-level steppers on NaN/Inf; carries the step index."""

    def __init__(self, step_index: int):
        super().__init__(f"non-finite state at step {step_index}")
        self.step_index = step_index


def rodrigues_rotate(d: np.ndarray, h: np.ndarray, deta: float) -> np.ndarray:
    """Rotate d(x) about the axis h(x)/|h(x)| by angle -|h(x)| * deta.

    The sign makes the infinitesimal generator equal d x h.  Points with
    h(x) = 0 are left unchanged; |d(x)| is preserved exactly.
    Operates on arrays of shape (3, ...).
    """
    h_mag = np.sqrt((h**2).sum(axis=0))
    safe = np.where(h_mag > 0, h_mag, 1.0)
    axis = h / safe
    theta = -h_mag * deta
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    axis_cross_d = cross3(axis, d)
    axis_dot_d = np.einsum("c...,c...->...", axis, d)
    rotated = d * cos_t + axis_cross_d * sin_t + axis * (axis_dot_d * (1.0 - cos_t))
    return np.where(h_mag > 0, rotated, d)


def ito_noise_update(
    d: np.ndarray, h: np.ndarray, deta: float, dt: float, correction_sign: float = 1.0
) -> np.ndarray:
    """d + (d x h) dEta + 1/2 (d x h) x h dt on arrays of shape (3, ...).

    `correction_sign` exists as a sensitivity hook for the weak-consistency
    check; physical runs use +1.
    """
    return d + cross3(d, h) * deta + 0.5 * correction_sign * double_cross(d, h) * dt


def step_director_noise_rotation(
    d: SpectralField, h: SpectralField, deta: float
) -> SpectralField:
    out = rodrigues_rotate(to_physical(d), to_physical(h), deta)
    return to_spectral(d.grid, out)


def step_director_noise_ito(
    d: SpectralField, h: SpectralField, deta: float, dt: float, correction_sign: float = 1.0
) -> SpectralField:
    out = ito_noise_update(to_physical(d), to_physical(h), deta, dt, correction_sign)
    return to_spectral(d.grid, out)


def renormalize_director(d: SpectralField) -> SpectralField:
    phys = to_physical(d)
    mag = np.sqrt((phys**2).sum(axis=0))
    if mag.min() <= 0:
        raise ValueError("cannot renormalize a vanishing director")
    return to_spectral(d.grid, phys / mag)


@dataclass
class TrajectoryStepper:
    """Precomputed machinery for advancing one trajectory."""

    config: SolverConfig
    ito_correction_sign: float = 1.0

    def __post_init__(self) -> None:
        cfg = self.config
        self.grid = cfg.grid
        self.h: SpectralField = build_h_field(cfg)
        self.h_phys: np.ndarray = to_physical(self.h)
        self.basis: VelocityNoiseBasis = velocity_basis(self.grid, cfg.noise.n_modes)
        self.h_is_zero: bool = bool(np.abs(self.h_phys).max() == 0.0)

    def step_velocity(
        self, state: SystemState, drift_v: SpectralField, inc: NoiseIncrement, dt: float
    ) -> SpectralField:
        cfg = self.config
        forced = state.v.coeffs + dt * drift_v.coeffs
        if cfg.noise.sigma != 0.0:
            forced = forced + apply_velocity_noise(
                state.v, inc, cfg.noise, cfg.alpha, self.basis
            ).coeffs
        return semigroup_apply(SpectralField(self.grid, forced), dt, which="stokes")

    def step_director_deterministic(
        self, state: SystemState, dt: float, drift_d: SpectralField | None = None
    ) -> SpectralField:
        if drift_d is None:
            _, drift_d = full_drift(state, self.config.lam, self.config.gamma)
        forced = state.d.coeffs + dt * drift_d.coeffs
        return semigroup_apply(
            SpectralField(self.grid, forced), self.config.gamma * dt, which="heat"
        )

    def step_director_noise(self, d: SpectralField, deta: float, dt: float) -> SpectralField:
        if self.h_is_zero:
            return d
        if self.config.scheme.variant == "stratonovich_rotation":
            out = rodrigues_rotate(to_physical(d), self.h_phys, deta)
        else:
            out = ito_noise_update(
                to_physical(d), self.h_phys, deta, dt, self.ito_correction_sign
            )
        return to_spectral(self.grid, out)

    def step(self, state: SystemState, inc: NoiseIncrement, step_index: int) -> SystemState:
        cfg = self.config
        dt = cfg.scheme.dt
        drift_v, drift_d = full_drift(state, cfg.lam, cfg.gamma)
        v_next = self.step_velocity(state, drift_v, inc, dt)
        d_next = self.step_director_deterministic(state, dt, drift_d)
        d_next = self.step_director_noise(d_next, inc.dEta, dt)
        if cfg.scheme.renormalize_director:
            d_next = renormalize_director(d_next)
        if not (np.isfinite(v_next.coeffs).all() and np.isfinite(d_next.coeffs).all()):
            raise NumericalFailure(step_index)
        return SystemState(state.time + dt, v_next, d_next)


def run_trajectory(
    config: SolverConfig,
    trajectory_id: int = 0,
    noise_path: NoisePath | None = None,
    initial: SystemState | None = None,
    keep_states: bool = False,
) -> TrajectoryRecord:
    """Advance until t_max, the largest stopping threshold, or numerical
    failure; record diagnostics and threshold crossings at every step.

    With keep_states the full state sequence is attached to the record
    (in memory only; never serialized)."""
    cfg = config
    stepper = TrajectoryStepper(cfg)
    state = initial.copy() if initial is not None else initial_state(
        cfg.grid, cfg.velocity_amplitude, cfg.director_epsilon
    )
    record = TrajectoryRecord(
        config_hash=config_hash(cfg), alpha=cfg.alpha, thresholds=cfg.thresholds
    )
    if keep_states:
        record.states = [state.copy()]
    n_steps = int(round(cfg.scheme.t_max / cfg.scheme.dt))
    if noise_path is not None:
        dt_gap = abs(noise_path.dt - cfg.scheme.dt)
        if noise_path.n_steps < n_steps or dt_gap > 1e-12 * cfg.scheme.dt:
            raise ValueError("noise path does not match the scheme step grid")

    def observe(s: SystemState) -> float:
        v_norm = product_norm(s, cfg.alpha, "V")
        e_norm = product_norm(s, cfg.alpha, "E")
        rep = constraint_report(s.d, s.time)
        record.append_row(
            s.time,
            v_norm,
            e_norm,
            rep.max_pointwise_dev,
            rep.y_minus,
            rep.z_plus,
            l2_norm(s.v) ** 2,
            divergence_ratio(s.v),
        )
        if cfg.snapshot_stride > 0 and (len(record.times) - 1) % cfg.snapshot_stride == 0:
            record.snapshots.append((s.time, to_physical(s.v), to_physical(s.d)))
        return v_norm

    def update_crossings(t: float, v_norm: float) -> bool:
        for m in cfg.thresholds:
            if m not in record.tau and v_norm >= m:
                record.tau[m] = t
        return cfg.thresholds[-1] in record.tau

    v_norm = observe(state)
    if update_crossings(0.0, v_norm):
        record.status = STATUS_STOPPED
        return record

    for i in range(n_steps):
        inc = (
            noise_path.increment(i)
            if noise_path is not None
            else sample_increment(i, cfg.scheme.dt, cfg.noise, trajectory_id)
        )
        try:
            state = stepper.step(state, inc, i)
        except NumericalFailure:
            t_fail = state.time + cfg.scheme.dt
            for m in cfg.thresholds:
                record.tau.setdefault(m, t_fail)
            record.status = STATUS_FAILED
            return record
        if keep_states:
            record.states.append(state.copy())
        v_norm = observe(state)
        if update_crossings(state.time, v_norm):
            record.status = STATUS_STOPPED
            return record

    record.status = STATUS_COMPLETED
    return record
