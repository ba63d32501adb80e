"""Mild-solution machinery: path norms, semigroup convolutions, and the
Picard iteration for the fixed point of the variation-of-constants map.

Both convolutions use the left-endpoint rule (the stochastic sum must not
anticipate), evaluated through the exact recursion

    u(t_{n+1}) = S(dt) [u(t_n) + dt * f(t_n)]         (S * f)
    u(t_{n+1}) = S(dt) [u(t_n) + xi(t_n) dW_n]        (S <> xi)

which reproduces the defining sums exactly because the semigroup
multipliers compose without error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SolverConfig, build_h_field
from .fields import SystemState, product_norm
from .nonlinear import cross3, double_cross, full_drift
from .noise import NoiseIncrement, NoisePath, apply_velocity_noise, velocity_basis
from .spectral import (
    Grid,
    SpectralField,
    semigroup_apply,
    to_physical,
    to_spectral,
    zero_field,
)


class PicardDivergence(RuntimeError):
    """Residual growth beyond 1e3 x the initial residual: horizon too long."""

    def __init__(self, residuals: list[float]):
        super().__init__(
            f"Picard residuals grew from {residuals[0]:.3e} to {residuals[-1]:.3e}"
        )
        self.residuals = residuals


def _semigroup_state(y: SystemState, t: float, gamma: float) -> SystemState:
    return SystemState(
        y.time,
        semigroup_apply(y.v, t, which="stokes"),
        semigroup_apply(y.d, gamma * t, which="heat"),
    )


def _zero_state(grid: Grid, t: float = 0.0) -> SystemState:
    return SystemState(t, zero_field(grid, grid.dim), zero_field(grid, 3))


def _add(a: SystemState, b: SystemState, scale: float = 1.0) -> SystemState:
    return SystemState(
        a.time,
        SpectralField(a.grid, a.v.coeffs + scale * b.v.coeffs),
        SpectralField(a.grid, a.d.coeffs + scale * b.d.coeffs),
    )


def state_difference_norm(
    a: SystemState, b: SystemState, alpha: float, level: str = "V"
) -> float:
    return product_norm(_add(a, b, -1.0), alpha, level)


def xt_norm(states: list[SystemState], dt: float, alpha: float) -> float:
    """Path norm: sqrt(sup_n ||u_n||_V^2 + trapezoid_n ||u_n||_E^2 dt)."""
    if not states:
        raise ValueError("X_T norm of an empty path")
    sup = max(product_norm(s, alpha, "V") for s in states) ** 2
    e2 = np.array([product_norm(s, alpha, "E") ** 2 for s in states])
    integral = float(np.trapezoid(e2, dx=dt)) if len(states) > 1 else 0.0
    return float(np.sqrt(sup + integral))


def xt_distance(a: list[SystemState], b: list[SystemState], dt: float, alpha: float) -> float:
    if len(a) != len(b):
        raise ValueError("paths must share a time grid")
    return xt_norm([_add(x, y, -1.0) for x, y in zip(a, b)], dt, alpha)


def convolution_s_star(
    forcing: list[SystemState], dt: float, gamma: float = 1.0
) -> list[SystemState]:
    """u(t_n) = sum_{j<n} S(t_n - t_j) f(t_j) dt on a uniform grid."""
    if not forcing:
        raise ValueError("empty forcing path")
    grid = forcing[0].grid
    out = [_zero_state(grid)]
    for n, f in enumerate(forcing[:-1]):
        nxt = _semigroup_state(_add(out[-1], f, dt), dt, gamma)
        nxt.time = (n + 1) * dt
        out.append(nxt)
    return out


def stochastic_convolution(
    applied_increments: list[SystemState], dt: float, gamma: float = 1.0
) -> list[SystemState]:
    """u(t_{n+1}) = S(dt)[u(t_n) + g_n] for already-applied increments
    g_j = xi(t_j) dW_j; the multi-channel extension of S <> xi."""
    if not applied_increments:
        raise ValueError("empty increment path")
    grid = applied_increments[0].grid
    out = [_zero_state(grid)]
    for n, g in enumerate(applied_increments):
        nxt = _semigroup_state(_add(out[-1], g, 1.0), dt, gamma)
        nxt.time = (n + 1) * dt
        out.append(nxt)
    return out


def convolution_s_diamond(
    coefficient: list[SystemState],
    increments: np.ndarray,
    dt: float,
    gamma: float = 1.0,
) -> list[SystemState]:
    """S <> xi for one scalar Brownian channel: u(t_n) = sum_{j<n}
    S(t_n - t_j) xi(t_j) dW_j."""
    increments = np.asarray(increments, dtype=float)
    if len(coefficient) - 1 != increments.size:
        raise ValueError(
            f"need one increment per step: {len(coefficient) - 1} steps, "
            f"{increments.size} increments"
        )
    applied = [
        _add(_zero_state(xi.grid), xi, float(dw))
        for xi, dw in zip(coefficient[:-1], increments)
    ]
    return stochastic_convolution(applied, dt, gamma)


@dataclass
class PicardResult:
    iterates: list[list[SystemState]]
    residuals: list[float]  # residuals[m] = |u^(m+1) - u^(m)|_{X_T}

    @property
    def fixed_point(self) -> list[SystemState]:
        return self.iterates[-1]


class PicardOperator:
    """The map Phi(u) = S y0 + S*(drift(u)) + S<>(noisecoef(u)) on a fixed
    Brownian path, in the Ito form (drift carries the +1/2 G^2 correction)."""

    def __init__(self, y0: SystemState, path: NoisePath, cfg: SolverConfig, t_final: float):
        dt = path.dt
        n_steps = int(round(t_final / dt))
        if n_steps < 1 or n_steps > path.n_steps:
            raise ValueError(f"horizon {t_final} not covered by the noise path")
        self.y0 = y0
        self.path = path
        self.cfg = cfg
        self.dt = dt
        self.n_steps = n_steps
        h_phys = to_physical(build_h_field(cfg))
        self.h_phys = h_phys if np.abs(h_phys).max() > 0 else None
        self.basis = velocity_basis(y0.grid, cfg.noise.n_modes)

    def free_evolution(self) -> list[SystemState]:
        out = [_semigroup_state(self.y0, n * self.dt, self.cfg.gamma) for n in range(self.n_steps + 1)]
        for n, s in enumerate(out):
            s.time = n * self.dt
        return out

    def _drift(self, state: SystemState) -> SystemState:
        drift_v, drift_d = full_drift(state, self.cfg.lam, self.cfg.gamma)
        if self.h_phys is not None:
            corr = to_spectral(
                state.grid, 0.5 * double_cross(to_physical(state.d), self.h_phys)
            )
            drift_d = SpectralField(state.grid, drift_d.coeffs + corr.coeffs)
        return SystemState(state.time, drift_v, drift_d)

    def _noise(self, state: SystemState, j: int) -> SystemState:
        grid = state.grid
        cfg = self.cfg
        if cfg.noise.sigma != 0.0:
            inc = NoiseIncrement(dW=self.path.dW[j], dEta=float(self.path.dEta[j]))
            v_part = apply_velocity_noise(state.v, inc, cfg.noise, cfg.alpha, self.basis)
        else:
            v_part = zero_field(grid, grid.dim)
        if self.h_phys is not None:
            d_part = to_spectral(
                grid, cross3(to_physical(state.d), self.h_phys) * float(self.path.dEta[j])
            )
        else:
            d_part = zero_field(grid, 3)
        return SystemState(state.time, v_part, d_part)

    def apply(self, u: list[SystemState]) -> list[SystemState]:
        out = [self.y0.copy()]
        for n in range(self.n_steps):
            w = _add(_add(out[-1], self._drift(u[n]), self.dt), self._noise(u[n], n), 1.0)
            nxt = _semigroup_state(w, self.dt, self.cfg.gamma)
            nxt.time = (n + 1) * self.dt
            out.append(nxt)
        return out

    def residual(self, u: list[SystemState]) -> float:
        return xt_distance(self.apply(u), u, self.dt, self.cfg.alpha)


def picard_iterate(
    y0: SystemState,
    path: NoisePath,
    cfg: SolverConfig,
    t_final: float,
    n_iters: int = 5,
) -> PicardResult:
    """Iterate the mild map from the free evolution; returns successive
    X_T residuals.  Raises :class:`PicardDivergence` when residuals grow
    by 1e3 over the initial one (horizon too long for contraction)."""
    op = PicardOperator(y0, path, cfg, t_final)
    iterates = [op.free_evolution()]
    residuals: list[float] = []
    for _ in range(n_iters):
        nxt = op.apply(iterates[-1])
        residuals.append(xt_distance(nxt, iterates[-1], path.dt, cfg.alpha))
        iterates.append(nxt)
        if residuals[-1] > 1e3 * max(residuals[0], 1e-300):
            raise PicardDivergence(residuals)
    return PicardResult(iterates=iterates, residuals=residuals)
