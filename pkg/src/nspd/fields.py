"""State container for the velocity/director pair and product-space norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    divergence_ratio,
    mean_value,
    sobolev_norm,
    to_spectral,
)

SPACE_LEVELS = ("H", "V", "E")  # H_alpha, V_alpha, E_alpha gradings


@dataclass
class SystemState:
    """One snapshot (v, d): divergence-free mean-zero velocity and director."""

    time: float
    v: SpectralField
    d: SpectralField

    def __post_init__(self) -> None:
        if self.v.grid != self.d.grid:
            raise ValueError("velocity and director must share a grid")
        if self.v.components != self.v.grid.dim:
            raise ValueError(f"velocity needs {self.v.grid.dim} components")
        if self.d.components != 3:
            raise ValueError("director needs 3 components")

    @property
    def grid(self) -> Grid:
        return self.v.grid

    def copy(self) -> "SystemState":
        return SystemState(self.time, self.v.copy(), self.d.copy())


def validate_state(state: SystemState, tol: float = 1e-12) -> None:
    """Raise if the velocity is not solenoidal and mean-zero within tol."""
    ratio = divergence_ratio(state.v)
    if ratio > tol:
        raise ValueError(f"velocity divergence ratio {ratio:.3e} exceeds {tol:.1e}")
    mean = np.abs(mean_value(state.v)).max()
    if mean > tol:
        raise ValueError(f"velocity mean {mean:.3e} exceeds {tol:.1e}")


def check_alpha(alpha: float, dim: int) -> None:
    if not alpha > dim / 2.0:
        raise ValueError(f"alpha must exceed dim/2 = {dim / 2.0}, got {alpha}")


def taylor_green_velocity(grid: Grid, amplitude: float) -> SpectralField:
    """Divergence-free trigonometric velocity; the classic cellular flow."""
    xs = grid.meshgrid()
    if grid.dim == 2:
        samples = np.stack(
            [
                np.sin(xs[0]) * np.cos(xs[1]),
                -np.cos(xs[0]) * np.sin(xs[1]),
            ]
        )
    else:
        samples = np.stack(
            [
                np.sin(xs[0]) * np.cos(xs[1]) * np.cos(xs[2]),
                -np.cos(xs[0]) * np.sin(xs[1]) * np.cos(xs[2]),
                np.zeros(grid.shape),
            ]
        )
    v = to_spectral(grid, amplitude * samples)
    v.coeffs[(slice(None),) + (0,) * grid.dim] = 0.0  # pin the mean exactly
    return v


def _director_perturbation(grid: Grid) -> np.ndarray:
    # Third component reaches -1 at the origin, so epsilon = 1 makes
    # e3 + eps*p vanish there and the constructor must reject it.
    xs = grid.meshgrid()
    p3 = np.cos(xs[0]) * np.cos(xs[1])
    if grid.dim == 3:
        p3 = p3 * np.cos(xs[2])
    return np.stack([np.sin(xs[0]), np.sin(xs[1]), -0.5 * (1.0 + p3)])


def unit_director(grid: Grid, epsilon: float) -> SpectralField:
    """Pointwise unit-norm director: normalize(e3 + epsilon * smooth bump)."""
    w = np.zeros((3,) + grid.shape)
    w[2] = 1.0
    if epsilon != 0.0:
        w += epsilon * _director_perturbation(grid)
    mag = np.sqrt((w**2).sum(axis=0))
    if mag.min() < 1e-8:
        raise ValueError(
            f"director perturbation drives |e3 + eps*p| to {mag.min():.3e} < 1e-8; "
            "reduce director_epsilon"
        )
    return to_spectral(grid, w / mag)


def initial_state(
    grid: Grid, velocity_amplitude: float, director_epsilon: float
) -> SystemState:
    v = taylor_green_velocity(grid, velocity_amplitude)
    d = unit_director(grid, director_epsilon)
    state = SystemState(0.0, v, d)
    validate_state(state)
    return state


def product_norm(state: SystemState, alpha: float, level: str = "V") -> float:
    """Graded product norm: sqrt(||v||_{H^a}^2 + ||d||_{H^(a+1)}^2) with
    a = alpha-1, alpha, alpha+1 for levels H, V, E."""
    check_alpha(alpha, state.grid.dim)
    if level not in SPACE_LEVELS:
        raise ValueError(f"level must be one of {SPACE_LEVELS}, got {level!r}")
    a = alpha + {"H": -1.0, "V": 0.0, "E": 1.0}[level]
    nv = sobolev_norm(state.v, a)
    nd = sobolev_norm(state.d, a + 1.0)
    return float(np.hypot(nv, nd))


@dataclass(frozen=True)
class PathNorm:
    """Sup-in-time part and time-integral part of the path norm."""

    sup_term: float
    integral_term: float

    @property
    def total(self) -> float:
        return self.sup_term + self.integral_term


def path_norm_from_series(
    times: np.ndarray,
    v_level_norms: np.ndarray,
    e_level_norms: np.ndarray,
    horizon: float | None = None,
) -> PathNorm:
    """sup over samples of the squared V-level norm plus the trapezoidal
    integral of the squared E-level norm over [0, horizon].

    A single-sample series is treated as constant over the horizon
    (degenerate quadrature); an empty record is rejected.
    """
    times = np.asarray(times, dtype=float)
    v2 = np.asarray(v_level_norms, dtype=float) ** 2
    e2 = np.asarray(e_level_norms, dtype=float) ** 2
    if times.size == 0:
        raise ValueError("path norm of an empty record")
    if times.size != v2.size or times.size != e2.size:
        raise ValueError("times and norm series must have equal length")
    if horizon is None:
        horizon = float(times[-1])
    if times.size == 1:
        return PathNorm(float(v2[0]), float(horizon * e2[0]))
    if np.any(np.diff(times) <= 0):
        raise ValueError("record times must be strictly increasing")
    return PathNorm(float(v2.max()), float(np.trapezoid(e2, times)))
