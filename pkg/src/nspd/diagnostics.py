"""Verification toolkit: sphere-constraint energies, the mollified
constraint functional, vector identities, estimate-ratio suites, and
stopping-time/lifespan statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nonlinear
from .fields import SystemState, product_norm
from .spectral import (
    Grid,
    SpectralField,
    laplacian,
    linf_norm,
    partial_derivative,
    semigroup_apply,
    sobolev_norm,
    to_physical,
    to_spectral,
)


# ---------------------------------------------------------------------------
# Sphere-constraint energies


@dataclass(frozen=True)
class ConstraintReport:
    """Pointwise and integrated deviation of |d|^2 from 1."""

    t: float
    max_pointwise_dev: float
    y_minus: float  # ||(|d|^2 - 1)_-||_{L^2}^2
    z_plus: float  # ||(|d|^2 - 1)_+||_{L^2}^2


def constraint_report(d: SpectralField, t: float = 0.0) -> ConstraintReport:
    if d.components != 3:
        raise ValueError("constraint report needs a 3-component director")
    dev = (to_physical(d) ** 2).sum(axis=0) - 1.0
    cell = d.grid.cell_volume
    neg = np.minimum(dev, 0.0)
    pos = np.maximum(dev, 0.0)
    return ConstraintReport(
        t=t,
        max_pointwise_dev=float(np.abs(dev).max()),
        y_minus=float((neg**2).sum() * cell),
        z_plus=float((pos**2).sum() * cell),
    )


def _smoothstep(u: np.ndarray) -> np.ndarray:
    """C^2 quintic smoothstep: 0 at 0, 1 at 1, flat first/second derivatives."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


def mollifier(s: np.ndarray) -> np.ndarray:
    """Increasing C^2 bump from -1 (s <= -2) to 0 (s >= -1)."""
    s = np.asarray(s, dtype=float)
    return -1.0 + _smoothstep(s + 2.0)


def psi_ell(d: SpectralField, ell: float) -> float:
    """Mollified negative-part constraint energy
    integral of (|d|^2-1)^2 |phi(ell (|d|^2-1))| dx; converges to y_minus
    monotonically from below as ell grows."""
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    dev = (to_physical(d) ** 2).sum(axis=0) - 1.0
    weight = np.abs(mollifier(ell * dev))
    return float((dev**2 * weight).sum() * d.grid.cell_volume)


def vector_identity_residuals(d: SpectralField) -> tuple[float, float]:
    """Max pointwise residuals of grad|d|^2 = 2 (grad d)^T d and
    Lap|d|^2 = 2 Lap d . d + 2 |grad d|^2, evaluated spectrally."""
    grid = d.grid
    d_phys = to_physical(d)
    mag2 = to_spectral(grid, (d_phys**2).sum(axis=0))

    jac = nonlinear.jacobian_physical(d)
    grad_res = 0.0
    for j in range(grid.dim):
        lhs = to_physical(partial_derivative(mag2, j))[0]
        rhs = 2.0 * np.einsum("c...,c...->...", jac[:, j], to_physical(d))
        grad_res = max(grad_res, float(np.abs(lhs - rhs).max()))

    lap_lhs = to_physical(laplacian(mag2))[0]
    lap_d = to_physical(laplacian(d))
    lap_rhs = 2.0 * np.einsum("c...,c...->...", lap_d, d_phys) + 2.0 * (jac**2).sum(
        axis=(0, 1)
    )
    lap_res = float(np.abs(lap_lhs - lap_rhs).max())
    return grad_res, lap_res


# ---------------------------------------------------------------------------
# Estimate-ratio suites


def band_limited_field(
    grid: Grid, components: int, k_band: int, rng: np.random.Generator, amplitude: float = 1.0
) -> SpectralField:
    """Random smooth field with modes confined to |k_j| <= k_band."""
    shape = (components,) + grid.shape
    samples = np.zeros(shape)
    xs = grid.meshgrid()
    n_waves = 6
    for _ in range(n_waves):
        kvec = rng.integers(-k_band, k_band + 1, size=grid.dim)
        amp = rng.standard_normal(components) * amplitude / n_waves
        phase = rng.uniform(0, 2 * np.pi)
        wave = np.cos(sum(k * x for k, x in zip(kvec, xs)) + phase)
        samples += amp.reshape((components,) + (1,) * grid.dim) * wave
    return to_spectral(grid, samples)


def solenoidal_band_limited_field(
    grid: Grid, k_band: int, rng: np.random.Generator, amplitude: float = 1.0
) -> SpectralField:
    from .spectral import leray_project

    return leray_project(band_limited_field(grid, grid.dim, k_band, rng, amplitude))


def fix_delta(alpha: float, dim: int) -> float:
    """Interpolation exponent for the advection estimate, clamped to (0, 1)."""
    return float(np.clip((alpha - dim / 2.0) / 2.0, 1e-6, 1.0 - 1e-6))


def estimate_ratios(
    grid: Grid, alpha: float, n_samples: int, seed: int, k_band: int | None = None
) -> dict[str, float]:
    """Max LHS/RHS ratios for the four nonlinear-term estimates and the
    product estimate, over random band-limited samples.

    Samples with vanishing right side are skipped (both sides vanish
    together only for degenerate fields).
    """
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    if k_band is None:
        k_band = max(2, grid.k_max_retained // 3)
    delta = fix_delta(alpha, grid.dim)
    ratios = {
        "advection": 0.0,
        "director_convection": 0.0,
        "ericksen_stress": 0.0,
        "ginzburg_difference": 0.0,
        "product": 0.0,
        "drift_difference": 0.0,
    }
    for _ in range(n_samples):
        u = solenoidal_band_limited_field(grid, k_band, rng)
        v = solenoidal_band_limited_field(grid, k_band, rng)
        d = band_limited_field(grid, 3, k_band, rng)
        m = band_limited_field(grid, 3, k_band, rng)

        lhs = sobolev_norm(nonlinear.convective_term(u, v), alpha - 1.0)
        rhs = linf_norm(u) * sobolev_norm(v, alpha) + sobolev_norm(u, alpha - 1.0) * sobolev_norm(
            v, alpha + 1.0
        ) ** delta * sobolev_norm(v, alpha) ** (1.0 - delta)
        if rhs > 0:
            ratios["advection"] = max(ratios["advection"], lhs / rhs)

        lhs = sobolev_norm(nonlinear.director_convection(v, d), alpha)
        rhs = sobolev_norm(v, alpha) * sobolev_norm(d, alpha + 1.0)
        if rhs > 0:
            ratios["director_convection"] = max(ratios["director_convection"], lhs / rhs)

        lhs = sobolev_norm(nonlinear.ericksen_stress(d, m), alpha - 1.0)
        rhs = sobolev_norm(d, alpha + 1.0) * sobolev_norm(m, alpha + 1.0)
        if rhs > 0:
            ratios["ericksen_stress"] = max(ratios["ericksen_stress"], lhs / rhs)

        diff = SpectralField(
            grid, nonlinear.ginzburg_term(d).coeffs - nonlinear.ginzburg_term(m).coeffs
        )
        lhs = sobolev_norm(diff, alpha)
        nd, nm = sobolev_norm(d, alpha + 1.0), sobolev_norm(m, alpha + 1.0)
        dm = SpectralField(grid, d.coeffs - m.coeffs)
        rhs = sobolev_norm(dm, alpha + 1.0) * (nd + nm) * sobolev_norm(d, alpha) + nm**2 * sobolev_norm(
            dm, alpha
        )
        if rhs > 0:
            ratios["ginzburg_difference"] = max(ratios["ginzburg_difference"], lhs / rhs)

        f = band_limited_field(grid, 1, k_band, rng)
        g = band_limited_field(grid, 1, k_band, rng)
        fg = to_spectral(grid, to_physical(f) * to_physical(g))
        lhs = sobolev_norm(fg, alpha)
        rhs = linf_norm(f) * sobolev_norm(g, alpha) + sobolev_norm(f, alpha) * linf_norm(g)
        if rhs > 0:
            ratios["product"] = max(ratios["product"], lhs / rhs)

    # combined drift difference bound over state pairs
    for _ in range(max(n_samples // 2, 1)):
        y1 = SystemState(
            0.0,
            solenoidal_band_limited_field(grid, k_band, rng, 0.5),
            band_limited_field(grid, 3, k_band, rng, 0.5),
        )
        y2 = SystemState(
            0.0,
            solenoidal_band_limited_field(grid, k_band, rng, 0.5),
            band_limited_field(grid, 3, k_band, rng, 0.5),
        )
        ratio = drift_difference_ratio(y1, y2, alpha, delta)
        if ratio is not None:
            ratios["drift_difference"] = max(ratios["drift_difference"], ratio)
    return ratios


def _state_norm(y: SystemState, alpha: float, level: str) -> float:
    return product_norm(y, alpha, level)


def drift_difference_ratio(
    y1: SystemState, y2: SystemState, alpha: float, delta: float
) -> float | None:
    """LHS/RHS of the Lipschitz-type drift bound in the product H_alpha norm."""
    f1v, f1d = nonlinear.full_drift(y1)
    f2v, f2d = nonlinear.full_drift(y2)
    lhs = np.hypot(
        sobolev_norm(SpectralField(y1.grid, f1v.coeffs - f2v.coeffs), alpha - 1.0),
        sobolev_norm(SpectralField(y1.grid, f1d.coeffs - f2d.coeffs), alpha),
    )
    diff = SystemState(
        0.0,
        SpectralField(y1.grid, y1.v.coeffs - y2.v.coeffs),
        SpectralField(y1.grid, y1.d.coeffs - y2.d.coeffs),
    )
    nv_diff = _state_norm(diff, alpha, "V")
    ne_diff = _state_norm(diff, alpha, "E")
    n1v, n2v = _state_norm(y1, alpha, "V"), _state_norm(y2, alpha, "V")
    n2e = _state_norm(y2, alpha, "E")
    rhs = nv_diff * (
        n1v ** (1.0 - delta) * n2e**delta + (n1v + n2v) + (n1v**2 + n2v**2)
    ) + nv_diff ** (1.0 - delta) * ne_diff**delta * n2v
    if rhs == 0:
        return None
    return float(lhs / rhs)


def semigroup_smoothing_constant(
    grid: Grid,
    s: float,
    s_prime: float,
    n_samples: int,
    seed: int,
    t_grid: tuple[float, ...] = (0.01, 0.05, 0.1, 0.5, 1.0),
) -> float:
    """Fitted M: max over samples and times of
    ||S(t)f||_{H^s'} / (||f||_{H^s} (1 + t^-(s'-s)/2))."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 1]))
    fitted = 0.0
    for _ in range(n_samples):
        f = band_limited_field(grid, 1, grid.k_max_retained, rng)
        nf = sobolev_norm(f, s)
        if nf == 0:
            continue
        for t in t_grid:
            ratio = sobolev_norm(semigroup_apply(f, t), s_prime) / (
                nf * (1.0 + t ** (-(s_prime - s) / 2.0))
            )
            fitted = max(fitted, ratio)
    return fitted


# ---------------------------------------------------------------------------
# Stopping times and lifespan statistics


@dataclass(frozen=True)
class LifespanSample:
    trajectory_id: int
    tau_m: tuple[float, ...]  # first crossing per threshold; nan if never
    status: str
    amplitude: float = float("nan")

    def __post_init__(self) -> None:
        crossed = [t for t in self.tau_m if not np.isnan(t)]
        if any(b < a for a, b in zip(crossed, crossed[1:])):
            raise ValueError("crossing times must be non-decreasing")


def first_crossings(
    times: np.ndarray, norms: np.ndarray, thresholds: tuple[float, ...]
) -> list[float]:
    """First recorded time at which the norm reaches each threshold (nan if never)."""
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    out = []
    for m in thresholds:
        hit = np.nonzero(norms >= m)[0]
        out.append(float(times[hit[0]]) if hit.size else float("nan"))
    return out


def blowup_monitor(
    times: np.ndarray,
    norms: np.ndarray,
    thresholds: tuple[float, ...],
    trajectory_id: int = 0,
    status: str | None = None,
    amplitude: float = float("nan"),
) -> LifespanSample:
    """Extract threshold crossings from a norm series; status defaults to
    stopped when the largest threshold was hit, completed otherwise."""
    taus = first_crossings(times, norms, thresholds)
    if status is None:
        status = "stopped" if not np.isnan(taus[-1]) else "completed"
    return LifespanSample(
        trajectory_id=trajectory_id, tau_m=tuple(taus), status=status, amplitude=amplitude
    )


@dataclass(frozen=True)
class SurvivalCurve:
    t_grid: np.ndarray
    survival: np.ndarray
    wilson_low: np.ndarray
    wilson_high: np.ndarray
    n_samples: int
    amplitude: float = float("nan")


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        raise ValueError("Wilson interval needs n >= 1")
    p = successes / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def lifespan_statistics(
    samples: list[LifespanSample], t_grid: np.ndarray
) -> dict[float, SurvivalCurve]:
    """Empirical survival of the top-threshold crossing time, with Wilson
    intervals, grouped by initial-data amplitude."""
    if not samples:
        raise ValueError("lifespan statistics need at least one sample")
    t_grid = np.asarray(t_grid, dtype=float)
    groups: dict[float, list[LifespanSample]] = {}
    for s in samples:
        groups.setdefault(s.amplitude, []).append(s)
    out: dict[float, SurvivalCurve] = {}
    for amp, group in groups.items():
        tau_top = np.array(
            [s.tau_m[-1] if not np.isnan(s.tau_m[-1]) else np.inf for s in group]
        )
        n = len(group)
        surv = np.empty_like(t_grid)
        low = np.empty_like(t_grid)
        high = np.empty_like(t_grid)
        for i, t in enumerate(t_grid):
            alive = int((tau_top >= t).sum())
            surv[i] = alive / n
            low[i], high[i] = wilson_interval(alive, n)
        out[amp] = SurvivalCurve(
            t_grid=t_grid, survival=surv, wilson_low=low, wilson_high=high,
            n_samples=n, amplitude=amp,
        )
    return out
