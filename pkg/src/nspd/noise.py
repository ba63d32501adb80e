"""Truncated cylindrical Wiener process, scalar Brownian motion, and the
velocity noise coefficient.

All randomness is counter-based (Philox) and keyed by
(seed, trajectory id, step index, refinement level), so any increment can be
regenerated bit-identically without carrying generator state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .spectral import Grid, SpectralField, sobolev_norm

_KEY_SALT = 0x9E3779B97F4A7C15  # second Philox key word, fixed for the package


@dataclass(frozen=True)
class NoiseConfig:
    n_modes: int = 8
    sigma: float = 0.05
    decay_s: float = 4.0
    multiplicative_gain: float = 0.0
    seed: int = 1

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.sigma < 0 or self.multiplicative_gain < 0:
            raise ValueError("sigma and multiplicative_gain must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


def validate_noise_config(cfg: NoiseConfig, alpha: float, grid: Grid) -> None:
    """Check the Hilbert-Schmidt decay condition and the truncation bound."""
    bound = alpha + grid.dim / 2.0
    if not cfg.decay_s > bound:
        raise ValueError(
            f"decay_s must exceed alpha + dim/2 = {bound}, got {cfg.decay_s}"
        )
    capacity = basis_capacity(grid)
    if cfg.n_modes > capacity:
        raise ValueError(
            f"n_modes = {cfg.n_modes} exceeds the {capacity} retained basis fields"
        )


@dataclass(frozen=True)
class NoiseIncrement:
    """One step's Gaussian increments: dW per velocity mode, dEta scalar."""

    dW: np.ndarray
    dEta: float


def _generator(seed: int, counter: tuple[int, int, int, int]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(counter=list(counter), key=[seed, _KEY_SALT]))


def sample_increment(
    step_index: int, dt: float, cfg: NoiseConfig, trajectory_id: int = 0
) -> NoiseIncrement:
    """Variance-dt normal increments; pure function of (seed, trajectory, step)."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    gen = _generator(cfg.seed, (step_index, trajectory_id, 0, 0))
    z = gen.standard_normal(cfg.n_modes + 1) * np.sqrt(dt)
    return NoiseIncrement(dW=z[: cfg.n_modes], dEta=float(z[cfg.n_modes]))


# ---------------------------------------------------------------------------
# Divergence-free trigonometric basis for the velocity noise


def _canonical_wavevectors(grid: Grid, count: int) -> list[tuple[int, ...]]:
    """Deterministic enumeration of lattice representatives: sorted by |k|^2
    then lexicographically, one of each +-k pair, within the dealias band."""
    kmax = grid.k_max_retained
    reps = []
    rng = range(-kmax, kmax + 1)
    for kvec in itertools.product(rng, repeat=grid.dim):
        if all(c == 0 for c in kvec):
            continue
        # canonical representative: first nonzero component positive
        first = next(c for c in kvec if c != 0)
        if first < 0:
            continue
        reps.append(kvec)
    reps.sort(key=lambda k: (sum(c * c for c in k), k))
    return reps[:count]


def _tangent_frame(kvec: np.ndarray) -> list[np.ndarray]:
    """Orthonormal vectors spanning the plane perpendicular to k."""
    dim = kvec.size
    if dim == 2:
        t = np.array([-kvec[1], kvec[0]], dtype=float)
        return [t / np.linalg.norm(t)]
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(kvec)))] = 1.0
    t1 = np.cross(kvec, axis)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(kvec, t1)
    t2 /= np.linalg.norm(t2)
    return [t1, t2]


def basis_capacity(grid: Grid) -> int:
    kmax = grid.k_max_retained
    pairs = ((2 * kmax + 1) ** grid.dim - 1) // 2
    return pairs * (grid.dim - 1) * 2


@dataclass(frozen=True)
class VelocityNoiseBasis:
    """L^2-orthonormal, divergence-free, mean-zero trigonometric fields.

    Entry m is sqrt(2/(2 pi)^d) * trig(k_m . x) * sigma_m with trig
    alternating cos/sin; wavevectors repeat per tangent direction and parity.
    """

    grid: Grid
    wavevectors: np.ndarray  # (n_modes, dim) ints
    coeffs: np.ndarray  # (n_modes, dim, n, ..., n) complex

    @property
    def n_modes(self) -> int:
        return self.wavevectors.shape[0]

    def k_sq(self) -> np.ndarray:
        return (self.wavevectors.astype(float) ** 2).sum(axis=1)

    def h_norm_sq(self, r: float) -> np.ndarray:
        """||psi_m||_{H^r}^2 = (1 + |k_m|^2)^r, exact for single-shell fields."""
        return (1.0 + self.k_sq()) ** r

    def field(self, m: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[m].copy())


_BASIS_CACHE: dict[tuple, VelocityNoiseBasis] = {}


def velocity_basis(grid: Grid, n_modes: int) -> VelocityNoiseBasis:
    key = (grid.dim, grid.n, grid.dealias_fraction, n_modes)
    if key in _BASIS_CACHE:
        return _BASIS_CACHE[key]
    if n_modes > basis_capacity(grid):
        raise ValueError(f"n_modes = {n_modes} exceeds basis capacity {basis_capacity(grid)}")

    scale = np.sqrt(2.0 / grid.volume)
    entries: list[tuple[tuple[int, ...], np.ndarray, str]] = []
    for kvec in _canonical_wavevectors(grid, n_modes):
        for tangent in _tangent_frame(np.array(kvec, dtype=float)):
            entries.append((kvec, tangent, "cos"))
            entries.append((kvec, tangent, "sin"))
        if len(entries) >= n_modes:
            break
    entries = entries[:n_modes]

    coeffs = np.zeros((n_modes, grid.dim) + grid.shape, dtype=np.complex128)
    wavevectors = np.zeros((n_modes, grid.dim), dtype=int)
    for m, (kvec, tangent, parity) in enumerate(entries):
        wavevectors[m] = kvec
        idx_plus = tuple(k % grid.n for k in kvec)
        idx_minus = tuple(-k % grid.n for k in kvec)
        if parity == "cos":
            c_plus = c_minus = 0.5 * scale
        else:
            c_plus, c_minus = -0.5j * scale, 0.5j * scale
        for comp in range(grid.dim):
            coeffs[(m, comp) + idx_plus] = c_plus * tangent[comp]
            coeffs[(m, comp) + idx_minus] = c_minus * tangent[comp]
    basis = VelocityNoiseBasis(grid=grid, wavevectors=wavevectors, coeffs=coeffs)
    _BASIS_CACHE[key] = basis
    return basis


def spectral_weights(cfg: NoiseConfig, basis: VelocityNoiseBasis) -> np.ndarray:
    """q_m = sigma * (1 + |k_m|^2)^(-decay_s/2)."""
    return cfg.sigma * (1.0 + basis.k_sq()) ** (-cfg.decay_s / 2.0)


def saturating_gain(v: SpectralField, alpha: float) -> float:
    """rho(v) = ||v|| / (1 + ||v||) in H^alpha; bounded and 1-Lipschitz."""
    nv = sobolev_norm(v, alpha)
    return nv / (1.0 + nv)


def apply_velocity_noise(
    v: SpectralField,
    inc: NoiseIncrement,
    cfg: NoiseConfig,
    alpha: float,
    basis: VelocityNoiseBasis | None = None,
) -> SpectralField:
    """Q(v) dW = sum_m q_m (1 + gain * rho(v)) dW_m psi_m; solenoidal, mean-zero."""
    if basis is None:
        basis = velocity_basis(v.grid, cfg.n_modes)
    validate_noise_config(cfg, alpha, v.grid)
    amp = spectral_weights(cfg, basis)
    if cfg.multiplicative_gain != 0.0:
        amp = amp * (1.0 + cfg.multiplicative_gain * saturating_gain(v, alpha))
    weights = amp * inc.dW
    out = np.einsum("m,mc...->c...", weights, basis.coeffs)
    return SpectralField(v.grid, out)


def hilbert_schmidt_bound(cfg: NoiseConfig, basis: VelocityNoiseBasis, alpha: float) -> float:
    """l0 such that ||Q(v)||_HS^2 <= l0 (1 + ||v||^2) for all v, by direct sum."""
    q = spectral_weights(cfg, basis)
    return float((1.0 + cfg.multiplicative_gain) ** 2 * (q**2 * basis.h_norm_sq(alpha)).sum())


def hilbert_schmidt_norm_sq(
    v: SpectralField, cfg: NoiseConfig, alpha: float, basis: VelocityNoiseBasis | None = None
) -> float:
    """||Q(v)||_{HS}^2 summed directly over the truncated basis."""
    if basis is None:
        basis = velocity_basis(v.grid, cfg.n_modes)
    q = spectral_weights(cfg, basis)
    factor = (1.0 + cfg.multiplicative_gain * saturating_gain(v, alpha)) ** 2
    return float(factor * (q**2 * basis.h_norm_sq(alpha)).sum())


# ---------------------------------------------------------------------------
# Fixed Brownian paths and bridge refinement


@dataclass(frozen=True)
class NoisePath:
    """A realized increment path on a uniform grid of n_steps * dt."""

    dt: float
    dW: np.ndarray  # (n_steps, n_modes)
    dEta: np.ndarray  # (n_steps,)
    seed: int
    trajectory_id: int
    level: int = 0

    @property
    def n_steps(self) -> int:
        return self.dW.shape[0]

    def increment(self, step_index: int) -> NoiseIncrement:
        return NoiseIncrement(dW=self.dW[step_index], dEta=float(self.dEta[step_index]))


def sample_noise_path(
    n_steps: int, dt: float, cfg: NoiseConfig, trajectory_id: int = 0
) -> NoisePath:
    """Path whose rows reproduce sample_increment(i, dt, cfg, trajectory_id)."""
    dW = np.empty((n_steps, cfg.n_modes))
    dEta = np.empty(n_steps)
    for i in range(n_steps):
        inc = sample_increment(i, dt, cfg, trajectory_id)
        dW[i] = inc.dW
        dEta[i] = inc.dEta
    return NoisePath(dt=dt, dW=dW, dEta=dEta, seed=cfg.seed, trajectory_id=trajectory_id)


def brownian_bridge_refine(path: NoisePath, factor: int) -> NoisePath:
    """Halve the step repeatedly, conditioning midpoints on the coarse sums.

    Per halving, the first half-increment of interval i is
    dX/2 + N(0, dt/4) and the second is the remainder dX minus the first,
    so each coarse sum is preserved to floating round-off (a couple of
    ulps).  Midpoint draws are keyed by (interval, level).
    """
    if factor < 1 or (factor & (factor - 1)) != 0:
        raise ValueError(f"refinement factor must be a power of two, got {factor}")
    if factor == 1:
        return path
    dW, dEta, dt, level = path.dW, path.dEta, path.dt, path.level
    while factor > 1:
        level += 1
        n, m = dW.shape
        half_sd = np.sqrt(dt / 4.0)
        new_dW = np.empty((2 * n, m))
        new_dEta = np.empty(2 * n)
        for i in range(n):
            gen = _generator(path.seed, (i, path.trajectory_id, level, 1))
            z = gen.standard_normal(m + 1) * half_sd
            first_w = dW[i] / 2.0 + z[:m]
            new_dW[2 * i] = first_w
            new_dW[2 * i + 1] = dW[i] - first_w
            first_e = dEta[i] / 2.0 + z[m]
            new_dEta[2 * i] = first_e
            new_dEta[2 * i + 1] = dEta[i] - first_e
        dW, dEta, dt = new_dW, new_dEta, dt / 2.0
        factor //= 2
    return NoisePath(
        dt=dt, dW=dW, dEta=dEta, seed=path.seed, trajectory_id=path.trajectory_id, level=level
    )


def coarsen_noise_path(path: NoisePath, factor: int) -> NoisePath:
    """Aggregate blocks of `factor` increments; the exact inverse direction of
    bridge refinement in distribution (and in value for refined paths)."""
    if factor < 1 or path.n_steps % factor != 0:
        raise ValueError("coarsening factor must divide the step count")
    if factor == 1:
        return path
    n = path.n_steps // factor
    dW = path.dW.reshape(n, factor, -1).sum(axis=1)
    dEta = path.dEta.reshape(n, factor).sum(axis=1)
    return NoisePath(
        dt=path.dt * factor,
        dW=dW,
        dEta=dEta,
        seed=path.seed,
        trajectory_id=path.trajectory_id,
        level=max(path.level - int(np.log2(factor)), 0),
    )
