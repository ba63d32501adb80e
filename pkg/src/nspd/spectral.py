"""Fourier-side calculus on the periodic torus [-pi, pi]^d.

Fields are stored as complex Fourier coefficients with the "forward" FFT
normalization, so a constant field c has coefficient c at k = 0 and

    f(x_j) = sum_k  fhat[k] * exp(i k . (x_j + pi))

on the sample points x_j = -pi + 2*pi*j/n.  Wavevectors are integers, which
makes every operator in this module an exact diagonal multiplier:
derivatives i*k_j, Laplacian -|k|^2, heat/Stokes semigroup exp(-|k|^2 t),
and the fractional Sobolev weight (1+|k|^2)^r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with integer wavenumbers in [-n/2, n/2).

    Parameters
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    n : int
        Points per axis; a power of two, at least 8.
    dealias_fraction : float
        Modes with any |k_j| > dealias_fraction * n/2 are zeroed by
        :func:`dealias`.  Default is the standard 2/3 rule.
    """

    dim: int
    n: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"grid dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n_per_axis must be a power of two >= 8, got {self.n}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")

        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)  # integers 0..n/2-1, -n/2..-1
        k_axes = []
        for j in range(self.dim):
            shape = [1] * self.dim
            shape[j] = self.n
            k_axes.append(k1.reshape(shape))
        k_sq = sum(k * k for k in k_axes)
        cutoff = self.dealias_fraction * self.n / 2.0
        mask = np.ones(self.shape, dtype=bool)
        for k in k_axes:
            mask &= np.abs(k) <= cutoff
        # non-field attributes: derived arrays shared by all operations
        object.__setattr__(self, "k_axes", tuple(k_axes))
        object.__setattr__(self, "k_sq", k_sq)
        object.__setattr__(self, "dealias_mask", mask)
        object.__setattr__(self, "x1", -np.pi + TWO_PI * np.arange(self.n) / self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.n) ** self.dim

    @property
    def volume(self) -> float:
        return TWO_PI ** self.dim

    @property
    def k_max_retained(self) -> int:
        return int(np.floor(self.dealias_fraction * self.n / 2.0))

    def meshgrid(self) -> list[np.ndarray]:
        """Physical sample coordinates, one (n, ..., n) array per axis."""
        return list(np.meshgrid(*(self.x1,) * self.dim, indexing="ij"))


@dataclass
class SpectralField:
    """A real periodic field held as Fourier coefficients.

    ``coeffs`` has shape ``(components, n, ..., n)`` with complex dtype and
    conjugate-symmetric content whenever the field is real in physical space.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.coeffs.shape[1:] != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())


def _spatial_axes(grid: Grid) -> tuple[int, ...]:
    return tuple(range(-grid.dim, 0))


def zero_field(grid: Grid, components: int) -> SpectralField:
    return SpectralField(grid, np.zeros((components,) + grid.shape, dtype=np.complex128))


def to_spectral(grid: Grid, samples: np.ndarray) -> SpectralField:
    """Transform physical samples to coefficients.

    ``samples`` may be ``(n, ..., n)`` for a scalar field or
    ``(components, n, ..., n)`` for a vector field.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape == grid.shape:
        samples = samples[np.newaxis]
    if samples.shape[1:] != grid.shape:
        raise ValueError(f"sample shape {samples.shape} does not match grid {grid.shape}")
    coeffs = np.fft.fftn(samples, axes=_spatial_axes(grid), norm="forward")
    return SpectralField(grid, coeffs)


def to_physical(f: SpectralField) -> np.ndarray:
    """Inverse transform; returns real samples of shape (components, n, ..., n)."""
    return np.fft.ifftn(f.coeffs, axes=_spatial_axes(f.grid), norm="forward").real


def gradient(f: SpectralField) -> SpectralField:
    """All first derivatives: component c*dim + j holds d_j f^c (multiplier i k_j)."""
    grid = f.grid
    out = np.empty((f.components * grid.dim,) + grid.shape, dtype=np.complex128)
    for c in range(f.components):
        for j, k in enumerate(grid.k_axes):
            out[c * grid.dim + j] = 1j * k * f.coeffs[c]
    return SpectralField(grid, out)


def partial_derivative(f: SpectralField, axis: int) -> SpectralField:
    return SpectralField(f.grid, 1j * f.grid.k_axes[axis] * f.coeffs)


def divergence(f: SpectralField) -> SpectralField:
    """Spectral divergence of a dim-component field."""
    grid = f.grid
    if f.components != grid.dim:
        raise ValueError(f"divergence needs {grid.dim} components, got {f.components}")
    out = np.zeros((1,) + grid.shape, dtype=np.complex128)
    for j, k in enumerate(grid.k_axes):
        out[0] += 1j * k * f.coeffs[j]
    return SpectralField(grid, out)


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k_sq * f.coeffs)


def leray_project(f: SpectralField) -> SpectralField:
    """Project onto divergence-free, mean-zero fields.

    Mode k != 0 is mapped by I - k k^T/|k|^2; the k = 0 mode is zeroed,
    enforcing zero spatial mean.
    """
    grid = f.grid
    if f.components != grid.dim:
        raise ValueError(f"Leray projection needs {grid.dim} components, got {f.components}")
    k_sq_safe = np.where(grid.k_sq == 0, 1.0, grid.k_sq)
    dot = np.zeros(grid.shape, dtype=np.complex128)
    for j, k in enumerate(grid.k_axes):
        dot += k * f.coeffs[j]
    dot /= k_sq_safe
    out = np.empty_like(f.coeffs)
    for j, k in enumerate(grid.k_axes):
        out[j] = f.coeffs[j] - k * dot
    out[(slice(None),) + (0,) * grid.dim] = 0.0
    return SpectralField(grid, out)


def sobolev_norm(f: SpectralField, r: float = 0.0) -> float:
    """H^r norm via the multiplier (1+|k|^2)^(r/2); r = 0 is the L^2 norm."""
    if not np.isfinite(r) or r < 0:
        raise ValueError(f"Sobolev order must be finite and >= 0, got {r}")
    weight = (1.0 + f.grid.k_sq) ** r if r != 0.0 else 1.0
    total = np.sum(weight * (f.coeffs.real**2 + f.coeffs.imag**2))
    return float(np.sqrt(f.grid.volume * total))


def l2_norm(f: SpectralField) -> float:
    return sobolev_norm(f, 0.0)


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    if f.coeffs.shape != g.coeffs.shape:
        raise ValueError("inner product needs matching shapes")
    return float(f.grid.volume * np.sum(f.coeffs * np.conj(g.coeffs)).real)


def linf_norm(f: SpectralField) -> float:
    """Max pointwise Euclidean magnitude over grid samples."""
    phys = to_physical(f)
    return float(np.sqrt((phys**2).sum(axis=0)).max())


def semigroup_apply(f: SpectralField, t: float, which: str = "heat") -> SpectralField:
    """Apply the heat semigroup exp(-|k|^2 t); the Stokes variant composes
    with the Leray projection."""
    if t < 0:
        raise ValueError(f"semigroup time must be >= 0, got {t}")
    if which not in ("heat", "stokes"):
        raise ValueError(f"unknown semigroup {which!r}")
    g = leray_project(f) if which == "stokes" else f
    return SpectralField(f.grid, np.exp(-f.grid.k_sq * t) * g.coeffs)


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask)


def divergence_ratio(f: SpectralField) -> float:
    """Max modal magnitude of the spectral divergence, relative to ||f||_{L^2}."""
    norm = l2_norm(f)
    if norm == 0.0:
        return 0.0
    return float(np.abs(divergence(f).coeffs).max() / norm)


def mean_value(f: SpectralField) -> np.ndarray:
    """Spatial mean per component (the k = 0 coefficient)."""
    return f.coeffs[(slice(None),) + (0,) * f.grid.dim].real.copy()
