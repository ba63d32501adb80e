"""Drift and noise-coefficient nonlinearities of the coupled system.

Sign ledger used throughout (drift excludes the linear -A part):

    velocity drift  = -advect(v, v) + lam * ericksen_stress(d, d)
    director drift  = -advect_director(v, d) + gamma * ginzburg_term(d)

where ericksen_stress(d, m) = -Proj(div(grad d (.) grad m)) already carries
its minus sign, so the velocity equation reads
dv = [Lap v - (v.grad)v - div(grad d (.) grad d) - grad p] dt + noise.

Quadratic and cubic products are formed pointwise in physical space on
dealiased inputs, with the output truncated again (2/3 rule by default).
"""

from __future__ import annotations

import numpy as np

from .fields import SystemState
from .spectral import (
    SpectralField,
    dealias,
    divergence_ratio,
    leray_project,
    to_physical,
    to_spectral,
)


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product of (3, ...) arrays along the leading axis."""
    return np.cross(a, b, axisa=0, axisb=0, axisc=0)


def _dealiased_physical(f: SpectralField) -> np.ndarray:
    return to_physical(dealias(f))


def jacobian_physical(f: SpectralField) -> np.ndarray:
    """Physical samples of d_j f^c from dealiased coefficients; shape
    (components, dim, n, ..., n)."""
    grid = f.grid
    coeffs = f.coeffs * grid.dealias_mask
    out = np.empty((f.components, grid.dim) + grid.shape)
    axes = tuple(range(-grid.dim, 0))
    for j, k in enumerate(grid.k_axes):
        out[:, j] = np.fft.ifftn(1j * k * coeffs, axes=axes, norm="forward").real
    return out


def _advection_physical(vel_phys: np.ndarray, jac: np.ndarray) -> np.ndarray:
    """(u . grad) f from physical velocity (dim, ...) and Jacobian (c, dim, ...)."""
    return np.einsum("j...,cj...->c...", vel_phys, jac)


def require_solenoidal(u: SpectralField, tol: float = 1e-8) -> None:
    ratio = divergence_ratio(u)
    if ratio > tol:
        raise ValueError(f"advecting field has divergence ratio {ratio:.3e} > {tol:.1e}")


def convective_term(u: SpectralField, v: SpectralField) -> SpectralField:
    """B(u, v) = Proj((u . grad) v) for solenoidal u; output is divergence-free."""
    require_solenoidal(u)
    adv = _advection_physical(_dealiased_physical(u), jacobian_physical(v))
    return leray_project(dealias(to_spectral(u.grid, adv)))


def ericksen_stress(d: SpectralField, m: SpectralField) -> SpectralField:
    """M(d, m) = -Proj(div(grad d (.) grad m)), the elastic stress divergence.

    The stress tensor has entries T_ij = sum_c d_i d^c * d_j m^c and the
    divergence contracts its second index.
    """
    grid = d.grid
    jac_d = jacobian_physical(d)
    jac_m = jacobian_physical(m)
    tensor = np.einsum("ci...,cj...->ij...", jac_d, jac_m)
    tensor_hat = np.fft.fftn(tensor, axes=tuple(range(-grid.dim, 0)), norm="forward")
    out = np.zeros((grid.dim,) + grid.shape, dtype=np.complex128)
    for i in range(grid.dim):
        for j, k in enumerate(grid.k_axes):
            out[i] += 1j * k * tensor_hat[i, j]
    return leray_project(dealias(SpectralField(grid, -out)))


def director_convection(v: SpectralField, d: SpectralField) -> SpectralField:
    """Btilde(v, d) = (v . grad) d, dealiased."""
    require_solenoidal(v)
    adv = _advection_physical(_dealiased_physical(v), jacobian_physical(d))
    return dealias(to_spectral(v.grid, adv))


def gradient_energy_density(d: SpectralField) -> np.ndarray:
    """|grad d|^2 pointwise (Frobenius square of the Jacobian)."""
    jac = jacobian_physical(d)
    return (jac**2).sum(axis=(0, 1))


def ginzburg_term(d: SpectralField) -> SpectralField:
    """|grad d|^2 d, the harmonic-map reaction term, dealiased."""
    energy = gradient_energy_density(d)
    d_phys = _dealiased_physical(d)
    return dealias(to_spectral(d.grid, energy * d_phys))


def director_noise_field(d: SpectralField, h: SpectralField) -> SpectralField:
    """G(d) = d x h pointwise."""
    out = cross3(to_physical(d), to_physical(h))
    return to_spectral(d.grid, out)


def double_cross(d_phys: np.ndarray, h_phys: np.ndarray) -> np.ndarray:
    """(d x h) x h pointwise, the square of the rotation generator."""
    return cross3(cross3(d_phys, h_phys), h_phys)


def ito_correction(d: SpectralField, h: SpectralField) -> SpectralField:
    """L_d = -1/2 (d x h) x h; enters the abstract drift with a minus sign."""
    out = -0.5 * double_cross(to_physical(d), to_physical(h))
    return to_spectral(d.grid, out)


def full_drift(
    state: SystemState, lam: float = 1.0, gamma: float = 1.0
) -> tuple[SpectralField, SpectralField]:
    """Assembled nonlinear drift (excluding the linear dissipative part),
    following the sign ledger in the module docstring."""
    b = convective_term(state.v, state.v)
    stress = ericksen_stress(state.d, state.d)
    conv = director_convection(state.v, state.d)
    reaction = ginzburg_term(state.d)
    drift_v = SpectralField(state.grid, -b.coeffs + lam * stress.coeffs)
    drift_d = SpectralField(state.grid, -conv.coeffs + gamma * reaction.coeffs)
    return drift_v, drift_d
