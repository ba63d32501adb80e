"""Shared oracle helpers: resolution changes for brute-force product checks."""

import numpy as np

from nspd.spectral import Grid, SpectralField


def upsample(f: SpectralField, factor: int = 2) -> SpectralField:
    """Zero-pad the spectrum onto a finer grid (exact for band-limited fields)."""
    g = f.grid
    fine = Grid(g.dim, g.n * factor, g.dealias_fraction)
    out = np.zeros((f.components,) + fine.shape, dtype=np.complex128)
    k1 = np.fft.fftfreq(g.n, d=1.0 / g.n).astype(int)
    idx = np.ix_(*([range(f.components)] + [list(k1 % fine.n)] * g.dim))
    src = np.ix_(*([range(f.components)] + [list(k1 % g.n)] * g.dim))
    out[idx] = f.coeffs[src]
    return SpectralField(fine, out)


def restrict(f: SpectralField, coarse: Grid) -> SpectralField:
    """Drop modes outside the coarse grid's wavenumber range."""
    out = np.zeros((f.components,) + coarse.shape, dtype=np.complex128)
    k1 = np.fft.fftfreq(coarse.n, d=1.0 / coarse.n).astype(int)
    dst = np.ix_(*([range(f.components)] + [list(k1 % coarse.n)] * coarse.dim))
    src = np.ix_(*([range(f.components)] + [list(k1 % f.grid.n)] * coarse.dim))
    out[dst] = f.coeffs[src]
    return SpectralField(coarse, out)
