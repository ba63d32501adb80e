"""Pseudospectral simulator and verification harness for stochastic nematic
liquid crystal hydrodynamics on the periodic torus."""

from .config import SchemeSpec, SolverConfig, default_config, parse_config
from .fields import SystemState, initial_state, product_norm
from .integrators import run_trajectory
from .noise import NoiseConfig, NoiseIncrement, sample_increment
from .spectral import Grid, SpectralField, to_physical, to_spectral

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "NoiseConfig",
    "NoiseIncrement",
    "SchemeSpec",
    "SolverConfig",
    "SpectralField",
    "SystemState",
    "default_config",
    "initial_state",
    "parse_config",
    "product_norm",
    "run_trajectory",
    "sample_increment",
    "to_physical",
    "to_spectral",
    "__version__",
]
