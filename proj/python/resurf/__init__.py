"""Residual SDF surface reconstruction on synthetic scenes."""

from ._core import (
    Config,
    ConfigError,
    ContractViolation,
    DivergenceError,
    EmptySurface,
    Error,
    FormatError,
    VoxelGrid,
    alpha_from_sdf,
    build_basis,
    chamfer,
    composite,
    fuse_values,
    gaussian_smooth,
    interpolate,
    grid_gradient,
    marching_cubes,
    reserve_probability,
    run_command,
    sample_surface,
)

__all__ = [
    "Config",
    "ConfigError",
    "ContractViolation",
    "DivergenceError",
    "EmptySurface",
    "Error",
    "FormatError",
    "VoxelGrid",
    "alpha_from_sdf",
    "build_basis",
    "chamfer",
    "composite",
    "fuse_values",
    "gaussian_smooth",
    "interpolate",
    "grid_gradient",
    "marching_cubes",
    "reserve_probability",
    "run_command",
    "sample_surface",
]
