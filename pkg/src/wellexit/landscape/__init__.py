"""Potentials, domain geometry, and finite-difference grids."""

from .potentials import (
    Potential,
    Polynomial,
    GaussianMixture,
    BUILTIN_POTENTIALS,
    make_potential,
    double_well_1d,
    triple_well_1d,
    double_well_2d,
    three_well_2d,
    TRIPLE_WELL_1D_DOMAIN,
    THREE_WELL_2D_RADIUS,
)
from .geometry import (
    Interval,
    ImplicitDomain,
    ball,
    boundary_normal_derivative,
    tangential_hessian,
    tangential_hessian_det,
)
from .grid import Grid, build_grid

__all__ = [
    "Potential",
    "Polynomial",
    "GaussianMixture",
    "BUILTIN_POTENTIALS",
    "make_potential",
    "double_well_1d",
    "triple_well_1d",
    "double_well_2d",
    "three_well_2d",
    "TRIPLE_WELL_1D_DOMAIN",
    "THREE_WELL_2D_RADIUS",
    "Interval",
    "ImplicitDomain",
    "ball",
    "boundary_normal_derivative",
    "tangential_hessian",
    "tangential_hessian_det",
    "Grid",
    "build_grid",
]
