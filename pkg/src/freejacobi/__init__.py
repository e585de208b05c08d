"""Spectral data of the free Jacobi process of a single projection.

The package computes the characteristic flow and its inverse, the moments
of the unitary and Jacobi processes, the spectral measures recovered from
their Herglotz transforms, and the boundary constants of the flow, and it
cross-checks each against an independent oracle.
"""

from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    DensityError,
    DomainError,
    DomainEscapeError,
    FlowOverflowError,
    FreeJacobiError,
    IdentityError,
    PoleError,
    QuadratureError,
    ResolutionError,
)
from .flow import FlowParams, in_domain, psi, psi_inverse, solve_b, solve_d, solve_z_right, strip_bound
from .herglotz import SpectralMeasureEstimate, density_clark, density_nu, h_eval, stationary_measure
from .loewner import OdeTrajectory, integrate_flow, moment_ode
from .moments import (
    MomentTable,
    flow_coeff,
    jacobi_moment,
    series_reversion_oracle,
    unitary_moment,
    unitary_moments,
)
from .rmt import SimConfig, empirical_moments, sample_unitary_bm

__all__ = [
    "BracketError",
    "ConfigError",
    "ConvergenceError",
    "DensityError",
    "DomainError",
    "DomainEscapeError",
    "FlowOverflowError",
    "FlowParams",
    "FreeJacobiError",
    "IdentityError",
    "MomentTable",
    "OdeTrajectory",
    "PoleError",
    "QuadratureError",
    "ResolutionError",
    "SimConfig",
    "SpectralMeasureEstimate",
    "density_clark",
    "density_nu",
    "empirical_moments",
    "flow_coeff",
    "h_eval",
    "in_domain",
    "integrate_flow",
    "jacobi_moment",
    "moment_ode",
    "psi",
    "psi_inverse",
    "sample_unitary_bm",
    "series_reversion_oracle",
    "solve_b",
    "solve_d",
    "solve_z_right",
    "stationary_measure",
    "strip_bound",
    "unitary_moment",
    "unitary_moments",
]
