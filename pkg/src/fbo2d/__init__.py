"""Pseudospectral toolkit for the fractional two-dimensional Benjamin-Ono
equation u_t + D_x^a u_x + H u_yy + u u_x = 0 on a periodic box, plus the
verification experiments for its dispersive and energy estimates."""

from .spectral import (
    Grid,
    SpectralField,
    apply_dx_alpha,
    apply_dy_delta,
    apply_hilbert_x,
    apply_js,
    apply_multiplier,
    forward_transform,
    inverse_transform,
    l2_norm,
    regularity_threshold,
    sobolev_norm,
    sup_norms,
)
from .propagator import (
    BlowUpError,
    cfl_dt,
    dispersion,
    if_rk4_step,
    picard_iterate,
    propagate,
)
from .evolution import SolveConfig, Trajectory, bona_smith, solve_ivp
from .quadrature import QuadratureError

__version__ = "0.1.0"
