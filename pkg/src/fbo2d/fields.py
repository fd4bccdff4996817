"""Seeded test-field generators: bumps, wave packets, random spectra."""

from __future__ import annotations

import numpy as np

from .spectral import Grid, SpectralField, _reflect_conj, forward_transform, l2_norm


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gaussian_bump(grid: Grid, amplitude: float = 1.0, width: float = 1.0,
                  center=None) -> SpectralField:
    """amplitude * exp(-((x-cx)^2 + (y-cy)^2) / (2 width^2))."""
    X, Y = grid.meshgrid()
    cx, cy = center if center is not None else (grid.lx / 2, grid.ly / 2)
    u = amplitude * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * width**2))
    return forward_transform(grid, u)


def modulated_gaussian(grid: Grid, k0: float, width: float = 1.0,
                       width_y: float | None = None, amplitude: float = 1.0,
                       center=None) -> SpectralField:
    """Gaussian envelope times cos(k0*x); x-spectrum concentrated near k0."""
    X, Y = grid.meshgrid()
    cx, cy = center if center is not None else (grid.lx / 2, grid.ly / 2)
    wy = width if width_y is None else width_y
    env = np.exp(-((X - cx) ** 2) / (2.0 * width**2) - ((Y - cy) ** 2) / (2.0 * wy**2))
    u = amplitude * env * np.cos(k0 * (X - cx))
    return forward_transform(grid, u)


def random_field(grid: Grid, seed, profile=None, band=None,
                 zero_x_mean: bool = False, amplitude: float = 1.0) -> SpectralField:
    """Random real field with Hermitian-symmetrized Gaussian coefficients.

    profile: optional callable r -> radial amplitude shape.
    band:    optional (rmin, rmax) annulus in physical frequency.
    The result is scaled to the requested L2 norm (if nonzero).
    """
    rng = _rng(seed)
    z = rng.standard_normal((grid.nx, grid.ny)) + 1j * rng.standard_normal((grid.nx, grid.ny))
    c = 0.5 * (z + _reflect_conj(z))
    r = grid.radius
    if profile is not None:
        c = c * profile(r)
    if band is not None:
        rmin, rmax = band
        c = c * ((r >= rmin) & (r <= rmax))
    c[grid.nx // 2, :] = 0.0
    c[:, grid.ny // 2] = 0.0
    if zero_x_mean:
        c[0, :] = 0.0
    field = SpectralField(grid, c)
    norm = l2_norm(field)
    if norm > 0:
        field = field * (amplitude / norm)
    return field


def synthetic_hs_field(grid: Grid, s: float, seed, margin: float = 0.25,
                       amplitude: float = 1.0, zero_x_mean: bool = False) -> SpectralField:
    """Random field with algebraic spectral decay tuned to lie in H^s.

    The radial amplitude (1 + r^2)^(-(s + 1 + margin)/2) puts the field in H^s
    with a slowly convergent tail, so low-pass truncation errors scale like
    n^(-(s + margin/2)) in L2.
    """
    decay = (s + 1.0 + margin) / 2.0
    return random_field(grid, seed, profile=lambda r: (1.0 + r**2) ** (-decay),
                        zero_x_mean=zero_x_mean, amplitude=amplitude)
