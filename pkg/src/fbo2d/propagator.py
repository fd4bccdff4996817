"""Free group of the dispersive part, Picard iterates, and the IF-RK4 step.

The linear flow multiplies coefficients by exp(i*t*rho(xi, eta)) with

    rho(xi, eta) = -(|xi|**alpha * xi + sgn(xi) * eta**2),

so it is unitary on L2 and exact in the integrating-factor time stepper; the
time step is limited only by the nonlinear CFL condition.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .quadrature import simpson_rule
from .spectral import (
    Grid,
    SpectralField,
    apply_multiplier,
    dealias,
    forward_transform,
    inverse_transform,
    inverse_transform_complex,
    is_hermitian,
)


class BlowUpError(RuntimeError):
    """Field became non-finite; ``time`` holds the last valid time if known."""

    def __init__(self, message: str, time: float | None = None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


def _check_alpha(alpha: float):
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"dispersion order alpha must lie in (0, 1], got {alpha}")


def dispersion(xi, eta, alpha: float):
    """Dispersion symbol -(|xi|**alpha * xi + sgn(xi) * eta**2)."""
    _check_alpha(alpha)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return -(np.abs(xi) ** alpha * xi + np.sign(xi) * eta**2)


@lru_cache(maxsize=16)
def _symbol_on_grid(grid: Grid, alpha: float) -> np.ndarray:
    return dispersion(grid.XI, grid.ETA, alpha)


def propagate(field: SpectralField, t: float, alpha: float) -> SpectralField:
    """Apply the free group: coefficient-wise phase exp(i*t*rho)."""
    rho = _symbol_on_grid(field.grid, alpha)
    return apply_multiplier(field, np.exp(1j * t * rho))


def quadratic_term(field: SpectralField) -> SpectralField:
    """u*u_x in conservative form (1/2) d/dx (u^2), two-thirds dealiased.

    Real fields take the real transform path; non-Hermitian (analytic-signal)
    fields are squared as complex samples.
    """
    grid = field.grid
    ud = dealias(field)
    if is_hermitian(field, 1e-9):
        u = inverse_transform(ud, tol=1e-8)
    else:
        u = inverse_transform_complex(ud)
    sq = dealias(forward_transform(grid, u * u))
    return apply_multiplier(sq, 0.5j * grid.XI)


def picard_iterate(phi: SpectralField, k: int, t: float, alpha: float,
                   quad_steps: int = 16) -> SpectralField:
    """k-th Picard iterate of the Duhamel equation at time t.

    u^0(t) = U(t) phi and
    u^k(t) = U(t) phi - int_0^t U(t - t') (u^{k-1} u^{k-1}_x)(t') dt',
    the time integral evaluated by composite Simpson with ``quad_steps`` panels.
    """
    if k < 0:
        raise ValueError("iteration count must be >= 0")
    if k == 0:
        return propagate(phi, t, alpha)
    nodes, weights = simpson_rule(0.0, t, quad_steps)
    acc = np.zeros_like(phi.coeffs)
    for tj, wj in zip(nodes, weights):
        prev = picard_iterate(phi, k - 1, tj, alpha, quad_steps)
        acc += wj * propagate(quadratic_term(prev), t - tj, alpha).coeffs
    return propagate(phi, t, alpha) - SpectralField(phi.grid, acc)


@lru_cache(maxsize=16)
def _if_phases(grid: Grid, alpha: float, dt: float):
    rho = _symbol_on_grid(grid, alpha)
    e_half = np.exp(0.5j * dt * rho)
    return e_half, e_half * e_half


def if_rk4_step(field: SpectralField, dt: float, alpha: float,
                nonlinear: bool = True) -> SpectralField:
    """One integrating-factor RK4 step of u_t = -D_x^a u_x - H u_yy - u u_x.

    The linear flow is applied exactly through the integrating factor, so with
    the nonlinearity disabled the step coincides with ``propagate``.
    """
    if dt <= 0:
        raise ValueError(f"time step must be positive, got {dt}")
    grid = field.grid
    e, e2 = _if_phases(grid, alpha, dt)
    c = field.coeffs
    if not nonlinear:
        out = c * e2
        out[grid.nx // 2, :] = 0.0
        out[:, grid.ny // 2] = 0.0
        return SpectralField(grid, out)

    def n(coeffs):
        return -quadratic_term(SpectralField(grid, coeffs)).coeffs

    k1 = n(c)
    k2 = n(e * (c + 0.5 * dt * k1))
    k3 = n(e * c + 0.5 * dt * k2)
    k4 = n(e2 * c + dt * e * k3)
    out = e2 * c + (dt / 6.0) * (e2 * k1 + 2.0 * e * (k2 + k3) + k4)
    out[grid.nx // 2, :] = 0.0
    out[:, grid.ny // 2] = 0.0
    if not np.all(np.isfinite(out)):
        raise BlowUpError("field became non-finite during an RK4 step")
    return SpectralField(grid, out)


def cfl_dt(field: SpectralField, safety: float = 0.5) -> float:
    """Nonlinear CFL bound safety * dx / ||u||_inf (inf if the field is 0)."""
    linf = float(np.max(np.abs(inverse_transform(field))))
    if linf == 0.0:
        return np.inf
    return safety * field.grid.dx / linf
