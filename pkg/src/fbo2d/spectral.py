"""Periodic-box spectral core: grids, transforms, Fourier multipliers, norms.

Fields live on a uniform [0, lx) x [0, ly) grid with power-of-two sampling in
each direction.  The transform scaling is fixed so that the discrete Parseval
identity

    ||u||_L2^2 = sum_jk |u_hat[j, k]|^2 * (2*pi)^2 / (lx*ly)

holds exactly; the coefficients then approximate the continuous transform with
the symmetric 1/(2*pi) normalization.  Conventions used throughout:

* sgn(0) = 0 and |0|**a = 0 for every multiplier order a, so the Hilbert
  transform and the fractional x-derivatives annihilate the x-mean,
* the (unpaired) Nyquist modes are zeroed after every multiplier application,
* arrays are indexed [x, y]; frequencies follow the numpy fft layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

TWO_PI = 2.0 * np.pi


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Periodic box geometry together with its frequency lattice."""

    nx: int
    ny: int
    lx: float = TWO_PI
    ly: float = TWO_PI

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if not isinstance(n, (int, np.integer)) or n < 4 or not _is_pow2(int(n)):
                raise ValueError(f"{name} must be a power of two >= 4, got {n!r}")
        for name, l in (("lx", self.lx), ("ly", self.ly)):
            if not np.isfinite(l) or l <= 0:
                raise ValueError(f"{name} must be positive, got {l!r}")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def mode_weight(self) -> float:
        """Parseval weight per coefficient, (2*pi)^2/(lx*ly)."""
        return TWO_PI**2 / (self.lx * self.ly)

    @property
    def _fwd_scale(self) -> float:
        return self.dx * self.dy / TWO_PI

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.dy

    @cached_property
    def xi(self) -> np.ndarray:
        """x-frequencies 2*pi*j/lx for j in [-nx/2, nx/2), fft layout."""
        return TWO_PI * np.fft.fftfreq(self.nx, d=self.dx)

    @cached_property
    def eta(self) -> np.ndarray:
        return TWO_PI * np.fft.fftfreq(self.ny, d=self.dy)

    @property
    def XI(self) -> np.ndarray:
        return self.xi[:, None]

    @property
    def ETA(self) -> np.ndarray:
        return self.eta[None, :]

    @cached_property
    def radius(self) -> np.ndarray:
        return np.hypot(*np.meshgrid(self.xi, self.eta, indexing="ij"))

    def meshgrid(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.nx * factor, self.ny * factor, self.lx, self.ly)


@dataclass
class SpectralField:
    """Fourier coefficients of a field on a :class:`Grid` (fft layout)."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"coefficient shape {c.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )
        self.coeffs = c

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def _check_same_grid(self, other: "SpectralField"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


class SupNorms(NamedTuple):
    linf: float
    grad_linf: float
    w1inf: float


def regularity_threshold(alpha: float) -> float:
    """Sobolev index 3/2 + (1 - alpha)/4 separating the well-posed range."""
    return 1.75 - 0.25 * alpha


# ---------------------------------------------------------------------------
# transforms


def forward_transform(grid: Grid, samples: np.ndarray) -> SpectralField:
    """Transform grid samples (real, or complex for analytic signals)."""
    u = np.asarray(samples)
    if u.shape != (grid.nx, grid.ny):
        raise ValueError(
            f"sample shape {u.shape} does not match grid ({grid.nx}, {grid.ny})"
        )
    return SpectralField(grid, np.fft.fft2(u) * grid._fwd_scale)


def _reflect_conj(coeffs: np.ndarray) -> np.ndarray:
    """conj(c[-j mod nx, -k mod ny]), the Hermitian partner array."""
    return np.conj(np.roll(coeffs[::-1, ::-1], 1, axis=(0, 1)))


def hermitian_residual(field: SpectralField) -> float:
    """Max deviation from u_hat(-xi,-eta) = conj(u_hat(xi,eta)), relative."""
    c = field.coeffs
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(c - _reflect_conj(c))) / scale)


def is_hermitian(field: SpectralField, tol: float = 1e-10) -> bool:
    return hermitian_residual(field) <= tol


def inverse_transform(field: SpectralField, tol: float = 1e-10) -> np.ndarray:
    """Return real grid samples; rejects non-Hermitian coefficient arrays."""
    res = hermitian_residual(field)
    if res > tol:
        raise ValueError(
            f"coefficients are not Hermitian-symmetric (residual {res:.3e}); "
            "the samples would be complex"
        )
    return np.fft.ifft2(field.coeffs / field.grid._fwd_scale).real


def inverse_transform_complex(field: SpectralField) -> np.ndarray:
    """Complex grid samples, no symmetry check (analytic-signal fields)."""
    return np.fft.ifft2(field.coeffs / field.grid._fwd_scale)


# ---------------------------------------------------------------------------
# multipliers


def _zero_nyquist(coeffs: np.ndarray, grid: Grid):
    coeffs[grid.nx // 2, :] = 0.0
    coeffs[:, grid.ny // 2] = 0.0


def apply_multiplier(field: SpectralField, symbol) -> SpectralField:
    """Coefficient-wise product with ``symbol`` (callable of (XI, ETA) or array).

    The unpaired Nyquist modes are zeroed afterwards so sign-ambiguous symbols
    cannot break realness.
    """
    grid = field.grid
    if callable(symbol):
        m = symbol(grid.XI, grid.ETA)
    else:
        m = symbol
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise ValueError("multiplier symbol is not finite on the frequency lattice")
    out = field.coeffs * m
    _zero_nyquist(out, grid)
    return SpectralField(grid, out)


def _abs_power(freq: np.ndarray, order: float) -> np.ndarray:
    """|freq|**order with the |0|**order := 0 convention (any order)."""
    mag = np.abs(freq)
    with np.errstate(divide="ignore"):
        return np.where(mag > 0.0, mag**order, 0.0)


def apply_dx_alpha(field: SpectralField, alpha: float) -> SpectralField:
    """Fractional x-derivative, symbol |xi|**alpha.  Requires alpha >= -1/2."""
    if alpha < -0.5:
        raise ValueError(f"order {alpha} below -1/2: symbol singularity is not integrable")
    mult = _abs_power(field.grid.xi, alpha)[:, None]
    return apply_multiplier(field, mult)


def apply_dy_delta(field: SpectralField, delta: float) -> SpectralField:
    """Fractional y-derivative, symbol |eta|**delta."""
    if delta < -0.5:
        raise ValueError(f"order {delta} below -1/2: symbol singularity is not integrable")
    mult = _abs_power(field.grid.eta, delta)[None, :]
    return apply_multiplier(field, mult)


def apply_hilbert_x(field: SpectralField) -> SpectralField:
    """Hilbert transform in x, symbol -i*sgn(xi) with sgn(0) = 0."""
    mult = (-1j * np.sign(field.grid.xi))[:, None]
    return apply_multiplier(field, mult)


def apply_js(field: SpectralField, s: float) -> SpectralField:
    """Bessel potential J^s, symbol (1 + xi^2 + eta^2)^(s/2)."""
    grid = field.grid
    mult = (1.0 + grid.XI**2 + grid.ETA**2) ** (s / 2.0)
    return apply_multiplier(field, mult)


def d_x(field: SpectralField) -> SpectralField:
    return apply_multiplier(field, (1j * field.grid.xi)[:, None])


def d_y(field: SpectralField) -> SpectralField:
    return apply_multiplier(field, (1j * field.grid.eta)[None, :])


# ---------------------------------------------------------------------------
# norms and functionals


def l2_norm(field: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(field.coeffs) ** 2) * field.grid.mode_weight))


def sobolev_norm(field: SpectralField, s: float) -> float:
    grid = field.grid
    w = (1.0 + grid.XI**2 + grid.ETA**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2) * grid.mode_weight))


def grid_l2(samples: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.sum(np.abs(samples) ** 2) * grid.cell_area))


def l1_norm(field: SpectralField) -> float:
    u = inverse_transform(field)
    return float(np.sum(np.abs(u)) * field.grid.cell_area)


def lp_norm(field: SpectralField, p: float) -> float:
    u = inverse_transform(field)
    if np.isinf(p):
        return float(np.max(np.abs(u)))
    return float((np.sum(np.abs(u) ** p) * field.grid.cell_area) ** (1.0 / p))


def sup_gradient(field: SpectralField) -> float:
    """||du/dx||_inf + ||du/dy||_inf, gradients computed spectrally."""
    ux = inverse_transform(d_x(field))
    uy = inverse_transform(d_y(field))
    return float(np.max(np.abs(ux)) + np.max(np.abs(uy)))


def sup_norms(field: SpectralField) -> SupNorms:
    """(L_inf, W^{1,inf}) of a real field; the gradient term is the sum of sups."""
    linf = float(np.max(np.abs(inverse_transform(field))))
    grad = sup_gradient(field)
    return SupNorms(linf, grad, linf + grad)


def field_mean(field: SpectralField) -> float:
    grid = field.grid
    return float((field.coeffs[0, 0] * TWO_PI / (grid.lx * grid.ly)).real)


def x_lowmode_fraction(field: SpectralField, jmin: int = 4) -> float:
    """Fraction of spectral mass carried by |x-mode index| < jmin."""
    c2 = np.abs(field.coeffs) ** 2
    total = np.sum(c2)
    if total == 0.0:
        return 0.0
    j = np.fft.fftfreq(field.grid.nx, d=1.0 / field.grid.nx)
    low = np.abs(j) < jmin
    return float(np.sum(c2[low, :]) / total)


# ---------------------------------------------------------------------------
# dealiasing, products, resampling


def dealias_mask(grid: Grid) -> np.ndarray:
    """Two-thirds-rule mask: keep |j| <= nx//3 and |k| <= ny//3."""
    j = np.fft.fftfreq(grid.nx, d=1.0 / grid.nx)
    k = np.fft.fftfreq(grid.ny, d=1.0 / grid.ny)
    return (np.abs(j)[:, None] <= grid.nx // 3) & (np.abs(k)[None, :] <= grid.ny // 3)


def dealias(field: SpectralField) -> SpectralField:
    return SpectralField(field.grid, field.coeffs * dealias_mask(field.grid))


def _mode_indices(n: int) -> np.ndarray:
    return np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)


def embed(field: SpectralField, fine: Grid) -> SpectralField:
    """Copy coefficients onto a finer lattice over the same box."""
    grid = field.grid
    if (fine.lx, fine.ly) != (grid.lx, grid.ly):
        raise ValueError("embedding requires the same box dimensions")
    if fine.nx < grid.nx or fine.ny < grid.ny:
        raise ValueError("target grid must be at least as fine")
    out = np.zeros((fine.nx, fine.ny), dtype=np.complex128)
    jj = _mode_indices(grid.nx) % fine.nx
    kk = _mode_indices(grid.ny) % fine.ny
    out[np.ix_(jj, kk)] = field.coeffs
    return SpectralField(fine, out)


def restrict(field: SpectralField, coarse: Grid) -> SpectralField:
    """Drop modes beyond the coarse lattice (coarse Nyquist lines zeroed)."""
    grid = field.grid
    if (coarse.lx, coarse.ly) != (grid.lx, grid.ly):
        raise ValueError("restriction requires the same box dimensions")
    if coarse.nx > grid.nx or coarse.ny > grid.ny:
        raise ValueError("target grid must be at least as coarse")
    jj = _mode_indices(coarse.nx) % grid.nx
    kk = _mode_indices(coarse.ny) % grid.ny
    out = field.coeffs[np.ix_(jj, kk)].copy()
    _zero_nyquist(out, coarse)
    return SpectralField(coarse, out)


def oversample(field: SpectralField, factor: int = 4) -> np.ndarray:
    """Real samples of the trigonometric interpolant on a refined grid."""
    return inverse_transform(embed(field, field.grid.refine(factor)))


def product_padded(f: SpectralField, g: SpectralField) -> SpectralField:
    """Alias-free pointwise product via transform on a doubled grid.

    Exact (to roundoff) for any pair of lattice fields, since the product
    band on the doubled grid never wraps back into the retained modes.
    """
    f._check_same_grid(g)
    big = f.grid.refine(2)
    fb = inverse_transform_complex(embed(f, big))
    gb = inverse_transform_complex(embed(g, big))
    prod = forward_transform(big, fb * gb)
    out = restrict(prod, f.grid)
    if is_hermitian(f, 1e-9) and is_hermitian(g, 1e-9):
        # roundoff can leave a tiny asymmetric residue; resymmetrize
        out.coeffs = 0.5 * (out.coeffs + _reflect_conj(out.coeffs))
    return out
