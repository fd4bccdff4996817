"""Numerical checks of the linear estimates and commutator inequalities.

Every "bounded ratio" experiment follows one protocol: an ensemble of seeded
draws, PASS iff max/median < 10 and the max moves by < 30% when the same
draws are re-run on a once-refined grid.  Constants are always fitted from
the data, never asserted against unavailable analytic constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagator import propagate
from .quadrature import QuadratureError
from .reports import NormReport
from .spectral import (
    SpectralField,
    apply_dx_alpha,
    apply_dy_delta,
    apply_js,
    apply_multiplier,
    d_x,
    d_y,
    inverse_transform,
    inverse_transform_complex,
    l1_norm,
    l2_norm,
    lp_norm,
    product_padded,
    regularity_threshold,
    sup_gradient,
    x_lowmode_fraction,
)


@dataclass(frozen=True)
class AdmissiblePair:
    """Mixed-norm exponents with 1/q + 1/p = 1/2, q > 2."""

    q: float
    p: float

    def __post_init__(self):
        if not (self.q > 2.0 and 2.0 <= self.p):
            raise ValueError(
                f"(q, p) = ({self.q}, {self.p}) is not an admissible pair: "
                "need q > 2 and p >= 2 (in particular (2, inf) is excluded)"
            )
        inv = (0.0 if np.isinf(self.q) else 1.0 / self.q) \
            + (0.0 if np.isinf(self.p) else 1.0 / self.p)
        if abs(inv - 0.5) > 1e-12:
            raise ValueError(
                f"(q, p) = ({self.q}, {self.p}) violates 1/q + 1/p = 1/2"
            )


# ---------------------------------------------------------------------------
# oscillatory kernel integral


@dataclass
class OscillatoryResult:
    value: complex
    residual: float
    delta0: float
    nodes: int

    def __abs__(self):
        return abs(self.value)


def _damped_integral(lam: float, alpha: float, delta: float, sign: float,
                     points_per_period: float, tail_tol: float,
                     max_nodes: int):
    """One damped integral int_0^inf xi^((a-1)/2) e^(i lam xi + i sign xi^(1+a) - delta xi) dxi.

    Power-law substitution xi = u^m with m = 2/(1+a) removes the endpoint
    singularity and turns the dispersive phase into sign*u^2.  The integrand is
    sampled on an oscillation-graded mesh (per-cell Simpson) and the truncated
    tail is corrected with one analytic integration-by-parts boundary term.
    """
    m = 2.0 / (1.0 + alpha)

    def phase(u):
        return lam * u**m + sign * u * u

    def dphase(u):
        return m * lam * u ** (m - 1.0) + 2.0 * sign * u

    # stationary point of the phase (if any) in u
    if lam * sign < 0:
        u_star = (abs(lam) * m / 2.0) ** (1.0 / (2.0 - m))
    else:
        u_star = 0.0

    # truncation point: damped amplitude over phase speed, after the IBP
    # correction the remaining tail is ~ g (delta/|phase'| + 2/phase'^2)
    u_max = max(4.0 * u_star + 10.0, 20.0)
    for _ in range(60):
        dp = abs(dphase(u_max))
        g = m * np.exp(-delta * u_max**m)
        est = g * (delta * m * u_max ** (m - 1.0) / max(dp, 1e-300)
                   + 2.0 / max(dp, 1e-300) ** 2 + 2.0 * abs(2.0 - m) / max(dp, 1e-300) ** 2)
        if est < tail_tol:
            break
        u_max *= 1.3

    # graded mesh: equal increments of accumulated phase plus a base density
    probe = np.linspace(0.0, u_max, 8193)
    dens = np.abs(dphase(probe)) * (points_per_period / (2.0 * np.pi)) + 2.0
    work = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(probe))])
    n_cells = int(np.ceil(work[-1] / 2.0)) + 8
    if 3 * n_cells > max_nodes:
        raise QuadratureError(
            f"oscillatory integral at lambda = {lam:g}, alpha = {alpha:g} "
            f"needs ~{3 * n_cells:.2e} nodes (> budget {max_nodes:.0e}); "
            "lambda too extreme for the quadrature budget"
        )
    bounds = np.interp(np.linspace(0.0, work[-1], n_cells + 1), work, probe)
    mids = 0.5 * (bounds[1:] + bounds[:-1])

    def f(u):
        return m * np.exp(1j * phase(u) - delta * u**m)

    fb = f(bounds)
    fm = f(mids)
    h = np.diff(bounds)
    value = np.sum(h / 6.0 * (fb[:-1] + 4.0 * fm + fb[1:]))

    # endpoint integration-by-parts correction for the truncated tail
    dpU = dphase(u_max)
    value += 1j * f(u_max) / dpU
    return value, 2 * n_cells + 1


def oscillatory_integral(lam: float, alpha: float, delta0: float | None = None,
                         rel_tol: float = 0.05, points_per_period: float = 8.0,
                         phase_sign: float = -1.0,
                         max_nodes: int = 30_000_000) -> OscillatoryResult:
    """J(lam) = int_0^inf xi^((alpha-1)/2) e^(i xi lam) e^(-i xi^(1+alpha)) dxi.

    Computed with damping e^(-delta xi) on the schedule delta0, delta0/2,
    delta0/4 and three-point Richardson extrapolation to delta -> 0; delta0
    scales like the inverse of the stationary-phase frequency so the damping
    never suppresses the stationary contribution.  The extrapolation residual
    is returned; if it exceeds ``rel_tol`` of |J| the point is out of budget.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if phase_sign not in (-1.0, 1.0):
        raise ValueError("phase_sign must be +-1")
    xi_star = 0.0
    if lam * (-phase_sign) > 0:
        xi_star = (abs(lam) / (1.0 + alpha)) ** (1.0 / alpha)
    if delta0 is None:
        delta0 = min(0.1, 0.25 / max(xi_star, 1.0))
    tail_tol = 1e-7

    vals = []
    nodes = 0
    for k in range(3):
        v, n = _damped_integral(lam, alpha, delta0 / 2**k, phase_sign,
                                points_per_period, tail_tol, max_nodes)
        vals.append(v)
        nodes += n
    first1 = 2.0 * vals[1] - vals[0]
    first2 = 2.0 * vals[2] - vals[1]
    second = (4.0 * first2 - first1) / 3.0
    residual = abs(second - first2)
    if residual > rel_tol * max(abs(second), 1e-300):
        raise QuadratureError(
            f"oscillatory integral at lambda = {lam:g}, alpha = {alpha:g}: "
            f"extrapolation residual {residual:.2e} exceeds {rel_tol:.0%} of "
            f"|J| = {abs(second):.3e}; lambda too extreme for the quadrature "
            "budget"
        )
    return OscillatoryResult(second, float(residual), float(delta0), nodes)


# ---------------------------------------------------------------------------
# dispersive decay


def traversal_time(field: SpectralField, alpha: float,
                   threshold: float = 1e-9) -> float:
    """Box-crossing time lx / max group speed over the active spectrum."""
    grid = field.grid
    c = np.abs(field.coeffs)
    active = c > threshold * np.max(c)
    if not np.any(active):
        return np.inf
    r = np.abs(grid.XI) * np.ones_like(c)
    xi_max = float(np.max(np.where(active, r, 0.0)))
    eta_max = float(np.max(np.where(active, np.abs(grid.ETA) * np.ones_like(c), 0.0)))
    vx = (1.0 + alpha) * xi_max**alpha if xi_max > 0 else 0.0
    vy = 2.0 * eta_max
    tx = grid.lx / vx if vx > 0 else np.inf
    ty = grid.ly / vy if vy > 0 else np.inf
    return min(tx, ty)


def decay_ratio(phi: SpectralField, t: float, alpha: float,
                lowmode_tol: float = 1e-8) -> float:
    """|t| ||D_x^((a-1)/2) U(t) phi||_inf / ||phi||_L1.

    The datum must carry essentially no x-spectral mass below 4 grid
    frequencies; the negative-order multiplier degenerates there.
    """
    if t == 0:
        raise ValueError("decay ratio requires t != 0")
    frac = x_lowmode_fraction(phi, 4)
    if frac > lowmode_tol:
        raise ValueError(
            f"datum has x-spectral mass fraction {frac:.2e} below 4 grid "
            "frequencies; the negative-order x-derivative is singular there"
        )
    moved = apply_dx_alpha(propagate(phi, t, alpha), (alpha - 1.0) / 2.0)
    linf = float(np.max(np.abs(inverse_transform(moved))))
    return abs(t) * linf / l1_norm(phi)


# ---------------------------------------------------------------------------
# mixed-norm (Strichartz-type) ratios


def _time_lq(values: np.ndarray, times: np.ndarray, q: float) -> float:
    if np.isinf(q):
        return float(np.max(values))
    return float(np.trapezoid(values**q, times) ** (1.0 / q))


def strichartz_ratio(phi: SpectralField, pair: AdmissiblePair, alpha: float,
                     T: float, nt: int = 64) -> float:
    """||D_x^((a-1)/(2q)) U(t) phi||_{L^q_T L^p} / ||phi||_L2 (zero-x-mean data)."""
    if x_lowmode_fraction(phi, 1) > 1e-12:
        raise ValueError("datum must have zero x-mean")
    order = (alpha - 1.0) / (2.0 * pair.q) if not np.isinf(pair.q) else 0.0
    times = np.linspace(0.0, T, nt + 1)
    g = np.array([
        lp_norm(apply_dx_alpha(propagate(phi, t, alpha), order), pair.p)
        for t in times
    ])
    return _time_lq(g, times, pair.q) / l2_norm(phi)


def l2t_linf_pair(delta: float) -> tuple:
    """Admissible pair used for the L^2_T L^inf bound at smoothness delta."""
    p = 4.0 / delta
    q = 2.0 * p / (p - 2.0)
    return q, p


def l2t_linf_ratio(phi: SpectralField, alpha: float, T: float, delta: float,
                   nt: int = 64) -> float:
    """||U(t) phi||_{L^2_T L^inf} over its weighted-Sobolev majorant.

    The majorant is T^(delta/4) times the sum of ||phi||, ||D_x^((1-a)/4+d) phi||,
    ||D_y^d phi|| and ||D_x^((1-a)/4) D_y^d phi||; delta/4 is the time exponent
    of the admissible pair (q, p) = (4/(2-delta), 4/delta).
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if x_lowmode_fraction(phi, 1) > 1e-12:
        raise ValueError("datum must have zero x-mean")
    q, _ = l2t_linf_pair(delta)
    ktilde = (q - 2.0) / (2.0 * q)
    times = np.linspace(0.0, T, nt + 1)
    g = np.array([
        float(np.max(np.abs(inverse_transform(propagate(phi, t, alpha)))))
        for t in times
    ])
    lhs = _time_lq(g, times, 2.0)
    a0 = 0.25 * (1.0 - alpha)
    rhs = (l2_norm(phi)
           + l2_norm(apply_dx_alpha(phi, a0 + delta))
           + l2_norm(apply_dy_delta(phi, delta))
           + l2_norm(apply_dy_delta(apply_dx_alpha(phi, a0), delta)))
    return lhs / (T**ktilde * rhs)


def refined_strichartz_check(w0: SpectralField, forcing, alpha: float, T: float,
                             delta: float, nt: int = 64) -> NormReport:
    """Frequency-refined bound on ||grad w||_{L^1_T L^inf} for forced linear flow.

    w solves w_t + D_x^a w_x + H w_yy = F exactly in the linear part (Duhamel
    marching with per-interval Simpson).  Both gradient components are bounded
    by T^k (sup_t ||w||_{H^(s_a + 2d)} + int ||F||_{H^(s_a - 1 + 2d)}) with
    k = 1/2 + delta/4; the two ratios are reported.
    """
    grid = w0.grid
    times = np.linspace(0.0, T, nt + 1)
    dt = times[1] - times[0]
    s_a = regularity_threshold(alpha)
    q, _ = l2t_linf_pair(delta)
    k_delta = 0.5 + (q - 2.0) / (2.0 * q)

    gx = np.empty(nt + 1)
    gy = np.empty(nt + 1)
    hw = np.empty(nt + 1)
    hf = np.empty(nt + 1)

    def record(i, w):
        gx[i] = float(np.max(np.abs(inverse_transform(d_x(w)))))
        gy[i] = float(np.max(np.abs(inverse_transform(d_y(w)))))
        hw[i] = l2_norm(apply_js(w, s_a + 2.0 * delta))
        hf[i] = l2_norm(apply_js(forcing(times[i]), s_a - 1.0 + 2.0 * delta))

    w = w0.copy()
    record(0, w)
    for i in range(1, nt + 1):
        t0, t1 = times[i - 1], times[i]
        tm = 0.5 * (t0 + t1)
        duh = (propagate(forcing(t0), t1 - t0, alpha).coeffs
               + 4.0 * propagate(forcing(tm), t1 - tm, alpha).coeffs
               + forcing(t1).coeffs) * (dt / 6.0)
        w = propagate(w, dt, alpha) + SpectralField(grid, duh)
        record(i, w)

    rhs = T**k_delta * (float(np.max(hw)) + float(np.trapezoid(hf, times)))
    lhs_x = float(np.trapezoid(gx, times))
    lhs_y = float(np.trapezoid(gy, times))
    report = NormReport("refined", params={"alpha": alpha, "T": T,
                                           "delta": delta, "k": k_delta})
    report.columns = {"t": times, "grad_x_linf": gx, "grad_y_linf": gy,
                      "hs_w": hw, "hs_f": hf}
    report.fits = {"ratio_x": lhs_x / rhs if rhs > 0 else 0.0,
                   "ratio_y": lhs_y / rhs if rhs > 0 else 0.0}
    return report


# ---------------------------------------------------------------------------
# commutator and product inequalities


def kato_ponce_ratio(f: SpectralField, g: SpectralField, s: float) -> float:
    """||J^s(fg) - f J^s g||_L2 over its gradient/Sobolev majorant (s >= 1)."""
    if s < 1.0:
        raise ValueError(f"commutator order must satisfy s >= 1, got {s}")
    left = l2_norm(apply_js(product_padded(f, g), s)
                   - product_padded(f, apply_js(g, s)))
    right = (sup_gradient(f) * l2_norm(apply_js(g, s - 1.0))
             + l2_norm(apply_js(f, s)) * lp_norm(g, np.inf))
    if right < 1e-14:
        return 0.0
    return left / right


def skew_adjoint_residual(field: SpectralField, alpha: float) -> float:
    """|(D_x^a u_x + H u_yy, u)| / (||u|| ||D_x^a u_x + H u_yy||).

    The pairing is the bilinear grid integral of (Au) u, which coincides with
    the L2 inner product for real fields but detects non-Hermitian tampering.
    """
    grid = field.grid
    sym = (1j * grid.XI * _abs_pow(grid.XI, alpha)
           + 1j * np.sign(grid.XI) * grid.ETA**2)
    au = apply_multiplier(field, sym)
    u_phys = inverse_transform_complex(field)
    au_phys = inverse_transform_complex(au)
    pairing = np.sum(au_phys * u_phys) * grid.cell_area
    den = l2_norm(field) * l2_norm(au)
    if den == 0.0:
        return 0.0
    return float(abs(pairing) / den)


def _abs_pow(x, a):
    mag = np.abs(x)
    with np.errstate(divide="ignore"):
        return np.where(mag > 0, mag**a, 0.0)


# ---------------------------------------------------------------------------
# one-dimensional fractional Leibniz rule


def line_grid(n: int, length: float = 2.0 * np.pi):
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    return np.arange(n) * (length / n), xi


def _line_d_sigma(u: np.ndarray, length: float, sigma: float) -> np.ndarray:
    n = len(u)
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    mult = _abs_pow(xi, sigma)
    mult[n // 2] = 0.0
    return np.fft.ifft(np.fft.fft(u) * mult).real


def _line_product(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Alias-free product of two periodic samples via a doubled grid."""
    n = len(f)
    fh, gh = np.fft.fft(f), np.fft.fft(g)
    pad_f = np.zeros(2 * n, dtype=complex)
    pad_g = np.zeros(2 * n, dtype=complex)
    pad_f[:n // 2] = fh[:n // 2]
    pad_f[-(n // 2):] = fh[-(n // 2):]
    pad_g[:n // 2] = gh[:n // 2]
    pad_g[-(n // 2):] = gh[-(n // 2):]
    prod = np.fft.fft(np.fft.ifft(pad_f) * np.fft.ifft(pad_g)) * 2.0
    out = np.zeros(n, dtype=complex)
    out[:n // 2] = prod[:n // 2]
    out[-(n // 2):] = prod[-(n // 2):]
    out[n // 2] = 0.0
    return np.fft.ifft(out).real


def leibniz_ratio(f: np.ndarray, g: np.ndarray, sigma: float,
                  length: float = 2.0 * np.pi) -> float:
    """1-D product rule ratio at the (2, inf) exponent choice, sigma in (0,1).

    ||D^s(fg)|| / (||D^s f|| ||g||_inf + ||D^s g|| ||f||_inf) for zero-mean
    periodic f, g.
    """
    if not (0.0 < sigma < 1.0):
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    n = len(f)
    dxl = length / n
    for name, u in (("f", f), ("g", g)):
        if abs(np.mean(u)) > 1e-10 * max(1.0, np.max(np.abs(u))):
            raise ValueError(f"{name} must have zero mean")

    def l2(u):
        return float(np.sqrt(np.sum(u**2) * dxl))

    left = l2(_line_d_sigma(_line_product(f, g), length, sigma))
    right = (l2(_line_d_sigma(f, length, sigma)) * np.max(np.abs(g))
             + l2(_line_d_sigma(g, length, sigma)) * np.max(np.abs(f)))
    if right < 1e-14:
        return 0.0
    return left / right


# ---------------------------------------------------------------------------
# ensemble protocol


def ensemble_report(name: str, ratios, refined_ratios=None,
                    max_median_limit: float = 10.0,
                    drift_limit: float = 0.3) -> NormReport:
    """Apply the shared bounded-ratio verdict protocol to a draw ensemble."""
    ratios = np.asarray(ratios, dtype=float)
    report = NormReport(name, params={"draws": len(ratios)})
    report.columns = {"draw": np.arange(len(ratios)), "ratio": ratios}
    rmax = float(np.max(ratios))
    rmed = float(np.median(ratios))
    report.fits = {"max": rmax, "median": rmed}
    report.add_verdict("max_over_median", rmax / rmed < max_median_limit,
                       f"max ratio / median ratio < {max_median_limit}",
                       value=rmax / rmed)
    if refined_ratios is not None:
        refined_ratios = np.asarray(refined_ratios, dtype=float)
        report.columns["ratio_refined"] = refined_ratios
        drift = abs(float(np.max(refined_ratios)) - rmax) / rmax
        report.fits["refined_max"] = float(np.max(refined_ratios))
        report.add_verdict("refinement_drift", drift < drift_limit,
                           f"max ratio drift under one grid refinement < "
                           f"{drift_limit:.0%}", value=drift)
    return report
