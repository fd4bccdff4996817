"""Grid-free norm-growth experiment for the second Picard iterate.

A one-parameter family of spectral data concentrates on two thin frequency
rectangles, a low block near xi ~ beta = n^-(alpha+eps) and a high block near
xi ~ n.  The quadratic interaction of the two blocks produces output near the
high block whose Sobolev norm grows like a positive power of n while the data
stay bounded, so no two-sided Duhamel contraction bound can hold.  Everything
here is frequency-space quadrature; no spatial grid is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .propagator import dispersion
from .quadrature import QuadratureError, gauss_rule, unit_simpson
from .reports import NormReport

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] (possibly empty)."""

    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def width(self) -> float:
        return max(0.0, self.x1 - self.x0)

    @property
    def height(self) -> float:
        return max(0.0, self.y1 - self.y0)

    @property
    def measure(self) -> float:
        return self.width * self.height

    @property
    def is_empty(self) -> bool:
        return self.measure == 0.0

    def contains(self, x, y):
        return (self.x0 <= x) & (x <= self.x1) & (self.y0 <= y) & (y <= self.y1)


def admissible_eps_bound(alpha: float) -> float:
    """Largest admissible interaction exponent, min(alpha, 8/15 - 7*alpha/15)."""
    return min(alpha, 8.0 / 15.0 - 7.0 * alpha / 15.0)


@dataclass(frozen=True)
class GrowthDatum:
    """Two-rectangle spectral datum with high frequency n and exponent eps."""

    n: float
    eps: float
    alpha: float
    s: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.n <= 1.0:
            raise ValueError(f"high frequency n must exceed 1, got {self.n}")
        bound = admissible_eps_bound(self.alpha)
        if not (0.0 < self.eps < bound):
            raise ValueError(
                f"eps = {self.eps} not admissible: need 0 < eps < "
                f"min(alpha, 8/15 - 7 alpha/15) = {bound:.6g}"
            )

    @property
    def beta(self) -> float:
        return self.n ** -(self.alpha + self.eps)

    @cached_property
    def low_rect(self) -> Rect:
        b = self.beta
        return Rect(b / 2.0, b, 0.0, b**0.25)

    @cached_property
    def high_rect(self) -> Rect:
        b = self.beta
        return Rect(self.n, self.n + b, 0.0, b**0.25)

    @property
    def low_amplitude(self) -> float:
        return self.beta**-0.5

    @property
    def high_amplitude(self) -> float:
        return self.beta**-0.5 * self.n**-self.s

    @cached_property
    def support_box(self) -> Rect:
        """Support of the low-high interaction output."""
        b = self.beta
        return Rect(self.n + b / 2.0, self.n + 2.0 * b, 0.0, 2.0 * b**0.25)


def datum_hat(spec: GrowthDatum, xi, eta):
    """Piecewise-constant spectral profile of the datum."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    out = np.zeros(np.broadcast(xi, eta).shape)
    out += spec.low_amplitude * spec.low_rect.contains(xi, eta)
    out += spec.high_amplitude * spec.high_rect.contains(xi, eta)
    return out


def datum_sobolev_norm(spec: GrowthDatum, quad_pts: int = 48) -> float:
    """H^s norm of the datum: weighted areas of the two rectangles.

    The integrand (1 + xi^2 + eta^2)^s is smooth on each tiny rectangle, so a
    tensor Gauss-Legendre rule is accurate to roundoff.  The squared norm is
    (3/2) beta^(1/4) up to 1 + O(beta^(1/2)) corrections.
    """
    total = 0.0
    for rect, amp in ((spec.low_rect, spec.low_amplitude),
                      (spec.high_rect, spec.high_amplitude)):
        x, wx = gauss_rule(rect.x0, rect.x1, quad_pts)
        y, wy = gauss_rule(rect.y0, rect.y1, quad_pts)
        w2d = np.outer(wx, wy)
        integrand = (1.0 + x[:, None] ** 2 + y[None, :] ** 2) ** spec.s
        total += amp**2 * float(np.sum(w2d * integrand))
    return float(np.sqrt(total))


def resonance(xi, eta, xi1, eta1, alpha: float):
    """rho(xi1, eta1) + rho(xi - xi1, eta - eta1) - rho(xi, eta)."""
    return (dispersion(xi1, eta1, alpha)
            + dispersion(np.asarray(xi) - xi1, np.asarray(eta) - eta1, alpha)
            - dispersion(xi, eta, alpha))


def _resonance_stable(xi, xi1, eta, eta1, alpha: float):
    """Resonance on the interaction region, cancellation-free form.

    Valid for 0 < xi1 < xi: xi^(1+a) - (xi-xi1)^(1+a) is evaluated through
    expm1/log1p so no precision is lost when xi1/xi ~ 1e-8.
    """
    p = 1.0 + alpha
    lead = -(xi**p) * np.expm1(p * np.log1p(-xi1 / xi))
    return lead - xi1**p + 2.0 * eta1 * (eta - eta1)


def interaction_rect(spec: GrowthDatum, xi: float, eta: float) -> Rect:
    """Pairs (xi1, eta1) in the low block with (xi - xi1, eta - eta1) high.

    Exact rectangle intersection; nonempty only for (xi, eta) inside the
    support box.
    """
    low, high = spec.low_rect, spec.high_rect
    return Rect(
        max(low.x0, xi - high.x1), min(low.x1, xi - high.x0),
        max(low.y0, eta - high.y1), min(low.y1, eta - high.y0),
    )


def oscillation_kernel(psi, t: float, series_threshold: float = 1e-8):
    """(exp(i t psi) - 1) / psi with a series branch near the removable zero."""
    psi = np.asarray(psi, dtype=float)
    small = np.abs(t * psi) < series_threshold
    safe = np.where(small, 1.0, psi)
    main = (np.exp(1j * t * safe) - 1.0) / safe
    series = 1j * t * (1.0 + 0.5j * t * psi)
    return np.where(small, series, main)


def _simpson_01(panels: int):
    return unit_simpson(panels)


def _second_iterate_norm_raw(spec: GrowthDatum, t: float, panels) -> float:
    """Squared-norm quadrature at one panel configuration."""
    ox, oy, ix, iy = panels
    for name, p in zip(("outer_x", "outer_y", "inner_x", "inner_y"), panels):
        if p < 2 or p % 2:
            raise ValueError(f"{name} panel count must be even and >= 2, got {p}")
    box = spec.support_box
    # Outer Simpson nodes; the overlap widths are piecewise linear with kinks
    # at 1/3 and 2/3 of the xi-range and 1/2 of the eta-range, so panel counts
    # divisible by 6 and 4 put the kinks on Simpson pair boundaries.
    ux, wx = _simpson_01(ox)
    uy, wy = _simpson_01(oy)
    X = box.x0 + (box.x1 - box.x0) * ux
    Y = box.y0 + (box.y1 - box.y0) * uy
    wx = wx * (box.x1 - box.x0)
    wy = wy * (box.y1 - box.y0)

    low, high = spec.low_rect, spec.high_rect
    xlo = np.maximum(low.x0, X - high.x1)
    xhi = np.minimum(low.x1, X - high.x0)
    ylo = np.maximum(low.y0, Y - high.y1)
    yhi = np.minimum(low.y1, Y - high.y0)
    wx1 = np.maximum(0.0, xhi - xlo)
    wy1 = np.maximum(0.0, yhi - ylo)

    ui, wi = _simpson_01(ix)
    uj, wj = _simpson_01(iy)
    xi1 = xlo[:, None] + wx1[:, None] * ui[None, :]          # (ox+1, ix+1)
    eta1 = ylo[:, None] + wy1[:, None] * uj[None, :]         # (oy+1, iy+1)

    p = 1.0 + spec.alpha
    lead = -(X[:, None] ** p) * np.expm1(p * np.log1p(-xi1 / X[:, None]))
    ax = lead - xi1**p                                        # (ox+1, ix+1)
    ay = 2.0 * eta1 * (Y[:, None] - eta1)                     # (oy+1, iy+1)
    psi = ax[:, None, :, None] + ay[None, :, None, :]
    kern = oscillation_kernel(psi, t)

    inner = np.einsum("abij,i,j->ab", kern, wi, wj)
    inner *= (wx1[:, None] * wy1[None, :])

    weight = (1.0 + X[:, None] ** 2 + Y[None, :] ** 2) ** spec.s
    pref = X[:, None] ** 2 / (4.0 * np.pi**2 * spec.beta**2 * spec.n ** (2 * spec.s))
    sq = np.einsum("a,b,ab->", wx, wy, weight * pref * np.abs(inner) ** 2)
    return float(sq)


DEFAULT_PANELS = (12, 8, 8, 4)


def second_iterate_norm(spec: GrowthDatum, t: float, panels=DEFAULT_PANELS,
                        gate: float = 0.01, with_residual: bool = False):
    """H^s norm of the low-high interaction part of the second Picard iterate.

    Outer composite Simpson over the support box, inner composite Simpson over
    the exact interaction rectangle of each outer node.  The value must pass a
    self-convergence gate: doubling every panel count may move it by at most
    ``gate`` (relative), else :class:`QuadratureError` is raised.
    """
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    coarse = np.sqrt(_second_iterate_norm_raw(spec, t, panels))
    fine = np.sqrt(_second_iterate_norm_raw(spec, t, tuple(2 * p for p in panels)))
    residual = abs(fine - coarse) / max(fine, 1e-300)
    if residual > gate:
        raise QuadratureError(
            f"quadrature not converged (doubling panels moved the value by "
            f"{100 * residual:.2f}% > {100 * gate:.0f}%); increase the panel "
            f"counts {panels}"
        )
    if with_residual:
        return float(fine), float(residual)
    return float(fine)


DEFAULT_LADDER = tuple(10.0**e for e in (3.0, 3.5, 4.0, 4.5, 5.0))


def predicted_norm_slope(alpha: float, eps: float) -> float:
    """Target log-log slope of the iterate norm in n: (2 - 7a/4 - 15e/4)/2."""
    return 0.5 * (2.0 - 1.75 * alpha - 3.75 * eps)


def growth_slope_fit(alpha: float, eps: float, s: float, t: float,
                     ladder=DEFAULT_LADDER, panels=DEFAULT_PANELS,
                     gate: float = 0.01, slope_tol: float = 0.15) -> NormReport:
    """Fit the growth of the iterate norm along a geometric frequency ladder.

    PASS requires the norm sequence to increase strictly, the fitted log-log
    slope to sit within ``slope_tol`` of the predicted exponent, and the data
    norms to stay inside a factor-2 band (bounded family).
    """
    ladder = [float(n) for n in ladder]
    if len(ladder) < 5:
        raise ValueError("frequency ladder needs at least 5 points")
    rows = {"n": [], "beta": [], "datum_norm": [], "iterate_norm": [],
            "quad_residual": []}
    for n in sorted(ladder):
        spec = GrowthDatum(n, eps, alpha, s)
        norm, residual = second_iterate_norm(spec, t, panels, gate,
                                             with_residual=True)
        rows["n"].append(n)
        rows["beta"].append(spec.beta)
        rows["datum_norm"].append(datum_sobolev_norm(spec))
        rows["iterate_norm"].append(norm)
        rows["quad_residual"].append(residual)

    logn = np.log(rows["n"])
    logf = np.log(rows["iterate_norm"])
    slope, intercept = np.polyfit(logn, logf, 1)
    fitted = slope * logn + intercept
    ss_res = float(np.sum((logf - fitted) ** 2))
    ss_tot = float(np.sum((logf - np.mean(logf)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    target = predicted_norm_slope(alpha, eps)

    report = NormReport("illposed", params={
        "alpha": alpha, "eps": eps, "s": s, "t": t,
        "panels": list(panels), "gate": gate,
    })
    report.columns = rows
    report.fits = {"slope": float(slope), "intercept": float(intercept),
                   "r_squared": r2, "target_slope": target}
    increasing = bool(np.all(np.diff(rows["iterate_norm"]) > 0))
    report.add_verdict("norms_increasing", increasing,
                       "iterate norm strictly increasing along the ladder")
    report.add_verdict("slope_matches", abs(slope - target) <= slope_tol,
                       f"|fitted slope - {target:.5g}| <= {slope_tol}",
                       value=float(slope))
    band = max(rows["datum_norm"]) / min(rows["datum_norm"])
    report.add_verdict("data_bounded", band <= 2.0,
                       "data norms within a factor-2 band", value=band)
    return report
