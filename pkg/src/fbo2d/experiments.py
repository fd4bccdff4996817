"""Prepackaged verification experiments shared by the CLI and the test suite.

The bounded-ratio ensembles all follow the same protocol: seeded draws on a
base grid, the same draws re-run after one grid refinement (the data embed
unchanged, being band-limited), PASS iff max/median < 10 and the max ratio
drifts by < 30%.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import estimates as est
from .fields import modulated_gaussian, random_field
from .littlewood_paley import (
    block_symbol,
    dyadic_project,
    enlarged_project,
    num_blocks,
    projection_commutator,
)
from .quadrature import QuadratureError
from .reports import NormReport
from .spectral import Grid, SpectralField, embed, forward_transform, l2_norm
from .fields import synthetic_hs_field


def _pmap(fn, items, threads: int = 1):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


BASE_GRID = Grid(64, 64, 8.0 * np.pi, 8.0 * np.pi)


def _draw(grid: Grid, seed: int, zero_x_mean: bool = True,
          base: Grid = BASE_GRID) -> SpectralField:
    """Band-limited random draw; the same seed gives the same function on any
    refinement of the base grid (drawn on the base lattice, then embedded)."""
    kmax = (base.nx // 6) * 2.0 * np.pi / base.lx
    f = random_field(base, seed, band=(0.0, kmax), zero_x_mean=zero_x_mean,
                     profile=lambda r: (1.0 + r**2) ** -0.5)
    return f if grid == base else embed(f, grid)


def _two_level(ratio_fn, draws: int, seed: int, grid: Grid = BASE_GRID,
               threads: int = 1):
    """Run the seeded ratio ensemble on a grid and on its refinement."""
    fine = grid.refine(2)

    def one(level_grid):
        def run(i):
            return ratio_fn(level_grid, seed + i)
        return _pmap(run, range(draws), threads)

    return one(grid), one(fine)


def strichartz_experiment(alpha: float, q: float, p: float, T: float = 1.0,
                          draws: int = 50, seed: int = 0, nt: int = 64,
                          threads: int = 1) -> NormReport:
    pair = est.AdmissiblePair(q, p)

    def ratio(grid, s):
        phi = _draw(grid, s)
        return est.strichartz_ratio(phi, pair, alpha, T, nt)

    base, fine = _two_level(ratio, draws, seed, threads=threads)
    report = est.ensemble_report("strichartz", base, fine)
    report.params.update({"alpha": alpha, "q": q, "p": p, "T": T, "seed": seed})
    return report


def cor33_experiment(alpha: float, delta: float, T: float = 1.0,
                     draws: int = 50, seed: int = 0, nt: int = 64,
                     threads: int = 1) -> NormReport:
    def ratio(grid, s):
        phi = _draw(grid, s)
        return est.l2t_linf_ratio(phi, alpha, T, delta, nt)

    base, fine = _two_level(ratio, draws, seed, threads=threads)
    report = est.ensemble_report("cor33", base, fine)
    report.params.update({"alpha": alpha, "delta": delta, "T": T, "seed": seed})
    return report


def refined_strichartz_experiment(alpha: float, delta: float, T: float = 1.0,
                                  draws: int = 50, seed: int = 0, nt: int = 48,
                                  threads: int = 1) -> NormReport:
    def ratio(grid, s):
        w0 = _draw(grid, s)
        profile = _draw(grid, s + 10_000)
        omega = 1.0 + (s % 7)

        def forcing(t):
            return np.cos(omega * t) * profile

        rep = est.refined_strichartz_check(w0, forcing, alpha, T, delta, nt)
        return max(rep.fits["ratio_x"], rep.fits["ratio_y"])

    base, fine = _two_level(ratio, draws, seed, threads=threads)
    report = est.ensemble_report("refined", base, fine)
    report.params.update({"alpha": alpha, "delta": delta, "T": T, "seed": seed})
    return report


def kato_ponce_experiment(s_values=(1.0, 1.7, 2.5), draws: int = 51,
                          seed: int = 0, threads: int = 1) -> NormReport:
    s_values = tuple(s_values)

    def ratio(grid, i):
        f = _draw(grid, i, zero_x_mean=False)
        g = _draw(grid, i + 20_000, zero_x_mean=False)
        return est.kato_ponce_ratio(f, g, s_values[i % len(s_values)])

    base, fine = _two_level(ratio, draws, seed, threads=threads)
    report = est.ensemble_report("kato-ponce", base, fine)
    report.params.update({"s_values": list(s_values), "seed": seed})
    return report


def _line_draw(n: int, seed: int, kmax_frac: float = 1 / 6) -> np.ndarray:
    """Zero-mean band-limited 1-D samples; embeds unchanged when n doubles."""
    rng = np.random.default_rng(seed)
    base = 64
    kmax = int(base * kmax_frac)
    coeff = np.zeros(n, dtype=complex)
    z = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
    amp = (1.0 + np.arange(1, kmax + 1) ** 2) ** -0.5
    coeff[1:kmax + 1] = z * amp
    coeff[-kmax:] = np.conj(coeff[1:kmax + 1][::-1])
    return np.fft.ifft(coeff).real * n / base


def leibniz_experiment(sigmas=(0.2, 0.5, 0.8), draws: int = 51, seed: int = 0,
                       n: int = 256, length: float = 2.0 * np.pi,
                       threads: int = 1) -> NormReport:
    sigmas = tuple(sigmas)

    def level(m):
        def run(i):
            f = _line_draw(m, seed + i)
            g = _line_draw(m, seed + i + 30_000)
            return est.leibniz_ratio(f, g, sigmas[i % len(sigmas)], length)
        return _pmap(run, range(draws), threads)

    base, fine = level(n), level(2 * n)
    report = est.ensemble_report("leibniz", base, fine)
    report.params.update({"sigmas": list(sigmas), "n": n, "seed": seed})
    return report


def lp_commutator_experiment(lams=(4.0, 8.0, 16.0), draws: int = 51,
                             seed: int = 0, grid: Grid | None = None,
                             threads: int = 1) -> NormReport:
    """Block-commutator ratio ensemble, plus stability under doubling lambda."""
    grid = grid or Grid(64, 64)
    lams = tuple(lams)

    def ratio_at(scale):
        def ratio(level_grid, i):
            v = _draw(level_grid, i, zero_x_mean=False, base=grid)
            w = _draw(level_grid, i + 40_000, zero_x_mean=False, base=grid)
            lam = lams[i % len(lams)] * scale
            return projection_commutator(lam, v, w)[1]
        return ratio

    base, fine = _two_level(ratio_at(1.0), draws, seed, grid=grid,
                            threads=threads)
    report = est.ensemble_report("lp-check", base, fine)
    doubled, _ = _two_level(ratio_at(2.0), draws, seed, grid=grid, threads=1)
    drift = abs(max(doubled) - max(base)) / max(base)
    report.fits["doubled_lambda_max"] = float(max(doubled))
    report.add_verdict("lambda_doubling_stability", drift < 0.2,
                       "max ratio moves < 20% when every block scale doubles",
                       value=drift)
    report.params.update({"lams": list(lams), "seed": seed})
    return report


# ---------------------------------------------------------------------------
# decay and oscillatory-integral experiments

DECAY_GRID = Grid(2048, 256, 128.0, 48.0)


def decay_experiment(alphas=(0.25, 0.5, 1.0), k0: float = 12.0,
                     width: float = 0.6, width_y: float = 1.0,
                     grid: Grid = DECAY_GRID, n_times: int = 8,
                     flat_factor: float = 3.0) -> NormReport:
    """Dispersive-decay flatness of t ||D_x^((a-1)/2) U(t) phi||_inf / ||phi||_L1.

    The window is [0.5, t_box/2] with t_box the box-traversal time of the
    datum, so wrap-around never contaminates the check.
    """
    phi = modulated_gaussian(grid, k0=k0, width=width, width_y=width_y)
    report = NormReport("decay", params={
        "k0": k0, "width": width, "width_y": width_y,
        "nx": grid.nx, "ny": grid.ny, "lx": grid.lx, "ly": grid.ly,
    })
    cols = {"alpha": [], "t": [], "ratio": []}
    for alpha in alphas:
        t_box = est.traversal_time(phi, alpha)
        times = np.linspace(0.5, t_box / 2.0, n_times)
        ratios = [est.decay_ratio(phi, t, alpha) for t in times]
        cols["alpha"].extend([alpha] * len(times))
        cols["t"].extend(times)
        cols["ratio"].extend(ratios)
        spread = max(ratios) / min(ratios)
        report.fits[f"spread_alpha_{alpha:g}"] = spread
        report.fits[f"t_box_alpha_{alpha:g}"] = t_box
        report.add_verdict(f"flat_alpha_{alpha:g}", spread < flat_factor,
                           f"ratio varies by < factor {flat_factor} over "
                           "[0.5, t_box/2]", value=spread)
    report.columns = cols
    return report


FRESNEL_ABS = float(np.sqrt(np.pi) / 2.0)  # |int_0^inf e^(-i xi^2) dxi|


def oscillatory_experiment(alpha: float, lam_min: float = -50.0,
                           lam_max: float = 50.0, count: int = 41,
                           rel_tol: float = 0.05, threads: int = 1) -> NormReport:
    """|J(lam)| over a lambda grid with the extrapolation-residual gate."""
    lams = np.linspace(lam_min, lam_max, count)

    def one(lam):
        r = est.oscillatory_integral(float(lam), alpha, rel_tol=rel_tol)
        return abs(r.value), r.residual

    results = _pmap(one, lams, threads)
    vals = np.array([v for v, _ in results])
    residuals = np.array([r for _, r in results])
    report = NormReport("oscillatory", params={
        "alpha": alpha, "lam_min": lam_min, "lam_max": lam_max, "count": count,
    })
    report.columns = {"lam": lams, "abs_J": vals, "residual": residuals}
    report.fits = {"sup_abs_J": float(np.max(vals))}
    report.add_verdict("sup_finite", bool(np.all(np.isfinite(vals))),
                       "|J| finite on the whole grid", value=float(np.max(vals)))
    report.add_verdict("residuals_under_tol",
                       bool(np.all(residuals <= rel_tol * np.maximum(vals, 1e-300))),
                       f"extrapolation residual < {rel_tol:.0%} of |J| everywhere")
    if alpha == 1.0 and np.any(lams == 0.0):
        j0 = vals[np.argmax(lams == 0.0)]
        err = abs(j0 - FRESNEL_ABS) / FRESNEL_ABS
        report.fits["fresnel_rel_err"] = float(err)
        report.add_verdict("fresnel_match", err < 0.02,
                           "|J(0)| within 2% of sqrt(pi)/2", value=err)
    return report


# ---------------------------------------------------------------------------
# dyadic-partition residual checks


def lp_residual_report(grid: Grid, seed: int = 0) -> NormReport:
    """Partition-of-unity, reconstruction, and enlarged-block identities."""
    nb = num_blocks(grid)
    total = block_symbol(grid, 0).copy()
    for k in range(1, nb + 1):
        total += block_symbol(grid, k)
    partition_res = float(np.max(np.abs(total - 1.0)))

    u = random_field(grid, seed)
    recon = np.zeros_like(u.coeffs)
    for k in range(nb + 1):
        recon += dyadic_project(u, k).coeffs
    ref = u.coeffs.copy()
    ref[grid.nx // 2, :] = 0.0
    ref[:, grid.ny // 2] = 0.0
    recon_res = float(np.max(np.abs(recon - ref)) / np.max(np.abs(ref)))

    tilde_res = 0.0
    for lam in (1.0, 2.0, 8.0):
        i = int(np.log2(lam))
        core = dyadic_project(u, i)
        again = dyadic_project(enlarged_project(u, lam), i)
        num = float(np.max(np.abs(core.coeffs - again.coeffs)))
        tilde_res = max(tilde_res, num / max(np.max(np.abs(core.coeffs)), 1e-300))

    ssum = sum(l2_norm(dyadic_project(u, k)) ** 2 for k in range(nb + 1))
    l2sq = l2_norm(SpectralField(grid, ref)) ** 2

    report = NormReport("lp-check", params={"nx": grid.nx, "ny": grid.ny,
                                            "seed": seed})
    report.columns = {"check": ["partition", "reconstruction", "tilde"],
                      "residual": [partition_res, recon_res, tilde_res]}
    report.add_verdict("partition_of_unity", partition_res < 1e-12,
                       "max |chi + sum phi_k - 1| < 1e-12 on the lattice",
                       value=partition_res)
    report.add_verdict("reconstruction", recon_res < 1e-12,
                       "sum of block projections reproduces the field "
                       "(Nyquist-zeroed) to 1e-12", value=recon_res)
    report.add_verdict("enlarged_block_identity", tilde_res < 1e-12,
                       "core block of enlarged block equals core block to 1e-12",
                       value=tilde_res)
    report.add_verdict(
        "almost_orthogonality",
        bool(l2sq / 3.0 - 1e-12 <= ssum <= l2sq * (1.0 + 1e-12)),
        "||u||^2/3 <= sum_k ||Q_k u||^2 <= ||u||^2 (squared symbols overlap "
        "at most 3 deep and are bounded by 1)", value=ssum / l2sq)
    return report
