"""Nonlinear initial-value runs and the well-posedness experiment suite.

A trajectory records diagnostics (L2, H^s, sup norms, mean) at every step and
full spectral snapshots on a configurable stride.  On dealiased runs the mean
and the L2 norm of the solution are conserved up to time-integration error.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .littlewood_paley import (
    construct_weights,
    dyadic_project,
    low_cutoff,
    num_blocks,
    weighted_block_energy,
)
from .propagator import BlowUpError, cfl_dt, if_rk4_step
from .reports import NormReport
from .spectral import (
    SpectralField,
    apply_multiplier,
    field_mean,
    l2_norm,
    sobolev_norm,
    sup_norms,
)


@dataclass
class SolveConfig:
    sobolev_orders: tuple = (2.0,)
    nonlinear: bool = True
    snapshot_every: int | None = None  # steps; None picks ~64 snapshots per run
    cfl_safety: float = 0.5


@dataclass
class Trajectory:
    grid: object
    alpha: float
    dt: float
    times: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    grad_linf: np.ndarray
    w1inf: np.ndarray
    mean: np.ndarray
    hs: dict
    snap_times: np.ndarray
    snapshots: list
    warnings: list = dc_field(default_factory=list)

    @property
    def T(self) -> float:
        return float(self.times[-1])


def solve_ivp(u0: SpectralField, alpha: float, T: float, dt: float,
              cfg: SolveConfig | None = None) -> Trajectory:
    """March the equation u_t + D_x^a u_x + H u_yy + u u_x = 0 to time T.

    The step count is round(T/dt) and dt is nudged so the run lands exactly
    on T.  A violated nonlinear CFL bound for the initial datum is recorded
    as a warning; blow-up raises :class:`BlowUpError` carrying the partial
    trajectory and last valid time.
    """
    if T <= 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if dt <= 0:
        raise ValueError(f"time step dt must be positive, got {dt}")
    cfg = cfg or SolveConfig()
    steps = max(1, int(round(T / dt)))
    dt = T / steps
    stride = cfg.snapshot_every or max(1, steps // 64)

    warnings = []
    if cfg.nonlinear:
        bound = cfl_dt(u0, cfg.cfl_safety)
        if dt > bound:
            warnings.append(
                f"dt = {dt:.3e} exceeds the nonlinear CFL bound {bound:.3e}"
            )

    times = np.empty(steps + 1)
    diag = {name: np.empty(steps + 1) for name in
            ("l2", "linf", "grad_linf", "w1inf", "mean")}
    hs = {s: np.empty(steps + 1) for s in cfg.sobolev_orders}
    snap_times = []
    snapshots = []

    def record(i, t, u):
        times[i] = t
        diag["l2"][i] = l2_norm(u)
        norms = sup_norms(u)
        diag["linf"][i] = norms.linf
        diag["grad_linf"][i] = norms.grad_linf
        diag["w1inf"][i] = norms.w1inf
        diag["mean"][i] = field_mean(u)
        for s in hs:
            hs[s][i] = sobolev_norm(u, s)
        if i % stride == 0 or i == steps:
            snap_times.append(t)
            snapshots.append(u.copy())

    u = u0.copy()
    record(0, 0.0, u)
    for i in range(1, steps + 1):
        try:
            u = if_rk4_step(u, dt, alpha, nonlinear=cfg.nonlinear)
        except BlowUpError as exc:
            partial = Trajectory(
                u0.grid, alpha, dt, times[:i], diag["l2"][:i], diag["linf"][:i],
                diag["grad_linf"][:i], diag["w1inf"][:i], diag["mean"][:i],
                {s: v[:i] for s, v in hs.items()},
                np.asarray(snap_times), snapshots, warnings,
            )
            raise BlowUpError(
                f"blow-up at t = {i * dt:.6g} (last valid t = {(i - 1) * dt:.6g})",
                time=(i - 1) * dt, trajectory=partial,
            ) from exc
        record(i, i * dt, u)

    return Trajectory(
        u0.grid, alpha, dt, times, diag["l2"], diag["linf"], diag["grad_linf"],
        diag["w1inf"], diag["mean"], hs, np.asarray(snap_times), snapshots,
        warnings,
    )


# ---------------------------------------------------------------------------
# energy inequality


def track_energy(traj: Trajectory, s: float) -> NormReport:
    """Empirical constant in d/dt ||u||_{H^s}^2 <= C ||grad u||_inf ||u||_{H^s}^2.

    The derivative is a centered difference of the recorded H^s series; times
    where the right-hand side is below 1e-14 are excluded and noted.  The
    integrated form of the bound is then checked by direct substitution with
    the fitted constant.
    """
    if s not in traj.hs:
        raise ValueError(f"trajectory does not carry H^{s} diagnostics")
    if len(traj.times) < 5:
        raise ValueError("need at least 5 snapshots for centered differencing")
    t = traj.times
    e = traj.hs[s] ** 2
    dt = t[1] - t[0]
    dedt = (e[2:] - e[:-2]) / (2.0 * dt)
    den = traj.grad_linf[1:-1] * e[1:-1]
    keep = den > 1e-14
    report = NormReport("energy", params={"s": s, "alpha": traj.alpha})
    if not np.all(keep):
        report.warnings.append(f"excluded {int(np.sum(~keep))} times with "
                               "vanishing right-hand side")
    ratio = np.where(keep, dedt / np.where(keep, den, 1.0), np.nan)
    c_emp = float(np.nanmax(ratio)) if np.any(keep) else 0.0
    c_emp = max(c_emp, 0.0)

    grad_int = np.trapezoid(traj.grad_linf, t)
    sup_e = float(np.max(e))
    lhs = sup_e
    rhs = e[0] + c_emp * grad_int * sup_e
    report.columns = {
        "t": t[1:-1], "hs_sq": e[1:-1], "d_dt_hs_sq": dedt,
        "grad_linf": traj.grad_linf[1:-1], "ratio": ratio,
    }
    report.fits = {"C_empirical": c_emp, "grad_l1": grad_int}
    report.add_verdict(
        "integrated_energy_bound", lhs <= rhs * 1.05 + 1e-12,
        "sup_t ||u||_{H^s}^2 <= ||u0||^2 + C ||grad u||_{L1 Linf} sup_t ||u||^2, "
        "fitted C, 5% slack", value=lhs / max(rhs, 1e-300),
    )
    return report


def control_functional(traj: Trajectory) -> float:
    """Time integral of ||u||_inf + ||grad u||_inf over the whole run."""
    return float(np.trapezoid(traj.linf + traj.grad_linf, traj.times))


def control_functional_fit(traj: Trajectory, s: float, n_windows: int = 8):
    """Fit f(T) <= C T^k (1 + f(T)) sup_t ||u||_{H^s} over a T-ladder.

    Returns (C, k_lsq, k_used, table); k_used is the least-squares exponent
    clipped into (1/2, 1) and C is the smallest constant making the bound
    hold at every ladder point.
    """
    t = traj.times
    integrand = traj.linf + traj.grad_linf
    idx = np.unique(np.linspace(len(t) // n_windows, len(t) - 1, n_windows).astype(int))
    ts, ys = [], []
    for i in idx:
        T = t[i]
        if T <= 0:
            continue
        f_T = float(np.trapezoid(integrand[: i + 1], t[: i + 1]))
        m_T = float(np.max(traj.hs[s][: i + 1]))
        ys.append(f_T / ((1.0 + f_T) * m_T))
        ts.append(T)
    ts = np.asarray(ts)
    ys = np.asarray(ys)
    k_lsq = float(np.polyfit(np.log(ts), np.log(ys), 1)[0])
    k_used = float(np.clip(k_lsq, 0.55, 0.95))
    c = float(np.max(ys / ts**k_used))
    return c, k_lsq, k_used, (ts, ys)


# ---------------------------------------------------------------------------
# a-priori doubling experiment


def apriori_experiment(u0: SpectralField, s: float, alpha: float, a_values,
                       dt: float | None = None) -> NormReport:
    """Run to T = (A ||u0||_{H^s} + 1)^-2 and test the norm-doubling bound.

    For each constant A in the sweep the run either keeps sup_t ||u||_{H^s}
    below 2 ||u0||_{H^s} (pass) or not; blow-up counts as failure.  The report
    lists the smallest passing A.
    """
    a_values = [float(a) for a in np.atleast_1d(a_values)]
    if any(a <= 0 for a in a_values):
        raise ValueError("sweep constants must be positive")
    norm0 = sobolev_norm(u0, s)
    report = NormReport("apriori", params={"s": s, "alpha": alpha,
                                           "hs_norm_0": norm0})
    rows = {"A": [], "T": [], "sup_ratio": [], "f_T": [], "passed": []}
    smallest = None
    for a in sorted(a_values):
        T = (a * norm0 + 1.0) ** -2
        step = dt if dt is not None else min(cfl_dt(u0), T / 24.0)
        try:
            traj = solve_ivp(u0, alpha, T, step, SolveConfig(sobolev_orders=(s,)))
            sup_ratio = float(np.max(traj.hs[s])) / max(norm0, 1e-300)
            f_T = control_functional(traj)
            ok = sup_ratio <= 2.0 + 1e-9
        except BlowUpError:
            sup_ratio, f_T, ok = np.inf, np.inf, False
        rows["A"].append(a)
        rows["T"].append(T)
        rows["sup_ratio"].append(sup_ratio)
        rows["f_T"].append(f_T)
        rows["passed"].append(ok)
        if ok and smallest is None:
            smallest = a
    report.columns = rows
    report.fits = {"smallest_passing_A": smallest if smallest is not None else np.nan}
    report.add_verdict("doubling_holds_for_some_A", smallest is not None,
                       "sup_t ||u||_{H^s} <= 2 ||u0||_{H^s} for some A in the sweep")
    # passing set must be upward closed in A
    upward = all(b or not a for a, b in zip(rows["passed"], rows["passed"][1:])) \
        if len(rows["passed"]) > 1 else True
    report.add_verdict("passing_set_upward_closed", upward,
                       "if A passes then every larger A passes")
    return report


# ---------------------------------------------------------------------------
# Bona-Smith regularization and convergence of regularized runs


def bona_smith(u0: SpectralField, n: float) -> SpectralField:
    """Smooth low-pass datum: spectrum kept below radius n/2, cut at radius n."""
    if n <= 0:
        raise ValueError(f"cutoff scale must be positive, got {n}")
    grid = u0.grid
    return apply_multiplier(u0, low_cutoff(2.0 * grid.radius / n))


def regularization_tail_report(u0: SpectralField, s: float, ladder,
                               sigmas=()) -> NormReport:
    """Log-log decay rates of ||u0_n - u0|| under the low-pass ladder.

    For data in H^s the L2 tail must decay at least like n^-s, and the J^sigma
    tail at least like n^-(s - sigma) for sigma < s.
    """
    ladder = [float(n) for n in ladder]
    if len(ladder) < 3:
        raise ValueError("need at least 3 ladder points for a slope fit")
    from .spectral import apply_js

    rows = {"n": ladder, "tail_l2": []}
    for sig in sigmas:
        rows[f"tail_j{sig:g}"] = []
    for n in ladder:
        diff = bona_smith(u0, n) - u0
        rows["tail_l2"].append(l2_norm(diff))
        for sig in sigmas:
            rows[f"tail_j{sig:g}"].append(l2_norm(apply_js(diff, sig)))
    report = NormReport("bona-smith", params={"s": s, "sigmas": list(sigmas)})
    report.columns = rows
    logn = np.log(np.asarray(ladder))
    slope_l2 = -float(np.polyfit(logn, np.log(rows["tail_l2"]), 1)[0])
    report.fits = {"tail_slope_l2": slope_l2}
    report.add_verdict("l2_tail_rate", slope_l2 >= s - 0.1,
                       "log-log slope of ||u0_n - u0||_L2 >= s - 0.1",
                       value=slope_l2)
    for sig in sigmas:
        slope = -float(np.polyfit(logn, np.log(rows[f"tail_j{sig:g}"]), 1)[0])
        report.fits[f"tail_slope_j{sig:g}"] = slope
        report.add_verdict(f"j{sig:g}_tail_rate", slope >= (s - sig) - 0.1,
                           "log-log slope of ||J^sigma (u0_n - u0)||_L2 >= "
                           "s - sigma - 0.1", value=slope)
    return report


def convergence_experiment(u0: SpectralField, s: float, alpha: float, T: float,
                           ladder, dt: float, weight_margin: int = 0) -> NormReport:
    """Convergence of regularized runs toward the finest-regularization run.

    The reference solution uses the finest ladder member with dt/2.  Reports
    sup_t ||u_n - u_ref||_{H^s} (must decrease, 5% slack) and the sup over the
    ladder of the weighted dyadic functional built by ``construct_weights``
    from the regularized data (must stay uniformly bounded).
    """
    ladder = sorted(float(n) for n in ladder)
    if len(ladder) < 2:
        raise ValueError("ladder needs at least 2 cutoff scales")
    grid = u0.grid
    steps = max(8, int(round(T / dt)))
    dt = T / steps
    stride = max(1, steps // 16)
    cfg = SolveConfig(sobolev_orders=(s,), snapshot_every=stride)
    cfg_ref = SolveConfig(sobolev_orders=(s,), snapshot_every=2 * stride)

    data = {n: bona_smith(u0, n) for n in ladder}
    i_max = num_blocks(grid) - 1 + weight_margin
    seqs = []
    for n in ladder:
        a = [(2.0**i) ** (2 * s) * l2_norm(dyadic_project(data[n], i)) ** 2
             for i in range(i_max + 1)]
        seqs.append(a)
    weights = construct_weights(seqs, s, i_max)

    ref = solve_ivp(data[ladder[-1]], alpha, T, dt / 2.0, cfg_ref)
    runs = {n: solve_ivp(data[n], alpha, T, dt, cfg) for n in ladder}

    sup_err, weighted_sup = [], []
    for n in ladder:
        traj = runs[n]
        if len(traj.snap_times) != len(ref.snap_times) or not np.allclose(
                traj.snap_times, ref.snap_times):
            raise RuntimeError("snapshot times of ladder and reference differ")
        errs = [sobolev_norm(a - b, s) for a, b in zip(traj.snapshots, ref.snapshots)]
        sup_err.append(float(np.max(errs)))
        weighted_sup.append(max(weighted_block_energy(f, weights)
                                for f in traj.snapshots))

    report = NormReport("convergence", params={
        "s": s, "alpha": alpha, "T": T, "dt": dt, "ladder": ladder,
    })
    report.columns = {"n": ladder, "sup_err": sup_err, "weighted_sup": weighted_sup}
    monotone = all(b <= a * 1.05 for a, b in zip(sup_err, sup_err[1:]))
    report.add_verdict("error_curve_monotone", monotone,
                       "sup_t ||u_n - u_ref||_{H^s} decreasing in n within 5%")
    w0 = max(weighted_block_energy(data[n], weights) for n in ladder)
    bounded = max(weighted_sup) <= 10.0 * max(w0, 1e-300)
    report.add_verdict("weighted_functional_bounded", bounded,
                       "sup_{n,t} weighted dyadic energy <= 10 x its data sup",
                       value=max(weighted_sup) / max(w0, 1e-300))
    report.fits = {"weighted_initial_sup": w0,
                   "weight_breakpoints": list(weights.breakpoints)}
    return report


# ---------------------------------------------------------------------------
# uniqueness (Gronwall with the explicit constant)


def uniqueness_experiment(phi1: SpectralField, phi2: SpectralField, alpha: float,
                          T: float, dt: float, s: float = 2.0) -> NormReport:
    """Check ||u1(t) - u2(t)||_L2^2 <= ||phi1 - phi2||_L2^2 * e^K at snapshots.

    K = max of the two time-integrated gradient sup norms; the constant comes
    from the Gronwall argument and is not fitted.
    """
    cfg = SolveConfig(sobolev_orders=(s,), snapshot_every=1)
    traj1 = solve_ivp(phi1, alpha, T, dt, cfg)
    traj2 = solve_ivp(phi2, alpha, T, dt, cfg)
    k1 = float(np.trapezoid(traj1.grad_linf, traj1.times))
    k2 = float(np.trapezoid(traj2.grad_linf, traj2.times))
    K = max(k1, k2)
    d0_sq = l2_norm(phi1 - phi2) ** 2
    bound = d0_sq * np.exp(K)
    diff_sq = np.array([l2_norm(a - b) ** 2 for a, b in
                        zip(traj1.snapshots, traj2.snapshots)])
    report = NormReport("uniqueness", params={"alpha": alpha, "T": T, "dt": dt,
                                              "K": K, "initial_gap_sq": d0_sq})
    report.columns = {"t": traj1.snap_times, "diff_sq": diff_sq,
                      "bound": np.full_like(diff_sq, bound)}
    tol = 1e-9 * max(bound, l2_norm(phi1) ** 2)
    report.add_verdict("gronwall_bound", bool(np.all(diff_sq <= bound + tol)),
                       "||u1 - u2||_L2^2 <= ||phi1 - phi2||_L2^2 exp(K) at "
                       "every snapshot, explicit K",
                       value=float(np.max(diff_sq) / bound) if bound > 0 else 0.0)
    return report


# ---------------------------------------------------------------------------
# weighted dyadic energy along a run (exponential bound with fitted constant)


def weighted_energy_report(traj: Trajectory, s: float) -> NormReport:
    """Weighted dyadic energy growth against exp(C * int ||grad u||_inf).

    Uses plain w = lam^s weights.  The rate constant is fitted on the first
    half of the run and the bound is verified on the second half with a
    factor-2 slack, which checks that one constant serves across windows.
    """
    grid = traj.grid
    i_max = num_blocks(grid) - 1
    lam = 2.0 ** np.arange(i_max + 1)
    w_sq = lam ** (2 * s)

    energies = []
    for f in traj.snapshots:
        energies.append(sum(w_sq[i] * l2_norm(dyadic_project(f, i)) ** 2
                            for i in range(i_max + 1)))
    energies = np.asarray(energies)
    snap_idx = np.searchsorted(traj.times, traj.snap_times)
    grad_int = np.concatenate([[0.0], np.cumsum(
        0.5 * (traj.grad_linf[1:] + traj.grad_linf[:-1]) * np.diff(traj.times))])
    g = grad_int[snap_idx]

    half = len(energies) // 2
    rates = []
    for i in range(1, half + 1):
        dg = g[i] - g[0]
        if dg > 1e-12:
            rates.append(np.log(energies[i] / energies[0]) / dg)
    c_hat = max(rates) if rates else 0.0
    c_hat = max(c_hat, 0.0)
    ok = True
    for i in range(half, len(energies)):
        bound = energies[0] * np.exp(c_hat * (g[i] - g[0])) * 2.0
        ok = ok and energies[i] <= bound + 1e-12
    report = NormReport("lp-weighted", params={"s": s, "alpha": traj.alpha})
    report.columns = {"t": traj.snap_times, "weighted_energy": energies,
                      "grad_l1_integral": g}
    report.fits = {"C_hat": float(c_hat)}
    report.add_verdict(
        "exp_growth_bound", ok,
        "weighted energy <= 2 exp(C_hat int ||grad u||) x initial, C_hat "
        "fitted on the first half of the run")
    return report
