"""Command-line entry point: ``fbo2d <experiment> --config <path>``.

Every experiment reads a flat JSON config, writes a CSV report plus a JSON
verdict sidecar (and plot-ready two-column CSVs where meaningful) into the
output directory, and exits 0 if all verdicts pass, 2 on a verdict failure,
and 1 on any input error.  Identical configs (fixed seed) produce
byte-identical CSV bodies; only the JSON sidecar carries a timestamp.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as xp
from .evolution import (
    SolveConfig,
    apriori_experiment,
    convergence_experiment,
    regularization_tail_report,
    solve_ivp,
    track_energy,
    uniqueness_experiment,
    weighted_energy_report,
)
from .fields import gaussian_bump, random_field, synthetic_hs_field
from .illposedness import GrowthDatum, admissible_eps_bound, growth_slope_fit
from .propagator import BlowUpError
from .quadrature import QuadratureError
from .reports import NormReport, _fmt
from .snapshot import save_snapshot
from .spectral import Grid, embed


class ConfigError(Exception):
    pass


_REQUIRED = object()


def _get(cfg: dict, key: str, kind, default=_REQUIRED, check=None, why: str = ""):
    if key not in cfg:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key '{key}'")
        return default
    value = cfg[key]
    try:
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError
            value = int(value)
        elif kind is float:
            value = float(value)
        elif kind is bool:
            if not isinstance(value, bool):
                raise ValueError
        elif kind is list:
            if not isinstance(value, list):
                raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"key '{key}' must be of type {kind.__name__}")
    if check is not None and not check(value):
        raise ConfigError(f"key '{key}' out of range: {why}")
    return value


def _grid(cfg: dict, nx=64, ny=64, lx=None, ly=None) -> Grid:
    two_pi = 2.0 * np.pi
    pow2 = lambda n: n >= 4 and (n & (n - 1)) == 0
    nx = _get(cfg, "nx", int, nx, pow2, "must be a power of two >= 4")
    ny = _get(cfg, "ny", int, ny, pow2, "must be a power of two >= 4")
    lx = _get(cfg, "lx", float, lx if lx is not None else two_pi,
              lambda v: v > 0, "must be positive")
    ly = _get(cfg, "ly", float, ly if ly is not None else two_pi,
              lambda v: v > 0, "must be positive")
    return Grid(nx, ny, lx, ly)


def _alpha(cfg: dict, default=_REQUIRED) -> float:
    return _get(cfg, "alpha", float, default,
                lambda a: 0.0 < a <= 1.0, "alpha must lie in (0, 1]")


def _seed(cfg: dict) -> int:
    return _get(cfg, "seed", int, 0)


def _positive(cfg, key, default=_REQUIRED):
    return _get(cfg, key, float, default, lambda v: v > 0, "must be positive")


def _ensemble(cfg: dict, default=50) -> int:
    return _get(cfg, "ensemble", int, default, lambda n: n >= 1,
                "must be at least 1")


# ---------------------------------------------------------------------------
# experiment handlers: cfg -> list[(name, NormReport)]


def _run_simulate(cfg, out, threads):
    grid = _grid(cfg, 64, 64, 16.0, 16.0)
    alpha = _alpha(cfg, 1.0)
    T = _positive(cfg, "T", 1.0)
    dt = _positive(cfg, "dt", 0.01)
    s = _get(cfg, "s", float, 2.0)
    amplitude = _get(cfg, "amplitude", float, 1.0)
    width = _positive(cfg, "width", 1.0)
    nonlinear = _get(cfg, "nonlinear", bool, True)
    write_snaps = _get(cfg, "snapshots", bool, False)

    u0 = gaussian_bump(grid, amplitude=amplitude, width=width)
    traj = solve_ivp(u0, alpha, T, dt, SolveConfig(sobolev_orders=(s,),
                                                   nonlinear=nonlinear))
    report = NormReport("simulate", params={
        "alpha": alpha, "T": T, "dt": traj.dt, "s": s,
        "amplitude": amplitude, "width": width, "nonlinear": nonlinear,
    })
    report.columns = {
        "t": traj.times, "l2": traj.l2, f"h{s:g}": traj.hs[s],
        "linf": traj.linf, "w1inf": traj.w1inf, "mean": traj.mean,
    }
    report.warnings = list(traj.warnings)
    mean_drift = float(np.max(np.abs(traj.mean - traj.mean[0])))
    mean_scale = max(abs(traj.mean[0]), traj.l2[0], 1e-300)
    report.add_verdict("mean_conserved", mean_drift <= 1e-10 * mean_scale,
                       "mean flat to 1e-10 relative", value=mean_drift / mean_scale)
    l2_drift = float(np.max(np.abs(traj.l2 - traj.l2[0])) / traj.l2[0])
    report.add_verdict("l2_conserved", l2_drift <= 1e-6,
                       "L2 norm flat to 1e-6 relative on dealiased runs",
                       value=l2_drift)
    if write_snaps:
        for t, f in zip(traj.snap_times, traj.snapshots):
            save_snapshot(out / f"snapshot_t{t:012.6f}.fbo2", f, t, alpha)
    return [("simulate", report)]


def _run_decay(cfg, out, threads):
    grid = _grid(cfg, xp.DECAY_GRID.nx, xp.DECAY_GRID.ny,
                 xp.DECAY_GRID.lx, xp.DECAY_GRID.ly)
    alphas = _get(cfg, "alphas", list, [0.25, 0.5, 1.0])
    for a in alphas:
        if not (0.0 < float(a) <= 1.0):
            raise ConfigError("key 'alphas' out of range: each alpha must lie in (0, 1]")
    rep = xp.decay_experiment(
        alphas=[float(a) for a in alphas],
        k0=_positive(cfg, "k0", 12.0),
        width=_positive(cfg, "width", 0.6),
        width_y=_positive(cfg, "width_y", 1.0),
        grid=grid,
        n_times=_get(cfg, "n_times", int, 8, lambda n: n >= 2, "need >= 2 times"),
    )
    return [("decay", rep)]


def _run_strichartz(cfg, out, threads):
    rep = xp.strichartz_experiment(
        alpha=_alpha(cfg), q=_positive(cfg, "q", 4.0), p=_positive(cfg, "p", 4.0),
        T=_positive(cfg, "T", 1.0), draws=_ensemble(cfg), seed=_seed(cfg),
        threads=threads)
    return [("strichartz", rep)]


def _run_cor33(cfg, out, threads):
    rep = xp.cor33_experiment(
        alpha=_alpha(cfg), delta=_positive(cfg, "delta", 0.1),
        T=_positive(cfg, "T", 1.0), draws=_ensemble(cfg), seed=_seed(cfg),
        threads=threads)
    return [("cor33", rep)]


def _run_refined(cfg, out, threads):
    rep = xp.refined_strichartz_experiment(
        alpha=_alpha(cfg), delta=_positive(cfg, "delta", 0.1),
        T=_positive(cfg, "T", 1.0), draws=_ensemble(cfg), seed=_seed(cfg),
        threads=threads)
    return [("refined", rep)]


def _run_illposed(cfg, out, threads):
    alpha = _alpha(cfg)
    eps = _get(cfg, "eps", float, _REQUIRED)
    bound = admissible_eps_bound(alpha)
    if not (0.0 < eps < bound):
        raise ConfigError(
            f"key 'eps' out of range: eps = {eps} must satisfy "
            f"0 < eps < min(alpha, 8/15 - 7 alpha/15) = {bound:.6g}"
        )
    ladder = _get(cfg, "n_ladder", list, [1e3, 10**3.5, 1e4, 10**4.5, 1e5],
                  lambda l: len(l) >= 5, "frequency ladder needs >= 5 points")
    rep = growth_slope_fit(
        alpha, eps, _get(cfg, "s", float, 1.6), _positive(cfg, "t", 0.75),
        ladder=[float(n) for n in ladder],
        gate=_positive(cfg, "gate", 0.01))
    return [("illposed", rep)]


def _run_energy(cfg, out, threads):
    grid = _grid(cfg, 128, 128, 16.0, 16.0)
    alpha = _alpha(cfg, 0.5)
    s = _get(cfg, "s", float, 2.0)
    T = _positive(cfg, "T", 1.0)
    dt = _positive(cfg, "dt", 0.02)
    amplitude = _get(cfg, "amplitude", float, 2.0)
    width = _positive(cfg, "width", 1.0)
    refine = _get(cfg, "refine", bool, True)

    u0 = gaussian_bump(grid, amplitude=amplitude, width=width)
    traj = solve_ivp(u0, alpha, T, dt, SolveConfig(sobolev_orders=(s,)))
    rep = track_energy(traj, s)
    rep.params.update({"T": T, "dt": dt, "amplitude": amplitude})
    if refine:
        traj2 = solve_ivp(embed(u0, grid.refine(2)), alpha, T, dt,
                          SolveConfig(sobolev_orders=(s,)))
        rep2 = track_energy(traj2, s)
        c1, c2 = rep.fits["C_empirical"], rep2.fits["C_empirical"]
        drift = abs(c2 - c1) / max(abs(c1), 1e-300)
        rep.fits["C_refined"] = c2
        rep.add_verdict("C_refinement_stable", drift <= 0.25,
                        "empirical C moves <= 25% under nx -> 2nx", value=drift)
    return [("energy", rep)]


def _run_apriori(cfg, out, threads):
    grid = _grid(cfg, 64, 64, 16.0, 16.0)
    a_values = _get(cfg, "a_values", list, [0.02, 0.1, 0.5, 2.0],
                    lambda l: len(l) >= 1 and all(float(a) > 0 for a in l),
                    "sweep constants must be positive")
    u0 = gaussian_bump(grid, amplitude=_get(cfg, "amplitude", float, 4.0),
                       width=_positive(cfg, "width", 1.0))
    rep = apriori_experiment(u0, _get(cfg, "s", float, 2.0), _alpha(cfg, 0.5),
                             [float(a) for a in a_values])
    return [("apriori", rep)]


def _run_uniqueness(cfg, out, threads):
    grid = _grid(cfg, 64, 64, 16.0, 16.0)
    alpha = _alpha(cfg, 0.5)
    T = _positive(cfg, "T", 0.5)
    dt = _positive(cfg, "dt", 0.01)
    size = _get(cfg, "perturbation", float, 1e-4)
    phi1 = gaussian_bump(grid, amplitude=_get(cfg, "amplitude", float, 2.0),
                         width=_positive(cfg, "width", 1.2))
    pert = random_field(grid, _seed(cfg), profile=lambda r: np.exp(-r**2 / 4.0),
                        amplitude=1.0)
    rep = uniqueness_experiment(phi1, phi1 + size * pert, alpha, T, dt)
    return [("uniqueness", rep)]


def _run_bona_smith(cfg, out, threads):
    grid = _grid(cfg, 128, 128)
    s = _get(cfg, "s", float, 2.0)
    ladder = _get(cfg, "n_ladder", list, [6, 12, 24, 48],
                  lambda l: len(l) >= 3, "ladder needs >= 3 cutoffs")
    sigmas = _get(cfg, "sigmas", list, [0.5, 1.0])
    u0 = synthetic_hs_field(grid, s, _seed(cfg))
    rep = regularization_tail_report(u0, s, [float(n) for n in ladder],
                                     sigmas=[float(x) for x in sigmas])
    return [("bona-smith", rep)]


def _run_convergence(cfg, out, threads):
    grid = _grid(cfg, 64, 64)
    s = _get(cfg, "s", float, 2.0)
    ladder = _get(cfg, "n_ladder", list, [4, 8, 16, 32],
                  lambda l: len(l) >= 2, "ladder needs >= 2 cutoffs")
    u0 = synthetic_hs_field(grid, s, _seed(cfg),
                            amplitude=_get(cfg, "amplitude", float, 0.8))
    rep = convergence_experiment(u0, s, _alpha(cfg, 0.5),
                                 _positive(cfg, "T", 0.25),
                                 [float(n) for n in ladder],
                                 _positive(cfg, "dt", 1.0 / 256.0))
    return [("convergence", rep)]


def _run_lp_check(cfg, out, threads):
    grid = _grid(cfg, 64, 64)
    reports = [("lp-check", xp.lp_residual_report(grid, _seed(cfg)))]
    if _get(cfg, "trajectory", bool, True):
        alpha = _alpha(cfg, 0.5)
        s = _get(cfg, "s", float, 2.0)
        u0 = gaussian_bump(Grid(64, 64, 16.0, 16.0),
                           amplitude=_get(cfg, "amplitude", float, 1.5))
        traj = solve_ivp(u0, alpha, _positive(cfg, "T", 0.5),
                         _positive(cfg, "dt", 0.01),
                         SolveConfig(sobolev_orders=(s,)))
        reports.append(("lp-weighted", weighted_energy_report(traj, s)))
    return reports


def _run_kato_ponce(cfg, out, threads):
    s_values = _get(cfg, "s_values", list, [1.0, 1.7, 2.5],
                    lambda l: all(float(s) >= 1.0 for s in l),
                    "commutator orders must satisfy s >= 1")
    rep = xp.kato_ponce_experiment([float(s) for s in s_values],
                                   draws=_ensemble(cfg, 51), seed=_seed(cfg),
                                   threads=threads)
    return [("kato-ponce", rep)]


def _run_leibniz(cfg, out, threads):
    sigmas = _get(cfg, "sigmas", list, [0.2, 0.5, 0.8],
                  lambda l: all(0.0 < float(x) < 1.0 for x in l),
                  "orders must lie in (0, 1)")
    rep = xp.leibniz_experiment([float(x) for x in sigmas],
                                draws=_ensemble(cfg, 51), seed=_seed(cfg),
                                threads=threads)
    return [("leibniz", rep)]


def _run_oscillatory(cfg, out, threads):
    rep = xp.oscillatory_experiment(
        alpha=_alpha(cfg, 1.0),
        lam_min=_get(cfg, "lam_min", float, -50.0),
        lam_max=_get(cfg, "lam_max", float, 50.0),
        count=_get(cfg, "count", int, 41, lambda n: n >= 2, "need >= 2 points"),
        rel_tol=_positive(cfg, "rel_tol", 0.05),
        threads=threads)
    return [("oscillatory", rep)]


HANDLERS = {
    "simulate": _run_simulate,
    "decay": _run_decay,
    "strichartz": _run_strichartz,
    "cor33": _run_cor33,
    "refined": _run_refined,
    "illposed": _run_illposed,
    "energy": _run_energy,
    "apriori": _run_apriori,
    "uniqueness": _run_uniqueness,
    "bona-smith": _run_bona_smith,
    "convergence": _run_convergence,
    "lp-check": _run_lp_check,
    "kato-ponce": _run_kato_ponce,
    "leibniz": _run_leibniz,
    "oscillatory": _run_oscillatory,
}


# ---------------------------------------------------------------------------
# plot-data emission


def _write_xy(path, header_x, header_y, xs, ys):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([header_x, header_y])
        for x, y in zip(xs, ys):
            writer.writerow([_fmt(float(x)), _fmt(float(y))])


def emit_plotdata(report: NormReport, kind: str, out: Path):
    """Write two-column plot-ready CSVs for the report, when meaningful."""
    if kind == "illposed":
        logn = np.log(np.asarray(report.columns["n"], dtype=float))
        logf = np.log(np.asarray(report.columns["iterate_norm"], dtype=float))
        _write_xy(out / "plot_growth.csv", "logN", "logF3Norm", logn, logf)
        with open(out / "plot_growth_fit.json", "w") as fh:
            json.dump({"slope": report.fits["slope"],
                       "intercept": report.fits["intercept"],
                       "r_squared": report.fits["r_squared"]}, fh, indent=2)
            fh.write("\n")
    elif kind == "decay":
        _write_xy(out / "plot_decay.csv", "t", "ratio",
                  report.columns["t"], report.columns["ratio"])
    elif kind == "convergence":
        _write_xy(out / "plot_convergence.csv", "n", "supErr",
                  report.columns["n"], report.columns["sup_err"])
    elif kind == "bona-smith":
        _write_xy(out / "plot_tail.csv", "n", "tailL2",
                  report.columns["n"], report.columns["tail_l2"])
    elif kind == "oscillatory":
        _write_xy(out / "plot_oscillatory.csv", "lam", "absJ",
                  report.columns["lam"], report.columns["abs_J"])


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fbo2d",
        description="Verification experiments for the fractional 2-D "
                    "Benjamin-Ono equation.")
    parser.add_argument("experiment", help="one of: " + ", ".join(HANDLERS))
    parser.add_argument("--config", required=False, help="path to a JSON config")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for ensembles and ladders")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0

    if args.experiment not in HANDLERS:
        print(f"error: unknown experiment kind '{args.experiment}' "
              f"(expected one of: {', '.join(HANDLERS)})", file=sys.stderr)
        return 1
    if args.config is None:
        print("error: missing required option --config", file=sys.stderr)
        return 1
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: config is not well-formed JSON: {exc}", file=sys.stderr)
        return 1
    if not isinstance(cfg, dict) or not cfg:
        print("error: config must be a non-empty JSON object", file=sys.stderr)
        return 1

    out = Path(args.out or cfg.get("out", "out"))
    threads = args.threads if args.threads else int(cfg.get("threads", 1))
    if threads < 1:
        print("error: key 'threads' out of range: must be >= 1", file=sys.stderr)
        return 1

    try:
        out.mkdir(parents=True, exist_ok=True)
        reports = HANDLERS[args.experiment](cfg, out, threads)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, BlowUpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    all_passed = True
    for name, report in reports:
        report.write_csv(out / f"{name}.csv")
        report.write_json(out / f"{name}.json")
        emit_plotdata(report, name, out)
        for v in report.verdicts:
            status = "PASS" if v.passed else "FAIL"
            extra = "" if v.value is None else f" (value {v.value:.6g})"
            print(f"[{status}] {name}: {v.name}{extra}")
        all_passed = all_passed and report.passed
    return 0 if all_passed else 2
