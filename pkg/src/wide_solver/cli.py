"""Command line front end: ``wide-solver {solve,sweep,gradcheck,presets,compare,plotdata}``.

Exit codes: 0 success, 1 a check failed, 2 invalid configuration or input,
3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np
import scipy.fft

from . import io as wio
from .config import RunConfig, load_config
from .diagnostics import (
    apriori_checks,
    approx_energy_trace,
    check_energy_inequality,
    check_F_monotone,
    compare,
    convergence_slope,
    energy_trace,
    initial_energy,
    uniformity,
)
from .energy import GRADCHECK_PRESETS, preset, registry
from .errors import ConfigError, WideError
from .functional import (
    SpaceTimeField,
    TimeGrid,
    WeightedFunctional,
    competitor,
    el_residual,
    eval_functional,
    grad_functional,
)
from .grid import SpatialGrid
from .optimize import minimize, sweep
from .reference import leapfrog, modal_trajectory

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
GRADCHECK_TOL = 1e-6


# -- solve ----------------------------------------------------------------------


def _checks(problem, F, w, stats, window, tolerances):
    """Verdicts for one minimizer; returns ``(checks, extras)``."""
    c = problem.constraints
    grid = problem.grid
    psi = competitor(F, c)
    f_min, f_psi = eval_functional(F, w), eval_functional(F, psi)
    g0 = float(problem.energy.value(grid, c.w0.values))
    e0 = initial_energy(problem.energy, c.w0, c.w1)
    checks = {}
    slack = 1e-10 * (1 + abs(f_psi))
    checks["minimality"] = {"passed": bool(f_min <= f_psi + slack), "margin": f_psi + slack - f_min}
    if not np.any(c.w1.values):
        level = f_min / F.eps
        bound = g0 + 10 * F.eps * (1 + g0)
        checks["level_bound"] = {"passed": bool(level <= bound), "margin": bound - level, "J": level}
    et = energy_trace(w, problem.energy, problem.dissipation, F.kappa)
    checks["energy_inequality"] = check_energy_inequality(et, window, tolerances["energy_tolerance"], e0).as_dict()
    at = approx_energy_trace(w, F, stats.converged)
    checks["F_monotone"] = check_F_monotone(at, window, tolerances["monotone_tolerance"], e0).as_dict()

    extras = {
        "functional": {"value": f_min, "rescaled": f_min / F.eps, "competitor": f_psi},
        "G_w0": g0,
        "E0": e0,
        "window": window,
    }
    if F.time.steps >= 6:
        res = el_residual(F, w, window)
        extras["el_residual"] = {"window_max": res.window_max, "damping_rate_max": res.damping_rate_max}
    if window >= F.eps:
        extras["apriori"] = apriori_checks(w, F, window, e0).as_dict()
    else:
        extras["apriori"] = "not checked: window shorter than eps"
    return checks, extras, et, at


def _write_run(out, w, et, at):
    out = Path(out)
    wio.write_csv(out / "field.csv", wio.FIELD_COLUMNS, wio.field_rows(w.time.times, w.space.x, w.values))
    wio.write_csv(out / "energy.csv", wio.ENERGY_COLUMNS, et.rows())
    wio.write_csv(out / "approx_energy.csv", wio.APPROX_COLUMNS, at.rows())


def _default_window(cfg, problem, eps):
    return cfg.window if cfg.window is not None else problem.time.horizon - 5 * eps


def solve_entry(cfg, problem, F, w, stats, out, run_checks=True, window=None):
    """Write the outputs of one minimizer; returns ``(report, all_passed)``."""
    window = _default_window(cfg, problem, F.eps) if window is None else window
    checks, extras, et, at = _checks(problem, F, w, stats, window, cfg.checks)
    _write_run(out, w, et, at)
    if not run_checks:
        checks = {k: {**v, "enabled": False} for k, v in checks.items()}
    passed = all(v["passed"] for v in checks.values()) if run_checks else True
    report = {
        "preset": problem.name,
        "eps": F.eps,
        "kappa": F.kappa,
        "stats": stats.as_dict(),
        "checks": checks,
        "checks_passed": passed,
        **extras,
    }
    return report, passed


def run_solve(cfg: RunConfig, out, run_checks=True):
    problem = cfg.problem()
    eps = cfg.schedule[-1]
    F = problem.functional(eps)
    out = Path(out)
    try:
        w, stats = minimize(F, problem.constraints, None, cfg.solve_options())
    except WideError as exc:
        wio.write_json(out / "report.json", {"config": cfg.raw, "error": f"{type(exc).__name__}: {exc}"})
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if not stats.converged:
        wio.write_json(out / "report.json", {"config": cfg.raw, "stats": stats.as_dict(), "error": "not converged"})
        print(f"solver failure: status {stats.status} after {stats.iterations} iterations", file=sys.stderr)
        return EXIT_SOLVER
    report, passed = solve_entry(cfg, problem, F, w, stats, out, run_checks)
    report["config"] = cfg.raw
    wio.write_json(out / "report.json", report)
    print(f"eps={eps:g} {stats.status} in {stats.iterations} iterations, F={stats.value:.10g}; checks {'passed' if passed else 'FAILED'}")
    return EXIT_OK if passed else EXIT_CHECK


# -- sweep ----------------------------------------------------------------------


def oracle_for(cfg, problem):
    kind = cfg.oracle["kind"]
    if kind == "auto":
        kind = "exact" if problem.energy.quadratic else "leapfrog"
    c = problem.constraints
    if kind == "exact":
        spec = (problem.energy, problem.dissipation, problem.kappa)
        return "exact", modal_trajectory(spec, c.w0, c.w1, problem.time, discrete=False)
    dt = min(cfg.oracle["dt"], problem.time.dt)
    return "leapfrog", leapfrog(problem.energy, problem.dissipation, c.w0, c.w1, dt, problem.time.horizon, problem.kappa)


def _convergence_text(rows, slope):
    lines = [",".join(wio.CONVERGENCE_COLUMNS)]
    s = "" if slope is None else wio.FMT % slope
    for eps, err, it, status in rows:
        e = "" if err is None else wio.FMT % err
        i = "" if it is None else str(it)
        lines.append(f"{wio.FMT % eps},{e},{i},{status},{s}")
    return "\n".join(lines) + "\n"


def run_sweep(cfg: RunConfig, out, run_checks=True, workers=1):
    problem = cfg.problem()
    out = Path(out)
    try:
        kind, oracle = oracle_for(cfg, problem)
    except (WideError, ValueError) as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    window = cfg.window if cfg.window is not None else problem.time.horizon - 5 * max(cfg.schedule)
    entries = sweep(cfg.plan(), problem, cfg.solve_options(), workers=workers)
    rows, summary, all_passed, failed = [], [], True, False
    for i, e in enumerate(entries):
        sub = out / f"eps_{i:02d}_{e.eps:g}"
        if e.failed:
            failed = True
            status = "failed" if e.stats is None else f"failed:{e.stats.status}"
            rows.append((e.eps, None, None if e.stats is None else e.stats.iterations, status))
            wio.write_json(sub / "report.json", {"eps": e.eps, "error": e.error or status})
            summary.append({"eps": e.eps, "status": status, "error": e.error})
            continue
        F = problem.functional(e.eps)
        report, passed = solve_entry(cfg, problem, F, e.minimizer, e.stats, sub, run_checks, window)
        all_passed &= passed
        err = compare(e.minimizer, oracle, window).spacetime
        report["oracle_error"] = err
        wio.write_json(sub / "report.json", report)
        rows.append((e.eps, err, e.stats.iterations, "converged"))
        summary.append({"eps": e.eps, "status": "converged", "error": err, "iterations": e.stats.iterations,
                        "checks_passed": passed, "apriori": report["apriori"]})
    ok = [(r[0], r[1]) for r in rows if r[1] is not None]
    slope = convergence_slope(*zip(*ok)) if len(ok) >= 2 else None
    wio.atomic_write(out / "convergence.csv", _convergence_text(rows, slope))
    constants = {}
    aps = [s["apriori"] for s in summary if isinstance(s.get("apriori"), dict)]
    for key in ("potential", "kinetic", "position", "dual", "dissipation"):
        vals = [a[key] for a in aps if a.get(key) is not None]
        if vals:
            constants[key] = uniformity(vals).as_dict()
    wio.write_json(out / "report.json", {
        "config": cfg.raw, "oracle": kind, "window": window, "slope": slope,
        "entries": summary, "uniformity": constants, "checks_passed": all_passed,
    })
    slope_txt = "n/a" if slope is None else f"{slope:.4f}"
    print(f"sweep over {len(entries)} eps values, oracle={kind}, slope={slope_txt}")
    for eps, err, it, status in rows:
        print(f"  eps={eps:<8g} {status:<10} iterations={it} error={err}")
    if failed:
        return EXIT_SOLVER
    return EXIT_OK if all_passed else EXIT_CHECK


# -- gradcheck --------------------------------------------------------------------


def _rel(fd, an):
    scale = max(abs(fd), abs(an))
    return abs(fd - an) / scale if scale > 0 else 0.0


def gradcheck_table(seed=0, fields=5, directions=10, delta=1e-5):
    """Max relative finite-difference errors per preset: energy, dissipation, functional."""
    rng = np.random.default_rng(seed)
    grid = SpatialGrid(2 * np.pi, 16)
    time = TimeGrid(1.0, 12)
    table = []
    for name in GRADCHECK_PRESETS:
        p = preset(name)
        F = WeightedFunctional(0.3, p.energy, p.dissipation, p.kappa, time)
        worst = [0.0, 0.0, 0.0]
        for _ in range(fields):
            v = rng.standard_normal(grid.nodes)
            gE, gD = p.energy.gradient(grid, v), p.dissipation.gradient(grid, v)
            w = SpaceTimeField(time, grid, rng.standard_normal((time.steps + 1, grid.nodes)))
            gF = grad_functional(F, w).values
            for _ in range(directions):
                eta = rng.standard_normal(grid.nodes)
                fd = (p.energy.value(grid, v + delta * eta) - p.energy.value(grid, v - delta * eta)) / (2 * delta)
                worst[0] = max(worst[0], _rel(fd, grid.h * gE @ eta))
                fd = (p.dissipation.value(grid, v + delta * eta) - p.dissipation.value(grid, v - delta * eta)) / (2 * delta)
                worst[1] = max(worst[1], _rel(fd, grid.h * gD @ eta))
                eta2 = rng.standard_normal(w.values.shape)
                eta2[:2] = 0.0
                fp = eval_functional(F, SpaceTimeField(time, grid, w.values + delta * eta2))
                fm = eval_functional(F, SpaceTimeField(time, grid, w.values - delta * eta2))
                worst[2] = max(worst[2], _rel((fp - fm) / (2 * delta), grid.h * np.sum(gF * eta2)))
        table.append((name, *worst))
    return table


def run_gradcheck(seed, out=None):
    table = gradcheck_table(seed)
    width = max(len(r[0]) for r in table)
    print(f"{'preset':<{width}}  {'energy':>10}  {'dissipation':>11}  {'functional':>10}")
    bad = False
    for name, e, d, f in table:
        flag = "" if max(e, d, f) <= GRADCHECK_TOL else "  FAIL"
        bad |= bool(flag)
        print(f"{name:<{width}}  {e:10.2e}  {d:11.2e}  {f:10.2e}{flag}")
    if out:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["preset", "energy", "dissipation", "functional"])
        writer.writerows([n, *(wio.FMT % v for v in vals)] for n, *vals in table)
        wio.atomic_write(Path(out) / "gradcheck.csv", buf.getvalue())
    return EXIT_CHECK if bad else EXIT_OK


# -- compare / plotdata --------------------------------------------------------------


def run_compare(dir_a, dir_b, out=None, tol=None):
    a, b = Path(dir_a), Path(dir_b)
    for d in (a, b):
        if not (d / "field.csv").is_file():
            print(f"not a run directory (no field.csv): {d}", file=sys.stderr)
            return EXIT_CONFIG
    result = {}
    try:
        for name in ("field.csv", "energy.csv", "approx_energy.csv"):
            pa, pb = a / name, b / name
            if not (pa.is_file() and pb.is_file()):
                continue
            ca, da = wio.read_csv(pa)
            cb, db = wio.read_csv(pb)
            entry = {"identical": pa.read_bytes() == pb.read_bytes(), "same_shape": ca == cb and da.shape == db.shape}
            if entry["same_shape"]:
                entry["max_abs_diff"] = float(np.max(np.abs(da - db))) if da.size else 0.0
            result[name] = entry
        ta, xa, wa = wio.read_field(a / "field.csv")
        tb, xb, wb = wio.read_field(b / "field.csv")
    except ValueError as exc:
        print(f"malformed run file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if wa.shape == wb.shape and np.allclose(ta, tb) and np.allclose(xa, xb):
        dt = ta[1] - ta[0] if len(ta) > 1 else 1.0
        dx = xa[1] - xa[0] if len(xa) > 1 else 1.0
        result["spacetime_l2"] = float(np.sqrt(dt * dx * np.sum((wa - wb) ** 2)))
    else:
        result["spacetime_l2"] = None
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    if out:
        wio.atomic_write(Path(out) / "compare.json", text + "\n")
    if tol is not None and (result["spacetime_l2"] is None or result["spacetime_l2"] > tol):
        return EXIT_CHECK
    return EXIT_OK


def run_plotdata(run_dir, out=None):
    run_dir = Path(run_dir)
    out = Path(out) if out else run_dir
    try:
        t, x, w = wio.read_field(run_dir / "field.csv")
        cols, energy = wio.read_csv(run_dir / "energy.csv")
    except (OSError, ValueError) as exc:
        print(f"cannot read run directory {run_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    blocks = []
    for n, tn in enumerate(t):
        blocks.append(wio.csv_text(("t", "x", "w"), np.column_stack([np.full_like(x, tn), x, w[n]]), sep=" ").split("\n", 1)[1])
    wio.atomic_write(out / "field.dat", "# t x w\n" + "\n".join(blocks))
    total = energy[:, cols.index("total")]
    wio.atomic_write(out / "energy.dat", "# t E\n" + wio.csv_text(("t", "E"), np.column_stack([energy[:, 0], total]), sep=" ").split("\n", 1)[1])
    print(f"wrote {out / 'field.dat'} and {out / 'energy.dat'}")
    return EXIT_OK


# -- entry point --------------------------------------------------------------------


def _threads(arg):
    if arg is not None:
        return max(int(arg), 1)
    env = os.environ.get("WIDE_SOLVER_THREADS")
    try:
        return max(int(env), 1) if env else 1
    except ValueError:
        return 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (JSON)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for random initial data and gradcheck fields")
    common.add_argument("--threads", type=int, help="worker threads (default: $WIDE_SOLVER_THREADS or 1)")
    common.add_argument("--no-checks", action="store_true", help="do not gate the exit code on checks")

    parser = argparse.ArgumentParser(prog="wide-solver", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="minimize for the last eps of the config")
    sub.add_parser("sweep", parents=[common], help="eps continuation with oracle errors and slope")
    sub.add_parser("gradcheck", parents=[common], help="finite-difference check of every gradient")
    sub.add_parser("presets", parents=[common], help="list the preset registry")
    cmp = sub.add_parser("compare", parents=[common], help="diff two run directories")
    cmp.add_argument("run_a")
    cmp.add_argument("run_b")
    cmp.add_argument("--tol", type=float, help="exit 1 if the space-time L2 field distance exceeds this")
    plot = sub.add_parser("plotdata", parents=[common], help="emit plain-text plot columns of a run")
    plot.add_argument("run_dir")
    return parser


def _load(args):
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    threads = _threads(args.threads)
    try:
        with scipy.fft.set_workers(threads):
            if args.command == "presets":
                for name, eq in registry():
                    print(f"{name:<28} {eq}")
                return EXIT_OK
            if args.command == "gradcheck":
                return run_gradcheck(args.seed or 0, args.out)
            if args.command == "compare":
                return run_compare(args.run_a, args.run_b, args.out, args.tol)
            if args.command == "plotdata":
                return run_plotdata(args.run_dir, args.out)
            cfg = _load(args)
            out = args.out or cfg.raw.get("output") or f"runs/{args.command}"
            if args.command == "solve":
                return run_solve(cfg, out, not args.no_checks)
            return run_sweep(cfg, out, not args.no_checks, workers=threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
