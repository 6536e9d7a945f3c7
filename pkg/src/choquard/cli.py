"""Command-line entry point.

Every command writes into ``<out>/<command>-<UTC stamp>-<config hash>/``
together with ``config.txt``, the fully resolved configuration.

CSV columns
  groundstate  profile.csv      r, omega
               convergence.csv  iteration, energy, tangent_residual, step
  solve        convergence.csv  iteration, energy, tangent_residual, step
  testfn theta table.csv        R, energy, threshold, margin, energy_single, norm_split_error, D_excess, equivariance_error
  testfn sigma table.csv        R, eps, eps_hat, eps_ratio, equivariance_error
  testfn escape table.csv       R, energy, c_inf, gap
  testfn ratio table.csv        R, ratio, bound, margin, energy, threshold, energy_margin
  verify       table.csv        check, status, worst, detail
  sweep        sweep.csv        index, R, z, energy, level, margin, converged, equivariant, positive, sign_changing, tangent_residual, iterations, solution_id
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import asymptotics as asy
from . import config as cf
from . import energy as en
from . import io
from . import lemma_lab as ll
from . import selfcheck as sc
from . import solver as so
from . import testfn as tf
from .groundstate import GroundState, GroundStateSolver, fit_decay
from .potential import check_hypotheses

log = logging.getLogger("choquard")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


# run directory and ground state plumbing

def run_dir(command: str, cfg: cf.Config, out: str | None) -> Path:
    root = Path(out or os.environ.get("CHOQUARD_OUT") or "runs")
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    path = root / f"{command}-{stamp}-{cfg.hash()}"
    k = 1
    while path.exists():
        path = root / f"{command}-{stamp}-{cfg.hash()}.{k}"
        k += 1
    path.mkdir(parents=True)
    (path / "config.txt").write_text(cf.emit(cfg))
    return path


def ground_state(cfg: cf.Config, grid=None) -> GroundState:
    """Load ``run.ground_state`` when given, otherwise solve the limit problem."""
    pr = cfg["problem"]
    grid = grid or cfg.grid()
    path = cfg["run"]["ground_state"]
    if path:
        g, w = io.read_chqf(path)
        if not g.same_as(grid):
            raise cf.ConfigError(f"ground state {path} lives on a different grid")
        pb = en.Problem(g, pr["alpha"], pr["p"])
        br = en.J_V(pb, w)
        return GroundState(g, pr["alpha"], pr["p"], w, en.energy_on_nehari(pb, w), br.norm_sq, br.D, np.nan)
    solver = GroundStateSolver(ndim=pr["n"], alpha=pr["alpha"], p=pr["p"], half_width=pr["l"],
                               n_points=pr["m"])
    return solver.fit(None).result_


def _trace_rows(trace):
    return [(it, e, r, s) for it, e, r, s in trace]


def _table(path, checks, header=("check", "status", "worst", "detail")):
    rows = []
    for c in checks:
        if isinstance(c, asy.TrendCheck):
            worst = float(np.min(c.values)) if c.kind == "positive" else (
                float(np.max(np.diff(c.values))) if c.kind == "decreasing" else float(np.min(np.diff(c.values))))
            rows.append((c.name, "pass" if c.passed else "fail", worst, c.note))
        elif isinstance(c, ll.RatioResult):
            rows.append(("razon", c.status, c.worst_slack, f"c0={c.c0:.6g} t0={c.t0:.6g}"))
        else:
            rows.append((c.name, "pass" if c.passed else "fail", c.worst_slack if hasattr(c, "worst_slack")
                         else c.worst, f"violations={getattr(c, 'violations', 0)}"))
    io.write_csv(path, header, rows)
    return rows


# commands

def cmd_groundstate(cfg, args, out):
    pr, run = cfg["problem"], cfg["run"]
    solver = GroundStateSolver(ndim=pr["n"], alpha=pr["alpha"], p=pr["p"], half_width=pr["l"],
                               n_points=pr["m"], tol=run["tol"] or 1e-8, max_iter=run["max_iter"] or 10_000)
    gs = solver.fit(None if run["seed"] == 0 else run["seed"]).result_
    io.write_chqf(out / "omega.chqf", gs.grid, gs.omega)
    r, w = gs.profile()
    io.write_csv(out / "profile.csv", ("r", "omega"), zip(r, w))
    io.write_csv(out / "convergence.csv", ("iteration", "energy", "tangent_residual", "step"), _trace_rows(gs.trace))
    report = {"c_inf": gs.energy, "norm_sq": gs.norm_sq, "D": gs.D, "iterations": gs.iterations}
    report.update(gs.certificates())
    try:
        fit = fit_decay(gs, tuple(run["window"]))
        report.update({"decay_model": fit.model, "decay_window_lo": fit.window[0], "decay_window_hi": fit.window[1],
                       "decay_slope": fit.slope, "decay_misfit": fit.misfit, "decay_samples": fit.n_samples})
    except ValueError as exc:
        report["decay_error"] = str(exc)
    io.write_report(out / "report.txt", report)
    print(f"c_inf = {io.fmt(gs.energy)}  iterations = {gs.iterations}")
    return EXIT_OK


def _initial(cfg, pb, gs, z):
    init = cfg["run"]["initializer"]
    if init.endswith(".chqf"):
        g, u0 = io.read_chqf(init)
        if not g.same_as(pb.grid):
            raise cf.ConfigError(f"initializer {init} lives on a different grid")
        return u0
    return so.initial_field(pb, gs, init, z, cfg["run"]["r"], cfg["run"]["lam"])


def _solve_one(cfg, pb, gs, z, R=None):
    c = cfg.copy()
    if R is not None:
        c.set("run", "r", R)
    u0 = _initial(c, pb, gs, z)
    return so.minimize(pb, u0, gs, tol=c["run"]["tol"] or 1e-7, max_iter=c["run"]["max_iter"] or 20_000,
                       stabilize_z=z if c["run"]["stabilize"] else None)


def cmd_solve(cfg, args, out):
    pb = cf.build_problem(cfg)
    gs = ground_state(cfg, pb.grid)
    z = cfg.z()
    rep = _solve_one(cfg, pb, gs, z)
    cert = so.certify(rep, gs, cfg["run"]["tol"] or 1e-7)
    io.write_chqf(out / "solution.chqf", pb.grid, rep.u)
    io.write_csv(out / "convergence.csv", ("iteration", "energy", "tangent_residual", "step"), _trace_rows(rep.trace))
    report = rep.as_dict()
    report.update({f"certificate_{k}": v for k, v in cert.__dict__.items()})
    if pb.group is not None:
        try:
            hyp = check_hypotheses(pb.potential, pb.group, grid=pb.grid)
            report.update({f"hypothesis_{k}": v for k, v in hyp.as_dict().items()})
        except ValueError as exc:
            report["hypothesis_error"] = str(exc)
    io.write_report(out / "report.txt", report)
    print(f"J_V = {io.fmt(rep.energy)}  margin = {io.fmt(rep.margin)}  converged = {rep.converged}")
    return EXIT_OK if rep.converged else EXIT_FAIL


def _radii(cfg):
    return cfg["run"]["r_values"] or (cfg["run"]["r"],)


def cmd_testfn(cfg, args, out):
    pb = cf.build_problem(cfg)
    gs = ground_state(cfg, pb.grid)
    z = cfg.z()
    rows, field = [], None
    kind = args.kind
    for R in _radii(cfg):
        if kind == "theta":
            lam = cfg["run"]["lam"]
            if lam is None:
                lam = pb.potential.rate if pb.potential.variant == "exp_well" else 1.0
            con = tf.theta(pb, gs, z, R, lam)
            d = con.diagnostics
            rows.append((R, d["energy"], d["threshold"], d["margin"], d["energy_single"], d["norm_split_error"],
                         d["D_excess"], d["equivariance_error"]))
            field = con.field
        elif kind == "sigma":
            con = tf.sigma(pb, gs, z, R)
            d = con.diagnostics
            rows.append((R, d["eps"], d["eps_hat"], d["eps_ratio"], d["equivariance_error"]))
            field = con.field
        elif kind == "escape":
            con = tf.escape_sequence(pb, gs, R * z)
            e = con.diagnostics["energy"]
            rows.append((R, e, gs.energy, e - gs.energy))
            field = con.field
        else:
            d = tf.chi_sigma_ratio(pb, gs, z, R)
            rows.append((R, d["ratio"], d["bound"], d["margin"], d["energy"], d["threshold"], d["energy_margin"]))
            field = d["field"]
    header = {
        "theta": ("R", "energy", "threshold", "margin", "energy_single", "norm_split_error", "D_excess",
                  "equivariance_error"),
        "sigma": ("R", "eps", "eps_hat", "eps_ratio", "equivariance_error"),
        "escape": ("R", "energy", "c_inf", "gap"),
        "ratio": ("R", "ratio", "bound", "margin", "energy", "threshold", "energy_margin"),
    }[kind]
    io.write_csv(out / "table.csv", header, rows)
    io.write_chqf(out / f"{kind}.chqf", pb.grid, field)
    for row in rows:
        print("  ".join(f"{h}={io.fmt(v)}" for h, v in zip(header, row)))
    return EXIT_OK


def cmd_verify(cfg, args, out):
    run = cfg["run"]
    if args.suite == "lemmas":
        checks = ll.run_all(ll.TrialSpec(trials=run["trials"], seed=run["seed"]))
    elif args.suite == "energy":
        checks = sc.energy_suite(seed=run["seed"], trials=run["trials"])
    else:
        gs = ground_state(cfg)
        window = run["shift_window"]
        wide = None
        if window[1] > gs.grid.half_width / 2:
            pr = cfg["problem"]
            log.info("shift window needs L >= %g; solving a second ground state", 2 * window[1])
            wide = GroundStateSolver(ndim=pr["n"], alpha=pr["alpha"], p=pr["p"], half_width=2 * window[1],
                                     n_points=pr["m"]).fit(None).result_
        checks = asy.limit_suite(gs, wide, window)
        pb = cf.build_problem(cfg, gs.grid)
        if pb.group is not None and pb.group.order > 1:
            radii = run["r_values"] or (4.0, 6.0, 8.0)
            checks += asy.sigma_trends(pb, gs, cfg.z(), radii)
    _table(out / "table.csv", checks)
    ok = True
    for c in checks:
        print(c.row())
        ok &= bool(c.passed) or getattr(c, "status", "") == "inapplicable"
    return EXIT_OK if ok else EXIT_FAIL


def _distance(u, v, signed):
    scale = max(np.linalg.norm(u), np.linalg.norm(v))
    d = np.linalg.norm(u - v)
    if signed:
        d = min(d, np.linalg.norm(u + v))
    return d / scale


def cmd_sweep(cfg, args, out):
    pb = cf.build_problem(cfg)
    gs = ground_state(cfg, pb.grid)
    run = cfg["run"]
    if run["sweep"] == "r":
        jobs = [(R, cfg.z()) for R in _radii(cfg)]
    else:
        jobs = [(run["r"], z) for z in cfg.z_list()]
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        reports = list(pool.map(lambda j: _solve_one(cfg, pb, gs, j[1], j[0]), jobs))
    signed = pb.group is not None and pb.group.is_epimorphism
    reps, ids = [], []
    for rep in reports:
        hit = next((k for k, u in enumerate(reps) if _distance(rep.u, u, signed) < run["dedup"]), None)
        if hit is None:
            reps.append(rep.u)
            hit = len(reps) - 1
            io.write_chqf(out / f"solution_{hit}.chqf", pb.grid, rep.u)
        ids.append(hit)
    rows = []
    for i, ((R, z), rep, k) in enumerate(zip(jobs, reports, ids)):
        cert = so.certify(rep, gs, run["tol"] or 1e-7)
        rows.append((i, R, " ".join(io.fmt(float(x)) for x in z), rep.energy, rep.level, rep.margin, rep.converged,
                     cert.equivariant, cert.positive, cert.sign_changing, rep.tangent_residual, rep.iterations, k))
    io.write_csv(out / "sweep.csv", ("index", "R", "z", "energy", "level", "margin", "converged", "equivariant",
                                     "positive", "sign_changing", "tangent_residual", "iterations", "solution_id"),
                 rows)
    print(f"{len(jobs)} runs, {len(reps)} distinct solutions")
    return EXIT_OK if all(r.converged for r in reports) else EXIT_FAIL


COMMANDS = {"groundstate": cmd_groundstate, "solve": cmd_solve, "testfn": cmd_testfn, "verify": cmd_verify,
            "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sectioned key = value file")
    common.add_argument("--out", help="output root (default $CHOQUARD_OUT or ./runs)")
    common.add_argument("--threads", type=int, default=1, help="FFT workers and sweep threads")
    common.add_argument("--seed", type=int, help="overrides run.seed")
    common.add_argument("--alpha", type=float)
    common.add_argument("--p", type=float)
    common.add_argument("--n", type=int, help="space dimension N")
    common.add_argument("--l", type=float, help="box half-width L")
    common.add_argument("--m", type=int, help="points per axis M")
    common.add_argument("--r", type=float, help="translation radius R")
    common.add_argument("--z", help="orbit representative, e.g. 1,0,0")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="choquard", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("groundstate", parents=[common], help="solve the limit problem, write omega and decay fit")
    sub.add_parser("solve", parents=[common], help="equivariant minimisation with certificates")
    t = sub.add_parser("testfn", parents=[common], help="test-function constructions and bound tables")
    t.add_argument("kind", choices=("theta", "sigma", "escape", "ratio"))
    v = sub.add_parser("verify", parents=[common], help="property suites")
    v.add_argument("--suite", choices=("lemmas", "asymptotics", "energy"), required=True)
    sub.add_parser("sweep", parents=[common], help="solve over R or z values and deduplicate")
    return ap


def resolve(args) -> cf.Config:
    cfg = cf.load(args.config) if args.config else cf.Config()
    for flag, (section, key) in {"seed": ("run", "seed"), "alpha": ("problem", "alpha"), "p": ("problem", "p"),
                                 "n": ("problem", "n"), "l": ("problem", "l"), "m": ("problem", "m"),
                                 "r": ("run", "r")}.items():
        val = getattr(args, flag)
        if val is not None:
            cfg.set(section, key, val)
    if args.z is not None:
        cfg.set("run", "z", args.z)
    cf.validate(cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        if args.command != "verify" or args.suite == "asymptotics":
            cf.build_problem(cfg)
    except cf.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = run_dir(args.command + (f"-{args.kind}" if args.command == "testfn" else ""), cfg, args.out)
    t0 = time.perf_counter()
    try:
        with sfft.set_workers(max(1, args.threads)):
            code = COMMANDS[args.command](cfg, args, out)
    except cf.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"artifacts in {out} ({time.perf_counter() - t0:.1f} s)")
    return code


if __name__ == "__main__":
    sys.exit(main())
