"""Command line entry point: ``coagkin <subcommand> --config <path>``."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import __version__
from .coagulation import self_similar_residual
from .config import load_config
from .errors import CoagkinError, ConfigError
from .evolution import evolve
from .fitting import default_window, fit_decay
from .fourier import corpus, fourier_bound_verify
from .grid import write_csv
from .kernels import Zero
from .linearized import assemble_L0, assemble_Leps, gap_trials, measure_gap_constants
from .norms import norm
from .presets import PRESETS, run_preset, verify_all
from .profiles import check_profile_bounds, profile_stability_scan, solve_profile
from .svgplot import emit_plot

log = logging.getLogger("coagkin")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])


def cmd_evolve(cfg, out):
    grid = cfg.grid
    f0 = cfg.initial_datum()
    ref = None
    if cfg.reference == "profile":
        ref = solve_profile(cfg.kernel, grid).G
    elif cfg.reference == "exp":
        ref = grid.sample(lambda x: np.exp(-x))
    evo = cfg.evolution
    evo.reference = ref
    tr = evolve(f0, cfg.kernel, evo)
    tr.to_csv(os.path.join(out, "trajectory.csv"))
    write_csv(tr.final, os.path.join(out, "final.csv"))
    series = [(k.label, tr.times, tr.column(k.label)) for k in cfg.tracked_norms]
    if ref is not None:
        d = tr.column("dist_ref")
        series.append(("dist_ref", tr.times, d))
        floor = norm(self_similar_residual(cfg.kernel, ref), cfg.distance)
        win = cfg.fit_window or default_window(tr.times, d, floor)
        try:
            fit = fit_decay(tr.times, d, win)
        except ConfigError as exc:
            # a short run is still a valid run; only the rate is unavailable
            print(f"fit skipped: {exc}")
        else:
            print(f"fit on [{fit.window[0]:g}, {fit.window[1]:g}]: rate {fit.rate:.6g}, "
                  f"prefactor {fit.prefactor:.6g}, r^2 {fit.r_squared:.6g}")
    emit_plot(series, os.path.join(out, "trajectory.svg"), title="trajectory", logy=True)
    print(f"dt {tr.dt:.6g}, mass drift {tr.m1_drift:.3e}; wrote {out}")
    return EXIT_OK


def cmd_profile(cfg, out):
    r = solve_profile(cfg.kernel, cfg.grid)
    write_csv(r.G, os.path.join(out, "profile.csv"))
    rep = check_profile_bounds(r)
    with open(os.path.join(out, "bounds.txt"), "w") as fh:
        fh.write(f"iterations = {r.iterations}\nresidual = {r.residual_L1k:.6e}\n")
        fh.write(rep.to_text())
    print(rep.to_text(), end="")
    if not isinstance(cfg.kernel.family, Zero) and len(cfg.eps_list) >= 3:
        dist, slope = profile_stability_scan(cfg.kernel.family, cfg.eps_list, 2.0, cfg.grid, jobs=cfg.jobs)
        _rows(os.path.join(out, "scan.csv"), ["epsilon", "distance_L1k"], list(zip(cfg.eps_list, dist.tolist())))
        emit_plot([("||G_eps - G_0||", cfg.eps_list, dist)], os.path.join(out, "scan.svg"),
                  xlabel="epsilon", logy=True)
        print(f"stability slope {slope:.6g}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_spectrum(cfg, out):
    grid = cfg.grid
    K = cfg.kernel
    L0 = assemble_L0(grid, "direct")
    L = L0 if K.epsilon == 0 else assemble_Leps(grid, solve_profile(K, grid).G, K)
    trials = gap_trials(L, cfg.gap_norm, max(5, cfg.trials), cfg.horizon, cfg.seed, jobs=cfg.jobs,
                        window=cfg.fit_window)
    rates = [t.fit.rate for t in trials]
    w = trials[int(np.argmin(rates))]
    _rows(os.path.join(out, "decay.csv"), ["t", "norm"], list(zip(w.times.tolist(), w.norms.tolist())))
    emit_plot([(f"trial {i}", t.times, t.norms) for i, t in enumerate(trials)],
              os.path.join(out, "decay.svg"), ylabel=cfg.gap_norm.label, logy=True)
    lines = [f"norm = {cfg.gap_norm.label}", f"epsilon = {K.epsilon:g}",
             "rates = " + ", ".join(f"{r:.6g}" for r in rates), f"worst = {min(rates):.6g}"]
    if not isinstance(K.family, Zero):
        Le = {}
        for e in cfg.eps_list:
            Ke = type(K)(float(e), K.family)
            Le[float(e)] = assemble_Leps(grid, solve_profile(Ke, grid).G, Ke)
        consts, _ = measure_gap_constants(L0, Le, 3.0, max(5, cfg.trials), cfg.horizon, cfg.seed)
    else:
        consts = None
    with open(os.path.join(out, "gap_constants"), "w") as fh:
        if consts is None:
            fh.write("C_hat = nan\nM2_hat = nan\neps0_hat = nan\n")
        else:
            fh.write(f"C_hat = {consts.C:.10g}\nM2_hat = {consts.M2:.10g}\neps0_hat = {consts.eps0:.10g}\n")
            lam, ok = consts.lambda_eps(K.epsilon), K.epsilon < consts.eps0
            lines.append(f"lambda_eps = {lam:.6g} (admissible: {ok})")
    with open(os.path.join(out, "gap_report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_fourier(cfg, out):
    ok = True
    for d in corpus():
        rep = fourier_bound_verify(d, cfg.xi_list)
        ok &= rep.passed
        stem = "".join(c if c.isalnum() else "_" for c in d.name).strip("_")
        _rows(os.path.join(out, f"fourier_{stem}.csv"), ["xi", "measured", "R", "alpha", "bound", "margin"],
              [(r.xi, r.measured, r.R, r.alpha, r.bound, r.margin) for r in rep.rows])
        print(f"{d.name}: min margin {min(r.margin for r in rep.rows):.6g}")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="coagkin", description=__doc__)
    p.add_argument("--version", action="version", version=f"coagkin {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI configuration file")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers")
    common.add_argument("--seed", type=int, default=None, help="random seed override")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("evolve", "profile", "spectrum", "fourier", "verify-all"):
        sub.add_parser(name, parents=[common])
    pp = sub.add_parser("preset", parents=[common])
    pp.add_argument("name", choices=sorted(PRESETS))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg.jobs = args.jobs
        out = args.out or cfg.out or "coagkin_out"
        os.makedirs(out, exist_ok=True)
        if args.command == "preset":
            res = run_preset(args.name, cfg, out)
            print(res.report(), end="")
            return EXIT_OK if res.passed else EXIT_FAIL
        if args.command == "verify-all":
            ok, results = verify_all(cfg, out, args.jobs)
            for r in results:
                print(r.report(), end="")
            print(f"verify-all: {'PASS' if ok else 'FAIL'} ({sum(r.passed for r in results)}/{len(results)} presets)")
            return EXIT_OK if ok else EXIT_FAIL
        handler = {"evolve": cmd_evolve, "profile": cmd_profile,
                   "spectrum": cmd_spectrum, "fourier": cmd_fourier}[args.command]
        return handler(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CoagkinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
