"""Experiment presets and the verify-all runner.

Every preset returns a PresetResult made of checks (measured value against a
threshold).  Three criteria without a preset of their own ride along with the
closest one: the L2 growth envelope with ``constant-convergence``, the
splitting semigroup with ``gap-l1k`` and the multi-start probe with
``profile-bounds``.
"""
from __future__ import annotations

import csv
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coagulation import self_similar_residual
from .errors import ConfigError
from .evolution import EvolutionConfig, evolve, m0_logistic, rescaled_physical_distance, to_physical
from .fitting import fit_decay
from .fourier import corpus, fourier_bound_verify, fourier_modulus, l2_growth_envelope
from .grid import make_grid, write_csv
from .kernels import KernelSpec, One, RatioSym, Zero
from .linearized import (SplittingConfig, assemble_L0, assemble_Leps, assemble_splitting,
                         gap_trials, measure_gap_constants, op_norm_diff_L1k, scan_cutoff)
from .norms import Hm1Exp, L1k, L2Exp, norm
from .profiles import check_profile_bounds, closed_form_constant, profile_stability_scan, solve_profile
from .svgplot import emit_plot

__all__ = ["PRESETS", "Check", "PresetResult", "run_preset", "verify_all"]


@dataclass
class Check:
    name: str
    criterion: int
    measured: float
    op: str
    threshold: object

    @property
    def passed(self):
        m = self.measured
        if not math.isfinite(m):
            return False
        if self.op == "<=":
            return m <= self.threshold
        if self.op == ">=":
            return m >= self.threshold
        if self.op == ">":
            return m > self.threshold
        lo, hi = self.threshold
        return lo <= m <= hi

    @property
    def threshold_text(self):
        if self.op == "in":
            return f"[{self.threshold[0]:g}, {self.threshold[1]:g}]"
        return f"{self.op} {self.threshold:g}"


@dataclass
class PresetResult:
    name: str
    checks: list
    notes: list = field(default_factory=list)
    files: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def lines(self):
        out = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            out.append(f"[{tag}] {self.name}:{c.name} (criterion {c.criterion}) "
                       f"measured {c.measured:.6g} {c.threshold_text}")
        return out

    def report(self):
        return "\n".join(self.lines() + [f"  {n}" for n in self.notes]) + "\n"


def _ensure(out):
    if out:
        os.makedirs(out, exist_ok=True)
    return out


def _path(out, name, res):
    if not out:
        return None
    p = os.path.join(out, name)
    res.files.append(p)
    return p


def _write_rows(path, header, rows):
    if path is None:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])


def _override(cfg, name, check):
    v = cfg.thresholds.get(name) if cfg is not None else None
    if v is not None and check.op in ("<=", ">=", ">"):
        check.threshold = float(v)
    return check


def _K(eps, family):
    return KernelSpec(float(eps), family)


K2 = KernelSpec(0.0, Zero())


def _gamma2(grid):
    return grid.sample(lambda x: 4.0 * x * np.exp(-2.0 * x))


def _refined(grid):
    return make_grid(grid.kind, grid.xmin, grid.xmax, 2 * grid.n)


# -- presets ---------------------------------------------------------------


def p_stationarity(cfg, out):
    res = PresetResult("stationarity", [])
    grid = cfg.grid
    r = []
    for g in (grid, _refined(grid)):
        G0 = g.sample(lambda x: np.exp(-x))
        rr = self_similar_residual(K2, G0)
        r.append(norm(rr, L1k(2.0)))
        if g is grid and out:
            write_csv(rr, _path(out, "stationarity_residual.csv", res))
    res.checks.append(Check("residual", 1, r[0], "<=", 5e-3))
    res.checks.append(Check("refinement_ratio", 1, r[0] / r[1], ">=", 1.8))
    res.notes.append(f"residual N={grid.n}: {r[0]:.3e}, N={2 * grid.n}: {r[1]:.3e}")
    return res


def p_constant_convergence(cfg, out):
    res = PresetResult("constant-convergence", [])
    grid = cfg.grid
    G0 = grid.sample(lambda x: np.exp(-x))
    f0 = _gamma2(grid)
    evo = EvolutionConfig(dt=cfg.evolution.dt, t_final=12.0, scheme=cfg.evolution.scheme,
                          tracked_norms=(L1k(0.0), L1k(2.0), L2Exp(0.0)), reference=G0,
                          dist_norm=L1k(3.0), exact_shift=cfg.evolution.exact_shift)
    tr = evolve(f0, K2, evo)
    d = tr.column("dist_ref")
    fit = fit_decay(tr.times, d, (4.0, 10.0))
    res.checks.append(_override(cfg, "constant-convergence", Check("rate", 2, fit.rate, ">=", 0.45)))
    res.checks.append(Check("r_squared", 2, fit.r_squared, ">=", 0.98))
    # the L2 growth envelope along the same run
    t = tr.times
    sel = t <= 2.0 + 1e-12
    l2sq = tr.column(L2Exp(0.0).label)[sel] ** 2
    env = np.array([l2_growth_envelope(f0, s) for s in t[sel]])
    res.checks.append(Check("l2_envelope_ratio", 16, float(np.max(l2sq / env)), "<=", 1.0))
    if out:
        tr.to_csv(_path(out, "constant_convergence_trajectory.csv", res))
        emit_plot([("||f - G0||_{L1_3}", t, d)], _path(out, "constant_convergence.svg", res),
                  title="constant kernel", ylabel="distance", logy=True)
    res.notes.append(f"fit on [4, 10]: rate {fit.rate:.4f}, r^2 {fit.r_squared:.5f}")
    return res


def p_m0_logistic(cfg, out):
    res = PresetResult("m0-logistic", [])
    grid = cfg.grid
    f0 = grid.sample(lambda x: 4.0 * np.exp(-2.0 * x))
    evo = EvolutionConfig(dt=cfg.evolution.dt, t_final=5.0, scheme=cfg.evolution.scheme,
                          exact_shift=cfg.evolution.exact_shift)
    tr = evolve(f0, K2, evo)
    m0 = tr.column("m0")
    exact = m0_logistic(tr.times, 2.0)
    dev = float(np.max(np.abs(m0 / exact - 1.0)))
    res.checks.append(_override(cfg, "m0-logistic", Check("max_rel_dev", 3, dev, "<=", 1e-3)))
    _write_rows(_path(out, "m0_logistic.csv", res), ["t", "m0", "logistic"],
                [(float(a), float(b), float(c)) for a, b, c in zip(tr.times, m0, exact)])
    return res


def p_profile_closedform(cfg, out):
    res = PresetResult("profile-closedform", [])
    grid = cfg.grid
    rows = []
    for e in (0.05, 0.1, 0.2):
        G = solve_profile(_K(e, One()), grid).G
        rows.append((e, norm(G - closed_form_constant(grid, e), L1k(2.0))))
    worst = max(r[1] for r in rows)
    res.checks.append(_override(cfg, "profile-closedform", Check("max_error_L1_2", 4, worst, "<=", 1e-3)))
    _write_rows(_path(out, "profile_closedform.csv", res), ["epsilon", "error_L1_2"], rows)
    return res


MULTISTART = (
    ("exp", lambda x: np.exp(-x)),
    ("gamma2", lambda x: 4.0 * x * np.exp(-2.0 * x)),
    ("gauss", lambda x: np.exp(-x * x)),
)


def p_profile_bounds(cfg, out):
    res = PresetResult("profile-bounds", [])
    grid = cfg.grid
    margins = []
    texts = []
    for e in (0.05, 0.1, 0.2):
        r = solve_profile(_K(e, RatioSym()), grid)
        rep = check_profile_bounds(r)
        lo, hi = 1.0 / (1.0 + 0.5 * e) - 1e-3, 1.0 + 1e-3
        margins.append(min(r.m0 - lo, hi - r.m0))
        texts.append(rep.to_text())
        if e == 0.1 and out:
            write_csv(r.G, _path(out, "profile_ratio_sym_0.1.csv", res))
    res.checks.append(Check("m0_bracket_margin", 5, min(margins), ">=", 0.0))
    tol = 1e-5
    Gs = [solve_profile(_K(0.1, RatioSym()), grid, tol, initial=fn).G for _, fn in MULTISTART]
    spread = max(norm(a - b, L1k(2.0)) for a, b in itertools.combinations(Gs, 2))
    res.checks.append(Check("multistart_spread", 17, spread, "<=", 2 * tol))
    if out:
        with open(_path(out, "profile_bounds.txt", res), "w") as fh:
            fh.write("\n".join(texts))
    return res


def p_stability_scan(cfg, out):
    res = PresetResult("stability-scan", [])
    grid = cfg.grid
    eps = (0.025, 0.05, 0.1, 0.2)
    series = []
    for label, fam, lo, hi in (("ratio_sym", RatioSym(), 0.8, 1.2), ("one", One(), 0.95, 1.05)):
        dist, slope = profile_stability_scan(fam, eps, 2.0, grid, jobs=cfg.jobs)
        res.checks.append(Check(f"slope_{label}", 6, slope, "in", (lo, hi)))
        _write_rows(_path(out, f"scan_{label}.csv", res), ["epsilon", "distance_L1k"],
                    list(zip(eps, dist.tolist())))
        series.append((label, eps, dist))
    if out:
        emit_plot(series, _path(out, "stability_scan.svg", res), title="||G_eps - G_0||_{L1_2}",
                  xlabel="epsilon", logy=True)
    return res


def p_kernel_direction(cfg, out):
    res = PresetResult("kernel-direction", [])
    vals = []
    for g in (cfg.grid, _refined(cfg.grid)):
        L = assemble_L0(g, "direct")
        v = g.sample(lambda x: (1.0 - x) * np.exp(-x))
        vals.append(norm(L(v), L1k(2.0)))
    res.checks.append(Check(f"N={cfg.grid.n}", 7, vals[0], "<=", 5e-3))
    res.checks.append(Check(f"N={2 * cfg.grid.n}", 7, vals[1], "<=", 2.8e-3))
    return res


def _gap_common(res, L, kind, cfg, out, stem, criterion, threshold, project=True, check="worst_rate"):
    trials = gap_trials(L, kind, max(5, cfg.trials), cfg.horizon, cfg.seed, project=project,
                        jobs=cfg.jobs)
    rates = np.array([t.fit.rate for t in trials])
    worst = int(np.argmin(rates))
    res.checks.append(_override(cfg, res.name if check == "worst_rate" else None,
                                Check(check, criterion, float(rates[worst]), ">=", threshold)))
    w = trials[worst]
    _write_rows(_path(out, f"{stem}_decay.csv", res), ["t", "norm"],
                list(zip(w.times.tolist(), w.norms.tolist())))
    if out:
        emit_plot([(f"trial {i}", t.times, t.norms) for i, t in enumerate(trials)],
                  _path(out, f"{stem}_decay.svg", res), title=stem, ylabel=kind.label, logy=True)
    res.notes.append(f"{stem} rates: " + ", ".join(f"{r:.4f}" for r in rates))
    return rates


def p_gap_hm1(cfg, out):
    res = PresetResult("gap-hm1", [])
    _gap_common(res, assemble_L0(cfg.grid, "direct"), Hm1Exp(0.5), cfg, out, "gap_hm1", 8, 0.9)
    return res


def p_gap_l1k(cfg, out):
    res = PresetResult("gap-l1k", [])
    grid = cfg.grid
    L0 = assemble_L0(grid, "direct")
    _gap_common(res, L0, L1k(3.0), cfg, out, "gap_l1k", 9, 0.45)
    R = scan_cutoff(grid, 1.1, 3.0)
    A, B = assemble_splitting(grid, SplittingConfig(R))
    Lc = assemble_L0(grid, "convolution")
    err = float(np.max(np.abs(A.matrix + B.matrix - Lc.matrix)))
    res.checks.append(Check("splitting_sum", 11, err, "<=", 1e-10))
    _gap_common(res, B, L1k(3.0), cfg, out, "semigroup_B", 11, 0.9, project=False, check="B_worst_rate")
    res.notes.append(f"cutoff R = {R:.6g}")
    return res


def p_opnorm_linear(cfg, out):
    res = PresetResult("opnorm-linear", [])
    grid = cfg.grid
    L0 = assemble_L0(grid, "direct")
    Le = {}
    for e in (0.05, 0.1, 0.2):
        K = _K(e, RatioSym())
        Le[e] = assemble_Leps(grid, solve_profile(K, grid).G, K)
    ratios = [op_norm_diff_L1k(Le[e], L0, 3.0) / e for e in sorted(Le)]
    spread = max(ratios) / min(ratios) - 1.0
    res.checks.append(_override(cfg, "opnorm-linear", Check("ratio_spread", 10, spread, "<=", 0.2)))
    consts, diffs = measure_gap_constants(L0, Le, 3.0, max(5, cfg.trials), cfg.horizon, cfg.seed)
    _write_rows(_path(out, "opnorm_linear.csv", res), ["epsilon", "opnorm_diff", "ratio"],
                [(e, diffs[e], diffs[e] / e) for e in sorted(diffs)])
    if out:
        with open(_path(out, "gap_constants", res), "w") as fh:
            fh.write(f"C_hat = {consts.C:.10g}\nM2_hat = {consts.M2:.10g}\n"
                     f"eps0_hat = {consts.eps0:.10g}\n")
    res.notes.append(f"C_hat {consts.C:.4g}, M2_hat {consts.M2:.4g}, eps0_hat {consts.eps0:.4g}")
    return res


def p_fourier_corpus(cfg, out):
    res = PresetResult("fourier-corpus", [])
    xis = (0.5, 1.0, 2.0, 5.0, 10.0)
    margins = []
    dens = corpus()
    for d in dens:
        rep = fourier_bound_verify(d, xis)
        margins += [r.margin for r in rep.rows]
        stem = d.name.split("[")[0].replace("(", "_").replace(")", "").replace(" ", "_").replace("-", "_")
        _write_rows(_path(out, f"fourier_{stem}.csv", res), ["xi", "measured", "R", "alpha", "bound", "margin"],
                    [(r.xi, r.measured, r.R, r.alpha, r.bound, r.margin) for r in rep.rows])
    res.checks.append(Check("min_margin", 15, float(min(margins)), ">", 0.0))
    err = max(abs(fourier_modulus(dens[0], 1.0) - 2.0 * math.sin(0.5)),
              abs(fourier_modulus(dens[1], 1.0) - 1.0 / math.sqrt(2.0)))
    res.checks.append(Check("closed_form_error", 15, err, "<=", 1e-4))
    return res


def p_dynamics_closeness(cfg, out):
    res = PresetResult("dynamics-closeness", [])
    grid = cfg.grid
    f0 = _gamma2(grid)
    evo = EvolutionConfig(dt=cfg.evolution.dt, t_final=1.0, scheme=cfg.evolution.scheme,
                          exact_shift=cfg.evolution.exact_shift)
    base = evolve(f0, K2, evo).final
    eps = (0.01, 0.02, 0.04)
    ratios = [norm(evolve(f0, _K(e, RatioSym()), evo).final - base, L1k(2.0)) / e for e in eps]
    spread = max(ratios) / min(ratios) - 1.0
    res.checks.append(_override(cfg, "dynamics-closeness", Check("ratio_spread", 12, spread, "<=", 0.25)))
    _write_rows(_path(out, "dynamics_closeness.csv", res), ["epsilon", "distance_over_eps"],
                list(zip(eps, ratios)))
    return res


def _converge(cfg, K, keep=False):
    grid = cfg.grid
    G = solve_profile(K, grid).G
    evo = EvolutionConfig(dt=cfg.evolution.dt, t_final=12.0, scheme=cfg.evolution.scheme,
                          reference=G, dist_norm=L1k(3.0), exact_shift=cfg.evolution.exact_shift,
                          keep_snapshots=keep)
    return G, evolve(_gamma2(grid), K, evo)


def p_perturbed_rate(cfg, out):
    res = PresetResult("perturbed-rate", [])
    series = []
    for label, K, crit in (("ratio_sym_0.1", _K(0.1, RatioSym()), (">=", 0.3)),
                           ("one_0.2", _K(0.2, One()), ("in", (0.45, 0.6)))):
        _, tr = _converge(cfg, K)
        d = tr.column("dist_ref")
        fit = fit_decay(tr.times, d, (4.0, 10.0))
        res.checks.append(Check(f"rate_{label}", 13, fit.rate, crit[0], crit[1]))
        if out:
            tr.to_csv(_path(out, f"perturbed_{label}_trajectory.csv", res))
        series.append((label, tr.times, d))
        res.notes.append(f"{label}: rate {fit.rate:.4f}, r^2 {fit.r_squared:.5f}")
    if out:
        emit_plot(series, _path(out, "perturbed_rate.svg", res), title="||f - G_eps||_{L1_3}",
                  ylabel="distance", logy=True)
    return res


def p_physical_rescale(cfg, out):
    res = PresetResult("physical-rescale", [])
    G, tr = _converge(cfg, _K(0.1, RatioSym()), keep=True)
    rel, tau, dist = [], [], []
    for t, f in zip(tr.times, tr.snapshots):
        st = to_physical(f, float(t))
        a = rescaled_physical_distance(st, G, L1k(3.0))
        b = norm(f - G, L1k(3.0))
        rel.append(abs(a - b) / b)
        tau.append(st.tau)
        dist.append(a)
    tau, dist = np.array(tau), np.array(dist)
    res.checks.append(Check("identity_rel_err", 14, float(max(rel)), "<=", 1e-6))
    sel = (tr.times >= 4.0) & (tr.times <= 10.0)
    slope = np.polyfit(np.log1p(tau[sel]), np.log(dist[sel]), 1)[0]
    res.checks.append(_override(cfg, "physical-rescale", Check("exponent", 14, float(-slope), ">=", 0.3)))
    _write_rows(_path(out, "physical_rescale.csv", res), ["tau", "distance_L1k"],
                list(zip(tau.tolist(), dist.tolist())))
    return res


PRESETS = {
    "stationarity": p_stationarity,
    "constant-convergence": p_constant_convergence,
    "m0-logistic": p_m0_logistic,
    "profile-closedform": p_profile_closedform,
    "profile-bounds": p_profile_bounds,
    "stability-scan": p_stability_scan,
    "kernel-direction": p_kernel_direction,
    "gap-hm1": p_gap_hm1,
    "gap-l1k": p_gap_l1k,
    "opnorm-linear": p_opnorm_linear,
    "fourier-corpus": p_fourier_corpus,
    "dynamics-closeness": p_dynamics_closeness,
    "perturbed-rate": p_perturbed_rate,
    "physical-rescale": p_physical_rescale,
}


def run_preset(name, cfg, out=None):
    """Run one preset; files go to ``out`` when given."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](cfg, _ensure(out))


def summary_rows(results):
    rows = []
    for r in results:
        for i, c in enumerate(r.checks):
            label = r.name if i == 0 else f"{r.name}:{c.name}"
            rows.append((label, f"{c.measured:.10g}", c.threshold_text, "true" if c.passed else "false"))
    return rows


def verify_all(cfg, out=None, jobs=1, names=None):
    """Run every preset (``jobs`` at a time); return (all passed, results)."""
    names = list(PRESETS) if names is None else list(names)
    _ensure(out)

    def one(name):
        sub = os.path.join(out, name) if out else None
        return run_preset(name, cfg, sub)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            results = list(ex.map(one, names))
    else:
        results = [one(n) for n in names]
    if out:
        _write_rows(os.path.join(out, "verify_summary.csv"), ["preset", "measured", "threshold", "pass"],
                    summary_rows(results))
    return all(r.passed for r in results), results
