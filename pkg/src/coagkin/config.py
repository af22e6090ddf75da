"""INI experiment configuration with sections kernel, grid, evolution, norms, experiment."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .evolution import SCHEMES, EvolutionConfig
from .grid import make_grid
from .kernels import KernelSpec, family_from_name
from .norms import Hm1Exp, L1k, L2Exp, Wm1Inf, parse_norm

__all__ = ["ExperimentConfig", "load_config", "parse_config", "INITIAL_DATA", "DEFAULT_CONFIG"]

# named initial data, all with unit first moment
INITIAL_DATA = {
    "gamma2": lambda x: 4.0 * x * np.exp(-2.0 * x),
    "exp": lambda x: np.exp(-x),
    "m0-two": lambda x: 4.0 * np.exp(-2.0 * x),
}

DEFAULT_CONFIG = """\
[kernel]
family = ratio_sym
epsilon = 0.1
alpha = 1.0
psi = two_over_s

[grid]
kind = log
xmin = 1e-4
xmax = 60
n = 512

[evolution]
dt = 1e-3
t_final = 12
scheme = lawson4
record_stride = 1
exact_shift = true
initial = gamma2
reference = profile

[norms]
k = 0, 2, 3
mu = 0.5
l1k = true
l2exp = false
hm1exp = false
wm1inf = false
distance = L1k(3)
gap_norm = L1k(3)

[experiment]
seed = 0
trials = 10
horizon = 10
eps_list = 0.05, 0.1, 0.2
xi_list = 0.5, 1, 2, 5, 10
"""


def _floats(text):
    try:
        return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


@dataclass
class ExperimentConfig:
    kernel: KernelSpec
    grid: object
    evolution: EvolutionConfig
    initial: str
    reference: str
    tracked_norms: tuple
    distance: object
    gap_norm: object
    mu: float = 0.5
    seed: int = 0
    trials: int = 10
    horizon: float = 10.0
    eps_list: tuple = (0.05, 0.1, 0.2)
    xi_list: tuple = (0.5, 1.0, 2.0, 5.0, 10.0)
    fit_window: tuple | None = None
    preset: str | None = None
    out: str | None = None
    thresholds: dict = field(default_factory=dict)
    jobs: int = 1

    def initial_datum(self):
        return self.grid.sample(INITIAL_DATA[self.initial])


def _section(cp, name):
    if not cp.has_section(name):
        raise ConfigError(f"missing [{name}] section")
    return cp[name]


def _get(sec, key, conv, default=None):
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{sec.name}] needs '{key}'")
        return default
    try:
        return conv(sec[key])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{sec.name}] {key} = {sec[key]!r}: {exc}") from exc


def _bool(sec, key, default):
    try:
        return sec.getboolean(key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key} must be a boolean") from exc


def parse_config(text, source="<string>"):
    """Build an ExperimentConfig from INI text; the [grid] section is mandatory."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return _from_parser(cp)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def _from_parser(cp):
    g = _section(cp, "grid")
    grid = make_grid(_get(g, "kind", str, "log"), _get(g, "xmin", float, 1e-4),
                     _get(g, "xmax", float, 60.0), _get(g, "n", int, 512))

    k = cp["kernel"] if cp.has_section("kernel") else {}
    if k:
        psi = k.get("psi", "two_over_s")
        family = family_from_name(k.get("family", "zero"), float(k.get("alpha", "1.0")), psi,
                                  k.get("table_path"))
        kernel = KernelSpec(_get(k, "epsilon", float, 0.0), family)
    else:
        kernel = KernelSpec(0.0, family_from_name("zero"))

    n = cp["norms"] if cp.has_section("norms") else None
    tracked = []
    mu = 0.5
    distance = gap_norm = L1k(3.0)
    if n is not None:
        mu = _get(n, "mu", float, 0.5)
        ks = _floats(n.get("k", "0, 2"))
        if _bool(n, "l1k", True):
            tracked += [L1k(v) for v in ks]
        if _bool(n, "l2exp", False):
            tracked.append(L2Exp(mu))
        if _bool(n, "hm1exp", False):
            tracked.append(Hm1Exp(mu))
        if _bool(n, "wm1inf", False):
            tracked.append(Wm1Inf())
        distance = parse_norm(n.get("distance", "L1k(3)"))
        gap_norm = parse_norm(n.get("gap_norm", "L1k(3)"))
    tracked = tuple(tracked) or (L1k(0.0), L1k(2.0))

    e = cp["evolution"] if cp.has_section("evolution") else {}
    scheme = e.get("scheme", "lawson4") if e else "lawson4"
    if scheme not in SCHEMES:
        raise ConfigError(f"[evolution] scheme must be one of {SCHEMES}")
    initial = e.get("initial", "gamma2") if e else "gamma2"
    if initial not in INITIAL_DATA:
        raise ConfigError(f"[evolution] initial must be one of {sorted(INITIAL_DATA)}")
    reference = e.get("reference", "profile") if e else "profile"
    if reference not in ("profile", "exp", "none"):
        raise ConfigError("[evolution] reference must be profile, exp or none")
    evo = EvolutionConfig(
        dt=_get(e, "dt", float, 1e-3) if e else 1e-3,
        t_final=_get(e, "t_final", float, 12.0) if e else 12.0,
        scheme=scheme,
        record_stride=_get(e, "record_stride", int, 1) if e else 1,
        tracked_norms=tracked,
        dist_norm=distance,
        exact_shift=_bool(e, "exact_shift", True) if e else True,
    )

    x = cp["experiment"] if cp.has_section("experiment") else {}
    thresholds = {}
    for key in (x.keys() if x else ()):
        if key.startswith("threshold."):
            thresholds[key.split(".", 1)[1]] = _get(x, key, float)
    window = _floats(x["fit_window"]) if x and "fit_window" in x else None
    if window is not None and len(window) != 2:
        raise ConfigError("[experiment] fit_window needs two numbers")
    cfg = ExperimentConfig(
        kernel=kernel, grid=grid, evolution=evo, initial=initial, reference=reference,
        tracked_norms=tracked, distance=distance, gap_norm=gap_norm, mu=mu,
        seed=_get(x, "seed", int, 0) if x else 0,
        trials=_get(x, "trials", int, 10) if x else 10,
        horizon=_get(x, "horizon", float, 10.0) if x else 10.0,
        eps_list=_floats(x["eps_list"]) if x and "eps_list" in x else (0.05, 0.1, 0.2),
        xi_list=_floats(x["xi_list"]) if x and "xi_list" in x else (0.5, 1.0, 2.0, 5.0, 10.0),
        fit_window=window,
        preset=x.get("preset") if x else None,
        out=x.get("out") if x else None,
        thresholds=thresholds,
    )
    return cfg
