"""Lower bounds on 1 - |Fourier transform| of nonnegative densities.

Densities live on the line as node/weight/value triples (``LineDensity``).
Densities on (0, inf) are extended by zero.  Transforms are computed with
composite Gauss-Legendre quadrature, so oscillatory integrands at |xi| = 10
are resolved independently of the log grid used elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .grid import GridFunction, integrate, stencil

__all__ = [
    "LineDensity",
    "FourierRow",
    "FourierBoundReport",
    "fourier_modulus",
    "sine_integral",
    "alpha_local",
    "alpha_global",
    "alpha_fourier",
    "delta_lower",
    "fourier_bound_verify",
    "l2_growth_envelope",
    "corpus",
]


def _gauss_panels(a, b, panels, order):
    gx, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    return x, w


@dataclass(frozen=True)
class LineDensity:
    """A density on the line given by quadrature nodes, weights and values."""

    x: np.ndarray
    w: np.ndarray
    f: np.ndarray
    name: str = ""

    def __post_init__(self):
        if not (self.x.shape == self.w.shape == self.f.shape):
            raise ConfigError("nodes, weights and values must have equal shapes")

    @classmethod
    def from_callable(cls, fn, a, b, panels=600, order=8, name=""):
        """Sample fn on [a, b]; the density is zero outside."""
        if not b > a:
            raise ConfigError("need b > a")
        x, w = _gauss_panels(float(a), float(b), int(panels), int(order))
        return cls(x, w, np.asarray(fn(x), float) * np.ones_like(x), name)

    @classmethod
    def from_grid(cls, G, panels=600, order=8, name=""):
        """Cubic resampling of a grid function on [0, xmax]; G(x_1) below the first node."""
        grid = G.grid
        x, w = _gauss_panels(0.0, grid.xmax, int(panels), int(order))
        idx, coef = stencil(grid, np.clip(x, grid.nodes[0], grid.nodes[-1]))
        v = np.einsum("pk,pk->p", coef, G.values[idx])
        return cls(x, w, v, name)

    @property
    def mass(self):
        return float(self.w @ self.f)

    @property
    def abs_moment(self):
        return float(self.w @ (np.abs(self.x) * self.f))

    @property
    def l2norm(self):
        return math.sqrt(float(self.w @ self.f ** 2))


def _as_line(f):
    if isinstance(f, LineDensity):
        return f
    if isinstance(f, GridFunction):
        return LineDensity.from_grid(f)
    raise ConfigError("expected a LineDensity or GridFunction")


def fourier_modulus(f, xi):
    """|int f(x) e^{-i xi x} dx|."""
    d = _as_line(f)
    re = float(d.w @ (d.f * np.cos(xi * d.x)))
    im = float(d.w @ (d.f * np.sin(xi * d.x)))
    return math.hypot(re, im)


def sine_integral(f, xi=1.0):
    """int f(x) sin(xi x) dx."""
    d = _as_line(f)
    return float(d.w @ (d.f * np.sin(xi * d.x)))


def alpha_local(f, R):
    """M^4 / (128 pi n^2 ||f||_2^4) with n = 1 + R / (2 pi), for f supported in [-R, R]."""
    if not R > 0:
        raise DomainError("R must be positive")
    d = _as_line(f)
    n = 1.0 + R / (2.0 * math.pi)
    return d.mass ** 4 / (128.0 * math.pi * n ** 2 * d.l2norm ** 4)


def alpha_global(f):
    """M^6 / (2^17 R^2 ||f||_2^4) with R = max(M, 2 int |x| f)."""
    d = _as_line(f)
    M = d.mass
    R = max(M, 2.0 * d.abs_moment)
    return M ** 6 / (2.0 ** 17 * R ** 2 * d.l2norm ** 4)


def alpha_fourier(M, abs_moment, l2norm, xi):
    """(alpha, R) with R = 2|xi| int|x|f + 2 pi M and alpha = xi^2 M^6 / (2^16 R^2 ||f||_2^4)."""
    R = 2.0 * abs(xi) * abs_moment + 2.0 * math.pi * M
    return xi ** 2 * M ** 6 / (2.0 ** 16 * R ** 2 * l2norm ** 4), R


def delta_lower(epsilon):
    """eps^2 / pi, a lower bound for 1 - sup_{0 < x < pi/2 - eps} sin x."""
    if not 0.0 < epsilon < 0.5 * math.pi:
        raise DomainError("epsilon must lie in (0, pi/2)")
    return epsilon ** 2 / math.pi


@dataclass(frozen=True)
class FourierRow:
    xi: float
    measured: float
    R: float
    alpha: float
    bound: float
    margin: float

    @property
    def ok(self):
        return self.margin >= 0.0


@dataclass(frozen=True)
class FourierBoundReport:
    name: str
    M: float
    abs_moment: float
    l2norm: float
    rows: tuple

    @property
    def passed(self):
        return all(r.ok for r in self.rows)

    @property
    def violations(self):
        return [r for r in self.rows if not r.ok]


def fourier_bound_verify(f, xi_list, name=None):
    """Measured |phi(xi)| against (1 - alpha(xi)) M for every xi."""
    if np.any(np.asarray(_as_line(f).f) < -1e-14):
        raise DomainError("density must be nonnegative")
    d = _as_line(f)
    M, am, l2 = d.mass, d.abs_moment, d.l2norm
    rows = []
    for xi in xi_list:
        xi = float(xi)
        alpha, R = alpha_fourier(M, am, l2, xi)
        meas = fourier_modulus(d, xi)
        bound = (1.0 - alpha) * M
        rows.append(FourierRow(xi, meas, R, alpha, bound, bound - meas))
    return FourierBoundReport(name if name is not None else d.name, M, am, l2, tuple(rows))


def l2_growth_envelope(f0, t):
    """||f0||_2^2 exp((3 + 2 C1) t) with C1 = max(1, int f0)."""
    if t < 0:
        raise DomainError("t must be >= 0")
    C1 = max(1.0, integrate(f0))
    return integrate(f0 * f0) * math.exp((3.0 + 2.0 * C1) * t)


def corpus():
    """The four reference densities on (0, inf), each with unit mass."""
    s = math.sqrt(2.0 / math.pi)
    cut = 4.0
    z = math.erf(cut / math.sqrt(2.0))
    return [
        LineDensity.from_callable(lambda x: np.ones_like(x), 0.0, 1.0, 40, 8, "uniform[0,1]"),
        LineDensity.from_callable(lambda x: np.exp(-x), 0.0, 60.0, 600, 8, "exp(-x)"),
        LineDensity.from_callable(lambda x: 4.0 * x * np.exp(-2.0 * x), 0.0, 40.0, 400, 8, "4x exp(-2x)"),
        LineDensity.from_callable(lambda x: s * np.exp(-0.5 * x ** 2) / z, 0.0, cut, 80, 8,
                                  "half-gaussian[0,4]"),
    ]
