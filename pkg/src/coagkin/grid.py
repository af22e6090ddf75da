"""Positive-size grids, trapezoid quadrature, interpolation and convolution.

The half-line is truncated to [xmin, xmax].  Below the first node functions
are continued by their value at x_1 when a quadrature needs them there
(convolutions and loss integrals); above xmax they are zero.
"""
from __future__ import annotations

import csv
import functools
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _core
from .errors import ConfigError, GridMismatchError

__all__ = [
    "Grid",
    "GridFunction",
    "PairTable",
    "make_grid",
    "integrate",
    "moment",
    "convolve",
    "tail_primitive",
    "tail_matrix",
    "prefix_matrix",
    "xdx_matrix",
    "interp",
    "read_csv",
    "write_csv",
    "stencil",
    "pair_table",
]

KINDS = ("uniform", "log")


@dataclass(frozen=True)
class Grid:
    """Nodes x_1 < ... < x_N on [xmin, xmax], uniform in x or in log x."""

    kind: str
    xmin: float
    xmax: float
    n: int

    def __post_init__(self):
        kind = {"log-uniform": "log", "loguniform": "log", "log_uniform": "log"}.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ConfigError(f"grid kind must be 'uniform' or 'log', got {self.kind!r}")
        if not (np.isfinite(self.xmin) and np.isfinite(self.xmax)) or not 0 < self.xmin < self.xmax:
            raise ConfigError("grid bounds must satisfy 0 < xmin < xmax")
        if int(self.n) != self.n or self.n < 16:
            raise ConfigError("grid needs N >= 16 nodes")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "xmin", float(self.xmin))
        object.__setattr__(self, "xmax", float(self.xmax))

    @property
    def is_log(self):
        return self.kind == "log"

    @cached_property
    def coord(self):
        """Coordinate in which the nodes are equispaced (log x or x)."""
        if self.is_log:
            return np.linspace(np.log(self.xmin), np.log(self.xmax), self.n)
        return np.linspace(self.xmin, self.xmax, self.n)

    @property
    def spacing(self):
        """Step in the equispaced coordinate."""
        return (self.coord[-1] - self.coord[0]) / (self.n - 1)

    @cached_property
    def nodes(self):
        x = np.exp(self.coord) if self.is_log else self.coord.copy()
        x[0], x[-1] = self.xmin, self.xmax
        x.setflags(write=False)
        return x

    @cached_property
    def weights(self):
        """Trapezoid weights in the equispaced coordinate.

        On log grids the interior weights are dlog * x_i (trapezoid in log x,
        very accurate for integrands that decay at both ends); the weight at
        xmax is then set so that constants integrate exactly.
        """
        x = self.nodes
        if not self.is_log:
            dx = np.diff(x)
            w = np.zeros(self.n)
            w[:-1] += 0.5 * dx
            w[1:] += 0.5 * dx
        else:
            w = self.spacing * x.copy()
            w[0] *= 0.5
            # the last weight absorbs the deficit on constants
            w[-1] = (self.xmax - self.xmin) - w[:-1].sum()
        w.setflags(write=False)
        return w

    @cached_property
    def loss_weights(self):
        """Trapezoid weights plus the strip [0, x_1] carried by the first node."""
        w = self.weights.copy()
        w[0] += self.nodes[0]
        w.setflags(write=False)
        return w

    def shift_steps(self, t, rtol=1e-9):
        """Number m with t = m * spacing on a log grid, or None if t is off-lattice."""
        if not self.is_log or t < 0:
            return None
        m = t / self.spacing
        r = round(m)
        if abs(m - r) <= rtol * max(1.0, m):
            return int(r)
        return None

    def zeros(self):
        return GridFunction(self, np.zeros(self.n))

    def sample(self, fn):
        return GridFunction(self, np.asarray(fn(self.nodes), float))


class GridFunction:
    """Values of a function at the nodes of a grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        v = np.array(values, dtype=float)
        if v.shape != (grid.n,):
            raise GridMismatchError(f"expected {grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite entries")
        self.grid = grid
        self.values = v

    @property
    def x(self):
        return self.grid.nodes

    def _other(self, other):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __len__(self):
        return self.grid.n

    def __repr__(self):
        return f"GridFunction({self.grid!r}, max={np.max(np.abs(self.values)):.3g})"

    def copy(self):
        return GridFunction(self.grid, self.values.copy())


def _same_grid(*fs):
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise GridMismatchError("grid functions live on different grids")
    return g


def make_grid(kind="log", xmin=1e-4, xmax=60.0, n=512):
    return Grid(kind, xmin, xmax, n)


def integrate(f):
    """Trapezoid approximation of the integral over [xmin, xmax]."""
    return float(np.dot(f.grid.weights, f.values))


def moment(f, p):
    """Moment of order p over (0, xmax): trapezoid on the grid plus the cell [0, x_1]."""
    if p <= -0.9:
        warnings.warn(f"moment of order {p} may diverge at small sizes", RuntimeWarning, stacklevel=2)
    x = f.grid.nodes
    val = float(np.dot(f.grid.weights * x ** p, f.values))
    if p > -1.0:
        # moments are taken over (0, xmax): add the cell [0, x_1] with f frozen
        # at f(x_1), integrating x^p exactly (it is singular for p < 0)
        val += float(f.values[0]) * x[0] ** (p + 1.0) / (p + 1.0)
    return val


def _cell_weights(grid):
    """Per-cell weights (n-1, 4) and node indices integrating the cubic interpolant.

    Cells are integrated in the equispaced coordinate, so on log grids the
    integrand is h(x) x.
    """
    n = grid.n
    cells = np.arange(n - 1)
    base = np.clip(cells - 1, 0, n - 4)
    idx = base[:, None] + np.arange(4)[None, :]
    w = np.tile(np.array([-1.0, 13.0, 13.0, -1.0]) / 24.0, (n - 1, 1))
    w[0] = np.array([9.0, 19.0, -5.0, 1.0]) / 24.0
    w[-1] = np.array([1.0, -5.0, 19.0, 9.0]) / 24.0
    jac = grid.nodes if grid.is_log else np.ones(n)
    return idx, w * grid.spacing * jac[idx]


@functools.lru_cache(maxsize=16)
def tail_matrix(grid):
    """Matrix P with (P h)_i = integral of h from x_i to xmax (fourth order)."""
    n = grid.n
    idx, w = _cell_weights(grid)
    cell = np.zeros((n - 1, n))
    np.add.at(cell, (np.repeat(np.arange(n - 1), 4), idx.ravel()), w.ravel())
    P = np.zeros((n, n))
    P[:-1] = np.cumsum(cell[::-1], axis=0)[::-1]
    P.setflags(write=False)
    return P


@functools.lru_cache(maxsize=16)
def prefix_matrix(grid):
    """Lower-triangular W with (W F)_i ~ integral of F from x_1 to x_i (fourth order).

    The last cell of every row uses a one-sided stencil so row i only touches
    nodes 1..i; rows with fewer than four nodes fall back to the trapezoid.
    """
    n = grid.n
    idx, w = _cell_weights(grid)
    cell = np.zeros((n - 1, n))
    np.add.at(cell, (np.repeat(np.arange(n - 1), 4), idx.ravel()), w.ravel())
    S = np.cumsum(cell, axis=0)
    jac = grid.nodes if grid.is_log else np.ones(n)
    last = np.array([1.0, -5.0, 19.0, 9.0]) / 24.0
    W = np.zeros((n, n))
    x = grid.nodes
    for i in range(1, n):
        if i < 3:
            d = np.diff(x[: i + 1])
            W[i, :i] += 0.5 * d
            W[i, 1 : i + 1] += 0.5 * d
            continue
        cols = np.arange(i - 3, i + 1)
        W[i] = S[i - 2]
        W[i, cols] += last * grid.spacing * jac[cols]
    W.setflags(write=False)
    return W


@functools.lru_cache(maxsize=16)
def xdx_matrix(grid):
    """Discrete x d/dx: centred in the equispaced coordinate, upwind at the ends.

    Interior rows use the five-point centred stencil, the second and
    second-to-last rows the three-point one.  On log grids the denominators
    are 8 sinh(2d) - sinh(4d) and sinh(2d) instead of 12 d and 2 d, which
    makes sum_i w_i x_i (2 h + x h')_i vanish exactly away from the ends
    and keeps fourth-order accuracy.  The last row treats the value beyond
    xmax as zero.
    """
    n = grid.n
    D = np.zeros((n, n))
    d = grid.spacing
    x = grid.nodes
    i = np.arange(2, n - 2)
    e = np.array([1, n - 2])
    if grid.is_log:
        s5 = 8.0 * np.sinh(2.0 * d) - np.sinh(4.0 * d)
        s3 = np.sinh(2.0 * d)
        scale5 = np.full(i.size, 1.0 / s5)
        scale3 = np.full(2, 1.0 / s3)
        s1 = np.array([1.0, 1.0]) / d
    else:
        scale5 = x[i] / (12.0 * d)
        scale3 = x[e] / (2.0 * d)
        s1 = x[[0, n - 1]] / d
    for off, c in ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)):
        D[i, i + off] = c * scale5
    D[e, e + 1] = scale3
    D[e, e - 1] = -scale3
    D[0, 0], D[0, 1] = -s1[0], s1[0]
    D[-1, -1] = -s1[1]
    D.setflags(write=False)
    return D


def tail_primitive(h):
    """H(x_i) = integral of h from x_i to xmax; zero tail beyond xmax.

    Cells are integrated with the cubic interpolant (fourth order), so H(x_1)
    agrees with :func:`integrate` up to the trapezoid error.
    """
    idx, w = _cell_weights(h.grid)
    cell = np.einsum("ck,ck->c", w, h.values[idx])
    H = np.zeros_like(h.values)
    H[:-1] = np.cumsum(cell[::-1])[::-1]
    return GridFunction(h.grid, H)


def interp(f, x):
    """Piecewise-linear interpolation in (log x, value) or (x, value); zero outside the grid."""
    xq = np.asarray(x, float)
    if np.any(xq <= 0):
        raise ValueError("interpolation points must be positive")
    g = f.grid
    if g.is_log:
        out = np.interp(np.log(xq), g.coord, f.values, left=0.0, right=0.0)
    else:
        out = np.interp(xq, g.nodes, f.values, left=0.0, right=0.0)
    return float(out) if out.ndim == 0 else out


def stencil(grid, points):
    """Four-point Lagrange stencils in the equispaced coordinate.

    Returns (idx, coef), both of shape (len(points), 4).  Points below x_1
    take the value at x_1; points above xmax get zero coefficients.
    """
    q = np.asarray(points, float).ravel()
    n = grid.n
    with np.errstate(divide="ignore"):
        u = np.log(np.maximum(q, 1e-300)) if grid.is_log else q
    s = (u - grid.coord[0]) / grid.spacing
    below = q <= grid.nodes[0]
    above = q > grid.nodes[-1] * (1 + 1e-13)
    j = np.clip(np.floor(s), 0, n - 2).astype(np.int64)
    base = np.clip(j - 1, 0, n - 4)
    t = s - base
    idx = base[:, None] + np.arange(4)[None, :]
    coef = np.empty((q.size, 4))
    for a in range(4):
        c = np.ones_like(t)
        for b in range(4):
            if b != a:
                c *= (t - b) / (a - b)
        coef[:, a] = c
    coef[below] = (1.0, 0.0, 0.0, 0.0)
    idx[below] = np.arange(4)
    coef[above] = 0.0
    return idx.astype(np.intp), coef


def eval_stencil(values, idx, coef):
    return np.einsum("pk,pk->p", coef, values[idx])


@dataclass(frozen=True)
class PairTable:
    """Quadrature pairs for integrals of the form int_0^{x/2} F(x - y, y) dy.

    For output node ``rows[p]`` the pair p sits at y = ``y[p]`` with
    trapezoid weight ``w[p]``; the stencils interpolate node values at y and
    at x - y.  The points in y are 0, the nodes below x/2 and x/2 itself.
    """

    n: int
    rows: np.ndarray
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    pidx: np.ndarray
    pcoef: np.ndarray
    qidx: np.ndarray
    qcoef: np.ndarray


@functools.lru_cache(maxsize=16)
def pair_table(grid):
    x = grid.nodes
    rows, ys, ws = [], [], []
    for i in range(grid.n):
        half = 0.5 * x[i]
        pts = np.concatenate(([0.0], x[x < half], [half]))
        d = np.diff(pts)
        w = np.zeros(pts.size)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
        rows.append(np.full(pts.size, i, dtype=np.intp))
        ys.append(pts)
        ws.append(w)
    rows = np.concatenate(rows)
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    xr = x[rows]
    pidx, pcoef = stencil(grid, y)
    qidx, qcoef = stencil(grid, xr - y)
    for arr in (rows, xr, y, w, pidx, pcoef, qidx, qcoef):
        arr.setflags(write=False)
    return PairTable(grid.n, rows, xr, y, w, pidx, pcoef, qidx, qcoef)


def convolve(f, g):
    """(f * g)(x_i) = int_0^{x_i} f(x_i - y) g(y) dy on every node."""
    grid = _same_grid(f, g)
    tab = pair_table(grid)
    out = _core.pair_apply(tab.rows, tab.w, tab.pidx, tab.pcoef, tab.qidx, tab.qcoef,
                           np.ascontiguousarray(f.values), np.ascontiguousarray(g.values), grid.n)
    return GridFunction(grid, out)


def write_csv(f, path):
    """Write a grid function as ``x,value`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for xi, vi in zip(f.grid.nodes, f.values):
            w.writerow([f"{xi:.17g}", f"{vi:.17g}"])


def read_csv(path, grid):
    """Read an ``x,value`` file written for ``grid``."""
    xs, vs = [], []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if [h.strip() for h in header[:2]] != ["x", "value"]:
            raise ConfigError(f"{path}: expected header 'x,value'")
        for row in r:
            xs.append(float(row[0]))
            vs.append(float(row[1]))
    if len(xs) != grid.n or not np.allclose(xs, grid.nodes, rtol=1e-12, atol=0):
        raise GridMismatchError(f"{path}: nodes do not match the grid")
    return GridFunction(grid, vs)
