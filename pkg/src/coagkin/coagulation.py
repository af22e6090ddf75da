"""Coagulation operators on a grid.

The gain term is evaluated in pull form: for each node x the integral over
y in [0, x] is folded onto [0, x/2] using the symmetry of the integrand and
the off-grid values at y and x - y come from cubic stencils.  The loss term
uses trapezoid weights with the strip [0, x_1] attached to the first node.

By default a rank-one correction along e^{-x} removes the discrete defect of
the first moment, so that the discrete operator conserves mass exactly.  The
correction is a linear projection applied after the bilinear form, hence it
keeps bilinearity and symmetry.
"""
from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np

from . import _core
from .errors import GridMismatchError
from .grid import (GridFunction, pair_table, prefix_matrix, stencil, tail_matrix,
                   xdx_matrix)

__all__ = [
    "CoagResult",
    "KernelTables",
    "kernel_tables",
    "apply_quadratic",
    "apply_bilinear",
    "bilinear_matrix",
    "mass_projector",
    "number_loss_identity",
    "double_integral",
    "integrated_residual",
    "self_similar_residual",
]

# y = 0 in the pair table is evaluated at this ratio below x
_TINY = 1e-300


@dataclass(frozen=True)
class CoagResult:
    gain: GridFunction
    loss: GridFunction
    total: GridFunction


@dataclass(frozen=True)
class KernelTables:
    """Kernel values cached for a (spec, grid) pair."""

    gain_w: np.ndarray   # 1/2 * trapezoid weight * K(x - y, y) per pair
    loss_mat: np.ndarray  # K(x_i, x_j) * loss weight w~_j
    node_K: np.ndarray   # K(x_i, x_j)
    psi: np.ndarray      # mass-correction direction
    psi_norm: float      # sum_i w_i x_i psi_i


@functools.lru_cache(maxsize=32)
def kernel_tables(spec, grid):
    """Build (once) the kernel tables used by every operator below."""
    tab = pair_table(grid)
    x = grid.nodes
    c = spec.constant_value
    if c is not None:
        kp = np.full(tab.rows.size, c)
        kn = np.full((grid.n, grid.n), c)
    else:
        y = np.maximum(tab.y, tab.x * _TINY)
        kp = spec(tab.x - tab.y, y)
        kn = spec(x[:, None], x[None, :])
    gain_w = 0.5 * tab.w * kp
    loss_mat = kn * grid.loss_weights[None, :]
    psi = np.exp(-x)
    psi_norm = float(np.dot(grid.weights * x, psi))
    for a in (gain_w, loss_mat, kn, psi):
        a.setflags(write=False)
    return KernelTables(gain_w, loss_mat, kn, psi, psi_norm)


def _check(*fs):
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise GridMismatchError("grid functions live on different grids")
    return g


def mass_projector(grid):
    """Matrix I - psi (w x)^T / <w x, psi> removing the discrete first moment."""
    x = grid.nodes
    psi = np.exp(-x)
    wx = grid.weights * x
    return np.eye(grid.n) - np.outer(psi, wx) / float(np.dot(wx, psi))


def _gain(spec, grid, g, h):
    tab = pair_table(grid)
    kt = kernel_tables(spec, grid)
    return _core.pair_apply(tab.rows, kt.gain_w, tab.pidx, tab.pcoef, tab.qidx, tab.qcoef,
                            np.ascontiguousarray(g), np.ascontiguousarray(h), grid.n)


def _correct(grid, kt, gain, loss):
    defect = float(np.dot(grid.weights * grid.nodes, gain - loss))
    return gain - (defect / kt.psi_norm) * kt.psi


def apply_quadratic(K, f, conservative=True):
    """Gain, loss and total of C_K(f, f)."""
    grid = f.grid
    kt = kernel_tables(K, grid)
    v = f.values
    gain = _gain(K, grid, v, v)
    loss = v * (kt.loss_mat @ v)
    if conservative:
        gain = _correct(grid, kt, gain, loss)
    return CoagResult(GridFunction(grid, gain), GridFunction(grid, loss), GridFunction(grid, gain - loss))


def apply_bilinear(K, g, h, conservative=True):
    """Symmetric bilinear form C_K(g, h); apply_bilinear(K, f, f) is C_K(f, f)."""
    grid = _check(g, h)
    kt = kernel_tables(K, grid)
    gain = _gain(K, grid, g.values, h.values)
    loss = 0.5 * (g.values * (kt.loss_mat @ h.values) + h.values * (kt.loss_mat @ g.values))
    if conservative:
        gain = _correct(grid, kt, gain, loss)
    return GridFunction(grid, gain - loss)


def bilinear_matrix(K, g, conservative=True):
    """Matrix M with M @ h == apply_bilinear(K, g, h).values."""
    grid = g.grid
    tab = pair_table(grid)
    kt = kernel_tables(K, grid)
    J = _core.pair_jacobian(tab.rows, kt.gain_w, tab.pidx, tab.pcoef, tab.qidx, tab.qcoef,
                            np.ascontiguousarray(g.values), grid.n)
    M = J - 0.5 * (g.values[:, None] * kt.loss_mat + np.diag(kt.loss_mat @ g.values))
    if conservative:
        M = mass_projector(grid) @ M
    return M


def number_loss_identity(K, f):
    """(integral of C_K(f, f), -1/2 double integral of K f f) by quadrature."""
    grid = f.grid
    lhs = float(np.dot(grid.weights, apply_quadratic(K, f).total.values))
    kn = kernel_tables(K, grid).node_K
    wf = grid.weights * f.values
    rhs = -0.5 * float(wf @ kn @ wf)
    return lhs, rhs


@functools.lru_cache(maxsize=16)
def _residual_stencils(grid):
    x = grid.nodes
    i, j = np.tril_indices(grid.n)
    a = x[i] - x[j]
    idx, coef = stencil(grid, np.maximum(a, 1e-300))
    below = a < x[0]
    return i, j, a, idx, coef, below


def double_integral(K, G):
    """D[G](x) = int_0^x int_{x-y}^inf y K(y, z) G(y) G(z) dz dy on every node.

    The inner tail T(y, a) is tabulated for y on the nodes and interpolated
    in a by cubic stencils.  Below x_1 the profile is continued as the power
    law G(x_1) (x / x_1)^{-p} with p = 2 - int K(x_1, z) G(z) dz, the local
    exponent that balances drift and loss near the origin.  The outer
    integral uses the fourth-order prefix weights plus the strip [0, x_1].
    """
    grid = G.grid
    x = grid.nodes
    kt = kernel_tables(K, grid)
    g = G.values
    c = K.constant_value
    P = tail_matrix(grid)
    if c is not None:
        T = np.broadcast_to(c * (P @ g), (grid.n, grid.n))
        edge = c * g[0] * np.ones(grid.n)
    else:
        T = (kt.node_K * g[None, :]) @ P.T
        edge = kt.node_K[:, 0] * g[0]
    # loss_mat carries the strip [0, x_1] with G frozen; the power law adds
    # strip * p / (1 - p), and the fixed point in p converges at once
    A = float(kt.loss_mat[0] @ g)
    strip = kt.node_K[0, 0] * g[0] * x[0]
    p = 0.0
    for _ in range(4):
        p = float(np.clip(2.0 - A - strip * p / (1.0 - p), -1.0, 0.9))
    i, j, a, idx, coef, below = _residual_stencils(grid)
    tv = np.einsum("pk,pk->p", coef, T[j[:, None], idx])
    # int_a^{x_1} (z / x_1)^{-p} dz
    below_int = x[0] * (1.0 - (np.maximum(a, 0.0) / x[0]) ** (1.0 - p)) / (1.0 - p)
    tv = np.where(below, T[j, 0] + below_int * edge[j], tv)
    F = np.zeros((grid.n, grid.n))
    F[i, j] = x[j] * g[j] * tv
    W = prefix_matrix(grid)
    out = np.einsum("ij,ij->i", W, F) + x[0] * F[:, 0] / (2.0 - p)
    return out


def integrated_residual(K, G):
    """x^2 G(x) minus the double integral; zero for a stationary profile."""
    if np.any(G.values < 0):
        warnings.warn("negative profile values in integrated residual", RuntimeWarning, stacklevel=2)
    return GridFunction(G.grid, G.grid.nodes ** 2 * G.values - double_integral(K, G))


def self_similar_residual(K, f):
    """2 f + x f' + C_K(f, f) with x f' from the discrete dilation generator."""
    grid = f.grid
    v = f.values
    return GridFunction(grid, 2.0 * v + xdx_matrix(grid) @ v + apply_quadratic(K, f).total.values)
