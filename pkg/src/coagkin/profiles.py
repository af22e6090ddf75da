"""Self-similar profiles of K = 2 + eps W and their a-priori bounds.

Profiles solve the integrated stationary equation x^2 G = D[G] with unit
first moment, by a damped Newton iteration bordered by the constraint
m_1(G) = 1.  The equation is invariant under the dilation G -> a G(a x), so
one unknown multiplier along the image of the dilation generator makes the
bordered system square; it vanishes at a solution and its size measures the
discretisation defect.  The Jacobian of D comes from the flux identity
D[G](x) = -int_0^x y C(G, G)(y) dy, which reuses the bilinear Jacobian of C;
the iteration therefore converges linearly with a small contraction factor.

A fixed-point iteration G <- (1 - d) G + d D[G] / x^2 followed by the
dilation to unit mass is not used: for G = l e^{-b x} the ratio r = l / b
maps to (1 - d) r + d r^2, whose fixed point r = 1 has slope 1 + d.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coagulation import bilinear_matrix, double_integral
from .errors import ConfigError, ConvergenceError
from .grid import GridFunction, moment, prefix_matrix, stencil, xdx_matrix
from .kernels import KernelSpec, Zero
from .norms import L1k, L2Exp, norm

__all__ = [
    "ProfileResult",
    "BoundsReport",
    "solve_profile",
    "profile_residual",
    "dilate",
    "closed_form_constant",
    "check_profile_bounds",
    "profile_stability_scan",
]

@dataclass
class ProfileResult:
    G: GridFunction
    epsilon: float
    iterations: int
    residual_L1k: float
    m0: float
    moments: dict
    l2_norm: float
    kernel: KernelSpec | None = None
    multiplier: float = 0.0
    history: list = field(default_factory=list)


def dilate(G, a):
    """a G(a x) sampled on the nodes of G's grid (cubic stencils, zero beyond xmax)."""
    if a <= 0:
        raise ConfigError("dilation factor must be positive")
    grid = G.grid
    idx, coef = stencil(grid, a * grid.nodes)
    return GridFunction(grid, a * np.einsum("pk,pk->p", coef, G.values[idx]))


def profile_residual(K, G):
    """||x^2 G - D[G]||_{L1_2} / ||x^2 G||_{L1_0}."""
    x = G.grid.nodes
    x2g = x ** 2 * G.values
    r = GridFunction(G.grid, x2g - double_integral(K, G))
    return norm(r, L1k(2.0)) / norm(GridFunction(G.grid, x2g), L1k(0.0))


def closed_form_constant(grid, epsilon):
    """(1 + eps/2)^{-2} exp(-x / (1 + eps/2)), the profile of the constant kernel 2 + eps."""
    s = 1.0 + 0.5 * epsilon
    return grid.sample(lambda x: np.exp(-x / s) / s ** 2)


def _normalise(G):
    m1 = moment(G, 1)
    if not m1 > 0:
        raise ConvergenceError("iterate lost its mass", residual=float("nan"), iterations=0)
    return dilate(G, m1)


def _flux_matrix(grid):
    # B with (B v)_i ~ int_0^{x_i} v(y) dy, the strip [0, x_1] by the trapezoid rule
    B = np.array(prefix_matrix(grid))
    B[:, 0] += 0.5 * grid.nodes[0]
    return B


def _newton_step(K, G, B, Dx, wx):
    grid = G.grid
    x = grid.nodes
    g = G.values
    F = x ** 2 * g - double_integral(K, G)
    M = bilinear_matrix(K, G, conservative=False)
    n = grid.n
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = np.diag(x ** 2) + B @ (2.0 * x[:, None] * M)
    A[:n, n] = x ** 2 * (g + Dx @ g)
    A[n, :n] = wx
    rhs = -np.append(F, float(wx @ g) - 1.0)
    sol = np.linalg.solve(A, rhs)
    return sol[:n], sol[n]


def _clip(G, label):
    v = G.values
    vmax = float(np.max(np.abs(v))) or 1.0
    if np.any(v < -1e-12 * vmax):
        warnings.warn(f"{label}: negative profile values clipped to zero "
                      f"(min {float(v.min()):.3g})", RuntimeWarning, stacklevel=3)
    return GridFunction(G.grid, np.maximum(v, 0.0))


def solve_profile(K, grid, tol=1e-5, max_iter=500, damping=0.7, initial=None):
    """Unit-mass stationary profile of the self-similar equation for K.

    Stops once the relative integrated residual is below ``tol`` and the last
    update changed G by less than ``tol / 10`` in L1_2.  ``initial`` is a
    GridFunction or a callable of x (default e^{-x}); it is dilated to unit
    mass before the first step.
    """
    if not tol > 0:
        raise ConfigError("tol must be positive")
    if not 0.0 < damping <= 1.0:
        raise ConfigError("damping must lie in (0, 1]")
    if int(max_iter) < 1:
        raise ConfigError("max_iter must be >= 1")
    if initial is None:
        G = grid.sample(lambda x: np.exp(-x))
    elif isinstance(initial, GridFunction):
        if initial.grid != grid:
            raise ConfigError("initial iterate lives on another grid")
        G = initial.copy()
    else:
        G = grid.sample(initial)
    G = _normalise(G)

    x = grid.nodes
    wx = grid.weights * x
    B = _flux_matrix(grid)
    Dx = xdx_matrix(grid)
    dist = L1k(2.0)
    history = []
    theta = 0.0
    res = profile_residual(K, G)
    for it in range(1, int(max_iter) + 1):
        dG, theta = _newton_step(K, G, B, Dx, wx)
        new = GridFunction(grid, G.values + damping * dG)
        change = norm(new - G, dist)
        G = new
        res = profile_residual(K, G)
        history.append(res)
        if not math.isfinite(res):
            break
        if res <= tol and change <= 0.1 * tol:
            G = _clip(G, "solve_profile")
            return _result(K, G, it, profile_residual(K, G), float(theta), history)
    raise ConvergenceError(
        f"profile iteration stopped after {len(history)} steps with residual {res:.3e}",
        residual=res, iterations=len(history))


def _result(K, G, iterations, residual, theta, history):
    moments = {p: moment(G, p) for p in (0, 1, 2, 3, 4)}
    return ProfileResult(G, float(K.epsilon), iterations, float(residual), moments[0],
                         moments, norm(G, L2Exp(0.0)), K, theta, history)


@dataclass
class BoundsReport:
    epsilon: float
    m0: float
    m0_bracket: tuple
    m0_ok: bool
    moments: dict
    moments_ok: bool
    slope: float
    slope_bound: float
    slope_ok: bool
    l2_norm: float
    l2_ok: bool
    negative_moment: float
    negative_moment_ok: bool
    lower_bound: dict
    lower_bound_ok: bool

    @property
    def passed(self):
        return all((self.m0_ok, self.moments_ok, self.slope_ok, self.l2_ok,
                    self.negative_moment_ok, self.lower_bound_ok))

    def to_text(self):
        lo, hi = self.m0_bracket
        lines = [
            f"epsilon = {self.epsilon:g}",
            f"m0 = {self.m0:.10g} in [{lo:.6g}, {hi:.6g}]: {_pf(self.m0_ok)}",
            "moments: " + ", ".join(f"m{p} = {v:.8g}" for p, v in self.moments.items())
            + f": {_pf(self.moments_ok)}",
            f"small-x slope = {self.slope:.6g} >= {self.slope_bound:.6g}: {_pf(self.slope_ok)}",
            f"L2 norm = {self.l2_norm:.8g}: {_pf(self.l2_ok)}",
            f"moment(-0.5) = {self.negative_moment:.8g}: {_pf(self.negative_moment_ok)}",
        ]
        for a, (lhs, rhs) in self.lower_bound.items():
            lines.append(f"int_{a:g}^inf G = {lhs:.6g} >= {rhs:.6g}")
        lines.append(f"lower bound: {_pf(self.lower_bound_ok)}")
        lines.append(f"overall: {_pf(self.passed)}")
        return "\n".join(lines) + "\n"


def _pf(ok):
    return "pass" if ok else "FAIL"


def check_profile_bounds(result, m0_tol=1e-3, slope_slack=0.05, x_fit=0.05, lower_tol=1e-3):
    """Check the a-priori bounds a self-similar profile must satisfy."""
    G = result.G
    eps = result.epsilon
    grid = G.grid
    x = grid.nodes
    lo = 1.0 / (1.0 + 0.5 * eps)
    m0 = moment(G, 0)
    m0_ok = lo - m0_tol <= m0 <= 1.0 + m0_tol
    moments = {p: moment(G, p) for p in (0, 1, 2, 3, 4)}
    moments_ok = all(math.isfinite(v) for v in moments.values())

    sel = (x <= x_fit) & (G.values > 0)
    if sel.sum() >= 2:
        slope = float(np.polyfit(np.log(x[sel]), np.log(G.values[sel]), 1)[0])
    else:
        slope = float("nan")
    bound = -2.0 * eps / (2.0 + eps) - slope_slack
    slope_ok = math.isfinite(slope) and slope >= bound

    l2 = norm(G, L2Exp(0.0))
    neg = moment(G, -0.5)
    neg_ok = math.isfinite(neg) if eps < 0.5 else True

    m2 = moments[2]
    lower = {}
    for a in (0.25, 0.5):
        mask = x >= a
        lhs = float(np.dot(grid.weights[mask], G.values[mask]))
        lower[a] = (lhs, (1.0 - a) ** 2 / m2 - lower_tol)
    lower_ok = all(l >= r for l, r in lower.values())
    return BoundsReport(eps, m0, (lo, 1.0), m0_ok, moments, moments_ok, slope, bound,
                        slope_ok, l2, math.isfinite(l2), neg, neg_ok, lower, lower_ok)


def profile_stability_scan(family, eps_list, k=2.0, grid=None, tol=1e-5, jobs=1, **solver):
    """Distances ||G_eps - G_0||_{L1_k} and the slope of log distance against log eps.

    G_0 is solved on the same grid so that discretisation errors common to
    both profiles cancel.
    """
    from .grid import make_grid

    eps = [float(e) for e in eps_list]
    if len(eps) < 3:
        raise ConfigError("stability scan needs at least three epsilons")
    if any(not 0.0 < e <= 0.3 for e in eps):
        raise ConfigError("stability scan epsilons must lie in (0, 0.3]")
    grid = make_grid() if grid is None else grid
    G0 = solve_profile(KernelSpec(0.0, Zero()), grid, tol, **solver).G

    def one(e):
        return solve_profile(KernelSpec(e, family), grid, tol, **solver)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            results = list(ex.map(one, eps))
    else:
        results = [one(e) for e in eps]
    kind = L1k(float(k))
    dist = np.array([norm(r.G - G0, kind) for r in results])
    if np.all(dist > 0):
        slope = float(np.polyfit(np.log(eps), np.log(dist), 1)[0])
    else:
        slope = float("nan")
    return dist, slope
