"""The linearised operator around a profile, its splitting and gap estimates.

All operators are dense matrices acting on node values.  x h' uses the same
discrete generator as the nonlinear solver.  Integrals of the form
e^{-x} int_0^x h(y) e^y dy are assembled with the bounded kernel e^{y - x}
so nothing overflows on [0, 60].
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .coagulation import bilinear_matrix
from .errors import BlowUpError, ConfigError, DomainError, GridMismatchError
from .fitting import fit_decay
from .grid import GridFunction, prefix_matrix, tail_matrix, xdx_matrix
from .kernels import KernelSpec
from .norms import L1k, asymptotic_radius, exp_tail, norm_of_values

__all__ = [
    "FORMS",
    "OperatorMatrix",
    "SplittingConfig",
    "GapConstants",
    "assemble_L0",
    "assemble_Leps",
    "zero_mass_project",
    "dissipation_matrix",
    "evolve_linear",
    "random_zero_mass",
    "GapTrial",
    "gap_trials",
    "estimate_gap",
    "op_norm_diff_L1k",
    "leading_eigenvalues",
    "scan_cutoff",
    "assemble_splitting",
    "compose_gap_constants",
    "perturbed_gap",
    "measure_gap_constants",
]

FORMS = ("direct", "convolution", "primitive")


@dataclass(frozen=True)
class OperatorMatrix:
    grid: object
    matrix: np.ndarray
    space: object = None
    form: str = "direct"

    def __post_init__(self):
        m = np.asarray(self.matrix, float)
        if m.shape != (self.grid.n, self.grid.n):
            raise GridMismatchError("operator matrix does not match the grid")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, h):
        if h.grid != self.grid:
            raise GridMismatchError("operator and function live on different grids")
        return GridFunction(self.grid, self.matrix @ h.values)

    def __add__(self, other):
        return OperatorMatrix(self.grid, self.matrix + other.matrix, self.space, self.form)

    def __sub__(self, other):
        return OperatorMatrix(self.grid, self.matrix - other.matrix, self.space, self.form)


@dataclass(frozen=True)
class SplittingConfig:
    R: float
    mu: float = 0.5

    def __post_init__(self):
        if not self.R > 0:
            raise ConfigError("cutoff R must be positive")
        if not 0.0 < self.mu < 1.0:
            raise ConfigError("mu must lie in (0, 1)")


def _volterra(grid, kern):
    """Matrix V with (V h)_i ~ int_0^{x_i} kern(x_i, y) h(y) dy."""
    x = grid.nodes
    W = np.array(prefix_matrix(grid))
    K = kern(x[:, None], x[None, :])
    V = W * K
    # strip [0, x_1] with the integrand frozen at y = x_1
    V[:, 0] += x[0] * K[:, 0]
    return V


def _g0_conv(grid):
    return _volterra(grid, lambda x, y: np.exp(np.minimum(y - x, 0.0)))


def _a1_kernel(x, y):
    # e^{-x}(e^y - 1) = e^{y - x} - e^{-x}
    return np.exp(np.minimum(y - x, 0.0)) - np.exp(-x)


def assemble_L0(grid, form="direct"):
    """Linearisation around e^{-x} of the constant kernel 2.

    direct:      2 h + x h' + 2 C(e^{-x}, h) with the discrete bilinear form
    convolution: x h' + 2 e^{-x} int_0^x h (e^y - 1) dy - 2 e^{-x} int_x^inf h
    primitive:   x h' - 2 H + 2 int_0^x H(y) e^{-(x - y)} dy, H the tail primitive
    """
    x = grid.nodes
    n = grid.n
    Dx = np.array(xdx_matrix(grid))
    if form == "direct":
        G0 = grid.sample(lambda s: np.exp(-s))
        M = 2.0 * np.eye(n) + Dx + 2.0 * bilinear_matrix(KernelSpec(0.0), G0)
    elif form == "convolution":
        P = np.array(tail_matrix(grid))
        M = Dx + 2.0 * _volterra(grid, _a1_kernel) - 2.0 * np.exp(-x)[:, None] * P
    elif form == "primitive":
        P = np.array(tail_matrix(grid))
        M = Dx - 2.0 * P + 2.0 * _g0_conv(grid) @ P
    else:
        raise ConfigError(f"form must be one of {FORMS}")
    return OperatorMatrix(grid, M, None, form)


def assemble_Leps(grid, G_eps, K):
    """h -> 2 h + x h' + 2 C_K(G_eps, h)."""
    if G_eps.grid != grid:
        raise GridMismatchError("profile lives on another grid")
    n = grid.n
    M = 2.0 * np.eye(n) + np.array(xdx_matrix(grid)) + 2.0 * bilinear_matrix(K, G_eps)
    return OperatorMatrix(grid, M, None, "direct")


def _projector_parts(grid):
    x = grid.nodes
    psi = np.exp(-x)
    wx = grid.weights * x
    return psi, wx, float(wx @ psi)


def zero_mass_project(h):
    """h - m_1(h) e^{-x} / m_1(e^{-x}), both moments taken by the same quadrature."""
    psi, wx, norm_psi = _projector_parts(h.grid)
    return GridFunction(h.grid, h.values - (float(wx @ h.values) / norm_psi) * psi)


def dissipation_matrix(n, c):
    """-c times the fourth difference in the node index (zero on two rows at each end)."""
    H = np.zeros((n, n))
    i = np.arange(2, n - 2)
    for off, v in zip(range(-2, 3), (1.0, -4.0, 6.0, -4.0, 1.0)):
        H[i, i + off] = -c * v
    return H


def evolve_linear(L, h0, T, dt=1e-2, kind=L1k(3.0), stride=10, project=False, growth_limit=10.0,
                  dissipation=0.2):
    """Integrate h' = L h with classical Runge-Kutta; return (times, norms).

    The centred x d/dx stencil has purely imaginary spectrum, and the
    coupling terms push its grid-scale modes (frequency ~ 1/log-step) slightly
    into the right half plane.  ``dissipation`` adds -c times the fourth index
    difference, which damps those modes by O(c) and smooth modes by
    O(c theta^4) with theta the index frequency.
    ``project`` removes the first moment after every step (for operators that
    preserve it only up to quadrature).  Growth of the norm by more than
    ``growth_limit`` aborts with BlowUpError.
    """
    if not 0 < dt <= 1e-2:
        raise ConfigError("dt must lie in (0, 1e-2]")
    if T <= 0:
        raise ConfigError("T must be positive")
    grid = L.grid
    if h0.grid != grid:
        raise GridMismatchError("initial datum lives on another grid")
    A = L.matrix
    if dissipation:
        A = A + dissipation_matrix(grid.n, float(dissipation))
    P = tail_matrix(grid)
    nsteps = int(math.ceil(T / dt - 1e-9))
    dt = T / nsteps
    psi, wx, norm_psi = _projector_parts(grid)
    h = h0.values.copy()
    n0 = norm_of_values(grid, h, kind, P)
    times, vals = [0.0], [n0]
    for s in range(1, nsteps + 1):
        k1 = A @ h
        k2 = A @ (h + 0.5 * dt * k1)
        k3 = A @ (h + 0.5 * dt * k2)
        k4 = A @ (h + dt * k3)
        h = h + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if project:
            h = h - (float(wx @ h) / norm_psi) * psi
        if s % stride == 0 or s == nsteps:
            v = norm_of_values(grid, h, kind, P)
            if not math.isfinite(v) or (n0 > 0 and v > growth_limit * n0):
                raise BlowUpError(f"linear evolution grew by more than {growth_limit}x at t = {s * dt:.4g}")
            times.append(s * dt)
            vals.append(v)
    return np.asarray(times), np.asarray(vals)


def random_zero_mass(grid, rng):
    """Difference of two unit-mass gamma-like bumps, projected to zero first moment."""
    x = grid.nodes

    def bump():
        a = rng.uniform(0.5, 4.0)
        b = rng.uniform(0.5, 3.0)
        v = x ** a * np.exp(-b * x)
        return v / float(np.dot(grid.weights * x, v))

    h = GridFunction(grid, bump() - rng.uniform(0.3, 1.0) * bump())
    return zero_mass_project(h)


@dataclass(frozen=True)
class GapTrial:
    times: np.ndarray
    norms: np.ndarray
    fit: object


def gap_trials(L, kind, trials=10, T=10.0, seed=0, dt=1e-2, project=True, jobs=1, window=None):
    """Decay samples and fits of e^{L t} h0 for ``trials`` random zero-mass h0."""
    if trials < 5:
        raise ConfigError("estimate_gap needs at least five trials")
    rng = np.random.default_rng(seed)
    seeds = [random_zero_mass(L.grid, rng) for _ in range(int(trials))]
    win = (0.5 * T, T) if window is None else window

    def one(h0):
        t, v = evolve_linear(L, h0, T, dt, kind, stride=max(1, int(round(0.1 / dt))), project=project)
        return GapTrial(t, v, fit_decay(t, v, win))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            return list(ex.map(one, seeds))
    return [one(h) for h in seeds]


def estimate_gap(L, kind, trials=10, T=10.0, seed=0, dt=1e-2, project=True, jobs=1, window=None):
    """Worst fitted decay rate of e^{L t} h0 over random zero-mass h0.

    The fit window is [T/2, T] unless given.  Returns (worst rate, rates).
    """
    res = gap_trials(L, kind, trials, T, seed, dt, project, jobs, window)
    rates = np.array([r.fit.rate for r in res])
    return float(rates.min()), rates


def op_norm_diff_L1k(L1, L2, k):
    """Induced L1_k norm of L1 - L2: max_j sum_i w_i (1+x_i)^k |D_ij| / (w_j (1+x_j)^k)."""
    if L1.grid != L2.grid:
        raise GridMismatchError("operators live on different grids")
    grid = L1.grid
    q = grid.weights * (1.0 + grid.nodes) ** float(k)
    D = np.abs(L1.matrix - L2.matrix)
    return float(np.max((q @ D) / q))


def leading_eigenvalues(L, count=6, project=True, dissipation=0.2):
    """Eigenvalues of largest real part, on the zero-mass subspace if ``project``.

    ``dissipation`` matches :func:`evolve_linear`; without it the leading
    eigenvalues are grid-scale oscillations.  Diagnostic only: the operators
    are far from normal, so decay is measured by :func:`estimate_gap`.
    """
    A = L.matrix
    if dissipation:
        A = A + dissipation_matrix(L.grid.n, float(dissipation))
    if project:
        psi, wx, norm_psi = _projector_parts(L.grid)
        P = np.eye(L.grid.n) - np.outer(psi, wx) / norm_psi
        A = P @ A @ P
    ev = linalg.eigvals(A)
    ev = ev[np.argsort(-ev.real)]
    if project:
        # P A P has an extra zero eigenvalue along e^{-x}
        k = int(np.argmin(np.abs(ev)))
        ev = np.delete(ev, k)
    return ev[: int(count)]


def _proof_condition(R, beta, k, c):
    # 2 beta (1+x)(1-e^{-x}) + 2 c (1+x) / (R+1)^{k-1} - k x < 0 for all x >= R
    xs = R + np.concatenate((np.linspace(0.0, 50.0, 2001), np.geomspace(50.0, 1e8, 400)))
    F = 2.0 * beta * (1.0 + xs) * (1.0 - np.exp(-xs)) + 2.0 * c * (1.0 + xs) / (R + 1.0) ** (k - 1.0) - k * xs
    slope = 2.0 * beta + 2.0 * c / (R + 1.0) ** (k - 1.0) - k
    return bool(np.all(F < 0) and slope < 0)


def scan_cutoff(grid, beta=1.1, k=3.0):
    """Smallest node R >= R_beta at which the dissipativity condition of B holds.

    R_beta is the radius where int_y^inf e^{-x}(1+x)^k <= beta e^{-y}(1+y)^k
    starts to hold; the constant in the condition is int_0^inf e^{-x}(1+x)^k.
    """
    if not k > 2.0 * beta or beta <= 1.0:
        raise DomainError("need beta > 1 and k > 2 beta")
    rb = asymptotic_radius(beta, k)
    c = exp_tail(0.0, k)
    for R in grid.nodes:
        if R >= rb and _proof_condition(R, beta, k, c):
            return float(R)
    raise DomainError("no grid node satisfies the cutoff conditions")


def assemble_splitting(grid, cfg):
    """(A, B) with A = A1 + A2 + A3 and B = x h' + B2 + B3, B3 = -A3.

    A3 = -B3 = e^{-x} int_0^inf z B2[h](z) dz, normalised by the discrete
    first moment of e^{-x}, so that B preserves the discrete first moment
    up to the x h' boundary rows.
    """
    x = grid.nodes
    if not x[0] < cfg.R < x[-1]:
        raise DomainError("cutoff R must lie inside the grid")
    inside = (x <= cfg.R).astype(float)
    V = _volterra(grid, _a1_kernel)
    A1 = 2.0 * V * inside[None, :]
    B2 = 2.0 * V * (1.0 - inside)[None, :]
    A2 = -2.0 * np.exp(-x)[:, None] * np.array(tail_matrix(grid))
    psi, wx, norm_psi = _projector_parts(grid)
    A3 = np.outer(psi, wx @ B2) / norm_psi
    A = A1 + A2 + A3
    B = np.array(xdx_matrix(grid)) + B2 - A3
    return OperatorMatrix(grid, A, None, "convolution"), OperatorMatrix(grid, B, None, "convolution")


def compose_gap_constants(C1, lambda1, C2, lambda2, C_A, C_Y, mode="restrict"):
    """Constants of the two gap-transfer estimates (restriction and extension).

    restrict: C = C2 (1 + C_A C1 C_Y / |l2 - l1|), rate min(l1, l2)
    extend:   C = C2 + C_Y C1 C2 C_A / (l2 - l1), rate l1 (needs l2 > l1)
    """
    if lambda1 == lambda2:
        raise DomainError("the two rates must differ")
    if mode == "restrict":
        return C2 * (1.0 + C_A * C1 * C_Y / abs(lambda2 - lambda1)), min(lambda1, lambda2)
    if mode == "extend":
        if not lambda2 > lambda1:
            raise DomainError("extension needs lambda2 > lambda1")
        return C2 + C_Y * C1 * C2 * C_A / (lambda2 - lambda1), lambda1
    raise ConfigError("mode must be 'restrict' or 'extend'")


@dataclass(frozen=True)
class GapConstants:
    C: float
    M2: float

    def __post_init__(self):
        if not (self.C > 0 and self.M2 > 0):
            raise DomainError("gap constants must be positive")

    @property
    def M(self):
        return 2.0 * self.C

    @property
    def eps0(self):
        return 1.0 / (2.0 * self.C * self.M2)

    def lambda_eps(self, eps):
        return 0.5 - self.C * self.M2 * eps


def perturbed_gap(consts, eps):
    """(1/2 - C M2 eps, eps < eps0)."""
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    return consts.lambda_eps(eps), bool(eps < consts.eps0)


def measure_gap_constants(L0, L_eps_by_eps, k=3.0, trials=10, T=10.0, seed=0, rate=0.5, jobs=1):
    """Discrete surrogates of C (prefactor at rate 1/2) and M2 (operator-difference slope).

    C is the largest observed ||e^{L0 t} h||_{L1_k} e^{rate t} / ||h||_{L1_k};
    M2 is the least-squares slope through the origin of the operator
    differences against eps.
    """
    kind = L1k(float(k))
    rng = np.random.default_rng(seed)
    C = 1.0
    for _ in range(int(trials)):
        h0 = random_zero_mass(L0.grid, rng)
        t, v = evolve_linear(L0, h0, T, 1e-2, kind, stride=10, project=True)
        C = max(C, float(np.max(v * np.exp(rate * t) / v[0])))
    eps = np.array(sorted(L_eps_by_eps))
    d = np.array([op_norm_diff_L1k(L_eps_by_eps[e], L0, k) for e in eps])
    M2 = float(np.dot(eps, d) / np.dot(eps, eps))
    return GapConstants(C, M2), dict(zip(eps.tolist(), d.tolist()))
