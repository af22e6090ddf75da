"""Weighted norms and the embedding/interpolation inequalities between them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import ConfigError, DomainError
from .grid import tail_matrix, tail_primitive

__all__ = [
    "L1k",
    "L2Exp",
    "Hm1Exp",
    "Wm1Inf",
    "norm",
    "norm_weights",
    "inner_Hm1",
    "embedding_constant_L2_to_L1k",
    "interpolation_bound",
    "exp_tail",
    "exp_tail_bound",
    "asymptotic_radius",
    "parse_norm",
]


@dataclass(frozen=True)
class L1k:
    """int |f| (1 + x)^k dx."""

    k: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise ConfigError("L1k needs k >= 0")

    @property
    def label(self):
        return f"L1k_{self.k:g}"


@dataclass(frozen=True)
class L2Exp:
    """(int f^2 e^{mu x} dx)^(1/2)."""

    mu: float = 0.5

    def __post_init__(self):
        # mu = 1 is allowed: the weight is still integrable against the
        # densities used here
        if self.mu < 0:
            raise ConfigError("L2Exp needs mu >= 0")

    @property
    def label(self):
        return f"L2Exp_{self.mu:g}"


@dataclass(frozen=True)
class Hm1Exp:
    """(int H^2 e^{mu x} dx)^(1/2) with H the tail primitive of h."""

    mu: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ConfigError("Hm1Exp needs mu in (0, 1)")

    @property
    def label(self):
        return f"Hm1Exp_{self.mu:g}"


@dataclass(frozen=True)
class Wm1Inf:
    """sup_x |H(x)| with H the tail primitive."""

    @property
    def label(self):
        return "Wm1Inf"


def parse_norm(text):
    """Parse ``L1k(3)``, ``L2Exp(0.5)``, ``Hm1Exp(0.5)`` or ``Wm1Inf``."""
    t = text.strip()
    name, _, rest = t.partition("(")
    name = name.strip().lower()
    arg = rest.rstrip(")").strip()
    try:
        if name in ("l1k", "l1"):
            return L1k(float(arg) if arg else 0.0)
        if name == "l2exp":
            return L2Exp(float(arg) if arg else 0.5)
        if name == "hm1exp":
            return Hm1Exp(float(arg) if arg else 0.5)
        if name == "wm1inf":
            return Wm1Inf()
    except ValueError as exc:
        raise ConfigError(f"bad norm parameter in {text!r}") from exc
    raise ConfigError(f"unknown norm {text!r}")


def norm_weights(grid, kind):
    """Quadrature weights q with norm(f) = sum q |f| (L1k) or sqrt(sum q f^2)."""
    x = grid.nodes
    if isinstance(kind, L1k):
        return grid.weights * (1.0 + x) ** kind.k
    if isinstance(kind, (L2Exp, Hm1Exp)):
        return grid.weights * np.exp(kind.mu * x)
    raise ConfigError(f"no quadrature weights for {kind!r}")


def _sup_primitive(H, h):
    # H is continuous; its value as x -> 0 picks up the strip [0, x_1]
    h0 = H.values[0] + h.grid.nodes[0] * h.values[0]
    return float(max(np.max(np.abs(H.values)), abs(h0)))


def norm(f, kind):
    """Quadrature value of the selected norm."""
    if isinstance(kind, L1k):
        return float(np.dot(norm_weights(f.grid, kind), np.abs(f.values)))
    if isinstance(kind, L2Exp):
        return float(np.sqrt(np.dot(norm_weights(f.grid, kind), f.values ** 2)))
    if isinstance(kind, Hm1Exp):
        H = tail_primitive(f).values
        return float(np.sqrt(np.dot(norm_weights(f.grid, kind), H ** 2)))
    if isinstance(kind, Wm1Inf):
        return _sup_primitive(tail_primitive(f), f)
    raise ConfigError(f"unknown norm kind {kind!r}")


def norm_of_values(grid, values, kind, primitive=None):
    """Norm of raw node values; ``primitive`` reuses a precomputed tail matrix."""
    if isinstance(kind, L1k):
        return float(np.dot(norm_weights(grid, kind), np.abs(values)))
    if isinstance(kind, L2Exp):
        return float(np.sqrt(np.dot(norm_weights(grid, kind), values ** 2)))
    P = tail_matrix(grid) if primitive is None else primitive
    H = P @ values
    if isinstance(kind, Hm1Exp):
        return float(np.sqrt(np.dot(norm_weights(grid, kind), H ** 2)))
    if isinstance(kind, Wm1Inf):
        return float(max(np.max(np.abs(H)), abs(H[0] + grid.nodes[0] * values[0])))
    raise ConfigError(f"unknown norm kind {kind!r}")


def inner_Hm1(g, h, mu):
    """int G H e^{mu x} dx with G, H the tail primitives of g and h."""
    if not 0.0 < mu < 1.0:
        raise ConfigError("mu must lie in (0, 1)")
    G = tail_primitive(g).values
    H = tail_primitive(h).values
    return float(np.dot(g.grid.weights * np.exp(mu * g.grid.nodes), G * H))


def embedding_constant_L2_to_L1k(mu, k):
    """sqrt(int_0^inf e^{-mu x} (1 + x)^{2k} dx), in closed form."""
    if mu <= 0 or k < 0:
        raise DomainError("need mu > 0 and k >= 0")
    s = 2.0 * k + 1.0
    # int e^{-mu x}(1+x)^{2k} = e^mu mu^{-s} Gamma(s, mu)
    val = np.exp(mu) * mu ** (-s) * special.gammaincc(s, mu) * special.gamma(s)
    return float(np.sqrt(val))


def interpolation_bound(f, k, kstar, alpha):
    """Both sides of ||f||_{L1k} <= C ||f||_{L2}^a ||f||_{L1k*}^{1-a}."""
    if not kstar > k:
        raise DomainError("need kstar > k")
    amax = min(2.0 * (kstar - k) / (1.0 + 2.0 * kstar), 1.0)
    if not 0.0 < alpha < amax:
        raise DomainError(f"alpha must lie in (0, {amax:.6g})")
    C = (alpha / (2.0 * ((1.0 - alpha) * kstar - k) - alpha)) ** (alpha / 2.0)
    lhs = norm(f, L1k(k))
    l2 = norm(f, L2Exp(0.0))
    rhs = C * l2 ** alpha * norm(f, L1k(kstar)) ** (1.0 - alpha)
    return lhs, rhs


def exp_tail(y, k):
    """int_y^inf e^{-x} (1 + x)^k dx = e Gamma(k + 1, 1 + y)."""
    a = k + 1.0
    return float(np.e * special.gammaincc(a, 1.0 + y) * special.gamma(a))


def asymptotic_radius(beta, k, ymax=200.0):
    """Smallest y with exp_tail(z, k) <= beta e^{-z} (1 + z)^k for all z >= y.

    The ratio exp_tail / (e^{-y}(1+y)^k) decreases to 1, so the threshold is
    the root of ratio = beta (or 0 if the inequality already holds at 0).
    """
    if beta <= 1:
        raise DomainError("beta must exceed 1")

    def excess(y):
        return exp_tail(y, k) * np.exp(y) / (1.0 + y) ** k - beta

    if excess(0.0) <= 0:
        return 0.0
    if excess(ymax) > 0:
        raise DomainError(f"no radius below the scan limit {ymax}")
    return float(optimize.brentq(excess, 0.0, ymax, xtol=1e-12))


def exp_tail_bound(y, k, ymax=200.0):
    """Tail integral and the bound C_k e^{-y}(1+y)^k.

    C_k = max{2, e^{R_2} c_k} with R_2 the radius for beta = 2 and c_k the
    full integral int_0^inf e^{-x}(1+x)^k dx = e Gamma(k + 1, 1).
    """
    if y < 0 or k < 0:
        raise DomainError("need y >= 0 and k >= 0")
    r2 = asymptotic_radius(2.0, k, ymax)
    c = max(2.0, np.exp(r2) * exp_tail(0.0, k))
    tail = exp_tail(y, k)
    return tail, float(c * np.exp(-y) * (1.0 + y) ** k)


def zero_mass_moment_bound(h, mu):
    """|int x h| and mu^{-1/2} ||h||_{H^-1(e^{mu x})}."""
    x = h.grid.nodes
    return abs(float(np.dot(h.grid.weights * x, h.values))), norm(h, Hm1Exp(mu)) / np.sqrt(mu)

