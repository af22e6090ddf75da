"""Coagulation kernels of the form K = 2 + eps * W.

W is symmetric, takes values in [0, 1] and is homogeneous of degree zero,
so every family below is really a function of the size ratio x / y.
"""
from __future__ import annotations

import csv
import functools
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "Zero",
    "One",
    "RatioSym",
    "MinOverMax",
    "Tabulated",
    "Shifted",
    "KernelSpec",
    "ViolationReport",
    "eval_W",
    "eval_K",
    "validate_kernel",
    "recenter_signed",
    "family_from_name",
]


@functools.lru_cache(maxsize=32)
def _load_psi_table(path):
    s, v = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                s.append(float(row[0]))
                v.append(float(row[1]))
            except ValueError:
                continue  # header line
    if len(s) < 2:
        raise ConfigError(f"psi table {path!r} needs at least two rows")
    order = np.argsort(s)
    return np.asarray(s)[order], np.asarray(v)[order]


def _psi(name, s):
    if name == "two_over_s":
        return 2.0 / s
    if name.startswith("table:"):
        ss, vv = _load_psi_table(name[len("table:"):])
        return np.interp(s, ss, vv)
    raise ConfigError(f"unknown psi map {name!r}")


@dataclass(frozen=True)
class Zero:
    """W identically zero."""

    def __call__(self, x, y):
        return np.zeros(np.broadcast(x, y).shape)


@dataclass(frozen=True)
class One:
    """W identically one; K_eps is then the constant 2 + eps."""

    def __call__(self, x, y):
        return np.ones(np.broadcast(x, y).shape)


@dataclass(frozen=True)
class RatioSym:
    """W(x, y) = psi(r**alpha + r**-alpha) with r = x / y.

    ``psi`` names a map on [2, inf): ``"two_over_s"`` (psi(s) = 2/s, which
    gives W = 2 x^a y^a / (x^2a + y^2a)) or ``"table:<csv path>"`` holding
    (s, psi) rows interpolated linearly.
    """

    alpha: float = 1.0
    psi: str = "two_over_s"

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        # r**a + r**-a = 2 cosh(a log r); stays finite for extreme ratios
        lr = self.alpha * (np.log(x) - np.log(y))
        s = 2.0 * np.cosh(np.clip(lr, -700.0, 700.0))
        return _psi(self.psi, s)


@dataclass(frozen=True)
class MinOverMax:
    """W(x, y) = min(x, y) / max(x, y)."""

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.minimum(x, y) / np.maximum(x, y)


@dataclass(frozen=True)
class Tabulated:
    """W sampled on a grid of ratios r = x / y.

    Linear interpolation in log r, clamped to the end values outside the
    table.  Nothing forces the table to satisfy W(r) = W(1/r); use
    :func:`validate_kernel` to check.
    """

    ratios: tuple
    values: tuple

    def __post_init__(self):
        r = np.asarray(self.ratios, float)
        if r.ndim != 1 or r.size < 2 or len(self.values) != r.size:
            raise ConfigError("tabulated W needs matching ratio/value tuples of length >= 2")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ConfigError("tabulated ratios must be positive and strictly increasing")
        object.__setattr__(self, "ratios", tuple(float(v) for v in r))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def from_function(cls, fn, rmin=1e-6, rmax=1e6, n=241):
        r = np.geomspace(rmin, rmax, n)
        return cls(tuple(r), tuple(np.asarray(fn(r), float)))

    @classmethod
    def from_csv(cls, path):
        r, v = _load_psi_table(str(path))
        return cls(tuple(r), tuple(v))

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        lr = np.log(x) - np.log(y)
        return np.interp(lr, np.log(self.ratios), self.values)


@dataclass(frozen=True)
class Shifted:
    """(base(x, y) + shift) * scale; the output of :func:`recenter_signed`."""

    base: "Family"
    shift: float
    scale: float

    def __call__(self, x, y):
        return (self.base(x, y) + self.shift) * self.scale


Family = Union[Zero, One, RatioSym, MinOverMax, Tabulated, Shifted]


def _check_sizes(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise DomainError("kernel arguments must be positive sizes")
    return x, y


def eval_W(family, x, y):
    """Evaluate the perturbation W at positive sizes (scalars or arrays)."""
    x, y = _check_sizes(x, y)
    out = family(x, y)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class KernelSpec:
    """K(x, y) = base + epsilon * W(x, y), with base = 2 unless recentred."""

    epsilon: float = 0.0
    family: Family = field(default_factory=Zero)
    base: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.base <= 0:
            raise ConfigError("constant part of the kernel must be positive")

    def __call__(self, x, y):
        if self.epsilon == 0.0:
            return np.full(np.broadcast(x, y).shape, float(self.base))
        return self.base + self.epsilon * self.family(x, y)

    @property
    def is_constant(self):
        return self.epsilon == 0.0 or isinstance(self.family, (Zero, One))

    @property
    def constant_value(self):
        """Value of K when it does not depend on (x, y), else None."""
        if self.epsilon == 0.0 or isinstance(self.family, Zero):
            return float(self.base)
        if isinstance(self.family, One):
            return float(self.base + self.epsilon)
        return None

    @property
    def sup_norm(self):
        """Upper bound for |K| used by the continuity estimates."""
        return float(self.base + self.epsilon)


def eval_K(spec, x, y):
    """Coagulation rate base + eps * W(x, y) at positive sizes."""
    x, y = _check_sizes(x, y)
    out = spec(x, y)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class ViolationReport:
    symmetry_defect: float
    bound_violation: float
    homogeneity_defect: float
    tolerance: float = 1e-12
    homogeneity_tolerance: float = 1e-12

    @property
    def findings(self):
        out = []
        if self.symmetry_defect > self.tolerance:
            out.append(f"symmetry defect {self.symmetry_defect:.3e}")
        if self.bound_violation > self.tolerance:
            out.append(f"values leave [0, 1] by {self.bound_violation:.3e}")
        if self.homogeneity_defect > self.homogeneity_tolerance:
            out.append(f"homogeneity defect {self.homogeneity_defect:.3e}")
        return out

    @property
    def empty(self):
        return not self.findings

    def __bool__(self):
        return not self.empty


def validate_kernel(spec, sample_count=64, lambdas=(0.1, 1.0, 7.3), tolerance=1e-12,
                    homogeneity_tolerance=None):
    """Sample W on log-spaced pairs and report symmetry/bound/homogeneity defects."""
    if sample_count < 1:
        raise ConfigError("sample_count must be >= 1")
    fam = spec.family if isinstance(spec, KernelSpec) else spec
    s = np.geomspace(1e-3, 1e3, sample_count)
    X, Y = np.meshgrid(s, s, indexing="ij")
    w = fam(X, Y)
    sym = float(np.max(np.abs(w - fam(Y, X))))
    bound = float(max(0.0, -np.min(w), np.max(w) - 1.0))
    hom = 0.0
    for lam in lambdas:
        hom = max(hom, float(np.max(np.abs(fam(lam * X, lam * Y) - w))))
    if homogeneity_tolerance is None:
        homogeneity_tolerance = tolerance
    return ViolationReport(sym, bound, hom, tolerance, homogeneity_tolerance)


def recenter_signed(Wbound, family, epsilon=1.0):
    """Rewrite 2 + eps W with |W| <= Wbound as c + eps' W~ with 0 <= W~ <= 1.

    Returns ``(c, W~, eps')`` where c = 2 - eps Wbound, W~ = (W + Wbound) /
    (2 Wbound) and eps' = 2 Wbound eps.
    """
    if Wbound < 0:
        raise DomainError("Wbound must be nonnegative")
    if Wbound == 0:
        return 2.0, family, epsilon
    const = 2.0 - epsilon * Wbound
    if Wbound > 2 or const <= 0:
        raise DomainError("recentring would make the constant part nonpositive")
    scale = 1.0 / (2.0 * Wbound)
    if isinstance(family, Tabulated):
        vals = (np.asarray(family.values) + Wbound) * scale
        if np.all(np.abs(vals) == 0.0):
            return const, Zero(), 2.0 * Wbound * epsilon
        return const, Tabulated(family.ratios, tuple(vals)), 2.0 * Wbound * epsilon
    return const, Shifted(family, float(Wbound), scale), 2.0 * Wbound * epsilon


def family_from_name(name, alpha=1.0, psi="two_over_s", table_path=None):
    """Build a family from the ``[kernel]`` config vocabulary."""
    name = name.strip().lower()
    if name == "zero":
        return Zero()
    if name == "one":
        return One()
    if name == "ratio_sym":
        return RatioSym(float(alpha), psi)
    if name == "min_over_max":
        return MinOverMax()
    if name == "tabulated":
        if not table_path:
            raise ConfigError("tabulated family needs table_path")
        return Tabulated.from_csv(table_path)
    raise ConfigError(f"unknown kernel family {name!r}")
