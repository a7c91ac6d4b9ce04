"""Stochastic parameter domain [-1, 1]^N with a product density.

All rho-weighted integrals in the package go through a :class:`QuadratureRule`
built here: tensor Gauss-Legendre nodes with the density folded into the
weights.  Monte Carlo draws use inverse-CDF sampling per dimension.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special, stats
from scipy.interpolate import PchipInterpolator

from .errors import DensityError

_NORMALIZATION_TOL = 1e-10
_TABLE_FINE = 8193


@dataclass(frozen=True)
class Density1D:
    """One-dimensional density on [-1, 1].

    ``kind`` is ``"uniform"``, ``"beta"`` (symmetric, proportional to
    ``(1 - y**2)**alpha``) or ``"table"`` (``values`` sampled on an equispaced
    grid over [-1, 1], linearly interpolated and renormalized).
    """

    kind: str = "uniform"
    alpha: float = 0.0
    values: tuple = ()
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("uniform", "beta", "table"):
            raise DensityError(f"unknown density kind {self.kind!r}")
        if self.kind == "beta" and not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise DensityError(f"beta exponent must be >= 0, got {self.alpha}")
        if self.kind == "table":
            vals = np.asarray(self.values, dtype=float)
            if vals.ndim != 1 or vals.size < 2:
                raise DensityError("tabulated density needs at least two values")
            if not np.all(np.isfinite(vals)) or np.any(vals < 0):
                raise DensityError("tabulated density must be finite and nonnegative")
            grid = np.linspace(-1.0, 1.0, vals.size)
            mass = np.trapezoid(vals, grid)
            if mass <= 0:
                raise DensityError("tabulated density has zero mass")
            object.__setattr__(self, "values", tuple(float(v) for v in vals / mass))
            interior = np.asarray(self.values)[1:-1]
            if np.any(interior == 0):
                warnings.warn(
                    "tabulated density vanishes inside (-1, 1); support is not the whole interval",
                    stacklevel=2,
                )

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y >= -1.0) & (y <= 1.0)
        if self.kind == "uniform":
            out = np.full_like(y, 0.5)
        elif self.kind == "beta":
            a = self.alpha
            norm = 2.0 ** (2 * a + 1) * special.beta(a + 1, a + 1)
            out = np.clip(1.0 - y * y, 0.0, None) ** a / norm
        else:
            vals = np.asarray(self.values)
            out = np.interp(y, np.linspace(-1.0, 1.0, vals.size), vals)
        return np.where(inside, out, 0.0)

    def sup(self):
        if self.kind == "uniform":
            return 0.5
        if self.kind == "beta":
            return float(self.pdf(0.0))
        return float(max(self.values))

    def _table_cdf(self):
        if "ppf" not in self._cache:
            y = np.linspace(-1.0, 1.0, _TABLE_FINE)
            cdf = integrate.cumulative_trapezoid(self.pdf(y), y, initial=0.0)
            cdf /= cdf[-1]
            keep = np.concatenate(([True], np.diff(cdf) > 0))
            self._cache["cdf"] = PchipInterpolator(y, cdf)
            self._cache["ppf"] = PchipInterpolator(cdf[keep], y[keep])
        return self._cache["ppf"]

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "uniform":
            return 2.0 * q - 1.0
        if self.kind == "beta":
            return 2.0 * stats.beta.ppf(q, self.alpha + 1, self.alpha + 1) - 1.0
        return np.clip(self._table_cdf()(q), -1.0, 1.0)

    def to_dict(self):
        if self.kind == "uniform":
            return {"kind": "uniform"}
        if self.kind == "beta":
            return {"kind": "beta", "alpha": self.alpha}
        return {"kind": "table", "values": list(self.values)}


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in [-1, 1]^N and weights that already include rho.

    ``density`` holds rho(y_k) at each node; the rho^2-weighted integrals of
    the stability estimate need one more factor of it.
    """

    nodes: np.ndarray
    weights: np.ndarray
    density: np.ndarray

    @property
    def size(self):
        return self.weights.size

    @property
    def dim(self):
        return self.nodes.shape[1]


@dataclass(frozen=True)
class ParamSpace:
    dim: int
    densities: tuple
    quad_order: int = 8

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DensityError("dim must be >= 1")
        if int(self.quad_order) < 1:
            raise DensityError("quad_order must be >= 1")
        dens = tuple(self.densities)
        if len(dens) == 1 and self.dim > 1:
            dens = dens * self.dim
        if len(dens) != self.dim:
            raise DensityError(f"expected {self.dim} densities, got {len(dens)}")
        object.__setattr__(self, "densities", dens)
        for j, d in enumerate(dens):
            if not np.isfinite(d.sup()):
                raise DensityError(f"density {j} is unbounded")
            if d.kind == "table":
                # piecewise linear, so the trapezoid rule on its own knots is exact
                mass = np.trapezoid(d.values, np.linspace(-1, 1, len(d.values)))
            else:
                mass, _ = integrate.quad(d.pdf, -1.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-13)
            if abs(mass - 1.0) > _NORMALIZATION_TOL:
                raise DensityError(f"density {j} integrates to {mass!r}, not 1")

    @classmethod
    def uniform(cls, dim=1, quad_order=8):
        return cls(dim, (Density1D("uniform"),) * dim, quad_order)

    def density(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        out = np.ones(y.shape[0])
        for j, d in enumerate(self.densities):
            out *= d.pdf(y[:, j])
        return out


def build_quadrature(space: ParamSpace) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with the product density folded into the weights."""
    x, w = np.polynomial.legendre.leggauss(space.quad_order)
    per_dim_w = []
    for j, d in enumerate(space.densities):
        rho = d.pdf(x)
        if not np.all(np.isfinite(rho)):
            raise DensityError(f"density of dimension {j} is not finite at a quadrature node")
        per_dim_w.append(w * rho)
    nodes = np.array(list(itertools.product(x, repeat=space.dim)), dtype=float)
    weights = np.array([np.prod(c) for c in itertools.product(*per_dim_w)])
    total = weights.sum()
    if total <= 0:
        raise DensityError("density vanishes at every quadrature node")
    weights = weights / total
    return QuadratureRule(nodes=nodes, weights=weights, density=space.density(nodes))


def weighted_integral(rule: QuadratureRule, values) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape[0] != rule.size:
        raise ValueError(f"expected {rule.size} node values, got {values.shape[0]}")
    return np.tensordot(rule.weights, values, axes=(0, 0))


def sample(space: ParamSpace, seed: int, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. points of Gamma, shape (count, dim)."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    q = rng.random((count, space.dim))
    out = np.empty_like(q)
    for j, d in enumerate(space.densities):
        out[:, j] = d.ppf(q[:, j])
    return out
