"""Radial discretization of R^N.

A radial function is sampled at nodes ``r_0 < ... < r_{M-1}``.  Integrals
``int_{R^N} f(|x|) dx`` are ``sigma_N * sum_i w_i f(r_i)``, where ``w_i`` are
composite-trapezoid weights in ``r`` (uniform mode) or ``log r``
(logarithmic mode) carrying the ``r^(N-1)`` Jacobian.  The ball below
``r_0`` is lumped onto the first node so that the weights integrate over
``[0, r_max]``.

The Laplacian is written in flux form,

    (L u)_i = (F_{i+1/2} - F_{i-1/2}) / w_i,   F_{i+1/2} = c_{i+1/2} (u_{i+1} - u_i),

with ``c_{i+1/2} = 2N G_{i+1/2} / (r_{i+1}^2 - r_i^2)`` and ``G`` the
cumulative weights.  Fluxes vanish at both ends: at the inner end this is the
regularity condition ``u'(0) = 0``; at ``r_max`` together with the constraint
``u(r_max) = 0`` it is the clamped condition.  Two consequences are used
throughout the package:

* ``W L`` is symmetric, so ``d/du (1/2) int |L u|^2 = W L L u`` exactly and the
  node-wise bilaplacian is the exact discrete gradient of the quadratic form;
* ``L r^2 = 2N`` at every node but the last, on any node set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = [
    "DimensionContext",
    "RadialGrid",
    "RadialField",
    "HVNorm",
    "HVGram",
    "build_grid",
    "laplacian",
    "bilaplacian",
    "radial_derivative",
    "integrate",
    "norm_HV",
    "weighted_lq_norm",
    "sum_norm",
    "save_field",
    "load_field",
]


@dataclass(frozen=True)
class DimensionContext:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 5:
            raise ValueError(f"N must be an integer >= 5, got {self.N!r}")

    @property
    def sigma_N(self) -> float:
        """Surface measure of the unit sphere in R^N."""
        return 2 * math.pi ** (self.N / 2) / math.gamma(self.N / 2)

    @property
    def two_star_star(self) -> float:
        return 2 * self.N / (self.N - 4)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    ctx: DimensionContext
    nodes: np.ndarray
    spacing_mode: str
    quad_weights: np.ndarray
    flux_coeffs: np.ndarray

    @property
    def N(self) -> int:
        return self.ctx.N

    @property
    def M(self) -> int:
        return self.nodes.size

    @property
    def r(self) -> np.ndarray:
        return self.nodes

    @property
    def sigma(self) -> float:
        return self.ctx.sigma_N

    def __repr__(self):
        return (
            f"RadialGrid(N={self.N}, M={self.M}, mode={self.spacing_mode!r}, "
            f"r=[{self.nodes[0]:.3g}, {self.nodes[-1]:.3g}])"
        )


def build_grid(
    ctx: Union[DimensionContext, int],
    r_min: float = 1e-4,
    r_max: float = 50.0,
    M: int = 2048,
    mode: str = "logarithmic",
) -> RadialGrid:
    if not isinstance(ctx, DimensionContext):
        ctx = DimensionContext(ctx)
    if M < 16:
        raise ValueError(f"need at least 16 nodes, got M={M}")
    if not r_min > 0:
        raise ValueError(f"r_min must be positive, got {r_min}")
    if not r_max > r_min:
        raise ValueError("r_max must exceed r_min")
    N = ctx.N
    if mode in ("uniform", "linear"):
        mode = "uniform"
        r = np.linspace(r_min, r_max, M)
        h = np.diff(r)
        jac = r ** (N - 1)
    elif mode in ("logarithmic", "log"):
        mode = "logarithmic"
        s = np.linspace(math.log(r_min), math.log(r_max), M)
        r = np.exp(s)
        r[0], r[-1] = r_min, r_max
        h = np.diff(s)
        jac = r**N
    else:
        raise ValueError(f"unknown spacing mode {mode!r}")
    w = np.zeros(M)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    w *= jac
    w[0] += r_min**N / N
    cum = np.cumsum(w)[:-1]
    c = 2 * N * cum / ((r[1:] - r[:-1]) * (r[1:] + r[:-1]))
    for a in (r, w, c):
        a.setflags(write=False)
    return RadialGrid(ctx, r, mode, w, c)


def _values(u) -> np.ndarray:
    if isinstance(u, RadialField):
        return u.values
    return np.asarray(u, dtype=float)


def _flux_divergence(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """``A u`` where ``A = W L`` is the symmetric stiffness matrix."""
    F = grid.flux_coeffs * np.diff(u, axis=-1)
    out = np.zeros_like(u)
    out[..., :-1] += F
    out[..., 1:] -= F
    return out


def laplacian(grid: RadialGrid, u) -> np.ndarray:
    """Discrete radial Laplacian ``u'' + (N-1) u' / r``; works on stacks of fields."""
    return _flux_divergence(grid, _values(u)) / grid.quad_weights


def bilaplacian(grid: RadialGrid, u) -> np.ndarray:
    return laplacian(grid, laplacian(grid, u))


def radial_derivative(grid: RadialGrid, u) -> np.ndarray:
    """Second-order ``u'(r)`` on the (possibly non-uniform) nodes."""
    return np.gradient(_values(u), grid.nodes, axis=-1, edge_order=2)


def integrate(grid: RadialGrid, f) -> float:
    """``int_{R^N} f(|x|) dx`` for node values ``f``."""
    return grid.sigma * np.sum(grid.quad_weights * _values(f), axis=-1)


@dataclass(frozen=True)
class HVNorm:
    norm: float
    laplacian_sq: float
    potential_sq: float


def _potential(grid, V) -> np.ndarray:
    if V is None:
        return np.zeros(grid.M)
    V = np.broadcast_to(np.asarray(V, dtype=float), (grid.M,))
    if np.any(V < 0):
        raise ValueError("potential V must be nonnegative")
    if not np.all(np.isfinite(V)):
        raise ValueError("potential V must be finite at the nodes")
    return V


def norm_HV(grid: RadialGrid, V, u) -> HVNorm:
    """``(int |Lu|^2 + V u^2)^(1/2)`` with both addends."""
    V = _potential(grid, V)
    u = _values(u)
    lap = integrate(grid, laplacian(grid, u) ** 2)
    pot = integrate(grid, V * u**2)
    return HVNorm(np.sqrt(lap + pot), lap, pot)


def weighted_lq_norm(grid: RadialGrid, K, u, q: float) -> float:
    K = np.broadcast_to(np.asarray(K, dtype=float), (grid.M,))
    return integrate(grid, K * np.abs(_values(u)) ** q) ** (1.0 / q)


def sum_norm(grid: RadialGrid, K, u, q1: float, q2: float) -> float:
    """Upper bound on the norm of ``L^q1_K + L^q2_K``.

    The infimum over splittings ``u = u1 + u2`` is restricted to
    ``u1 = u 1_{B_R}``, ``u2 = u 1_{B_R^c}`` with ``R`` running over the gaps
    between nodes (including the empty and the full ball).
    """
    if not 1 < q1 <= q2:
        raise ValueError(f"need 1 < q1 <= q2, got q1={q1}, q2={q2}")
    K = np.broadcast_to(np.asarray(K, dtype=float), (grid.M,))
    a = np.abs(_values(u))
    d1 = grid.sigma * grid.quad_weights * K * a**q1
    d2 = grid.sigma * grid.quad_weights * K * a**q2
    inner = np.concatenate([[0.0], np.cumsum(d1)])
    outer = np.concatenate([np.cumsum(d2[::-1])[::-1], [0.0]])
    return float(np.min(np.maximum(inner ** (1 / q1), outer ** (1 / q2))))


class HVGram:
    """Discrete ``H^2_V`` inner product on fields clamped at ``r_max``.

    The Gram matrix ``A W^-1 A + W V`` is pentadiagonal; its leading
    ``(M-1) x (M-1)`` block (the last node is pinned to zero) is factored once.
    """

    def __init__(self, grid: RadialGrid, V=None):
        self.grid = grid
        self.V = _potential(grid, V)
        self.bands = self._assemble(self.V)
        d = self.bands[2]
        self._scale = 1.0 / np.sqrt(d)
        scaled = self.bands * _band_scale(self._scale)
        self._chol = sla.cholesky_banded(scaled, lower=False)

    def _assemble(self, extra_diag) -> np.ndarray:
        g = self.grid
        c = g.flux_coeffs
        main = np.zeros(g.M)
        main[:-1] -= c
        main[1:] -= c
        A = sp.diags([c, main, c], [-1, 0, 1], format="csr")
        P = A @ sp.diags(1.0 / g.quad_weights) @ A
        P = P + sp.diags(g.quad_weights * extra_diag)
        n = g.M - 1
        P = P[:n, :n].todia()
        ab = np.zeros((3, n))
        ab[2] = P.diagonal(0)
        ab[1, 1:] = P.diagonal(1)
        ab[0, 2:] = P.diagonal(2)
        return ab

    def hessian_bands(self, extra_diag) -> np.ndarray:
        """Full (l=u=2) band storage of ``Gram + W diag(extra_diag)``."""
        up = self.bands.copy()
        up[2] += self.grid.quad_weights[:-1] * np.asarray(extra_diag)[:-1]
        n = up.shape[1]
        ab = np.zeros((5, n))
        ab[0:3] = up
        ab[3, :-1] = up[1, 1:]
        ab[4, :-2] = up[0, 2:]
        return ab

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``Gram x = rhs`` on the free nodes; ``x[-1] = 0``."""
        s = self._scale
        y = sla.cho_solve_banded((self._chol, False), rhs[:-1] * s)
        out = np.zeros(self.grid.M)
        out[:-1] = y * s
        return out

    def inner(self, u, v) -> float:
        g = self.grid
        u, v = _values(u), _values(v)
        lu, lv = laplacian(g, u), laplacian(g, v)
        return integrate(g, lu * lv + self.V * u * v)

    def norm(self, u) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))

    def riesz(self, g: np.ndarray) -> np.ndarray:
        """Representative in ``H^2_V`` of ``h -> int g h`` (``g`` node values)."""
        return self.solve(self.grid.quad_weights * g)

    def dual_norm(self, g: np.ndarray) -> float:
        """Norm of ``h -> int g h`` in the dual of the clamped ``H^2_V``."""
        x = self.riesz(g)
        wg = self.grid.quad_weights * g
        return float(np.sqrt(max(np.dot(wg[:-1], x[:-1]), 0.0) * self.grid.sigma))


def _band_scale(s: np.ndarray) -> np.ndarray:
    out = np.ones((3, s.size))
    out[2] = s * s
    out[1, 1:] = s[1:] * s[:-1]
    out[0, 2:] = s[2:] * s[:-2]
    return out


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise ValueError("field does not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @cached_property
    def laplacian(self) -> np.ndarray:
        return laplacian(self.grid, self.values)


def save_field(path: Union[str, Path], grid: RadialGrid, values, extra: Optional[dict] = None):
    """Write ``r`` and values as text columns at full precision."""
    cols = {"r": grid.nodes, "u": _values(values)}
    if extra:
        cols.update({k: np.asarray(v) for k, v in extra.items()})
    data = np.column_stack(list(cols.values()))
    np.savetxt(path, data, fmt="%.17g", header=" ".join(cols), comments="# ")


def load_field(path: Union[str, Path]):
    """Return ``(r, values)`` from a file written by :func:`save_field`."""
    data = np.loadtxt(path, ndmin=2)
    return data[:, 0], data[:, 1]
