"""Euler functional of ``Δ²u + V u = K f(u) + Q`` on a radial grid.

    I(u) = 1/2 ||u||^2 - int K F(u) - int Q u

The gradient returned by :func:`gradient` is the node-wise strong form
``Δ²u + V u - K f(u) - Q``.  Because the discrete Laplacian is symmetric in
the quadrature pairing (see :mod:`radbilap.grid`), pairing it with ``h`` gives
the exact directional derivative of the discrete ``I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exponents import GrowthParams
from .grid import HVGram, RadialGrid, _values, bilaplacian, integrate, laplacian

__all__ = [
    "PotentialSpec",
    "SampledPotential",
    "NonlinearitySpec",
    "EnergyBreakdown",
    "Gradient",
    "QReport",
    "power_law_potential",
    "f_eval",
    "F_eval",
    "energy",
    "gradient",
    "check_Q_admissible",
]

RadialFn = Callable[[np.ndarray], np.ndarray]


def _zero(r):
    return np.zeros_like(r)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Radial potentials plus the growth data used to certify exponents."""

    V: RadialFn
    K: RadialFn
    Q: RadialFn = _zero
    origin: Optional[GrowthParams] = None
    infinity: Optional[GrowthParams] = None
    s: float = math.inf
    label: str = ""

    def sample(self, grid: RadialGrid) -> "SampledPotential":
        r = grid.nodes
        V = np.broadcast_to(np.asarray(self.V(r), dtype=float), r.shape).copy()
        K = np.broadcast_to(np.asarray(self.K(r), dtype=float), r.shape).copy()
        Q = np.broadcast_to(np.asarray(self.Q(r), dtype=float), r.shape).copy()
        return SampledPotential(grid, V, K, Q, spec=self)


@dataclass(frozen=True, eq=False)
class SampledPotential:
    grid: RadialGrid
    V: np.ndarray
    K: np.ndarray
    Q: np.ndarray
    spec: Optional[PotentialSpec] = None

    def __post_init__(self):
        N = self.grid.N
        for name in ("V", "K", "Q"):
            a = getattr(self, name)
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} is not finite at every node")
        if np.any(self.V < 0):
            raise ValueError("V must be nonnegative")
        if np.any(self.K <= 0):
            raise ValueError("K must be positive")
        if np.any(self.Q < 0):
            raise ValueError("Q must be nonnegative")
        if self.spec is not None and not self.spec.s > 2 * N / (N + 4):
            raise ValueError("K integrability exponent s must exceed 2N/(N+4)")


def _as_sampled(grid: RadialGrid, pot) -> SampledPotential:
    if isinstance(pot, SampledPotential):
        if pot.grid is not grid:
            raise ValueError("potential was sampled on a different grid")
        return pot
    return pot.sample(grid)


def power_law_potential(a: float, Q: RadialFn = _zero, beta0=0, beta_inf=0) -> PotentialSpec:
    """``V = r^-a``, ``K = r^(1-a)`` with their optimal growth parameters."""
    from .exponents import power_law_params

    origin, infinity = power_law_params(a, beta0, beta_inf)
    a = float(a)
    return PotentialSpec(
        V=lambda r: r**-a,
        K=lambda r: r ** (1 - a),
        Q=Q,
        origin=origin,
        infinity=infinity,
        label=f"power_law(a={a:g})",
    )


@dataclass(frozen=True)
class NonlinearitySpec:
    """Nonlinearity ``f`` with its primitive ``F``.

    ``pure_power``: ``f(t) = t^(q-1)`` for ``t >= 0``.
    ``capped_pair``: ``f(t) = M min(t^(q1-1), t^(q2-1))``; the two powers
    cross at ``t = 1``.
    ``custom``: caller supplies ``f`` and ``F`` (and optionally ``fprime``)
    as vectorized callables on ``t >= 0``.

    Negative arguments follow ``sign_convention``: ``zero_on_negatives``
    gives ``f = F = 0`` for ``t < 0``; ``odd`` extends ``f`` oddly (so ``F``
    is even).
    """

    kind: str = "pure_power"
    q: Optional[float] = None
    M: float = 1.0
    q1: Optional[float] = None
    q2: Optional[float] = None
    theta: Optional[float] = None
    t0: Optional[float] = None
    m: Optional[float] = None
    sign_convention: str = "zero_on_negatives"
    f: Optional[RadialFn] = field(default=None, compare=False)
    F: Optional[RadialFn] = field(default=None, compare=False)
    fprime: Optional[RadialFn] = field(default=None, compare=False)

    def __post_init__(self):
        if self.sign_convention not in ("zero_on_negatives", "odd"):
            raise ValueError(f"unknown sign convention {self.sign_convention!r}")
        if self.kind == "pure_power":
            if self.q is None or not self.q > 1:
                raise ValueError("pure_power needs q > 1")
        elif self.kind == "capped_pair":
            if self.q1 is None or self.q2 is None or min(self.q1, self.q2) <= 1:
                raise ValueError("capped_pair needs q1, q2 > 1")
            if not self.M > 0:
                raise ValueError("capped_pair needs M > 0")
        elif self.kind == "custom":
            if self.f is None or self.F is None:
                raise ValueError("custom nonlinearity needs both f and its primitive F")
        elif self.kind != "zero":
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")

    @classmethod
    def zero(cls) -> "NonlinearitySpec":
        return cls(kind="zero")

    @property
    def exponents(self):
        """``(q1, q2)`` for the growth condition, or ``None``."""
        if self.kind == "pure_power":
            return (self.q, self.q)
        if self.kind == "capped_pair":
            return (min(self.q1, self.q2), max(self.q1, self.q2))
        return None

    @property
    def is_odd(self) -> bool:
        return self.sign_convention == "odd"

    # on t >= 0
    def _f_pos(self, t):
        if self.kind == "pure_power":
            return t ** (self.q - 1)
        if self.kind == "capped_pair":
            return self.M * np.minimum(t ** (self.q1 - 1), t ** (self.q2 - 1))
        if self.kind == "zero":
            return np.zeros_like(t)
        return np.asarray(self.f(t), dtype=float)

    def _F_pos(self, t):
        if self.kind == "pure_power":
            return t**self.q / self.q
        if self.kind == "capped_pair":
            lo, hi = min(self.q1, self.q2), max(self.q1, self.q2)
            below = t**hi / hi
            above = 1 / hi + (t**lo - 1) / lo
            return self.M * np.where(t <= 1, below, above)
        if self.kind == "zero":
            return np.zeros_like(t)
        return np.asarray(self.F(t), dtype=float)

    def _fp_pos(self, t):
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "pure_power":
                return (self.q - 1) * t ** (self.q - 2)
            if self.kind == "capped_pair":
                lo, hi = min(self.q1, self.q2), max(self.q1, self.q2)
                q = np.where(t <= 1, hi, lo)
                return self.M * (q - 1) * t ** (q - 2)
            if self.kind == "zero":
                return np.zeros_like(t)
            if self.fprime is not None:
                return np.asarray(self.fprime(t), dtype=float)
            h = 1e-6 * np.maximum(t, 1.0)
            return (self._f_pos(t + h) - self._f_pos(np.abs(t - h))) / (2 * h)

    def f_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        pos = self._f_pos(a)
        if self.is_odd:
            return np.sign(t) * pos
        return np.where(t >= 0, pos, 0.0)

    def F_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        pos = self._F_pos(np.abs(t))
        if self.is_odd:
            return pos
        return np.where(t >= 0, pos, 0.0)

    def fprime_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        pos = self._fp_pos(np.abs(t))
        if self.is_odd:
            return pos
        return np.where(t >= 0, pos, 0.0)


def f_eval(spec: NonlinearitySpec, t):
    out = spec.f_values(t)
    return float(out) if np.ndim(out) == 0 else out


def F_eval(spec: NonlinearitySpec, t):
    out = spec.F_values(t)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EnergyBreakdown:
    half_norm_sq: float
    K_term: float
    Q_term: float
    total: float

    @property
    def norm_sq(self) -> float:
        return 2 * self.half_norm_sq


def energy(grid: RadialGrid, pot, nl: NonlinearitySpec, u) -> EnergyBreakdown:
    sp = _as_sampled(grid, pot)
    u = _values(u)
    lap = laplacian(grid, u)
    half = 0.5 * integrate(grid, lap * lap + sp.V * u * u)
    kt = integrate(grid, sp.K * nl.F_values(u))
    qt = integrate(grid, sp.Q * u)
    return EnergyBreakdown(float(half), float(kt), float(qt), float(half - kt - qt))


@dataclass(frozen=True, eq=False)
class Gradient:
    """Strong-form gradient with its residual norms.

    ``dual_L2`` is the L² norm of the node-wise gradient; ``dual_HV`` is the
    norm of ``I'(u)`` in the dual of the clamped discrete ``H^2_V``.
    """

    values: np.ndarray
    dual_L2: float
    dual_HV: float

    def pair(self, grid: RadialGrid, h) -> float:
        return float(integrate(grid, self.values * _values(h)))


def strong_form(grid: RadialGrid, sp: SampledPotential, nl: NonlinearitySpec, u) -> np.ndarray:
    u = _values(u)
    g = bilaplacian(grid, u) + sp.V * u - sp.K * nl.f_values(u) - sp.Q
    g[..., -1] = 0.0
    return g


def gradient(
    grid: RadialGrid,
    pot,
    nl: NonlinearitySpec,
    u,
    gram: Optional[HVGram] = None,
) -> Gradient:
    sp = _as_sampled(grid, pot)
    g = strong_form(grid, sp, nl, u)
    if gram is None:
        gram = HVGram(grid, sp.V)
    dual_l2 = float(np.sqrt(integrate(grid, g * g)))
    return Gradient(g, dual_l2, gram.dual_norm(g))


@dataclass(frozen=True)
class QReport:
    """Sufficient integrals for continuity of ``h -> int Q h``.

    ``rellich``: ``int Q^2 r^(N+3) dr``; ``sobolev``:
    ``int Q^(2N/(N+4)) r^(N-1) dr``; ``potential``: ``int Q^2/V r^(N-1) dr``.
    ``flags`` maps each name to ``None`` or to the end (``"origin"``,
    ``"infinity"``) where the truncated integral still grows like a
    divergent one.  ``L0`` is the discrete dual norm of the functional.
    """

    rellich: float
    sobolev: float
    potential: float
    flags: dict
    L0: float

    @property
    def finite(self) -> dict:
        return {
            k: bool(np.isfinite(getattr(self, k)) and self.flags[k] is None)
            for k in ("rellich", "sobolev", "potential")
        }


def _end_flag(grid: RadialGrid, vals: np.ndarray) -> Optional[str]:
    """Which end (if any) the truncated integral ``int vals r^(N-1) dr`` is still growing at.

    The density per unit ``log r`` is ``rho = vals r^N``.  An integrand
    behaving like ``r^p`` has ``rho ~ r^(p+N)``, and the integral diverges at
    the origin iff ``rho`` fails to decay there.  We compare ``rho`` at each
    end with its value one decade inward; a ratio above 1/2 means the local
    exponent is at most about 0.3, i.e. at or near the divergent borderline.
    """
    r = grid.nodes
    if r[-1] / r[0] < 100:
        return None
    rho = np.abs(vals) * r**grid.N
    peak = rho.max()
    if not peak > 0:
        return None
    for end, i in (("origin", 0), ("infinity", grid.M - 1)):
        j = int(np.argmin(np.abs(np.log(r / (r[i] * (10.0 if i == 0 else 0.1))))))
        if rho[i] > 1e-12 * peak and rho[i] >= 0.5 * rho[j]:
            return end
    return None


def check_Q_admissible(grid: RadialGrid, pot) -> QReport:
    sp = _as_sampled(grid, pot)
    N, w, r, Q, V = grid.N, grid.quad_weights, grid.nodes, sp.Q, sp.V
    p = 2 * N / (N + 4)
    integrands = {"rellich": Q**2 * r**4, "sobolev": Q**p}
    with np.errstate(divide="ignore", invalid="ignore"):
        integrands["potential"] = np.where(Q > 0, Q**2 / V, 0.0)
    vals = {k: float(np.sum(w * f)) for k, f in integrands.items()}
    flags = {
        k: (_end_flag(grid, f) if np.isfinite(vals[k]) else "V=0")
        for k, f in integrands.items()
    }
    L0 = HVGram(grid, V).dual_norm(Q) if np.any(Q) else 0.0
    return QReport(vals["rellich"], vals["sobolev"], vals["potential"], flags, float(L0))
