"""Numerical checks of pointwise decay bounds and embedding functionals.

Pointwise bounds compare node values against closed-form envelopes
``C ||.|| r^-nu``; the embedding functionals

    S0(q, R)   = sup_{||u||=1} int_{B_R} K |u|^q
    Sinf(q, R) = sup_{||u||=1} int_{B_R^c} K |u|^q

(and their two-field versions ``R0``/``Rinf`` with ``K |u|^(q-1) |h|``) are
estimated from below by maximizing over a finite sample of fields.  The same
sample is reused for every radius, so the estimates inherit the monotonicity
of the true functionals in ``R``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .energy import SampledPotential, _as_sampled
from .exponents import HypothesisError
from .grid import RadialGrid, _potential, _values, integrate, laplacian, radial_derivative

__all__ = [
    "DecayBoundReport",
    "EmbeddingEstimate",
    "stima1_constant",
    "stima2_constant",
    "c_infinity",
    "c_zero",
    "check_pointwise",
    "check_decay_outer",
    "check_decay_inner",
    "random_bump_fields",
    "translated_bumps",
    "estimate_S",
    "estimate_R",
    "write_estimates_csv",
    "write_bounds_csv",
]

DEFAULT_TOL = 1e-3


def stima1_constant(N: int) -> float:
    """Constant in ``|u(r)| <= C ||Delta u|| r^-(N-4)/2``."""
    sigma = 2 * math.pi ** (N / 2) / math.gamma(N / 2)
    return (2 / (N - 4)) / math.sqrt(N * sigma)


def stima2_constant(N: int) -> float:
    """Constant in ``|u'(r)| <= C ||Delta u|| r^-(N-2)/2``."""
    sigma = 2 * math.pi ** (N / 2) / math.gamma(N / 2)
    return 1 / math.sqrt(N * sigma)


def c_infinity(N: int, gamma: float) -> float:
    sigma = 2 * math.pi ** (N / 2) / math.gamma(N / 2)
    return (8 / (N * (2 * (N - 2) - gamma))) ** 0.25 / math.sqrt(sigma)


def c_zero(N: int) -> float:
    sigma = 2 * math.pi ** (N / 2) / math.gamma(N / 2)
    return math.sqrt(max(2 / math.sqrt(N), N - 3.5) / sigma)


@dataclass(frozen=True)
class DecayBoundReport:
    """Observed ``|u| r^nu / (C ||u||)`` maximized over the checked nodes.

    ``constant_used`` includes every factor multiplying the norm (for the
    potential-dependent bounds this folds in the ``lambda`` factors).
    """

    bound_kind: str
    constant_used: float
    max_ratio: float
    passed: bool
    exponent: float = math.nan
    lam: float = math.nan
    r_at_max: float = math.nan
    tol: float = DEFAULT_TOL


def _report(kind, const, envelope_num, r, nu, norm, tol, lam=math.nan) -> DecayBoundReport:
    if not norm > 0 or envelope_num.size == 0 or not np.any(envelope_num):
        return DecayBoundReport(kind, const, 0.0, True, nu, lam, math.nan, tol)
    ratio = envelope_num * r**nu / (const * norm)
    k = int(np.argmax(ratio))
    mx = float(ratio[k])
    return DecayBoundReport(kind, const, mx, bool(mx <= 1 + tol), nu, lam, float(r[k]), tol)


def _hv_norm(grid: RadialGrid, V, u) -> float:
    lap = laplacian(grid, u)
    return float(np.sqrt(integrate(grid, lap * lap + V * u * u)))


def check_pointwise(
    grid: RadialGrid, V, u, kind: str, tol: float = DEFAULT_TOL, constant_scale: float = 1.0
) -> DecayBoundReport:
    """Radial bounds that hold for every field with ``Delta u`` in L².

    ``stima1``: ``|u| <= C1 ||Delta u|| r^-(N-4)/2``;
    ``stima2``: ``|u'| <= C2 ||Delta u|| r^-(N-2)/2``.
    ``V`` only enters through validation; the right side uses ``||Delta u||``.
    """
    _potential(grid, V)
    u = _values(u)
    N = grid.N
    lap_norm = float(np.sqrt(integrate(grid, laplacian(grid, u) ** 2)))
    if kind == "stima1":
        const, nu, num = stima1_constant(N), (N - 4) / 2, np.abs(u)
    elif kind == "stima2":
        const, nu, num = stima2_constant(N), (N - 2) / 2, np.abs(radial_derivative(grid, u))
    else:
        raise ValueError(f"unknown pointwise bound {kind!r}")
    return _report(kind, const * constant_scale, num, grid.nodes, nu, lap_norm, tol)


def _sampled_V(grid, pot):
    if isinstance(pot, SampledPotential) or hasattr(pot, "sample"):
        return _as_sampled(grid, pot).V
    return _potential(grid, pot)


def check_decay_outer(
    grid: RadialGrid,
    pot,
    u,
    gamma: float,
    R2: float = 1.0,
    tol: float = DEFAULT_TOL,
    constant_scale: float = 1.0,
) -> DecayBoundReport:
    """``|u| <= c_inf lambda_inf^-1/4 ||u|| r^-(2(N-2)-gamma)/4`` for ``r > R2``.

    ``lambda_inf`` is the node-wise minimum of ``r^gamma V`` over ``r > R2``.
    """
    N = grid.N
    if gamma > 14 / 3:
        raise HypothesisError(f"outer decay bound needs gamma <= 14/3, got {gamma}")
    V = _sampled_V(grid, pot)
    r = grid.nodes
    mask = r > R2
    if mask.sum() < 2:
        raise HypothesisError("no nodes beyond R2")
    weighted = r[mask] ** gamma * V[mask]
    lam = float(weighted.min())
    if not lam > 0:
        raise HypothesisError("r^gamma V vanishes beyond R2")
    if weighted[-1] < weighted[-2] * (1 - 1e-12) and weighted[-1] == lam:
        raise HypothesisError("r^gamma V keeps decreasing at r_max: its infimum is likely 0")
    const = c_infinity(N, gamma) * lam**-0.25 * constant_scale
    u = _values(u)
    nu = (2 * (N - 2) - gamma) / 4
    return _report("outer_54", const, np.abs(u[mask]), r[mask], nu, _hv_norm(grid, V, u), tol, lam)


def check_decay_inner(
    grid: RadialGrid,
    pot,
    u,
    R: float = 1.0,
    gamma: float = 4.0,
    tol: float = DEFAULT_TOL,
    constant_scale: float = 1.0,
) -> DecayBoundReport:
    """``|u| <= c0 (lambda0^-1/2 + R^((gamma-4)/2)/lambda0)^1/2 ||u|| r^-(2N-4-gamma)/4`` on ``r < R``.

    ``lambda0`` is the node-wise minimum of ``r^gamma V`` below ``R``.
    """
    N = grid.N
    if gamma < 4:
        raise HypothesisError(f"inner decay bound needs gamma >= 4, got {gamma}")
    V = _sampled_V(grid, pot)
    r = grid.nodes
    mask = r < R
    if mask.sum() < 2:
        raise HypothesisError("no nodes below R")
    weighted = r[mask] ** gamma * V[mask]
    lam = float(weighted.min())
    if not lam > 0:
        raise HypothesisError("r^gamma V vanishes below R")
    if weighted[0] < weighted[1] * (1 - 1e-12) and weighted[0] == lam:
        raise HypothesisError("r^gamma V keeps decreasing toward the origin: its infimum is likely 0")
    const = c_zero(N) * math.sqrt(lam**-0.5 + R ** ((gamma - 4) / 2) / lam) * constant_scale
    u = _values(u)
    nu = (2 * N - 4 - gamma) / 4
    return _report("inner_55", const, np.abs(u[mask]), r[mask], nu, _hv_norm(grid, V, u), tol, lam)


# -- random and witness fields ------------------------------------------------


def random_bump_fields(
    grid: RadialGrid,
    trials: int,
    seed: int,
    max_bumps: int = 3,
    width_range=(0.15, 1.5),
    margin: float = 6.0,
) -> np.ndarray:
    """Mixtures of Gaussian bumps in ``log r``; shape ``(trials, M)``.

    Trial ``i`` draws from its own child of ``SeedSequence(seed)``, so the
    stack does not depend on how trials are scheduled.  Centers keep
    ``margin`` widths away from both ends so fields vanish there to rounding.
    """
    s = np.log(grid.nodes)
    lo_s, hi_s = s[0], s[-1]
    out = np.zeros((trials, grid.M))
    children = np.random.SeedSequence(seed).spawn(trials)
    for i, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        nb = int(rng.integers(1, max_bumps + 1))
        for _ in range(nb):
            w = rng.uniform(*width_range)
            a, b = lo_s + margin * w, hi_s - margin * w
            if not a < b:
                w = (hi_s - lo_s) / (2 * margin + 1)
                a, b = lo_s + margin * w, hi_s - margin * w
            c = rng.uniform(a, b)
            out[i] += rng.uniform(0.2, 1.0) * np.exp(-(((s - c) / w) ** 2))
    out[:, -1] = 0.0
    return out


def translated_bumps(grid: RadialGrid, centers: Iterable[float]) -> np.ndarray:
    """Bumps ``exp(-((r-c)/sqrt(c))^2)`` that move out with ``c``.

    The width grows like ``sqrt(c)``, which for ``V`` decaying like ``r^-2``
    keeps both parts of the norm comparable as the bump is translated.
    """
    r = grid.nodes
    rows = [np.exp(-(((r - c) / math.sqrt(c)) ** 2)) for c in centers]
    out = np.array(rows, dtype=float).reshape(-1, grid.M)
    out[:, -1] = 0.0
    return out


def _normalize(grid, V, fields: np.ndarray) -> np.ndarray:
    lap = laplacian(grid, fields)
    n = np.sqrt(integrate(grid, lap * lap + V * fields * fields))
    keep = n > 0
    return fields[keep] / n[keep, None]


@dataclass(frozen=True)
class EmbeddingEstimate:
    functional: str
    q: float
    R_values: tuple
    estimates: tuple
    trend_slope: float
    trials: int
    seed: int
    witnesses: int = 0
    witness_estimates: tuple = ()


def _trend(R, est) -> float:
    R, est = np.asarray(R, float), np.asarray(est, float)
    ok = est > 0
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(R[ok]), np.log(est[ok]), 1)[0])


def _cumulative(grid, dens, radii, which):
    """Integrals of node densities over ``B_R`` (or its complement) per radius."""
    r = grid.nodes
    cum = np.concatenate([np.zeros((dens.shape[0], 1)), np.cumsum(dens, axis=1)], axis=1)
    total = cum[:, -1]
    out = []
    for R in radii:
        k = int(np.searchsorted(r, R, side="left"))  # nodes with r < R
        inner = cum[:, k]
        out.append(inner if which.endswith("0") else total - inner)
    return np.array(out)  # (len(radii), n_fields)


def _sample_fields(grid, V, trials, seed, witness_centers):
    if trials < 100:
        raise ValueError("need at least 100 trials")
    U = _normalize(grid, V, random_bump_fields(grid, trials, seed))
    nw = 0
    if witness_centers:
        W = _normalize(grid, V, translated_bumps(grid, witness_centers))
        nw = W.shape[0]
        U = np.vstack([U, W])
    return U, nw


def _default_witness_centers(grid: RadialGrid, which: str):
    r1 = grid.nodes[-1]
    if which.endswith("inf"):
        # keep a few widths inside r_max
        cs = [c for c in 2.0 ** np.arange(-2, 40) if c + 8 * math.sqrt(c) < r1]
        return cs
    return []


def estimate_S(
    grid: RadialGrid,
    pot,
    q: float,
    radii: Sequence[float],
    trials: int = 200,
    which: str = "S0",
    seed: int = 0,
    witness_centers: Optional[Sequence[float]] = None,
) -> EmbeddingEstimate:
    """Sampled lower bounds for ``S0(q, R)`` or ``Sinf(q, R)``.

    The sample is ``trials`` random bump mixtures plus, for ``Sinf``, the
    translated-bump family (``witness_centers`` overrides the default).
    """
    if which not in ("S0", "Sinf"):
        raise ValueError(f"which must be S0 or Sinf, got {which!r}")
    sp = _as_sampled(grid, pot)
    if witness_centers is None:
        witness_centers = _default_witness_centers(grid, which)
    U, nw = _sample_fields(grid, sp.V, trials, seed, witness_centers)
    dens = grid.sigma * grid.quad_weights * sp.K * np.abs(U) ** q
    vals = _cumulative(grid, dens, radii, which)
    est = tuple(float(v) for v in vals.max(axis=1))
    wit = tuple(float(v) for v in vals[:, -nw:].max(axis=1)) if nw else ()
    return EmbeddingEstimate(
        which, q, tuple(map(float, radii)), est, _trend(radii, est), trials, seed, nw, wit
    )


def estimate_R(
    grid: RadialGrid,
    pot,
    q: float,
    radii: Sequence[float],
    trials: int = 200,
    which: str = "R0",
    seed: int = 0,
    witness_centers: Optional[Sequence[float]] = None,
) -> EmbeddingEstimate:
    """Sampled lower bounds for ``R0(q, R)`` or ``Rinf(q, R)``.

    Pairs are ``(u_i, h_i)`` with ``h`` drawn independently, together with
    the diagonal pairs ``(u_i, u_i)``; the latter make each estimate at least
    the matching :func:`estimate_S` value for the same seed.
    """
    if which not in ("R0", "Rinf"):
        raise ValueError(f"which must be R0 or Rinf, got {which!r}")
    sp = _as_sampled(grid, pot)
    if witness_centers is None:
        witness_centers = _default_witness_centers(grid, which)
    U, nw = _sample_fields(grid, sp.V, trials, seed, witness_centers)
    H = _normalize(grid, sp.V, random_bump_fields(grid, U.shape[0], seed + 1))
    base = grid.sigma * grid.quad_weights * sp.K * np.abs(U) ** (q - 1)
    dens = np.vstack([base * np.abs(H), base * np.abs(U)])
    vals = _cumulative(grid, dens, radii, which)
    est = tuple(float(v) for v in vals.max(axis=1))
    return EmbeddingEstimate(which, q, tuple(map(float, radii)), est, _trend(radii, est), trials, seed, nw)


# -- CSV ----------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_estimates_csv(path: Union[str, Path], estimates: Iterable[EmbeddingEstimate]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["functional", "q", "R", "estimate", "trials", "seed"])
        for e in estimates:
            for R, v in zip(e.R_values, e.estimates):
                w.writerow([e.functional, _fmt(float(e.q)), _fmt(R), _fmt(v), e.trials, e.seed])


def write_bounds_csv(path: Union[str, Path], rows: Iterable[tuple]):
    """Rows are ``(label, DecayBoundReport)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "kind", "constant", "exponent", "lambda", "max_ratio", "r_at_max", "pass"])
        for label, rep in rows:
            w.writerow(
                [
                    label,
                    rep.bound_kind,
                    _fmt(rep.constant_used),
                    _fmt(rep.exponent),
                    _fmt(rep.lam),
                    _fmt(rep.max_ratio),
                    _fmt(rep.r_at_max),
                    _fmt(rep.passed),
                ]
            )
