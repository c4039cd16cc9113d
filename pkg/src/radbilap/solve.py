"""Critical points of the discrete Euler functional.

Two drivers:

* :func:`minimize` for coercive (sublinear) problems: Sobolev-gradient
  descent with Armijo backtracking, then Newton steps once the Hessian is
  positive definite along the search direction.  Every accepted step
  decreases the energy.
* :func:`mountain_pass` for superlinear problems with ``Q = 0``: a
  discretized path from ``0`` to a point of negative energy is deformed by
  descending its highest point and re-spacing it by arc length; the saddle
  estimate is then polished with Newton's method on the indefinite Hessian.

Search directions default to the ``H^2_V`` Riesz representative of the
gradient (one banded Cholesky solve per step).  The diagonal scaling
``1/(1+V)`` is available with ``preconditioner="diagonal"``, but its
condition number grows like ``h^-4`` so it is only usable on coarse grids.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .energy import (
    EnergyBreakdown,
    NonlinearitySpec,
    SampledPotential,
    _as_sampled,
    energy,
    strong_form,
)
from .exponents import DomainError, HypothesisError, certify_pair
from .grid import HVGram, RadialField, RadialGrid, integrate

__all__ = [
    "SolverConfig",
    "SolveResult",
    "GeometryProbe",
    "SolverError",
    "DivergenceError",
    "GeometryError",
    "StepSizeError",
    "minimize",
    "mountain_pass",
    "ray_scale_endpoint",
    "geometry_probe",
    "newton_polish",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class DivergenceError(SolverError):
    """Energy unbounded below along the iteration."""


class GeometryError(SolverError):
    """No mountain-pass geometry detected."""


class StepSizeError(SolverError):
    """Line search or path deformation collapsed."""


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 500
    grad_tol: float = 1e-8
    step_init: float = 1.0
    backtrack: float = 0.5
    armijo_c: float = 1e-4
    min_step: float = 1e-12
    path_points: int = 32
    deform_steps: int = 400
    path_tol: float = 1e-3
    preconditioner: str = "riesz"
    newton: bool = True
    seed_norm: float = 1e-2
    lambda_max: float = 2.0**30
    divergence_norm: float = 1e100

    def __post_init__(self):
        for name in ("grad_tol", "step_init", "armijo_c", "min_step", "path_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.path_points < 8:
            raise ValueError("mountain pass needs at least 8 path points")
        if self.max_iters < 1 or self.deform_steps < 1:
            raise ValueError("iteration limits must be positive")
        if self.preconditioner not in ("riesz", "diagonal"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")
        if not self.lambda_max >= 1:
            raise ValueError("lambda_max must be at least 1")


@dataclass(frozen=True, eq=False)
class SolveResult:
    u: RadialField
    energy: EnergyBreakdown
    residual: float
    iterations: int
    classification: str
    nonneg_violation: float
    residual_L2: float = math.nan
    nehari_rhs: float = math.nan
    history: tuple = field(default=(), repr=False)

    @property
    def nehari_gap(self) -> float:
        """Relative gap in ``||u||^2 = int K f(u) u``."""
        n2 = self.energy.norm_sq
        return abs(n2 - self.nehari_rhs) / max(abs(n2), 1e-300)


class _Problem:
    def __init__(self, grid: RadialGrid, pot, nl: NonlinearitySpec, cfg: SolverConfig):
        self.grid = grid
        self.sp: SampledPotential = _as_sampled(grid, pot)
        self.nl = nl
        self.cfg = cfg
        self.gram = HVGram(grid, self.sp.V)
        self.n_energy = 0

    def energy(self, u) -> float:
        self.n_energy += 1
        return energy(self.grid, self.sp, self.nl, u).total

    def energy_noise(self, u) -> float:
        """Rounding level of the energy: a few ulps of its largest addend."""
        eb = energy(self.grid, self.sp, self.nl, u)
        scale = eb.half_norm_sq + abs(eb.K_term) + abs(eb.Q_term)
        return 1e-13 * max(scale, 1e-300)

    def grad(self, u) -> np.ndarray:
        return strong_form(self.grid, self.sp, self.nl, u)

    def residual(self, g) -> float:
        return self.gram.dual_norm(g)

    def direction(self, g) -> np.ndarray:
        if self.cfg.preconditioner == "riesz":
            return -self.gram.riesz(g)
        d = -g / (1.0 + self.sp.V)
        d[-1] = 0.0
        return d

    def slope(self, g, d) -> float:
        return float(integrate(self.grid, g * d))

    def hessian_bands(self, u) -> np.ndarray:
        fp = self.nl.fprime_values(u)
        # f' is unbounded at 0 for sublinear powers; cap it at a level where
        # the diagonal entry is still finite
        fp = np.where(np.isfinite(fp), fp, 0.0)
        fp = np.minimum(fp, 1e300 / max(self.sp.K.max(), 1.0))
        return self.gram.hessian_bands(-self.sp.K * fp)

    def newton_direction(self, u, g) -> Optional[np.ndarray]:
        ab = self.hessian_bands(u)
        rhs = -self.grid.quad_weights[:-1] * g[:-1]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", sla.LinAlgWarning)
                x = sla.solve_banded((2, 2), ab, rhs, check_finite=False)
        except (np.linalg.LinAlgError, sla.LinAlgWarning, ValueError):
            return None
        if not np.all(np.isfinite(x)):
            return None
        d = np.zeros(self.grid.M)
        d[:-1] = x
        return d

    def result(self, u, iters, cls, history=()) -> SolveResult:
        g = self.grad(u)
        eb = energy(self.grid, self.sp, self.nl, u)
        rhs = float(integrate(self.grid, self.sp.K * self.nl.f_values(u) * u))
        return SolveResult(
            u=RadialField(self.grid, u),
            energy=eb,
            residual=self.residual(g),
            iterations=iters,
            classification=cls,
            nonneg_violation=float(max(0.0, -np.min(u))),
            residual_L2=float(np.sqrt(integrate(self.grid, g * g))),
            history=tuple(history),
            nehari_rhs=rhs,
        )


def _seed(grid: RadialGrid, gram: HVGram, target_norm: float) -> np.ndarray:
    u = np.exp(-grid.nodes**2)
    u[-1] = 0.0
    return u * (target_norm / gram.norm(u))


def _check_sublinear(grid, sp: SampledPotential, nl: NonlinearitySpec):
    ex = nl.exponents
    if ex is not None:
        q1, q2 = ex
        if not (1 < q1 <= q2 <= 2 and (q2 < 2 or q1 < 2)):
            raise DomainError(f"minimize needs exponents in (1, 2] with min below 2, got {ex}")
    spec = sp.spec
    if ex is None or spec is None or spec.origin is None or spec.infinity is None:
        warnings.warn("exponents not certified: growth data missing", stacklevel=3)
        return
    cert = certify_pair(grid.N, spec.origin, spec.infinity, ex[0], ex[1])
    if not cert.certified:
        warnings.warn(f"exponents not certified: {cert.failing}", stacklevel=3)


def _line_search(prob: _Problem, u, E, g, d, step, project):
    cfg = prob.cfg
    slope = prob.slope(g, d)
    if not slope < 0:
        return None
    s = step
    while s >= cfg.min_step:
        v = u + s * d
        if project:
            v = _project(prob, v)
        with np.errstate(over="ignore", invalid="ignore"):
            Ev = prob.energy(v)
        if Ev == -math.inf:
            raise DivergenceError("energy overflowed to -inf: it is not bounded below")
        if not np.isfinite(Ev):
            raise SolverError("non-finite energy during line search")
        if Ev <= E + cfg.armijo_c * s * slope:
            return v, Ev, s
        s *= cfg.backtrack
    return None


def _residual_step(prob: _Problem, u, E, res, d, noise):
    s = 1.0
    while s >= 1e-4:
        v = u + s * d
        Ev = prob.energy(v)
        if Ev <= E + noise and prob.residual(prob.grad(v)) < res:
            return v, Ev, s
        s *= 0.5
    return None


def _project(prob: _Problem, v):
    # |v| lowers the energy in the continuum; keep it only when it does here
    a = np.abs(v)
    if np.array_equal(a, v):
        return v
    return a if prob.energy(a) <= prob.energy(v) else v


def minimize(
    grid: RadialGrid,
    pot,
    nl: NonlinearitySpec,
    cfg: SolverConfig = SolverConfig(),
    u0=None,
) -> SolveResult:
    prob = _Problem(grid, pot, nl, cfg)
    sp = prob.sp
    _check_sublinear(grid, sp, nl)
    project = nl.is_odd and bool(np.all(sp.Q >= 0))
    u = _seed(grid, prob.gram, cfg.seed_norm) if u0 is None else np.array(u0, dtype=float)
    u[-1] = 0.0
    E = prob.energy(u)
    hist: List[float] = [E]
    it = 0
    res = math.inf
    for it in range(1, cfg.max_iters + 1):
        g = prob.grad(u)
        res = prob.residual(g)
        if not np.isfinite(res):
            raise SolverError("non-finite gradient")
        if res <= cfg.grad_tol:
            it -= 1
            break
        noise = prob.energy_noise(u)
        step = None
        if cfg.newton:
            d = prob.newton_direction(u, g)
            if d is not None:
                if -prob.slope(g, d) > noise:
                    step = _line_search(prob, u, E, g, d, 1.0, project)
                else:
                    # energy is flat to rounding here: use the residual as merit
                    step = _residual_step(prob, u, E, res, d, noise)
        if step is None:
            d = prob.direction(g)
            step = _line_search(prob, u, E, g, d, cfg.step_init, project)
        if step is None:
            log.info("line search stalled at residual %.3e", res)
            break
        u, E_new, _ = step
        if E_new > E + noise:
            raise AssertionError("energy increased on an accepted step")
        E = min(E, E_new)
        hist.append(E_new)
        if not np.all(np.isfinite(u)) or prob.gram.norm(u) > cfg.divergence_norm:
            raise DivergenceError("iterates unbounded: energy is not coercive for this setup")
    out = prob.result(u, it, "minimizer", hist)
    if out.residual > cfg.grad_tol:
        return replace(out, classification="failed")
    if _f4_holds(nl) and not np.any(sp.Q) and not out.energy.total < 0:
        raise AssertionError("minimum energy is not negative although inf I < 0")
    return out


def _f4_holds(nl: NonlinearitySpec) -> bool:
    # F(t) >= m t^theta near 0 with theta < 2 holds for pure powers and
    # capped pairs with an exponent below 2
    if nl.kind == "pure_power":
        return nl.q < 2
    if nl.kind == "capped_pair":
        return max(nl.q1, nl.q2) < 2
    return nl.theta is not None and nl.m is not None and nl.theta < 2 and nl.m > 0


def ray_scale_endpoint(
    grid: RadialGrid,
    pot,
    nl: NonlinearitySpec,
    u0,
    lambda_max: float = 2.0**30,
):
    """Smallest ``lambda`` in ``1, 2, 4, ...`` with ``I(lambda u0) < 0``."""
    sp = _as_sampled(grid, pot)
    u0 = np.asarray(getattr(u0, "values", u0), dtype=float)
    if np.any(u0 < 0):
        raise ValueError("ray seed must be nonnegative")
    if u0[-1] != 0:
        raise ValueError("ray seed must vanish at r_max")
    if nl.t0 is not None and not np.any(u0 >= nl.t0):
        raise ValueError("ray seed never reaches t0")
    lam = 1.0
    while lam <= lambda_max:
        v = lam * u0
        if energy(grid, sp, nl, v).total < 0:
            return lam, RadialField(grid, v)
        lam *= 2
    raise GeometryError(f"I(lambda u0) >= 0 for all lambda <= {lambda_max:g}")


@dataclass(frozen=True)
class GeometryProbe:
    rho: float
    inf_estimate: float
    radii: tuple
    minima: tuple


def geometry_probe(
    grid: RadialGrid,
    pot,
    nl: NonlinearitySpec,
    directions: Sequence[np.ndarray],
    radii: Optional[Sequence[float]] = None,
) -> GeometryProbe:
    """Sampled ``min I`` over spheres ``||v|| = rho``.

    The minimum over the given directions is an upper estimate of the
    infimum over the sphere; the returned ``rho`` maximizes it.
    """
    sp = _as_sampled(grid, pot)
    gram = HVGram(grid, sp.V)
    dirs = []
    for d in directions:
        d = np.array(getattr(d, "values", d), dtype=float)
        d[-1] = 0.0
        n = gram.norm(d)
        if n > 0:
            dirs.append(d / n)
    if not dirs:
        raise ValueError("need at least one nonzero direction")
    if radii is None:
        radii = np.geomspace(1e-3, 1e2, 51)
    mins = tuple(min(energy(grid, sp, nl, rho * d).total for d in dirs) for rho in radii)
    k = int(np.argmax(mins))
    return GeometryProbe(float(radii[k]), float(mins[k]), tuple(map(float, radii)), mins)


_STALL = 25


def _path_energies(prob: _Problem, path) -> np.ndarray:
    return np.array([prob.energy(p) for p in path])


def _respace(prob: _Problem, path: np.ndarray) -> np.ndarray:
    seg = np.array([prob.gram.norm(b - a) for a, b in zip(path[:-1], path[1:])])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if not s[-1] > 0:
        raise StepSizeError("path collapsed to a point")
    target = np.linspace(0.0, s[-1], len(path))
    idx = np.clip(np.searchsorted(s, target, side="right") - 1, 0, len(path) - 2)
    t = (target - s[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    out = path[idx] + t[:, None] * (path[idx + 1] - path[idx])
    out[0], out[-1] = path[0], path[-1]
    return out


def newton_polish(prob: _Problem, u, tol: float, max_iters: int = 50):
    """Damped Newton on ``I'(u) = 0`` with the dual residual as merit."""
    g = prob.grad(u)
    res = prob.residual(g)
    it = 0
    while res > tol and it < max_iters:
        it += 1
        d = prob.newton_direction(u, g)
        if d is None:
            break
        s = 1.0
        while s >= 1e-4:
            v = u + s * d
            gv = prob.grad(v)
            rv = prob.residual(gv)
            if rv < res:
                break
            s *= 0.5
        else:
            break
        u, g, res = v, gv, rv
    return u, res, it


def mountain_pass(
    grid: RadialGrid,
    pot,
    nl: NonlinearitySpec,
    cfg: SolverConfig = SolverConfig(),
    u0=None,
) -> SolveResult:
    prob = _Problem(grid, pot, nl, cfg)
    sp = prob.sp
    if np.any(sp.Q):
        raise HypothesisError("mountain pass needs Q = 0")
    ex = nl.exponents
    if ex is not None and not ex[0] > 2:
        raise DomainError(f"mountain pass needs exponents above 2, got {ex}")
    if ex is not None and sp.spec is not None and sp.spec.origin is not None and sp.spec.infinity is not None:
        cert = certify_pair(grid.N, sp.spec.origin, sp.spec.infinity, *ex)
        if not cert.certified:
            warnings.warn(f"exponents not certified: {cert.failing}", stacklevel=2)

    if u0 is None:
        u0 = np.exp(-grid.nodes**2)
        u0[-1] = 0.0
        u0 /= prob.gram.norm(u0)
    _, end = ray_scale_endpoint(grid, sp, nl, u0, cfg.lambda_max)
    P = cfg.path_points
    path = np.linspace(0.0, 1.0, P)[:, None] * end.values[None, :]
    E = _path_energies(prob, path)
    hist: List[float] = []
    it = 0
    u = path[0]
    for it in range(1, cfg.deform_steps + 1):
        k = int(np.argmax(E))  # first maximal index wins ties
        if k in (0, P - 1):
            raise GeometryError("path maximum sits at an endpoint")
        u = path[k]
        g = prob.grad(u)
        hist.append(float(E[k]))
        if prob.residual(g) <= cfg.path_tol * max(prob.gram.norm(u), 1e-300):
            break
        # re-spacing undoes descent below the resolution of the path, so
        # stop deforming once the top stops dropping and let Newton finish
        if len(hist) > _STALL and hist[-_STALL - 1] - hist[-1] <= 1e-9 * abs(hist[-1]):
            break
        d = prob.direction(g)
        spacing = prob.gram.norm(path[1] - path[0])
        s0 = min(cfg.step_init, 0.5 * spacing / max(prob.gram.norm(d), 1e-300))
        ls = _line_search(prob, u, E[k], g, d, s0, False)
        if ls is None:
            raise StepSizeError("no descent at the path maximum")
        path[k], E[k], _ = ls
        path = _respace(prob, path)
        E = _path_energies(prob, path)
        if prob.gram.norm(path[int(np.argmax(E))]) < 1e-12 * prob.gram.norm(end.values):
            raise StepSizeError("path collapsed onto 0")
    if cfg.newton:
        u, res, nit = newton_polish(prob, u, cfg.grad_tol)
        it += nit
    out = prob.result(u, it, "mountain_pass", hist)
    if out.residual > cfg.grad_tol or not out.energy.total > 0:
        return replace(out, classification="failed")
    return out
