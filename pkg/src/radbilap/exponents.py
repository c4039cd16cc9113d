"""Admissible Lebesgue exponents for compact radial embeddings.

Every formula here is a rational function of its inputs, so all functions
accept ``fractions.Fraction`` as well as floats and stay exact when given
exact arguments.  Window membership always uses strict inequalities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Optional, Tuple

__all__ = [
    "DomainError",
    "SingularFormulaError",
    "HypothesisError",
    "GrowthParams",
    "ExponentWindow",
    "RegionSpec",
    "Threshold",
    "Certificate",
    "alpha_star",
    "q_star",
    "q_lower_star",
    "q_double_star",
    "window_origin_thm22",
    "threshold_infinity_thm23",
    "threshold_infinity_thm24",
    "region_case",
    "region_contains",
    "power_law_params",
    "power_law_report",
    "certify_pair",
]


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class SingularFormulaError(DomainError):
    """Formula has a vanishing denominator at this gamma."""


class HypothesisError(ValueError):
    """A theorem hypothesis is not met by the supplied parameters."""


def _check_N(N: int) -> None:
    if int(N) != N or N < 5:
        raise DomainError(f"dimension must be an integer >= 5, got {N!r}")


def _check_beta(beta: Real) -> None:
    if not (0 <= beta <= 1):
        raise DomainError(f"beta must lie in [0, 1], got {beta!r}")


@dataclass(frozen=True)
class GrowthParams:
    """Growth exponents of ``K / (r^alpha V^beta)`` near 0 or near infinity.

    ``gamma`` is only set when a lower bound ``essinf r^gamma V(r) > 0`` is
    asserted on the same range of radii.
    """

    alpha: Real
    beta: Real
    gamma: Optional[Real] = None

    def __post_init__(self):
        _check_beta(self.beta)
        if self.gamma is not None and not _finite(self.gamma):
            raise DomainError("gamma must be finite when given")


def _finite(x) -> bool:
    if isinstance(x, Fraction):
        return True
    return float(x) == float(x) and abs(float(x)) != float("inf")


@dataclass(frozen=True)
class ExponentWindow:
    """Open window of admissible exponents.

    ``interval``: a single exponent q with ``lo < q < hi`` works for both
    ends.  ``half_line``: ``q > lo``.  ``split_pair``: ``q1`` must lie in
    ``q1_window`` and ``q2 > q2_threshold``.  ``empty`` carries a reason.
    """

    kind: str
    lo: Optional[Real] = None
    hi: Optional[Real] = None
    q1_window: Optional[Tuple[Real, Real]] = None
    q2_threshold: Optional[Real] = None
    reason: str = ""

    def __post_init__(self):
        if self.kind not in ("interval", "half_line", "split_pair", "empty"):
            raise ValueError(f"unknown window kind {self.kind!r}")
        if self.kind == "interval" and not (self.lo < self.hi):
            raise ValueError("interval windows need lo < hi")

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"

    def contains(self, q: Real) -> bool:
        if self.kind == "interval":
            return self.lo < q < self.hi
        if self.kind == "half_line":
            return q > self.lo
        return False

    def contains_pair(self, q1: Real, q2: Real) -> bool:
        if self.kind == "split_pair":
            lo, hi = self.q1_window
            return lo < q1 < hi and q2 > self.q2_threshold
        if self.kind == "interval":
            return self.contains(q1) and self.contains(q2)
        return False


@dataclass(frozen=True)
class Threshold:
    """Lower threshold for q2 together with the candidate that attains it."""

    value: Real
    term: str


@dataclass(frozen=True)
class Certificate:
    certified: bool
    origin_thm: str
    infinity_thm: str
    failing: Optional[str] = None


def alpha_star(N: int, beta: Real) -> Real:
    """``max(4 beta - 2 - N/2, -(1 - beta) N)``; the branches cross at beta = 1/2."""
    _check_N(N)
    _check_beta(beta)
    half_N = Fraction(N, 2) if isinstance(beta, Fraction) else N / 2
    return max(4 * beta - 2 - half_N, -(1 - beta) * N)


def q_star(N: int, alpha: Real, beta: Real) -> Real:
    _check_N(N)
    _check_beta(beta)
    return 2 * (alpha - 4 * beta + N) / _den(N - 4, alpha, beta)


def q_lower_star(N: int, alpha: Real, beta: Real, gamma: Real) -> Real:
    _check_N(N)
    if gamma == N:
        raise SingularFormulaError("q_* is undefined at gamma = N")
    return 2 * (alpha - gamma * beta + N) / _den(N - gamma, alpha, beta, gamma)


def q_double_star(N: int, alpha: Real, beta: Real, gamma: Real) -> Real:
    _check_N(N)
    if gamma == 2 * (N - 2):
        raise SingularFormulaError("q_** is undefined at gamma = 2(N - 2)")
    num = 2 * (2 * alpha + (1 - 2 * beta) * gamma + 2 * (N - 2))
    return num / _den(2 * (N - 2) - gamma, alpha, beta, gamma)


def _den(d, *args):
    # int / int gives a float, so promote the denominator when inputs are exact
    if any(isinstance(a, Fraction) for a in args):
        return Fraction(d)
    return d


def window_origin_thm22(N: int, params: GrowthParams) -> ExponentWindow:
    """Window for q1 near the origin: ``max(1, 2 beta) < q1 < q*(alpha, beta)``."""
    a_star = alpha_star(N, params.beta)
    if not params.alpha > a_star:
        return ExponentWindow(
            "empty",
            reason=f"alpha_0={params.alpha} does not exceed alpha*={a_star}",
        )
    lo = max(1, 2 * params.beta)
    hi = q_star(N, params.alpha, params.beta)
    return ExponentWindow("interval", lo=lo, hi=hi, q1_window=(lo, hi))


def threshold_infinity_thm23(N: int, params: GrowthParams) -> Threshold:
    """``max(1, 2 beta, q*(alpha, beta))`` with the attaining term."""
    cands = [
        ("1", 1),
        ("2beta", 2 * params.beta),
        ("q_star", q_star(N, params.alpha, params.beta)),
    ]
    return _argmax(cands)


def threshold_infinity_thm24(N: int, params: GrowthParams) -> Threshold:
    """``max(1, 2 beta, q_*, q_**)``; needs ``essinf r^gamma V > 0`` with gamma <= 4."""
    if params.gamma is None:
        raise HypothesisError("this threshold needs the decay rate gamma of V at infinity")
    if params.gamma > 4:
        raise HypothesisError(f"gamma_inf={params.gamma} exceeds 4")
    _check_N(N)
    a, b, g = params.alpha, params.beta, params.gamma
    cands = [
        ("1", 1),
        ("2beta", 2 * b),
        ("q_lower_star", q_lower_star(N, a, b, g)),
        ("q_double_star", q_double_star(N, a, b, g)),
    ]
    return _argmax(cands)


def _argmax(cands) -> Threshold:
    # first maximal entry wins, so ties report the simplest term
    name, val = cands[0]
    for n, v in cands[1:]:
        if v > val:
            name, val = n, v
    return Threshold(val, name)


_CASES = ("4<=g<N", "g=N", "N<g<2N-4", "g=2N-4", "g>2N-4")


def region_case(N: int, gamma: Real) -> str:
    _check_N(N)
    if gamma < 4:
        raise HypothesisError(f"region needs gamma >= 4, got {gamma}")
    if gamma < N:
        return _CASES[0]
    if gamma == N:
        return _CASES[1]
    if gamma < 2 * N - 4:
        return _CASES[2]
    if gamma == 2 * N - 4:
        return _CASES[3]
    return _CASES[4]


@dataclass(frozen=True)
class RegionSpec:
    beta: Real
    gamma: Real
    case_tag: str

    @classmethod
    def for_dimension(cls, N: int, beta: Real, gamma: Real) -> "RegionSpec":
        _check_beta(beta)
        return cls(beta, gamma, region_case(N, gamma))


def region_contains(N: int, region: RegionSpec, alpha: Real, q: Real) -> bool:
    """Membership of ``(alpha, q)`` in the admissible region for gamma >= 4."""
    b, g = region.beta, region.gamma
    tag = region_case(N, g)
    if tag != region.case_tag:
        raise ValueError(f"case tag {region.case_tag!r} inconsistent with gamma={g}")
    low = max(1, 2 * b)
    if tag == "4<=g<N":
        return low < q < min(q_lower_star(N, alpha, b, g), q_double_star(N, alpha, b, g))
    if tag == "g=N":
        return low < q < q_double_star(N, alpha, b, g) and alpha > -(1 - b) * N
    if tag == "N<g<2N-4":
        return max(low, q_lower_star(N, alpha, b, g)) < q < q_double_star(N, alpha, b, g)
    if tag == "g=2N-4":
        return max(low, q_lower_star(N, alpha, b, g)) < q and alpha > -(1 - b) * g
    return max(low, q_lower_star(N, alpha, b, g), q_double_star(N, alpha, b, g)) < q


def power_law_params(a: Real, beta0: Real = 0, beta_inf: Real = 0):
    """Growth parameters of ``V = r^-a``, ``K = r^(1-a)`` at both ends.

    ``alpha = a beta - a + 1`` is the optimal choice on each side, and
    ``V`` satisfies the lower bound at infinity with ``gamma = a``.
    """
    origin = GrowthParams(a * beta0 - a + 1, beta0, a)
    infinity = GrowthParams(a * beta_inf - a + 1, beta_inf, a)
    return origin, infinity


def power_law_report(N: int, a: Real) -> ExponentWindow:
    """Certified exponents for ``V = r^-a``, ``K = r^(1-a)``, ``a <= 4``.

    Uses beta = 0 at both ends.  For ``a < 4`` a single exponent in
    ``(q_**, q*)`` works; at ``a = 4`` the two thresholds meet at
    ``2(N-3)/(N-4)`` and only a genuine pair ``q1 < 2(N-3)/(N-4) < q2`` is
    certified.
    """
    _check_N(N)
    if a > 4:
        raise HypothesisError(f"power-law exponent a={a} exceeds 4")
    origin, infinity = power_law_params(a)
    w0 = window_origin_thm22(N, origin)
    thr = threshold_infinity_thm24(N, infinity)
    if w0.is_empty:  # unreachable for a <= 4 but kept explicit
        return w0
    if thr.value < w0.hi:
        return ExponentWindow(
            "interval",
            lo=thr.value,
            hi=w0.hi,
            q1_window=w0.q1_window,
            q2_threshold=thr.value,
        )
    return ExponentWindow(
        "split_pair",
        lo=w0.q1_window[0],
        hi=w0.hi,
        q1_window=w0.q1_window,
        q2_threshold=thr.value,
    )


def certify_pair(
    N: int, origin: GrowthParams, infinity: GrowthParams, q1: Real, q2: Real
) -> Certificate:
    """Pick the strongest applicable theorem on each side and test ``(q1, q2)``."""
    if origin.gamma is not None and origin.gamma > 4:
        origin_thm = "2.5"
        region = RegionSpec.for_dimension(N, origin.beta, origin.gamma)
        ok0 = region_contains(N, region, origin.alpha, q1)
        why0 = f"(alpha_0, q1)=({origin.alpha}, {q1}) outside region case {region.case_tag}"
    else:
        origin_thm = "2.2"
        w = window_origin_thm22(N, origin)
        ok0 = w.contains(q1)
        why0 = w.reason if w.is_empty else f"q1={q1} not in ({w.lo}, {w.hi})"

    if infinity.gamma is not None and infinity.gamma <= 4:
        inf_thm = "2.4"
        thr = threshold_infinity_thm24(N, infinity)
    else:
        inf_thm = "2.3"
        thr = threshold_infinity_thm23(N, infinity)
    ok_inf = q2 > thr.value
    why_inf = f"q2={q2} not above {thr.term}={thr.value}"

    failing = None
    if not ok0:
        failing = why0
    elif not ok_inf:
        failing = why_inf
    return Certificate(ok0 and ok_inf, origin_thm, inf_thm, failing)
