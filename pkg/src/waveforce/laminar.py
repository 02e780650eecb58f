"""
Laminar (stream) solutions H(p; s), the depth and Bernoulli maps, the
critical slip and the conjugate pair for a given Bernoulli constant.

All quantities are non-dimensional with unit mass flux and unit gravity.
A stream is labelled by its bottom slip ``s`` and exists for s > s_0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import DomainError, NoRootError, OutOfRangeError
from .vorticity import VorticityModel, omega_maximizer, slip_lower_bound

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-13
QUAD_LIMIT = 400

#: values above this threshold that keep growing are classified as infinite
DIVERGENCE_THRESHOLD = 1e8

ROOT_XTOL = 1e-14
#: below this gap s^2 - 2 max Omega the quadrature grades break points towards the peak
GRADING_GAP = 0.1
DEFAULT_PROFILE_NODES = 257


@dataclass(frozen=True)
class StreamSolution:
    s: float
    p_grid: np.ndarray
    H: np.ndarray
    H_p: np.ndarray
    depth: float
    bernoulli: float


@dataclass(frozen=True)
class RegimeConstants:
    s_0: float
    s_c: float
    R_c: float
    d_0: float  # math.inf when the limit diverges
    R_0: float  # math.inf when the limit diverges


@dataclass(frozen=True)
class ConjugatePair:
    r: float
    s_minus: float
    s_plus: float
    d_minus: float  # d(s_plus), supercritical depth
    d_plus: float  # d(s_minus), subcritical depth
    ff_minus: float  # sigma(s_plus; r)
    ff_plus: float  # sigma(s_minus; r)
    s_0: float
    s_c: float
    R_c: float
    R_0: float
    d_0: float


# ---------------------------------------------------------------------------
# quadrature helpers


def _quad(f, lo, hi, breaks=()):
    """Adaptive Gauss-Kronrod quadrature split at interior break points."""
    pts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for a, b in zip(pts[:-1], pts[1:]):
            val, _ = quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
            total += val
    return total


def _speed_sq(model: VorticityModel, s: float):
    """Closure p -> s^2 - 2 Omega(p) (the squared inverse of H_p)."""
    Om = model.scalar_Omega()
    s2 = s * s
    return lambda p: s2 - 2.0 * Om(p)


def _check_slip(model: VorticityModel, s: float) -> None:
    s0 = slip_lower_bound(model)
    if not (s > s0) or not math.isfinite(s):
        raise DomainError(f"slip s={s!r} must exceed s_0={s0!r} (unidirectionality)")


def _breaks(model: VorticityModel, s: float) -> tuple:
    """p* (the maximiser of Omega) plus break points graded towards it near s_0.

    H_p peaks at p* with a width set by the gap s^2 - 2 Omega(p*); without
    grading the adaptive rule can step over a narrow peak entirely. A gap at
    rounding level (s = s_0) is a genuine endpoint singularity, which the
    extrapolating rule handles better on its own.
    """
    p_star, om_max = omega_maximizer(model)
    gap = s * s - 2.0 * om_max
    pts = [p_star]
    if 1e-12 * s * s < gap < GRADING_GAP:
        for k in range(1, min(math.ceil(-math.log2(gap)) + 4, 80) + 1):
            pts += [p_star - 2.0**-k, p_star + 2.0**-k]
    return tuple(pts)


def stream_integral(model: VorticityModel, s: float, power: float, lo=0.0, hi=1.0) -> float:
    """int_lo^hi (s^2 - 2 Omega)^(-power/2) dp, i.e. the integral of H_p**power."""
    g = _speed_sq(model, s)
    half = 0.5 * power

    def f(p):
        x = g(p)
        return x ** -half if x > 0.0 else 0.0

    return _quad(f, lo, hi, breaks=_breaks(model, s))


def stream_weighted_integral(model: VorticityModel, s: float, weight, power: float = 1.0) -> float:
    """int_0^1 weight(p) H_p(p)**power dp."""
    g = _speed_sq(model, s)
    half = 0.5 * power

    def f(p):
        x = g(p)
        return weight(p) * x ** -half if x > 0.0 else 0.0

    return _quad(f, 0.0, 1.0, breaks=_breaks(model, s))


def slope(model: VorticityModel, s: float, p):
    """H_p(p; s) = (s^2 - 2 Omega(p))^(-1/2), vectorised."""
    return 1.0 / np.sqrt(s * s - 2.0 * np.asarray(model.Omega(p), dtype=float))


# ---------------------------------------------------------------------------
# public operations


def depth(model: VorticityModel, s: float) -> float:
    """Depth d(s) = int_0^1 (s^2 - 2 Omega)^(-1/2) dp of the stream with slip s."""
    _check_slip(model, s)
    return stream_integral(model, s, 1.0)


def bernoulli_of_slip(model: VorticityModel, s: float) -> float:
    """R(s) = s^2/2 - Omega(1) + d(s)."""
    _check_slip(model, s)
    return 0.5 * s * s - model.Omega(1.0) + stream_integral(model, s, 1.0)


def depth_derivative(model: VorticityModel, s: float) -> float:
    """d'(s) = -s int_0^1 H_p^3 dp."""
    _check_slip(model, s)
    return -s * stream_integral(model, s, 3.0)


def stream_profile(model: VorticityModel, s: float, n_nodes: int = DEFAULT_PROFILE_NODES) -> StreamSolution:
    """Laminar height function H(p; s) on a uniform grid of ``n_nodes`` nodes.

    Node values are accumulated subinterval by subinterval with adaptive
    quadrature, so each value carries quadrature (not trapezoid) accuracy.
    """
    _check_slip(model, s)
    if n_nodes < 3:
        raise ValueError("stream_profile needs at least 3 nodes")
    p = np.linspace(0.0, 1.0, n_nodes)
    pieces = [stream_integral(model, s, 1.0, lo=a, hi=b) for a, b in zip(p[:-1], p[1:])]
    H = np.concatenate(([0.0], np.cumsum(pieces)))
    d = stream_integral(model, s, 1.0)
    return StreamSolution(
        s=float(s),
        p_grid=p,
        H=H,
        H_p=slope(model, s, p),
        depth=d,
        bernoulli=0.5 * s * s - model.Omega(1.0) + d,
    )


def _critical_residual(model, s):
    return stream_integral(model, s, 3.0) - 1.0


@lru_cache(maxsize=256)
def critical_slip(model: VorticityModel) -> float:
    """Critical slip s_c solving int_0^1 (s^2 - 2 Omega)^(-3/2) dp = 1.

    The left end of the bracket approaches s_0 geometrically; the right
    end doubles until the integral drops below one.
    """
    s0 = slip_lower_bound(model)
    hi = s0 + 1.0
    while _critical_residual(model, hi) >= 0.0:
        hi = s0 + 2.0 * (hi - s0)
        if hi > 1e6:
            raise NoRootError("critical-slip integral never drops below 1")
    lo = hi
    for _ in range(200):
        lo = s0 + 0.5 * (lo - s0)
        if lo <= s0:
            break
        if _critical_residual(model, lo) > 0.0:
            return brentq(lambda x: _critical_residual(model, x), lo, hi, xtol=ROOT_XTOL, maxiter=200)
    raise NoRootError(
        "int_0^1 (s^2 - 2 Omega)^(-3/2) dp stays below 1 on (s_0, s_0 + 1]; "
        "no critical slip exists for this vorticity"
    )


def _limit_at_s0(model: VorticityModel) -> float:
    """d_0 = lim d(s) as s -> s_0+, or math.inf.

    The depth is sampled along s_0 + 2^-k. It is classified infinite when it
    exceeds DIVERGENCE_THRESHOLD while still growing over three successive
    refinements, or when its increments stop shrinking (slow, logarithmic
    divergence that never reaches the threshold). Otherwise the increments
    decay geometrically and the limit equals the (convergent) improper
    integral at s_0, which is evaluated directly with the singular point as
    a subinterval end.
    """
    s0 = slip_lower_bound(model)
    values = []
    k = 0
    while True:
        k += 1
        s = s0 + 2.0 ** -k
        if s <= s0 or k > 200:
            break
        values.append(stream_integral(model, s, 1.0))
        if len(values) >= 4:
            v3, v2, v1, v0 = values[-4:]
            growing = v0 > v1 > v2 > v3
            if growing and v0 > DIVERGENCE_THRESHOLD:
                return math.inf
            inc = np.diff(values[-4:])
            if k >= 10 and growing and np.all(inc[1:] >= 0.9 * inc[:-1]):
                return math.inf
            if k >= 10 and np.all(np.abs(inc[1:]) <= 0.9 * np.abs(inc[:-1])):
                break
    d0 = stream_integral(model, s0, 1.0)
    if not math.isfinite(d0) or d0 < values[-1] - 1e-9:
        return math.inf
    return d0


@lru_cache(maxsize=256)
def regime_constants(model: VorticityModel) -> RegimeConstants:
    """s_0, s_c, R_c = R(s_c), d_0 = d(s_0+), R_0 = R(s_0+)."""
    s0 = slip_lower_bound(model)
    sc = critical_slip(model)
    d0 = _limit_at_s0(model)
    R0 = math.inf if math.isinf(d0) else 0.5 * s0 * s0 - model.Omega(1.0) + d0
    return RegimeConstants(s_0=s0, s_c=sc, R_c=bernoulli_of_slip(model, sc), d_0=d0, R_0=R0)


def conjugate_streams(model: VorticityModel, r: float) -> ConjugatePair:
    """The two streams with Bernoulli constant r, s_minus < s_c < s_plus."""
    from .diagnostics import sigma

    rc = regime_constants(model)
    if not (rc.R_c < r < rc.R_0):
        raise OutOfRangeError(
            f"Bernoulli constant r={r!r} outside the admissible interval "
            f"(R_c, R_0) = ({rc.R_c!r}, {rc.R_0!r})"
        )
    s0, sc = rc.s_0, rc.s_c

    def f(s):
        return bernoulli_of_slip(model, s) - r

    lo = sc
    for _ in range(200):
        lo = s0 + 0.5 * (lo - s0)
        if lo <= s0:
            raise NoRootError(f"could not bracket s_minus for r={r!r}")
        if f(lo) > 0.0:
            break
    s_minus = brentq(f, lo, sc, xtol=ROOT_XTOL, maxiter=200)

    width = max(sc - s0, 1.0)
    hi = sc + width
    while f(hi) <= 0.0:
        width *= 2.0
        hi = sc + width
    s_plus = brentq(f, sc, hi, xtol=ROOT_XTOL, maxiter=200)

    return ConjugatePair(
        r=float(r),
        s_minus=s_minus,
        s_plus=s_plus,
        d_minus=depth(model, s_plus),
        d_plus=depth(model, s_minus),
        ff_minus=sigma(model, s_plus, r),
        ff_plus=sigma(model, s_minus, r),
        s_0=s0,
        s_c=sc,
        R_c=rc.R_c,
        R_0=rc.R_0,
        d_0=rc.d_0,
    )
