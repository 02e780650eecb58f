"""
Sturm-Liouville eigenproblem of the linearised height equation about a stream:

    -(phi_p / H_p^3)_p = mu phi / H_p,   phi(0) = 0,   phi_p(1) = H_p(1)^3 phi(1).

A positive principal eigenvalue (supercritical stream) gives the decay rate
lambda_1 = sqrt(mu_1) of solitary tails; a negative one (subcritical stream)
gives the wavenumber k = sqrt(-mu_1) of the linear periodic wavetrain.

The operator is discretised in conservative flux form: the coefficient
H_p^-3 is sampled at half nodes, the mass is lumped at nodes (half weight on
the top node) and the Robin condition enters the last row through the
boundary flux. The resulting generalized problem is symmetric tridiagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import ConvergenceError, NoRootError, RegimeError
from .laminar import _check_slip, critical_slip, slope
from .vorticity import VorticityModel, slip_lower_bound

RICHARDSON_RTOL = 1e-6
RICHARDSON_ATOL = 1e-7
DEFAULT_NODES = 128


@dataclass(frozen=True)
class EigenResult:
    s: float
    mu: float
    phi: np.ndarray
    p_grid: np.ndarray
    n_nodes: int
    discrepancy: float
    higher: tuple = field(default=())

    @property
    def decay(self):
        return math.sqrt(self.mu) if self.mu > 0 else None

    @property
    def wavenumber(self):
        return math.sqrt(-self.mu) if self.mu < 0 else None


def _pencil(model, s, n_intervals):
    """Tridiagonal stiffness (diag, off) and lumped mass for unknowns phi_1..phi_N."""
    N = n_intervals
    h = 1.0 / N
    p = np.linspace(0.0, 1.0, N + 1)
    half = 0.5 * (p[:-1] + p[1:])
    c = slope(model, s, half) ** -3  # flux coefficient 1/H_p^3 at half nodes
    w = 1.0 / slope(model, s, p[1:])  # weight 1/H_p at nodes 1..N

    diag = np.empty(N)
    diag[:-1] = (c[:-1] + c[1:]) / h
    diag[-1] = c[-1] / h - 1.0
    off = -c[1:] / h
    mass = h * w
    mass[-1] *= 0.5
    return p, diag, off, mass


def _solve(model, s, n_intervals, count=1):
    p, diag, off, mass = _pencil(model, s, n_intervals)
    scale = 1.0 / np.sqrt(mass)
    d = diag * scale * scale
    e = off * scale[:-1] * scale[1:]
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    phi = np.concatenate(([0.0], vecs[:, 0] * scale))
    return vals, phi, p


def _richardson(coarse, fine):
    return (4.0 * fine - coarse) / 3.0


def principal_eigenpair(model: VorticityModel, s: float, n_nodes: int = DEFAULT_NODES,
                        n_higher: int = 0) -> EigenResult:
    """Principal eigenpair on ``n_nodes`` nodes with Richardson extrapolation.

    The eigenvalue is extrapolated from grids with N = n_nodes - 1 and 2N
    intervals. The same extrapolation from 2N and 4N serves as the
    convergence check; the two must agree to RICHARDSON_RTOL (relative) with
    an absolute floor RICHARDSON_ATOL for eigenvalues near zero.
    """
    _check_slip(model, s)
    if n_nodes < 64:
        raise ValueError("principal_eigenpair needs n_nodes >= 64")
    N = n_nodes - 1
    count = 1 + n_higher
    v1, phi, p = _solve(model, s, N, count)
    v2, _, _ = _solve(model, s, 2 * N, count)
    v4, _, _ = _solve(model, s, 4 * N, count)
    est = _richardson(v1, v2)
    check = _richardson(v2, v4)
    mu = float(est[0])
    gap = abs(mu - float(check[0]))
    if gap > max(RICHARDSON_RTOL * abs(mu), RICHARDSON_ATOL):
        raise ConvergenceError(
            f"two-grid eigenvalue discrepancy {gap:.3e} exceeds tolerance at s={s}, n_nodes={n_nodes}"
        )
    if abs(phi[-1]) > 1e-8:
        phi = phi / phi[-1]
    else:
        phi = phi / phi[np.argmax(np.abs(phi))]
    return EigenResult(
        s=float(s),
        mu=mu,
        phi=phi,
        p_grid=p,
        n_nodes=n_nodes,
        discrepancy=gap,
        higher=tuple(float(x) for x in est[1:]),
    )


def decay_rate(model: VorticityModel, s: float, n_nodes: int = DEFAULT_NODES) -> float:
    """lambda_1 = sqrt(mu_1) for a supercritical stream."""
    mu = principal_eigenpair(model, s, n_nodes).mu
    if mu <= 0.0:
        raise RegimeError(
            f"stream s={s} is critical or subcritical (mu_1={mu:.3e} <= 0); no decay rate"
        )
    return math.sqrt(mu)


def bifurcation_wavenumber(model: VorticityModel, s: float, n_nodes: int = DEFAULT_NODES) -> float:
    """k = sqrt(-mu_1), wavenumber of the linear wavetrain on a subcritical stream."""
    mu = principal_eigenpair(model, s, n_nodes).mu
    if mu >= 0.0:
        raise RegimeError(
            f"stream s={s} is critical or supercritical (mu_1={mu:.3e} >= 0); no periodic bifurcation"
        )
    return math.sqrt(-mu)


def stream_for_wavenumber(model: VorticityModel, k: float, r_hint=None,
                          n_nodes: int = DEFAULT_NODES) -> float:
    """Subcritical slip s in (s_0, s_c) whose linear wavenumber equals k.

    ``r_hint`` is accepted for interface compatibility and unused: the
    bracket (s_0, s_c) is determined by the vorticity alone.
    """
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    s0 = slip_lower_bound(model)
    sc = critical_slip(model)

    def g(s):
        return -principal_eigenpair(model, s, n_nodes).mu - k * k

    hi = sc  # g(s_c) = -k^2 < 0 since mu_1(s_c) = 0
    factor = 0.8
    for _ in range(80):
        lo = s0 + factor * (hi - s0)
        if lo <= s0 or hi - lo < 1e-12:
            break
        try:
            g_lo = g(lo)
        except ConvergenceError:
            # under-resolved step: retry closer to the last resolved slip
            factor = 0.5 * (1.0 + factor)
            continue
        if g_lo >= 0.0:
            return brentq(g, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=200)
        hi = lo
    raise NoRootError(
        f"wavenumber k={k} exceeds the range resolvable with n_nodes={n_nodes} on (s_0, s_c); "
        "increase n_nodes"
    )
