"""
Flow force of a wave in height-function and in physical variables, the
difference w = h - H(p; s) from a reference stream and the flow force flux
function

    Phi(q, p) = int_0^p ( w_p^2 / (h_p H_p^2) - w_q^2 / h_p ) dp'

whose top trace satisfies Phi(q, 1) = 2 (FF - sigma) - 2 (r - R) w + w^2.

Derivatives use the solver stencils (centred in q, centred in p with
one-sided second-order ends) applied to the difference from a reference
stream, whose own contribution is evaluated analytically. p-integrals use
adaptive quadrature for the stream part and Simpson's rule for the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .diagnostics import sigma
from .laminar import _check_slip, _quad, bernoulli_of_slip
from .wavesolver import (
    WaveSolution,
    _check_uni,
    _stream_nodes,
    d_dp,
    d_dq,
    height_derivatives,
    reconstruct_physical,
    reference_slip,
)


@dataclass(frozen=True)
class FlowForce:
    ff: float
    max_column_deviation: float
    columns: np.ndarray


@dataclass(frozen=True)
class FluxField:
    s: float
    phi: np.ndarray
    w: np.ndarray
    top_trace: np.ndarray
    ff: float
    stream_part: np.ndarray | None = None  # p-only Phi of the reference stream, if split off
    stream_density: np.ndarray | None = None  # its exact p-derivative at the nodes


@dataclass(frozen=True)
class GradientCheck:
    max_err_q: float
    max_err_p: float
    est_q: float = 0.0  # Richardson estimate of the stencil truncation error in q
    est_p: float = 0.0  # same in p


def _wide_dq(f, dq):
    return (np.roll(f, -2, axis=0) - np.roll(f, 2, axis=0)) / (4.0 * dq)


def _wide_dp(f, dp):
    out = np.empty_like(f)
    out[..., 2:-2] = (f[..., 4:] - f[..., :-4]) / (4.0 * dp)
    for j in (0, 1):
        out[..., j] = (-3.0 * f[..., j] + 4.0 * f[..., j + 2] - f[..., j + 4]) / (4.0 * dp)
        k = -1 - j
        out[..., k] = (3.0 * f[..., k] - 4.0 * f[..., k - 2] + f[..., k - 4]) / (4.0 * dp)
    return out


def _column_density(sol, hq, hp):
    grid, h, model = sol.grid, sol.h, sol.model
    Om = np.asarray(model.Omega(grid.p))[None, :]
    return ((1.0 - hq**2) / (2.0 * hp**2) - h - Om + model.Omega(1.0) + sol.r) * hp


def flow_force(sol: WaveSolution) -> FlowForce:
    """Column-wise FF(q_i), with the mean and the max deviation from the mean.

    The reference stream's contribution sigma(s_ref; r) is taken from the
    adaptive-quadrature value; Simpson's rule integrates only the smooth
    difference between the column density and the stream density.
    """
    s_ref = reference_slip(sol)
    hq, hp = height_derivatives(sol, s_ref)
    dens = _column_density(sol, hq, hp)
    if s_ref is None:
        cols = simpson(dens, dx=sol.grid.dp, axis=1)
    else:
        p = sol.grid.p
        H, Hp = _stream_nodes(sol.model, s_ref, sol.grid.n_p)
        lam = (0.5 / Hp**2 - H - sol.model.Omega(p) + sol.model.Omega(1.0) + sol.r) * Hp
        cols = sigma(sol.model, s_ref, sol.r) + simpson(dens - lam[None, :], dx=sol.grid.dp, axis=1)
    ff = float(np.mean(cols))
    return FlowForce(ff=ff, max_column_deviation=float(np.max(np.abs(cols - ff))), columns=cols)


def flow_force_physical(sol: WaveSolution) -> float:
    """Mean over columns of int_0^eta (P - P_atm + (u - c)^2) dy.

    Each column is integrated in y over its own (nonuniform) node heights,
    independently of the p-parametrisation used by ``flow_force``.
    """
    f = reconstruct_physical(sol, surface="smooth")
    integrand = f.pressure + f.rel_u**2
    cols = np.array([simpson(integrand[i], x=f.y[i]) for i in range(sol.grid.n_q)])
    return float(np.mean(cols))


def w_field(sol: WaveSolution, s: float) -> np.ndarray:
    """w(q, p) = h(q, p) - H(p; s) at every node."""
    _check_slip(sol.model, s)
    H, _ = _stream_nodes(sol.model, float(s), sol.grid.n_p)
    return sol.h - H[None, :]


def _flux_density(sol, s, w):
    """Phi_p at every node, with h_p and w_p sharing the reference-stream split."""
    hq, hp = height_derivatives(sol, reference_slip(sol))
    _, Hp = _stream_nodes(sol.model, float(s), sol.grid.n_p)
    Hp = Hp[None, :]
    wp = hp - Hp
    wq = hq
    return wp**2 / (hp * Hp**2) - wq**2 / hp, hp, wq, Hp


def _stream_flux_cumulative(model, s_ref, s, p):
    """int_0^p of Phi_p for h = H(.; s_ref), by adaptive quadrature per subinterval."""
    Om = model.scalar_Omega()
    a2, b2 = s_ref * s_ref, s * s

    def f(x):
        ga, gb = a2 - 2.0 * Om(x), b2 - 2.0 * Om(x)  # H_p^-2 for each stream
        wp = ga**-0.5 - gb**-0.5
        return wp * wp * gb * ga**0.5

    pieces = [_quad(f, a, b) for a, b in zip(p[:-1], p[1:])]
    return np.concatenate(([0.0], np.cumsum(pieces)))


def flux_function(sol: WaveSolution, s: float, ff: float | None = None) -> FluxField:
    """Phi^(s) by cumulative quadrature up each column.

    As in ``flow_force`` the reference-stream part is integrated adaptively
    and cumulative Simpson handles the smooth remainder.
    """
    _check_uni(sol.model, sol.grid, sol.h)
    w = w_field(sol, s)
    dens, _, _, _ = _flux_density(sol, s, w)
    dp = sol.grid.dp
    s_ref = reference_slip(sol)
    base = lam = None
    if s_ref is None or s_ref == s:
        phi = cumulative_simpson(dens, dx=dp, axis=1, initial=0.0)
    else:
        p = sol.grid.p
        _, Hr = _stream_nodes(sol.model, s_ref, sol.grid.n_p)
        _, Hs = _stream_nodes(sol.model, float(s), sol.grid.n_p)
        lam = (Hr - Hs) ** 2 / (Hr * Hs**2)
        base = _stream_flux_cumulative(sol.model, s_ref, float(s), p)
        phi = base[None, :] + cumulative_simpson(dens - lam[None, :], dx=dp, axis=1, initial=0.0)
    if ff is None:
        ff = flow_force(sol).ff
    return FluxField(s=float(s), phi=phi, w=w, top_trace=phi[:, -1].copy(), ff=float(ff),
                     stream_part=base, stream_density=lam)


def flux_gradient_check(field: FluxField, sol: WaveSolution, s: float) -> GradientCheck:
    """Max errors of finite-difference Phi_q, Phi_p against their closed forms

        Phi_q = -w_q ((1 + w_q^2) / h_p^2 - 1 / H_p^2),
        Phi_p = w_p^2 / (h_p H_p^2) - w_q^2 / h_p.

    Only the numerically integrated part of Phi is differenced; the stream
    part (if split off) contributes its exact derivative.
    """
    grid = sol.grid
    dens, hp, wq, Hp = _flux_density(sol, s, field.w)
    closed_q = -wq * ((1.0 + wq**2) / hp**2 - 1.0 / Hp**2)
    rest = field.phi if field.stream_part is None else field.phi - field.stream_part[None, :]
    exact_p = 0.0 if field.stream_density is None else field.stream_density[None, :]
    fd_q = d_dq(field.phi, grid.dq)
    fd_p = d_dp(rest, grid.dp) + exact_p
    # doubling the step of a second-order stencil quadruples its error
    est_q = np.abs(_wide_dq(field.phi, grid.dq) - fd_q) / 3.0
    est_p = np.abs(_wide_dp(rest, grid.dp) + exact_p - fd_p) / 3.0
    return GradientCheck(
        max_err_q=float(np.max(np.abs(fd_q - closed_q))),
        max_err_p=float(np.max(np.abs(fd_p - dens))),
        est_q=float(np.max(est_q)),
        est_p=float(np.max(est_p)),
    )


def flux_boundary_identity(sol: WaveSolution, s: float, ff: float | None = None,
                           field: FluxField | None = None) -> float:
    """max_q |Phi(q,1) - [2 (FF - sigma(s;r)) - 2 (r - R(s)) w(q,1) + w(q,1)^2]|."""
    _check_slip(sol.model, s)
    if field is None:
        field = flux_function(sol, s, ff)
    ff = field.ff if ff is None else ff
    wt = field.w[:, -1]
    dr = sol.r - bernoulli_of_slip(sol.model, s)
    rhs = 2.0 * (ff - sigma(sol.model, s, sol.r)) - 2.0 * dr * wt + wt**2
    return float(np.max(np.abs(field.top_trace - rhs)))
