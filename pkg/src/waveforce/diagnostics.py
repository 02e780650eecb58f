"""
Auxiliary functions sigma(s; r) and kappa(s; r; FF) comparing laminar flow
forces at a foreign Bernoulli constant, their closed-form s-derivatives, and
the flow force of a laminar flow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .laminar import _check_slip, stream_integral, stream_weighted_integral
from .vorticity import VorticityModel


@dataclass(frozen=True)
class DiagnosticCurve:
    r: float
    ff: float
    s_samples: np.ndarray
    sigma_values: np.ndarray
    kappa_values: np.ndarray
    sigma_derivative_values: np.ndarray
    kappa_derivative_values: np.ndarray


def sigma(model: VorticityModel, s: float, r: float) -> float:
    """Flow force of the stream H(p; s) evaluated with Bernoulli constant r.

    The defining integral

        int_0^1 (1/(2 H_p^2) - H - Omega + Omega(1) + r) H_p dp

    is reduced exactly: 1/(2 H_p^2) = (s^2 - 2 Omega)/2 and int H H_p = d^2/2,
    which leaves two one-dimensional quadratures and no nested integral.
    """
    _check_slip(model, s)
    d = stream_integral(model, s, 1.0)
    om_hp = stream_weighted_integral(model, s, model.scalar_Omega())
    return (0.5 * s * s + model.Omega(1.0) + r) * d - 2.0 * om_hp - 0.5 * d * d


def bernoulli(model: VorticityModel, s: float) -> float:
    return 0.5 * s * s - model.Omega(1.0) + stream_integral(model, s, 1.0)


def sigma_derivative(model: VorticityModel, s: float, r: float) -> float:
    """d sigma / ds = -s (r - R(s)) int_0^1 H_p^3 dp."""
    _check_slip(model, s)
    return -s * (r - bernoulli(model, s)) * stream_integral(model, s, 3.0)


def kappa(model: VorticityModel, s: float, r: float, ff: float) -> float:
    """kappa = 2 (FF - sigma(s; r)) - (r - R(s))^2 for a reference flow force FF."""
    _check_slip(model, s)
    return 2.0 * (ff - sigma(model, s, r)) - (r - bernoulli(model, s)) ** 2


def kappa_derivative(model: VorticityModel, s: float, r: float) -> float:
    """d kappa / ds = 2 s (r - R(s)); independent of FF."""
    _check_slip(model, s)
    return 2.0 * s * (r - bernoulli(model, s))


def laminar_flow_force(model: VorticityModel, s: float) -> float:
    """True flow force of the stream with slip s, i.e. sigma(s; R(s))."""
    _check_slip(model, s)
    return sigma(model, s, bernoulli(model, s))


def diagnostic_curve(model: VorticityModel, r: float, s_samples, ff: float) -> DiagnosticCurve:
    s_samples = np.asarray(s_samples, dtype=float)
    sig = np.array([sigma(model, s, r) for s in s_samples])
    R = np.array([bernoulli(model, s) for s in s_samples])
    return DiagnosticCurve(
        r=r,
        ff=ff,
        s_samples=s_samples,
        sigma_values=sig,
        kappa_values=2.0 * (ff - sig) - (r - R) ** 2,
        sigma_derivative_values=np.array([sigma_derivative(model, s, r) for s in s_samples]),
        kappa_derivative_values=2.0 * s_samples * (r - R),
    )
