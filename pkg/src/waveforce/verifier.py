"""
Numeric checks of the flow-force bounds, profile bounds, flux-function
identities and solitary-tail asymptotics on a computed wave.

Every check records raw values, a signed margin (positive = consistent with
the theory) and the tolerance it was judged against. Tolerances follow the
measured discretisation diagnostics of the solution, so refining the grid
tightens them automatically.
"""

from __future__ import annotations

import json
import math
from contextvars import ContextVar
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .diagnostics import kappa
from .dispersion import decay_rate
from .errors import WaveforceError
from .flowforce import (
    flow_force,
    flow_force_physical,
    flux_boundary_identity,
    flux_function,
    flux_gradient_check,
    w_field,
)
from .laminar import ConjugatePair, bernoulli_of_slip, conjugate_streams
from .wavesolver import (
    NEWTON_TOL,
    WaveGrid,
    WaveSolution,
    discrete_laminar,
    is_near_solitary,
)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"

#: floor of the flow-force tolerance
TAU_FF = 1e-8
#: floor of the coupled kappa tolerance
TAU_KAPPA = 1e-6
#: w^(s_plus) sign tolerance
TAU_W = 1e-8
#: relative tolerance of the fitted tail decay rate
DECAY_RTOL = 0.10
#: identity and invariance floors
TAU_IDENTITY = 1e-6
TAU_INVARIANCE = 1e-6
#: gradient-identity error allowed at a 128 x 128 grid (scaled by grid spacing squared)
TAU_GRADIENT_128 = 1e-5
#: discrete residual above which a stored field is not accepted as a solution
TAU_RESIDUAL = 1e-8
#: q-variation below which a solution is treated as laminar
LAMINAR_TOL = 1e-9

_TOL_SCALE: ContextVar[float] = ContextVar("tol_scale", default=1.0)


def _t(x: float) -> float:
    """Tolerance after the caller's scale factor (see ``full_report``)."""
    return x * _TOL_SCALE.get()


@dataclass
class Check:
    name: str
    status: str
    lhs: float | None = None
    rhs: float | None = None
    margin: float | None = None
    tolerance: float | None = None
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        def fmt(x):
            return "nan" if x is None else f"{x:.12g}"

        return (f"{self.name:<34} {self.status:<12} lhs={fmt(self.lhs)} rhs={fmt(self.rhs)} "
                f"margin={fmt(self.margin)} tol={fmt(self.tolerance)}"
                + (f"  # {self.detail}" if self.detail else ""))


@dataclass
class VerificationReport:
    checks: list
    metadata: dict

    @property
    def failed(self) -> bool:
        return any(c.status == FAIL for c in self.checks)

    def by_name(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        return "\n".join(c.line() for c in self.checks)

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _pair(sol: WaveSolution) -> ConjugatePair:
    return conjugate_streams(sol.model, sol.r)


def _is_laminar(sol: WaveSolution) -> bool:
    return float(np.max(np.ptp(sol.h, axis=0))) <= LAMINAR_TOL


def _stream_discretisation(sol, s):
    """max |h - H(p; s)| of the discrete laminar flow with slip s on the solution grid."""
    lam = discrete_laminar(sol.model, sol.grid, s)
    return float(np.max(np.abs(w_field(lam, s)[0])))


@lru_cache(maxsize=64)
def _discrete_conjugates(model, n_p, r, s_minus, s_plus):
    """(d, FF) of the discrete laminar flows whose discrete Bernoulli constant equals r.

    Root-finds the slip near each exact conjugate slip; the result measures how
    far the grid moves the conjugate depths and flow forces.
    """
    grid = WaveGrid(1.0, 16, n_p)

    def gap(s):
        return discrete_laminar(model, grid, s).r - r

    out = []
    for s0 in (s_minus, s_plus):
        lo, hi = s0 * (1 - 1e-3), s0 * (1 + 1e-3)
        for _ in range(20):
            if gap(lo) * gap(hi) < 0:
                break
            lo, hi = s0 - 2 * (s0 - lo), s0 + 2 * (hi - s0)
        s_d = brentq(gap, lo, hi, xtol=1e-14) if gap(lo) * gap(hi) < 0 else s0
        lam = discrete_laminar(model, grid, s_d)
        out.append((float(lam.h[0, -1]), flow_force(lam).ff))
    return tuple(out)


def _discretisation_shifts(sol, pair):
    """|discrete - exact| for (d_+, d_-, FF_+, FF_-) at the solution's r."""
    (dp_, ffp), (dm, ffm) = _discrete_conjugates(sol.model, sol.grid.n_p, float(sol.r),
                                                 pair.s_minus, pair.s_plus)
    return (abs(dp_ - pair.d_plus), abs(dm - pair.d_minus),
            abs(ffp - pair.ff_plus), abs(ffm - pair.ff_minus))


def _profile(sol):
    eta = sol.h[:, -1]
    return float(eta.min()), float(eta.max())


# ---------------------------------------------------------------------------
# individual checks


def verify_benjamin_lighthill(sol: WaveSolution, ff=None) -> Check:
    """FF_-(r) <= FF <= FF_+(r).

    Tolerance: max(1e-8, 10 * column deviation, 2 * grid shift of FF_+-), the
    last term being the distance between the exact conjugate flow forces and
    those of the discrete conjugate streams (zero for irrotational flow).
    """
    name = "benjamin_lighthill"
    try:
        pair = _pair(sol)
    except WaveforceError as exc:
        return Check(name, INCONCLUSIVE, detail=f"no conjugate pair: {exc}")
    ffv = flow_force(sol) if ff is None else ff
    shifts = _discretisation_shifts(sol, pair)
    tau = _t(max(TAU_FF, 10.0 * ffv.max_column_deviation, 2.0 * max(shifts[2:])))
    lower = ffv.ff - pair.ff_minus
    upper = pair.ff_plus - ffv.ff
    margin = min(lower, upper)
    status = PASS if margin >= -tau else FAIL
    if _is_laminar(sol):
        cls = "laminar: equality expected on one side"
    elif lower <= tau:
        cls = "FF - FF_- within tolerance (solitary-like)"
    else:
        cls = "strict"
    return Check(name, status, lhs=ffv.ff, rhs=pair.ff_minus if lower < upper else pair.ff_plus,
                 margin=margin, tolerance=tau, detail=cls,
                 extra={"margin_lower": lower, "margin_upper": upper,
                        "ff_minus": pair.ff_minus, "ff_plus": pair.ff_plus})


def verify_profile_bounds(sol: WaveSolution) -> list:
    """d_-(r) < min eta, min eta <= d_+(r), max eta >= d_+(r)."""
    try:
        pair = _pair(sol)
    except WaveforceError as exc:
        return [Check(n, INCONCLUSIVE, detail=f"no conjugate pair: {exc}")
                for n in ("profile_above_d_minus", "trough_below_d_plus", "crest_above_d_plus")]
    lo, hi = _profile(sol)
    tau = _t(max(TAU_W, 2.0 * max(_discretisation_shifts(sol, pair)[:2])))
    laminar = _is_laminar(sol)
    out = []

    m1 = lo - pair.d_minus
    detail = "strict" if m1 > tau else "equality: supercritical laminar or solitary limit"
    out.append(Check("profile_above_d_minus", PASS if m1 >= -tau else FAIL,
                     lhs=lo, rhs=pair.d_minus, margin=m1, tolerance=tau, detail=detail))

    m2, m3 = pair.d_plus - lo, hi - pair.d_plus
    if laminar and abs(lo - pair.d_minus) <= tau:
        # a supercritical laminar flow is the equality case of the first bound;
        # the trough/crest bracketing of d_+ does not apply to it
        for n, m, lhs in (("trough_below_d_plus", m2, lo), ("crest_above_d_plus", m3, hi)):
            out.append(Check(n, INCONCLUSIVE, lhs=lhs, rhs=pair.d_plus, margin=m, tolerance=tau,
                             detail="supercritical laminar flow: bracketing of d_+ not applicable"))
        return out
    eq = laminar and abs(lo - pair.d_plus) <= tau and abs(hi - pair.d_plus) <= tau
    detail = "equality: subcritical laminar (min = max = d_+)" if eq else ""
    out.append(Check("trough_below_d_plus", PASS if m2 >= -tau else FAIL,
                     lhs=lo, rhs=pair.d_plus, margin=m2, tolerance=tau,
                     detail=detail or ("strict" if m2 > tau else "")))
    out.append(Check("crest_above_d_plus", PASS if m3 >= -tau else FAIL,
                     lhs=hi, rhs=pair.d_plus, margin=m3, tolerance=tau,
                     detail=detail or ("strict" if m3 > tau else "")))
    return out


def _refined_min(q, y):
    """Minimum of a periodic sampled function with a parabola through the best node."""
    i = int(np.argmin(y))
    n = len(y)
    ym, y0, yp = y[(i - 1) % n], y[i], y[(i + 1) % n]
    denom = ym - 2.0 * y0 + yp
    if denom <= 0.0:
        return float(y0), i, 0.0
    t = 0.5 * (ym - yp) / denom  # offset in grid steps, |t| <= 1/2
    return float(y0 - 0.25 * (ym - yp) * t), i, float(t)


def verify_flux_min_kappa(sol: WaveSolution, s: float, ff=None) -> Check:
    """min_q Phi^(s)(q,1) = kappa(s; r, FF) whenever that minimum is non-positive."""
    name = f"flux_min_kappa[s={s:.6g}]"
    ffv = flow_force(sol) if ff is None else ff
    fld = flux_function(sol, s, ffv.ff)
    resid = flux_boundary_identity(sol, s, ffv.ff, field=fld)
    tau = _t(max(TAU_KAPPA, 10.0 * resid))
    k = kappa(sol.model, s, sol.r, ffv.ff)
    m, i, t = _refined_min(sol.grid.q, fld.top_trace)
    dr = sol.r - bernoulli_of_slip(sol.model, s)
    if m > tau:
        return Check(name, INCONCLUSIVE, lhs=m, rhs=k, margin=m - k, tolerance=tau,
                     detail="min of Phi(q,1) > 0: hypothesis inf <= 0 not met")
    wt = fld.w[:, -1]
    n = len(wt)
    w_star = wt[i] + t * 0.5 * (wt[(i + 1) % n] - wt[(i - 1) % n])
    w_gap = abs(w_star - dr)
    # Phi(q,1) = kappa + (w - (r - R))^2, so the minimiser's w is close to r - R
    w_tol = math.sqrt(2.0 * tau)
    gap = abs(m - k)
    status = PASS if gap <= tau and w_gap <= w_tol else FAIL
    return Check(name, status, lhs=m, rhs=k, margin=tau - gap, tolerance=tau,
                 detail=f"w(q*,1)-(r-R)={w_star - dr:.3e}",
                 extra={"w_at_min": w_star, "r_minus_R": dr, "w_tolerance": w_tol,
                        "identity_residual": resid})


def verify_w_sign(sol: WaveSolution) -> Check:
    """w^(s_plus) >= 0 at every node.

    The tolerance is 1e-8 or, for sheared streams where the grid cannot
    represent H(p; s_plus) exactly, the measured distance between the
    discrete and the exact stream on the same grid.
    """
    name = "w_sign_s_plus"
    try:
        pair = _pair(sol)
    except WaveforceError as exc:
        return Check(name, INCONCLUSIVE, detail=f"no conjugate pair: {exc}")
    w = w_field(sol, pair.s_plus)
    disc = _stream_discretisation(sol, pair.s_plus)
    tau = _t(max(TAU_W, disc))
    m = float(w.min())
    return Check(name, PASS if m >= -tau else FAIL, lhs=m, rhs=0.0, margin=m, tolerance=tau,
                 extra={"stream_discretisation": disc})


def fit_tail_decay(sol: WaveSolution, tol: float = NEWTON_TOL):
    """Fit log|eta - d_-(r)| on q in [L/8, 3L/8] (both sides of the crest at q = 0).

    Returns (rate, n_points, lambda_1); rate is None when fewer than five
    points exceed 1e3 * tol.
    """
    pair = _pair(sol)
    lam = decay_rate(sol.model, pair.s_plus)
    L = sol.grid.L
    q = sol.grid.q
    dist = np.minimum(q, L - q)
    dev = np.abs(sol.h[:, -1] - pair.d_minus)
    sel = (dist >= L / 8) & (dist <= 3 * L / 8) & (dev > 1e3 * tol)
    if sel.sum() < 5:
        return None, int(sel.sum()), lam
    slope = np.polyfit(dist[sel], np.log(dev[sel]), 1)[0]
    return float(-slope), int(sel.sum()), lam


def verify_decay_rate(sol: WaveSolution) -> Check:
    """Tail decay of a near-solitary wave against lambda_1 of the supercritical stream."""
    name = "solitary_decay_rate"
    if not is_near_solitary(sol):
        return Check(name, INCONCLUSIVE, detail="not a near-solitary solution")
    rate, npts, lam = fit_tail_decay(sol)
    if rate is None:
        return Check(name, INCONCLUSIVE, rhs=lam,
                     detail=f"tail below 1e3 x solver tolerance ({npts} usable points)")
    rel = abs(rate - lam) / lam
    tol = _t(DECAY_RTOL)
    return Check(name, PASS if rel <= tol else FAIL, lhs=rate, rhs=lam,
                 margin=tol - rel, tolerance=tol, detail=f"{npts} points")


# ---------------------------------------------------------------------------
# report


def _grad_floor(grid):
    return _t(TAU_GRADIENT_128) * 0.5 * ((128 / grid.n_q) ** 2 + (128 / grid.n_p) ** 2)


def _guard(name, fn, *args):
    try:
        out = fn(*args)
    except Exception as exc:  # any error makes that single check inconclusive
        return [Check(name, INCONCLUSIVE, detail=f"{type(exc).__name__}: {exc}")]
    return out if isinstance(out, list) else [out]


def full_report(sol: WaveSolution, tol_scale: float = 1.0, probes=None) -> VerificationReport:
    """All checks in a fixed order, plus solution metadata.

    ``tol_scale`` multiplies every tolerance (1 reproduces the defaults).
    ``probes`` overrides the reference slips of the flux checks, which
    default to s_minus, s_plus and their midpoint.
    """
    if not (tol_scale > 0 and math.isfinite(tol_scale)):
        raise ValueError("tol_scale must be a positive finite number")
    token = _TOL_SCALE.set(float(tol_scale))
    try:
        rep = _full_report(sol, probes)
    finally:
        _TOL_SCALE.reset(token)
    rep.metadata["tol_scale"] = float(tol_scale)
    return rep


def _full_report(sol: WaveSolution, probes=None) -> VerificationReport:
    checks = []
    res_tol = _t(TAU_RESIDUAL)
    checks.append(Check("solver_residual", PASS if sol.residual_norm <= res_tol else FAIL,
                        lhs=sol.residual_norm, rhs=0.0, margin=res_tol - sol.residual_norm,
                        tolerance=res_tol))
    meta = {"r": sol.r, "amplitude": sol.amplitude, "residual_norm": sol.residual_norm,
            "n_q": sol.grid.n_q, "n_p": sol.grid.n_p, "L": sol.grid.L}
    lo, hi = _profile(sol)
    meta.update(eta_min=lo, eta_max=hi)
    try:
        ffv = flow_force(sol)
        meta.update(ff=ffv.ff, ff_column_deviation=ffv.max_column_deviation)
    except Exception as exc:
        ffv = None
        checks.append(Check("flow_force", INCONCLUSIVE, detail=f"{type(exc).__name__}: {exc}"))
    try:
        pair = _pair(sol)
        meta.update(s_minus=pair.s_minus, s_plus=pair.s_plus, d_minus=pair.d_minus,
                    d_plus=pair.d_plus, ff_minus=pair.ff_minus, ff_plus=pair.ff_plus)
        if probes is None:
            probes = [pair.s_minus, pair.s_plus, 0.5 * (pair.s_minus + pair.s_plus)]
    except WaveforceError as exc:
        pair = None
        probes = [] if probes is None else probes
        meta["conjugate_pair_error"] = str(exc)

    checks += _guard("benjamin_lighthill", verify_benjamin_lighthill, sol, ffv)
    checks += _guard("profile_bounds", verify_profile_bounds, sol)
    checks += _guard("w_sign_s_plus", verify_w_sign, sol)
    for s in probes:
        checks += _guard(f"flux_min_kappa[s={s:.6g}]", verify_flux_min_kappa, sol, s, ffv)
    checks += _guard("solitary_decay_rate", verify_decay_rate, sol)

    if ffv is not None:
        tau_id = _t(max(TAU_IDENTITY, 4.0 * ffv.max_column_deviation))
        for s in probes:
            name = f"flux_boundary_identity[s={s:.6g}]"

            def identity(s=s, name=name):
                res = flux_boundary_identity(sol, s, ffv.ff)
                return Check(name, PASS if res <= tau_id else FAIL, lhs=res, rhs=0.0,
                             margin=tau_id - res, tolerance=tau_id)

            checks += _guard(name, identity)
        for s in probes[:1]:
            name = f"flux_gradient[s={s:.6g}]"

            def gradient(s=s, name=name):
                g = flux_gradient_check(flux_function(sol, s, ffv.ff), sol, s)
                floor = _grad_floor(sol.grid)
                tq, tp = max(floor, _t(2.0 * g.est_q)), max(floor, _t(2.0 * g.est_p))
                margin = min(tq - g.max_err_q, tp - g.max_err_p)
                return Check(name, PASS if margin >= 0 else FAIL, lhs=max(g.max_err_q, g.max_err_p),
                             rhs=0.0, margin=margin, tolerance=max(tq, tp),
                             extra={"err_q": g.max_err_q, "err_p": g.max_err_p,
                                    "tol_q": tq, "tol_p": tp})

            checks += _guard(name, gradient)

        def invariance():
            phys = flow_force_physical(sol)
            d, tol = abs(phys - ffv.ff), _t(TAU_INVARIANCE)
            return Check("ff_coordinate_invariance", PASS if d <= tol else FAIL,
                         lhs=phys, rhs=ffv.ff, margin=tol - d, tolerance=tol)

        def conservation():
            rel, tol = ffv.max_column_deviation / abs(ffv.ff), _t(TAU_INVARIANCE)
            return Check("ff_column_conservation", PASS if rel <= tol else FAIL,
                         lhs=rel, rhs=0.0, margin=tol - rel, tolerance=tol)

        checks += _guard("ff_coordinate_invariance", invariance)
        checks += _guard("ff_column_conservation", conservation)

    meta["probes"] = [float(s) for s in probes]
    meta["near_solitary"] = bool(pair is not None and is_near_solitary(sol))
    return VerificationReport(checks=checks, metadata=meta)
