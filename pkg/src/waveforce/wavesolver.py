"""
Periodic steady waves with vorticity in height-function (Dubreil-Jacotin)
variables.

The unknown is h(q, p) on one period [0, L) x [0, 1] with

    ((1 + h_q^2) / (2 h_p^2) + Omega)_p - (h_q / h_p)_q = 0   inside,
    (1 + h_q^2) / (2 h_p^2) + h = r                           on p = 1,
    h = 0                                                     on p = 0.

The interior equation is discretised in divergence form with fluxes at half
nodes (9-point compact stencil, second order); the top condition uses a
centred h_q and a one-sided second-order h_p. Newton iteration with an exact
sparse Jacobian solves for (h, r) under an amplitude constraint.

Translations in q map solutions to solutions, so the bare system
{residual, amplitude} is singular on every non-trivial wave. A phase
condition (the correction is orthogonal to the translation mode of the
initial guess) pins the translate, and a scalar unfolding parameter ``nu``
multiplying a fixed odd forcing keeps the bordered system square. ``nu``
vanishes on converged solutions; it is reported for inspection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigError, ConvergenceError, DegeneracyError
from .laminar import depth, stream_profile
from .vorticity import VorticityModel, slip_lower_bound

EPS_UNI = 1e-6
NEWTON_TOL = 1e-10
MAX_NEWTON = 50
MAX_HALVINGS = 20

MEASURES = ("crest-trough", "crest-offset")


@dataclass(frozen=True)
class WaveGrid:
    L: float
    n_q: int
    n_p: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ConfigError(f"period L must be positive, got {self.L!r}")
        if self.n_q < 16 or self.n_q % 2:
            raise ConfigError(f"n_q must be an even integer >= 16, got {self.n_q!r}")
        if self.n_p < 16:
            raise ConfigError(f"n_p must be >= 16, got {self.n_p!r}")

    @property
    def dq(self) -> float:
        return self.L / self.n_q

    @property
    def dp(self) -> float:
        return 1.0 / (self.n_p - 1)

    @property
    def q(self) -> np.ndarray:
        return np.arange(self.n_q) * self.dq

    @property
    def p(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_p)


@dataclass(frozen=True)
class AmplitudeConstraint:
    measure: str = "crest-trough"
    value: float = 0.0
    s_ref: float | None = None  # slip whose depth is the crest-offset reference

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ConfigError(f"unknown amplitude measure {self.measure!r}; expected one of {MEASURES}")
        if self.measure == "crest-offset" and self.s_ref is None:
            raise ConfigError("crest-offset amplitude needs a reference slip s_ref")


@dataclass(frozen=True)
class WaveSolution:
    grid: WaveGrid
    h: np.ndarray
    r: float
    model: VorticityModel
    amplitude: float
    residual_norm: float
    measure: str = "crest-trough"
    s_seed: float | None = None
    iterations: int = 0
    history: tuple = ()
    nu: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class SurfaceProfile:
    q: np.ndarray
    eta: np.ndarray
    min: float
    max: float
    mean: float


@dataclass(frozen=True)
class PhysicalFields:
    y: np.ndarray
    psi: np.ndarray
    rel_u: np.ndarray  # c - u
    v: np.ndarray
    pressure: np.ndarray  # P - P_atm


class Branch(list):
    """Solutions along an amplitude continuation, with the early-stop reason."""

    def __init__(self, items=(), stop_reason=None):
        super().__init__(items)
        self.stop_reason = stop_reason


# ---------------------------------------------------------------------------
# difference stencils shared with the post-processing modules


def d_dq(f: np.ndarray, dq: float) -> np.ndarray:
    """Centred periodic derivative along axis 0."""
    return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * dq)


def d_dp(f: np.ndarray, dp: float) -> np.ndarray:
    """Derivative along the last axis: centred inside, one-sided second order at the ends."""
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * dp)
    out[..., 0] = (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2]) / (2.0 * dp)
    out[..., -1] = (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * dp)
    return out


_END4 = np.array([[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]]) / 12.0


def d_dp4(f: np.ndarray, dp: float) -> np.ndarray:
    """Fourth-order p-derivative: 5-point centred inside, 5-point one-sided near the ends."""
    out = np.empty_like(f)
    out[..., 2:-2] = (f[..., :-4] - 8.0 * f[..., 1:-3] + 8.0 * f[..., 3:-1] - f[..., 4:]) / (12.0 * dp)
    head = f[..., :5]
    tail = f[..., ::-1][..., :5]
    out[..., 0] = head @ _END4[0] / dp
    out[..., 1] = head @ _END4[1] / dp
    out[..., -1] = -(tail @ _END4[0]) / dp
    out[..., -2] = -(tail @ _END4[1]) / dp
    return out


# ---------------------------------------------------------------------------
# residual and Jacobian


def _fluxes(model, grid, h):
    D, E = grid.dp, grid.dq
    hn = np.roll(h, -1, axis=0)
    hs = np.roll(h, 1, axis=0)
    p_half = 0.5 * (grid.p[:-1] + grid.p[1:])

    hp_a = (h[:, 1:] - h[:, :-1]) / D
    hq_a = (hn[:, :-1] + hn[:, 1:] - hs[:, :-1] - hs[:, 1:]) / (4.0 * E)

    hq_b = (hn[:, 1:-1] - h[:, 1:-1]) / E
    hp_b = (h[:, 2:] - h[:, :-2] + hn[:, 2:] - hn[:, :-2]) / (4.0 * D)

    hq_t = (hn[:, -1] - hs[:, -1]) / (2.0 * E)
    hp_t = (3.0 * h[:, -1] - 4.0 * h[:, -2] + h[:, -3]) / (2.0 * D)
    return p_half, hp_a, hq_a, hp_b, hq_b, hp_t, hq_t


def min_hp(model, grid, h):
    """Smallest h_p over every stencil used by the residual, and where it occurs."""
    _, hp_a, _, hp_b, _, hp_t, _ = _fluxes(model, grid, h)
    candidates = [
        (hp_a.min(), "p-half", np.unravel_index(hp_a.argmin(), hp_a.shape)),
        (hp_b.min(), "q-half", np.unravel_index(hp_b.argmin(), hp_b.shape)),
        (hp_t.min(), "top", (int(hp_t.argmin()),)),
    ]
    return min(candidates, key=lambda c: c[0])


def _check_uni(model, grid, h, eps=EPS_UNI):
    value, where, idx = min_hp(model, grid, h)
    if not value > eps:
        raise DegeneracyError(
            f"unidirectionality about to fail: h_p = {value:.3e} <= {eps:g} at {where} node {idx}",
            node=(where, idx), value=value,
        )


def residual(model: VorticityModel, grid: WaveGrid, h: np.ndarray, r: float,
             forcing: np.ndarray | None = None) -> np.ndarray:
    """Discrete residual field, same shape as ``h``.

    Row p = 0 carries h itself, interior rows the divergence-form equation,
    row p = 1 the Bernoulli condition. An optional ``forcing`` field (same
    shape) is subtracted, as used by manufactured-solution tests.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (grid.n_q, grid.n_p):
        raise ValueError(f"h has shape {h.shape}, grid expects {(grid.n_q, grid.n_p)}")
    _check_uni(model, grid, h)
    p_half, hp_a, hq_a, hp_b, hq_b, hp_t, hq_t = _fluxes(model, grid, h)
    A = (1.0 + hq_a**2) / (2.0 * hp_a**2) + model.Omega(p_half)[None, :]
    B = hq_b / hp_b
    out = np.empty_like(h)
    out[:, 0] = h[:, 0]
    out[:, 1:-1] = (A[:, 1:] - A[:, :-1]) / grid.dp - (B - np.roll(B, 1, axis=0)) / grid.dq
    out[:, -1] = (1.0 + hq_t**2) / (2.0 * hp_t**2) + h[:, -1] - r
    if forcing is not None:
        out -= forcing
    return out


def nondivergence_residual(model: VorticityModel, grid: WaveGrid, h: np.ndarray) -> np.ndarray:
    """(1+h_q^2)/h_p^2 h_pp - 2 h_q/h_p h_qp + h_qq - omega h_p at interior nodes.

    Equals -h_p times the divergence-form operator for smooth h.
    """
    D, E = grid.dp, grid.dq
    hq = d_dq(h, E)
    hp = d_dp(h, D)
    hpp = (h[:, 2:] - 2.0 * h[:, 1:-1] + h[:, :-2]) / D**2
    hqq = (np.roll(h, -1, 0) - 2.0 * h + np.roll(h, 1, 0))[:, 1:-1] / E**2
    hqp = d_dq(hp, E)[:, 1:-1]
    hq, hp = hq[:, 1:-1], hp[:, 1:-1]
    om = model.omega(grid.p[1:-1])[None, :]
    return (1.0 + hq**2) / hp**2 * hpp - 2.0 * hq / hp * hqp + hqq - om * hp


def _jacobian(model, grid, h):
    """Sparse d(residual rows p>0)/d(h at p>0), unknown (i, j) -> i*(n_p-1) + j-1."""
    nq, N = grid.n_q, grid.n_p - 1
    D, E = grid.dp, grid.dq
    _, hp_a, hq_a, hp_b, hq_b, hp_t, hq_t = _fluxes(model, grid, h)
    rows, cols, vals = [], [], []

    def add(eq_i, eq_j, node_i, node_j, v):
        eq_i, eq_j, node_i, node_j, v = np.broadcast_arrays(eq_i, eq_j, node_i, node_j, v)
        keep = (node_j >= 1) & (eq_j >= 1)
        rows.append(((eq_i % nq) * N + eq_j - 1)[keep])
        cols.append(((node_i % nq) * N + node_j - 1)[keep])
        vals.append(v[keep])

    # fluxes A at (i, j+1/2), j = 0..N-1
    I, JA = np.meshgrid(np.arange(nq), np.arange(N), indexing="ij")
    A_hp = -(1.0 + hq_a**2) / hp_a**3
    A_hq = hq_a / hp_a**2
    stencil_a = [
        (0, 1, A_hp / D), (0, 0, -A_hp / D),
        (1, 0, A_hq / (4 * E)), (1, 1, A_hq / (4 * E)),
        (-1, 0, -A_hq / (4 * E)), (-1, 1, -A_hq / (4 * E)),
    ]
    # flux j+1/2 enters interior row j with +1/D and row j+1 with -1/D
    for di, dj, c in stencil_a:
        m = JA >= 1
        add(I[m], JA[m], I[m] + di, JA[m] + dj, c[m] / D)
        m = JA + 1 <= N - 1
        add(I[m], JA[m] + 1, I[m] + di, JA[m] + dj, -c[m] / D)

    # fluxes B at (i+1/2, j), j = 1..N-1
    I, JB = np.meshgrid(np.arange(nq), np.arange(1, N), indexing="ij")
    B_hq = 1.0 / hp_b
    B_hp = -hq_b / hp_b**2
    stencil_b = [
        (1, 0, B_hq / E), (0, 0, -B_hq / E),
        (0, 1, B_hp / (4 * D)), (1, 1, B_hp / (4 * D)),
        (0, -1, -B_hp / (4 * D)), (1, -1, -B_hp / (4 * D)),
    ]
    for di, dj, c in stencil_b:
        add(I, JB, I + di, JB + dj, -c / E)
        add(I + 1, JB, I + di, JB + dj, c / E)

    # Bernoulli rows at j = N
    i = np.arange(nq)
    T_hp = -(1.0 + hq_t**2) / hp_t**3
    T_hq = hq_t / hp_t**2
    for di, dj, c in [
        (0, 0, 1.5 * T_hp / D + 1.0), (0, -1, -2.0 * T_hp / D), (0, -2, 0.5 * T_hp / D),
        (1, 0, T_hq / (2 * E)), (-1, 0, -T_hq / (2 * E)),
    ]:
        add(i, N, i + di, N + dj, c)

    n = nq * N
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def residual_jacobian(model: VorticityModel, grid: WaveGrid, h: np.ndarray) -> sp.csr_matrix:
    """Exact Jacobian of the residual rows p > 0 w.r.t. h at p > 0 (r-column is -1 on top rows)."""
    _check_uni(model, grid, h)
    return _jacobian(model, grid, np.asarray(h, dtype=float))


# ---------------------------------------------------------------------------
# Newton solver


def _odd_mode(grid, eta_seed):
    """Normalised translation mode of the seed surface (sin fallback when flat)."""
    t = d_dq(eta_seed, grid.dq)
    scale = np.max(np.abs(t))
    if scale > 1e-9:
        return t / scale
    return np.sin(2.0 * np.pi * grid.q / grid.L)


def newton_solve(model: VorticityModel, grid: WaveGrid, h_init: np.ndarray, r_init: float,
                 constraint: AmplitudeConstraint, tol: float = NEWTON_TOL,
                 max_iter: int = MAX_NEWTON, eps_uni: float = EPS_UNI) -> WaveSolution:
    """Solve {residual = 0, amplitude = a, phase = 0} for (h, r, nu).

    Steps are halved (at most MAX_HALVINGS times) until every iterate keeps
    h_p > eps_uni. Converged when the max-norm of all equations is below tol.
    """
    nq, N = grid.n_q, grid.n_p - 1
    n = nq * N
    h = np.array(h_init, dtype=float)
    if h.shape != (nq, grid.n_p):
        raise ValueError(f"h_init has shape {h.shape}, grid expects {(nq, grid.n_p)}")
    h[:, 0] = 0.0
    _check_uni(model, grid, h, eps_uni)

    top = np.arange(nq) * N + (N - 1)
    i_crest, i_trough = top[0], top[nq // 2]
    odd = _odd_mode(grid, h[:, -1])
    eta_seed = h[:, -1].copy()
    forcing = np.zeros((nq, N))
    forcing[:, :-1] = odd[:, None] * grid.p[None, 1:-1]
    forcing = forcing.ravel()
    d_ref = depth(model, constraint.s_ref) if constraint.measure == "crest-offset" else None

    # constant border rows/columns
    c_row = np.zeros(n)
    if constraint.measure == "crest-trough":
        c_row[i_crest], c_row[i_trough] = 1.0, -1.0
    else:
        c_row[i_crest] = 1.0
    ph_row = np.zeros(n)
    ph_row[top] = odd
    r_col = np.zeros(n)
    r_col[top] = -1.0
    border_cols = sp.csr_matrix(np.column_stack([r_col, forcing]))
    border_rows = sp.csr_matrix(np.vstack([
        np.concatenate([c_row, [0.0, 0.0]]),
        np.concatenate([ph_row, [0.0, 0.0]]),
    ]))

    r, nu = float(r_init), 0.0

    def equations(h, r, nu):
        res = residual(model, grid, h, r)[:, 1:].ravel() + nu * forcing
        eta = h[:, -1]
        if constraint.measure == "crest-trough":
            c = eta[0] - eta[nq // 2] - constraint.value
        else:
            c = eta[0] - d_ref - constraint.value
        ph = float(odd @ (eta - eta_seed))
        return np.concatenate([res, [c, ph]])

    history = []
    for it in range(max_iter + 1):
        F = equations(h, r, nu)
        norm = float(np.max(np.abs(F)))
        history.append(norm)
        if norm < tol:
            break
        if it == max_iter:
            raise ConvergenceError(
                f"Newton did not converge in {max_iter} iterations (residual {norm:.3e})"
            )
        J = sp.bmat([[_jacobian(model, grid, h), border_cols], [border_rows[:, :n], None]], format="csc")
        # bmat drops the empty 2x2 corner; rebuild square shape explicitly
        J = sp.csc_matrix(J, shape=(n + 2, n + 2))
        step = splu(J).solve(-F)
        du = np.zeros_like(h)
        du[:, 1:] = step[:n].reshape(nq, N)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = h + t * du
            if min_hp(model, grid, trial)[0] > eps_uni:
                break
            t *= 0.5
        else:
            raise DegeneracyError(
                f"step halving could not keep h_p > {eps_uni:g} (iteration {it})"
            )
        h, r, nu = trial, r + t * step[n], nu + t * step[n + 1]

    res_field = residual(model, grid, h, r)
    return WaveSolution(
        grid=grid,
        h=h,
        r=r,
        model=model,
        amplitude=constraint.value,
        residual_norm=float(max(np.max(np.abs(res_field)), abs(F[-2]), abs(F[-1]))),
        measure=constraint.measure,
        s_seed=constraint.s_ref,
        iterations=len(history) - 1,
        history=tuple(history),
        nu=nu,
    )


# ---------------------------------------------------------------------------
# manufactured solutions


def manufactured_solution(model: VorticityModel, grid: WaveGrid, s: float, r: float,
                          eps: float = 0.01):
    """h* = H(p; s) + eps sin(2 pi q / L) p^2 and the forcing that makes it exact.

    The forcing is the continuous operator applied to h* in closed form:
    interior rows get (A)_p - (B)_q written in non-divergence form, the top
    row the Bernoulli expression, the bottom row zero.
    """
    k = 2.0 * np.pi / grid.L
    q, p = grid.q[:, None], grid.p[None, :]
    H, Hp = _stream_nodes(model, float(s), grid.n_p)
    om = np.asarray(model.omega(grid.p))[None, :]
    sn, cs = np.sin(k * q), np.cos(k * q)
    h = H[None, :] + eps * sn * p**2
    hq = eps * k * cs * p**2
    hp = Hp[None, :] + 2.0 * eps * sn * p
    hpp = om * Hp[None, :] ** 3 + 2.0 * eps * sn
    hqq = -eps * k * k * sn * p**2
    hqp = 2.0 * eps * k * cs * p
    f = -((1.0 + hq**2) * hpp / hp**2 - 2.0 * hq * hqp / hp + hqq - om * hp) / hp
    f[:, 0] = 0.0
    f[:, -1] = (1.0 + hq[:, -1] ** 2) / (2.0 * hp[:, -1] ** 2) + h[:, -1] - r
    return h, f


def solve_forced(model: VorticityModel, grid: WaveGrid, h_init: np.ndarray, r: float,
                 forcing: np.ndarray, tol: float = NEWTON_TOL, max_iter: int = MAX_NEWTON):
    """Plain Newton for residual(h, r) = forcing with r held fixed; returns (h, history)."""
    nq, N = grid.n_q, grid.n_p - 1
    h = np.array(h_init, dtype=float)
    h[:, 0] = forcing[:, 0]
    history = []
    for it in range(max_iter + 1):
        F = residual(model, grid, h, r, forcing)[:, 1:].ravel()
        history.append(float(np.max(np.abs(F))))
        if history[-1] < tol:
            return h, tuple(history)
        if it == max_iter:
            break
        step = splu(_jacobian(model, grid, h).tocsc()).solve(-F)
        h[:, 1:] += step.reshape(nq, N)
    raise ConvergenceError(f"forced Newton did not converge (residual {history[-1]:.3e})")


# ---------------------------------------------------------------------------
# laminar states on the grid


def discrete_laminar(model: VorticityModel, grid: WaveGrid, s: float,
                     tol: float = NEWTON_TOL) -> WaveSolution:
    """q-independent discrete solution with the surface at depth d(s).

    Solves the one-dimensional column problem (flux balance inside, Bernoulli
    on top, h(1) = d(s)) for (h_1..h_N, r) starting from the exact stream.
    """
    prof = stream_profile(model, s, grid.n_p)
    d = prof.depth
    D = grid.dp
    N = grid.n_p - 1
    p_half = 0.5 * (grid.p[:-1] + grid.p[1:])
    Om = model.Omega(p_half)
    x = np.concatenate([prof.H[1:], [prof.bernoulli]])

    def F(x):
        hcol = np.concatenate([[0.0], x[:-1]])
        hp = np.diff(hcol) / D
        A = 0.5 / hp**2 + Om
        hp_t = (3 * hcol[-1] - 4 * hcol[-2] + hcol[-3]) / (2 * D)
        return np.concatenate([np.diff(A) / D, [0.5 / hp_t**2 + hcol[-1] - x[-1], hcol[-1] - d]])

    def Jac(x):
        hcol = np.concatenate([[0.0], x[:-1]])
        hp = np.diff(hcol) / D
        dA = -1.0 / (hp**3 * D)  # d A_{k+1/2} / d h_{k+1}; the h_k derivative is its negative
        J = np.zeros((N + 1, N + 1))
        # row j-1 holds (A_{j+1/2} - A_{j-1/2}) / D; column k-1 holds h_k
        for j in range(1, N):
            for k, sign in ((j, 1.0), (j - 1, -1.0)):
                c = sign * dA[k] / D
                J[j - 1, k] += c
                if k >= 1:
                    J[j - 1, k - 1] -= c
        hp_t = (3 * hcol[-1] - 4 * hcol[-2] + hcol[-3]) / (2 * D)
        t = -1.0 / hp_t**3
        J[N - 1, N - 1] += 1.5 * t / D + 1.0
        J[N - 1, N - 2] += -2.0 * t / D
        if N - 3 >= 0:
            J[N - 1, N - 3] += 0.5 * t / D
        J[N - 1, N] = -1.0
        J[N, N - 1] = 1.0
        return J

    for _ in range(MAX_NEWTON):
        f = F(x)
        if np.max(np.abs(f)) < tol:
            break
        x = x - np.linalg.solve(Jac(x), f)
    else:
        raise ConvergenceError("discrete laminar column did not converge")
    col = np.concatenate([[0.0], x[:-1]])
    h = np.tile(col, (grid.n_q, 1))
    r = float(x[-1])
    res = residual(model, grid, h, r)
    return WaveSolution(
        grid=grid, h=h, r=r, model=model, amplitude=0.0,
        residual_norm=float(np.max(np.abs(res))), measure="crest-trough", s_seed=float(s),
    )


# ---------------------------------------------------------------------------
# continuation and post-processing


def seed_mode(model: VorticityModel, s: float, grid: WaveGrid):
    """(k, phi on grid.p, harmonic index m) for the linear wave on stream s with period grid.L."""
    from .dispersion import bifurcation_wavenumber, principal_eigenpair

    k = bifurcation_wavenumber(model, s)
    m = max(1, int(round(grid.L * k / (2.0 * np.pi))))
    if abs(grid.L - m * 2.0 * np.pi / k) > 1e-6 * grid.L:
        raise ConfigError(
            f"period L={grid.L} is not an integer multiple of 2*pi/k = {2 * np.pi / k}"
        )
    eig = principal_eigenpair(model, s, 129)
    phi = np.interp(grid.p, eig.p_grid, eig.phi)
    return k, phi, m


def continue_in_amplitude(model: VorticityModel, s: float, grid: WaveGrid, a_max: float,
                          n_steps: int, measure: str = "crest-trough",
                          tol: float = NEWTON_TOL) -> Branch:
    """March the amplitude from 0 to a_max in n_steps along the branch bifurcating from stream s.

    The first member is the discrete laminar flow; the first wave is seeded
    with the linear mode, later ones warm-start from the previous solution.
    Stops early (returning the prefix) if a solve fails.
    """
    base = discrete_laminar(model, grid, s, tol)
    base = replace(base, measure=measure)
    branch = Branch([base])
    if a_max == 0 or n_steps < 1:
        return branch
    _, phi, m = seed_mode(model, s, grid)
    cos = np.cos(2.0 * np.pi * m * grid.q / grid.L)
    prev = base
    for a in np.linspace(0.0, a_max, n_steps + 1)[1:]:
        if prev is base:
            c = 0.5 * a if measure == "crest-trough" else a
            h0 = base.h + c * cos[:, None] * phi[None, :]
        else:
            h0 = prev.h
        constraint = AmplitudeConstraint(measure, float(a), s_ref=s)
        try:
            sol = newton_solve(model, grid, h0, prev.r, constraint, tol=tol)
        except (ConvergenceError, DegeneracyError) as exc:
            branch.stop_reason = f"a={a:.6g}: {exc}"
            break
        sol = replace(sol, s_seed=float(s))
        branch.append(sol)
        prev = sol
    return branch


def surface_profile(sol: WaveSolution) -> SurfaceProfile:
    eta = sol.h[:, -1].copy()
    return SurfaceProfile(q=sol.grid.q, eta=eta, min=float(eta.min()),
                          max=float(eta.max()), mean=float(eta.mean()))


@lru_cache(maxsize=64)
def _stream_nodes(model: VorticityModel, s: float, n_p: int):
    prof = stream_profile(model, s, n_p)
    H, Hp = prof.H.copy(), prof.H_p.copy()
    H.flags.writeable = Hp.flags.writeable = False
    return H, Hp


def reference_slip(sol: WaveSolution) -> float | None:
    """Slip of the stream a solution is compared against when differentiating.

    The seeding slip when recorded, otherwise the inverse of the mean bottom
    slope (None if that is not an admissible slip).
    """
    if sol.s_seed is not None:
        return float(sol.s_seed)
    hp0 = float(np.mean(d_dp(sol.h, sol.grid.dp)[:, 0]))
    if hp0 > 0.0:
        s = 1.0 / hp0
        if s > slip_lower_bound(sol.model) and math.isfinite(s):
            return s
    return None


def height_derivatives(sol: WaveSolution, s_ref: float | None = None):
    """(h_q, h_p) at every node for post-processing.

    h_q uses the solver's centred stencil. h_p is the analytic slope of the
    reference stream plus a fourth-order stencil applied to the remainder
    h - H(p; s_ref). Streams with strong shear have a thin layer near the
    bed that a second-order stencil resolves poorly; the remainder is
    smoother and carries only the wave part.
    """
    grid, h = sol.grid, sol.h
    hq = d_dq(h, grid.dq)
    if s_ref is None:
        return hq, d_dp4(h, grid.dp)
    H, Hp = _stream_nodes(sol.model, float(s_ref), grid.n_p)
    return hq, Hp[None, :] + d_dp4(h - H[None, :], grid.dp)


SURFACE_STENCILS = ("solver", "smooth")


def reconstruct_physical(sol: WaveSolution, surface: str = "solver") -> PhysicalFields:
    """Velocities and pressure at every node from the height function.

    With ``surface="solver"`` the top row uses the solver's one-sided
    Bernoulli stencil, so P = P_atm there to solver tolerance. With
    ``surface="smooth"`` every row uses the post-processing stencils, which
    are more accurate for integrals over the column; the surface pressure
    then carries the solver's O(dp^2) stencil difference.
    """
    if surface not in SURFACE_STENCILS:
        raise ConfigError(f"surface must be one of {SURFACE_STENCILS}, got {surface!r}")
    grid, h, model = sol.grid, sol.h, sol.model
    hq, hp = height_derivatives(sol, reference_slip(sol))
    if surface == "solver":
        hp[:, -1] = (3.0 * h[:, -1] - 4.0 * h[:, -2] + h[:, -3]) / (2.0 * grid.dp)
    if not np.min(hp) > EPS_UNI:
        idx = np.unravel_index(np.argmin(hp), hp.shape)
        raise DegeneracyError(f"h_p = {hp[idx]:.3e} at node {idx}", node=idx, value=float(hp[idx]))
    Om = np.asarray(model.Omega(grid.p))[None, :]
    pressure = sol.r - h - (1.0 + hq**2) / (2.0 * hp**2) - (Om - model.Omega(1.0))
    return PhysicalFields(
        y=h.copy(),
        psi=np.broadcast_to(grid.p, h.shape).copy(),
        rel_u=1.0 / hp,
        v=-hq / hp,
        pressure=pressure,
    )


# ---------------------------------------------------------------------------
# long-period (near-solitary) waves

#: a periodic wave counts as near-solitary once L * lambda_1 reaches this
NEAR_SOLITARY_PERIODS = 40.0


def extend_period(sol: WaveSolution, L_new: float, n_q: int, tol: float = NEWTON_TOL) -> WaveSolution:
    """Re-solve a crest-centred wave on a longer period with the same crest-trough amplitude.

    The initial guess keeps the crest half-period of ``sol`` and fills the
    added length with its trough column, which is already close to the
    asymptotic stream when the trough is flat.
    """
    old = sol.grid
    if not L_new >= old.L:
        raise ConfigError(f"extend_period needs L_new >= {old.L}, got {L_new}")
    grid = WaveGrid(float(L_new), int(n_q), old.n_p)
    # distance from the crest, folded onto [0, L/2]
    q_old = np.minimum(old.q, old.L - old.q)
    order = np.argsort(q_old[: old.n_q // 2 + 1])
    half_q = q_old[: old.n_q // 2 + 1][order]
    half_h = sol.h[: old.n_q // 2 + 1][order]
    dist = np.minimum(grid.q, grid.L - grid.q)
    h0 = np.empty((grid.n_q, grid.n_p))
    for j in range(grid.n_p):
        h0[:, j] = np.interp(dist, half_q, half_h[:, j])  # constant beyond the old trough
    constraint = AmplitudeConstraint("crest-trough", sol.amplitude)
    new = newton_solve(sol.model, grid, h0, sol.r, constraint, tol=tol)
    return replace(new, s_seed=sol.s_seed)


def near_solitary_scale(sol: WaveSolution) -> tuple[float, float]:
    """(lambda_1, L * lambda_1) for the supercritical stream conjugate to the wave's r."""
    from .dispersion import decay_rate
    from .laminar import conjugate_streams

    pair = conjugate_streams(sol.model, sol.r)
    lam = decay_rate(sol.model, pair.s_plus)
    return lam, sol.grid.L * lam


def is_near_solitary(sol: WaveSolution) -> bool:
    """True when the period spans at least NEAR_SOLITARY_PERIODS decay lengths."""
    try:
        _, periods = near_solitary_scale(sol)
    except Exception:  # no conjugate pair or no decay rate: not a solitary approximation
        return False
    return periods >= NEAR_SOLITARY_PERIODS


def near_solitary_sequence(model: VorticityModel, multiples=(30.0, 45.0, 60.0), L0: float = 20.0,
                           n_q0: int = 160, n_p: int = 33, amplitude: float = 0.2,
                           n_steps: int = 20) -> list:
    """Crest-centred waves of fixed crest-trough amplitude on periods L = c / lambda_1.

    A Stokes wave of period L0 is continued to ``amplitude`` on the stream
    whose linear wavelength is L0, then re-solved on each longer period with
    the q-spacing of the base grid. lambda_1 is the decay rate of the
    supercritical stream conjugate to the base wave.
    """
    from .dispersion import stream_for_wavenumber

    s = stream_for_wavenumber(model, 2.0 * np.pi / L0)
    base_grid = WaveGrid(L0, n_q0, n_p)
    branch = continue_in_amplitude(model, s, base_grid, amplitude, n_steps)
    if branch.stop_reason:
        raise ConvergenceError(f"base continuation failed: {branch.stop_reason}")
    lam, _ = near_solitary_scale(branch[-1])
    out, prev = [], branch[-1]
    for c in sorted(multiples):
        L = c / lam
        n_q = 2 * int(round(L / base_grid.dq / 2))
        prev = extend_period(prev, L, n_q)
        out.append(prev)
    return out
