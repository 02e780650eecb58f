import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from waveforce.diagnostics import (
    bernoulli,
    kappa,
    kappa_derivative,
    sigma,
    sigma_derivative,
)
from waveforce.dispersion import principal_eigenpair
from waveforce.fileio import format_csv, format_header, parse_header
from waveforce.laminar import conjugate_streams, critical_slip, depth, regime_constants
from waveforce.vorticity import VorticityModel, eval_Omega, eval_omega, slip_lower_bound
from waveforce.wavesolver import WaveGrid, residual

FAST = settings(max_examples=40, deadline=None)
b_values = st.floats(-2.0, 2.0).filter(lambda b: abs(b) > 1e-3)
affine = st.builds(VorticityModel.affine, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))


@FAST
@given(affine, st.floats(0.05, 0.95))
def test_primitive_derivative_is_vorticity(m, p):
    h = 1e-6
    fd = (eval_Omega(m, p + h) - eval_Omega(m, p - h)) / (2 * h)
    assert abs(fd - eval_omega(m, p)) < 1e-8


@FAST
@given(affine, st.floats(0.05, 4.0))
def test_depth_decreasing_in_slip(m, ds):
    s = slip_lower_bound(m) + ds
    assert depth(m, s + 0.01) < depth(m, s)


@FAST
@given(b_values, st.floats(0.05, 4.0))
def test_constant_vorticity_depth_closed_form(b, ds):
    m = VorticityModel.constant(-b)  # omega = -b
    s = slip_lower_bound(m) + ds
    assert abs(depth(m, s) - (math.sqrt(s * s + 2 * b) - s) / b) < 1e-10


@FAST
@given(affine, st.floats(0.01, 3.0))
def test_bernoulli_minimal_at_critical_slip(m, ds):
    sc = critical_slip(m)
    s = slip_lower_bound(m) + ds
    assert bernoulli(m, s) >= regime_constants(m).R_c - 1e-12
    assume(abs(s - sc) > 1e-3)
    assert bernoulli(m, s) > bernoulli(m, sc)


@FAST
@given(st.sampled_from([0.0, -1.0, 0.5]), st.floats(0.001, 0.999))
def test_conjugate_pair_properties(b, frac):
    m = VorticityModel.constant(b)
    rc = regime_constants(m)
    r = rc.R_c + frac * (min(rc.R_0, rc.R_c + 3.0) - rc.R_c)
    pair = conjugate_streams(m, r)
    assert pair.s_minus < rc.s_c < pair.s_plus
    assert abs(bernoulli(m, pair.s_minus) - r) < 1e-10
    assert abs(bernoulli(m, pair.s_plus) - r) < 1e-10
    assert pair.d_minus < pair.d_plus
    assert pair.ff_minus <= pair.ff_plus + 1e-12


@FAST
@given(affine, st.floats(0.1, 3.0), st.floats(1.0, 4.0))
def test_diagnostic_derivatives_match_differences(m, ds, r):
    s = slip_lower_bound(m) + ds
    h = 1e-6
    fd_sigma = (sigma(m, s + h, r) - sigma(m, s - h, r)) / (2 * h)
    fd_kappa = (kappa(m, s + h, r, 2.0) - kappa(m, s - h, r, 2.0)) / (2 * h)
    assert abs(fd_sigma - sigma_derivative(m, s, r)) < 1e-6 * max(1.0, abs(fd_sigma))
    assert abs(fd_kappa - kappa_derivative(m, s, r)) < 1e-6 * max(1.0, abs(fd_kappa))


@FAST
@given(affine, st.floats(0.1, 3.0), st.floats(1.0, 4.0), st.floats(-3, 3), st.floats(-3, 3))
def test_kappa_affine_in_flow_force(m, ds, r, f1, f2):
    s = slip_lower_bound(m) + ds
    assert abs(kappa(m, s, r, f1) - kappa(m, s, r, f2) - 2 * (f1 - f2)) < 1e-12


@FAST
@given(affine, st.floats(0.1, 3.0), st.floats(1.0, 4.0), st.floats(0.5, 3), st.floats(-1, 1))
def test_top_trace_completes_square(m, ds, r, ff, w):
    # 2 (FF - sigma) - 2 (r - R) w + w^2 = kappa + (w - (r - R))^2
    s = slip_lower_bound(m) + ds
    dr = r - bernoulli(m, s)
    lhs = 2 * (ff - sigma(m, s, r)) - 2 * dr * w + w * w
    assert abs(lhs - kappa(m, s, r, ff) - (w - dr) ** 2) < 1e-11


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([0.0, -1.0]), st.floats(0.5, 3.0))
def test_eigenvalue_sign_matches_regime(b, s):
    m = VorticityModel.constant(b)
    sc = critical_slip(m)
    assume(abs(s - sc) > 0.02)
    assume(s > 0.6 or b == -1.0)  # omega = 0 below 0.5 needs more nodes
    mu = principal_eigenpair(m, s).mu
    assert (mu > 0) == (s > sc)


def _field(coeffs, grid, s=0.9):
    q, p = grid.q[:, None], grid.p[None, :]
    k = 2 * np.pi / grid.L
    h = p / s
    for n, (a, c) in enumerate(coeffs, start=1):
        h = h + p * p * (a * np.cos(n * k * q) + c * np.sin(n * k * q))
    return h


coeff_lists = st.lists(st.tuples(st.floats(-0.02, 0.02), st.floats(-0.02, 0.02)), min_size=1, max_size=3)


@FAST
@given(coeff_lists, st.integers(0, 31))
def test_residual_translation_equivariant(coeffs, shift):
    g = WaveGrid(5.0, 32, 17)
    h = _field(coeffs, g)
    res = residual(VorticityModel.constant(-1.0), g, h, 1.8)
    res_shift = residual(VorticityModel.constant(-1.0), g, np.roll(h, shift, axis=0), 1.8)
    assert np.max(np.abs(res_shift - np.roll(res, shift, axis=0))) < 1e-10


@FAST
@given(coeff_lists)
def test_residual_reflection_equivariant(coeffs):
    g = WaveGrid(5.0, 32, 17)
    h = _field(coeffs, g)
    flip = lambda f: np.roll(f[::-1], 1, axis=0)
    m = VorticityModel.affine(0.4, -1.0)
    res = residual(m, g, h, 1.8)
    assert np.max(np.abs(residual(m, g, flip(h), 1.8) - flip(res))) < 1e-10


json_scalars = st.one_of(st.none(), st.booleans(), st.integers(-10**6, 10**6),
                         st.floats(allow_nan=False, allow_infinity=False),
                         st.text(st.characters(blacklist_categories=("Cs", "Cc")), max_size=12))
json_values = st.recursive(json_scalars, lambda c: st.lists(c, max_size=3)
                           | st.dictionaries(st.text("abc", min_size=1, max_size=4), c, max_size=3),
                           max_leaves=8)


@FAST
@given(st.dictionaries(st.from_regex(r"[a-z_]{1,10}", fullmatch=True), json_values, max_size=6))
def test_header_round_trip(items):
    head, _ = parse_header(format_header(sorted(items.items())).splitlines() + ["x"])
    assert head == items


@FAST
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=8))
def test_csv_float_round_trip(values):
    text = format_csv(["v"], [(v,) for v in values])
    back = [float(x) for x in text.splitlines()[1:]]
    assert back == values
