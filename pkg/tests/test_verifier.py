import json
from dataclasses import replace

import numpy as np
import pytest

from waveforce.diagnostics import kappa
from waveforce.flowforce import flow_force, flux_function
from waveforce.laminar import conjugate_streams
from waveforce.verifier import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    full_report,
    verify_benjamin_lighthill,
    verify_decay_rate,
    verify_flux_min_kappa,
    verify_profile_bounds,
    verify_w_sign,
)
from waveforce.vorticity import VorticityModel
from waveforce.wavesolver import WaveGrid, discrete_laminar

IRROT = VorticityModel.constant(0.0)
SHEAR = VorticityModel.constant(-1.0)
GRID = WaveGrid(6.0, 32, 33)


def _by_name(checks):
    return {c.name: c for c in checks}


def test_laminar_subcritical_is_upper_equality():
    pair = conjugate_streams(IRROT, 2.0)
    sol = discrete_laminar(IRROT, GRID, pair.s_minus)
    c = verify_benjamin_lighthill(sol)
    assert c.status == PASS
    assert abs(c.extra["margin_upper"]) < 1e-10
    assert c.extra["margin_lower"] > 0.1
    checks = _by_name(verify_profile_bounds(sol))
    assert all(x.status == PASS for x in checks.values())
    assert "min = max = d_+" in checks["trough_below_d_plus"].detail


def test_laminar_supercritical_is_lower_equality():
    pair = conjugate_streams(IRROT, 2.0)
    sol = discrete_laminar(IRROT, GRID, pair.s_plus)
    c = verify_benjamin_lighthill(sol)
    assert c.status == PASS and abs(c.extra["margin_lower"]) < 1e-10
    checks = _by_name(verify_profile_bounds(sol))
    assert checks["profile_above_d_minus"].status == PASS
    assert checks["trough_below_d_plus"].status == INCONCLUSIVE
    assert checks["crest_above_d_plus"].status == INCONCLUSIVE
    assert verify_w_sign(sol).status == PASS


def test_out_of_range_r_is_inconclusive():
    sol = discrete_laminar(IRROT, GRID, 1.0)  # r = R_c: no conjugate pair
    assert verify_benjamin_lighthill(sol).status == INCONCLUSIVE
    assert all(c.status == INCONCLUSIVE for c in verify_profile_bounds(sol))


def test_stokes_wave_strict(small_branch):
    for sol in small_branch[1:]:
        c = verify_benjamin_lighthill(sol)
        assert c.status == PASS and c.detail == "strict"
        assert c.extra["margin_lower"] > 0 and c.extra["margin_upper"] > 0
        for chk in verify_profile_bounds(sol):
            assert chk.status == PASS and chk.margin > 0
        assert verify_w_sign(sol).status == PASS


def test_margin_trends_along_branch(small_branch):
    # FF = FF_+ on the laminar member, so the upper margin grows from zero while the
    # lower margin shrinks from FF_+ - FF_- towards the solitary limit FF = FF_-
    checks = [verify_benjamin_lighthill(s) for s in small_branch]
    upper = [c.extra["margin_upper"] for c in checks]
    lower = [c.extra["margin_lower"] for c in checks]
    assert abs(upper[0]) < 1e-12
    assert np.all(np.diff(upper) > 0)
    assert np.all(np.diff(lower) < 0)
    assert min(lower) > 0


def test_flux_min_kappa_laminar_own_slip():
    sol = discrete_laminar(IRROT, GRID, 0.8)
    c = verify_flux_min_kappa(sol, 0.8)
    assert c.status == PASS
    assert abs(c.lhs) < 1e-12 and abs(c.rhs) < 1e-10


def test_flux_min_kappa_dipping_trace(small_branch):
    sol = small_branch[-1]
    s = 0.9  # the seeding slip lies where kappa < 0 for this wave
    ff = flow_force(sol).ff
    assert np.min(flux_function(sol, s, ff).top_trace) < 0
    c = verify_flux_min_kappa(sol, s)
    assert c.status == PASS
    assert c.rhs == pytest.approx(kappa(IRROT, s, sol.r, ff), abs=1e-14)
    assert c.rhs < 0


def test_flux_min_kappa_positive_trace_inconclusive(small_branch):
    sol = small_branch[-1]
    pair = conjugate_streams(IRROT, sol.r)
    c = verify_flux_min_kappa(sol, pair.s_plus)
    assert c.status == INCONCLUSIVE
    assert c.lhs > 0


def test_w_sign_negative_control(small_branch):
    sol = small_branch[-1]
    pair = conjugate_streams(IRROT, sol.r)
    h = sol.h.copy()
    h[5, -1] = pair.d_minus - 1e-3  # surface dips below d_- at one node
    bad = replace(sol, h=h)
    assert verify_w_sign(bad).status == FAIL
    assert _by_name(verify_profile_bounds(bad))["profile_above_d_minus"].status == FAIL


def test_decay_rate_inconclusive_for_short_waves(small_branch):
    assert verify_decay_rate(small_branch[-1]).status == INCONCLUSIVE
    assert verify_decay_rate(small_branch[0]).status == INCONCLUSIVE


def test_full_report_laminar_no_fail():
    pair = conjugate_streams(SHEAR, 2.15)  # s_minus near 0.4: no steep bed layer
    for s in (pair.s_minus, pair.s_plus):
        rep = full_report(discrete_laminar(SHEAR, WaveGrid(6.0, 32, 129), s))
        assert not rep.failed, rep.to_text()
        assert rep.by_name("solitary_decay_rate").status == INCONCLUSIVE


def test_full_report_branch_member(small_branch):
    rep = full_report(small_branch[-1])
    assert not rep.failed, rep.to_text()
    names = [c.name for c in rep.checks]
    assert names[0] == "solver_residual"
    assert sum(n.startswith("flux_boundary_identity") for n in names) == 3
    assert rep.metadata["ff_minus"] < rep.metadata["ff"] < rep.metadata["ff_plus"]
    assert len(rep.to_text().splitlines()) == len(rep.checks)
    data = json.loads(rep.to_json())
    assert data["metadata"]["tol_scale"] == 1.0
    assert [c["name"] for c in data["checks"]] == names


def test_full_report_corrupted_fails(small_branch):
    sol = small_branch[-1]
    h = sol.h.copy()
    h[3, -1] -= 0.2
    assert full_report(replace(sol, h=h)).failed


def test_full_report_custom_probes(small_branch):
    rep = full_report(small_branch[-1], probes=[0.8])
    assert rep.metadata["probes"] == [0.8]
    assert rep.by_name("flux_boundary_identity[s=0.8]").status == PASS


def test_tol_scale():
    with pytest.raises(ValueError):
        full_report(discrete_laminar(IRROT, GRID, 0.8), tol_scale=0.0)
    rep = full_report(discrete_laminar(IRROT, GRID, 0.8), tol_scale=10.0)
    assert rep.by_name("solver_residual").tolerance == pytest.approx(1e-7)
    # the scale does not leak out of the call
    assert full_report(discrete_laminar(IRROT, GRID, 0.8)).by_name("solver_residual").tolerance == 1e-8
