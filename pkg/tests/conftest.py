import math

import numpy as np
import pytest

from waveforce.dispersion import bifurcation_wavenumber
from waveforce.vorticity import VorticityModel
from waveforce.wavesolver import WaveGrid, continue_in_amplitude, near_solitary_sequence

IRROT = VorticityModel.constant(0.0)
SHEAR = VorticityModel.constant(-1.0)  # omega = -1, i.e. b = 1 in omega = -b

# subcritical slips of the two desk-scale branches
BRANCH_SLIPS = {"irrotational": (IRROT, 0.9), "constant_vorticity": (SHEAR, 0.5)}
A_MAX, N_STEPS = 0.05, 10


def _branch(name, n_q, n_p):
    model, s = BRANCH_SLIPS[name]
    k = bifurcation_wavenumber(model, s)
    grid = WaveGrid(2.0 * math.pi / k, n_q, n_p)
    return continue_in_amplitude(model, s, grid, A_MAX, N_STEPS)


@pytest.fixture(scope="session")
def branches():
    """Both acceptance branches on the 128 x 64 grid."""
    return {name: _branch(name, 128, 64) for name in BRANCH_SLIPS}


@pytest.fixture(scope="session")
def branches_square():
    """Both acceptance branches on the 128 x 128 grid."""
    return {name: _branch(name, 128, 128) for name in BRANCH_SLIPS}


@pytest.fixture(scope="session")
def small_branch():
    """Cheap irrotational branch for unit tests (64 x 33)."""
    model, s = BRANCH_SLIPS["irrotational"]
    k = bifurcation_wavenumber(model, s)
    return continue_in_amplitude(model, s, WaveGrid(2.0 * math.pi / k, 64, 33), A_MAX, 5)


@pytest.fixture(scope="session")
def solitary_family():
    """Irrotational near-solitary waves on L = {30, 45, 60} / lambda_1."""
    return near_solitary_sequence(IRROT, (30.0, 45.0, 60.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


# acceptance summary: tests tag themselves with record_property("criterion", n)
_ACCEPTANCE: dict = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    n = props["criterion"]
    failed = report.failed
    if report.when == "call" or failed:
        entry = _ACCEPTANCE.setdefault(n, {"ok": True, "detail": []})
        entry["ok"] = entry["ok"] and not failed
        if props.get("detail") and report.when == "call":
            entry["detail"].append(props["detail"])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[n]
        line = f"criterion {n:2d}: {'PASS' if e['ok'] else 'FAIL'}"
        if e["detail"]:
            line += "  (" + "; ".join(e["detail"]) + ")"
        terminalreporter.write_line(line)
