"""
Command-line front end: ``waveforce <command> --config run.json [--out DIR]``.

Commands: laminar, dispersion, solve, flux, verify. Every output file starts
with a ``# key = value`` block holding the resolved configuration and its
SHA-256, so runs are reproducible from their outputs.

Exit status: 0 success, 1 verification failure, 2 usage, configuration or
input-file error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import bernoulli, kappa, sigma
from .dispersion import DEFAULT_NODES, RICHARDSON_ATOL, principal_eigenpair
from .errors import (
    ConfigError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    NoRootError,
    OutOfRangeError,
    RegimeError,
)
from .fileio import (
    config_hash,
    format_csv,
    format_header,
    load_solution,
    save_solution,
    write_atomic,
)
from .flowforce import flow_force, flux_boundary_identity, flux_function
from .laminar import conjugate_streams, depth, regime_constants
from .verifier import full_report
from .vorticity import VorticityModel, slip_lower_bound
from .wavesolver import (
    MEASURES,
    AmplitudeConstraint,
    WaveGrid,
    continue_in_amplitude,
    newton_solve,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("laminar", "dispersion", "solve", "flux", "verify")


# ---------------------------------------------------------------------------
# configuration validation


def _num(block, key, *, default=None, positive=False, integer=False, minimum=None):
    if key not in block:
        if default is None:
            raise ConfigError(f"missing required field {key!r}")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"field {key!r} must be a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        raise ConfigError(f"field {key!r} must be an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"field {key!r} must be finite, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"field {key!r} must be positive, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"field {key!r} must be >= {minimum}, got {v!r}")
    return int(v) if integer else float(v)


def _range(block, key):
    v = block.get(key)
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise ConfigError(f"field {key!r} must be a pair [lo, hi] of numbers")
    lo, hi = float(v[0]), float(v[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ConfigError(f"field {key!r} must satisfy lo < hi, got {v!r}")
    return [lo, hi]


def _block(config, name):
    b = config.get(name)
    if not isinstance(b, dict):
        raise ConfigError(f"configuration needs a {name!r} block")
    return b


def _slip(model, s, key):
    s0 = slip_lower_bound(model)
    if not s > s0:
        raise ConfigError(f"{key}={s!r} must exceed the slip lower bound s_0={s0!r}")
    return s


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    return cfg


def resolve_laminar(cfg, model):
    b = _block(cfg, "laminar")
    out = {"r": _num(b, "r"), "s_range": _range(b, "s_range"),
           "n_samples": _num(b, "n_samples", default=64, integer=True, minimum=2)}
    _slip(model, out["s_range"][0], "s_range[0]")
    ref = b.get("ff_reference", "ff_minus")
    if ref not in ("ff_minus", "ff_plus") and not (isinstance(ref, (int, float)) and math.isfinite(ref)):
        raise ConfigError("ff_reference must be 'ff_minus', 'ff_plus' or a number")
    out["ff_reference"] = ref
    return out


def resolve_dispersion(cfg, model):
    b = _block(cfg, "dispersion")
    out = {"n_nodes": _num(b, "n_nodes", default=DEFAULT_NODES, integer=True, minimum=64)}
    if "s" in b:
        out["s"] = [_slip(model, _num(b, "s"), "s")]
    else:
        lo, hi = _range(b, "s_range")
        _slip(model, lo, "s_range[0]")
        n = _num(b, "n_samples", default=16, integer=True, minimum=2)
        out["s_range"], out["n_samples"] = [lo, hi], n
        out["s"] = [float(x) for x in np.linspace(lo, hi, n)]
    return out


def resolve_solve(cfg, model):
    b = _block(cfg, "solve")
    s = _slip(model, _num(b, "s"), "s")
    out = {"s": s,
           "n_q": _num(b, "n_q", default=128, integer=True),
           "n_p": _num(b, "n_p", default=64, integer=True),
           "a_max": _num(b, "a_max", minimum=0.0),
           "n_steps": _num(b, "n_steps", default=10, integer=True, minimum=1),
           "output_path": str(b.get("output_path", "branch")),
           "measure": b.get("measure", "crest-trough"),
           "noise": _num(b, "noise", default=0.0, minimum=0.0)}
    if out["measure"] not in MEASURES:
        raise ConfigError(f"measure must be one of {MEASURES}")
    L = b.get("L", "auto")
    if L == "auto":
        eig = principal_eigenpair(model, s)
        if eig.mu >= 0:
            raise ConfigError(f"L='auto' needs a subcritical s; mu_1({s})={eig.mu:.6g} >= 0")
        out["L"], out["L_resolved_from"] = 2.0 * math.pi / math.sqrt(-eig.mu), "auto: 2*pi/k(s)"
    else:
        out["L"] = _num(b, "L", positive=True)
    WaveGrid(out["L"], out["n_q"], out["n_p"])  # grid invariants
    return out


def resolve_flux(cfg, model):
    b = _block(cfg, "flux")
    if "solution_path" not in b:
        raise ConfigError("missing required field 'solution_path'")
    s = b.get("s")
    if s not in ("s_minus", "s_plus", "midpoint"):
        s = _num(b, "s")
    return {"solution_path": str(b["solution_path"]), "s": s}


def resolve_verify(cfg, model):
    b = _block(cfg, "verify")
    if "solution_path" not in b:
        raise ConfigError("missing required field 'solution_path'")
    probes = b.get("s_probe", "auto")
    if probes != "auto":
        if not isinstance(probes, list) or not probes:
            raise ConfigError("s_probe must be 'auto' or a non-empty list of slips")
        probes = [_num({"s": x}, "s") for x in probes]
    return {"solution_path": str(b["solution_path"]), "s_probe": probes}


RESOLVERS = {"laminar": resolve_laminar, "dispersion": resolve_dispersion,
             "solve": resolve_solve, "flux": resolve_flux, "verify": resolve_verify}


# ---------------------------------------------------------------------------
# commands


class Run:
    """Resolved inputs shared by every command."""

    def __init__(self, command, config, out_dir, seed, tol_scale):
        self.command = command
        self.config = config
        self.hash = config_hash(config)
        self.out_dir = Path(out_dir)
        self.seed = seed
        self.tol_scale = tol_scale
        model_block = config.get("vorticity")
        if model_block is None:
            raise ConfigError("configuration needs a 'vorticity' block")
        self.model = VorticityModel.from_config(model_block)
        self.params = RESOLVERS[command](config, self.model)

    def header(self, *extra):
        items = [("command", self.command), ("package_version", __version__),
                 ("config_sha256", self.hash), ("config", self.config),
                 ("resolved", {"vorticity": self.model.to_config(), self.command: self.params}),
                 ("seed", self.seed), ("tol_scale", self.tol_scale)]
        return format_header(items + list(extra))


def cmd_laminar(run: Run) -> int:
    model, prm = run.model, run.params
    rc = regime_constants(model)
    r = prm["r"]
    if not rc.R_c < r < rc.R_0:
        raise OutOfRangeError(f"r={r!r} outside the admissible interval (R_c, R_0) = "
                              f"({rc.R_c:.12g}, {rc.R_0:.12g})")
    pair = conjugate_streams(model, r)
    ref = prm["ff_reference"]
    ff_ref = {"ff_minus": pair.ff_minus, "ff_plus": pair.ff_plus}.get(ref, ref)
    s_grid = np.linspace(*prm["s_range"], prm["n_samples"])
    rows = [(float(s), depth(model, s), bernoulli(model, s), sigma(model, s, r),
             kappa(model, s, r, ff_ref)) for s in s_grid]
    head = run.header(
        ("s_0", rc.s_0), ("s_c", rc.s_c), ("R_c", rc.R_c), ("R_0", rc.R_0), ("d_0", rc.d_0),
        ("r", r), ("s_minus", pair.s_minus), ("s_plus", pair.s_plus),
        ("d_minus", pair.d_minus), ("d_plus", pair.d_plus),
        ("FF_minus", pair.ff_minus), ("FF_plus", pair.ff_plus),
        ("kappa_reference", f"FF = {ref}" if isinstance(ref, str) else "FF = given value"),
        ("kappa_reference_value", ff_ref),
    )
    path = write_atomic(run.out_dir / "laminar.csv",
                        head + format_csv(["s", "d", "R", "sigma", "kappa"], rows))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_dispersion(run: Run) -> int:
    model, prm = run.model, run.params
    sc = regime_constants(model).s_c
    rows, modes = [], []
    for s in prm["s"]:
        e = principal_eigenpair(model, s, prm["n_nodes"])
        if abs(e.mu) <= max(RICHARDSON_ATOL, e.discrepancy):
            regime = "critical"  # sign not resolved by the grid
        else:
            regime = "supercritical" if e.mu > 0 else "subcritical"
        rows.append((s, e.mu, regime, math.sqrt(abs(e.mu)), e.discrepancy))
        modes += [(s, float(p), float(f)) for p, f in zip(e.p_grid, e.phi)]
    head = run.header(("s_c", sc), ("columns_note",
                                    "rate = decay rate lambda_1 when supercritical, wavenumber k when subcritical"))
    path = write_atomic(run.out_dir / "dispersion.csv",
                        head + format_csv(["s", "mu_1", "regime", "rate", "richardson_gap"], rows))
    head = run.header(("normalisation", "phi(1) = 1, or max|phi| = 1 when phi(1) vanishes"))
    path2 = write_atomic(run.out_dir / "dispersion_eigenfunctions.csv",
                         head + format_csv(["s", "p", "phi"], modes))
    print(f"wrote {path} and {path2}")
    return EXIT_OK


def _branch_row(sol):
    eta = sol.h[:, -1]
    lo, hi = float(eta.min()), float(eta.max())
    ff = flow_force(sol).ff
    try:
        p = conjugate_streams(sol.model, sol.r)
        m = (ff - p.ff_minus, p.ff_plus - ff, lo - p.d_minus, p.d_plus - lo, hi - p.d_plus)
    except (OutOfRangeError, NoRootError):
        m = (math.nan,) * 5
    return (float(sol.amplitude), float(sol.r), ff, lo, hi, *m, float(sol.residual_norm))


def cmd_solve(run: Run) -> int:
    model, prm = run.model, run.params
    grid = WaveGrid(prm["L"], prm["n_q"], prm["n_p"])
    if prm["a_max"] == 0.0:
        branch = continue_in_amplitude(model, prm["s"], grid, 0.0, 1, prm["measure"])
    else:
        branch = continue_in_amplitude(model, prm["s"], grid, prm["a_max"], prm["n_steps"],
                                       prm["measure"])
    noise_items = []
    if prm["noise"] > 0.0:
        # basin-of-attraction smoke test: re-solve the laminar member from a noisy start,
        # pinning its surface height; the result is reported, member 0 is kept
        rng = np.random.default_rng(run.seed)
        lam = branch[0]
        h0 = lam.h + prm["noise"] * rng.standard_normal(lam.h.shape)
        h0[:, 0] = 0.0
        rec = newton_solve(model, grid, h0, lam.r, AmplitudeConstraint("crest-offset", 0.0, s_ref=prm["s"]))
        noise_items = [("noise_recovery_deviation", float(np.max(np.abs(rec.h - lam.h)))),
                       ("noise_recovery_iterations", rec.iterations)]
    base = run.out_dir / prm["output_path"]
    rows = []
    for i, sol in enumerate(branch):
        save_solution(sol, base / f"member_{i:03d}.csv",
                      extra=[("member", i), ("config_sha256", run.hash), ("config", run.config)])
        rows.append(_branch_row(sol))
    cols = ["a", "r", "FF", "min_eta", "max_eta", "margin_ff_lower", "margin_ff_upper",
            "margin_min_above_d_minus", "margin_min_below_d_plus", "margin_max_above_d_plus",
            "residual_norm"]
    head = run.header(("members", len(branch)),
                      ("stop_reason", branch.stop_reason or "completed"), *noise_items)
    path = write_atomic(base / "branch.csv", head + format_csv(cols, rows))
    print(f"wrote {len(branch)} solution files and {path}")
    if branch.stop_reason:
        print(f"continuation stopped early: {branch.stop_reason}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _resolve_probe(sol, s):
    if isinstance(s, float):
        return s
    p = conjugate_streams(sol.model, sol.r)
    return {"s_minus": p.s_minus, "s_plus": p.s_plus,
            "midpoint": 0.5 * (p.s_minus + p.s_plus)}[s]


def cmd_flux(run: Run) -> int:
    prm = run.params
    sol, _ = load_solution(prm["solution_path"])
    s = _resolve_probe(sol, prm["s"])
    ffv = flow_force(sol)
    fld = flux_function(sol, s, ffv.ff)
    ident = flux_boundary_identity(sol, s, ffv.ff, field=fld)
    q, p = sol.grid.q, sol.grid.p
    rows = [(float(q[i]), float(p[j]), float(fld.phi[i, j]), float(fld.w[i, j]))
            for i in range(sol.grid.n_q) for j in range(sol.grid.n_p)]
    head = run.header(("s", s), ("r", sol.r), ("FF", ffv.ff), ("sigma", sigma(sol.model, s, sol.r)),
                      ("kappa", kappa(sol.model, s, sol.r, ffv.ff)),
                      ("top_trace_min", float(fld.top_trace.min())),
                      ("boundary_identity_residual", ident))
    path = write_atomic(run.out_dir / "flux.csv", head + format_csv(["q", "p", "phi", "w"], rows))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    prm = run.params
    sol, _ = load_solution(prm["solution_path"])
    probes = None if prm["s_probe"] == "auto" else prm["s_probe"]
    rep = full_report(sol, tol_scale=run.tol_scale, probes=probes)
    head = run.header(("verdict", "fail" if rep.failed else "pass"))
    text = head + rep.to_text() + "\n"
    write_atomic(run.out_dir / "verify_report.txt", text)
    write_atomic(run.out_dir / "verify_report.json", rep.to_json() + "\n")
    print(rep.to_text())
    print("verdict:", "FAIL" if rep.failed else "PASS")
    return EXIT_FAIL if rep.failed else EXIT_OK


HANDLERS = {"laminar": cmd_laminar, "dispersion": cmd_dispersion, "solve": cmd_solve,
            "flux": cmd_flux, "verify": cmd_verify}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed for noise smoke tests")
    common.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply every verification tolerance by this factor")
    parser = argparse.ArgumentParser(prog="waveforce", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} command")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not (args.tol_scale > 0 and math.isfinite(args.tol_scale)):
        print("error: --tol-scale must be a positive finite number", file=sys.stderr)
        return EXIT_USAGE
    try:
        run = Run(args.command, load_config(args.config), args.out, args.seed, args.tol_scale)
        return HANDLERS[args.command](run)
    except (ConfigError, OutOfRangeError, DomainError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, DegeneracyError, NoRootError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
