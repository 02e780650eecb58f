"""
Plain-text file formats: ``# key = value`` header blocks followed by CSV,
written atomically (temporary file in the target directory, then rename).

Header values are JSON literals so they round-trip exactly; floats in CSV
bodies use the shortest representation that round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegeneracyError
from .vorticity import VorticityModel
from .wavesolver import WaveGrid, WaveSolution, residual

SOLUTION_FORMAT = "waveforce-solution/1"


class SolutionFileError(ConfigError):
    """A solution file is missing, truncated or inconsistent."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _header_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    return json.dumps(v, sort_keys=True, separators=(",", ":"))


def format_header(items) -> str:
    """``# key = value`` lines from an ordered sequence of pairs."""
    return "".join(f"# {k} = {_header_value(v)}\n" for k, v in items)


def parse_header(lines):
    """Header dict and the index of the first non-header line."""
    head = {}
    i = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            return head, i
        body = line[1:].strip()
        if not body or " = " not in body:
            continue
        key, _, raw = body.partition(" = ")
        raw = raw.strip()
        if raw in ("inf", "-inf", "nan"):
            head[key.strip()] = float(raw)
            continue
        try:
            head[key.strip()] = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SolutionFileError(f"unparsable header value for {key.strip()!r}: {raw!r}") from exc
    return head, len(lines)


def format_csv(columns, rows) -> str:
    out = [",".join(columns)]
    for row in rows:
        out.append(",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)
                            for x in row))
    return "\n".join(out) + "\n"


def solution_text(sol: WaveSolution, extra=()) -> str:
    g = sol.grid
    items = [
        ("format", SOLUTION_FORMAT),
        ("model", sol.model.to_config()),
        ("L", float(g.L)),
        ("n_q", int(g.n_q)),
        ("n_p", int(g.n_p)),
        ("r", float(sol.r)),
        ("amplitude", float(sol.amplitude)),
        ("measure", sol.measure),
        ("s_seed", None if sol.s_seed is None else float(sol.s_seed)),
        ("residual_norm", float(sol.residual_norm)),
        ("layout", "one row per q_i = i*L/n_q (i = 0..n_q-1); column j holds h(q_i, p_j), p_j = j/(n_p-1)"),
        *extra,
    ]
    cols = [f"h_p{j}" for j in range(g.n_p)]
    return format_header(items) + format_csv(cols, sol.h)


def save_solution(sol: WaveSolution, path, extra=()) -> Path:
    return write_atomic(path, solution_text(sol, extra))


def load_solution(path) -> tuple[WaveSolution, dict]:
    """Read a solution file; the residual norm is recomputed, not trusted."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise SolutionFileError(f"cannot read solution file {path}: {exc}") from exc
    head, start = parse_header(lines)
    if head.get("format") != SOLUTION_FORMAT:
        raise SolutionFileError(f"{path}: not a solution file (format {head.get('format')!r})")
    try:
        model = VorticityModel.from_config(head["model"])
        grid = WaveGrid(float(head["L"]), int(head["n_q"]), int(head["n_p"]))
        r = float(head["r"])
        amplitude = float(head["amplitude"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SolutionFileError(f"{path}: incomplete header: {exc}") from exc
    body = [ln for ln in lines[start + 1:] if ln.strip()]
    if len(body) != grid.n_q:
        raise SolutionFileError(f"{path}: expected {grid.n_q} data rows, found {len(body)}")
    try:
        h = np.array([[float(x) for x in ln.split(",")] for ln in body])
    except ValueError as exc:
        raise SolutionFileError(f"{path}: malformed data row: {exc}") from exc
    if h.shape != (grid.n_q, grid.n_p) or not np.all(np.isfinite(h)):
        raise SolutionFileError(f"{path}: data block has shape {h.shape} or non-finite entries")
    try:
        res = residual(model, grid, h, r)
    except DegeneracyError as exc:
        raise SolutionFileError(f"{path}: field is not unidirectional: {exc}") from exc
    s_seed = head.get("s_seed")
    sol = WaveSolution(grid=grid, h=h, r=r, model=model, amplitude=amplitude,
                       residual_norm=float(np.max(np.abs(res))),
                       measure=head.get("measure", "crest-trough"),
                       s_seed=None if s_seed is None else float(s_seed))
    return sol, head
