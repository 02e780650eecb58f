import math
import os

import numpy as np
import pytest

from waveforce.fileio import (
    SolutionFileError,
    config_hash,
    format_csv,
    format_header,
    load_solution,
    parse_header,
    save_solution,
    write_atomic,
)


def test_header_round_trip():
    items = [("a", 1), ("b", [0.1, 2.0]), ("c", {"k": "v"}), ("d", math.inf), ("e", None)]
    head, start = parse_header(format_header(items).splitlines() + ["x,y"])
    assert head == {"a": 1, "b": [0.1, 2.0], "c": {"k": "v"}, "d": math.inf, "e": None}
    assert start == len(items)


def test_csv_floats_are_shortest_repr():
    text = format_csv(["x", "y"], [(0.3, 1.0), (1 / 3, "sub")])
    assert text.splitlines() == ["x,y", "0.3,1.0", "0.3333333333333333,sub"]


def test_config_hash_is_canonical():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 64


def test_write_atomic_leaves_no_temporaries(tmp_path):
    p = write_atomic(tmp_path / "sub" / "f.txt", "hello\n")
    assert p.read_text() == "hello\n"
    write_atomic(p, "again\n")
    assert p.read_text() == "again\n"
    assert os.listdir(p.parent) == ["f.txt"]


def test_solution_round_trip(small_branch, tmp_path):
    sol = small_branch[-1]
    path = save_solution(sol, tmp_path / "sol.csv", extra=[("member", 5)])
    back, head = load_solution(path)
    assert np.array_equal(back.h, sol.h)  # repr floats are exact
    assert back.r == sol.r and back.grid == sol.grid and back.model == sol.model
    assert back.s_seed == sol.s_seed and back.amplitude == sol.amplitude
    assert back.residual_norm < 1e-10  # recomputed from the field
    assert head["member"] == 5


@pytest.mark.parametrize("mutate, match", [
    (lambda lines: lines[:-3], "data rows"),
    (lambda lines: [ln.replace("waveforce-solution/1", "other/1") for ln in lines], "not a solution"),
    (lambda lines: [ln for ln in lines if not ln.startswith("# r =")], "incomplete header"),
    (lambda lines: lines[:-1] + ["1.0,abc" + lines[-1][7:]], "malformed"),
    (lambda lines: lines[:-1] + [",".join(["nan"] * len(lines[-1].split(",")))], "non-finite"),
])
def test_corrupt_files_rejected(small_branch, tmp_path, mutate, match):
    path = save_solution(small_branch[-1], tmp_path / "sol.csv")
    path.write_text("\n".join(mutate(path.read_text().splitlines())) + "\n")
    with pytest.raises(SolutionFileError, match=match):
        load_solution(path)


def test_non_unidirectional_field_rejected(small_branch, tmp_path):
    path = save_solution(small_branch[-1], tmp_path / "sol.csv")
    lines = path.read_text().splitlines()
    row = lines[-1].split(",")
    row[10:] = [row[10]] * (len(row) - 10)  # h_p = 0 above p_10
    path.write_text("\n".join(lines[:-1] + [",".join(row)]) + "\n")
    with pytest.raises(SolutionFileError, match="unidirectional"):
        load_solution(path)


def test_missing_file(tmp_path):
    with pytest.raises(SolutionFileError):
        load_solution(tmp_path / "absent.csv")
