import csv
import json
import subprocess
import sys

import pytest

from riemann_newton.cli import atomic_write, fmt_float, main


def run(tmp_path, *args):
    return main([*args, "--out-dir", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_solve_sqrt2_writes_trace_and_report(tmp_path):
    assert run(tmp_path, "solve", "euclid-sqrt2") == 0
    rows = read_csv(tmp_path / "euclid-sqrt2_trace.csv")
    assert len(rows) <= 6
    assert float(rows[-1]["residual_norm"]) <= 1e-12
    assert list(rows[0]) == [
        "k",
        "residual_norm",
        "step_norm",
        "dist_to_solution",
        "ratio_q",
        "quad_quotient",
        "inverse_norm_estimate",
    ]
    report = json.loads((tmp_path / "euclid-sqrt2_report.json").read_text())
    assert report["termination"] == "residual"
    assert report["rate"]["classification"] == "quadratic"


def test_solve_flag_form_and_json_format(tmp_path):
    assert run(tmp_path, "solve", "--problem", "rayleigh-s2", "--start", "default", "--format", "json") == 0
    rows = json.loads((tmp_path / "rayleigh-s2_trace.json").read_text())
    assert rows[0]["k"] == 0
    report = json.loads((tmp_path / "rayleigh-s2_report.json").read_text())
    assert report["rate"]["classification"] == "quadratic"


def test_solve_holder_half_is_superlinear_only(tmp_path):
    assert run(tmp_path, "solve", "holder-euclid-a05") == 0
    rate = json.loads((tmp_path / "holder-euclid-a05_report.json").read_text())["rate"]
    assert rate["classification"] == "superlinear"
    assert rate["quadratic"] is False


def test_solve_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "solve", "nope") == 1
    assert "unknown problem" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())
    assert run(tmp_path, "solve", "rayleigh-s9", "--max-iters", "1") == 3
    assert run(tmp_path, "solve", "euclid-sqrt2", "--start", "7") == 1


def test_solve_singular_exit_code(tmp_path):
    problem = {
        "name": "cubic-flat",
        "manifold": {"kind": "euclidean", "dim": 1},
        "field": {"kind": "linear", "matrix": [[0.0]], "offset": [1.0]},
        "starts": [{"point": [0.0]}],
    }
    path = tmp_path / "p.json"
    path.write_text(json.dumps(problem))
    assert run(tmp_path, "solve", "--problem-file", str(path)) == 2
    assert json.loads((tmp_path / "cubic-flat_report.json").read_text())["termination"] == "singular"


def test_solve_output_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "solve", "karcher-h2") == 0
    assert (a / "karcher-h2_trace.csv").read_bytes() == (b / "karcher-h2_trace.csv").read_bytes()


def test_spread_examples(tmp_path, capsys):
    assert run(tmp_path, "spread", "euclidean", "--dim", "3") == 0
    assert float(capsys.readouterr().out) == 1.0
    args = ["spread", "sphere", "--dim", "3", "--radius", "1", "--samples", "1000", "--seed", "7"]
    assert run(tmp_path, *args) == 0
    assert 1.0 <= float(capsys.readouterr().out) <= 1.0 + 1e-9
    rows = read_csv(tmp_path / "spread_sphere3.csv")
    assert rows[0]["seed"] == "7"


def test_spread_deterministic_and_bad_radius(tmp_path, capsys):
    args = ["spread", "hyperboloid", "--dim", "2", "--radius", "0.5", "--samples", "200", "--seed", "3"]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args) == 0
    assert (tmp_path / "a" / "spread_hyperboloid2.csv").read_bytes() == (
        tmp_path / "b" / "spread_hyperboloid2.csv"
    ).read_bytes()
    assert run(tmp_path, "spread", "sphere", "--dim", "3", "--radius", "4") == 1
    assert run(tmp_path, "spread", "sphere", "--dim", "3", "--radius", "-1") == 1


def test_suite_all_builtins_pass(tmp_path, capsys):
    assert run(tmp_path, "suite") == 0
    rows = read_csv(tmp_path / "suite_summary.csv")
    assert rows and all(r["match"] == "yes" for r in rows)
    assert "0 classification mismatches" in capsys.readouterr().out


def test_suite_truncated_fails(tmp_path):
    assert run(tmp_path, "suite", "--max-iters", "1", "--workers", "4") != 0
    rows = read_csv(tmp_path / "suite_summary.csv")
    assert {r["termination"] for r in rows} == {"max_iter"}


def test_suite_empty_problem_file(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("[]")
    assert run(tmp_path, "suite", "--problem-file", str(path)) == 0
    assert read_csv(tmp_path / "suite_summary.csv") == []


def test_seed_must_be_unsigned_64_bit(tmp_path):
    with pytest.raises(SystemExit):
        run(tmp_path, "spread", "sphere", "--seed", "-1")
    with pytest.raises(SystemExit):
        run(tmp_path, "spread", "sphere", "--seed", str(2**64))


def test_float_formatting():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(3) == "3"
    assert float(fmt_float(1 / 3)) == 1 / 3


def test_atomic_write_leaves_no_partial_file(tmp_path):
    target = tmp_path / "out.txt"

    with pytest.raises(TypeError):
        atomic_write(target, object())
    assert list(tmp_path.iterdir()) == []
    atomic_write(target, "ok\n")
    assert target.read_text() == "ok\n"


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "riemann_newton", "solve", "euclid-sqrt2", "--out-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "euclid-sqrt2" in proc.stdout
