import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sepconvex import DEFAULT_SEED
from sepconvex.diagnostics import DIVERGENT
from sepconvex.cli import (EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_REFUSED, ConfigError, main,
                           read_field_csv, read_function, write_field_csv)


def run(*argv):
    return main([str(a) for a in argv])


def load(path):
    return json.loads(path.read_text())


@pytest.fixture
def neg_xy_csv(tmp_path):
    xs = np.linspace(-1, 1, 41)
    X, Y = np.meshgrid(xs, xs)
    path = tmp_path / "field.csv"
    write_field_csv(path, xs, xs, -X * Y)
    return path


def test_csv_format_and_round_trip(tmp_path):
    xs = np.linspace(-1, 1, 5)
    ys = np.linspace(0, 2, 3)
    rng = np.random.default_rng(DEFAULT_SEED)
    vals = rng.normal(size=(3, 5)) * 1e3
    path = tmp_path / "f.csv"
    write_field_csv(path, xs, ys, vals)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "f"]
    # y outer, x inner
    assert [float(r[1]) for r in rows[1:6]] == [0.0] * 5
    assert [float(r[0]) for r in rows[1:6]] == list(xs)
    rx, ry, rv = read_field_csv(path)
    assert np.array_equal(rx, xs) and np.array_equal(ry, ys) and np.array_equal(rv, vals)


def test_csv_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n0,0,0\n")
    with pytest.raises(ConfigError):
        read_field_csv(p)
    p.write_text("x,y,f\n0,0,0\n1,0,0\n0,1,0\n")
    with pytest.raises(ConfigError, match="full grid"):
        read_field_csv(p)


def test_read_function_forms(tmp_path):
    assert read_function("neg_square")(2.0) == -4.0
    assert read_function('{"kind": "catalog", "name": "abs"}')(-3.0) == 3.0
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"kind": "samples", "xs": [0, 1, 2], "ys": [0, 1, 0]}))
    assert read_function(str(spec))(0.5) == 0.5
    with pytest.raises(ConfigError):
        read_function("no_such_function")
    with pytest.raises(ConfigError):
        read_function("{not json")


def test_verify_neg_xy_passes(neg_xy_csv, tmp_path):
    rep = tmp_path / "r.json"
    spec = tmp_path / "g.json"
    spec.write_text(json.dumps({"kind": "catalog", "name": "neg_square"}))
    assert run("verify", "--field", neg_xy_csv, "--trace", spec, "--report", rep) == EXIT_OK
    d = load(rep)
    assert d["passed"] is True and d["trace_max_abs_err"] <= 1e-12


def test_verify_failure_exit_code(tmp_path):
    xs = np.linspace(-1, 1, 21)
    X, Y = np.meshgrid(xs, xs)
    path = tmp_path / "neg.csv"
    write_field_csv(path, xs, xs, -X * X - Y * Y)
    rep = tmp_path / "r.json"
    assert run("verify", "--field", path, "--report", rep) == EXIT_FAIL
    d = load(rep)
    assert d["passed"] is False and d["convexity_min_margin"] == pytest.approx(-2 * 0.1 ** 2)


def test_config_errors(tmp_path, neg_xy_csv):
    assert run("extend", "--kernel", "parabolic", "--function", "neg_square",
               "--grid", -1, 1, 2) == EXIT_CONFIG
    assert run("extend", "--kernel", "parabolic", "--function", "neg_square",
               "--grid", -1, 1, 5000) == EXIT_CONFIG
    assert run("verify", "--field", neg_xy_csv, "--trace-tol", -1) == EXIT_CONFIG
    assert run("extend", "--kernel", "parabolic", "--function", "neg_square",
               "--out", tmp_path / "missing" / "f.csv") == EXIT_CONFIG
    assert run("assemble", "--method", "semiconcave", "--function", "neg_square") == EXIT_CONFIG
    assert run("assemble", "--method", "touching", "--function", "neg_square", "--D", 2) == EXIT_CONFIG
    assert run("verify", "--field", tmp_path / "nope.csv") == EXIT_CONFIG


def test_refusal_exit_code(tmp_path):
    assert run("assemble", "--method", "touching", "--function", "neg_abs",
               "--report", tmp_path / "r.json") == EXIT_REFUSED
    assert run("extend", "--kernel", "parabolic", "--function", "abs") == EXIT_REFUSED


def test_extend_then_verify(tmp_path):
    out, rep = tmp_path / "f.csv", tmp_path / "r.json"
    assert run("extend", "--kernel", "parabolic", "--function", "neg_square",
               "--grid", -2, 2, 81, "--out", out, "--report", rep) == EXIT_OK
    assert load(rep)["verify"]["passed"]
    xs, ys, vals = read_field_csv(out)
    X, Y = np.meshgrid(xs, ys)
    assert np.max(np.abs(vals + X * Y)) <= 1e-9
    assert run("verify", "--field", out, "--trace", "neg_square") == EXIT_OK


def test_extend_smooth_and_log(tmp_path):
    rep = tmp_path / "r.json"
    assert run("extend", "--kernel", "smooth", "--function", "quadratic", "--report", rep) == EXIT_OK
    assert run("extend", "--kernel", "log", "--function",
               '{"kind": "catalog", "name": "constant", "params": {"c": 0.0}}',
               "--grid", -0.9, 0.9, 31, "--report", rep) == EXIT_OK


def test_assemble_concave_and_verify_numeric(tmp_path):
    out, rep = tmp_path / "f.csv", tmp_path / "r.json"
    assert run("assemble", "--method", "concave", "--function", "neg_square",
               "--grid", -1, 1, 51, "--out", out, "--report", rep) == EXIT_OK
    d = load(rep)
    assert d["method"] == "concave" and d["verify"]["passed"]
    assert d["provenance"]["D_size"] == 201
    assert run("verify", "--field", out, "--trace", "neg_square", "--numeric",
               "--trace-tol", 1e-3) == EXIT_OK


def test_assemble_modulus(tmp_path):
    rep = tmp_path / "r.json"
    assert run("assemble", "--method", "modulus", "--function", "abs",
               "--omega", '{"kind": "catalog", "name": "constant"}',
               "--grid", -1, 1, 41, "--report", rep) == EXIT_OK


def test_diagnose_report(tmp_path):
    rep, prof = tmp_path / "d.json", tmp_path / "p.csv"
    assert run("diagnose", "--function", "neg_abs", "--x", 0.0, 0.5, "--T", 0.25,
               "--profile", prof, "--report", rep) == EXIT_OK
    d = load(rep)
    assert [p["x"] for p in d["points"]] == [0.0, 0.5]
    first = d["points"][0]
    assert {"integral_star", "integral_plain", "liminf_check", "chain_best"} <= set(first)
    assert first["integral_star"]["classification"] == DIVERGENT
    with open(prof) as fh:
        assert fh.readline().strip() == "t,omega,omega_star"


def test_envelope_dump(tmp_path):
    out, rep = tmp_path / "e.csv", tmp_path / "e.json"
    assert run("envelope", "--function", "neg_square", "--u", 0.0, "--n", 257,
               "--out", out, "--report", rep) == EXIT_OK
    with open(out) as fh:
        assert fh.readline().strip() == "x,alpha,a_x,c_x,phi"
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    x, alpha, a, c = data[:, 0], data[:, 1], data[:, 2], data[:, 3]
    # from u = 0 the window reaches distance 1, beyond that the profile is flat
    inner = x <= 1.0
    assert np.allclose(alpha[inner], -x[inner] ** 2, atol=1e-12)
    assert np.all(alpha <= data[:, 4] + 1e-12)
    assert np.allclose(a * x * x + c, alpha, atol=1e-12)
    assert load(rep)["bound_holds"]


def test_reproduce_smoke_and_example1(tmp_path, capsys):
    rep = tmp_path / "r.json"
    assert run("reproduce", "smoke", "--report", rep) == EXIT_OK
    assert "PASS" in capsys.readouterr().out
    assert load(rep)["passed"]
    assert run("reproduce", "example1", "--report", rep) == EXIT_OK
    checks = {c["name"]: c for c in load(rep)["checks"]}
    assert checks["star integral at 0 diverges"]["note"] == DIVERGENT


def test_reproduce_example2(tmp_path):
    rep = tmp_path / "r.json"
    assert run("reproduce", "example2", "--report", rep) == EXIT_OK
    d = load(rep)
    assert len(d["tables"]["xi_star_integrals"]) == 43


def test_seed_flag_parses_hex():
    from sepconvex.cli import build_parser
    args = build_parser().parse_args(["--seed", "0x10", "reproduce", "smoke"])
    assert args.seed == 16
    assert build_parser().parse_args(["reproduce", "smoke"]).seed == DEFAULT_SEED


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "sepconvex", "reproduce", "smoke"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0, res.stderr
    assert "kernel" in res.stdout
