import json
import math
import subprocess
import sys

import numpy as np
import pytest

from finmetric.cli import main
from finmetric.formats import product_to_json, space_to_json
from finmetric.products import product_p
from finmetric.verify import GeneratorConfig, fixture_fig2, gen_random_metric


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def write_json(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


@pytest.fixture
def tri(tmp_path):
    return write_json(tmp_path, "tri.json", {"matrix": [[0, 3, 4], [3, 0, 5], [4, 5, 0]]})


@pytest.fixture
def fig2(tmp_path):
    return write_json(tmp_path, "fig2.json", product_to_json(fixture_fig2(2.0)))


def test_t0(capsys, tri):
    code, out = run(capsys, "t0", tri)
    assert code == 0 and json.loads(out) == pytest.approx(2.0, abs=1e-10)


def test_t0_infinite(capsys, tmp_path):
    p = write_json(tmp_path, "u.json", {"matrix": [[0, 1], [1, 0]]})
    assert run(capsys, "t0", p) == (0, '"inf"\n')


def test_validate(capsys, tmp_path, tri):
    assert run(capsys, "validate", tri)[0] == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n2,0\n")
    code, out = run(capsys, "validate", bad)
    assert code == 1 and json.loads(out)["violations"][0]["kind"] == "asymmetry"


def test_ultra(capsys, tri, tmp_path):
    code, out = run(capsys, "ultra", tri)
    assert code == 1 and json.loads(out)["witness"] == [1, 2, 0]
    assert run(capsys, "ultra", tri, "--subset", "0,1")[0] == 0


def test_cover_and_pack(capsys, fig2):
    code, out = run(capsys, "cover", fig2, "--eps", 1)
    assert code == 0 and json.loads(out)["count"] == 1
    code, out = run(capsys, "pack", fig2, "--eps", 1)
    assert code == 0 and json.loads(out)["points"] == [0, 3]
    code, out = run(capsys, "pack", fig2, "--eps", 1, "--maximal")
    assert json.loads(out)["count"] == 1


def test_cover_ambient_file_and_infeasible(capsys, tmp_path):
    sp = write_json(tmp_path, "line.json", {"matrix": [[0, 1, 5], [1, 0, 4], [5, 4, 0]]})
    amb = tmp_path / "amb.txt"
    amb.write_text("0\n1\n")
    code, out = run(capsys, "cover", sp, "--eps", 1, "--subset", "0,1", "--ambient-file", amb)
    assert code == 0 and json.loads(out)["count"] == 1
    code, out = run(capsys, "cover", sp, "--eps", 1, "--ambient-file", amb)
    assert code == 1 and json.loads(out)["orphan"] == 2


def test_points_input(capsys, tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("x,y\n0,0\n3,0\n0,4\n")
    code, out = run(capsys, "t0", pts, "--points")
    assert json.loads(out) == pytest.approx(2.0, abs=1e-10)


def test_profile_csv(capsys, fig2):
    code, out = run(capsys, "profile", fig2, "--output", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "eps,N,M,Mhat,N_ambient,optimal"
    assert lines[2] == "1.0,1,2,1,1,true"
    code, out = run(capsys, "profile", fig2)
    assert [r["eps"] for r in json.loads(out)] == [0.5, 1.0, 1.5, 2.0]


def test_witness(capsys, fig2):
    code, out = run(capsys, "witness", fig2)
    rec = json.loads(out)
    assert code == 0 and (rec["eps"], rec["N"], rec["M"]) == (1.0, 1, 2)


def test_product(capsys, tmp_path):
    x = write_json(tmp_path, "x.json", {"matrix": [[0, 3], [3, 0]]})
    y = write_json(tmp_path, "y.json", {"matrix": [[0, 4], [4, 0]]})
    code, out = run(capsys, "product", "--x", x, "--y", y, "--p", 2)
    assert code == 0 and json.loads(out)["matrix"][0][3] == 5.0
    code, out = run(capsys, "product", "--x", x, "--y", y, "--p", "inf")
    assert json.loads(out)["matrix"][0][3] == 4.0
    m = tmp_path / "m.csv"
    m.write_text("0,4,3,5\n4,0,5,3\n3,5,0,4\n5,3,4,0\n")
    code, out = run(capsys, "product", "--x", x, "--y", y, "--matrix-file", m)
    assert code == 0 and json.loads(out)["x"]["matrix"] == [[0.0, 3.0], [3.0, 0.0]]
    assert run(capsys, "product", "--x", x, "--y", y, "--p", "0.5")[0] == 3


def test_gen_roundtrip(capsys, tmp_path):
    code, out = run(capsys, "gen", "--mode", "range12", "--n", 5, "--seed", 9)
    p = tmp_path / "g.json"
    p.write_text(out)
    from finmetric.formats import parse_space_file
    assert np.array_equal(parse_space_file(p).dist,
                          gen_random_metric(GeneratorConfig(5, 9, "range12")).dist)


def test_check_suites(capsys, tmp_path, fig2):
    X = gen_random_metric(GeneratorConfig(3, 1, "dendrogram"))
    Y = gen_random_metric(GeneratorConfig(3, 2, "dendrogram"))
    cheb = write_json(tmp_path, "cheb.json", product_to_json(product_p(X, Y, math.inf)))
    for suite in ("thm2.8", "thm3.1", "prop3.4", "cor3.8", "remark3.10", "lemma3.2", "thm1.6"):
        code, out = run(capsys, "check", suite, cheb)
        assert code == 0, (suite, out)
    space = write_json(tmp_path, "s.json", space_to_json(gen_random_metric(GeneratorConfig(6, 3))))
    for suite in ("eq1.1", "lemma3.2", "thm1.6"):
        assert run(capsys, "check", suite, space)[0] == 0
    code, out = run(capsys, "check", "lemma3.2", cheb)
    assert [r["suite"] for r in json.loads(out)["reports"]] == [
        "multiplicativity:packing", "multiplicativity:covering", "multiplicativity:equality"]


def test_check_product_suite_needs_product(capsys, tri):
    assert run(capsys, "check", "thm2.8", tri)[0] == 3


@pytest.mark.parametrize("argv", [["bogus"], ["t0"], ["cover", "x.json"], ["t0", "x.json", "--nope"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 3


def test_missing_file(capsys):
    assert main(["t0", "/nonexistent/file.json"]) == 3


def test_invalid_metric_file(capsys, tmp_path):
    p = write_json(tmp_path, "bad.json", {"matrix": [[0, 1], [2, 0]]})
    code, out = run(capsys, "t0", p)
    assert code == 3 and json.loads(out)["error"] == "validation"


def test_module_entry_point(tri):
    proc = subprocess.run([sys.executable, "-m", "finmetric.cli", "t0", str(tri)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and float(proc.stdout) == pytest.approx(2.0)


def test_output_is_stable(capsys, fig2):
    first = run(capsys, "check", "thm3.1", fig2, "--seed", 4)
    second = run(capsys, "check", "thm3.1", fig2, "--seed", 4)
    assert first == second
