import json

import numpy as np
import pytest

from finmetric import FiniteMetricSpace, MetricValidationError
from finmetric.formats import (
    ParseError,
    load_file,
    parse_points_file,
    parse_space_file,
    product_from_json,
    product_to_json,
    space_from_json,
    space_to_json,
)
from finmetric.products import ProductSpace
from finmetric.verify import GeneratorConfig, fixture_fig2, gen_random_metric


def test_csv_one_point(tmp_json):
    sp = parse_space_file(tmp_json("one.csv", "0\n"))
    assert sp.n == 1 and sp.labels == ("p0",)


def test_fig2_json_matches_fixture(tmp_json):
    text = json.dumps({"labels": ["a", "b", "c", "d"],
                       "matrix": [[0, 1, 1, 2], [1, 0, 1, 1], [1, 1, 0, 1], [2, 1, 1, 0]]})
    sp = parse_space_file(tmp_json("fig2.json", text))
    assert np.array_equal(sp.dist, fixture_fig2(2.0).dist)
    assert sp.labels == ("a", "b", "c", "d")


def test_asymmetric_names_pair(tmp_json):
    with pytest.raises(MetricValidationError) as exc:
        parse_space_file(tmp_json("bad.csv", "0,1,1\n2,0,1\n1,1,0\n"))
    v = exc.value.report.violations[0]
    assert v.kind == "asymmetry" and v.indices == (0, 1)


def test_csv_parse_error_location(tmp_json):
    with pytest.raises(ParseError) as exc:
        parse_space_file(tmp_json("bad.csv", "0,1\n1,x\n"))
    assert (exc.value.line, exc.value.column) == (2, 2)


def test_json_parse_error_location(tmp_json):
    with pytest.raises(ParseError) as exc:
        parse_space_file(tmp_json("bad.json", '{"matrix": [[0, 1],\n [1, 0]'))
    assert exc.value.line == 2


def test_json_missing_matrix(tmp_json):
    with pytest.raises(ParseError):
        parse_space_file(tmp_json("bad.json", '{"labels": []}'))


@pytest.mark.parametrize("rows,metric,expected", [
    ("0\n1\n2\n", "euclidean", [[0, 1, 2], [1, 0, 1], [2, 1, 0]]),
    ("x,y\n0,0\n3,0\n0,4\n", "euclidean", [[0, 3, 4], [3, 0, 5], [4, 5, 0]]),
    ("0,0\n1,1\n", "chebyshev", [[0, 1], [1, 0]]),
])
def test_points(tmp_json, rows, metric, expected):
    sp = parse_points_file(tmp_json("pts.csv", rows), metric)
    np.testing.assert_allclose(sp.dist, expected)


def test_points_ragged(tmp_json):
    with pytest.raises(ParseError):
        parse_points_file(tmp_json("pts.csv", "0,0\n1\n"))


@pytest.mark.parametrize("seed", range(10))
def test_space_roundtrip_bit_exact(tmp_json, seed):
    sp = gen_random_metric(GeneratorConfig(6, seed, "euclidean"))
    path = tmp_json("s.json", json.dumps(space_to_json(sp)))
    back = load_file(path)
    assert back == sp
    assert space_from_json(space_to_json(sp)) == sp


def test_product_roundtrip(tmp_json):
    P = fixture_fig2(1.5)
    obj = product_to_json(P)
    Q = load_file(tmp_json("p.json", json.dumps(obj)))
    assert isinstance(Q, ProductSpace)
    assert np.array_equal(Q.dist, P.dist)
    flat = dict(obj, matrix=np.asarray(obj["matrix"]).ravel().tolist())
    assert np.array_equal(product_from_json(flat).dist, P.dist)
    with pytest.raises(ParseError):
        product_from_json(dict(obj, matrix=[0, 1, 2]))
