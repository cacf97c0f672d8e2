import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import spaces
from finmetric import (
    INFINITE,
    DomainError,
    FiniteMetricSpace,
    SolverLimits,
    betweenness_exponent,
    covering_number,
    is_ultrametric,
    min_maximal_packing,
    packing_number,
    validate_metric,
)
from finmetric.products import min_condition_check, product_custom, product_p
from finmetric.verify import (
    FIG1_MATRIX,
    GeneratorConfig,
    check_chain_suite,
    check_product_multiplicativity,
    check_theorem_1_6,
    check_theorem_2_8,
    enumerate_subsets,
    fixture_fig1,
    fixture_fig2,
    gen_example_3_3,
    gen_random_metric,
    gen_random_ultrametric,
    witness_non_ultrametric,
)
import oracles


def two(d=1.0):
    return FiniteMetricSpace([[0, d], [d, 0]])


def line(*xs):
    return FiniteMetricSpace.from_points(np.array(xs, dtype=float))


class TestGenerators:
    @pytest.mark.parametrize("mode", ["euclidean", "range12", "dendrogram"])
    def test_one_point(self, mode):
        assert gen_random_metric(GeneratorConfig(1, 7, mode)).n == 1

    @pytest.mark.parametrize("mode", ["euclidean", "range12", "dendrogram"])
    @pytest.mark.parametrize("seed", range(10))
    def test_valid_and_deterministic(self, mode, seed):
        cfg = GeneratorConfig(2 + seed, seed, mode)
        a, b = gen_random_metric(cfg), gen_random_metric(cfg)
        assert a == b
        assert validate_metric(a.dist).ok
        if mode == "range12":
            off = a.dist[~np.eye(a.n, dtype=bool)]
            assert off.min() >= 1 and off.max() <= 2

    def test_forced_points(self):
        sp = gen_random_metric(GeneratorConfig(3, 0, "euclidean", dim=1), points=[[0], [1], [2]])
        assert betweenness_exponent(sp) == 1.0

    def test_bad_config(self):
        for kwargs in ({"n": 0}, {"n": 3, "mode": "bogus"}, {"n": 3, "dim": 0}, {"n": 3, "seed": -1}):
            with pytest.raises(DomainError):
                GeneratorConfig(**kwargs)

    def test_dendrogram_two_and_three(self):
        sp = gen_random_ultrametric(GeneratorConfig(2, 5, "dendrogram"))
        assert 0 < sp.dist[0, 1] <= 1
        sp3 = gen_random_ultrametric(GeneratorConfig(3, 5, "dendrogram"))
        vals = sorted(sp3.dist[np.triu_indices(3, 1)])
        assert vals[0] < vals[1] == vals[2]

    @given(st.integers(1, 12), st.integers(0, 2 ** 63))
    def test_dendrogram_ultrametric(self, n, seed):
        sp = gen_random_ultrametric(GeneratorConfig(n, seed, "dendrogram"))
        assert oracles.is_ultrametric(sp.dist)
        assert betweenness_exponent(sp) == INFINITE

    def test_example_3_3(self):
        sp = gen_example_3_3(5, 1.0)
        assert set(np.unique(sp.dist)) == {0.0, 1.0, 2.0}
        assert betweenness_exponent(sp) == 1.0
        assert betweenness_exponent(gen_example_3_3(6, 2.0)) == pytest.approx(2.0, abs=1e-9)
        assert sp.labels[0] == "a"
        with pytest.raises(DomainError):
            gen_example_3_3(2, 1.0)
        with pytest.raises(DomainError):
            gen_example_3_3(4, 0.5)

    @pytest.mark.parametrize("t", [1.0, 1.5, 3.0])
    def test_example_3_3_coverings(self, t):
        sp = gen_example_3_3(6, t)
        eps = (1 + 2 ** (1 / t)) / 2
        W = list(range(1, 6))
        assert covering_number(sp, W, W, eps).count == 5
        assert covering_number(sp, W, None, eps).count == 1
        assert packing_number(sp, W, eps).count == 5
        assert min_maximal_packing(sp, W, eps).count == 5
        assert packing_number(sp, W, 2 ** (1 / t) * eps).count == 1
        assert min_maximal_packing(sp, None, eps).count == 1


class TestFixtures:
    def test_fig1_entries(self):
        P = fixture_fig1()
        assert P.dist[P.index(0, 0), P.index(1, 1)] == 1
        assert P.dist[P.index(1, 1), P.index(2, 2)] == 2
        assert oracles.is_metric(P.dist)
        assert np.array_equal(P.dist, np.array(FIG1_MATRIX, dtype=float))

    def test_fig2(self):
        assert oracles.is_ultrametric(fixture_fig2(1.0).dist)
        assert not oracles.is_ultrametric(fixture_fig2(2.0).dist)
        for a in (1.0, 1.3, 2.0):
            P = fixture_fig2(a)
            assert P.dist[0, 3] == a
            assert np.all(P.chebyshev() <= P.dist)
        for a in (0.9, 2.1):
            with pytest.raises(DomainError):
                fixture_fig2(a)


class TestSubsets:
    def test_exhaustive_order(self):
        subsets, exhaustive = enumerate_subsets(3, 8)
        assert exhaustive
        assert subsets == [0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111]

    def test_sampled(self):
        subsets, exhaustive = enumerate_subsets(12, 50, seed=3)
        assert not exhaustive
        small = [s for s in subsets if bin(s).count("1") <= 3]
        assert len(small) == 12 + 66 + 220
        assert subsets == enumerate_subsets(12, 50, seed=3)[0]


class TestWitness:
    def test_line(self):
        w = witness_non_ultrametric(line(0, 1, 2))
        assert (w.a, w.b, w.c, w.eps, w.N, w.M) == (0, 2, 1, 1.0, 1, 2)

    def test_fig2(self):
        w = witness_non_ultrametric(fixture_fig2(2.0).product)
        assert (w.a, w.b, w.c, w.eps, w.N, w.M) == (0, 3, 1, 1.0, 1, 2)

    def test_345(self):
        w = witness_non_ultrametric(FiniteMetricSpace([[0, 3, 4], [3, 0, 5], [4, 5, 0]]))
        assert w.c == 0 and {w.a, w.b} == {1, 2} and (w.eps, w.N, w.M) == (4.0, 1, 2)

    def test_ultrametric_rejected(self):
        with pytest.raises(DomainError):
            witness_non_ultrametric(two())

    @given(spaces(min_n=3, max_n=9, modes=("euclidean", "range12", "grid")))
    def test_guarantee(self, space):
        if is_ultrametric(space).verdict:
            return
        w = witness_non_ultrametric(space)
        d = space.dist
        assert d[w.a, w.b] > max(d[w.a, w.c], d[w.b, w.c]) == w.eps
        tri = [w.a, w.b, w.c]
        assert covering_number(space, tri, tri, w.eps).count == w.N <= 1
        assert packing_number(space, tri, w.eps).count == w.M >= 2


class TestTheorem16:
    def test_dendrogram(self):
        r = check_theorem_1_6(gen_random_ultrametric(GeneratorConfig(8, 1, "dendrogram")))
        assert r.verdict == "pass" and r.details["exhaustive"] and r.cases_run > 255

    def test_line_via_witness(self):
        r = check_theorem_1_6(line(0, 1, 2))
        assert r.verdict == "pass"
        assert r.evidence[0].to_dict() == {"a": 0, "b": 2, "c": 1, "eps": 1.0, "N": 1, "M": 2}

    def test_one_point(self):
        assert check_theorem_1_6(FiniteMetricSpace([[0.0]])).verdict == "pass"

    def test_indeterminate_under_tiny_limits(self):
        sp = gen_random_ultrametric(GeneratorConfig(14, 2, "dendrogram"))
        r = check_theorem_1_6(sp, subset_budget=64, limits=SolverLimits(max_nodes=1))
        assert r.verdict in ("pass", "indeterminate")

    @given(spaces(max_n=7))
    def test_always_passes(self, space):
        assert check_theorem_1_6(space).verdict == "pass"


class TestChainSuites:
    @pytest.mark.parametrize("which", ["classical", "refined"])
    def test_random(self, which):
        for seed in range(5):
            sp = gen_random_metric(GeneratorConfig(7, seed, "range12" if seed % 2 else "euclidean"))
            r = check_chain_suite(sp, which)
            assert r.verdict == "pass" and r.details["exhaustive"]

    def test_unknown(self):
        with pytest.raises(DomainError):
            check_chain_suite(two(), "other")


class TestTheorem28:
    @pytest.mark.parametrize("seed", range(5))
    def test_chebyshev_of_dendrograms(self, seed):
        X = gen_random_ultrametric(GeneratorConfig(3 + seed % 3, seed, "dendrogram"))
        Y = gen_random_ultrametric(GeneratorConfig(2 + seed % 4, 100 + seed, "dendrogram"))
        r = check_theorem_2_8(product_p(X, Y, math.inf))
        assert r.verdict == "pass" and r.details["product_ultrametric"] and r.details["equals_chebyshev"]

    def test_euclidean_of_units(self):
        r = check_theorem_2_8(product_p(two(), two(), 2.0))
        assert r.verdict == "pass" and not r.details["product_ultrametric"]
        assert not r.details["equals_chebyshev"]

    def test_fig2(self):
        r = check_theorem_2_8(fixture_fig2(2.0))
        assert r.verdict == "pass" and not r.details["product_ultrametric"]

    def test_precondition(self):
        P = fixture_fig2(1.0)
        m = P.dist.copy()
        m[0, 1] = m[1, 0] = 0.5
        r = check_theorem_2_8(product_custom(P.factor_x, P.factor_y, m))
        assert r.verdict == "fail" and "precondition_failed" in r.details and r.witnesses


class TestMultiplicativity:
    def test_chebyshev_packing(self):
        X = gen_random_ultrametric(GeneratorConfig(4, 3, "dendrogram"))
        Y = gen_random_ultrametric(GeneratorConfig(3, 4, "dendrogram"))
        r = check_product_multiplicativity(product_p(X, Y, math.inf), "packing")
        assert r.verdict == "pass" and r.details["aggregate"] is True and r.details["exhaustive"]

    def test_euclidean_units_packing(self):
        r = check_product_multiplicativity(product_p(two(), two(), 2.0), "packing")
        assert r.verdict == "pass" and r.details["aggregate"] is False
        ev = r.evidence[0]
        assert ev["W"] == [0, 1] and ev["Z"] == [0, 1] and ev["eps"] == 1.0
        assert ev["counts"]["M_WZ"] == 2 and ev["counts"]["M_W"] * ev["counts"]["M_Z"] == 1

    def test_fig2_covering(self):
        r = check_product_multiplicativity(fixture_fig2(2.0), "covering")
        assert r.verdict == "pass" and r.details["aggregate"] is True
        assert r.details["pairs"] == 9 and not r.details["product_ultrametric"]

    def test_fig2_packing(self):
        r = check_product_multiplicativity(fixture_fig2(2.0), "packing")
        assert r.verdict == "pass"
        ev = r.evidence[0]
        assert ev["eps"] == 1.0 and ev["counts"]["M_WZ"] == 2

    def test_fig2_prop34(self):
        r = check_product_multiplicativity(fixture_fig2(2.0), "prop34")
        assert r.verdict == "pass"
        ev = r.evidence[0]
        assert ev["eps"] == 1.0 and ev["counts"]["N_WZ"] == 1 and ev["counts"]["M_WZ"] == 2

    def test_fig2_equality(self):
        assert check_product_multiplicativity(fixture_fig2(2.0), "equality").verdict == "pass"

    def test_cor38_premise(self):
        r = check_product_multiplicativity(fixture_fig2(2.0), "cor38")
        assert r.verdict == "fail" and r.details["precondition_failed"] == "swap symmetry"
        assert r.witnesses[0].values == (2.0, 1.0)

    def test_cor38_chebyshev(self):
        X = gen_random_ultrametric(GeneratorConfig(3, 8, "dendrogram"))
        r = check_product_multiplicativity(product_p(X, X, math.inf), "cor38")
        assert r.verdict == "pass" and r.details["aggregate"]

    def test_remark310(self):
        assert check_product_multiplicativity(fixture_fig2(2.0), "remark310").verdict == "pass"
        assert check_product_multiplicativity(fixture_fig1(), "remark310").verdict == "pass"

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            check_product_multiplicativity(fixture_fig2(2.0), "bogus")

    def test_min_condition_direction(self):
        # covering multiplicativity on an ultrametric-factor product forces the min-condition
        for seed in range(6):
            X = gen_random_ultrametric(GeneratorConfig(3, seed, "dendrogram"))
            Y = gen_random_ultrametric(GeneratorConfig(2, seed + 50, "dendrogram"))
            for p in (1.0, 2.0, math.inf):
                P = product_p(X, Y, p)
                r = check_product_multiplicativity(P, "covering")
                assert r.verdict == "pass"
                if r.details["aggregate"]:
                    assert min_condition_check(P).verdict

    def test_sampled_pairs(self):
        X = gen_random_ultrametric(GeneratorConfig(6, 1, "dendrogram"))
        r = check_product_multiplicativity(product_p(X, X, math.inf), "packing", subset_budget=200)
        assert r.verdict == "pass" and r.details["exhaustive"] is False

    def test_report_json(self):
        d = check_product_multiplicativity(fixture_fig2(2.0), "packing").to_dict()
        assert set(d) == {"suite", "verdict", "cases_run", "witnesses", "evidence", "details"}
