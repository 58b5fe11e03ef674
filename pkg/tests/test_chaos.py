import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from wick_limits.chaos import (
    ChaosExpansion,
    InvalidYoungConfig,
    MeasureMismatchError,
    TruncationError,
    YoungConfig,
    as_density,
    l2_norm,
    lp_norm,
    lp_norm_trapezoid,
    project,
    project_function,
    second_quantization,
    wick_chain,
    wick_power,
    wick_product,
    young_check,
)
from wick_limits.generators import random_density, random_expansion
from wick_limits.orthobasis import ReferenceMeasure, gauss_hermite_rule, hermite_eval, poisson_pmf

G = ReferenceMeasure.gaussian()
P1 = ReferenceMeasure.poisson(1.0)

coeff_lists = st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=8)
lams = st.floats(-1, 1, allow_nan=False)


def expansion(measure, coeffs):
    return ChaosExpansion(measure, coeffs)


def test_project_constant():
    rule = gauss_hermite_rule(40)
    f = project(np.ones_like(rule.nodes), G, 6)
    np.testing.assert_allclose(f.coeffs, [1, 0, 0, 0, 0, 0, 0], atol=1e-14)


def test_project_round_trip_h4():
    f = project_function(lambda x: 1 + 0.1 * hermite_eval(4, x), G, 8)
    np.testing.assert_allclose(f.coeffs, [1, 0, 0, 0, 0.1, 0, 0, 0, 0], atol=1e-10)


def test_project_three_point_pmf():
    k = np.arange(3)
    f = project(np.array([0.25, 0.5, 0.25]) / poisson_pmf(1.0, k), P1, 10)
    assert f.coeffs[0] == pytest.approx(1.0, abs=1e-12)
    assert f.coeffs[1] == pytest.approx(0.0, abs=1e-12)


def test_project_rejects_non_finite():
    with pytest.raises(ValueError):
        project(np.array([1.0, np.nan, 2.0]), P1, 2)


def test_second_quantization_examples():
    f = ChaosExpansion.from_terms(G, {0: 1.0, 3: 0.2})
    np.testing.assert_array_equal(second_quantization(1.0, f).coeffs, f.coeffs)
    np.testing.assert_array_equal(second_quantization(0.0, f).coeffs, [1, 0, 0, 0])
    np.testing.assert_allclose(second_quantization(0.5, f).coeffs, [1, 0, 0, 0.025], atol=1e-17)
    with pytest.raises(ValueError):
        second_quantization(1.5, f)


def test_wick_product_examples():
    f = ChaosExpansion(P1, [1, 2])
    g = ChaosExpansion(P1, [1, 3])
    np.testing.assert_array_equal(wick_product(f, g).coeffs, [1, 5, 6])
    np.testing.assert_array_equal(wick_product(f, ChaosExpansion.constant(P1)).coeffs, f.coeffs)
    with pytest.raises(MeasureMismatchError):
        wick_product(f, ChaosExpansion(G, [1, 3]))


def test_wick_power_binomial():
    eps = 0.3
    f = ChaosExpansion.from_terms(G, {0: 1.0, 4: eps})
    g = wick_power(f, 5, d_cap=64)
    for k in range(6):
        assert g.coeffs[4 * k] == pytest.approx(math.comb(5, k) * eps ** k, rel=1e-14)
    assert wick_power(f, 0).coeffs.tolist() == [1.0]
    np.testing.assert_array_equal(wick_power(f, 1).coeffs, f.coeffs)


def test_wick_power_truncation():
    f = ChaosExpansion.from_terms(G, {0: 1.0, 1: 1e-3})
    g = wick_power(f, 4, d_cap=2, rtol=1.0)
    full = wick_power(f, 4, d_cap=64)
    dropped = sum(math.factorial(j) * full.coeffs[j] ** 2 for j in range(3, 5))
    assert g.truncation_mass == pytest.approx(dropped, rel=1e-12)
    with pytest.raises(TruncationError):
        wick_power(ChaosExpansion.from_terms(G, {0: 1.0, 1: 0.5}), 10, d_cap=3)


def test_l2_norm():
    assert l2_norm(ChaosExpansion.constant(G)) == 1.0
    f = ChaosExpansion.from_terms(G, {0: 1.0, 4: 0.1})
    assert l2_norm(f) == pytest.approx(math.sqrt(1.24), rel=1e-15)


def test_l2_norm_against_integration(rng):
    for _ in range(5):
        f = random_expansion(rng, G, 6)
        value, _ = integrate.quad(lambda x: f(x) ** 2 * stats.norm.pdf(x), -np.inf, np.inf)
        assert l2_norm(f) == pytest.approx(math.sqrt(value), abs=1e-8)
        g = random_expansion(rng, ReferenceMeasure.poisson(2.0), 6)
        k = np.arange(120)
        direct = math.fsum(g(k) ** 2 * stats.poisson.pmf(k, 2.0))
        assert l2_norm(g) == pytest.approx(math.sqrt(direct), abs=1e-8)


@pytest.mark.parametrize("p", [1, 1.5, 2, 3])
def test_lp_norm_of_one(p):
    assert lp_norm(ChaosExpansion.constant(G), p) == pytest.approx(1.0, abs=1e-12)
    assert lp_norm(ChaosExpansion.constant(P1), p) == pytest.approx(1.0, abs=1e-12)


def test_lp_norm_density_l1(rng):
    for m in (G, P1):
        f = random_density(rng, m, 6)
        assert lp_norm(f, 1) == pytest.approx(1.0, abs=1e-8)


def test_lp_norm_against_integration(rng):
    f = random_expansion(rng, G, 5)
    kinks = [r for r in np.roots(np.polynomial.hermite_e.herme2poly(f.coeffs)[::-1]).real if abs(r) < 40]
    for p in (1, 3):
        value, _ = integrate.quad(lambda x: abs(f(x)) ** p * stats.norm.pdf(x), -40, 40,
                                  limit=400, points=kinks)
        assert lp_norm(f, p) == pytest.approx(value ** (1 / p), rel=1e-7)
        assert lp_norm_trapezoid(f, p) == pytest.approx(value ** (1 / p), rel=1e-7)


def test_lp_norm_refuses_sup_norm():
    with pytest.raises(ValueError):
        lp_norm(ChaosExpansion.constant(G), math.inf)


@settings(max_examples=60, deadline=None)
@given(coeff_lists, coeff_lists, lams, lams)
def test_functoriality(c1, c2, lam, rho):
    for m in (G, P1):
        f, g = expansion(m, c1), expansion(m, c2)
        lhs = second_quantization(lam, wick_product(f, g)).coeffs
        rhs = wick_product(second_quantization(lam, f), second_quantization(lam, g)).coeffs
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
        np.testing.assert_allclose(second_quantization(lam, second_quantization(rho, f)).coeffs,
                                   second_quantization(lam * rho, f).coeffs, atol=1e-12)
        assert second_quantization(lam, ChaosExpansion.constant(m)).coeffs.tolist() == [1.0]


@settings(max_examples=60, deadline=None)
@given(coeff_lists, coeff_lists, coeff_lists)
def test_wick_commutative_associative(c1, c2, c3):
    f, g, h = (expansion(P1, c) for c in (c1, c2, c3))
    np.testing.assert_allclose(wick_product(f, g).coeffs, wick_product(g, f).coeffs, atol=1e-12)
    np.testing.assert_allclose(wick_chain([f, g, h]).coeffs,
                               wick_product(f, wick_product(g, h)).coeffs, atol=1e-12)


def test_contractivity(rng):
    for m in (G, P1):
        for _ in range(20):
            f = random_expansion(rng, m, 6)
            # negative lambda has no thinning meaning and is not an L1 contraction for Poisson
            lam = rng.uniform(-1, 1) if m.is_gaussian else rng.uniform(0, 1)
            for p in (1, 2):
                assert lp_norm(second_quantization(lam, f), p) <= lp_norm(f, p) * (1 + 1e-10)


def test_l1_below_l2(rng):
    for m in (G, P1):
        for _ in range(20):
            f = random_expansion(rng, m, 6)
            assert lp_norm(f, 1) <= l2_norm(f) * (1 + 1e-10)


def test_density_preservation(rng):
    for _ in range(20):
        f, g = random_density(rng, G, 4), random_density(rng, G, 4)
        t = rng.uniform(0, math.pi / 2)
        h = wick_product(second_quantization(math.cos(t), f), second_quantization(math.sin(t), g))
        as_density(h)
        f, g = random_density(rng, P1, 4), random_density(rng, P1, 4)
        a = rng.uniform()
        as_density(wick_product(second_quantization(a, f), second_quantization(1 - a, g)))


def test_young_trivial():
    one = ChaosExpansion.constant(G)
    s = math.sqrt(0.5)
    res = young_check([one, one], YoungConfig((s, s), (3, 3), 3))
    assert res.lhs == pytest.approx(1.0) and res.rhs == pytest.approx(1.0) and res.holds


def test_young_examples(rng):
    s = math.sqrt(0.5)
    for _ in range(25):
        fs = [random_density(rng, G, 4) for _ in range(2)]
        assert young_check(fs, YoungConfig((s, s), (3, 3), 3)).holds
        fs = [random_density(rng, P1, 4) for _ in range(2)]
        assert young_check(fs, YoungConfig((0.3, 0.7), (1, 1), 1)).holds


def test_young_config_violations():
    assert YoungConfig((0.6, 0.8), (3, 3), 3).violations(G) == []
    assert YoungConfig((0.6, 0.8), (1, 1), 1).violations(G) == []
    assert YoungConfig((0.6, 0.8), (3, 3), 2).violations(G)
    assert YoungConfig((0.3, 0.8), (2, 2), 2).violations(P1)
    assert YoungConfig((0.3, 0.7), (2, 3), 2).violations(P1)
    f = ChaosExpansion.constant(G)
    with pytest.raises(InvalidYoungConfig):
        young_check([f, f], YoungConfig((0.6, 0.8), (3, 3), 2))
    with pytest.raises(InvalidYoungConfig):
        young_check([f, f], YoungConfig((0.6, 0.8), (math.inf, math.inf), math.inf))
