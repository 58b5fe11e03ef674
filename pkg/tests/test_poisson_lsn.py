import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from wick_limits.chaos import ChaosExpansion, l2_norm, second_quantization, wick_product
from wick_limits.experiment import SequenceSchedule
from wick_limits.gaussian_llt import DensityValidationError
from wick_limits.generators import random_pmf
from wick_limits.oracles import convolve_pmfs, density_to_pmf, thin_rational, total_variation
from wick_limits.orthobasis import ReferenceMeasure, poisson_pmf
from wick_limits.poisson_lsn import (
    FinitePmf,
    PoissonDensityInput,
    canonical_pmf,
    density_from_pmf,
    l1_distance_to_one_poisson,
    mollified_thinned_sum_density,
    pmf_to_density,
    run_lsn_experiment,
    tail_series,
    theoretical_bound_poisson,
    thin,
    validate_poisson_density,
)

P1 = ReferenceMeasure.poisson(1.0)


def test_finite_pmf_checks():
    with pytest.raises(ValueError):
        FinitePmf([0.5, 0.6])
    with pytest.raises(ValueError):
        FinitePmf([1.2, -0.2])
    assert FinitePmf.delta(2).probs.tolist() == [0, 0, 1]


def test_thin_examples():
    p = canonical_pmf()
    np.testing.assert_array_equal(thin(1.0, p).probs, p.probs)
    np.testing.assert_array_equal(thin(0.0, p).probs, [1, 0, 0])
    np.testing.assert_allclose(thin(0.3, FinitePmf.delta(1)).probs, [0.7, 0.3], atol=1e-16)
    np.testing.assert_allclose(thin(0.5, FinitePmf.delta(2)).probs, [0.25, 0.5, 0.25], atol=1e-16)
    with pytest.raises(ValueError):
        thin(1.5, p)


def test_thin_matches_binomial_mixture(rng):
    for _ in range(10):
        p = random_pmf(rng)
        alpha = rng.uniform()
        k = np.arange(p.probs.size)
        mix = sum(p.probs[m] * stats.binom.pmf(k, m, alpha) for m in range(p.probs.size))
        np.testing.assert_allclose(thin(alpha, p).probs, mix, atol=1e-15)


def test_thin_composition_rational(rng):
    for _ in range(10):
        probs = [Fraction(int(x), 100) for x in rng.multinomial(100, np.ones(5) / 5)]
        a, b = Fraction(int(rng.integers(1, 10)), 10), Fraction(int(rng.integers(1, 10)), 10)
        assert thin_rational(a, thin_rational(b, probs)) == thin_rational(a * b, probs)
        p = FinitePmf([float(x) for x in probs])
        np.testing.assert_allclose(thin(float(a), thin(float(b), p)).probs,
                                   thin(float(a * b), p).probs, atol=1e-12)


def test_pmf_to_density_canonical():
    f = pmf_to_density(canonical_pmf(), 1.0)
    assert f.coeffs[0] == 1.0
    assert f.coeffs[1] == pytest.approx(0.0, abs=1e-13)
    np.testing.assert_allclose(f([0, 1, 2]), [0.25 * math.e, 0.5 * math.e, 0.5 * math.e], rtol=1e-12)
    np.testing.assert_allclose(f(np.arange(3, 10)), 0.0, atol=1e-10)


def test_pmf_to_density_of_poisson_is_one():
    f = pmf_to_density(FinitePmf.poisson(2.0, 60), 2.0)
    np.testing.assert_allclose(f.coeffs[1:], 0.0, atol=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_first_coefficient_is_relative_mean_shift(rng, a):
    for _ in range(10):
        p = random_pmf(rng)
        assert pmf_to_density(p, a).coeffs[1] == pytest.approx((p.mean() - a) / a, abs=1e-12)


def test_validate_poisson_density():
    validate_poisson_density(pmf_to_density(canonical_pmf(), 1.0), 1.0)
    validate_poisson_density(ChaosExpansion.constant(P1), 1.0)
    with pytest.raises(DensityValidationError) as info:
        validate_poisson_density(pmf_to_density(FinitePmf.delta(0), 1.0), 1.0)
    assert info.value.violations[0].condition == "mean"
    assert info.value.violations[0].measured == pytest.approx(-1.0, abs=1e-12)


def test_thinning_semantics(rng):
    # Gamma(alpha) f_p is the law of T_alpha X + T_(1-alpha) U with U ~ Poisson(a)
    for a in (0.5, 1.0, 2.0):
        for alpha in (0.0, 0.25, 0.5, 1.0):
            p = random_pmf(rng)
            g = second_quantization(alpha, pmf_to_density(p, a))
            K = 80
            exact = np.convolve(thin(alpha, p).probs, stats.poisson.pmf(np.arange(K + 1), (1 - alpha) * a))[: K + 1]
            assert total_variation(density_to_pmf(g, K), exact) <= 1e-10
            if alpha == 1.0:
                np.testing.assert_allclose(g.coeffs, pmf_to_density(thin(alpha, p), a).coeffs, atol=1e-10)


def test_wick_interpretation_coefficients(rng):
    for _ in range(20):
        a = float(rng.choice([0.5, 1.0, 2.0]))
        p, q = random_pmf(rng), random_pmf(rng)
        alpha = rng.uniform()
        law = convolve_pmfs(thin(alpha, p), thin(1 - alpha, q))
        lhs = pmf_to_density(law, a)
        rhs = wick_product(second_quantization(alpha, pmf_to_density(p, a)),
                           second_quantization(1 - alpha, pmf_to_density(q, a)))
        d = max(lhs.degree, rhs.degree)
        np.testing.assert_allclose(lhs.padded(d), rhs.padded(d), atol=1e-10)


def test_mollified_examples():
    one = PoissonDensityInput(ChaosExpansion.constant(P1))
    assert mollified_thinned_sum_density(one, 5, 2).coeffs.tolist() == [1.0]
    f = density_from_pmf(canonical_pmf(), 1.0)
    np.testing.assert_array_equal(mollified_thinned_sum_density(f, 1, 0).coeffs, f.coeffs)
    g2 = 0.3
    h = PoissonDensityInput(ChaosExpansion(P1, [1, 0, g2]))
    assert mollified_thinned_sum_density(h, 2, 0).coeffs[2] == pytest.approx(2 * g2 / 4, abs=1e-16)


def test_l1_distance_examples():
    assert l1_distance_to_one_poisson(ChaosExpansion.constant(P1)) == 0.0
    a, c = 2.0, 0.1
    g = ChaosExpansion(ReferenceMeasure.poisson(a), [1, c])
    k = np.arange(200)
    direct = math.fsum(abs(c) * np.abs(k - a) * stats.poisson.pmf(k, a))
    assert l1_distance_to_one_poisson(g) == pytest.approx(direct, rel=1e-12)


def test_l1_against_exact_law(rng):
    # the mollified density is the law of a binomial thinning plus a Poisson part
    p = canonical_pmf()
    f = density_from_pmf(p, 1.0)
    for n, b in [(4, 4), (16, 10)]:
        lam = 1 / (n + b)
        law = p.probs
        for _ in range(n - 1):
            law = np.convolve(law, p.probs)
        law = thin(lam, FinitePmf(law / law.sum())).probs
        exact = np.convolve(law, poisson_pmf(b * lam, np.arange(60)))
        k = np.arange(exact.size)
        direct = math.fsum(np.abs(exact - poisson_pmf(1.0, k)))
        g = mollified_thinned_sum_density(f, n, b)
        assert l1_distance_to_one_poisson(g) == pytest.approx(direct, abs=1e-13)


def test_l1_below_l2(rng):
    for _ in range(10):
        g = pmf_to_density(random_pmf(rng), 1.0)
        assert l1_distance_to_one_poisson(g) <= l2_norm(g - 1.0) * (1 + 1e-12)


def test_bound_and_series():
    f = density_from_pmf(canonical_pmf(), 1.0)
    one = PoissonDensityInput(ChaosExpansion.constant(P1))
    assert theoretical_bound_poisson(one, 16, 10) == 0.0
    series = math.sqrt(math.fsum(math.factorial(j) * c * c for j, c in enumerate(f.coeffs) if j >= 2))
    assert theoretical_bound_poisson(f, 16, 10) == pytest.approx(16 / 121 * series, rel=1e-12)
    assert tail_series(f) ** 2 == pytest.approx(l2_norm(f.expansion) ** 2 - 1, rel=1e-10)
    # ||f||_2^2 = sum_k p_k^2 / nu_k directly from the pmf
    direct = math.fsum(canonical_pmf().probs ** 2 / poisson_pmf(1.0, np.arange(3)))
    assert tail_series(f) ** 2 == pytest.approx(direct - 1, rel=1e-12)


def test_telescoping_step(rng):
    for _ in range(10):
        p = random_pmf(rng)
        f = pmf_to_density(p, p.mean())  # intensity = mean, so f is a valid input
        fin = PoissonDensityInput(f)
        for n in (2, 3, 4):
            b = float(rng.integers(0, 6))
            lhs = l1_distance_to_one_poisson(mollified_thinned_sum_density(fin, n, b))
            step = l1_distance_to_one_poisson(second_quantization(1 / (b + 1), f))
            assert lhs <= n * step + 1e-12


def test_experiment_rows():
    f = density_from_pmf(canonical_pmf(), 1.0)
    rows = run_lsn_experiment(f, SequenceSchedule.power(0.8), [4, 16, 64, 256, 1024])
    assert all(r.bound_satisfied and r.error is None for r in rows)
    assert rows[-1].measured_l1 < rows[0].measured_l1
    for r in rows:
        assert r.measured_l1 <= r.theoretical_bound + 1e-8


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_experiment_other_intensities(a):
    p = FinitePmf([0.5, 0.5]) if a == 0.5 else FinitePmf([0.25, 0, 0.5, 0, 0.25])
    f = density_from_pmf(p, p.mean())
    assert f.a == pytest.approx(a)
    rows = run_lsn_experiment(f, SequenceSchedule.power(0.8), [4, 64, 1024])
    assert all(r.bound_satisfied for r in rows)


def test_experiment_of_poisson_is_zero():
    one = PoissonDensityInput(ChaosExpansion.constant(P1))
    rows = run_lsn_experiment(one, SequenceSchedule.power(0.8), [4, 16])
    assert all(r.measured_l1 == 0.0 for r in rows)


def test_linear_schedule_warns():
    f = density_from_pmf(canonical_pmf(), 1.0)
    rows = run_lsn_experiment(f, SequenceSchedule.linear(1.0), [4, 16, 64])
    assert "b_n/n does not decrease towards 0" in rows[0].warnings


def test_mc_needs_pmf():
    f = density_from_pmf(canonical_pmf(), 1.0)
    with pytest.raises(ValueError):
        run_lsn_experiment(f, SequenceSchedule.power(0.8), [4], mc_samples=1000)
