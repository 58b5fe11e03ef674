import math

import numpy as np

from wick_limits.chaos import verification_points
from wick_limits.generators import coefficient_scales, random_density, random_expansion, random_pmf
from wick_limits.orthobasis import ReferenceMeasure


def test_scales():
    np.testing.assert_allclose(coefficient_scales(3), [0.5, 0.25, 0.5 / 8, 0.5 / 48])


def test_random_expansion_within_scales(rng):
    f = random_expansion(rng, ReferenceMeasure.poisson(2.0), 7)
    assert np.all(np.abs(f.coeffs) <= coefficient_scales(7))


def test_random_densities_are_densities(rng):
    for m in (ReferenceMeasure.gaussian(), ReferenceMeasure.poisson(0.5)):
        for centred in (False, True):
            f = random_density(rng, m, 5, centred=centred)
            assert f.is_density and f.coeffs[0] == 1.0
            assert np.min(f(verification_points(m, f.degree))) >= 0.0
            if centred:
                assert np.all(f.coeffs[1:3] == 0.0)
    assert random_density(rng, ReferenceMeasure.gaussian(), 5).degree == 6


def test_random_pmf(rng):
    for _ in range(20):
        p = random_pmf(rng, 4)
        assert 1 <= p.support_max <= 4
        assert math.isclose(math.fsum(p.probs), 1.0, abs_tol=1e-12)
