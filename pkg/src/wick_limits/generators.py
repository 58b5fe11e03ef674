"""Seeded random expansions, densities and pmfs for property checks."""

from __future__ import annotations

import math

import numpy as np

from .chaos import ChaosExpansion, verification_points
from .orthobasis import ReferenceMeasure
from .poisson_lsn import FinitePmf

MAX_REJECTIONS = 1_000


def coefficient_scales(degree: int) -> np.ndarray:
    """``c_j = 0.5 / (j! 2^j)``."""
    j = np.arange(degree + 1)
    return 0.5 / np.array([math.factorial(int(i)) * 2.0 ** i for i in j])


def random_expansion(rng: np.random.Generator, measure: ReferenceMeasure, degree: int) -> ChaosExpansion:
    c = coefficient_scales(degree)
    return ChaosExpansion(measure, rng.uniform(-c, c))


def random_density(rng: np.random.Generator, measure: ReferenceMeasure, degree: int = 6,
                   centred: bool = False) -> ChaosExpansion:
    """A nonnegative expansion ``1 + q / C`` with total mass one.

    ``q`` has zero constant term (and, with ``centred``, zero first and second
    coefficients) and ``C = max(1, -1.1 min q)`` over the verification points.
    Draws that still dip below zero are rejected.
    """
    if measure.is_gaussian and degree % 2:
        degree += 1  # even top degree keeps the tails controllable
    first = 3 if centred else 1
    if degree < first:
        raise ValueError(f"degree {degree} leaves no free coefficients")
    scales = coefficient_scales(degree)
    points = verification_points(measure, degree)
    if not measure.is_gaussian:
        # a polynomial may dip below zero past the bulk of nu; look further out
        points = np.arange(4 * points.size + 50)
    for _ in range(MAX_REJECTIONS):
        c = np.zeros(degree + 1)
        c[first:] = rng.uniform(-scales[first:], scales[first:])
        c[degree] = abs(c[degree])  # positive tails
        q_vals = ChaosExpansion(measure, c)(points)
        C = max(1.0, -1.1 * float(np.min(q_vals)))
        if np.min(1.0 + q_vals / C) >= 0.0:
            c /= C
            c[0] = 1.0
            return ChaosExpansion(measure, c, is_density=True)
    raise RuntimeError("no nonnegative density found; lower the degree")


def random_pmf(rng: np.random.Generator, max_support: int = 6) -> FinitePmf:
    """Dirichlet weights on ``0..K`` with ``K`` uniform in ``1..max_support``."""
    K = int(rng.integers(1, max_support + 1))
    p = rng.dirichlet(np.ones(K + 1))
    return FinitePmf(p / math.fsum(p))
