"""Invariant suites run by ``wick-limits --mode verify`` and the acceptance tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .chaos import (
    POISSON_TAIL_TOL,
    ChaosExpansion,
    YoungConfig,
    second_quantization,
    wick_chain,
    wick_product,
    young_check,
)
from .gaussian_llt import canonical_density, validate_gaussian_density
from .generators import random_density, random_expansion, random_pmf
from .oracles import density_to_pmf, exact_thinned_sum_law, grid_convolution_density, total_variation
from .orthobasis import (
    ReferenceMeasure,
    charlier_eval,
    gauss_hermite_rule,
    hermite_eval,
    poisson_pmf,
    poisson_support_bound,
)
from .poisson_lsn import pmf_to_density

ORTHO_DEGREE = 12
ORTHO_INTENSITIES = (0.5, 1.0, 2.0)
ORTHO_TOL = 1e-8
ALGEBRA_TOL = 1e-12
YOUNG_TOL = 1e-9
POISSON_ORACLE_TOL = 1e-10
GRID_CANONICAL_TOL = 1e-3
GRID_RANDOM_TOL = 5e-3


@dataclass
class SuiteReport:
    name: str
    cases: int = 0
    failures: int = 0
    max_error: float = 0.0
    seconds: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases > 0 and self.failures == 0

    def record(self, error: float, tol: float, label: str = ""):
        self.cases += 1
        self.max_error = max(self.max_error, error)
        if not error <= tol:
            self.failures += 1
            if len(self.notes) < 5:
                self.notes.append(f"{label}: {error:.3e} > {tol:g}")

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: {self.cases} cases, {self.failures} failures, "
                f"max error {self.max_error:.3e}, {self.seconds:.2f} s")


def _timed(report: SuiteReport, start: float) -> SuiteReport:
    report.seconds = time.perf_counter() - start
    return report


def orthogonality_suite(degree: int = ORTHO_DEGREE, intensities=ORTHO_INTENSITIES,
                        tol: float = ORTHO_TOL) -> SuiteReport:
    """Gram matrices of the monic polynomials against ``diag(j!)`` and ``diag(a^j j!)``.

    Entries are compared after dividing by ``sqrt(w_j w_k)``, so the tolerance
    is relative to the size of the diagonal (``12!`` is about ``4.8e8``).
    """
    start = time.perf_counter()
    report = SuiteReport("orthogonality")
    j = np.arange(degree + 1)
    fact = np.array([math.factorial(int(i)) for i in j], dtype=float)

    rule = gauss_hermite_rule(max(40, degree + 1))
    H = np.array([hermite_eval(int(i), rule.nodes) for i in j])
    gram = (H * rule.weights) @ H.T
    err = np.abs(gram / np.sqrt(np.outer(fact, fact)) - np.eye(degree + 1))
    report.record(float(err.max()), tol, "hermite")

    for a in intensities:
        K = poisson_support_bound(a, POISSON_TAIL_TOL, degree)
        k = np.arange(K + 1)
        nu = poisson_pmf(a, k)
        C = np.array([charlier_eval(int(i), a, k) for i in j])
        gram = (C * nu) @ C.T
        w = a ** j * fact
        err = np.abs(gram / np.sqrt(np.outer(w, w)) - np.eye(degree + 1))
        report.record(float(err.max()), tol, f"charlier a={a:g}")
    return _timed(report, start)


def functoriality_suite(rng: np.random.Generator, cases: int = 1_000, degree: int = 8,
                        tol: float = ALGEBRA_TOL) -> SuiteReport:
    """Gamma distributes over Wick products, composes multiplicatively and fixes 1;
    the Wick product is commutative and associative."""
    start = time.perf_counter()
    report = SuiteReport("functoriality")
    measures = (ReferenceMeasure.gaussian(), ReferenceMeasure.poisson(1.0))

    def gap(x: ChaosExpansion, y: ChaosExpansion) -> float:
        d = max(x.degree, y.degree)
        return float(np.max(np.abs(x.padded(d) - y.padded(d))))

    for i in range(cases):
        m = measures[i % 2]
        f, g, h = (random_expansion(rng, m, int(rng.integers(0, degree + 1))) for _ in range(3))
        lam, rho = rng.uniform(-1.0, 1.0, 2)
        worst = max(
            gap(second_quantization(lam, wick_product(f, g)),
                wick_product(second_quantization(lam, f), second_quantization(lam, g))),
            gap(second_quantization(lam, second_quantization(rho, f)), second_quantization(lam * rho, f)),
            gap(second_quantization(lam, ChaosExpansion.constant(m)), ChaosExpansion.constant(m)),
            gap(wick_product(f, g), wick_product(g, f)),
            gap(wick_product(wick_product(f, g), h), wick_product(f, wick_product(g, h))),
        )
        report.record(worst, tol, f"case {i}")
    return _timed(report, start)


def young_suite(rng: np.random.Generator, cases: int = 1_000, tol: float = YOUNG_TOL) -> SuiteReport:
    """Four configurations, ``cases`` random density pairs each."""
    start = time.perf_counter()
    report = SuiteReport("young")
    gauss = ReferenceMeasure.gaussian()
    pois = ReferenceMeasure.poisson(1.0)
    for i in range(cases):
        theta = rng.uniform(0.0, 0.5 * math.pi)
        alphas = (math.cos(theta), math.sin(theta))
        fs = [random_density(rng, gauss, 4) for _ in range(2)]
        for p in (3.0, 1.0):
            res = young_check(fs, YoungConfig(alphas, (p, p), p), tol=0.0)
            report.record(max(0.0, res.lhs - res.rhs), tol, f"gaussian p={p:g} case {i}")
        t = rng.uniform(0.0, 1.0)
        fs = [random_density(rng, pois, 4) for _ in range(2)]
        for p in (1.0, 2.0):
            res = young_check(fs, YoungConfig((t, 1.0 - t), (p, p), p), tol=0.0)
            report.record(max(0.0, res.lhs - res.rhs), tol, f"poisson p={p:g} case {i}")
    return _timed(report, start)


def poisson_oracle_suite(rng: np.random.Generator, cases: int = 100,
                         tol: float = POISSON_ORACLE_TOL) -> SuiteReport:
    """Exact thin-and-convolve law against ``Gamma(a1) f_p <> Gamma(a2) f_q``."""
    start = time.perf_counter()
    report = SuiteReport("poisson-oracle")
    for i in range(cases):
        a = float(rng.choice(ORTHO_INTENSITIES))
        p, q = random_pmf(rng), random_pmf(rng)
        alpha = float(rng.uniform(0.0, 1.0))
        exact = exact_thinned_sum_law([p, q], [alpha, 1.0 - alpha])
        g = wick_product(second_quantization(alpha, pmf_to_density(p, a)),
                         second_quantization(1.0 - alpha, pmf_to_density(q, a)))
        K = exact.support_max + 10
        law = density_to_pmf(g, K)
        tv = total_variation(law, exact) + 0.5 * abs(1.0 - math.fsum(law))
        report.record(tv, tol, f"case {i} (a={a:g}, alpha={alpha:.3f})")
    return _timed(report, start)


def gaussian_oracle_suite(rng: np.random.Generator, cases: int = 10) -> SuiteReport:
    """Grid convolution against the Wick side for n = 2: the canonical density at
    equal weights, then random centred densities at random weights."""
    start = time.perf_counter()
    report = SuiteReport("gaussian-oracle")
    f = canonical_density()
    s = math.sqrt(0.5)
    g = wick_product(second_quantization(s, f.expansion), second_quantization(s, f.expansion))
    report.record(grid_convolution_density(f, f, s, s).l1_mu_distance(g), GRID_CANONICAL_TOL, "canonical")
    gauss = ReferenceMeasure.gaussian()
    for i in range(cases):
        f1 = validate_gaussian_density(random_density(rng, gauss, 6, centred=True))
        f2 = validate_gaussian_density(random_density(rng, gauss, 6, centred=True))
        theta = rng.uniform(0.0, 0.5 * math.pi)
        a1, a2 = math.cos(theta), math.sin(theta)
        g = wick_chain([second_quantization(a1, f1.expansion), second_quantization(a2, f2.expansion)])
        dist = grid_convolution_density(f1, f2, a1, a2).l1_mu_distance(g)
        report.record(dist, GRID_RANDOM_TOL, f"random {i}")
    return _timed(report, start)


def run_all(seed: int) -> list[SuiteReport]:
    rng = np.random.default_rng(seed)
    return [
        orthogonality_suite(),
        functoriality_suite(rng),
        young_suite(rng),
        poisson_oracle_suite(rng),
        gaussian_oracle_suite(rng),
    ]
