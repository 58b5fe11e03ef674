"""Mollified local limit theorem for densities with respect to N(0, 1).

For i.i.d. ``X_i`` with mu-density ``f`` (zero mean, unit variance) the
mu-density of

    sqrt(n/(n+b_n)) (X_1 + ... + X_n)/sqrt(n) + sqrt(b_n/(n+b_n)) Z

is ``(Gamma(1/sqrt(n+b_n)) f)`` raised to the n-th Wick power, and its L1(mu)
distance to the constant 1 is at most
``n (b_n+1)^(-3/2) sqrt(sum_{k>=3} k! gamma_k^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .chaos import (
    DEFAULT_WICK_CAP,
    DENSITY_EPS,
    VERIFY_RADIUS,
    ChaosExpansion,
    gaussian_l1_norm,
    gaussian_rule_for,
    l2_norm,
    second_quantization,
    verification_points,
    wick_power,
)
from .experiment import (
    GAUSSIAN_RATE,
    ConvergenceRecord,
    SequenceSchedule,
    Tolerances,
    guarded_row,
    run_rows,
)
from .orthobasis import ReferenceMeasure

MOMENT_TOL = 1e-10
TRAPEZOID_POINTS = 100_000
TAIL_LIMIT = 1e-12
# Cramer's inequality: |h_j(x)| <= K sqrt(j!) exp(x^2/4)
CRAMER_CONSTANT = 1.0865


@dataclass(frozen=True)
class Violation:
    condition: str
    measured: float
    message: str


class DensityValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(v.message for v in violations))


class QuadratureCrossCheckError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GaussianDensityInput:
    expansion: ChaosExpansion
    provenance: str = "synthetic"

    @property
    def coeffs(self) -> np.ndarray:
        return self.expansion.coeffs


def canonical_density() -> GaussianDensityInput:
    """``1 + 0.1 h_4``: centred, unit variance, minimum 0.4 at ``x^2 = 3``."""
    f = ChaosExpansion.from_terms(ReferenceMeasure.gaussian(), {0: 1.0, 4: 0.1}, is_density=True)
    return GaussianDensityInput(f, provenance="closed-form 1 + 0.1 h_4")


def validate_gaussian_density(f: ChaosExpansion, tol: float = MOMENT_TOL,
                              provenance: str = "synthetic") -> GaussianDensityInput:
    """Accept ``f = 1 + sum_{k>=3} gamma_k h_k`` that is nonnegative.

    Raises ``DensityValidationError`` listing every violated condition.
    """
    if not f.measure.is_gaussian:
        raise ValueError("expected an expansion on the Gaussian measure")
    c = f.padded(2)
    found = []
    if abs(c[0] - 1.0) > tol:
        found.append(Violation("mass", c[0], f"gamma_0 = {float(c[0])!r}, a density needs total mass 1"))
    if abs(c[1]) > tol:
        found.append(Violation("mean", c[1], f"gamma_1 = {float(c[1])!r}, zero mean needs gamma_1 = 0"))
    if abs(c[2]) > tol:
        found.append(Violation("variance", c[2], f"gamma_2 = {float(c[2])!r}, unit variance needs gamma_2 = 0"))
    norm = l2_norm(f)
    if not math.isfinite(norm):
        found.append(Violation("l2", norm, "the L2(mu) norm is not finite"))
    low = float(np.min(f(verification_points(f.measure))))
    if low < -DENSITY_EPS:
        found.append(Violation("negativity", low, f"f reaches {low:.3e} on the verification grid"))
    if found:
        raise DensityValidationError(found)
    return GaussianDensityInput(
        ChaosExpansion(f.measure, f.coeffs, is_density=True), provenance=provenance
    )


def mollified_sum_density(f: GaussianDensityInput, n: int, b_n: float,
                          d_cap: int = DEFAULT_WICK_CAP) -> ChaosExpansion:
    """mu-density of the mollified normalized sum of ``n`` copies."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if b_n < 0:
        raise ValueError("b_n must be nonnegative")
    scaled = second_quantization(1.0 / math.sqrt(n + b_n), f.expansion)
    return wick_power(scaled, n, d_cap)


def trapezoid_l1_distance(g: ChaosExpansion, radius: float = VERIFY_RADIUS,
                          points: int = TRAPEZOID_POINTS) -> tuple[float, float]:
    """``||g - 1||_1`` by the trapezoid rule, plus a bound on the part beyond ``radius``."""
    x = np.linspace(-radius, radius, points)
    phi = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    diff = g - 1.0
    value = float(np.trapezoid(np.abs(diff(x)) * phi, x))
    weight_sum = float(np.sum(np.abs(diff.normalized_coeffs())))
    tail = CRAMER_CONSTANT * math.sqrt(2.0) * float(erfc(radius / 2.0)) * weight_sum
    return value, tail


def l1_distance_to_one(g: ChaosExpansion, order: int | None = None, crosscheck: bool = True,
                       tolerances: Tolerances = Tolerances(), method: str = "exact") -> float:
    """``||g - 1||_{L1(mu)}``.

    ``method="exact"`` integrates between the sign changes of ``g - 1`` in
    closed form. ``method="quadrature"`` applies the Gauss-Hermite rule of
    ``order`` to ``|g - 1|``; the kinks limit it to roughly 1e-2 relative
    accuracy. With ``crosscheck`` the value is compared with a dense
    trapezoid rule on [-12, 12] and disagreement raises
    ``QuadratureCrossCheckError``.
    """
    if not g.measure.is_gaussian:
        raise ValueError("expected an expansion on the Gaussian measure")
    diff = g - 1.0
    if method == "exact":
        value = gaussian_l1_norm(diff)
    elif method == "quadrature":
        rule = gaussian_rule_for(diff, order)
        value = rule.integrate(np.abs(diff(rule.nodes)))
    else:
        raise ValueError(f"unknown method {method!r}")
    if crosscheck:
        trap, tail = trapezoid_l1_distance(g)
        if tail > TAIL_LIMIT:
            raise QuadratureCrossCheckError(f"mass beyond |x| = {VERIFY_RADIUS} may reach {tail:.3e}")
        limit = tolerances.crosscheck_atol + tolerances.crosscheck_rtol * max(value, trap)
        if abs(value - trap) > limit:
            raise QuadratureCrossCheckError(
                f"{method} L1 gives {value!r}, trapezoid gives {trap!r}"
            )
    return value


def tail_series(f: GaussianDensityInput) -> float:
    """``sqrt(sum_{k>=3} k! gamma_k^2)``."""
    c = f.expansion.normalized_coeffs()[3:]
    return float(math.sqrt(np.dot(c, c)))


def theoretical_bound_gaussian(f: GaussianDensityInput, n: int, b_n: float) -> float:
    return n * (b_n + 1.0) ** -1.5 * tail_series(f)


def run_llt_experiment(f: GaussianDensityInput, schedule: SequenceSchedule, n_list,
                       d_cap: int = DEFAULT_WICK_CAP, tolerances: Tolerances = Tolerances(),
                       quad_order: int | None = None, max_workers: int | None = None,
                       mc_samples: int = 0, seed: int | None = None) -> list[ConvergenceRecord]:
    """One ``ConvergenceRecord`` per ``n``; failures are recorded in the row."""
    n_list = list(n_list)
    warnings = tuple(schedule.trend_warnings(n_list, GAUSSIAN_RATE))

    def row(n: int) -> ConvergenceRecord:
        b_n = schedule(n)

        def compute(rec: ConvergenceRecord):
            rec.theoretical_bound = theoretical_bound_gaussian(f, n, b_n)
            g = mollified_sum_density(f, n, b_n, d_cap)
            rec.truncation_mass = g.truncation_mass
            rec.measured_l1 = l1_distance_to_one(g, quad_order, tolerances=tolerances)
            rec.bound_satisfied = tolerances.within_bound(rec.measured_l1, rec.theoretical_bound)
            if mc_samples:
                from .oracles import monte_carlo_l1_gaussian

                mc = monte_carlo_l1_gaussian(f, n, b_n, mc_samples, seed)
                rec.mc_estimate, rec.mc_std_error = mc.estimate, mc.std_error

        return guarded_row(n, b_n, warnings, compute)

    return run_rows(n_list, row, max_workers)
