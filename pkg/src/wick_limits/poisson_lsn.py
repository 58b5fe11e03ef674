"""Law of small numbers for nu-densities, nu = Poisson(a).

Scalar multiples of N0-valued variables are read as binomial thinning: the
limit variable is

    T_{n/(n+b_n)}(T_{1/n} X_1 + ... + T_{1/n} X_n) + T_{b_n/(n+b_n)} U,

whose nu-density is ``(Gamma(1/(n+b_n)) f)`` raised to the n-th Wick power.
Its L1(nu) distance to 1 is at most
``n (b_n+1)^(-2) sqrt(sum_{j>=2} a^j j! gamma_j^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chaos import (
    DEFAULT_WICK_CAP,
    POISSON_TAIL_TOL,
    ChaosExpansion,
    l2_norm,
    project,
    second_quantization,
    wick_power,
)
from .experiment import (
    POISSON_RATE,
    ConvergenceRecord,
    SequenceSchedule,
    Tolerances,
    guarded_row,
    run_rows,
)
from .gaussian_llt import DensityValidationError, Violation
from .orthobasis import ReferenceMeasure, charlier_functions, poisson_pmf, poisson_support_bound

PMF_SUM_TOL = 1e-12
MOMENT_TOL = 1e-10
# relative squared L2 mass allowed to fall outside the projected degrees
PROJECTION_TAIL = 1e-30
MAX_PROJECTION_DEGREE = 160


@dataclass(frozen=True, eq=False)
class FinitePmf:
    """Probabilities of ``0..K``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("a pmf needs at least one atom")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("pmf entries must be finite and nonnegative")
        if abs(math.fsum(p) - 1.0) > PMF_SUM_TOL:
            raise ValueError(f"pmf sums to {math.fsum(p)!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def delta(cls, k: int) -> "FinitePmf":
        p = np.zeros(k + 1)
        p[k] = 1.0
        return cls(p)

    @classmethod
    def poisson(cls, a: float, K: int) -> "FinitePmf":
        """Poisson(a) restricted to ``0..K`` and renormalized."""
        p = poisson_pmf(a, np.arange(K + 1))
        return cls(p / math.fsum(p))

    @property
    def support_max(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return math.fsum(self.probs * np.arange(self.probs.size))

    def padded(self, size: int) -> np.ndarray:
        out = np.zeros(max(size, self.probs.size))
        out[: self.probs.size] = self.probs
        return out

    def __len__(self):
        return self.probs.size

    def __repr__(self):
        return f"FinitePmf({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True)
class PoissonDensityInput:
    expansion: ChaosExpansion
    provenance: str = "synthetic"

    @property
    def a(self) -> float:
        return self.expansion.measure.a

    @property
    def coeffs(self) -> np.ndarray:
        return self.expansion.coeffs


def canonical_pmf() -> FinitePmf:
    """``(1/4, 1/2, 1/4)``: mean exactly 1."""
    return FinitePmf([0.25, 0.5, 0.25])


def thin(alpha: float, p: FinitePmf) -> FinitePmf:
    """Binomial thinning ``(T_alpha p)_k = sum_{m>=k} C(m,k) alpha^k (1-alpha)^(m-k) p_m``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"thinning parameter must lie in [0, 1], got {alpha!r}")
    K = p.support_max
    out = np.empty(K + 1)
    for k in range(K + 1):
        out[k] = math.fsum(
            math.comb(m, k) * alpha ** k * (1.0 - alpha) ** (m - k) * p.probs[m]
            for m in range(k, K + 1)
        )
    return FinitePmf(out)


def projection_degree(p: FinitePmf, a: float) -> int:
    """Smallest degree whose Charlier projection of ``p/nu`` keeps all but a
    ``1e-30`` fraction of the squared L2(nu) norm."""
    probe = min(MAX_PROJECTION_DEGREE, max(60, 4 * p.support_max + 40))
    k = np.arange(p.probs.size)
    normalized = charlier_functions(probe, a, k) @ (p.probs / np.sqrt(poisson_pmf(a, k)))
    energy = normalized * normalized
    total = float(np.sum(energy))
    tails = np.cumsum(energy[::-1])[::-1]  # tails[d] = sum_{j>=d}
    ok = np.nonzero(tails <= PROJECTION_TAIL * total)[0]
    degree = int(ok[0]) - 1 if ok.size else probe
    return max(degree, p.support_max, 1)


def pmf_to_density(p: FinitePmf, a: float, degree: int | None = None) -> ChaosExpansion:
    """Charlier expansion of ``k -> p_k / nu({k})`` (zero off the support)."""
    measure = ReferenceMeasure.poisson(a)
    if degree is None:
        degree = projection_degree(p, a)
    k = np.arange(p.probs.size)
    values = p.probs / poisson_pmf(a, k)
    f = project(values, measure, degree)
    # the total mass is exactly one; pin gamma_0 against rounding
    c = f.coeffs.copy()
    c[0] = 1.0
    return ChaosExpansion(measure, c, is_density=True)


def validate_poisson_density(f: ChaosExpansion, a: float | None = None, tol: float = MOMENT_TOL,
                             provenance: str = "synthetic") -> PoissonDensityInput:
    """Accept ``f = 1 + sum_{j>=2} gamma_j c_j^a`` (total mass one, mean ``a``)."""
    if f.measure.is_gaussian:
        raise ValueError("expected an expansion on a Poisson measure")
    if a is not None and not math.isclose(a, f.measure.a, rel_tol=0, abs_tol=1e-15):
        raise ValueError(f"expansion has intensity {f.measure.a}, expected {a}")
    c = f.padded(1)
    found = []
    if abs(c[0] - 1.0) > tol:
        found.append(Violation("mass", c[0], f"gamma_0 = {float(c[0])!r}, a density needs total mass 1"))
    if abs(c[1]) > tol:
        found.append(Violation("mean", c[1], f"gamma_1 = {float(c[1])!r}, mean a needs gamma_1 = 0"))
    if found:
        raise DensityValidationError(found)
    return PoissonDensityInput(ChaosExpansion(f.measure, f.coeffs, is_density=True), provenance)


def mollified_thinned_sum_density(f: PoissonDensityInput, n: int, b_n: float,
                                  d_cap: int = DEFAULT_WICK_CAP) -> ChaosExpansion:
    if n < 1:
        raise ValueError("n must be >= 1")
    if b_n < 0:
        raise ValueError("b_n must be nonnegative")
    scaled = second_quantization(1.0 / (n + b_n), f.expansion)
    return wick_power(scaled, n, d_cap)


def l1_distance_to_one_poisson(g: ChaosExpansion, support: int | None = None) -> float:
    """``sum_{k<=K} |g(k) - 1| nu({k})`` with ``K`` from the tail bound at 1e-14."""
    if g.measure.is_gaussian:
        raise ValueError("expected an expansion on a Poisson measure")
    a = g.measure.a
    K = poisson_support_bound(a, POISSON_TAIL_TOL, g.degree) if support is None else support
    k = np.arange(K + 1)
    root_nu = charlier_functions(0, a, k)[0]  # same rounding as the constant term below
    weighted = g.weighted_values(k)  # g(k) sqrt(nu_k)
    return math.fsum(np.abs(weighted - root_nu) * root_nu)


def tail_series(f: PoissonDensityInput) -> float:
    """``sqrt(sum_{j>=2} a^j j! gamma_j^2)``."""
    c = f.expansion.normalized_coeffs()[2:]
    return float(math.sqrt(np.dot(c, c)))


def theoretical_bound_poisson(f: PoissonDensityInput, n: int, b_n: float) -> float:
    return n * (b_n + 1.0) ** -2 * tail_series(f)


def run_lsn_experiment(f: PoissonDensityInput, schedule: SequenceSchedule, n_list,
                       d_cap: int = DEFAULT_WICK_CAP, tolerances: Tolerances = Tolerances(),
                       max_workers: int | None = None, mc_samples: int = 0,
                       seed: int | None = None, pmf: FinitePmf | None = None) -> list[ConvergenceRecord]:
    """Same record shape as the Gaussian experiment.

    Monte Carlo columns need the underlying ``pmf`` (the sampler draws from it).
    """
    n_list = list(n_list)
    warnings = tuple(schedule.trend_warnings(n_list, POISSON_RATE))
    if mc_samples and pmf is None:
        raise ValueError("Monte Carlo columns need the input pmf")

    def row(n: int) -> ConvergenceRecord:
        b_n = schedule(n)

        def compute(rec: ConvergenceRecord):
            rec.theoretical_bound = theoretical_bound_poisson(f, n, b_n)
            g = mollified_thinned_sum_density(f, n, b_n, d_cap)
            rec.truncation_mass = g.truncation_mass
            rec.measured_l1 = l1_distance_to_one_poisson(g)
            rec.bound_satisfied = tolerances.within_bound(rec.measured_l1, rec.theoretical_bound)
            if mc_samples:
                from .oracles import monte_carlo_l1_poisson

                mc = monte_carlo_l1_poisson(pmf, f.a, n, b_n, mc_samples, seed)
                rec.mc_estimate, rec.mc_std_error = mc.estimate, mc.std_error

        return guarded_row(n, b_n, warnings, compute)

    return run_rows(n_list, row, max_workers)


def density_from_pmf(p: FinitePmf | Sequence[float], a: float, provenance: str = "pmf") -> PoissonDensityInput:
    """``pmf_to_density`` followed by validation."""
    if not isinstance(p, FinitePmf):
        p = FinitePmf(p)
    return validate_poisson_density(pmf_to_density(p, a), a, provenance=provenance)
