"""Brute-force checks that share no code path with the chaos algebra.

* exact pmf convolution and thinning (optionally in rational arithmetic),
* direct grid convolution of Lebesgue densities,
* Monte Carlo sampling of the mollified sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .chaos import ChaosExpansion
from .gaussian_llt import GaussianDensityInput
from .orthobasis import poisson_pmf
from .poisson_lsn import FinitePmf, thin

GRID_RADIUS = 12.0
GRID_INTERVALS = 2 ** 14
MASS_DEFICIT_LIMIT = 1e-4
MIN_MC_SAMPLES = 1_000
BOOTSTRAP_ROUNDS = 40
# golden-ratio constant; any run without an explicit seed uses it
DEFAULT_SEED = 0x9E3779B97F4A7C15


class GridTooCoarseError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# discrete laws
# ---------------------------------------------------------------------------

def convolve_pmfs(p: FinitePmf, q: FinitePmf) -> FinitePmf:
    """Law of the independent sum: ``(p*q)_k = sum_i p_i q_{k-i}``."""
    return FinitePmf(np.convolve(p.probs, q.probs))


def exact_thinned_sum_law(pmfs: Sequence[FinitePmf], alphas: Sequence[float]) -> FinitePmf:
    """Law of ``T_{a_1} X_1 + ... + T_{a_n} X_n`` for independent ``X_i ~ pmfs[i]``."""
    if len(pmfs) != len(alphas) or not pmfs:
        raise ValueError("need one alpha per pmf")
    if abs(math.fsum(alphas) - 1.0) > 1e-12:
        raise ValueError(f"thinning parameters must sum to 1, got {math.fsum(alphas)!r}")
    law = thin(alphas[0], pmfs[0])
    for p, alpha in zip(pmfs[1:], alphas[1:]):
        law = convolve_pmfs(law, thin(alpha, p))
    return law


def thin_rational(alpha: Fraction, probs: Sequence[Fraction]) -> list[Fraction]:
    """Binomial thinning in exact rational arithmetic."""
    alpha = Fraction(alpha)
    K = len(probs) - 1
    return [
        sum((math.comb(m, k) * alpha ** k * (1 - alpha) ** (m - k) * Fraction(probs[m])
             for m in range(k, K + 1)), Fraction(0))
        for k in range(K + 1)
    ]


def total_variation(p: FinitePmf | np.ndarray, q: FinitePmf | np.ndarray) -> float:
    p = p.probs if isinstance(p, FinitePmf) else np.asarray(p, dtype=float)
    q = q.probs if isinstance(q, FinitePmf) else np.asarray(q, dtype=float)
    size = max(p.size, q.size)
    pp = np.zeros(size)
    qq = np.zeros(size)
    pp[: p.size] = p
    qq[: q.size] = q
    return 0.5 * math.fsum(np.abs(pp - qq))


def density_to_pmf(g: ChaosExpansion, K: int) -> np.ndarray:
    """``k -> g(k) nu({k})`` for ``k = 0..K`` (the law a Poisson density describes)."""
    k = np.arange(K + 1)
    return g.weighted_values(k) * np.sqrt(poisson_pmf(g.measure.a, k))


# ---------------------------------------------------------------------------
# continuous laws on a grid
# ---------------------------------------------------------------------------

def _phi(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Lebesgue density sampled on a uniform grid."""

    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    step: float

    def mass(self) -> float:
        return float(np.trapezoid(self.values, dx=self.step))

    def mu_density(self) -> np.ndarray:
        """Pointwise density with respect to N(0, 1)."""
        return self.values / _phi(self.grid)

    def l1_mu_distance(self, g: ChaosExpansion) -> float:
        """``||mu_density - g||_{L1(mu)}``, computed as ``integral |values - g phi| dx``."""
        return float(np.trapezoid(np.abs(self.values - g(self.grid) * _phi(self.grid)), dx=self.step))

    def l1_mu_distance_to_one(self) -> float:
        return float(np.trapezoid(np.abs(self.values - _phi(self.grid)), dx=self.step))


def _scaled_lebesgue_density(f: ChaosExpansion, alpha: float, x: np.ndarray) -> np.ndarray:
    # density of alpha * X where X has Lebesgue density f * phi
    y = x / alpha
    return np.maximum(f(y), 0.0) * _phi(y) / abs(alpha)


def grid_convolution_density(f1: GaussianDensityInput, f2: GaussianDensityInput, alpha1: float,
                             alpha2: float, radius: float = GRID_RADIUS,
                             intervals: int = GRID_INTERVALS) -> GridDensity:
    """Lebesgue density of ``alpha1 X1 + alpha2 X2`` by direct discrete convolution.

    ``X_i`` has mu-density ``f_i``; the two scaled densities are sampled on
    ``intervals + 1`` points of ``[-radius, radius]`` and convolved with
    ``np.convolve`` (a direct sum, no transforms).
    """
    if abs(alpha1 * alpha1 + alpha2 * alpha2 - 1.0) > 1e-12:
        raise ValueError("alpha1^2 + alpha2^2 must equal 1")
    x = np.linspace(-radius, radius, intervals + 1)
    step = 2.0 * radius / intervals
    parts = [(f, a) for f, a in ((f1, alpha1), (f2, alpha2)) if a != 0.0]
    if len(parts) == 1:
        f, a = parts[0]
        values = _scaled_lebesgue_density(f.expansion, a, x)
    else:
        g1 = _scaled_lebesgue_density(f1.expansion, alpha1, x)
        g2 = _scaled_lebesgue_density(f2.expansion, alpha2, x)
        full = np.convolve(g1, g2) * step  # nodes -2R .. 2R
        centre = intervals // 2
        values = full[centre: centre + intervals + 1]
    out = GridDensity(x, values, step)
    deficit = abs(1.0 - out.mass())
    if deficit > MASS_DEFICIT_LIMIT:
        raise GridTooCoarseError(f"grid density has mass deficit {deficit:.3e}")
    return out


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    std_error: float
    samples: int
    seed: int
    bias_floor: float = 0.0


def resolve_seed(seed: int | None) -> int:
    return DEFAULT_SEED if seed is None else int(seed)


def _check_samples(sample_count: int):
    if sample_count < MIN_MC_SAMPLES:
        raise ValueError(f"Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {sample_count}")


def gaussian_sampler(f: ChaosExpansion, radius: float = GRID_RADIUS, points: int = 2 ** 16):
    """Inverse-CDF sampler for the law with mu-density ``f``."""
    x = np.linspace(-radius, radius, points)
    dens = np.maximum(f(x), 0.0) * _phi(x)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x))))
    cdf /= cdf[-1]

    def sample(rng: np.random.Generator, size) -> np.ndarray:
        return np.interp(rng.random(size), cdf, x)

    return sample


def silverman_bandwidth(samples: np.ndarray) -> float:
    sd = float(np.std(samples, ddof=1))
    q75, q25 = np.percentile(samples, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    return 0.9 * spread * samples.size ** -0.2


def _kde_l1_to_phi(counts: np.ndarray, edges: np.ndarray, bandwidth: float, total: float) -> float:
    width = edges[1] - edges[0]
    centres = 0.5 * (edges[1:] + edges[:-1])
    half = int(math.ceil(6 * bandwidth / width))
    offsets = np.arange(-half, half + 1) * width
    kernel = np.exp(-0.5 * (offsets / bandwidth) ** 2) / (bandwidth * math.sqrt(2 * math.pi))
    kde = np.convolve(counts / total, kernel, mode="same")  # (1/N) sum K_h(x - X_i)
    return float(np.trapezoid(np.abs(kde - _phi(centres)), dx=width))


def monte_carlo_l1_gaussian(f: GaussianDensityInput, n: int, b_n: float, sample_count: int,
                            seed: int | None = None, chunk: int = 20_000) -> MonteCarloResult:
    """Sample ``(X_1 + ... + X_n + sqrt(b_n) Z) / sqrt(n + b_n)``, estimate its
    mu-density with a Gaussian KDE (Silverman bandwidth) and report the
    L1(mu) distance to 1 with a Poisson-bootstrap standard error.

    ``bias_floor`` is the L1 distance the kernel smoothing alone produces
    when the sampled law is exactly N(0, 1).
    """
    _check_samples(sample_count)
    seed = resolve_seed(seed)
    rng = np.random.default_rng(seed)
    draw = gaussian_sampler(f.expansion)
    out = np.empty(sample_count)
    scale = 1.0 / math.sqrt(n + b_n)
    for start in range(0, sample_count, chunk):
        m = min(chunk, sample_count - start)
        total = draw(rng, (m, n)).sum(axis=1) + math.sqrt(b_n) * rng.standard_normal(m)
        out[start: start + m] = total * scale
    h = silverman_bandwidth(out)
    edges = np.linspace(-GRID_RADIUS, GRID_RADIUS, 4801)
    counts, _ = np.histogram(out, bins=edges)
    width = edges[1] - edges[0]
    estimate = _kde_l1_to_phi(counts, edges, h, sample_count)
    boot = []
    for _ in range(BOOTSTRAP_ROUNDS):
        w = rng.poisson(1.0, sample_count)
        bc, _ = np.histogram(out, bins=edges, weights=w)
        boot.append(_kde_l1_to_phi(bc, edges, h, w.sum()))
    centres = 0.5 * (edges[1:] + edges[:-1])
    smoothed = _phi(centres / math.sqrt(1 + h * h)) / math.sqrt(1 + h * h)
    floor = float(np.trapezoid(np.abs(smoothed - _phi(centres)), dx=width))
    return MonteCarloResult(estimate, float(np.std(boot, ddof=1)), sample_count, seed, floor)


def monte_carlo_l1_poisson(p: FinitePmf, a: float, n: int, b_n: float, sample_count: int,
                           seed: int | None = None) -> MonteCarloResult:
    """Sample ``T_{1/(n+b_n)}(X_1 + ... + X_n) + T_{b_n/(n+b_n)} U`` and report
    ``sum_k |p_hat(k) - nu(k)|`` (the L1(nu) distance of the empirical
    density to 1) with a bootstrap standard error.

    Thinning each ``X_i`` by the same parameter and summing equals thinning
    the sum, so the thinned part is one binomial draw per sample; the
    thinned Poisson ``U`` is Poisson with intensity ``a b_n/(n+b_n)``.
    """
    _check_samples(sample_count)
    seed = resolve_seed(seed)
    rng = np.random.default_rng(seed)
    lam = 1.0 / (n + b_n)
    counts = rng.multinomial(n, p.probs, size=sample_count)
    sums = counts @ np.arange(p.probs.size)
    thinned = rng.binomial(sums, lam)
    y = thinned + rng.poisson(a * b_n * lam, sample_count)

    def l1(hist: np.ndarray, total: float) -> float:
        k = np.arange(hist.size)
        nu = poisson_pmf(a, k)
        return math.fsum(np.abs(hist / total - nu)) + max(0.0, 1.0 - math.fsum(nu))

    hist = np.bincount(y).astype(float)
    estimate = l1(hist, sample_count)
    boot = [l1(rng.multinomial(sample_count, hist / sample_count).astype(float), sample_count)
            for _ in range(BOOTSTRAP_ROUNDS)]
    return MonteCarloResult(estimate, float(np.std(boot, ddof=1)), sample_count, seed)


def monte_carlo_l1(source, n: int, b_n: float, sample_count: int, seed: int | None = None,
                   a: float | None = None) -> MonteCarloResult:
    """Dispatch on the input: a Gaussian density, or a pmf with intensity ``a``."""
    if isinstance(source, GaussianDensityInput):
        return monte_carlo_l1_gaussian(source, n, b_n, sample_count, seed)
    if isinstance(source, FinitePmf):
        if a is None:
            raise ValueError("a pmf input needs the Poisson intensity a")
        return monte_carlo_l1_poisson(source, a, n, b_n, sample_count, seed)
    raise TypeError(f"cannot sample from {type(source).__name__}")
