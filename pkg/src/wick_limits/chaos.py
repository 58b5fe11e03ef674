"""Truncated chaos expansions over the monic Hermite or Charlier basis.

An expansion stores the monic coefficients ``gamma_0..gamma_D``. Norms and
point evaluation go through the orthonormal coefficients
``gamma_j * sqrt(w_j)`` (``w_j = j!`` or ``a**j j!``) so that high degrees do
not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .orthobasis import (
    ReferenceMeasure,
    charlier_functions,
    default_quadrature_order,
    gauss_hermite_rule,
    hermite_functions,
    orthonormal_charlier,
    orthonormal_hermite,
    poisson_pmf,
    poisson_support_bound,
)

DEFAULT_WICK_CAP = 64
TRUNCATION_RTOL = 1e-10
POISSON_TAIL_TOL = 1e-14
DENSITY_EPS = 1e-9
VERIFY_RADIUS = 12.0
VERIFY_POINTS = 4001


class TruncationError(ArithmeticError):
    """Raised when truncating a Wick power would drop non-negligible mass."""


class MeasureMismatchError(ValueError):
    pass


class InvalidYoungConfig(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ChaosExpansion:
    """``f = sum_j coeffs[j] * basis_j`` for the basis of ``measure``.

    ``truncation_mass`` is the weighted squared mass ``sum w_j gamma_j**2``
    dropped when this expansion was produced by a truncating operation.
    """

    measure: ReferenceMeasure
    coeffs: np.ndarray
    is_density: bool = False
    truncation_mass: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            raise ValueError("an expansion needs at least the constant coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("expansion coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, measure: ReferenceMeasure, value: float = 1.0) -> "ChaosExpansion":
        return cls(measure, [value], is_density=(value == 1.0))

    @classmethod
    def from_terms(cls, measure: ReferenceMeasure, terms: dict[int, float], degree: int | None = None,
                   is_density: bool = False) -> "ChaosExpansion":
        """Build from ``{degree: coefficient}``, e.g. ``{0: 1, 4: 0.1}``."""
        top = max(terms) if degree is None else degree
        c = np.zeros(top + 1)
        for j, v in terms.items():
            c[j] = v
        return cls(measure, c, is_density=is_density)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def normalized_coeffs(self) -> np.ndarray:
        """Coefficients against the orthonormal basis."""
        return self.coeffs * np.exp(0.5 * self.measure.log_norm_weights(self.degree))

    def padded(self, degree: int) -> np.ndarray:
        out = np.zeros(max(degree, self.degree) + 1)
        out[: self.coeffs.size] = self.coeffs
        return out

    def __call__(self, x):
        """Point values ``f(x)`` (``x`` are integers for the Poisson case)."""
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        if self.measure.is_gaussian:
            vals = _clenshaw_hermite(self.normalized_coeffs(), flat)
        else:
            table = orthonormal_charlier(self.degree, self.measure.a, flat)
            vals = self.normalized_coeffs() @ table
        return float(vals[0]) if x.ndim == 0 else vals.reshape(x.shape)

    def weighted_values(self, x) -> np.ndarray:
        """``f(x) * sqrt(weight(x))``: bounded by the L2 norm, never overflows."""
        flat = np.atleast_1d(np.asarray(x, dtype=float))
        if self.measure.is_gaussian:
            table = hermite_functions(self.degree, flat)
        else:
            table = charlier_functions(self.degree, self.measure.a, flat)
        return self.normalized_coeffs() @ table

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = ChaosExpansion.constant(self.measure, float(other))
        _same_measure(self, other)
        d = max(self.degree, other.degree)
        return ChaosExpansion(self.measure, self.padded(d) - other.padded(d))

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = ChaosExpansion.constant(self.measure, float(other))
        _same_measure(self, other)
        d = max(self.degree, other.degree)
        return ChaosExpansion(self.measure, self.padded(d) + other.padded(d))

    def __repr__(self):
        nz = {j: float(c) for j, c in enumerate(self.coeffs) if c != 0.0}
        return f"ChaosExpansion({self.measure}, degree={self.degree}, nonzero={nz})"


def _clenshaw_hermite(c: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_j c_j h_j(x) / sqrt(j!)`` by Clenshaw's recurrence (no table)."""
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for k in range(c.size - 1, -1, -1):
        b1, b2 = c[k] + x * b1 / math.sqrt(k + 1) - math.sqrt((k + 1) / (k + 2)) * b2, b1
    return b1


def _same_measure(f: ChaosExpansion, g: ChaosExpansion):
    if f.measure != g.measure:
        raise MeasureMismatchError(f"expansions live on different measures: {f.measure} vs {g.measure}")


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def project(values, measure: ReferenceMeasure, degree: int, rule=None) -> ChaosExpansion:
    """Coefficients ``gamma_0..gamma_degree`` of a function given pointwise.

    Gaussian: ``values`` are taken at the nodes of ``rule`` (default: the
    Gauss-Hermite rule with ``len(values)`` nodes) and
    ``gamma_j = E[f h_j] / j!``. Poisson: ``values[k] = f(k)`` for
    ``k = 0..len(values)-1`` with ``f = 0`` beyond, and
    ``gamma_j = sum_k f(k) c_j(k) nu({k}) / (a^j j!)``.
    """
    values = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(values)):
        raise ValueError("projection needs finite function values")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if measure.is_gaussian:
        if rule is None:
            rule = gauss_hermite_rule(values.size)
        if rule.nodes.size != values.size:
            raise ValueError("values must be given at the quadrature nodes")
        table = orthonormal_hermite(degree, rule.nodes)
        normalized = table @ (rule.weights * values)
    else:
        k = np.arange(values.size)
        table = charlier_functions(degree, measure.a, k)
        normalized = table @ (values * np.sqrt(poisson_pmf(measure.a, k)))
    coeffs = normalized * np.exp(-0.5 * measure.log_norm_weights(degree))
    return ChaosExpansion(measure, coeffs)


def project_function(func, measure: ReferenceMeasure, degree: int, order: int | None = None,
                     support: int | None = None) -> ChaosExpansion:
    """Project a callable. ``support`` is the Poisson cut-off ``K``."""
    if measure.is_gaussian:
        rule = gauss_hermite_rule(order or default_quadrature_order(degree))
        return project(func(rule.nodes), measure, degree, rule)
    if support is None:
        support = poisson_support_bound(measure.a, POISSON_TAIL_TOL, degree)
    return project(func(np.arange(support + 1)), measure, degree)


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def second_quantization(lam: float, f: ChaosExpansion) -> ChaosExpansion:
    """``Gamma(lam)``: multiply the degree-j coefficient by ``lam**j``."""
    if not abs(lam) <= 1.0:
        raise ValueError(f"second quantization needs |lambda| <= 1, got {lam!r}")
    powers = lam ** np.arange(f.degree + 1)
    keeps_density = f.is_density and (f.measure.is_gaussian or lam >= 0.0)
    return ChaosExpansion(f.measure, f.coeffs * powers, is_density=keeps_density)


def wick_product(f: ChaosExpansion, g: ChaosExpansion) -> ChaosExpansion:
    """Cauchy product of the coefficient sequences; degree ``D_f + D_g``."""
    _same_measure(f, g)
    return ChaosExpansion(f.measure, np.convolve(f.coeffs, g.coeffs))


def wick_chain(fs: Sequence[ChaosExpansion]) -> ChaosExpansion:
    out = fs[0]
    for g in fs[1:]:
        out = wick_product(out, g)
    return out


def wick_power(f: ChaosExpansion, n: int, d_cap: int = DEFAULT_WICK_CAP,
               rtol: float = TRUNCATION_RTOL) -> ChaosExpansion:
    """``f`` Wick-multiplied with itself ``n`` times, truncated at ``d_cap``.

    The product is built one factor at a time; every step drops the
    coefficients above ``d_cap`` and adds their weighted squared mass to
    ``truncation_mass`` of the result. Raises ``TruncationError`` when the
    square root of that mass exceeds ``rtol`` times the retained L2 norm.
    """
    if n < 0:
        raise ValueError("Wick power needs n >= 0")
    if d_cap < 0:
        raise ValueError("d_cap must be nonnegative")
    measure = f.measure
    result = np.ones(1)
    if n == 0:
        return ChaosExpansion(measure, result, is_density=True)
    half_logw = 0.5 * measure.log_norm_weights(d_cap + f.degree)
    dropped = 0.0
    for _ in range(n):
        full = np.convolve(result, f.coeffs)
        if full.size > d_cap + 1:
            tail = full[d_cap + 1:] * np.exp(half_logw[d_cap + 1: full.size])
            dropped += float(np.dot(tail, tail))
            full = full[: d_cap + 1]
        result = full
    out = ChaosExpansion(measure, result, truncation_mass=dropped)
    if dropped > 0.0 and math.sqrt(dropped) > rtol * l2_norm(out):
        raise TruncationError(
            f"Wick power n={n} truncated at degree {d_cap} drops weighted mass {dropped:.3e}"
        )
    return out


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def l2_norm(f: ChaosExpansion) -> float:
    """``sqrt(sum_j w_j gamma_j**2)`` (Parseval for the unnormalized basis)."""
    c = f.normalized_coeffs()
    return float(math.sqrt(np.dot(c, c)))


def gaussian_rule_for(f: ChaosExpansion, order: int | None = None):
    return gauss_hermite_rule(order or default_quadrature_order(f.degree))


def poisson_support_for(f: ChaosExpansion, p: float = 1.0, tail_tol: float = POISSON_TAIL_TOL) -> int:
    d = max(f.degree, math.ceil(p * f.degree / 2))
    return poisson_support_bound(f.measure.a, tail_tol, d)


def gaussian_cdf_integral(f: ChaosExpansion, t) -> np.ndarray:
    """``F(t) = integral_{-inf}^t f dmu`` in closed form.

    Uses ``d/dx [h_{j-1} phi] = -h_j phi``, so each ``j >= 1`` term equals
    ``-gamma_j h_{j-1}(t) phi(t)``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = f.coeffs[0] * ndtr(t)
    if f.degree >= 1:
        c = f.normalized_coeffs()[1:] / np.sqrt(np.arange(1, f.degree + 1))
        table = hermite_functions(f.degree - 1, t)  # h_{j-1}/sqrt((j-1)!) * sqrt(phi)
        sqrt_phi = np.exp(-0.25 * t * t - 0.25 * math.log(2 * math.pi))
        out = out - (c @ table) * sqrt_phi
    return out


def sign_changes(f: ChaosExpansion, radius: float = VERIFY_RADIUS, points: int = 8_001) -> np.ndarray:
    """Real roots of ``f`` in ``[-radius, radius]`` where ``f`` changes sign,
    plus any grid node where ``f`` vanishes exactly."""
    x = np.linspace(-radius, radius, points)
    v = f(x)
    exact = x[v == 0.0]  # roots sitting on grid nodes; extra roots do no harm downstream
    idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]
    if idx.size == 0:
        return exact
    lo, hi = x[idx], x[idx + 1]
    flo = v[idx]
    for _ in range(48):  # grid step / 2**48 is below double resolution
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return np.sort(np.concatenate((exact, 0.5 * (lo + hi))))


def _piecewise_integral(g: ChaosExpansion, f: ChaosExpansion, radius: float) -> float:
    """``integral sign(f) g dmu`` with the line split at the sign changes of ``f``."""
    roots = sign_changes(f, radius)
    F = np.empty(roots.size + 2)
    F[0], F[-1] = 0.0, g.coeffs[0]
    if roots.size:
        F[1:-1] = gaussian_cdf_integral(g, roots)
    pieces = np.diff(F)
    # sign of f on each piece, sampled inside it
    if roots.size:
        probe = np.concatenate(([roots[0] - 1.0], 0.5 * (roots[:-1] + roots[1:]), [roots[-1] + 1.0]))
    else:
        probe = np.zeros(1)
    return float(np.dot(np.sign(f(probe)), pieces))


def gaussian_l1_norm(f: ChaosExpansion, radius: float = VERIFY_RADIUS) -> float:
    """``integral |f| dmu`` by splitting the line at the sign changes of ``f``.

    Each piece is integrated exactly; only sign changes beyond ``radius``
    (where mu has mass below 1e-32) are ignored.
    """
    return _piecewise_integral(f, f, radius)


def ordinary_power(f: ChaosExpansion, p: int) -> ChaosExpansion:
    """Hermite expansion of the pointwise power ``f**p`` (exact up to rounding)."""
    if not f.measure.is_gaussian:
        raise ValueError("pointwise powers are only expanded for the Gaussian measure")
    degree = p * f.degree
    rule = gauss_hermite_rule(degree + 1)
    return project(f(rule.nodes) ** p, f.measure, degree, rule)


def lp_norm(f: ChaosExpansion, p: float, order: int | None = None, support: int | None = None) -> float:
    """``(integral |f|^p d(measure))^(1/p)``.

    Gaussian integrals are exact for integer ``p`` (sign-split for odd
    ``p``) and use the Gauss-Hermite rule otherwise; Poisson sums run over
    ``k = 0..support``.
    """
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if math.isinf(p):
        raise ValueError("the sup-norm is not supported")
    if f.measure.is_gaussian:
        if p == 1:
            return gaussian_l1_norm(f)
        if float(p).is_integer() and p * f.degree <= 200:
            # |f|^p is a polynomial (even p) or sign(f) f^p (odd p): no kinks left
            g = ordinary_power(f, int(p))
            total = g.coeffs[0] if p % 2 == 0 else _piecewise_integral(g, f, VERIFY_RADIUS)
            return max(total, 0.0) ** (1.0 / p)
        rule = gaussian_rule_for(f, order)
        vals = np.abs(f(rule.nodes))
        return rule.integrate(vals ** p) ** (1.0 / p)
    K = poisson_support_for(f, p) if support is None else support
    k = np.arange(K + 1)
    weighted = np.abs(f.weighted_values(k))  # |f| sqrt(nu)
    if p == 2:
        total = float(np.dot(weighted, weighted))
    else:
        log_nu = np.log(poisson_pmf(f.measure.a, k))
        with np.errstate(divide="ignore"):
            terms = np.where(weighted > 0, np.exp(p * np.log(weighted) + (1 - 0.5 * p) * log_nu), 0.0)
        total = float(math.fsum(terms))
    return total ** (1.0 / p)


def lp_norm_trapezoid(f: ChaosExpansion, p: float, radius: float = VERIFY_RADIUS,
                      points: int = 100_000) -> float:
    """Gaussian-only cross-check: trapezoid rule on ``[-radius, radius]``."""
    if not f.measure.is_gaussian:
        raise ValueError("trapezoid rule applies to the Gaussian measure")
    x = np.linspace(-radius, radius, points)
    phi = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    return float(np.trapezoid(np.abs(f(x)) ** p * phi, x)) ** (1.0 / p)


def verification_points(measure: ReferenceMeasure, degree: int = 0) -> np.ndarray:
    if measure.is_gaussian:
        return np.linspace(-VERIFY_RADIUS, VERIFY_RADIUS, VERIFY_POINTS)
    return np.arange(poisson_support_bound(measure.a, POISSON_TAIL_TOL, degree) + 1)


def density_defects(f: ChaosExpansion, eps: float = DENSITY_EPS, mass_tol: float = 1e-10) -> list[str]:
    """Reasons ``f`` fails to be a density w.r.t. its measure (empty if fine)."""
    problems = []
    if abs(f.coeffs[0] - 1.0) > mass_tol:
        problems.append(f"gamma_0 = {f.coeffs[0]!r} != 1")
    pts = verification_points(f.measure, f.degree)
    low = float(np.min(f(pts)))
    if low < -eps:
        problems.append(f"negative value {low:.3e} on the verification grid")
    return problems


def as_density(f: ChaosExpansion) -> ChaosExpansion:
    """Flag ``f`` as a density after checking mass and nonnegativity."""
    problems = density_defects(f)
    if problems:
        raise ValueError("not a density: " + "; ".join(problems))
    return ChaosExpansion(f.measure, f.coeffs, is_density=True, truncation_mass=f.truncation_mass)


# ---------------------------------------------------------------------------
# Young-type inequality for Wick products
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class YoungConfig:
    alphas: tuple[float, ...]
    exponents: tuple[float, ...]
    r: float
    tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "exponents", tuple(float(p) for p in self.exponents))

    def violations(self, measure: ReferenceMeasure) -> list[str]:
        out = []
        if len(self.alphas) != len(self.exponents) or not self.alphas:
            out.append("alphas and exponents must be non-empty and of equal length")
            return out
        if any(not (1.0 <= p <= math.inf) for p in self.exponents + (self.r,)):
            out.append("exponents must lie in [1, inf]")
        if measure.is_gaussian:
            if any(abs(a) > 1 for a in self.alphas):
                out.append("alphas must lie in [-1, 1]")
            s = sum(a * a for a in self.alphas)
            if abs(s - 1.0) > self.tol:
                out.append(f"sum of squared alphas is {s!r}, expected 1")
            lhs = sum(_ratio(a * a, p) for a, p in zip(self.alphas, self.exponents))
            rhs = _ratio(1.0, self.r)
            if not _extended_close(lhs, rhs, self.tol):
                out.append(f"exponent balance fails: sum alpha_i^2/(p_i-1) = {lhs!r} vs 1/(r-1) = {rhs!r}")
        else:
            if any(not 0.0 <= a <= 1.0 for a in self.alphas):
                out.append("alphas must lie in [0, 1]")
            s = sum(self.alphas)
            if abs(s - 1.0) > self.tol:
                out.append(f"alphas sum to {s!r}, expected 1")
            if any(p != self.r for p in self.exponents):
                out.append("the Poisson inequality uses one common exponent p = r")
        return out


def _ratio(num: float, p: float) -> float:
    if math.isinf(p):
        return 0.0
    if p == 1.0:
        return math.inf if num > 0 else 0.0
    return num / (p - 1.0)


def _extended_close(x: float, y: float, tol: float) -> bool:
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


@dataclass(frozen=True)
class YoungResult:
    lhs: float
    rhs: float
    holds: bool


def young_check(fs: Sequence[ChaosExpansion], cfg: YoungConfig, tol: float = 1e-9) -> YoungResult:
    """Compare ``||Gamma(a_1) f_1 <> ... <> Gamma(a_n) f_n||_r`` with ``prod ||f_i||_{p_i}``."""
    if len(fs) != len(cfg.alphas):
        raise InvalidYoungConfig("need one alpha per function")
    measure = fs[0].measure
    problems = cfg.violations(measure)
    if problems:
        raise InvalidYoungConfig("; ".join(problems))
    if any(math.isinf(p) for p in cfg.exponents + (cfg.r,)):
        raise InvalidYoungConfig("p = inf is accepted by YoungConfig but cannot be evaluated")
    product = wick_chain([second_quantization(a, f) for a, f in zip(cfg.alphas, fs)])
    lhs = lp_norm(product, cfg.r)
    rhs = math.prod(lp_norm(f, p) for f, p in zip(fs, cfg.exponents))
    return YoungResult(lhs, rhs, lhs <= rhs + tol)
