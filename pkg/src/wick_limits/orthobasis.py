"""Monic Hermite and Charlier polynomials and the integration rules for their
reference measures.

Two evaluation paths live here:

* ``hermite_eval`` / ``charlier_eval`` return the *monic* polynomials from the
  textbook three-term recurrences. Large degrees overflow to ``inf``.
* ``hermite_functions`` / ``charlier_functions`` return the orthonormal
  polynomials multiplied by the square root of the reference weight. These are
  bounded by 1 in absolute value and are what the chaos module uses to
  evaluate expansions far out in the tails without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

GAUSSIAN = "gaussian"
POISSON = "poisson"

POISSON_HARD_CAP = 10_000
_EXPLICIT_TAIL_LIMIT = 1_000


@dataclass(frozen=True)
class ReferenceMeasure:
    """Standard Gaussian measure, or Poisson law with intensity ``a``."""

    kind: str
    a: float | None = None

    def __post_init__(self):
        if self.kind == GAUSSIAN:
            if self.a is not None:
                raise ValueError("a Gaussian reference measure carries no intensity")
        elif self.kind == POISSON:
            if self.a is None or not (self.a > 0 and math.isfinite(self.a)):
                raise ValueError(f"Poisson intensity must be positive and finite, got {self.a!r}")
            object.__setattr__(self, "a", float(self.a))
        else:
            raise ValueError(f"unknown measure kind {self.kind!r}")

    @classmethod
    def gaussian(cls) -> "ReferenceMeasure":
        return cls(GAUSSIAN)

    @classmethod
    def poisson(cls, a: float) -> "ReferenceMeasure":
        return cls(POISSON, a)

    @property
    def is_gaussian(self) -> bool:
        return self.kind == GAUSSIAN

    def norm_weights(self, degree: int) -> np.ndarray:
        """Squared norms of the monic basis: ``j!`` or ``a**j * j!``."""
        return np.exp(self.log_norm_weights(degree))

    def log_norm_weights(self, degree: int) -> np.ndarray:
        j = np.arange(degree + 1)
        logw = np.array([math.lgamma(k + 1) for k in j])
        if self.kind == POISSON:
            logw = logw + j * math.log(self.a)
        return logw

    def __str__(self):
        return "N(0,1)" if self.is_gaussian else f"Poisson({self.a:g})"


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for the standard Gaussian measure (weights sum to one)."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    order: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def hermite_eval(n: int, x):
    """Monic (probabilists') Hermite polynomial ``h_n(x)``.

    Uses ``h_{n+1} = x h_n - n h_{n-1}``. Accepts scalars or arrays; for large
    ``n * |x|`` the result overflows to +-inf rather than raising.
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x.copy()
    if n == 0:
        return _unwrap(prev)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n):
            prev, cur = cur, x * cur - k * prev
        # once a value overflows the x^n term dominates; avoid inf - inf = nan
        cur = np.where(np.isfinite(cur), cur, np.sign(x) ** n * np.inf)
    return _unwrap(cur)


def charlier_eval(n: int, a: float, k):
    """Monic Charlier polynomial ``c_n^a(k)``.

    Uses ``c_{n+1} = (k - n - a) c_n - n a c_{n-1}`` with ``c_1 = k - a``.
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if not a > 0:
        raise ValueError("intensity must be positive")
    k = np.asarray(k, dtype=float)
    prev, cur = np.ones_like(k), k - a
    if n == 0:
        return _unwrap(prev)
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, n):
            prev, cur = cur, (k - m - a) * cur - m * a * prev
    return _unwrap(cur)


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def hermite_functions(degree: int, x) -> np.ndarray:
    """Rows ``j = 0..degree`` of ``h_j(x) / sqrt(j!) * sqrt(phi(x))``.

    ``phi`` is the standard normal Lebesgue density. Each entry lies in
    [-1, 1] up to rounding, so the table is safe for any ``x``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((degree + 1, x.size))
    out[0] = np.exp(-0.25 * x * x - 0.25 * math.log(2 * math.pi))
    if degree >= 1:
        out[1] = x * out[0]
    for n in range(1, degree):
        out[n + 1] = (x * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def orthonormal_hermite(degree: int, x) -> np.ndarray:
    """Rows ``j = 0..degree`` of ``h_j(x) / sqrt(j!)`` (no weight factor)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((degree + 1, x.size))
    out[0] = 1.0
    if degree >= 1:
        out[1] = x
    for n in range(1, degree):
        out[n + 1] = (x * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


@lru_cache(maxsize=256)
def _charlier_log_table(degree: int, a: float, kmax: int):
    """``log|phi_j(k)|`` and signs for the orthonormal Charlier polynomials.

    Forward recurrence in the degree is only stable while ``j <= k``: for
    ``j > k`` the values form the minimal solution. Those entries come from
    self-duality instead, ``phi_j(k) = (-1)^(j-k) phi_k(j) sqrt(nu_j / nu_k)``.
    """
    n_pts = max(kmax, degree) + 1
    x = np.arange(n_pts, dtype=float)
    fwd = np.empty((degree + 1, n_pts))
    fwd[0] = 1.0
    if degree >= 1:
        fwd[1] = (x - a) / math.sqrt(a)
    for n in range(1, degree):
        fwd[n + 1] = ((x - n - a) * fwd[n] - math.sqrt(n * a) * fwd[n - 1]) / math.sqrt((n + 1) * a)
    log_nu = x * math.log(a) - a - np.array([math.lgamma(k + 1) for k in x])
    j = np.arange(degree + 1)[:, None]
    k = np.arange(kmax + 1)[None, :]
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(fwd[:, : kmax + 1]))
    sign = np.sign(fwd[:, : kmax + 1])
    upper = j > k
    if np.any(upper):
        jj, kk = np.nonzero(upper)
        dual = fwd[kk, jj]
        with np.errstate(divide="ignore"):
            log_abs[jj, kk] = np.log(np.abs(dual)) + 0.5 * (log_nu[jj] - log_nu[kk])
        sign[jj, kk] = np.sign(dual) * np.where((jj - kk) % 2, -1.0, 1.0)
    log_nu = log_nu[: kmax + 1]
    for arr in (log_abs, sign, log_nu):
        arr.setflags(write=False)  # shared through the cache
    return log_abs, sign, log_nu


def _integer_points(k) -> np.ndarray:
    k = np.atleast_1d(np.asarray(k))
    ki = np.rint(k).astype(int)
    if np.any(ki < 0) or np.any(np.abs(k - ki) > 0):
        raise ValueError("Charlier tables are defined on nonnegative integers")
    return ki


def charlier_functions(degree: int, a: float, k) -> np.ndarray:
    """Rows ``j = 0..degree`` of ``c_j^a(k) / sqrt(a^j j!) * sqrt(nu({k}))``.

    ``k`` must be nonnegative integers. The weighted table is orthogonal, so
    every entry lies in [-1, 1].
    """
    ki = _integer_points(k)
    log_abs, sign, log_nu = _charlier_log_table(degree, float(a), int(ki.max()))
    return (sign * np.exp(log_abs + 0.5 * log_nu))[:, ki]


def orthonormal_charlier(degree: int, a: float, k) -> np.ndarray:
    """Rows ``j = 0..degree`` of ``c_j^a(k) / sqrt(a^j j!)`` at integer ``k``."""
    ki = _integer_points(k)
    log_abs, sign, _ = _charlier_log_table(degree, float(a), int(ki.max()))
    return (sign * np.exp(log_abs))[:, ki]


def poisson_pmf(a: float, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    lg = np.vectorize(math.lgamma, otypes=[float])(k + 1) if k.ndim else math.lgamma(float(k) + 1)
    return np.exp(k * math.log(a) - a - lg)


def _hermite_with_derivative(n: int, x: np.ndarray):
    # orthonormal values: p_n and p_{n-1}; d/dx p_n = sqrt(n) p_{n-1}
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for k in range(n):
        prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
    return cur, math.sqrt(n) * prev


@lru_cache(maxsize=None)
def _hermite_roots(order: int) -> np.ndarray:
    if order == 1:
        return np.zeros(1)
    inner = _hermite_roots(order - 1)
    # Roots of h_order interlace with those of h_{order-1}; the outer brackets
    # are closed by the bound |x| <= 2 sqrt(order).
    edge = 2.0 * math.sqrt(order) + 1.0
    lo = np.concatenate(([-edge], inner))
    hi = np.concatenate((inner, [edge]))
    flo, _ = _hermite_with_derivative(order, lo)
    x = 0.5 * (lo + hi)
    for _ in range(100):
        fx, dfx = _hermite_with_derivative(order, x)
        same = np.sign(fx) == np.sign(flo)
        lo = np.where(same, x, lo)
        flo = np.where(same, fx, flo)
        hi = np.where(same, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - fx / dfx
        inside = (newton >= lo) & (newton <= hi) & np.isfinite(newton)
        x_new = np.where(inside, newton, 0.5 * (lo + hi))
        step = np.max(np.abs(x_new - x))
        x = x_new
        if step <= 1e-14 * edge:
            # one extra Newton step polishes to full precision
            fx, dfx = _hermite_with_derivative(order, x)
            x = x - fx / dfx
            break
    else:
        raise ArithmeticError(f"Gauss-Hermite root finding did not converge for degree {order}")
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry
    x.setflags(write=False)
    return x


@lru_cache(maxsize=64)
def gauss_hermite_rule(order: int) -> QuadratureRule:
    """Gauss rule of the given order for the standard Gaussian probability measure.

    Exact for polynomials of degree ``<= 2*order - 1``.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    nodes = _hermite_roots(order)
    # Christoffel weights: 1 / sum_k p_k(x)^2 over orthonormal p_0..p_{order-1}
    table = orthonormal_hermite(order - 1, nodes)
    weights = 1.0 / np.sum(table * table, axis=0)
    weights = 0.5 * (weights + weights[::-1])
    weights = weights / weights.sum()
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights, order=order)


def default_quadrature_order(degree: int) -> int:
    return max(40, 4 * degree + 8)


@lru_cache(maxsize=1024)
def poisson_support_bound(a: float, tail_tol: float, max_degree: int, hard_cap: int = POISSON_HARD_CAP) -> int:
    """Smallest ``K`` with ``sum_{k>K} (1+k)^(2*max_degree) nu({k}) < tail_tol``.

    Terms are summed in log space. Past the last computed term the tail is
    bounded by a geometric series, valid because the term ratios
    ``(1 + 1/(k+1))^(2d) * a/(k+1)`` decrease in ``k``.
    """
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must lie in (0, 1)")
    if not a > 0:
        raise ValueError("intensity must be positive")
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")

    two_d = 2 * max_degree
    log_a = math.log(a)
    stop = math.log(tail_tol) - 40.0
    logs = []
    k = 0
    while True:
        logs.append(two_d * math.log1p(k) + k * log_a - a - math.lgamma(k + 1))
        if k > 0 and logs[-1] < stop and logs[-1] - logs[-2] < math.log(0.5):
            break
        k += 1
        if k > hard_cap + _EXPLICIT_TAIL_LIMIT:
            raise ValueError(
                f"Poisson truncation for tail tolerance {tail_tol:g} exceeds the hard cap K={hard_cap}"
            )
    logs = np.array(logs)
    log_ratio = logs[-1] - logs[-2]
    log_remainder = logs[-1] + log_ratio - math.log1p(-math.exp(log_ratio))
    # log_after[K] = log sum_{k>K} terms[k], accumulated from the far end
    shifted = np.append(logs[1:], log_remainder)
    log_after = np.logaddexp.accumulate(shifted[::-1])[::-1]
    after_ok = log_after < math.log(tail_tol)
    K = int(np.argmax(after_ok))
    if K > hard_cap:
        raise ValueError(f"Poisson truncation for tail tolerance {tail_tol:g} exceeds the hard cap K={hard_cap}")
    return K
