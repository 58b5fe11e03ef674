"""Pieces shared by the Gaussian and Poisson convergence experiments."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

DEFAULT_BETA = 0.8
DEFAULT_N_LIST = (4, 16, 64, 256, 1024)

# lower growth exponent of b_n per mode: b_n / n**e must diverge
GAUSSIAN_RATE = 2.0 / 3.0
POISSON_RATE = 0.5


def ceil_power(n: int, beta: float) -> int:
    """``ceil(n**beta)``, snapping float noise (``1024**0.8`` is 256, not 256.00000000000006)."""
    x = n ** beta
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, x):
        return int(nearest)
    return math.ceil(x)


@dataclass(frozen=True)
class SequenceSchedule:
    """The mollification sequence ``n -> b_n``."""

    rule: Callable[[int], float]
    label: str
    beta: float | None = None

    @classmethod
    def power(cls, beta: float = DEFAULT_BETA) -> "SequenceSchedule":
        return cls(lambda n: ceil_power(n, beta), f"ceil(n^{beta:g})", beta)

    @classmethod
    def constant(cls, value: float = 0.0) -> "SequenceSchedule":
        return cls(lambda n: value, f"{value:g}")

    @classmethod
    def linear(cls, slope: float = 1.0) -> "SequenceSchedule":
        return cls(lambda n: slope * n, f"{slope:g}*n")

    def __call__(self, n: int) -> float:
        b = self.rule(n)
        if b < 0:
            raise ValueError(f"b_n must be nonnegative, got {b!r} at n={n}")
        return b

    def trend_warnings(self, n_list: Iterable[int], rate: float) -> list[str]:
        """Check the two limits on a finite list by comparing its endpoints.

        ``b_n / n`` must shrink and ``b_n / n**rate`` must grow between the
        smallest and largest ``n``.
        """
        ns = sorted(n_list)
        if len(ns) < 2:
            return []
        lo, hi = ns[0], ns[-1]
        out = []
        if self(hi) > 0 and not self(hi) / hi < self(lo) / lo:
            out.append("b_n/n does not decrease towards 0")
        if not self(hi) / hi ** rate > self(lo) / lo ** rate:
            out.append(f"b_n/n^{rate:.4g} does not grow without bound")
        return out


@dataclass(frozen=True)
class Tolerances:
    """``bound_satisfied`` means ``measured <= bound * (1 + bound_rtol) + bound_atol``."""

    bound_rtol: float = 1e-6
    bound_atol: float = 1e-12
    crosscheck_rtol: float = 1e-6
    crosscheck_atol: float = 1e-9

    def within_bound(self, measured: float, bound: float) -> bool:
        return measured <= bound * (1.0 + self.bound_rtol) + self.bound_atol


@dataclass
class ConvergenceRecord:
    n: int
    b_n: float
    measured_l1: float = math.nan
    theoretical_bound: float = math.nan
    bound_satisfied: bool = False
    mc_estimate: float | None = None
    mc_std_error: float | None = None
    truncation_mass: float = 0.0
    warnings: tuple[str, ...] = ()
    error: str | None = None


def run_rows(n_list: Iterable[int], row: Callable[[int], ConvergenceRecord],
             max_workers: int | None = None) -> list[ConvergenceRecord]:
    """Evaluate one record per ``n`` (optionally on a thread pool), sorted by ``n``."""
    ns = sorted(set(int(n) for n in n_list))
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(row, ns))
    else:
        rows = [row(n) for n in ns]
    return sorted(rows, key=lambda r: r.n)


def guarded_row(n: int, b_n: float, warnings: tuple[str, ...], compute) -> ConvergenceRecord:
    """Run ``compute(record)`` and turn any failure into an error row."""
    rec = ConvergenceRecord(n=n, b_n=b_n, warnings=warnings)
    try:
        compute(rec)
    except Exception as exc:  # a failing row must not abort the table
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.bound_satisfied = False
    return rec
