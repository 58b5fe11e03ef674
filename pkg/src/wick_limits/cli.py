"""Command-line entry point: ``wick-limits --mode gaussian-llt|poisson-lsn|verify``.

Configuration comes from flat ``key = value`` text (``--config``), command
line flags (which win), and ``WICK_LIMITS_SEED`` as a fallback seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, fields
from typing import Sequence

from .chaos import DEFAULT_WICK_CAP, ChaosExpansion
from .experiment import DEFAULT_BETA, DEFAULT_N_LIST, ConvergenceRecord, SequenceSchedule
from .gaussian_llt import (
    DensityValidationError,
    GaussianDensityInput,
    canonical_density,
    run_llt_experiment,
    validate_gaussian_density,
)
from .oracles import DEFAULT_SEED, MIN_MC_SAMPLES
from .orthobasis import ReferenceMeasure
from .poisson_lsn import (
    FinitePmf,
    PoissonDensityInput,
    canonical_pmf,
    density_from_pmf,
    run_lsn_experiment,
    validate_poisson_density,
)

MODES = ("gaussian-llt", "poisson-lsn", "verify")
DEFAULT_DENSITY = {"gaussian-llt": "h4-canonical", "poisson-lsn": "three-point", "verify": "h4-canonical"}
# open interval of admissible beta for b_n = ceil(n^beta), and the limit it encodes
BETA_RANGE = {
    "gaussian-llt": (2.0 / 3.0, 1.0, "b_n/n -> 0 and b_n/n^{2/3} -> infinity"),
    "poisson-lsn": (0.5, 1.0, "b_n/n -> 0 and b_n/n^{1/2} -> infinity"),
}
CSV_COLUMNS = ("n", "b_n", "measured_l1", "bound", "bound_satisfied",
               "mc_estimate", "mc_std_error", "trunc_mass")
VERIFY_COLUMNS = ("suite", "cases", "failures", "max_error", "passed")
MC_ALLOWANCE = 0.02
SEED_ENV = "WICK_LIMITS_SEED"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("\n".join(violations))


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    density: str
    a: float = 1.0
    beta: float = DEFAULT_BETA
    n_list: tuple[int, ...] = DEFAULT_N_LIST
    d_cap: int = DEFAULT_WICK_CAP
    quad_order: int | None = None
    seed: int = DEFAULT_SEED
    mc_samples: int = 0
    out: str | None = None

    def schedule(self) -> SequenceSchedule:
        return SequenceSchedule.power(self.beta)


KEYS = tuple(f.name for f in fields(ExperimentConfig))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if x.is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return format(x, ".17g")


def serialize(cfg: ExperimentConfig) -> str:
    """Flat ``key = value`` text that ``parse_config`` reads back to ``cfg``."""
    lines = []
    for key in KEYS:
        value = getattr(cfg, key)
        if value is None:
            continue
        if key == "n_list":
            text = ",".join(str(n) for n in value)
        elif key in ("a", "beta"):
            text = repr(float(value))
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> tuple[dict[str, str], list[str]]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    values, problems = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values, problems


def _parse_number(raw: str, kind, name: str, problems: list[str]):
    try:
        return kind(raw)
    except (TypeError, ValueError):
        problems.append(f"{name}: cannot read {raw!r} as {kind.__name__}")
        return None


def parse_config(text: str | None = None, flags: dict | None = None,
                 env: dict | None = None) -> ExperimentConfig:
    """Merge config text, flags and the environment; raise ``ConfigError`` with
    every violation found."""
    env = os.environ if env is None else env
    raw, problems = parse_text(text) if text else ({}, [])
    for key, value in (flags or {}).items():
        if value is not None:
            raw[key.replace("-", "_")] = str(value) if not isinstance(value, str) else value
    problems += [f"unknown key {k!r}" for k in raw if k not in KEYS]

    mode = raw.get("mode")
    if mode is None:
        problems.append("mode is required (one of " + ", ".join(MODES) + ")")
    elif mode not in MODES:
        problems.append(f"mode {mode!r} is not one of " + ", ".join(MODES))
        mode = None

    kw = {}
    for key, kind in (("a", float), ("beta", float), ("d_cap", int), ("mc_samples", int), ("seed", int)):
        if key in raw:
            value = _parse_number(raw[key], kind, key, problems)
            if value is not None:
                kw[key] = value
    if "seed" not in raw and env.get(SEED_ENV):
        seed = _parse_number(env[SEED_ENV], int, SEED_ENV, problems)
        if seed is not None:
            kw["seed"] = seed
    if raw.get("quad_order", "auto") != "auto":
        value = _parse_number(raw["quad_order"], int, "quad_order", problems)
        if value is not None:
            kw["quad_order"] = value
    if "n_list" in raw:
        items = [s for s in raw["n_list"].replace(" ", "").split(",") if s]
        ns = [_parse_number(s, int, "n_list", problems) for s in items]
        if not items:
            problems.append("n_list is empty")
        elif None not in ns:
            kw["n_list"] = tuple(ns)
    if raw.get("out"):
        kw["out"] = raw["out"]

    cfg_mode = mode or "verify"
    cfg = ExperimentConfig(mode=cfg_mode, density=raw.get("density", DEFAULT_DENSITY[cfg_mode]), **kw)
    problems += _value_problems(cfg)
    if mode is not None and not problems and mode != "verify":
        try:
            build_density(cfg)
        except (DensityValidationError, ValueError) as exc:
            problems.append(f"density {cfg.density!r}: {exc}")
    if problems:
        raise ConfigError(problems)
    return cfg


def _value_problems(cfg: ExperimentConfig) -> list[str]:
    out = []
    if not cfg.a > 0 or not math.isfinite(cfg.a):
        out.append(f"a must be a positive intensity, got {cfg.a!r}")
    if any(n < 1 for n in cfg.n_list):
        out.append("n_list entries must be positive integers")
    if cfg.d_cap < 1:
        out.append(f"d_cap must be >= 1, got {cfg.d_cap}")
    if cfg.quad_order is not None and cfg.quad_order < 2:
        out.append(f"quad_order must be >= 2, got {cfg.quad_order}")
    if cfg.mc_samples < 0 or 0 < cfg.mc_samples < MIN_MC_SAMPLES:
        out.append(f"mc_samples must be 0 (off) or at least {MIN_MC_SAMPLES}, got {cfg.mc_samples}")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        out.append("seed must fit in 64 unsigned bits")
    if cfg.mode in BETA_RANGE:
        lo, hi, limits = BETA_RANGE[cfg.mode]
        if not lo < cfg.beta < hi:
            out.append(
                f"beta = {cfg.beta:g} is refused for {cfg.mode}: b_n = ceil(n^beta) must satisfy "
                f"{limits}, which needs {lo:.4g} < beta < {hi:g}"
            )
    kind = cfg.density.split(":", 1)[0]
    if kind not in ("h4-canonical", "three-point", "coeffs", "pmf"):
        out.append(f"density {cfg.density!r}: use h4-canonical, three-point, coeffs:<list> or pmf:<list>")
    elif cfg.mode == "gaussian-llt" and kind in ("three-point", "pmf"):
        out.append(f"density {cfg.density!r} is a pmf and cannot drive gaussian-llt")
    elif cfg.mode == "poisson-lsn" and kind == "h4-canonical":
        out.append("density 'h4-canonical' is Gaussian and cannot drive poisson-lsn")
    if cfg.mode == "poisson-lsn" and kind == "coeffs" and cfg.mc_samples:
        out.append("Monte Carlo in poisson-lsn samples from a pmf; give density as pmf:<list>")
    return out


def _float_list(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def build_density(cfg: ExperimentConfig):
    """``(density input, pmf or None)`` described by ``cfg.density``."""
    kind, _, rest = cfg.density.partition(":")
    if cfg.mode == "gaussian-llt":
        if kind == "h4-canonical":
            return canonical_density(), None
        f = ChaosExpansion(ReferenceMeasure.gaussian(), _float_list(rest))
        return validate_gaussian_density(f, provenance=cfg.density), None
    if kind in ("three-point", "pmf"):
        pmf = canonical_pmf() if kind == "three-point" else FinitePmf(_float_list(rest))
        return density_from_pmf(pmf, cfg.a, provenance=cfg.density), pmf
    f = ChaosExpansion(ReferenceMeasure.poisson(cfg.a), _float_list(rest))
    return validate_poisson_density(f, cfg.a, provenance=cfg.density), None


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def records_to_csv(rows: Sequence[ConvergenceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([
            r.n, _fmt(r.b_n), _fmt(r.measured_l1), _fmt(r.theoretical_bound), _fmt(r.bound_satisfied),
            _fmt(r.mc_estimate), _fmt(r.mc_std_error), _fmt(r.truncation_mass),
        ])
    return buf.getvalue()


def _write(path: str | None, text: str, stream):
    if path is None or path == "-":
        stream.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def experiment_checks(cfg: ExperimentConfig, rows: Sequence[ConvergenceRecord]) -> list[tuple[str, bool, str]]:
    """``(name, passed, detail)`` for every check a run enables."""
    checks = []
    errors = [f"n={r.n}: {r.error}" for r in rows if r.error]
    checks.append(("rows computed", not errors, "; ".join(errors) or f"{len(rows)} rows"))
    bad = [r.n for r in rows if not r.bound_satisfied]
    checks.append(("bound satisfied", not bad and bool(rows),
                   f"failing n: {bad}" if bad else "measured_l1 <= bound in every row"))
    if len(rows) >= 2:
        first, last = rows[0], rows[-1]
        ok = last.measured_l1 < first.measured_l1
        checks.append(("decay", ok, f"measured_l1({last.n}) = {last.measured_l1:.6g} vs "
                                    f"measured_l1({first.n}) = {first.measured_l1:.6g}"))
    if cfg.mc_samples:
        off = [r.n for r in rows if r.mc_estimate is None
               or abs(r.mc_estimate - r.measured_l1) > max(3 * r.mc_std_error, MC_ALLOWANCE)]
        checks.append(("monte carlo agreement", not off,
                       f"disagreeing n: {off}" if off else f"within max(3 se, {MC_ALLOWANCE:g})"))
    return checks


def run_experiment(cfg: ExperimentConfig):
    f, pmf = build_density(cfg)
    common = dict(d_cap=cfg.d_cap, mc_samples=cfg.mc_samples, seed=cfg.seed)
    if cfg.mode == "gaussian-llt":
        return run_llt_experiment(f, cfg.schedule(), cfg.n_list, quad_order=cfg.quad_order, **common)
    return run_lsn_experiment(f, cfg.schedule(), cfg.n_list, pmf=pmf, **common)


def run(cfg: ExperimentConfig, stdout=None) -> int:
    """Execute ``cfg``; returns the exit status."""
    stdout = stdout or sys.stdout
    print(f"# wick-limits {cfg.mode} seed={cfg.seed}", file=stdout)
    if cfg.mode == "verify":
        from .verify import run_all

        reports = run_all(cfg.seed)
        for rep in reports:
            print(rep.line(), file=stdout)
            for note in rep.notes:
                print(f"    {note}", file=stdout)
        if cfg.out:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(VERIFY_COLUMNS)
            for rep in reports:
                w.writerow([rep.name, rep.cases, rep.failures, _fmt(rep.max_error), _fmt(rep.passed)])
            _write(cfg.out, buf.getvalue(), stdout)
        return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL

    rows = run_experiment(cfg)
    _write(cfg.out, records_to_csv(rows), stdout)
    for warning in sorted({w for r in rows for w in r.warnings}):
        print(f"WARN schedule: {warning}", file=stdout)
    checks = experiment_checks(cfg, rows)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=stdout)
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wick-limits", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--density", help="h4-canonical, three-point, coeffs:g0,g1,... or pmf:p0,p1,...")
    p.add_argument("--a", help="Poisson intensity (default 1)")
    p.add_argument("--beta", help=f"b_n = ceil(n^beta) (default {DEFAULT_BETA})")
    p.add_argument("--n-list", help="comma-separated n values")
    p.add_argument("--d-cap", help=f"Wick power degree cap (default {DEFAULT_WICK_CAP})")
    p.add_argument("--quad-order", help="Gauss-Hermite order, or 'auto'")
    p.add_argument("--seed", help=f"64-bit seed (falls back to ${SEED_ENV})")
    p.add_argument("--mc-samples", help=f"0 disables Monte Carlo, else >= {MIN_MC_SAMPLES}")
    p.add_argument("--out", help="CSV path ('-' for standard output)")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = vars(build_parser().parse_args(argv))
    text = None
    path = args.pop("config")
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = parse_config(text, args)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except Exception as exc:  # report and exit nonzero; partial CSV is already written
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
