"""Benchmark reproduction: table of errors, blow-up data, convergence sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .problem import PerturbationSpec, benchmark_exact_spectrum, benchmark_problem, classify_domain, \
    noise_level, perturb
from .regularizer import RegularizationParams, regularized_solve
from .solver import DEFAULT_QUADRATURE, QuadratureConfig, illposedness_log_norm
from .spectral import SpaceGrid, evaluate_series, l2_norm, sin_multiple

TABLE_TIMES = (0.75, 0.5, 0.25, 0.125, 0.0)
CSV_HEADER = ("x", "t", "s", "exact", "approx", "abs_error", "label")


@dataclass(frozen=True)
class ExperimentRow:
    x: float
    t: float
    s: float
    exact: float
    approx: float
    abs_error: float
    label: str = ""

    @classmethod
    def make(cls, x, t, s, exact, approx, label=""):
        return cls(float(x), float(t), float(s), float(exact), float(approx),
                   abs(float(exact) - float(approx)), label)


@dataclass(frozen=True)
class GridConfig:
    K: int = 100
    M: int = 80
    p: float = 10.0
    T: float = 1.0

    def __post_init__(self):
        if self.K < 2 or self.K % 2:
            raise ValueError(f"K must be even and >= 2, got {self.K}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.p < self.T:
            raise ValueError(f"p={self.p} must be >= the horizon {self.T}")

    @property
    def space(self) -> SpaceGrid:
        return SpaceGrid(self.K)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) * (self.T / self.M)

    def snap(self, tau: float) -> float:
        k = round(tau * self.M / self.T)
        if abs(k * self.T / self.M - tau) > 1e-12:
            raise ValueError(f"time {tau} is not a node of the M={self.M} grid")
        return k * self.T / self.M


def m_label(m: int) -> str:
    k = round(math.log10(m)) if m > 0 else 0
    return f"m=1e{k}" if 10**k == m else f"m={m}"


def eps_for(m: int) -> float:
    return noise_level(PerturbationSpec(m))


def closed_form_regularized(x, t: float, s: float, m: int, p: float):
    """Regularised benchmark solution written out by hand (horizon 1).

    Independent of the spectral pipeline; used as its oracle.
    """
    if not (0 <= t <= 1 and 0 <= s <= 1):
        raise ValueError("(t, s) must lie in [0, 1]^2")
    if m < 1 or p < 1:
        raise ValueError("need m >= 1 and p >= 1")
    eps = math.sqrt(math.pi / 2) * (1.0 / m)
    x = np.asarray(x, dtype=float)
    if s <= t:
        tau, smooth = t, math.exp(-1 - t - s)
    else:
        tau, smooth = s, math.exp(-1 - 2 * t)
    low = (eps + math.exp(-p)) ** ((tau - 1) / p)
    # e^{-p m^2} underflows to an exact 0 long before m reaches 1e10
    high = (eps + math.exp(-min(p * float(m) ** 2, 745.0))) ** ((tau - 1) / p)
    out = low * smooth * np.sin(x) + high * sin_multiple(m, x).reshape(x.shape) / m
    return float(out) if out.ndim == 0 else out


def exact_value(x, t: float, s: float):
    return np.exp(-2 * t - s) * np.sin(x)


def pipeline_value(x, t: float, s: float, m: int, grid: GridConfig,
                   cfg: QuadratureConfig = DEFAULT_QUADRATURE, base=None):
    """Perturb, project, regularise and synthesise the benchmark at (x, t, s)."""
    base = base if base is not None else benchmark_problem(grid.space)
    spec = perturb(base, PerturbationSpec(m))
    params = RegularizationParams(grid.p, eps_for(m))
    v = regularized_solve(spec, params, t, s, cfg)
    out = evaluate_series(v, x)
    return float(out[0]) if np.ndim(x) == 0 else out


def run_table1(grid: GridConfig = GridConfig(), m_values: Sequence[int] = (10**2, 10**10),
               supplementary: bool = False,
               cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> list[ExperimentRow]:
    """Rows (pi/2, tau, tau) for each m, approx taken from the full pipeline.

    With ``supplementary`` the same times are repeated at x = pi/3, where the
    perturbation mode does not vanish.
    """
    base = benchmark_problem(grid.space)
    xs = [math.pi / 2] + ([math.pi / 3] if supplementary else [])
    rows = []
    for m in m_values:
        for x in xs:
            label = m_label(m) + ("" if x == math.pi / 2 else " supplementary")
            for tau in TABLE_TIMES:
                tau = grid.snap(tau)
                approx = pipeline_value(x, tau, tau, m, grid, cfg, base)
                rows.append(ExperimentRow.make(x, tau, tau, exact_value(x, tau, tau), approx, label))
    return rows


@dataclass(frozen=True)
class DivergenceResult:
    m_values: tuple[int, ...]
    log_norms: tuple[float, ...]
    x: np.ndarray
    exact_profile: np.ndarray
    # None where e^{m^2/2}/m does not fit in a double
    profiles: dict


def run_divergence(m_values: Sequence[int], K: int = 100, t: float = 0.5, s: float = 0.5,
                   cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> DivergenceResult:
    """Log-norms of naive perturbed minus exact, and u_m(x, t, s) on the K-grid."""
    x = SpaceGrid(K).nodes
    exact = exact_value(x, t, s)
    tau = classify_domain(t, s, 1.0).tau
    logs, profiles = [], {}
    for m in m_values:
        logs.append(illposedness_log_norm(m, t, s, 1.0, cfg))
        log_amp = (1 - tau) * float(m) ** 2 - math.log(m)
        profiles[m] = exact + math.exp(log_amp) * sin_multiple(m, x) if log_amp < 700 else None
    return DivergenceResult(tuple(m_values), tuple(logs), x, exact, profiles)


@dataclass(frozen=True)
class SweepResult:
    slope: float
    intercept: float
    residual: float
    eps: tuple[float, ...]
    errors: tuple[float, ...]
    m_values: tuple[int, ...]


def run_convergence_sweep(p: float, m_values: Sequence[int], point: tuple[float, float] = (0.0, 0.0),
                          K: int = 100, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> SweepResult:
    """Least-squares slope of log ||v_eps - u|| against log eps at one point."""
    t, s = point
    base = benchmark_problem(SpaceGrid(K))
    eps, errors = [], []
    for m in m_values:
        e = eps_for(m)
        v = regularized_solve(perturb(base, PerturbationSpec(m)), RegularizationParams(p, e), t, s, cfg)
        eps.append(e)
        errors.append(l2_norm(v - benchmark_exact_spectrum(t, s)))
    if len(set(eps)) < 2:
        raise ValueError("need at least two distinct noise levels for a fit")
    if min(errors) <= 0:
        raise ValueError("zero error encountered; log-log fit undefined")
    lx, ly = np.log(eps), np.log(errors)
    (slope, intercept), res, *_ = np.polyfit(lx, ly, 1, full=True)
    residual = math.sqrt(float(res[0]) / len(lx)) if len(res) else 0.0
    return SweepResult(float(slope), float(intercept), residual, tuple(eps), tuple(errors), tuple(m_values))


def surface_rows(grid: GridConfig, m: int, x: float = math.pi / 2,
                 cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> list[ExperimentRow]:
    """Exact and regularised values over the whole (t, s) grid at a fixed x."""
    base = benchmark_problem(grid.space)
    label = m_label(m)
    return [
        ExperimentRow.make(x, t, s, exact_value(x, t, s), pipeline_value(x, t, s, m, grid, cfg, base), label)
        for t in grid.times for s in grid.times
    ]


def profile_rows(grid: GridConfig, m: int, t: float = 0.0, s: float = 0.0,
                 cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> list[ExperimentRow]:
    """Exact and regularised values along x at fixed (t, s)."""
    x = grid.space.nodes
    approx = pipeline_value(x, t, s, m, grid, cfg)
    exact = exact_value(x, t, s)
    return [ExperimentRow.make(xi, t, s, e, a, m_label(m)) for xi, e, a in zip(x, exact, approx)]


def format_number(v: float) -> str:
    """Positional decimal with 10 significant digits."""
    if not math.isfinite(v):
        return repr(float(v))
    return np.format_float_positional(v, precision=10, unique=False, fractional=False, trim="-")


def write_rows(rows: Iterable[ExperimentRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([format_number(v) for v in (r.x, r.t, r.s, r.exact, r.approx, r.abs_error)]
                        + [r.label])


def emit_csv(rows: Iterable[ExperimentRow], destination) -> None:
    """Write rows as CSV to ``destination`` (a path)."""
    buf = io.StringIO()
    write_rows(rows, buf)
    path = Path(destination)
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc
