"""Forward (well-posed) and unregularised backward solutions, mode by mode."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .problem import (
    PerturbationSpec,
    ProblemSpec,
    Region,
    TimeProfile,
    classify_domain,
    perturb,
    zero_problem,
)
from .spectral import SineSpectrum

OVERFLOW_LOG = 700.0


class QuadratureError(RuntimeError):
    def __init__(self, message: str, estimates: tuple[np.ndarray, np.ndarray], achieved: float):
        super().__init__(message)
        self.estimates = estimates
        self.achieved = achieved


class DiagonalMismatchError(ValueError):
    """The two branches of the solution formula disagree on t == s."""


@dataclass(frozen=True)
class QuadratureConfig:
    initial_subdivisions: int = 16
    max_subdivisions: int = 1 << 20
    rtol: float = 1e-10
    # absolute floor, so that identically vanishing integrals converge
    atol: float = 1e-15

    def __post_init__(self):
        if self.initial_subdivisions < 1 or self.max_subdivisions < 1:
            raise ValueError("subdivision limits must be >= 1")
        if not self.rtol > 0:
            raise ValueError("relative tolerance must be positive")


DEFAULT_QUADRATURE = QuadratureConfig()


def _simpson(values: np.ndarray, h: float) -> np.ndarray:
    return (h / 3.0) * (
        values[0] + values[-1] + 4.0 * values[1:-1:2].sum(axis=0) + 2.0 * values[2:-1:2].sum(axis=0)
    )


def integrate(g: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Composite Simpson on [a, b], doubling until every component converges.

    ``g`` maps an array of nodes of shape (N,) to values of shape (N, k).
    Nodes from the previous level are reused.
    """
    if b <= a:
        return np.zeros(np.shape(g(np.array([a])))[1:])
    n = cfg.initial_subdivisions + cfg.initial_subdivisions % 2
    values = g(np.linspace(a, b, n + 1))
    old = prev = _simpson(values, (b - a) / n)
    while 2 * n <= cfg.max_subdivisions:
        h = (b - a) / (2 * n)
        mid = g(a + h * (2 * np.arange(n) + 1))
        merged = np.empty((2 * n + 1,) + values.shape[1:])
        merged[0::2] = values
        merged[1::2] = mid
        values, n = merged, 2 * n
        cur = _simpson(values, h)
        if np.all(np.abs(cur - prev) <= cfg.rtol * np.abs(cur) + cfg.atol):
            return cur
        old, prev = prev, cur
    achieved = float(np.max(np.abs(prev - old) / np.maximum(np.abs(prev), cfg.atol)))
    raise QuadratureError(
        f"Simpson refinement reached {n} intervals on [{a}, {b}] without converging "
        f"(last relative change {achieved:.3g}, requested {cfg.rtol:.3g})",
        (old, prev),
        achieved,
    )


def _squares(modes: Sequence[int]) -> np.ndarray:
    return np.array([float(int(n) * int(n)) for n in modes])


def kernel_integrals(modes: Sequence[int], lower: float, t: float, s: float, T: float,
                     f: TimeProfile, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """int_lower^T exp((lower - eta) n^2) f_n(T+t-eta, T+s-eta) d eta for each mode.

    The exponent is never positive on the interval, so nothing can overflow.
    Modes absent from the source give exactly 0.
    """
    modes = list(modes)
    out = np.zeros(len(modes))
    src = set(f.modes)
    active = [k for k, n in enumerate(modes) if n in src]
    if not active or lower >= T:
        return out
    sel = [modes[k] for k in active]
    lam = _squares(sel)

    def integrand(eta):
        coeffs = f.coefficients(T + t - eta, T + s - eta, modes=sel)
        return np.exp(np.outer(lower - eta, lam)) * coeffs

    out[active] = integrate(integrand, lower, T, cfg)
    return out


def exp_kernel_integral(n: int, t: float, s: float, T: float, f: TimeProfile,
                        cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Source integral of the D1 branch for mode ``n`` (lower limit t)."""
    if not 0 <= t <= T:
        raise ValueError(f"t={t} outside [0, {T}]")
    return float(kernel_integrals([n], t, t, s, T, f, cfg)[0])


@dataclass(frozen=True)
class ModeEvaluation:
    n: int
    value: float
    log_magnitude: float
    overflowed: bool


def branch_bracket(spec: ProblemSpec, modes: list[int], t: float, s: float, region: Region,
                     cfg: QuadratureConfig, check_diagonal: bool) -> tuple[float, np.ndarray]:
    """(tau, data - source integral) for the branch that owns (t, s)."""
    T = spec.T
    if region is Region.D2:
        data = spec.phi.coefficients(T + t - s, modes=modes)
        return s, data - kernel_integrals(modes, s, t, s, T, spec.source, cfg)
    data = spec.psi.coefficients(T + s - t, modes=modes)
    if region is Region.DIAGONAL and check_diagonal:
        other = spec.phi.coefficients(T, modes=modes)
        scale = np.maximum(1.0, np.abs(data))
        if np.any(np.abs(other - data) > 1e-8 * scale):
            raise DiagonalMismatchError(
                f"phi(T) and psi(T) differ on the diagonal t=s={t}; "
                "the data are not compatible"
            )
    return t, data - kernel_integrals(modes, t, t, s, T, spec.source, cfg)


def backward_solve_naive(spec: ProblemSpec, t: float, s: float,
                         cfg: QuadratureConfig = DEFAULT_QUADRATURE,
                         check_diagonal: bool = True,
                         expanded: bool = False) -> list[ModeEvaluation]:
    """Unregularised backward solution, one evaluation per active mode.

    The default factors the growth e^{(T-tau) n^2} out of the source integral,
    keeping the integrand bounded. ``expanded=True`` puts it inside instead,
    which is the same number whenever nothing overflows.
    """
    pt = classify_domain(t, s, spec.T)
    modes = list(spec.modes)
    if not modes:
        return []
    lam = _squares(modes)
    if expanded:
        growth, data, integral = _expanded_terms(spec, modes, pt.t, pt.s, pt.region, cfg)
        out = []
        with np.errstate(over="ignore", invalid="ignore"):
            values = np.exp(growth) * data - integral
        for n, v, g, d in zip(modes, values, growth, data):
            if v == 0.0:
                out.append(ModeEvaluation(n, 0.0, -math.inf, False))
            elif np.isfinite(v) and math.log(abs(v)) <= OVERFLOW_LOG:
                out.append(ModeEvaluation(n, float(v), math.log(abs(v)), False))
            else:
                log_mag = math.log(abs(v)) if np.isfinite(v) else float(g + math.log(abs(d)))
                out.append(ModeEvaluation(n, math.copysign(math.inf, d), log_mag, True))
        return out
    tau, bracket = branch_bracket(spec, modes, pt.t, pt.s, pt.region, cfg, check_diagonal)
    growth = (spec.T - tau) * lam
    out = []
    for n, g, b in zip(modes, growth, bracket):
        if b == 0.0:
            out.append(ModeEvaluation(n, 0.0, -math.inf, False))
            continue
        log_mag = float(g + math.log(abs(b)))
        if log_mag > OVERFLOW_LOG:
            out.append(ModeEvaluation(n, math.copysign(math.inf, b), log_mag, True))
        else:
            out.append(ModeEvaluation(n, float(b * math.exp(g)), log_mag, False))
    return out


def _expanded_terms(spec, modes, t, s, region, cfg):
    """Growth, data and the integral with e^{(T-eta) n^2} inside."""
    T = spec.T
    lam = _squares(modes)
    tau = s if region is Region.D2 else t
    if region is Region.D2:
        data = spec.phi.coefficients(T + t - s, modes=modes)
    else:
        data = spec.psi.coefficients(T + s - t, modes=modes)
    src = set(spec.source.modes)
    active = [k for k, n in enumerate(modes) if n in src]
    integral = np.zeros(len(modes))
    if active and tau < T:
        sel = [modes[k] for k in active]
        sl = lam[active]

        def integrand(eta):
            coeffs = spec.source.coefficients(T + t - eta, T + s - eta, modes=sel)
            with np.errstate(over="ignore"):
                return np.exp(np.outer(T - eta, sl)) * coeffs

        integral[active] = integrate(integrand, tau, T, cfg)
    return (T - tau) * lam, data, integral


def naive_spectrum(evals: Sequence[ModeEvaluation]) -> SineSpectrum:
    """Spectrum of a naive solution; refuses if any mode overflowed."""
    bad = [e.n for e in evals if e.overflowed]
    if bad:
        raise OverflowError(f"modes {bad[:5]} overflowed; use log_l2_norm instead")
    return SineSpectrum.from_dict({e.n: e.value for e in evals})


def log_l2_norm(evals: Sequence[ModeEvaluation]) -> float:
    """Natural log of the L2 norm of a naive solution, overflow-safe."""
    logs = np.array([e.log_magnitude for e in evals if e.log_magnitude > -math.inf])
    if logs.size == 0:
        return -math.inf
    top = logs.max()
    return 0.5 * math.log(math.pi / 2) + top + 0.5 * math.log(np.sum(np.exp(2 * (logs - top))))


def forward_solve(spec: ProblemSpec, t: float, s: float,
                  cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> SineSpectrum:
    """Solution of the initial-edge problem at (t, s).

    Here ``phi`` is read as the data on s = 0 and ``psi`` as the data on
    t = 0. Every exponential decays, so this is stable.
    """
    pt = classify_domain(t, s, spec.T)
    t, s = pt.t, pt.s
    modes = list(spec.modes)
    if not modes:
        return SineSpectrum()
    lam = _squares(modes)
    src = set(spec.source.modes)
    active = [k for k, n in enumerate(modes) if n in src]
    sel = [modes[k] for k in active]
    integral = np.zeros(len(modes))
    if pt.region is Region.D2:
        # characteristic reaches t = 0 at (0, s - t)
        data = np.exp(-lam * t) * spec.psi.coefficients(s - t, modes=modes)
        if active and t > 0:
            integral[active] = integrate(
                lambda eta: np.exp(np.outer(eta - t, lam[active]))
                * spec.source.coefficients(eta, s - t + eta, modes=sel),
                0.0, t, cfg)
    else:
        data = np.exp(-lam * s) * spec.phi.coefficients(t - s, modes=modes)
        if active and s > 0:
            integral[active] = integrate(
                lambda eta: np.exp(np.outer(eta - s, lam[active]))
                * spec.source.coefficients(t - s + eta, eta, modes=sel),
                0.0, s, cfg)
    return SineSpectrum.from_dict(dict(zip(modes, (data + integral).tolist())))


def illposedness_log_norm(m: int, t: float = 0.5, s: float = 0.5, T: float = 1.0,
                          cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """ln ||u_m(., t, s) - u(., t, s)|| for the sin(m x)/m data perturbation.

    By linearity the difference of the two naive solutions is the naive
    solution of the perturbation alone with zero source.
    """
    diff = perturb(zero_problem(T), PerturbationSpec(m))
    return log_l2_norm(backward_solve_naive(diff, t, s, cfg))


def illposedness_norm(m: int, t: float = 0.5, s: float = 0.5, T: float = 1.0,
                      cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """As ``illposedness_log_norm`` but exponentiated; inf once it overflows."""
    log_norm = illposedness_log_norm(m, t, s, T, cfg)
    return math.exp(log_norm) if log_norm < 709.0 else math.inf
