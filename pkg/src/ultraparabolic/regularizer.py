"""Filter regularisation of the backward problem and its error bounds.

The unstable growth e^{(T-tau) n^2} is replaced by the bounded filter
(eps + e^{-p n^2})^{(tau-T)/p}. All powers are taken in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .problem import ProblemSpec, Region, classify_domain
from .solver import DEFAULT_QUADRATURE, QuadratureConfig, branch_bracket
from .spectral import SineSpectrum

# exp(-750) underflows to zero in double precision
_UNDERFLOW_EXPONENT = 750.0
_ROUNDING_SLACK = 1e-12


@dataclass(frozen=True)
class RegularizationParams:
    p: float
    eps: float

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"filter exponent p must be >= 1, got {self.p}")
        if not self.eps > 0:
            raise ValueError(f"noise level eps must be positive, got {self.eps}")

    def check_horizon(self, T: float) -> None:
        if self.p < T:
            raise ValueError(f"filter exponent p={self.p} must be >= horizon T={T}")


def _log_filter_base(n, p: float, eps: float) -> np.ndarray:
    """log(eps + e^{-p n^2}), with the exponential dropped once it underflows."""
    lam = np.asarray(n, dtype=float) ** 2
    decay = np.where(p * lam > _UNDERFLOW_EXPONENT, 0.0, np.exp(-np.minimum(p * lam, _UNDERFLOW_EXPONENT)))
    return np.log(eps + decay)


def filter_factor(n, tau: float, T: float, params: RegularizationParams):
    """(eps + e^{-p n^2})^{(tau - T)/p}; vectorised over ``n``."""
    params.check_horizon(T)
    if not 0 <= tau <= T:
        raise ValueError(f"time {tau} outside [0, {T}]")
    out = np.exp((tau - T) / params.p * _log_filter_base(n, params.p, params.eps))
    return float(out) if np.ndim(out) == 0 else out


def regularized_solve(spec: ProblemSpec, params: RegularizationParams, t: float, s: float,
                      cfg: QuadratureConfig = DEFAULT_QUADRATURE,
                      check_diagonal: bool = True) -> SineSpectrum:
    """Filtered backward solution at (t, s); bounded for every mode index."""
    params.check_horizon(spec.T)
    pt = classify_domain(t, s, spec.T)
    modes = list(spec.modes)
    if not modes:
        return SineSpectrum()
    tau, bracket = branch_bracket(spec, modes, pt.t, pt.s, pt.region, cfg, check_diagonal)
    weights = filter_factor(np.array(modes, dtype=float), tau, spec.T, params)
    return SineSpectrum.from_dict(dict(zip(modes, np.atleast_1d(weights * bracket).tolist())))


def stability_bound(delta: float, tau: float, T: float, params: RegularizationParams) -> float:
    """Largest possible output distance for data that differ by ``delta``."""
    if delta < 0:
        raise ValueError("data distance must be non-negative")
    return math.exp((tau - T) / params.p * math.log(params.eps)) * delta


@dataclass(frozen=True)
class ErrorBudget:
    """Smoothness constants of an exact solution and the bounds they give.

    ``c1``/``c2`` are inf when the weighted sum overflowed; ``unbounded_mode``
    then names the first offending mode.
    """

    c1: float
    c2: float
    T: float
    p: float
    converged: bool = True
    unbounded_mode: int | None = None

    def bound_d1(self, t: float, eps: float) -> float:
        return (1 + math.sqrt(self.c1)) * eps ** ((t - self.T + self.p) / self.p)

    def bound_d2(self, s: float, eps: float) -> float:
        return (1 + math.sqrt(self.c2)) * eps ** ((s - self.T + self.p) / self.p)


def _weighted_log_energy(spec: SineSpectrum, tau: float, T: float, p: float):
    """log of (pi/2) sum_n e^{2(p+tau-T) n^2} ((pi/2) c_n)^2, and a bad mode if any."""
    if len(spec) == 0:
        return -math.inf, None
    lam = spec.mode_array.astype(float) ** 2
    c = spec.coeff_array
    nz = c != 0
    logs = 2 * (p + tau - T) * lam[nz] + 2 * np.log((math.pi / 2) * np.abs(c[nz]))
    if logs.size == 0:
        return -math.inf, None
    if not np.all(np.isfinite(logs)) or logs.max() > 700.0:
        return math.inf, int(spec.mode_array[nz][np.argmax(logs)])
    top = logs.max()
    return math.log(math.pi / 2) + top + math.log(np.sum(np.exp(logs - top))), None


def smoothness_constants(exact: Callable[[float, float], SineSpectrum], T: float, p: float,
                         M: int = 80, max_doublings: int = 4, rtol: float = 1e-3) -> ErrorBudget:
    """Estimate the two smoothness constants on the (M+1)^2 time grid.

    The sup is a lower estimate; the grid is doubled until the estimate
    changes by less than ``rtol`` (or ``max_doublings`` is reached, in which
    case ``converged`` is False).
    """
    def sweep(M):
        best = {Region.D1: -math.inf, Region.D2: -math.inf}
        grid = np.arange(M + 1) * (T / M)
        for t in grid:
            for s in grid:
                spec = exact(float(t), float(s))
                pt = classify_domain(float(t), float(s), T)
                # the diagonal belongs to both closed triangles
                regions = (Region.D1, Region.D2) if pt.region is Region.DIAGONAL else (pt.region,)
                for region in regions:
                    tau = pt.t if region is Region.D1 else pt.s
                    val, bad = _weighted_log_energy(spec, tau, T, p)
                    if bad is not None:
                        return None, bad
                    best[region] = max(best[region], val)
        return tuple(math.exp(best[r]) if best[r] > -math.inf else 0.0 for r in (Region.D1, Region.D2)), None

    current, bad = sweep(M)
    if bad is not None:
        return ErrorBudget(math.inf, math.inf, T, p, False, bad)
    for _ in range(max_doublings):
        M *= 2
        refined, bad = sweep(M)
        if bad is not None:
            return ErrorBudget(math.inf, math.inf, T, p, False, bad)
        change = max(abs(a - b) / max(abs(a), 1e-300) for a, b in zip(refined, current))
        current = refined
        if change < rtol:
            return ErrorBudget(current[0], current[1], T, p, True)
    return ErrorBudget(current[0], current[1], T, p, False)


def error_bound(budget: ErrorBudget, tau: float, T: float, params: RegularizationParams,
                region: Region) -> float:
    """(1 + sqrt(C)) eps^{(tau - T + p)/p} with C picked by region."""
    c = budget.c2 if region is Region.D2 else budget.c1
    if not math.isfinite(c):
        raise ValueError("error budget is unbounded")
    return (1 + math.sqrt(c)) * math.exp((tau - T + params.p) / params.p * math.log(params.eps))


def lemma5_holds(eps: float, n: int, t: float, T: float, p: float) -> bool:
    """(eps + e^{-n^2 p})^{(t-T)/p} <= eps^{(t-T)/p}, compared in log space."""
    if not (0 <= t <= T <= p) or not eps > 0 or n < 1:
        raise ValueError("need 0 <= t <= T <= p, eps > 0 and n >= 1")
    lhs = (t - T) / p * float(_log_filter_base(n, p, eps))
    rhs = (t - T) / p * math.log(eps)
    return lhs <= rhs + _ROUNDING_SLACK


def lemma6_holds(x: float, alpha: float) -> bool:
    """1 - (x + 1)^{-alpha} <= x^{1 - alpha} for x > 0, 0 < alpha < 1."""
    if not x > 0 or not 0 < alpha < 1:
        raise ValueError("need x > 0 and 0 < alpha < 1")
    lhs = -math.expm1(-alpha * math.log1p(x))
    rhs = math.exp((1 - alpha) * math.log(x))
    return lhs <= rhs * (1 + _ROUNDING_SLACK)
