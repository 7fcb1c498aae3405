"""Problem instances for u_t + u_s - u_xx = f on (0, pi) x (0, T)^2.

Data and source are held mode by mode as time profiles. ``phi`` is the data
on s = T (a function of t) and ``psi`` the data on t = T (a function of s);
the forward solver reads the same two fields as edge data on s = 0 and t = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .spectral import SineSpectrum, SpaceGrid, project_rows

ANALYTIC_TOL = 1e-9
_DIAGONAL_SNAP = 1e-12


class TimeProfile:
    """Per-mode coefficients g_n(t) (arity 1) or g_n(t, s) (arity 2).

    Modes not listed in ``modes`` are identically zero. Subclasses implement
    ``_evaluate`` which receives broadcastable time arrays and returns an
    array with a trailing mode axis.
    """

    arity: int
    modes: tuple[int, ...]
    tolerance: float = ANALYTIC_TOL

    def coefficients(self, *times, modes: Sequence[int] | None = None) -> np.ndarray:
        """Coefficients at ``times`` for ``modes`` (default: own modes).

        Output shape is ``broadcast(times).shape + (len(modes),)``.
        """
        if len(times) != self.arity:
            raise TypeError(f"profile takes {self.arity} time argument(s), got {len(times)}")
        times = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in times))
        own = self._evaluate(*times)
        if modes is None:
            return own
        index = {n: k for k, n in enumerate(self.modes)}
        out = np.zeros(times[0].shape + (len(modes),))
        for j, n in enumerate(modes):
            k = index.get(int(n))
            if k is not None:
                out[..., j] = own[..., k]
        return out

    def __call__(self, n: int, *times):
        value = self.coefficients(*times, modes=[n])[..., 0]
        return float(value) if value.ndim == 0 else value

    def spectrum_at(self, *times: float) -> SineSpectrum:
        c = self.coefficients(*times)
        return SineSpectrum.from_dict(dict(zip(self.modes, c.tolist())))

    def _evaluate(self, *times: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def with_constant_modes(self, extra: Mapping[int, float]) -> "TimeProfile":
        return SumProfile((self, ConstantProfile(extra, self.arity)))


@dataclass(frozen=True)
class ClosedForm:
    """Tagged closed form, serialisable to a problem file.

    ``kind`` is ``"const"`` (params ``c``) or ``"exp"``: ``c*exp(a*t + b)`` for
    one time argument and ``c*exp(a*t + b*s + d)`` for two.
    """

    kind: str
    params: tuple[float, ...]
    arity: int = 1

    def __post_init__(self):
        expected = {"const": 1, "exp": 3 if self.arity == 1 else 4}
        if self.kind not in expected:
            raise ValueError(f"unknown closed-form tag {self.kind!r}")
        if len(self.params) != expected[self.kind]:
            raise ValueError(
                f"{self.kind!r} with {self.arity} time argument(s) takes "
                f"{expected[self.kind]} parameters, got {len(self.params)}"
            )

    def __call__(self, *times: np.ndarray) -> np.ndarray:
        if self.kind == "const":
            return np.full(np.shape(times[0]), self.params[0])
        if self.arity == 1:
            c, a, b = self.params
            return c * np.exp(a * times[0] + b)
        c, a, b, d = self.params
        return c * np.exp(a * times[0] + b * times[1] + d)

    def tag(self) -> str:
        return " ".join([self.kind] + [repr(float(v)) for v in self.params])


class AnalyticProfile(TimeProfile):
    """Profile from vectorised per-mode callables."""

    def __init__(self, terms: Mapping[int, Callable[..., np.ndarray]], arity: int = 1):
        if arity not in (1, 2):
            raise ValueError("arity must be 1 or 2")
        for n in terms:
            if int(n) < 1:
                raise ValueError(f"mode index must be >= 1, got {n}")
        self.arity = arity
        self.terms = {int(n): terms[n] for n in sorted(terms)}
        self.modes = tuple(self.terms)

    def _evaluate(self, *times):
        shape = times[0].shape
        out = np.zeros(shape + (len(self.modes),))
        for k, g in enumerate(self.terms.values()):
            out[..., k] = np.broadcast_to(g(*times), shape)
        return out


class ConstantProfile(TimeProfile):
    """Modes that do not vary in time."""

    def __init__(self, coeffs: Mapping[int, float], arity: int = 1):
        items = sorted((int(n), float(c)) for n, c in coeffs.items())
        if any(n < 1 for n, _ in items):
            raise ValueError("mode indices must be >= 1")
        self.arity = arity
        self.modes = tuple(n for n, _ in items)
        self.values = np.array([c for _, c in items], dtype=float)

    def _evaluate(self, *times):
        return np.broadcast_to(self.values, times[0].shape + self.values.shape).copy()


class SumProfile(TimeProfile):
    def __init__(self, parts: Sequence[TimeProfile]):
        arities = {p.arity for p in parts}
        if len(arities) != 1:
            raise ValueError("cannot add profiles of different arity")
        self.arity = arities.pop()
        self.parts = tuple(parts)
        self.modes = tuple(sorted(set().union(*(p.modes for p in parts))))
        self.tolerance = max(p.tolerance for p in parts)

    def _evaluate(self, *times):
        out = np.zeros(times[0].shape + (len(self.modes),))
        for part in self.parts:
            out += part.coefficients(*times, modes=self.modes)
        return out


class SampledProfile(TimeProfile):
    """Per-mode samples on a uniform time grid over [0, T], cubic interpolation.

    One time argument: ``values[n]`` has shape (M+1,). Two: shape (M+1, M+1)
    indexed [t, s].
    """

    def __init__(self, times: Sequence[float], values: Mapping[int, np.ndarray], arity: int = 1):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 4:
            raise ValueError("need at least 4 time samples for cubic interpolation")
        steps = np.diff(times)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("time samples must be uniform and increasing")
        if times[0] != 0.0:
            raise ValueError("time grid must start at 0")
        self.arity = arity
        self.times = times
        self.horizon = float(times[-1])
        self.step = float(steps[0])
        self.tolerance = 10.0 * self.step**4
        self.modes = tuple(sorted(int(n) for n in values))
        self.samples = {}
        self._splines = []
        for n in self.modes:
            v = np.asarray(values[n], dtype=float)
            expected = (times.size,) * arity
            if v.shape != expected:
                raise ValueError(f"mode {n}: expected samples of shape {expected}, got {v.shape}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"mode {n}: samples must be finite")
            self.samples[n] = v
            if arity == 1:
                self._splines.append(CubicSpline(times, v))
            else:
                self._splines.append(RectBivariateSpline(times, times, v, kx=3, ky=3))

    def _evaluate(self, *times):
        clipped = [np.clip(t, 0.0, self.horizon) for t in times]
        out = np.zeros(times[0].shape + (len(self.modes),))
        for k, spline in enumerate(self._splines):
            if self.arity == 1:
                out[..., k] = spline(clipped[0])
            else:
                out[..., k] = spline.ev(clipped[0], clipped[1])
        return out


class ProjectedProfile(TimeProfile):
    """Profile obtained by projecting a space-time function on the sine basis.

    ``func(x, *times)`` must broadcast; x arrives with a trailing axis of
    grid nodes and the times with a trailing singleton axis.
    """

    def __init__(self, func: Callable[..., np.ndarray], grid: SpaceGrid, n_max: int, arity: int = 1):
        self.func = func
        self.grid = grid
        self.n_max = n_max
        self.arity = arity
        self.modes = tuple(range(1, n_max + 1))
        self._x = grid.nodes

    def _evaluate(self, *times):
        shape = times[0].shape
        flat = [t.reshape(-1, 1) for t in times]
        samples = np.broadcast_to(self.func(self._x[None, :], *flat), (flat[0].shape[0], self._x.size))
        c = project_rows(samples, self.n_max)
        return c.reshape(shape + (self.n_max,))


def zero_profile(arity: int = 1) -> TimeProfile:
    return ConstantProfile({}, arity)


@dataclass(frozen=True)
class ProblemSpec:
    """Final-value problem: horizon, data on t = T and s = T, source, mode cutoff.

    ``n_max`` bounds the modes obtained by projection; explicitly added sparse
    modes (perturbations) may lie above it.
    """

    T: float
    phi: TimeProfile
    psi: TimeProfile
    source: TimeProfile
    n_max: int
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be positive, got {self.n_max}")
        if self.phi.arity != 1 or self.psi.arity != 1:
            raise ValueError("phi and psi take one time argument")
        if self.source.arity != 2:
            raise ValueError("source takes two time arguments")

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.phi.modes) | set(self.psi.modes) | set(self.source.modes)))


@dataclass(frozen=True)
class PerturbationSpec:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"perturbation index must be a positive integer, got {self.m}")


class Region(enum.Enum):
    D1 = "D1"  # s < t
    D2 = "D2"  # t < s
    DIAGONAL = "DIAGONAL"


@dataclass(frozen=True)
class TimeDomainPoint:
    t: float
    s: float
    region: Region

    @property
    def tau(self) -> float:
        """The time that drives the backward amplification (t on D1, s on D2)."""
        return self.s if self.region is Region.D2 else self.t


def classify_domain(t: float, s: float, T: float) -> TimeDomainPoint:
    slack = _DIAGONAL_SNAP * max(1.0, T)
    for name, v in (("t", t), ("s", s)):
        if not (-slack <= v <= T + slack):
            raise ValueError(f"{name}={v} outside [0, {T}]")
    t = min(max(float(t), 0.0), T)
    s = min(max(float(s), 0.0), T)
    if abs(t - s) <= slack:
        return TimeDomainPoint(t, t, Region.DIAGONAL)
    return TimeDomainPoint(t, s, Region.D1 if s < t else Region.D2)


@dataclass(frozen=True)
class CompatibilityReport:
    passed: bool
    tol: float
    max_residual: float
    violations: tuple[tuple[int, float], ...] = ()


def compatibility_check(spec: ProblemSpec, tol: float | None = None) -> CompatibilityReport:
    """Check phi_n(T) == psi_n(T) mode by mode.

    Every active mode is checked, which includes perturbation modes above
    ``n_max``. The default tolerance follows the coarser of the two profiles.
    """
    if tol is None:
        tol = max(spec.phi.tolerance, spec.psi.tolerance)
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    modes = sorted(set(spec.phi.modes) | set(spec.psi.modes))
    if not modes:
        return CompatibilityReport(True, tol, 0.0)
    diff = np.abs(
        spec.phi.coefficients(spec.T, modes=modes) - spec.psi.coefficients(spec.T, modes=modes)
    )
    bad = tuple((n, float(d)) for n, d in zip(modes, diff) if not d <= tol)
    return CompatibilityReport(not bad, tol, float(np.max(diff)), bad)


def perturb(spec: ProblemSpec, pert: PerturbationSpec) -> ProblemSpec:
    """Add sin(m x)/m, constant in time, to both data functions."""
    return add_constant_modes(spec, {int(pert.m): 1.0 / pert.m})


def add_constant_modes(spec: ProblemSpec, extra: Mapping[int, float]) -> ProblemSpec:
    return ProblemSpec(
        spec.T,
        spec.phi.with_constant_modes(extra),
        spec.psi.with_constant_modes(extra),
        spec.source,
        spec.n_max,
        spec.name,
    )


def noise_level(pert: PerturbationSpec) -> float:
    """L2 norm of sin(m x)/m on (0, pi)."""
    return math.sqrt(math.pi / 2) / pert.m


def random_perturbation(rng: np.random.Generator, n_max: int, amplitude: float) -> dict[int, float]:
    """Uniform random time-constant coefficients on modes 1..n_max (test helper)."""
    return {n: float(c) for n, c in enumerate(rng.uniform(-amplitude, amplitude, n_max), start=1)}


def zero_problem(T: float = 1.0, n_max: int = 1) -> ProblemSpec:
    return ProblemSpec(T, zero_profile(1), zero_profile(1), zero_profile(2), n_max, "zero")


# The worked example: f = -2 e^{-2t-s} sin x with exact solution e^{-2t-s} sin x.

def benchmark_problem(grid: SpaceGrid | None = None, n_max: int = 10) -> ProblemSpec:
    """The benchmark problem on [0, pi] x [0, 1]^2.

    With a grid the data are given in physical space and projected; without
    one the single active mode is given in closed form.
    """
    if grid is None:
        phi = AnalyticProfile({1: ClosedForm("exp", (1.0, -2.0, -1.0))})
        psi = AnalyticProfile({1: ClosedForm("exp", (1.0, -1.0, -2.0))})
        source = AnalyticProfile({1: ClosedForm("exp", (-2.0, -2.0, -1.0, 0.0), 2)}, arity=2)
        return ProblemSpec(1.0, phi, psi, source, n_max, "benchmark")
    phi = ProjectedProfile(lambda x, t: np.exp(-2 * t - 1) * np.sin(x), grid, n_max)
    psi = ProjectedProfile(lambda x, s: np.exp(-2 - s) * np.sin(x), grid, n_max)
    source = ProjectedProfile(
        lambda x, t, s: -2 * np.exp(-2 * t - s) * np.sin(x), grid, n_max, arity=2
    )
    return ProblemSpec(1.0, phi, psi, source, n_max, "benchmark")


def benchmark_exact_spectrum(t: float, s: float) -> SineSpectrum:
    """Spectrum of the exact benchmark solution e^{-2t-s} sin x."""
    return SineSpectrum((1,), (math.exp(-2 * t - s),))
