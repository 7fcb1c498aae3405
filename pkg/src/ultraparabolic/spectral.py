"""Sine-basis arithmetic on [0, pi] with homogeneous Dirichlet ends.

Coefficients are stored with the 2/pi normalisation, so a function u is
represented as ``u(x) = sum_n c_n sin(n x)`` and ``||u||^2 = (pi/2) sum c_n^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping, Sequence

import mpmath
import numpy as np

DROP_TOL = 1e-14
# above this mode index the product n*x loses too much precision in doubles
NAIVE_SINE_LIMIT = 10**8
_SNAP_DENOMINATOR = 1 << 16


class BoundaryViolationError(ValueError):
    """Samples do not vanish at x = 0 and x = pi."""


class AliasingError(ValueError):
    """Requested more modes than the grid can resolve."""


def eigenvalue(n: int) -> float:
    """Dirichlet Laplacian eigenvalue ``n**2`` on [0, pi].

    Python integers do not overflow, so the square is formed exactly and then
    rounded once to float. For n above ~9.5e7 the result is no longer an exact
    integer, which is harmless since exp(-p n^2) has long underflowed there.
    """
    if n < 1:
        raise ValueError(f"mode index must be >= 1, got {n}")
    return float(int(n) * int(n))


@dataclass(frozen=True)
class SineSpectrum:
    """Sparse sine-series coefficients, mode indices strictly increasing."""

    modes: tuple[int, ...] = ()
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.modes) != len(self.coeffs):
            raise ValueError("modes and coeffs differ in length")
        prev = 0
        for n, c in zip(self.modes, self.coeffs):
            if n <= prev:
                raise ValueError("mode indices must be >= 1 and strictly increasing")
            if not math.isfinite(c):
                raise ValueError(f"coefficient of mode {n} is not finite: {c}")
            prev = n

    @classmethod
    def from_dict(cls, coeffs: Mapping[int, float], drop_tol: float = 0.0) -> "SineSpectrum":
        items = sorted((int(n), float(c)) for n, c in coeffs.items() if abs(c) > drop_tol)
        return cls(tuple(n for n, _ in items), tuple(c for _, c in items))

    @classmethod
    def dense(cls, coeffs: Sequence[float], start: int = 1, drop_tol: float = 0.0) -> "SineSpectrum":
        return cls.from_dict({start + i: c for i, c in enumerate(coeffs)}, drop_tol)

    @classmethod
    def zero(cls) -> "SineSpectrum":
        return cls()

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(zip(self.modes, self.coeffs))

    def __getitem__(self, n: int) -> float:
        return self.as_dict().get(n, 0.0)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.modes, self.coeffs))

    @property
    def mode_array(self) -> np.ndarray:
        return np.asarray(self.modes, dtype=np.int64)

    @property
    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    def _combine(self, other: "SineSpectrum", sign: float) -> "SineSpectrum":
        out = self.as_dict()
        for n, c in other:
            out[n] = out.get(n, 0.0) + sign * c
        return SineSpectrum.from_dict(out)

    def __add__(self, other: "SineSpectrum") -> "SineSpectrum":
        return self._combine(other, 1.0)

    def __sub__(self, other: "SineSpectrum") -> "SineSpectrum":
        return self._combine(other, -1.0)

    def __mul__(self, a: float) -> "SineSpectrum":
        return SineSpectrum.from_dict({n: a * c for n, c in self})

    __rmul__ = __mul__

    def __neg__(self) -> "SineSpectrum":
        return self * -1.0


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform nodes x_j = j*pi/K, j = 0..K."""

    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be positive, got {self.K}")

    @property
    def step(self) -> float:
        return math.pi / self.K

    @property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.K + 1) * math.pi / self.K
        x[-1] = math.pi
        return x


def simpson_weights(K: int, h: float) -> np.ndarray:
    """Composite Simpson weights for K (even) uniform intervals of width h."""
    if K < 2 or K % 2:
        raise ValueError(f"composite Simpson needs an even number of intervals, got {K}")
    w = np.empty(K + 1)
    w[0] = w[-1] = 1.0
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


@lru_cache(maxsize=4096)
def _pi_fraction(x: float) -> tuple[int, int] | None:
    """Return (p, q) if x is the double nearest to p*pi/q for a small q."""
    frac = Fraction(x / math.pi).limit_denominator(_SNAP_DENOMINATOR)
    p, q = frac.numerator, frac.denominator
    if abs(p * math.pi / q - x) <= 2 * math.ulp(x if x else 1.0):
        return p, q
    return None


def _sin_pi_rational(r: np.ndarray, q) -> np.ndarray:
    """sin(pi * r / q) for integer r, with exact zeros and quadrant symmetry."""
    r = np.mod(r, 2 * q)
    sign = np.where(r >= q, -1.0, 1.0)
    r = np.where(r >= q, r - q, r)
    r = np.minimum(r, q - r)  # sin(pi - a) = sin(a)
    return sign * np.sin(np.pi * r / q)


@lru_cache(maxsize=256)
def _snap_points(raw: bytes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised ``_pi_fraction`` for a whole point array, cached by content."""
    x = np.frombuffer(raw, dtype=float)
    hit = np.zeros(x.size, dtype=bool)
    p = np.zeros(x.size, dtype=np.int64)
    q = np.ones(x.size, dtype=np.int64)
    for i, xi in enumerate(x):
        snap = _pi_fraction(float(xi))
        if snap is not None:
            hit[i] = True
            p[i], q[i] = snap
    for a in (hit, p, q):
        a.flags.writeable = False
    return hit, p, q


def sin_multiple(n: int, x) -> np.ndarray:
    """sin(n*x) evaluated elementwise, safe for very large n.

    Points that are (to the last ulp) rational multiples of pi, such as grid
    nodes or pi/2, are reduced exactly in integer arithmetic. Other points
    fall back to plain doubles for moderate n and to extended precision
    above ``NAIVE_SINE_LIMIT``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    shape, x = x.shape, x.ravel()
    out = np.empty_like(x)
    n = int(n)
    hit, p, q = _snap_points(x.tobytes())
    if hit.any():
        p, q = p[hit], q[hit]
        if abs(n) < 2**62:
            r = (np.int64(n) % (2 * q)) * p
        else:
            r = np.array([(n % (2 * int(b))) * int(a) for a, b in zip(p, q)], dtype=np.int64)
        out[hit] = _sin_pi_rational(r, q)
    rest = ~hit
    if rest.any():
        if n <= NAIVE_SINE_LIMIT:
            out[rest] = np.sin(n * x[rest])
        else:
            with mpmath.workdps(40):
                out[rest] = [float(mpmath.sin(mpmath.mpf(n) * mpmath.mpf(float(xi)))) for xi in x[rest]]
    return out.reshape(shape)


def _grid_sine_matrix(K: int, modes: np.ndarray) -> np.ndarray:
    """Matrix S[j, k] = sin(modes[k] * x_j) on the K-grid, exact reduction."""
    j = np.arange(K + 1, dtype=np.int64)[:, None]
    return _sin_pi_rational(j * modes[None, :].astype(np.int64), K)


@lru_cache(maxsize=64)
def projection_matrix(K: int, n_max: int) -> np.ndarray:
    """(K+1, n_max) matrix mapping grid samples to coefficients 1..n_max."""
    w = simpson_weights(K, math.pi / K)
    S = _grid_sine_matrix(K, np.arange(1, n_max + 1, dtype=np.int64))
    P = (2.0 / math.pi) * w[:, None] * S
    P.setflags(write=False)
    return P


def _check_projection(samples: np.ndarray, n_max: int) -> int:
    K = samples.shape[-1] - 1
    if K < 2 or K % 2:
        raise ValueError(f"grid needs an even number K of intervals, got K={K}")
    if n_max < 1:
        raise ValueError(f"n_max must be positive, got {n_max}")
    if n_max >= K:
        raise AliasingError(f"n_max={n_max} must be below K={K} to avoid aliasing")
    return K


def sine_coefficients(samples: Sequence[float], n_max: int) -> SineSpectrum:
    """Project samples on the uniform K-grid onto sin(n x), n = 1..n_max.

    Endpoint samples must vanish; values within 1e-12 of the largest sample
    are accepted as zero so that e.g. ``np.sin(grid.nodes)`` passes.
    """
    y = np.asarray(samples, dtype=float)
    if y.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    K = _check_projection(y, n_max)
    if not np.all(np.isfinite(y)):
        raise ValueError("samples contain non-finite values")
    scale = max(1.0, float(np.max(np.abs(y))))
    if abs(y[0]) > 1e-12 * scale or abs(y[-1]) > 1e-12 * scale:
        raise BoundaryViolationError(
            f"samples must vanish at x=0 and x=pi (got {y[0]!r}, {y[-1]!r})"
        )
    c = y @ projection_matrix(K, n_max)
    return SineSpectrum.dense(c, drop_tol=DROP_TOL)


def project_rows(samples: np.ndarray, n_max: int) -> np.ndarray:
    """Batched projection: rows of grid samples to dense coefficient rows.

    Used on the hot path of time profiles; boundary checks are the caller's
    job. Coefficients below ``DROP_TOL`` are zeroed as in ``sine_coefficients``.
    """
    samples = np.asarray(samples, dtype=float)
    K = _check_projection(samples, n_max)
    c = samples @ projection_matrix(K, n_max)
    c[np.abs(c) < DROP_TOL] = 0.0
    return c


def evaluate_series(spec: SineSpectrum, points) -> np.ndarray:
    """Sum c_n sin(n x) at each point of ``points`` (all in [0, pi])."""
    x = np.atleast_1d(np.asarray(points, dtype=float))
    if np.any(x < 0.0) or np.any(x > math.pi) or np.any(np.isnan(x)):
        raise ValueError("evaluation points must lie in [0, pi]")
    out = np.zeros_like(x)
    for n, c in spec:
        out += c * sin_multiple(n, x)
    return out


def l2_norm(spec: SineSpectrum) -> float:
    """L2(0, pi) norm via Parseval."""
    c = spec.coeff_array
    if c.size == 0:
        return 0.0
    # scale first so that tiny or huge coefficients do not under/overflow
    a = float(np.max(np.abs(c)))
    if a == 0.0:
        return 0.0
    return a * math.sqrt(math.pi / 2 * float(np.sum((c / a) ** 2)))

