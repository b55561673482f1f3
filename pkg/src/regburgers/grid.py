"""Uniform 1-d grids and grid functions.

Two boundary treatments cover every scenario in the package:

* ``periodic``: the grid samples one period [x0, x0 + L) with L = n * h and
  derivatives are spectral (FFT).
* ``compact``: the data is compactly supported well inside the grid (whole
  line problems truncated with padding); derivatives are 4th-order centred
  finite differences with one-sided closures at the edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PERIODIC = "periodic"
COMPACT = "compact"

_SPACING_RTOL = 1e-12


class ConfigError(ValueError):
    """Invalid configuration or malformed input data."""


class NumericsError(RuntimeError):
    """A run failed numerically (NaN/Inf state, missing convergence, ...)."""


def _check_uniform(xs: np.ndarray) -> float:
    if xs.ndim != 1 or xs.size < 4:
        raise ConfigError("grid needs at least 4 points")
    steps = np.diff(xs)
    h = steps[0]
    if h <= 0:
        raise ConfigError("grid must be strictly increasing")
    if np.max(np.abs(steps - h)) > _SPACING_RTOL * max(abs(xs[0]), abs(xs[-1]), 1.0):
        raise ConfigError("grid spacing is not uniform")
    return float(h)


@dataclass(frozen=True)
class GridFunction1D:
    """Samples of a function on a uniform grid plus its boundary treatment.

    ``pad`` records, for compact-support grids, how many multiples of the
    smoothing length were added around the data when the grid was built.
    """

    xs: np.ndarray
    values: np.ndarray
    boundary: str = COMPACT
    pad: float = 10.0
    h: float = field(init=False)

    def __post_init__(self):
        if self.boundary not in (PERIODIC, COMPACT):
            raise ConfigError(f"unknown boundary treatment {self.boundary!r}")
        h = _check_uniform(np.asarray(self.xs, dtype=float))
        if self.values.shape != self.xs.shape:
            raise ConfigError("values and xs must have matching shapes")
        if not np.all(np.isfinite(self.xs)):
            raise ConfigError("grid coordinates must be finite")
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.xs.size

    @property
    def period(self) -> float:
        if self.boundary != PERIODIC:
            raise ConfigError("period undefined for compact-support grids")
        return self.n * self.h

    def with_values(self, values: np.ndarray) -> "GridFunction1D":
        return GridFunction1D(self.xs, np.asarray(values, dtype=float),
                              self.boundary, self.pad)

    # -- calculus -------------------------------------------------------

    def derivative(self) -> "GridFunction1D":
        return self.with_values(_derivative(self.values, self.h, self.boundary))

    def second_derivative(self) -> "GridFunction1D":
        return self.with_values(_second_derivative(self.values, self.h, self.boundary))

    def integral(self) -> float:
        """Trapezoid integral; on periodic grids the rectangle sum h * sum."""
        if self.boundary == PERIODIC:
            return float(self.h * np.sum(self.values))
        return float(np.trapezoid(self.values, dx=self.h))


def periodic_grid(x0: float, length: float, n: int) -> np.ndarray:
    """n points covering [x0, x0 + length), endpoint excluded."""
    if n < 4 or length <= 0:
        raise ConfigError("periodic grid needs n >= 4 and positive length")
    return x0 + (length / n) * np.arange(n)


def compact_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if n < 4 or hi <= lo:
        raise ConfigError("compact grid needs n >= 4 and hi > lo")
    return np.linspace(lo, hi, n)


def sample(f, xs: np.ndarray, boundary: str = COMPACT, pad: float = 10.0) -> GridFunction1D:
    return GridFunction1D(xs, np.asarray(f(xs), dtype=float), boundary, pad)


def check_compact_support(u: GridFunction1D, fraction: float = 0.25,
                          rtol: float = 1e-9) -> bool:
    """True when the outer ``fraction`` of the grid carries no data."""
    k = max(2, int(u.n * fraction / 2))
    edge = max(np.max(np.abs(u.values[:k])), np.max(np.abs(u.values[-k:])))
    return edge <= rtol * max(np.max(np.abs(u.values)), 1e-300)


# -- derivative stencils ------------------------------------------------

def _spectral_derivative(values: np.ndarray, h: float, order: int) -> np.ndarray:
    n = values.size
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=h)
    spec = np.fft.rfft(values)
    if order == 1:
        spec = spec * (1j * k)
    else:
        spec = spec * (-(k ** 2))
    return np.fft.irfft(spec, n=n)


# 4th-order one-sided first-derivative closures (rows for points 0 and 1).
_D1_EDGE = np.array([
    [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0],
    [-1.0 / 4.0, -5.0 / 6.0, 3.0 / 2.0, -1.0 / 2.0, 1.0 / 12.0],
])

# 4th-order one-sided second-derivative closures (6-point).
_D2_EDGE = np.array([
    [15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0, 61.0 / 12.0, -5.0 / 6.0],
    [5.0 / 6.0, -5.0 / 4.0, -1.0 / 3.0, 7.0 / 6.0, -1.0 / 2.0, 1.0 / 12.0],
])


def _fd4(values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(values)
    out[2:-2] = (values[:-4] - 8.0 * values[1:-3]
                 + 8.0 * values[3:-1] - values[4:]) / (12.0 * h)
    out[0] = _D1_EDGE[0] @ values[:5] / h
    out[1] = _D1_EDGE[1] @ values[:5] / h
    out[-1] = -(_D1_EDGE[0] @ values[-5:][::-1]) / h
    out[-2] = -(_D1_EDGE[1] @ values[-5:][::-1]) / h
    return out


def _fd4_second(values: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(values)
    out[2:-2] = (-values[:-4] + 16.0 * values[1:-3] - 30.0 * values[2:-2]
                 + 16.0 * values[3:-1] - values[4:]) / (12.0 * h * h)
    out[0] = _D2_EDGE[0] @ values[:6] / (h * h)
    out[1] = _D2_EDGE[1] @ values[:6] / (h * h)
    out[-1] = _D2_EDGE[0] @ values[-6:][::-1] / (h * h)
    out[-2] = _D2_EDGE[1] @ values[-6:][::-1] / (h * h)
    return out


def _derivative(values: np.ndarray, h: float, boundary: str) -> np.ndarray:
    if boundary == PERIODIC:
        return _spectral_derivative(values, h, 1)
    return _fd4(values, h)


def _second_derivative(values: np.ndarray, h: float, boundary: str) -> np.ndarray:
    if boundary == PERIODIC:
        return _spectral_derivative(values, h, 2)
    return _fd4_second(values, h)
