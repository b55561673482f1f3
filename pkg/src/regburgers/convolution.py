"""Green's-kernel smoothing for the regularised Burgers equation.

The nonlocal pressure is P = G * (u_x^2 / 2) with the Helmholtz kernel

    G(x) = exp(-|x| / ell) / (2 ell),   ||G||_1 = 1,

so that P - ell^2 P_xx = u_x^2 / 2 and P >= 0.  The convolution is evaluated
in O(n) with two causal recursions (one per sweep direction) using the exact
per-interval decay exp(-h/ell); each interval feeds the recursion with the
exact integral of the kernel against the trapezoidal (piecewise-linear)
interpolant of the source, so the sweep reproduces the convolution of that
interpolant to round-off.  On periodic grids the wrap-around closes the
recursion through a geometric sum over all kernel images.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._scan import causal_sweeps
from .grid import COMPACT, PERIODIC, ConfigError, GridFunction1D


@dataclass(frozen=True)
class KernelSpec:
    """Smoothing length of the Helmholtz kernel."""

    ell: float

    def __post_init__(self):
        if not np.isfinite(self.ell) or self.ell <= 0:
            raise ConfigError(f"smoothing length must be finite and positive, got {self.ell}")


def green_kernel(x, spec: KernelSpec):
    """Pointwise kernel values G(x) = exp(-|x|/ell) / (2 ell)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ConfigError("kernel argument must be finite")
    out = np.exp(-np.abs(x) / spec.ell) / (2.0 * spec.ell)
    return out if out.ndim else float(out)


def source_weights(z):
    """Coefficients of the far/near source node for one recursion interval.

    For an interval of kernel width z = step/ell the contribution of the
    linearly interpolated source g to the downstream sweep value is

        step * (far(z) * g_far + near(z) * g_near),

    with far(z) = ((1-d)/z - d)/z and near(z) = (1-d)/z - far(z), d = e^-z.
    Small z (transparent intervals) switches to the series to dodge the
    cancellation; both branches are exact integrals of the interpolant.
    """
    z = np.asarray(z, dtype=float)
    tiny = z < 1e-3
    zs = np.where(tiny, 1.0, z)                  # keep the closed form finite
    d = np.exp(-zs)
    ratio = -np.expm1(-zs) / zs
    far = np.where(tiny, 0.5 - z / 3.0 + z * z / 8.0, (ratio - d) / zs)
    near = np.where(tiny, 0.5 - z / 6.0 + z * z / 24.0, (ratio - far))
    return far, near


def exp_sweeps(f: np.ndarray, h: float, ell: float, boundary: str):
    """One-sided exponential integrals of the samples ``f``.

    Returns (A, B) with A[i] ~ int_{-inf}^{x_i} exp(-(x_i-y)/ell) f(y) dy and
    B[i] the mirror image.  Compact-support data contributes nothing beyond
    the grid; periodic data is closed exactly through the geometric image sum.
    """
    n = f.size
    z = h / ell
    d1 = np.exp(-z)
    far, near = source_weights(z)
    if boundary == COMPACT:
        d = np.full(n - 1, d1)
        sa = h * (far * f[:-1] + near * f[1:])
        sb = h * (near * f[:-1] + far * f[1:])
        return causal_sweeps(d, sa, sb, 0.0, 0.0)
    if boundary == PERIODIC:
        fx = np.concatenate([f, f[:1]])          # wrap interval back to node 0
        d = np.full(n, d1)
        sa = h * (far * fx[:-1] + near * fx[1:])
        sb = h * (near * fx[:-1] + far * fx[1:])
        at, bt = causal_sweeps(d, sa, sb, 0.0, 0.0)
        wrap = np.exp(-n * z)
        decay = np.exp(-z * np.arange(n + 1))
        a = at + decay * (at[-1] / (1.0 - wrap))
        b = bt + decay[::-1] * (bt[0] / (1.0 - wrap))
        return a[:-1], b[:-1]
    raise ConfigError(f"unknown boundary treatment {boundary!r}")


def _sweeps_of(u: GridFunction1D, spec: KernelSpec):
    ux = u.derivative().values
    f = 0.5 * ux * ux
    return exp_sweeps(f, u.h, spec.ell, u.boundary)


def compute_P(u: GridFunction1D, spec: KernelSpec) -> GridFunction1D:
    """Nonlocal pressure P = G * (u_x^2 / 2) on the grid of ``u``."""
    a, b = _sweeps_of(u, spec)
    return u.with_values((a + b) / (2.0 * spec.ell))


def compute_Px(u: GridFunction1D, spec: KernelSpec) -> GridFunction1D:
    """Pressure gradient: the signed difference of the two sweeps.

    P_x(x) = (B(x) - A(x)) / (2 ell^2), the convolution of u_x^2/2 against
    the odd kernel sgn(y - x) exp(-|x - y|/ell) / (2 ell^2).
    """
    a, b = _sweeps_of(u, spec)
    return u.with_values((b - a) / (2.0 * spec.ell ** 2))


def p_and_px(u: GridFunction1D, spec: KernelSpec):
    """Both P and P_x from a single pair of sweeps (solver hot path)."""
    a, b = _sweeps_of(u, spec)
    return ((a + b) / (2.0 * spec.ell),
            (b - a) / (2.0 * spec.ell ** 2))
