"""Evolution in mass-like coordinates, through and past gradient blow-up.

The unknowns (y, u, v, q) follow characteristics: y is position, u the
velocity carried along, v = 2 arctan(u_x) the slope angle and q a
Jacobian weight.  The angle compactifies the slope, so the system stays
semi-linear where the Eulerian form explodes.  Two variants:

* conservative: v may cross -pi (the slope passes through -inf and
  returns from +inf) and energy is exactly conserved;
* dissipative: a cell reaching v = -pi freezes there permanently, its
  crossing time tau is recorded, and the associated ell^2 energy
  fraction is given up.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from ._scan import causal_sweeps
from .convolution import source_weights
from .grid import ConfigError, GridFunction1D, NumericsError

__all__ = [
    "CONSERVATIVE",
    "DISSIPATIVE",
    "VTOL",
    "LagrangianState",
    "CrossingSet",
    "init_lagrangian",
    "lagrangian_P",
    "step_conservative",
    "step_dissipative",
    "evolve_backward",
    "evolve",
    "reconstruct_eulerian",
    "lagrangian_energy",
    "crossing_set",
]

CONSERVATIVE = "conservative"
DISSIPATIVE = "dissipative"

# Slope samples closer than this to the barrier reconstruct as singular.
VTOL = 1e-9


@dataclass(frozen=True)
class LagrangianState:
    """One snapshot of the characteristic system on a uniform xi grid.

    ``tau`` is carried by the dissipative variant only: per-cell crossing
    times, +inf while a cell is still active.
    """

    xis: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    q: np.ndarray
    t: float
    variant: str
    ell: float
    tau: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in (CONSERVATIVE, DISSIPATIVE):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if not (np.isfinite(self.ell) and self.ell > 0):
            raise ConfigError("ell must be positive and finite")
        n = self.xis.size
        for name in ("y", "u", "v", "q"):
            if getattr(self, name).shape != (n,):
                raise ConfigError(f"field {name} does not match the xi grid")
        if self.variant == DISSIPATIVE and self.tau is None:
            object.__setattr__(self, "tau", np.full(n, np.inf))

    @property
    def dxi(self) -> float:
        return float(self.xis[1] - self.xis[0])

    @property
    def n(self) -> int:
        return self.xis.size

    def active(self) -> np.ndarray:
        """Mask of cells still evolving (everything, when conservative)."""
        if self.variant == CONSERVATIVE:
            return np.ones(self.n, dtype=bool)
        return self.v > -np.pi


@dataclass(frozen=True)
class CrossingSet:
    """Per-cell first times v reached -pi; +inf where it never did."""

    xis: np.ndarray
    tau: np.ndarray

    @property
    def crossed(self) -> np.ndarray:
        return np.isfinite(self.tau)

    @property
    def fraction(self) -> float:
        return float(np.mean(self.crossed))

    @property
    def first(self) -> float:
        return float(np.min(self.tau))


def crossing_set(state: LagrangianState) -> CrossingSet:
    if state.tau is None:
        raise ConfigError("crossing times exist only for dissipative states")
    return CrossingSet(state.xis.copy(), state.tau.copy())


# -- initialisation -----------------------------------------------------

def init_lagrangian(u0: GridFunction1D, xi_count: int, ell: float,
                    variant: str = CONSERVATIVE,
                    xi_span: tuple[float, float] | None = None) -> LagrangianState:
    """Set up characteristic data from a sampled profile.

    The label xi is cumulative 1 + u0'^2 mass: y0 inverts
    integral(1 + u0'^2, 0..y0) = xi, then v0 = 2 arctan(u0'(y0)) and
    q0 = 1.  The default xi span is the full image of the cumulative
    map over the grid of ``u0``; a custom span must stay inside it.
    """
    if xi_count < 4:
        raise ConfigError("xi grid needs at least 4 points")
    xs = u0.xs
    # Cubic-spline view of the samples: the label map and the fields are
    # then accurate to O(h^4) of the sampling grid rather than O(h^2).
    spline = CubicSpline(xs, u0.values)
    dspline = spline.derivative()
    ux = dspline(xs)
    w = 1.0 + ux * ux
    mass = np.concatenate((
        [0.0], np.cumsum(0.5 * (w[:-1] + w[1:]) * u0.h)))
    total = float(mass[-1])
    if xi_span is None:
        lo, hi = 0.0, total
    else:
        lo, hi = map(float, xi_span)
        if lo < -1e-12 or hi > total * (1.0 + 1e-12) or hi <= lo:
            raise ConfigError(
                f"xi span ({lo}, {hi}) leaves the image [0, {total:.6g}] "
                "of the cumulative map")
    xis = np.linspace(lo, hi, xi_count)
    y0 = np.interp(xis, mass, xs)
    u_at = spline(y0)
    v0 = 2.0 * np.arctan(dspline(y0))
    q0 = np.ones(xi_count)
    tau = np.full(xi_count, np.inf) if variant == DISSIPATIVE else None
    return LagrangianState(xis=xis, y=y0, u=u_at, v=v0, q=q0,
                           t=0.0, variant=variant, ell=ell, tau=tau)


# -- nonlocal pressure on the xi grid -----------------------------------

def _masked_q(v: np.ndarray, q: np.ndarray, variant: str) -> np.ndarray:
    if variant == CONSERVATIVE:
        return q
    return np.where(v > -np.pi, q, 0.0)


def _pressure_arrays(dxi: float, v: np.ndarray, q: np.ndarray,
                     variant: str, ell: float):
    """P and P_x by the two-sweep recursion in arc-length distance.

    The kernel argument is Eulerian distance, accumulated per cell as
    ds = dxi * (c_j + c_{j+1})/2 with arc density c = qbar cos^2(v/2).
    Frozen cells have zero width, so the kernel does not decay across
    them; the same series-guarded weights as on Eulerian grids keep the
    ds -> 0 regime exact.
    """
    qb = _masked_q(v, q, variant)
    half = 0.5 * v
    c = qb * np.cos(half) ** 2
    g = qb * np.sin(half) ** 2
    ds = 0.5 * dxi * (c[:-1] + c[1:])
    z = ds / ell
    far, near = source_weights(z)
    d = np.exp(-z)
    sa = dxi * (far * g[:-1] + near * g[1:])
    sb = dxi * (near * g[:-1] + far * g[1:])
    a, b = causal_sweeps(d, sa, sb, 0.0, 0.0)
    p = (a + b) / (4.0 * ell)
    px = (b - a) / (4.0 * ell * ell)
    return p, px


def lagrangian_P(state: LagrangianState):
    """Nonlocal pressure and its Eulerian-x gradient on the xi grid."""
    return _pressure_arrays(state.dxi, state.v, state.q,
                            state.variant, state.ell)


def cell_weights(state: LagrangianState) -> np.ndarray:
    """Per-cell q with crossed cells zeroed under the dissipative
    variant; x-integrals of a field f become sum(f * w * cos^2(v/2)) * dxi."""
    return _masked_q(state.v, state.q, state.variant)


# -- stepping -----------------------------------------------------------

def _field(dxi, y, u, v, q, variant, ell, zero_pressure):
    if zero_pressure:
        p = np.zeros_like(v)
        px = p
    else:
        p, px = _pressure_arrays(dxi, v, q, variant, ell)
    yd = u
    ud = -ell * ell * px
    vd = -p * (1.0 + np.cos(v)) - np.sin(0.5 * v) ** 2
    qd = q * (0.5 - p) * np.sin(v)
    if variant == DISSIPATIVE:
        frozen = v <= -np.pi
        if frozen.any():
            vd = np.where(frozen, 0.0, vd)
            qd = np.where(frozen, 0.0, qd)
    return yd, ud, vd, qd


def _hermite(theta, f0, f1, d0, d1):
    """Cubic Hermite value on [0, 1] with endpoint slopes d0, d1."""
    t2 = theta * theta
    t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + theta) * d0
            + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * d1)


def _rk4(state: LagrangianState, dt: float, sign: float,
         zero_pressure: bool, events: bool) -> LagrangianState:
    if not (np.isfinite(dt) and dt > 0.0):
        raise ConfigError(f"dt must be positive, got {dt}")
    dxi, variant, ell = state.dxi, state.variant, state.ell
    y0, u0, v0, q0 = state.y, state.u, state.v, state.q

    def f(y, u, v, q):
        yd, ud, vd, qd = _field(dxi, y, u, v, q, variant, ell, zero_pressure)
        return sign * yd, sign * ud, sign * vd, sign * qd

    k1 = f(y0, u0, v0, q0)
    k2 = f(y0 + 0.5 * dt * k1[0], u0 + 0.5 * dt * k1[1],
           v0 + 0.5 * dt * k1[2], q0 + 0.5 * dt * k1[3])
    k3 = f(y0 + 0.5 * dt * k2[0], u0 + 0.5 * dt * k2[1],
           v0 + 0.5 * dt * k2[2], q0 + 0.5 * dt * k2[3])
    k4 = f(y0 + dt * k3[0], u0 + dt * k3[1],
           v0 + dt * k3[2], q0 + dt * k3[3])

    def mix(i):
        return (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    y1 = y0 + mix(0)
    u1 = u0 + mix(1)
    v1 = v0 + mix(2)
    q1 = q0 + mix(3)
    tau = None if state.tau is None else state.tau.copy()

    if events:
        fresh = (v0 > -np.pi) & (v1 < -np.pi)
        for i in np.nonzero(fresh)[0]:
            dv0 = dt * k1[2][i]
            dv1 = dt * k4[2][i]

            def gap(theta, i=i, dv0=dv0, dv1=dv1):
                return _hermite(theta, v0[i], v1[i], dv0, dv1) + np.pi

            theta = brentq(gap, 0.0, 1.0, xtol=1e-14)
            tau[i] = state.t + theta * dt
            q1[i] = _hermite(theta, q0[i], q1[i],
                             dt * k1[3][i], dt * k4[3][i])
            v1[i] = -np.pi
        # Guard against drift of already-frozen cells.
        v1 = np.maximum(v1, -np.pi)

    return replace(state, y=y1, u=u1, v=v1, q=q1,
                   t=state.t + sign * dt, tau=tau)


def step_conservative(state: LagrangianState, dt: float,
                      zero_pressure: bool = False) -> LagrangianState:
    """One RK4 step of the free system; v may cross -pi."""
    if state.variant != CONSERVATIVE:
        raise ConfigError("step_conservative needs a conservative state")
    return _rk4(state, dt, 1.0, zero_pressure, events=False)


def step_dissipative(state: LagrangianState, dt: float) -> LagrangianState:
    """One RK4 step of the switched system with barrier handling.

    Cells hitting v = -pi inside the step are located by a cubic-Hermite
    root of v + pi, clamped exactly to the barrier with q frozen at its
    interpolated crossing value, and their crossing time recorded.
    """
    if state.variant != DISSIPATIVE:
        raise ConfigError("step_dissipative needs a dissipative state")
    return _rk4(state, dt, 1.0, False, events=True)


def evolve_backward(state: LagrangianState, dt: float) -> LagrangianState:
    """One RK4 step of the sign-flipped field (time runs towards -t)."""
    if state.variant != CONSERVATIVE:
        raise ConfigError("backward evolution is defined for the "
                          "conservative variant")
    return _rk4(state, dt, -1.0, False, events=False)


def evolve(state: LagrangianState, t_end: float, dt: float,
           output_times: Sequence[float] | None = None,
           zero_pressure: bool = False) -> list[LagrangianState]:
    """March to ``t_end``, returning snapshots at the requested times.

    Steps land exactly on each output time; the default output is the
    final state only.
    """
    if t_end <= state.t:
        raise ConfigError("t_end must exceed the state time")
    if output_times is None:
        outputs = np.array([t_end])
    else:
        outputs = np.unique(np.asarray(output_times, dtype=float))
        if outputs.min() < state.t - 1e-12 or outputs.max() > t_end + 1e-12:
            raise ConfigError("output times must lie in [state.t, t_end]")
    step = (step_dissipative if state.variant == DISSIPATIVE
            else lambda s, d: step_conservative(s, d, zero_pressure))
    result: list[LagrangianState] = []
    k = 0
    while k < outputs.size and outputs[k] <= state.t + 1e-12:
        result.append(state)
        k += 1
    guard = 0
    while state.t < t_end - 1e-12:
        guard += 1
        if guard > 50_000_000:
            raise NumericsError("step budget exhausted")
        target = outputs[k] if k < outputs.size else t_end
        d = min(dt, target - state.t, t_end - state.t)
        state = step(state, d)
        while k < outputs.size and state.t >= outputs[k] - 1e-12:
            result.append(state)
            k += 1
    return result


# -- observables --------------------------------------------------------

def reconstruct_eulerian(state: LagrangianState, x_grid: np.ndarray):
    """Profiles u(x) and u_x(x) by inverting the position map.

    Plateaus (cells at the barrier) have zero width, so inversion by
    interpolation lands on the single shared value.  The slope is
    tan(v/2) with samples within VTOL of the barrier marked NaN.
    """
    x = np.asarray(x_grid, dtype=float)
    y = np.maximum.accumulate(state.y)
    if x.min() < y[0] - 1e-12 or x.max() > y[-1] + 1e-12:
        raise ConfigError("x grid leaves the reconstructed span "
                          f"[{y[0]:.6g}, {y[-1]:.6g}]")
    u = np.interp(x, y, state.u)
    v = np.interp(x, y, state.v)
    ux = np.where(np.abs(v + np.pi) < VTOL, np.nan, np.tan(0.5 * v))
    return (GridFunction1D(x, u), GridFunction1D(x, ux))


def lagrangian_energy(state: LagrangianState,
                      phi: Callable | None = None) -> float:
    """Modified energy sum((u - phi(y))^2 cos^2(v/2) + ell^2 sin^2(v/2)) qbar dxi.

    The dissipative variant weighs with the masked q, so each crossing
    permanently removes that cell's ell^2 q dxi share; the conservative
    variant keeps the full weight and conserves the sum.
    """
    ref = phi(state.y) if phi is not None else 0.0
    half = 0.5 * state.v
    qb = _masked_q(state.v, state.q, state.variant)
    dens = ((state.u - ref) ** 2 * np.cos(half) ** 2
            + state.ell ** 2 * np.sin(half) ** 2) * qb
    return float(np.sum(dens) * state.dxi)
