"""Run verification: energies, variation bounds, weak-form residuals.

The momentum residual quadrates the once-integrated-by-parts form of

    [u - l^2 u_xx]_t + [u^2/2 - l^2 u u_xx - l^2 u_x^2/2]_x = 0

so that only first derivatives of the fields appear; the energy residual
does the same for

    [u^2/2 + l^2 u_x^2/2]_t + [u^3/3 + l^2 u P + l^2 u u_x^2/2]_x = 0.

With nonnegative test functions the energy residual of a dissipative run
is positive (energy leaves the support), a conservative run gives zero,
and a negative value flags energy creation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .convolution import KernelSpec, compute_P
from .grid import ConfigError, GridFunction1D, PERIODIC

CONSERVATIVE = "conservative"
DISSIPATIVE = "dissipative"
INADMISSIBLE = "inadmissible"


# -- scalar diagnostics -------------------------------------------------

def energy_eulerian(u: GridFunction1D, ell: float) -> float:
    """H1-type energy integral of u^2 + ell^2 u_x^2."""
    ux = u.derivative().values
    return u.with_values(u.values ** 2 + ell * ell * ux * ux).integral()


def total_variation(u: GridFunction1D) -> float:
    tv = float(np.sum(np.abs(np.diff(u.values))))
    if u.boundary == PERIODIC:
        tv += abs(float(u.values[0] - u.values[-1]))
    return tv


def slope_bound(t: float, M: float = np.inf, C: float = 2.0) -> float:
    """One-sided slope ceiling C/t, sharpened to CM/(Mt+C) for data with
    bounded initial slope M."""
    if not np.isfinite(M):
        if t <= 0.0:
            raise ConfigError("the C/t bound needs t > 0")
        return C / t
    if M <= 0.0:
        raise ConfigError(f"slope ceiling needs M > 0, got {M}")
    return C * M / (M * t + C)


def oleinik_margin(u: GridFunction1D, t: float, M: float = np.inf,
                   C: float = 2.0) -> float:
    """bound - max(u_x); negative means the one-sided bound is violated."""
    ux = u.derivative().values
    return slope_bound(t, M, C) - float(np.nanmax(ux))


# -- smooth compactly supported test functions --------------------------

def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


def _bump_d1(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    g = 1.0 - si * si
    out[inside] = np.exp(1.0 - 1.0 / g) * (-2.0 * si / g ** 2)
    return out


def _bump_d2(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    g = 1.0 - si * si
    b = np.exp(1.0 - 1.0 / g)
    out[inside] = b * (4.0 * si * si / g ** 4
                       - 2.0 / g ** 2 - 8.0 * si * si / g ** 3)
    return out


@lru_cache(maxsize=1)
def _bump_mass() -> float:
    val, _ = quad(lambda s: float(_bump(np.array([s]))[0]), -1.0, 1.0)
    return val


@dataclass(frozen=True)
class BumpTestFunction:
    """Separable C-infinity bump psi(t, x) supported on
    [t_center - t_width, t_center + t_width] x
    [x_center - x_width, x_center + x_width]."""

    t_center: float
    t_width: float
    x_center: float
    x_width: float

    def __post_init__(self):
        if self.t_width <= 0.0 or self.x_width <= 0.0:
            raise ConfigError("bump widths must be positive")

    def _st(self, t):
        return (np.asarray(t, dtype=float) - self.t_center) / self.t_width

    def _sx(self, x):
        return (np.asarray(x, dtype=float) - self.x_center) / self.x_width

    def psi(self, t, x):
        return _bump(self._st(t)) * _bump(self._sx(x))

    def psi_t(self, t, x):
        return _bump_d1(self._st(t)) / self.t_width * _bump(self._sx(x))

    def psi_x(self, t, x):
        return _bump(self._st(t)) * _bump_d1(self._sx(x)) / self.x_width

    def psi_xt(self, t, x):
        return (_bump_d1(self._st(t)) / self.t_width
                * _bump_d1(self._sx(x)) / self.x_width)

    def psi_xx(self, t, x):
        return _bump(self._st(t)) * _bump_d2(self._sx(x)) / self.x_width ** 2

    def time_integral_at(self, x) -> np.ndarray:
        """integral over t of psi(t, x) for fixed x."""
        return self.t_width * _bump_mass() * _bump(self._sx(x))


# -- weak-form residuals ------------------------------------------------

@dataclass(frozen=True)
class StateSeries:
    """Minimal trajectory shape accepted by the residual and report
    functions; adapts reconstructed or synthetic snapshot lists."""

    times: np.ndarray
    states: tuple
    spec: KernelSpec


def state_series(times, states, ell: float) -> StateSeries:
    times = np.asarray(times, dtype=float)
    if times.size != len(states):
        raise ConfigError("one state per time is required")
    return StateSeries(times=times, states=tuple(states),
                       spec=KernelSpec(ell))

def _check_support(bump: BumpTestFunction, times, xs):
    if bump.t_center - bump.t_width < times[0] - 1e-12 \
            or bump.t_center + bump.t_width > times[-1] + 1e-12:
        raise ConfigError("test function time support leaves the "
                          "trajectory window")
    if bump.x_center - bump.x_width < xs[0] - 1e-12 \
            or bump.x_center + bump.x_width > xs[-1] + 1e-12:
        raise ConfigError("test function space support leaves the grid")


def weak_residual(traj, test_functions, ell: float | None = None):
    """Momentum and energy residuals of a trajectory against each test
    function; arrays of matching length."""
    if ell is None:
        ell = traj.spec.ell
    times = np.asarray(traj.times, dtype=float)
    states = traj.states
    xs = states[0].xs
    bumps = list(test_functions)
    for bump in bumps:
        _check_support(bump, times, xs)
    l2 = ell * ell

    mom_rows = np.zeros((len(bumps), times.size))
    ene_rows = np.zeros((len(bumps), times.size))
    spec = KernelSpec(ell)
    for k, (t, state) in enumerate(zip(times, states)):
        u = state.values
        ux = state.derivative().values
        p = compute_P(state, spec).values
        mom_flux = 0.5 * u * u + 0.5 * l2 * ux * ux
        ene_density = 0.5 * u * u + 0.5 * l2 * ux * ux
        ene_flux = u ** 3 / 3.0 + l2 * u * p + 0.5 * l2 * u * ux * ux
        for j, bump in enumerate(bumps):
            mom = (u * bump.psi_t(t, xs) + l2 * ux * bump.psi_xt(t, xs)
                   + mom_flux * bump.psi_x(t, xs)
                   + l2 * u * ux * bump.psi_xx(t, xs))
            ene = (ene_density * bump.psi_t(t, xs)
                   + ene_flux * bump.psi_x(t, xs))
            mom_rows[j, k] = state.with_values(mom).integral()
            ene_rows[j, k] = state.with_values(ene).integral()
    mom_res = np.trapezoid(mom_rows, times, axis=1)
    ene_res = np.trapezoid(ene_rows, times, axis=1)
    return mom_res, ene_res


def residual_scale(traj, ell: float | None = None) -> float:
    """Energy magnitude used to normalise residual thresholds."""
    if ell is None:
        ell = traj.spec.ell
    return max(energy_eulerian(s, ell) for s in traj.states)


def classify_residuals(mom_res, ene_res, tol: float) -> str:
    mom = np.max(np.abs(mom_res))
    ene_min = float(np.min(ene_res))
    ene_max = float(np.max(np.abs(ene_res)))
    if mom <= tol and ene_max <= tol:
        return CONSERVATIVE
    if mom <= tol and ene_min >= -tol:
        return DISSIPATIVE
    return INADMISSIBLE


# -- assembled reports --------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsReport:
    times: np.ndarray
    energy: np.ndarray
    modified_energy: np.ndarray
    tv: np.ndarray
    oleinik_margin: np.ndarray
    weak_momentum: np.ndarray
    weak_energy: np.ndarray
    classification: str

    def as_dict(self) -> dict:
        return {
            "times": list(map(float, self.times)),
            "energy": list(map(float, self.energy)),
            "modified_energy": list(map(float, self.modified_energy)),
            "total_variation": list(map(float, self.tv)),
            "oleinik_margin": list(map(float, self.oleinik_margin)),
            "weak_momentum": list(map(float, self.weak_momentum)),
            "weak_energy": list(map(float, self.weak_energy)),
            "classification": self.classification,
        }


def diagnose(traj, test_functions=(), M: float = np.inf,
             rtol: float = 1e-4, modified_energy=None) -> DiagnosticsReport:
    """Report for an Eulerian-style trajectory; the classification uses
    weak residuals when test functions are given, otherwise falls back
    to monotonicity of the energy series."""
    ell = traj.spec.ell
    times = np.asarray(traj.times, dtype=float)
    energy = np.array([energy_eulerian(s, ell) for s in traj.states])
    own_series = modified_energy is not None
    if own_series:
        modified_energy = np.asarray(modified_energy, dtype=float)
    else:
        modified_energy = energy.copy()
    tv = np.array([total_variation(s) for s in traj.states])
    margins = np.array([
        oleinik_margin(s, t, M) if (t > 0.0 or np.isfinite(M)) else np.inf
        for t, s in zip(times, traj.states)])
    if test_functions:
        mom, ene = weak_residual(traj, test_functions, ell)
        tol = rtol * residual_scale(traj, ell)
        label = classify_residuals(mom, ene, tol)
    else:
        mom = np.zeros(0)
        ene = np.zeros(0)
        # Solver-provided series (e.g. the Lagrangian energy sum) are
        # exact to the step scheme; reconstructed series carry extra
        # interpolation noise, so prefer the former when present.  The
        # series heuristic is coarser than the residual route, so it
        # gets a floor on its threshold.
        series = modified_energy if own_series else energy
        tol = max(rtol, 1e-3)
        e0 = series[0]
        drift = np.max(np.abs(series - e0)) / e0 if e0 > 0 else 0.0
        rises = np.max(np.diff(series), initial=0.0) / e0 if e0 > 0 else 0.0
        if drift <= tol:
            label = CONSERVATIVE
        elif rises <= tol:
            label = DISSIPATIVE
        else:
            label = INADMISSIBLE
    return DiagnosticsReport(times=times, energy=energy,
                             modified_energy=modified_energy, tv=tv,
                             oleinik_margin=margins, weak_momentum=mom,
                             weak_energy=ene, classification=label)


def series_csv(report: DiagnosticsReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,energy,modified_energy,total_variation,"
                 "oleinik_margin\n")
        for row in zip(report.times, report.energy, report.modified_energy,
                       report.tv, report.oleinik_margin):
            fh.write(",".join(f"{v:.16e}" for v in row) + "\n")
