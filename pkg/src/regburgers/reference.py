"""Reference solutions for the two kernel-width limits.

Small widths approach entropy solutions of inviscid Burgers, computed
here by exact characteristics before shock formation and by a
first-order Godunov scheme after.  Large widths approach the
Hunter-Saxton equation, integrated in closed form along characteristics
with the forcing normalised as the antisymmetric mean

    u_t + u u_x = (1/4) (int_{-inf}^x - int_x^{inf}) u_y^2 dy,

which is the pointwise large-width limit of the nonlocal pressure
gradient.  ``limit_study`` drives the dissipative solver down or up a
width ladder and tabulates distances to the matching reference.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diagnostics import _bump
from .grid import ConfigError, GridFunction1D
from .lagrangian import (
    DISSIPATIVE,
    cell_weights,
    evolve,
    init_lagrangian,
    lagrangian_P,
    reconstruct_eulerian,
)


# -- inviscid Burgers ----------------------------------------------------

@dataclass(frozen=True)
class RiemannDatum:
    u_left: float
    u_right: float

    def __post_init__(self):
        if not (np.isfinite(self.u_left) and np.isfinite(self.u_right)):
            raise ConfigError("Riemann states must be finite")


def burgers_riemann(d: RiemannDatum, xi):
    """Entropy solution at the similarity coordinate xi = x/t."""
    xi = np.asarray(xi, dtype=float)
    if d.u_left > d.u_right:
        speed = 0.5 * (d.u_left + d.u_right)
        out = np.where(xi < speed, d.u_left, d.u_right)
    else:
        out = np.clip(xi, d.u_left, d.u_right)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GodunovConfig:
    cfl: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"CFL number must lie in (0, 1], got {self.cfl}")


def _godunov_flux(ul: np.ndarray, ur: np.ndarray) -> np.ndarray:
    left = 0.5 * np.maximum(ul, 0.0) ** 2
    right = 0.5 * np.minimum(ur, 0.0) ** 2
    return np.maximum(left, right)


def burgers_godunov(u0: GridFunction1D, t_end: float,
                    cfg: GodunovConfig | None = None,
                    output_times: Sequence[float] | None = None):
    """First-order Godunov evolution of Burgers with outflow edges.

    Returns the state at ``t_end``, or the list of states at
    ``output_times`` when given.
    """
    if cfg is None:
        cfg = GodunovConfig()
    if t_end < 0.0:
        raise ConfigError("t_end must be nonnegative")
    outputs = None
    if output_times is not None:
        outputs = np.asarray(sorted(output_times), dtype=float)
        if outputs.size and (outputs[0] < 0.0 or outputs[-1] > t_end + 1e-12):
            raise ConfigError("output times must lie inside [0, t_end]")
    u = u0.values.copy()
    h = u0.h
    speed = float(np.max(np.abs(u)))
    stored = []
    t = 0.0
    next_out = 0

    def capture(tn):
        nonlocal next_out
        while outputs is not None and next_out < outputs.size \
                and tn >= outputs[next_out] - 1e-12:
            stored.append(u0.with_values(u.copy()))
            next_out += 1

    capture(0.0)
    while t < t_end - 1e-14:
        if speed == 0.0:
            t = t_end
            capture(t)
            break
        dt = min(cfg.cfl * h / speed, t_end - t)
        if outputs is not None and next_out < outputs.size:
            dt = min(dt, outputs[next_out] - t)
        padded = np.concatenate(([u[0]], u, [u[-1]]))
        flux = _godunov_flux(padded[:-1], padded[1:])
        u -= (dt / h) * (flux[1:] - flux[:-1])
        t += dt
        capture(t)
    if outputs is not None:
        while next_out < outputs.size:
            stored.append(u0.with_values(u.copy()))
            next_out += 1
        return stored
    return u0.with_values(u)


def shock_formation_time(u0: GridFunction1D) -> float:
    """1 / sup(-u0') for falling data, inf otherwise."""
    m = float(np.min(u0.derivative().values))
    return np.inf if m >= 0.0 else -1.0 / m


def burgers_characteristics(u0: GridFunction1D, t: float,
                            xs: np.ndarray | None = None) -> GridFunction1D:
    """Exact smooth solution by inverting x0 + t u0(x0), valid before
    shock formation only."""
    if t < 0.0:
        raise ConfigError("t must be nonnegative")
    if t >= shock_formation_time(u0):
        raise ConfigError("characteristics cross at "
                          f"t = {shock_formation_time(u0):.6g}; "
                          "use the Godunov reference past that time")
    if xs is None:
        xs = u0.xs
    mapped = u0.xs + t * u0.values
    u = np.interp(xs, mapped, u0.values)
    return GridFunction1D(np.asarray(xs, dtype=float), u, u0.boundary, u0.pad)


# -- Hunter-Saxton characteristics --------------------------------------

@dataclass(frozen=True)
class HSState:
    x0: np.ndarray
    eta: np.ndarray
    u: np.ndarray
    p: np.ndarray
    t: float


def hs_blowup_time(u0: GridFunction1D) -> float:
    m = float(np.min(u0.derivative().values))
    return np.inf if m >= 0.0 else -2.0 / m


def _hs_arrays(u0: GridFunction1D):
    x0 = u0.xs
    p0 = u0.derivative().values
    dens = p0 * p0
    h = u0.h
    cells = 0.5 * h * (dens[:-1] + dens[1:])
    cum = np.concatenate(([0.0], np.cumsum(cells)))
    total = cum[-1]
    forcing = 0.25 * (2.0 * cum - total)
    return x0, p0, forcing


def hunter_saxton_evolve(u0: GridFunction1D, t_end: float) -> HSState:
    """Closed-form characteristics: the slope density p^2 d(eta) is
    conserved per cell, so the forcing is constant along each path."""
    if t_end < 0.0:
        raise ConfigError("t_end must be nonnegative")
    tb = hs_blowup_time(u0)
    if t_end >= tb:
        raise ConfigError(f"slopes blow up at t = {tb:.6g}; evolve only "
                          "strictly before that time")
    x0, p0, forcing = _hs_arrays(u0)
    u = u0.values + t_end * forcing
    eta = x0 + t_end * u0.values + 0.5 * t_end ** 2 * forcing
    p = p0 / (1.0 + 0.5 * t_end * p0)
    return HSState(x0=x0, eta=eta, u=u, p=p, t=t_end)


def hs_energy_series(u0: GridFunction1D, times) -> np.ndarray:
    """Surviving slope energy sum(p0^2 dx0 over cells with
    1 + t p0/2 > 0); the dissipative continuation drops each cell's
    share at its crossing time."""
    p0 = u0.derivative().values
    h = u0.h
    dens = p0 * p0
    cells = 0.5 * h * (dens[:-1] + dens[1:])
    p0min = np.minimum(p0[:-1], p0[1:])
    out = np.zeros(len(times))
    for k, t in enumerate(times):
        alive = 1.0 + 0.5 * t * p0min > 0.0
        out[k] = float(np.sum(cells[alive]))
    return out


# -- width-ladder study --------------------------------------------------

@dataclass(frozen=True)
class LimitRow:
    ell: float
    l1_distance: float
    mu_proxy: float
    nu_gap: float
    runtime_seconds: float


def _region_bump(region, y):
    a, b = region
    center = 0.5 * (a + b)
    width = 0.5 * (b - a)
    return _bump((np.asarray(y) - center) / width)


def _lagrangian_integrals(state, region, ell):
    """mu-proxy int(ell^2 P) over the region and the defect gap
    |int(P phi)| against the region bump, both as sums over cells."""
    p, _ = lagrangian_P(state)
    w = cell_weights(state) * np.cos(0.5 * state.v) ** 2 * state.dxi
    a, b = region
    inside = (state.y >= a) & (state.y <= b)
    mu = float(ell * ell * np.sum(p[inside] * w[inside]))
    nu = abs(float(np.sum(p * _region_bump(region, state.y) * w)))
    return mu, nu


def _one_rung(u0, ell, t, region, xs_sub, u_ref, xi_count, dt):
    start = time.perf_counter()
    state = init_lagrangian(u0, xi_count, ell, variant=DISSIPATIVE)
    final = evolve(state, t, dt, output_times=[t])[-1]
    u_rec, _ = reconstruct_eulerian(final, xs_sub)
    l1 = float(np.trapezoid(np.abs(u_rec.values - u_ref), xs_sub))
    mu, nu = _lagrangian_integrals(final, region, ell)
    return LimitRow(ell=ell, l1_distance=l1, mu_proxy=mu, nu_gap=nu,
                    runtime_seconds=time.perf_counter() - start)


def limit_study(u0: GridFunction1D, ells: Sequence[float], t: float,
                region: tuple, xi_count: int = 4096, dt: float = 2e-3,
                threads: int = 1) -> list:
    """Distance table down (to Burgers) or up (to Hunter-Saxton) a
    strictly monotone width ladder; one row per width."""
    ells = [float(e) for e in ells]
    if len(ells) < 1 or any(e <= 0.0 for e in ells):
        raise ConfigError("width ladder must hold positive entries")
    diffs = np.diff(ells)
    if len(ells) > 1 and not (np.all(diffs < 0.0) or np.all(diffs > 0.0)):
        raise ConfigError("width ladder must be strictly monotone")
    if t <= 0.0:
        raise ConfigError("comparison time must be positive")
    a, b = region
    if not a < b:
        raise ConfigError("region must satisfy a < b")
    mask = (u0.xs >= a) & (u0.xs <= b)
    if np.count_nonzero(mask) < 4:
        raise ConfigError("region holds too few comparison nodes")
    xs_sub = u0.xs[mask]

    toward_burgers = len(ells) == 1 or ells[-1] < ells[0]
    if toward_burgers:
        if t < 0.999 * shock_formation_time(u0):
            ref = burgers_characteristics(u0, t, xs_sub)
        else:
            ref = burgers_godunov(u0, t)
            ref = GridFunction1D(xs_sub, ref.values[mask])
        u_ref = ref.values
    else:
        hs = hunter_saxton_evolve(u0, t)
        u_ref = np.interp(xs_sub, hs.eta, hs.u)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_one_rung, u0, e, t, region, xs_sub,
                                   u_ref, xi_count, dt) for e in ells]
            return [f.result() for f in futures]
    return [_one_rung(u0, e, t, region, xs_sub, u_ref, xi_count, dt)
            for e in ells]


def limit_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write("ell,L1_distance,mu_proxy,nu_gap,runtime_seconds\n")
        for r in rows:
            fh.write(f"{r.ell:.16e},{r.l1_distance:.16e},"
                     f"{r.mu_proxy:.16e},{r.nu_gap:.16e},"
                     f"{r.runtime_seconds:.6f}\n")
