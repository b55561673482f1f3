"""Weakly singular traveling waves: cuspons, shock layers, composites.

Profiles solve the first-order wave equation

    u * u_x**2 / 2 = F - S*u + u**3/6

whose right-hand side factors as (u0-u)(u1-u)(u0+u1+u)/6 for the flux
pair F = u0*u1*(u0+u1)/6, S = (u0**2 + u0*u1 + u1**2)/6.  The spatial
coordinate is recovered from the amplitude by the singular quadrature

    H(eta) = int_0^eta sqrt(3v / ((u0-v)(u1-v)(u0+u1+v))) dv,

evaluated with endpoint substitutions that remove the sqrt(v) cusp at
v=0, the inverse-sqrt top for u0 < u1, and the logarithmic tail for
u0 = u1.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from .grid import ConfigError

CUSPON = "cuspon"
PERIODIC_CUSPON = "periodic_cuspon"
SHOCK_LAYER = "shock_layer"
COMPOSITE = "composite"

# table edge: the cuspon amplitude approaches u0 like exp(-x), so the
# last resolvable table node sits this close to the top
TAIL_GAP = 1e-8


class AdmissibilityError(ConfigError):
    """Requested wave violates the flux inequality 3|F| <= (2S)^(3/2)."""


@dataclass(frozen=True)
class TravelingWave:
    kind: str
    u0: float
    u1: float
    S: float
    F: object
    c: float
    ell: float
    profile: tuple
    period: float | None = None
    segments: tuple = ()
    junctions: tuple = ()
    jumps: tuple = ()
    junction_kinds: tuple = ()
    wave_class: str | None = None


@dataclass(frozen=True)
class WaveSegment:
    """One arch of a composite wave: amplitude pair and signed flux."""

    u0: float
    u1: float
    F: float


# -- flux algebra -------------------------------------------------------

def cuspon_flux(u0: float, u1: float) -> tuple[float, float]:
    """Energy and momentum flux pair (F, S) of the (u0, u1) wave family."""
    if not (u0 > 0.0 and np.isfinite(u0)):
        raise ConfigError(f"u0 must be positive, got {u0}")
    if u1 < u0:
        raise ConfigError(f"need u1 >= u0, got ({u0}, {u1})")
    F = u0 * u1 * (u0 + u1) / 6.0
    S = (u0 * u0 + u0 * u1 + u1 * u1) / 6.0
    return F, S


def dissipation_rate(u_minus: float, u_plus: float) -> float:
    """Energy flux drop across a shock layer, cubic in the amplitude."""
    if u_minus <= u_plus:
        raise ConfigError("entropy condition requires u_minus > u_plus")
    return (u_minus - u_plus) ** 3 / 12.0


def admissible(F: float, S: float) -> bool:
    return 0.0 < 3.0 * abs(F) <= (2.0 * S) ** 1.5 * (1.0 + 1e-12)


def has_smooth_periodic_band(S: float, F: float) -> bool:
    """Whether the cubic F - S*u + u^3/6 allows a smooth positive
    oscillation: two positive roots with the cubic positive between
    them.  The factorisation makes this impossible; kept as a check."""
    roots = np.roots([1.0 / 6.0, 0.0, -S, F])
    real = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
    floor = 1e-9 * (1.0 + abs(F) + abs(S))
    for a, b in zip(real[:-1], real[1:]):
        if a > 0.0 and b > a + 1e-6:
            mid = 0.5 * (a + b)
            if mid ** 3 / 6.0 - S * mid + F > floor:
                return True
    return False


# -- singular quadrature for H ------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _gl_cells(edges: np.ndarray, func) -> float:
    """Sum of per-cell Gauss-Legendre integrals over consecutive edges."""
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return float(np.sum(half * (func(pts) @ _GL_WEIGHTS)))


def _lower_integrand(u0, u1):
    # v = w^2 removes the sqrt(v) cusp at the origin
    def g(w):
        v = w * w
        return 2.0 * np.sqrt(3.0) * v / np.sqrt(
            (u0 - v) * (u1 - v) * (u0 + u1 + v))
    return g


def _top_integrand(u0, u1):
    # v = u0 - r^2 removes the inverse-sqrt endpoint when u1 > u0
    def g(r):
        v = u0 - r * r
        return 2.0 * np.sqrt(3.0 * v / ((u1 - v) * (u0 + u1 + v)))
    return g


def _log_integrand(u0):
    # v = u0 (1 - e^{-s}) flattens the logarithmic tail when u1 = u0
    def g(s):
        v = u0 * (1.0 - np.exp(-s))
        return np.sqrt(3.0 * v / (2.0 * u0 + v))
    return g


def wave_profile(eta: float, u0: float, u1: float) -> float:
    """Stretched coordinate H(eta) at which the wave reaches amplitude
    eta; strictly increasing, H(0) = 0."""
    cuspon_flux(u0, u1)
    eta = float(eta)
    if eta < 0.0 or eta >= u0:
        raise ConfigError(f"eta must lie in [0, u0), got {eta}")
    if eta == 0.0:
        return 0.0
    split = 0.5 * u0
    if eta <= split:
        edges = np.linspace(0.0, np.sqrt(eta), 65)
        return _gl_cells(edges, _lower_integrand(u0, u1))
    total = _gl_cells(np.linspace(0.0, np.sqrt(split), 65),
                      _lower_integrand(u0, u1))
    if u1 > u0:
        edges = np.linspace(np.sqrt(u0 - eta), np.sqrt(split), 65)
        total += _gl_cells(edges, _top_integrand(u0, u1))
    else:
        s_hi = -np.log((u0 - eta) / u0)
        edges = np.linspace(np.log(2.0), s_hi, 65)
        total += _gl_cells(edges, _log_integrand(u0))
    return total


@dataclass(frozen=True)
class _ProfileTable:
    u0: float
    u1: float
    etas: np.ndarray
    hs: np.ndarray
    inverse: PchipInterpolator

    @property
    def x_end(self) -> float:
        return float(self.hs[-1])


@lru_cache(maxsize=64)
def _profile_table(u0: float, u1: float) -> _ProfileTable:
    split = 0.5 * u0
    w = np.linspace(0.0, np.sqrt(split), 2048)
    g = _lower_integrand(u0, u1)
    mid = 0.5 * (w[:-1] + w[1:])
    half = 0.5 * np.diff(w)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    low_cells = half * (g(pts) @ _GL_WEIGHTS)
    etas_low = w * w
    hs_low = np.concatenate(([0.0], np.cumsum(low_cells)))

    if u1 > u0:
        r = np.linspace(np.sqrt(split), 0.0, 2049)
        gt = _top_integrand(u0, u1)
        mid = 0.5 * (r[:-1] + r[1:])
        half = 0.5 * np.diff(r)
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        cells = -(half * (gt(pts) @ _GL_WEIGHTS))
        etas_up = u0 - r[1:] ** 2
        hs_up = hs_low[-1] + np.cumsum(cells)
    else:
        s = np.linspace(np.log(2.0), -np.log(TAIL_GAP), 2049)
        gl = _log_integrand(u0)
        mid = 0.5 * (s[:-1] + s[1:])
        half = 0.5 * np.diff(s)
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        cells = half * (gl(pts) @ _GL_WEIGHTS)
        etas_up = u0 * (1.0 - np.exp(-s[1:]))
        hs_up = hs_low[-1] + np.cumsum(cells)

    etas = np.concatenate((etas_low, etas_up))
    hs = np.concatenate((hs_low, hs_up))
    return _ProfileTable(u0, u1, etas, hs, PchipInterpolator(hs, etas))


def _amplitude_at(table: _ProfileTable, x: np.ndarray) -> np.ndarray:
    """eta as a function of the stretched coordinate x >= 0."""
    out = table.inverse(np.clip(x, 0.0, table.x_end))
    if table.u1 == table.u0:
        tail = x > table.x_end
        if np.any(tail):
            gap = table.u0 - table.etas[-1]
            out = np.where(tail,
                           table.u0 - gap * np.exp(-(x - table.x_end)), out)
    return np.asarray(out)


def half_period(u0: float, u1: float) -> float:
    """x* = H(u0), finite for u1 > u0 (+inf for the plain cuspon)."""
    cuspon_flux(u0, u1)
    if u1 == u0:
        return np.inf
    return _profile_table(u0, u1).x_end


# -- samplers -----------------------------------------------------------

def _check_positive(name, value):
    if not (value > 0.0 and np.isfinite(value)):
        raise ConfigError(f"{name} must be positive, got {value}")


def sample_cuspon(u0: float, ell: float, x_grid) -> TravelingWave:
    """Stationary cuspon: even profile with a single cusp at x = 0,
    approaching u0 at both infinities."""
    _check_positive("u0", u0)
    _check_positive("ell", ell)
    xs = np.asarray(x_grid, dtype=float)
    table = _profile_table(float(u0), float(u0))
    us = _amplitude_at(table, np.abs(xs) / ell)
    F, S = cuspon_flux(u0, u0)
    return TravelingWave(kind=CUSPON, u0=float(u0), u1=float(u0), S=S, F=F,
                         c=0.0, ell=float(ell), profile=(xs, us))


def sample_periodic_cuspon(u0: float, u1: float, ell: float) -> TravelingWave:
    """Periodic cuspon with cusps at even multiples of x* ell and smooth
    maxima u0 at odd multiples; sampled over one full period."""
    _check_positive("u0", u0)
    _check_positive("ell", ell)
    if u1 <= u0:
        raise ConfigError("periodic cuspons need u1 > u0; "
                          "use sample_cuspon for u1 == u0")
    table = _profile_table(float(u0), float(u1))
    xstar = table.x_end
    xs = np.linspace(-xstar * ell, xstar * ell, 2049)
    us = _amplitude_at(table, np.abs(xs) / ell)
    F, S = cuspon_flux(u0, u1)
    return TravelingWave(kind=PERIODIC_CUSPON, u0=float(u0), u1=float(u1),
                         S=S, F=F, c=0.0, ell=float(ell), profile=(xs, us),
                         period=2.0 * xstar * ell)


def sample_shock_layer(u_minus: float, u_plus: float, ell: float,
                       x_grid) -> TravelingWave:
    """Monotone layer joining u_minus (left) to u_plus (right), moving
    at the mean speed; built from two half-cuspons of the amplitude
    (u_minus - u_plus)/2 with opposite flux signs."""
    if u_minus <= u_plus:
        raise ConfigError("entropy condition requires u_minus > u_plus")
    _check_positive("ell", ell)
    amp = 0.5 * (u_minus - u_plus)
    c = 0.5 * (u_minus + u_plus)
    xs = np.asarray(x_grid, dtype=float)
    table = _profile_table(amp, amp)
    us = c - np.sign(xs) * _amplitude_at(table, np.abs(xs) / ell)
    F, S = cuspon_flux(amp, amp)
    return TravelingWave(kind=SHOCK_LAYER, u0=amp, u1=amp, S=S, F=(F, -F),
                         c=c, ell=float(ell), profile=(xs, us),
                         junctions=(0.0,), jumps=(-2.0 * F,),
                         junction_kinds=("dissipative",),
                         wave_class="dissipative")


def evaluate_wave(wave: TravelingWave, x) -> np.ndarray:
    """Wave amplitude at arbitrary points (periodic kinds wrap)."""
    xs = np.asarray(x, dtype=float)
    if wave.kind == CUSPON:
        table = _profile_table(wave.u0, wave.u1)
        return _amplitude_at(table, np.abs(xs) / wave.ell)
    if wave.kind == PERIODIC_CUSPON:
        table = _profile_table(wave.u0, wave.u1)
        xstar = table.x_end
        folded = np.mod(xs / wave.ell, 2.0 * xstar)
        tri = xstar - np.abs(folded - xstar)
        return _amplitude_at(table, tri)
    if wave.kind == SHOCK_LAYER:
        table = _profile_table(wave.u0, wave.u1)
        return wave.c - np.sign(xs) * _amplitude_at(table,
                                                    np.abs(xs) / wave.ell)
    if wave.kind == COMPOSITE:
        return _evaluate_composite(wave, xs)
    raise ConfigError(f"unknown wave kind {wave.kind!r}")


# -- composites ---------------------------------------------------------

def _segment_layout(segments: tuple[WaveSegment, ...], ell: float):
    """Junction positions with segment i between junction i-1 and i;
    half-infinite tails hang off the two ends."""
    widths = []
    for k, seg in enumerate(segments):
        interior = 0 < k < len(segments) - 1
        if seg.u1 == seg.u0:
            if interior:
                raise ConfigError("interior segments must be finite "
                                  "arches (u1 > u0)")
            widths.append(np.inf)
        else:
            widths.append(2.0 * half_period(seg.u0, seg.u1) * ell)
    junctions = [0.0]
    for w in widths[1:-1]:
        junctions.append(junctions[-1] + w)
    if len(segments) == 1:
        junctions = []
    return tuple(junctions), tuple(widths)


def _evaluate_composite(wave: TravelingWave, xs: np.ndarray) -> np.ndarray:
    out = np.empty_like(xs)
    junctions = np.asarray(wave.junctions)
    idx = np.searchsorted(junctions, xs)
    for k, seg in enumerate(wave.segments):
        mask = idx == k
        if not np.any(mask):
            continue
        table = _profile_table(seg.u0, seg.u1)
        local = xs[mask]
        if k == 0:
            dist = (junctions[0] - local) / wave.ell
        elif k == len(wave.segments) - 1:
            dist = (local - junctions[-1]) / wave.ell
        else:
            left, right = junctions[k - 1], junctions[k]
            xstar = 0.5 * (right - left)
            dist = (xstar - np.abs(local - left - xstar)) / wave.ell
        out[mask] = np.sign(seg.F) * _amplitude_at(table, dist)
    return out


def compose_wave(segments, ell: float = 1.0) -> TravelingWave:
    """Join cuspon arches at zeros of u; junction flux jumps classify
    the wave.  A falling flux sequence is dissipative; any rising jump
    generates energy, and a non-monotone flux violates the one-sided
    slope bound."""
    _check_positive("ell", ell)
    segs = tuple(WaveSegment(float(s.u0), float(s.u1), float(s.F))
                 if isinstance(s, WaveSegment)
                 else WaveSegment(*map(float, s)) for s in segments)
    if not segs:
        raise ConfigError("need at least one segment")
    pairs = [cuspon_flux(s.u0, s.u1) for s in segs]
    S = pairs[0][1]
    for (Fmag, Sk), seg in zip(pairs, segs):
        if abs(Sk - S) > 1e-12 * max(1.0, abs(S)):
            raise ConfigError("segments must share the momentum flux S")
        if not admissible(seg.F, Sk):
            raise AdmissibilityError(
                f"segment flux {seg.F} violates 3|F| <= (2S)^(3/2)")
        if abs(abs(seg.F) - Fmag) > 1e-10 * max(1.0, Fmag):
            raise ConfigError(
                f"segment flux {seg.F} does not match the ({seg.u0}, "
                f"{seg.u1}) family value {Fmag}")

    if len(segs) == 1:
        seg = segs[0]
        if seg.u1 == seg.u0:
            span = 8.0 * max(ell, seg.u0 * ell)
            return sample_cuspon(seg.u0, ell, np.linspace(-span, span, 2049))
        return sample_periodic_cuspon(seg.u0, seg.u1, ell)

    junctions, widths = _segment_layout(segs, ell)
    jumps = tuple(b.F - a.F for a, b in zip(segs[:-1], segs[1:]))
    kinds = tuple("dissipative" if d < 0.0 else
                  "conservative" if d == 0.0 else "energy_generating"
                  for d in jumps)
    if all(d == 0.0 for d in jumps):
        wave_class = "conservative"
    elif all(d <= 0.0 for d in jumps):
        wave_class = "dissipative"
    else:
        wave_class = "nonmonotone"

    tail = 8.0 * ell * max(s.u0 for s in segs)
    xs_parts = []
    for k, width in enumerate(widths):
        if k == 0:
            xs_parts.append(np.linspace(junctions[0] - tail, junctions[0],
                                        513))
        elif k == len(widths) - 1:
            xs_parts.append(np.linspace(junctions[-1], junctions[-1] + tail,
                                        513)[1:])
        else:
            xs_parts.append(np.linspace(junctions[k - 1], junctions[k],
                                        513)[1:])
    xs = np.concatenate(xs_parts)
    wave = TravelingWave(kind=COMPOSITE, u0=segs[0].u0, u1=segs[0].u1, S=S,
                         F=tuple(s.F for s in segs), c=0.0, ell=float(ell),
                         profile=(xs, np.empty_like(xs)), period=None,
                         segments=segs, junctions=junctions, jumps=jumps,
                         junction_kinds=kinds, wave_class=wave_class)
    us = _evaluate_composite(wave, xs)
    return replace(wave, profile=(xs, us))


# -- derived quantities -------------------------------------------------

def _segment_ids(wave: TravelingWave, xs: np.ndarray) -> np.ndarray:
    if wave.kind == COMPOSITE:
        return np.searchsorted(np.asarray(wave.junctions), xs)
    if wave.kind == SHOCK_LAYER:
        return (xs > 0.0).astype(int)
    return np.zeros(xs.size, dtype=int)


def _segment_flux(wave: TravelingWave, ids: np.ndarray) -> np.ndarray:
    if isinstance(wave.F, tuple):
        return np.asarray(wave.F, dtype=float)[ids]
    return np.full(ids.size, float(wave.F))


def wave_slope(wave: TravelingWave) -> np.ndarray:
    """Analytic u_x at the sampled profile points; NaN at cusps."""
    xs, us = wave.profile
    ids = _segment_ids(wave, xs)
    fs = _segment_flux(wave, ids)
    rel = us - (wave.c if wave.kind == SHOCK_LAYER else 0.0)
    cubic = fs - wave.S * rel + rel ** 3 / 6.0
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.sqrt(np.maximum(2.0 * cubic / rel, 0.0))
    mag = np.where(rel == 0.0, np.nan, mag)
    direction = np.sign(np.gradient(us, xs))
    return direction * mag


def infer_flux(us: np.ndarray, uxs: np.ndarray) -> tuple[float, float]:
    """Least-squares (F, S) from profile samples via the wave equation."""
    A = np.column_stack((np.ones(us.size), -us))
    b = 0.5 * us * uxs ** 2 - us ** 3 / 6.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return float(sol[0]), float(sol[1])


def fit_cusp_exponent(xs: np.ndarray, us: np.ndarray) -> float:
    """Log-log slope of |u| against |x| near a cusp at x = 0."""
    mask = (np.abs(xs) > 0) & (np.abs(us) > 0)
    slope, _ = np.polyfit(np.log(np.abs(xs[mask])),
                          np.log(np.abs(us[mask])), 1)
    return float(slope)


def export_csv(wave: TravelingWave, path) -> None:
    """Profile table: x, u, u_x, segment id, segment flux."""
    xs, us = wave.profile
    ids = _segment_ids(wave, xs)
    fs = _segment_flux(wave, ids)
    uxs = wave_slope(wave)
    with open(path, "w") as fh:
        fh.write("x,u,u_x,segment,F_segment\n")
        for x, u, ux, sid, f in zip(xs, us, uxs, ids, fs):
            fh.write(f"{x:.16e},{u:.16e},{ux:.16e},{sid},{f:.16e}\n")
