"""Green's-kernel smoother: closed forms, dense-quadrature oracle, bounds."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from regburgers import (COMPACT, PERIODIC, ConfigError, GridFunction1D,
                        KernelSpec, compact_grid, compute_P, compute_Px,
                        green_kernel, periodic_grid, sample)
from regburgers.convolution import exp_sweeps, source_weights


# -- direct O(n^2) quadrature oracles ----------------------------------
#
# Brute-force cell-by-cell convolution of the piecewise-linear source
# interpolant: per target point, sum the closed-form integral over every
# cell, decayed from the cell edge facing the target.

def _direct_sided(xs, f, ell):
    h = xs[1] - xs[0]
    far, near = source_weights(h / ell)
    cell_lo = h * (far * f[:-1] + near * f[1:])   # seen from the right
    cell_hi = h * (near * f[:-1] + far * f[1:])   # seen from the left
    left = np.zeros(xs.size)
    right = np.zeros(xs.size)
    for i in range(xs.size):
        dl = (xs[i] - xs[1:i + 1]) / ell          # distance to cell tops
        left[i] = np.sum(np.exp(-dl) * cell_lo[:i])
        dr = (xs[i:-1] - xs[i]) / ell             # distance to cell bottoms
        right[i] = np.sum(np.exp(-dr) * cell_hi[i:])
    return left, right


def direct_P_compact(xs, f, ell):
    left, right = _direct_sided(xs, f, ell)
    return (left + right) / (2.0 * ell)


def direct_Px_compact(xs, f, ell):
    left, right = _direct_sided(xs, f, ell)
    return (right - left) / (2.0 * ell ** 2)


def direct_P_periodic(xs, f, ell, length):
    h = xs[1] - xs[0]
    n = xs.size
    far, near = source_weights(h / ell)
    fx = np.concatenate([f, f[:1]])
    cell_lo = h * (far * fx[:-1] + near * fx[1:])
    cell_hi = h * (near * fx[:-1] + far * fx[1:])
    out = np.empty(n)
    geom = 1.0 - np.exp(-length / ell)
    j = np.arange(n)
    for i in range(n):
        # exact cell distances in whole cells (float mod wraps unstably at 0)
        dl = h * np.mod(i - j - 1, n) / ell        # target to cell top, leftward cells
        dr = h * np.mod(j - i, n) / ell            # cell bottom to target, rightward
        out[i] = np.sum(np.exp(-dl) * cell_lo + np.exp(-dr) * cell_hi) / geom
    return out / (2.0 * ell)


# -- kernel basics ------------------------------------------------------

def test_kernel_peak_value():
    assert green_kernel(0.0, KernelSpec(0.5)) == pytest.approx(1.0)
    assert green_kernel(0.0, KernelSpec(2.0)) == pytest.approx(0.25)


def test_kernel_normalisation():
    for ell in (0.25, 1.0, 3.0):
        spec = KernelSpec(ell)
        val, _ = quad(lambda x: green_kernel(x, spec), -np.inf, np.inf)
        assert abs(val - 1.0) < 1e-10


def test_kernel_symmetry_and_scaling():
    spec = KernelSpec(0.7)
    xs = np.linspace(-3, 3, 101)
    np.testing.assert_allclose(green_kernel(xs, spec), green_kernel(-xs, spec))
    # G_ell(x) = G_1(x/ell) / ell
    np.testing.assert_allclose(green_kernel(xs, spec),
                               green_kernel(xs / 0.7, KernelSpec(1.0)) / 0.7)


def test_kernel_invalid_inputs():
    for bad in (0.0, -1.0, np.inf, np.nan):
        with pytest.raises(ConfigError):
            KernelSpec(bad)
    with pytest.raises(ConfigError):
        green_kernel(np.nan, KernelSpec(1.0))


# -- compute_P closed forms --------------------------------------------

def test_constant_u_gives_zero_pressure():
    spec = KernelSpec(1.0)
    xs = periodic_grid(0.0, 2 * np.pi, 256)
    up = GridFunction1D(xs, np.full(xs.size, 3.2), PERIODIC)
    assert np.max(np.abs(compute_P(up, spec).values)) < 1e-14
    xc = compact_grid(-5, 5, 256)
    uc = GridFunction1D(xc, np.full(xc.size, -1.5), COMPACT)
    assert np.max(np.abs(compute_P(uc, spec).values)) < 1e-14


def test_sine_pressure_closed_form():
    # u = sin x, ell = 1: u_x^2/2 = 1/4 + cos(2x)/4, and the kernel acts as
    # the Fourier multiplier 1/(1 + k^2), so P = 1/4 + cos(2x)/20.
    spec = KernelSpec(1.0)
    xs = periodic_grid(0.0, 2 * np.pi, 1024)
    u = GridFunction1D(xs, np.sin(xs), PERIODIC)
    p = compute_P(u, spec).values
    expected = 0.25 + np.cos(2 * xs) / 20.0
    assert np.max(np.abs(p - expected)) < 1e-6
    px = compute_Px(u, spec).values
    assert np.max(np.abs(px - (-np.sin(2 * xs) / 10.0))) < 1e-5


def test_sine_pressure_matches_direct_quadrature():
    spec = KernelSpec(1.0)
    xs = periodic_grid(0.0, 2 * np.pi, 512)
    u = GridFunction1D(xs, np.sin(xs), PERIODIC)
    p = compute_P(u, spec).values
    f = 0.5 * u.derivative().values ** 2
    ref = direct_P_periodic(xs, f, 1.0, 2 * np.pi)
    np.testing.assert_allclose(p, ref, rtol=1e-10, atol=1e-13)


def test_hat_source_closed_form_value():
    # source f = 1/2 on [-1, 1] (u_x = 1 there), ell = 1:
    # P(0) = (1 - exp(-1)) / 2.  Jump nodes carry the midpoint value so the
    # trapezoid mass of the source is exact.
    n = 4801
    xs = compact_grid(-6.0, 6.0, n)
    f = np.where(np.abs(xs) < 1.0, 0.5, 0.0)
    f[np.isclose(np.abs(xs), 1.0)] = 0.25
    a, b = exp_sweeps(f, xs[1] - xs[0], 1.0, COMPACT)
    p = (a + b) / 2.0
    i0 = n // 2
    assert xs[i0] == 0.0
    assert abs(p[i0] - 0.5 * (1.0 - np.exp(-1.0))) < 1e-6


def test_sweeps_equal_direct_quadrature_compact():
    rng = np.random.default_rng(7)
    for n in (257, 1024, 2048):
        xs = compact_grid(-8.0, 8.0, n)
        u = np.exp(-xs ** 2) * (1.0 + 0.3 * np.sin(3 * xs))
        gf = GridFunction1D(xs, u, COMPACT)
        ell = float(rng.uniform(0.3, 2.0))
        spec = KernelSpec(ell)
        f = 0.5 * gf.derivative().values ** 2
        p = compute_P(gf, spec).values
        px = compute_Px(gf, spec).values
        pref = direct_P_compact(xs, f, ell)
        pxref = direct_Px_compact(xs, f, ell)
        scale = np.max(np.abs(pref))
        assert np.max(np.abs(p - pref)) < 1e-10 * scale
        assert np.max(np.abs(px - pxref)) < 1e-10 * max(np.max(np.abs(pxref)), scale)


# -- invariants ---------------------------------------------------------

def _random_periodic(seed):
    rng = np.random.default_rng(seed)
    xs = periodic_grid(0.0, 2 * np.pi, 256)
    vals = np.zeros(xs.size)
    for k in range(1, 6):
        vals += rng.normal(0, 1.0 / k) * np.sin(k * xs + rng.uniform(0, 2 * np.pi))
    return GridFunction1D(xs, vals, PERIODIC)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0.2, 3.0))
def test_pressure_nonnegative(seed, ell):
    u = _random_periodic(seed)
    p = compute_P(u, KernelSpec(ell)).values
    assert np.min(p) > -1e-12 * max(np.max(p), 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0.2, 3.0))
def test_pressure_young_bounds(seed, ell):
    u = _random_periodic(seed)
    ux = u.derivative().values
    p = compute_P(u, KernelSpec(ell)).values
    length = u.period
    sup_bound = 0.5 * np.max(ux ** 2)              # ||G||_1 ||f||_inf
    # periodic image sum: sup of the wrapped kernel is coth(L/2ell)/(2ell)
    sup_kernel = np.cosh(length / (2 * ell)) / np.sinh(length / (2 * ell)) / (2 * ell)
    l1_bound = u.h * np.sum(0.5 * ux ** 2) * sup_kernel
    # discrete quadrature may overshoot the continuum bound by O((h/ell)^2)
    slack = (u.h / ell) ** 2 * sup_bound + 1e-12
    assert np.max(p) <= min(sup_bound, l1_bound) + slack


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 255))
def test_translation_equivariance(seed, shift):
    u = _random_periodic(seed)
    spec = KernelSpec(0.8)
    rolled = u.with_values(np.roll(u.values, shift))
    p_of_rolled = compute_P(rolled, spec).values
    rolled_p = np.roll(compute_P(u, spec).values, shift)
    assert np.max(np.abs(p_of_rolled - rolled_p)) < 1e-12


def _helmholtz_residual(n, boundary):
    spec = KernelSpec(0.6)
    if boundary == PERIODIC:
        xs = periodic_grid(0.0, 2 * np.pi, n)
        u = GridFunction1D(xs, np.sin(xs) + 0.4 * np.cos(2 * xs), PERIODIC)
    else:
        xs = compact_grid(-8.0, 8.0, n)
        u = GridFunction1D(xs, np.exp(-xs ** 2), COMPACT)
    p = compute_P(u, spec)
    ux = u.derivative().values
    res = p.values - spec.ell ** 2 * p.second_derivative().values - 0.5 * ux ** 2
    return np.max(np.abs(res))


@pytest.mark.parametrize("boundary", [PERIODIC, COMPACT])
def test_helmholtz_identity_second_order(boundary):
    # P - ell^2 P_xx = u_x^2 / 2; the sweep quadrature error is O(h^2)
    errs = [_helmholtz_residual(n, boundary) for n in (256, 512, 1024)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert errs[-1] < errs[0]
    assert np.all(orders > 1.9)


def test_px_is_derivative_of_p():
    # two independent routes to P_x agree to their shared O(h^2) accuracy
    spec = KernelSpec(0.8)
    xs = periodic_grid(0.0, 2 * np.pi, 1024)
    u = GridFunction1D(xs, np.sin(xs), PERIODIC)
    px = compute_Px(u, spec).values
    p_prime = compute_P(u, spec).derivative().values
    assert np.max(np.abs(px - p_prime)) < 1e-5


def test_sample_helper_roundtrip():
    xs = compact_grid(-4, 4, 128)
    gf = sample(np.cos, xs)
    np.testing.assert_allclose(gf.values, np.cos(xs))
    assert gf.boundary == COMPACT
