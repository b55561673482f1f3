"""regburgers: a numerical laboratory for the regularised Burgers equation.

The model is u_t + u u_x + ell^2 P_x = 0 with nonlocal pressure
P = G * (u_x^2 / 2), G(x) = exp(-|x|/ell) / (2 ell).  The package provides

* the O(n) exponential smoother behind P and P_x,
* an Eulerian method-of-lines solver with gradient blow-up detection,
* conservative and dissipative solvers in slope-angle Lagrangian variables,
* closed-form traveling waves (cuspons, periodic cuspons, shock layers),
* Burgers and Hunter-Saxton reference models for the ell -> 0 / infinity
  limits, and
* diagnostics: energies, total variation, one-sided slope bounds and
  weak-form residual classification.
"""
from .grid import (COMPACT, PERIODIC, ConfigError, GridFunction1D, NumericsError,
                   compact_grid, periodic_grid, sample)
from .convolution import KernelSpec, compute_P, compute_Px, green_kernel

__version__ = "0.1.0"

__all__ = [
    "COMPACT",
    "PERIODIC",
    "ConfigError",
    "GridFunction1D",
    "KernelSpec",
    "NumericsError",
    "compact_grid",
    "compute_P",
    "compute_Px",
    "green_kernel",
    "periodic_grid",
    "sample",
    "__version__",
]
