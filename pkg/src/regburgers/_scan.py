"""Compiled first-order recurrence sweeps used by the exponential smoothers.

Both convolution modules reduce the kernel integral to a pair of causal
recursions

    A[i+1] = d[i] * A[i] + sa[i]        (left to right)
    B[i]   = d[i] * B[i+1] + sb[i]      (right to left)

with per-interval decay factors d[i] = exp(-step[i] / ell).  The loops are
inherently sequential, so they live here behind numba.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def causal_sweeps(d, sa, sb, a0, b_last):
    """Run both recursions; returns (A, B) with len(d) + 1 entries each."""
    n = d.size + 1
    a = np.empty(n)
    b = np.empty(n)
    a[0] = a0
    for i in range(n - 1):
        a[i + 1] = d[i] * a[i] + sa[i]
    b[n - 1] = b_last
    for i in range(n - 2, -1, -1):
        b[i] = d[i] * b[i + 1] + sb[i]
    return a, b
