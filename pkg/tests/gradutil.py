"""Shared finite-difference helpers for the test suite.

The probe <f(x), u> is accumulated with math.fsum over per-element product
differences so outputs untouched by a perturbation cancel bitwise; see
momentpool.grad for the same construction. Errors are reported relative to
the larger of the two gradient magnitudes (floored at 1e-12).
"""

from math import fsum

import numpy as np


def fd_gradient(fn, x, upstream, h=1e-6):
    """Central-difference gradient of <fn(x), upstream> w.r.t. flat x."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64).reshape(-1)
    flat = x.reshape(-1).copy()
    out = np.empty_like(flat)
    for j in range(flat.size):
        saved = flat[j]
        flat[j] = saved + h
        fp = np.asarray(fn(flat.reshape(x.shape))).reshape(-1)
        flat[j] = saved - h
        fm = np.asarray(fn(flat.reshape(x.shape))).reshape(-1)
        flat[j] = saved
        out[j] = fsum(fp * u - fm * u) / (2.0 * h)
    return out.reshape(x.shape)


def rel_gap(analytic, numeric):
    """max |a - n| / max(max|a|, max|n|, 1e-12)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(a).max(), np.abs(n).max(), 1e-12)
    return float(np.abs(a - n).max() / scale)
