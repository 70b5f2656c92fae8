"""Central moments of small value multisets, with analytic gradients.

For m values x_1..x_m the statistics are population-style:

    m1 = (1/m) sum x_j                      (the mean)
    mi = (1/m) sum (x_j - m1)^i   i = 2..4  (central moments)

Computation is two-pass (mean first, then centered power sums) because the
raw-moment expansion of the fourth moment cancels catastrophically for
large means. Sums use exact accumulation (math.fsum), which makes the
results independent of input order outright.

Gradients follow from differentiating under the sum:

    d m1 / d x_j = 1/m
    d mi / d x_j = (i/m) * ((x_j - m1)^(i-1) - m_{i-1})   i >= 2

with m_1 read as 0 inside the recurrence (the first central moment
vanishes identically).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum

import numpy as np

MAX_ORDER = 4


@dataclass(frozen=True)
class MomentVector:
    """Mean and central moments of one window; orders above `n` stay 0."""

    m1: float
    m2: float
    m3: float
    m4: float
    count: int

    def by_order(self, i: int) -> float:
        return (self.m1, self.m2, self.m3, self.m4)[i - 1]


def _check_order(n: int) -> None:
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"moment order must be 1..{MAX_ORDER}, got {n}")


def central_moments(values, n: int) -> MomentVector:
    """Mean and central moments up to order `n` of a non-empty multiset."""
    _check_order(n)
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    m = x.size
    if m == 0:
        raise ValueError("cannot compute moments of an empty multiset")
    mean = fsum(x) / m
    m2 = m3 = m4 = 0.0
    if n >= 2:
        dev = x - mean
        d2 = dev * dev
        m2 = fsum(d2) / m
        if n >= 3:
            m3 = fsum(d2 * dev) / m
        if n >= 4:
            m4 = fsum(d2 * d2) / m
    return MomentVector(m1=mean, m2=m2, m3=m3, m4=m4, count=m)


def moment_gradients(values, n: int) -> list[np.ndarray]:
    """Per-order, per-element partial derivatives of the moments.

    Returns a list of `n` arrays; entry i-1 holds d m_i / d x_j.
    """
    _check_order(n)
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    m = x.size
    if m == 0:
        raise ValueError("cannot differentiate moments of an empty multiset")
    mv = central_moments(x, max(1, n - 1))
    dev = x - mv.m1
    grads = [np.full(m, 1.0 / m)]
    if n >= 2:
        grads.append((2.0 / m) * dev)
    if n >= 3:
        grads.append((3.0 / m) * (dev * dev - mv.m2))
    if n >= 4:
        grads.append((4.0 / m) * (dev * dev * dev - mv.m3))
    return grads
