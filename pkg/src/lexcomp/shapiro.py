"""Shapiro-Wilk W statistic, computed with Royston's polynomial approximation.

The W statistic measures how consistent a sample is with a normal
distribution: values near 1 indicate near-normality, low values indicate
multi-modal or otherwise non-Gaussian shapes. We apply it per annotation
distribution, so inputs are small (typically 4-30 values) and heavily tied;
the standard algorithm is used unchanged on such data.
"""

from __future__ import annotations

import math
from statistics import NormalDist

__all__ = ["shapiro_wilk", "MAX_SAMPLE_SIZE"]

# Royston's approximation is calibrated for sample sizes up to 5000.
MAX_SAMPLE_SIZE = 5000

_NORMAL = NormalDist()

# Polynomial corrections for the two extreme weights, low-order term first.
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


def _polyval(coeffs: tuple[float, ...], u: float) -> float:
    total = 0.0
    for k, c in enumerate(coeffs):
        total += c * u**k
    return total


def shapiro_wilk(values) -> float | None:
    """Return the Shapiro-Wilk W statistic in (0, 1], or None when undefined.

    W is undefined (None) for fewer than 3 values or for a zero-variance
    sample; it is never reported as 0 in those cases. Samples larger than
    MAX_SAMPLE_SIZE raise ValueError because the weight approximation is
    not calibrated there.
    """
    x = sorted(float(v) for v in values)
    n = len(x)
    if n < 3:
        return None
    if n > MAX_SAMPLE_SIZE:
        raise ValueError(f"sample size {n} exceeds supported maximum {MAX_SAMPLE_SIZE}")

    mean = math.fsum(x) / n
    sse = math.fsum((v - mean) ** 2 for v in x)
    if sse <= 0.0:
        return None

    a = _weights(n)
    num = math.fsum(w * v for w, v in zip(a, x)) ** 2
    w_stat = num / sse
    # Guard against rounding slightly above 1 for near-perfectly normal data.
    return min(w_stat, 1.0)


def _weights(n: int) -> list[float]:
    """Best linear unbiased coefficients for the sorted sample, per Royston."""
    if n == 3:
        r = math.sqrt(0.5)
        return [-r, 0.0, r]

    # Expected normal order statistics via the Blom-style plotting positions.
    m = [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    mm = math.fsum(v * v for v in m)
    rmm = math.sqrt(mm)
    u = 1.0 / math.sqrt(n)

    a = [0.0] * n
    a_n = m[n - 1] / rmm + _polyval(_C1, u)
    if n > 5:
        a_n1 = m[n - 2] / rmm + _polyval(_C2, u)
        phi = (mm - 2.0 * m[n - 1] ** 2 - 2.0 * m[n - 2] ** 2) / (
            1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
        )
        a[n - 1] = a_n
        a[n - 2] = a_n1
        a[0] = -a_n
        a[1] = -a_n1
        inner = range(2, n - 2)
    else:
        phi = (mm - 2.0 * m[n - 1] ** 2) / (1.0 - 2.0 * a_n**2)
        a[n - 1] = a_n
        a[0] = -a_n
        inner = range(1, n - 1)

    rphi = math.sqrt(phi)
    for i in inner:
        a[i] = m[i] / rphi
    return a
