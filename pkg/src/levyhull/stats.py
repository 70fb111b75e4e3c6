"""Statistical machinery for the verification suite: empirical CDFs, the
two-sample Kolmogorov-Smirnov test with asymptotic p-values, normal
confidence intervals, and heavy-tail slope estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import SampleSizeError

__all__ = [
    "KsResult",
    "TailFitResult",
    "ecdf",
    "ks_two_sample",
    "ks_distance_to_cdf",
    "kolmogorov_pvalue",
    "mean_ci",
    "variance_se",
    "tail_slope",
    "hill_tail_index",
]

_MIN_KS_SIZE = 35


@dataclass(frozen=True)
class KsResult:
    statistic: float
    n: int
    m: int
    p_value: float


@dataclass(frozen=True)
class TailFitResult:
    slope: float
    intercept: float
    q_lo: float
    q_hi: float
    slope_se: float
    n_points: int


def ecdf(samples):
    """Sorted support points and right-continuous ECDF values at them."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise SampleSizeError("empty sample")
    return x, np.arange(1, x.size + 1) / x.size


def kolmogorov_pvalue(lam):
    """Asymptotic Kolmogorov survival value
    ``2 * sum_k (-1)^(k-1) exp(-2 k^2 lam^2)``, truncated once terms drop
    below 1e-12; clipped to [0, 1]."""
    if lam <= 0.0:
        return 1.0
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < 1e-12 or k > 100_000:
            break
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(x, y) -> KsResult:
    """Two-sample KS test: exact sup-distance between the step ECDFs by a
    merged scan, asymptotic p-value at ``D * sqrt(nm / (n + m))``."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    n, m = x.size, y.size
    if n < _MIN_KS_SIZE or m < _MIN_KS_SIZE:
        raise SampleSizeError(
            f"need at least {_MIN_KS_SIZE} points per sample for the asymptotic "
            f"p-value, got {n} and {m}"
        )
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / n
    fy = np.searchsorted(y, grid, side="right") / m
    d = float(np.abs(fx - fy).max())
    lam = d * math.sqrt(n * m / (n + m))
    return KsResult(d, n, m, kolmogorov_pvalue(lam))


def ks_distance_to_cdf(x, cdf):
    """Sup-distance between the sample ECDF and a given continuous CDF."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    if n < 1:
        raise SampleSizeError("empty sample")
    f = cdf(x)
    hi = np.arange(1, n + 1) / n - f
    lo = f - np.arange(0, n) / n
    return float(max(hi.max(), lo.max()))


def mean_ci(samples, level=0.95):
    """Sample mean and normal-approximation half-width at the given level."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise SampleSizeError("need at least 2 points for a confidence interval")
    z = float(ndtri(0.5 + level / 2.0))
    se = x.std(ddof=1) / math.sqrt(x.size)
    return float(x.mean()), z * se


def variance_se(samples):
    """Sample variance and its large-sample standard error
    ``sqrt((m4 - s^4) / n)``."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise SampleSizeError("need at least 2 points")
    s2 = x.var(ddof=1)
    m4 = ((x - x.mean()) ** 4).mean()
    return float(s2), float(math.sqrt(max(m4 - s2 * s2, 0.0) / x.size))


def tail_slope(samples, q_lo=0.99, q_hi=0.9999) -> TailFitResult:
    """Least-squares slope of ``log(1 - ECDF)`` against ``log x`` over the
    order statistics between the two upper quantiles.

    For a survival function ``c * x^-a`` the slope estimates ``-a``.  The
    window is quantile-based, so the slope is invariant under positive
    scaling of the sample.
    """
    if not 0.0 < q_lo < q_hi < 1.0:
        raise SampleSizeError(f"need 0 < q_lo < q_hi < 1, got {q_lo}, {q_hi}")
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    ranks = np.arange(1, n + 1)
    level = ranks / n
    sf = (n - ranks) / n
    sel = (level >= q_lo) & (level <= q_hi) & (sf > 0.0) & (x > 0.0)
    if sel.sum() < 50:
        raise SampleSizeError(
            f"tail window [{q_lo}, {q_hi}] holds {int(sel.sum())} points; need >= 50"
        )
    lx = np.log(x[sel])
    ly = np.log(sf[sel])
    k = lx.size
    mx = lx.mean()
    sxx = ((lx - mx) ** 2).sum()
    slope = ((lx - mx) * ly).sum() / sxx
    intercept = ly.mean() - slope * mx
    resid = ly - intercept - slope * lx
    se = math.sqrt(resid @ resid / max(k - 2, 1) / sxx)
    return TailFitResult(float(slope), float(intercept), q_lo, q_hi, se, int(k))


def hill_tail_index(samples, q_lo=0.99) -> TailFitResult:
    """Hill estimator over exceedances of the ``q_lo`` quantile, reported in
    the same form as :func:`tail_slope` (slope estimates ``-a``)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    k = int(n * (1.0 - q_lo))
    if k < 50:
        raise SampleSizeError(f"only {k} exceedances above quantile {q_lo}; need >= 50")
    top = x[n - k :]
    x0 = x[n - k - 1]
    if x0 <= 0.0:
        raise SampleSizeError("Hill estimator needs a positive tail threshold")
    logs = np.log(top / x0)
    a_hat = 1.0 / logs.mean()
    se = a_hat / math.sqrt(k)
    return TailFitResult(-float(a_hat), 0.0, q_lo, 1.0, float(se), k)
