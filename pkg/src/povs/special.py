"""Normal quantile/CDF and Student-t tail probabilities.

Every function accepts a scalar or an array. Scalars come back as ``float``,
arrays come back as ``numpy.ndarray`` of the broadcast shape.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sc

__all__ = [
    "ConvergenceError",
    "normal_cdf",
    "normal_logcdf",
    "normal_quantile",
    "regularized_incomplete_beta",
    "t_p_two_sided",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_FPMIN = 1e-300
_EPS = 1e-15
_MAX_ITER = 20000

# Acklam's rational approximation, lower half only (|rel err| < 1.15e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549671010303156e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


class ConvergenceError(ArithmeticError):
    """A series or continued fraction failed to converge."""


def _out(value, scalar: bool):
    if scalar:
        return float(value)
    return value


def _poly(coeffs, x):
    acc = np.zeros_like(x) + coeffs[0]
    for c in coeffs[1:]:
        acc = acc * x + c
    return acc


def normal_cdf(x):
    """Standard normal CDF, accurate to a few ulps in both tails."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    return _out(0.5 * _sc.erfc(-x / _SQRT2), scalar)


def normal_logcdf(x):
    """``log(normal_cdf(x))`` without underflow or rounding to ``log(1)``."""
    scalar = np.ndim(x) == 0
    return _out(_sc.log_ndtr(np.asarray(x, dtype=float)), scalar)


def _lower_quantile(p):
    """Quantile for 0 < p <= 0.5, one Halley step on top of Acklam."""
    tail = p < _P_LOW
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.sqrt(-2.0 * np.log(np.where(tail, p, _P_LOW)))
        x_tail = _poly(_C, q) / (_poly(_D, q) * q + 1.0)
        qc = p - 0.5
        r = qc * qc
        x_mid = _poly(_A, r) * qc / (_poly(_B, r) * r + 1.0)
    x = np.where(tail, x_tail, x_mid)
    e = 0.5 * _sc.erfc(-x / _SQRT2) - p
    u = e * _SQRT2PI * np.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(p):
    """Inverse of the standard normal CDF.

    Parameters
    ----------
    p : float or array_like
        Probabilities strictly inside (0, 1).

    Raises
    ------
    ValueError
        If any ``p`` is outside the open unit interval or is NaN.
    """
    scalar = np.ndim(p) == 0
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValueError("normal_quantile requires 0 < p < 1")
    upper = p > 0.5
    # 1 - p is exact for p in [0.5, 1], so symmetry costs no accuracy.
    x = _lower_quantile(np.where(upper, 1.0 - p, p))
    x = np.where(upper, -x, x)
    x = np.where(p == 0.5, 0.0, x)
    return _out(x, scalar)


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz), vectorised."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _EPS
        if not active.any():
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge in {_MAX_ITER} terms"
    )


def _betainc(a, b, x, y):
    """I_x(a, b) given both x and y = 1 - x (y supplied to dodge cancellation)."""
    a, b, x, y = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (a, b, x, y))
    )
    result = np.empty(x.shape)
    zero = x <= 0.0
    one = y <= 0.0
    inner = ~(zero | one)
    result[zero] = 0.0
    result[one] = 1.0
    if inner.any():
        ai, bi, xi, yi = a[inner], b[inner], x[inner], y[inner]
        log_front = (
            _sc.gammaln(ai + bi) - _sc.gammaln(ai) - _sc.gammaln(bi)
            + ai * np.log(xi) + bi * np.log(yi)
        )
        front = np.exp(log_front)
        direct = xi < (ai + 1.0) / (ai + bi + 2.0)
        out = np.empty(xi.shape)
        if direct.any():
            out[direct] = front[direct] * _betacf(
                ai[direct], bi[direct], xi[direct]) / ai[direct]
        flip = ~direct
        if flip.any():
            out[flip] = 1.0 - front[flip] * _betacf(
                bi[flip], ai[flip], yi[flip]) / bi[flip]
        result[inner] = np.clip(out, 0.0, 1.0)
    return result


def regularized_incomplete_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b).

    Raises ``ValueError`` outside ``a > 0, b > 0, 0 <= x <= 1`` and
    :class:`ConvergenceError` if the continued fraction does not settle.
    """
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0 and np.ndim(x) == 0
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    if not (np.all(a > 0) and np.all(b > 0)):
        raise ValueError("regularized_incomplete_beta requires a > 0 and b > 0")
    if not np.all((x >= 0.0) & (x <= 1.0)):
        raise ValueError("regularized_incomplete_beta requires 0 <= x <= 1")
    return _out(_betainc(a, b, x, 1.0 - x), scalar)


def t_p_two_sided(t, df):
    """Two-sided p-value ``2 P(T_df >= |t|)`` for real (non-integer) ``df``."""
    scalar = np.ndim(t) == 0 and np.ndim(df) == 0
    t = np.asarray(t, dtype=float)
    df = np.asarray(df, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("t_p_two_sided requires a finite statistic")
    if not np.all(np.isfinite(df) & (df > 0)):
        raise ValueError("t_p_two_sided requires finite df > 0")
    t2 = t * t
    denom = df + t2
    p = _betainc(0.5 * df, 0.5, df / denom, t2 / denom)
    return _out(p, scalar)
