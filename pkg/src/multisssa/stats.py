"""Student t tail probabilities and the paired t-test.

The regularized incomplete beta function is evaluated with the modified
Lentz continued fraction, using the symmetry
``I_x(a, b) = 1 - I_{1-x}(b, a)`` to stay in the fast-converging region.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import LengthMismatch, TooFewSamples

_FPMIN = 1e-300
_EPS = 1e-16
_MAXIT = 10000


def _betacf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, xc: float | None = None) -> float:
    """Regularized incomplete beta function ``I_x(a, b)`` for a, b > 0.

    ``xc`` optionally supplies ``1 - x`` computed without cancellation.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if xc is None:
        xc = 1.0 - x
    if x <= 0.0:
        return 0.0
    if xc <= 0.0:
        return 1.0
    lbt = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(xc)
    )
    bt = math.exp(lbt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, xc) / b


def t_two_sided_p(t: float, df: float) -> float:
    """``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    if math.isnan(t):
        return float("nan")
    t2 = t * t
    x = df / (df + t2)
    return min(1.0, max(0.0, betainc(0.5 * df, 0.5, x, t2 / (df + t2))))


def paired_t_test(u, v) -> tuple[float, float]:
    """Two-sided paired t-test on ``u - v``.

    Returns ``(t, p)``. Zero-variance differences give ``(0, 1)`` when the
    mean difference is zero and ``(+/-inf, 0)`` otherwise.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise LengthMismatch(f"samples have lengths {u.size} and {v.size}")
    K = u.size
    if K < 2:
        raise TooFewSamples(f"paired t-test needs at least 2 pairs, got {K}")
    w = u - v
    mean = float(np.mean(w))
    sd = float(np.std(w, ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(K))
    return t, t_two_sided_p(t, K - 1)
