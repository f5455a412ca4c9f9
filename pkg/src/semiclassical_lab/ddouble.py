"""Vectorized double-double arithmetic used for long-time phase reduction.

A value is a pair ``(hi, lo)`` of float arrays with ``|lo| <= ulp(hi)/2``.
"""
import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1

TWO_PI = (6.283185307179586, 2.4492935982947064e-16)


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def fast_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def dd(a):
    a = np.asarray(a, dtype=float)
    return a, np.zeros_like(a)


def add(x, y):
    s, e = two_sum(x[0], y[0])
    e = e + x[1] + y[1]
    return fast_two_sum(s, e)


def mul(x, y):
    p, e = two_prod(x[0], y[0])
    e = e + x[0] * y[1] + x[1] * y[0]
    return fast_two_sum(p, e)


def div(x, y):
    q1 = x[0] / y[0]
    r = add(x, neg(mul(dd(q1), y)))
    q2 = r[0] / y[0]
    return fast_two_sum(q1, q2)


def neg(x):
    return -x[0], -x[1]


def frac(x):
    """Fractional part in ``[-1/2, 1/2)`` as a plain float."""
    n = np.round(x[0])
    hi = x[0] - n  # exact: n is the nearest integer to hi
    f = hi + x[1]
    return f - np.round(f)


def power(x, m: int):
    out = dd(np.ones_like(np.asarray(x[0], dtype=float)))
    for _ in range(m):
        out = mul(out, x)
    return out
