"""Double-double arithmetic.

Sums and products carry about 32 significant digits; :func:`exp` squares
its reduced argument ten times and so keeps about 28.

Only what the moment formula needs: sums, products and the exponential.
A value is a ``(hi, lo)`` pair with ``|lo| <= ulp(hi)/2``; both parts may be
Python floats or numpy arrays of the same shape.
"""

import math
from fractions import Fraction

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1

LN2 = (0.6931471805599453, 2.3190468138462996e-17)


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def add(x, y):
    s, e = two_sum(x[0], y[0])
    t, f = two_sum(x[1], y[1])
    e += t
    s, e = quick_two_sum(s, e)
    e += f
    return quick_two_sum(s, e)


def mul(x, y):
    p, e = two_prod(x[0], y[0])
    e += x[0] * y[1] + x[1] * y[0]
    return quick_two_sum(p, e)


def from_float(a):
    return (float(a), 0.0)


def from_fraction(q):
    """Nearest double-double to a rational."""
    hi = float(q)
    return (hi, float(q - Fraction(hi)))


def to_fraction(x):
    return Fraction(x[0]) + Fraction(x[1])


def exp(x):
    """exp(x) for a float ``x`` to double-double accuracy."""
    if x > 709.0:
        raise OverflowError("exp argument too large")
    if x < -745.0:
        return (0.0, 0.0)
    k = int(round(x / LN2[0]))
    kln2 = mul(LN2, from_float(float(k)))
    r = add(from_float(x), (-kln2[0], -kln2[1]))
    # shrink the argument, sum the Taylor series, then square back up
    r = (math.ldexp(r[0], -10), math.ldexp(r[1], -10))
    term = (1.0, 0.0)
    acc = (1.0, 0.0)
    for i in range(1, 14):
        term = mul(term, r)
        term = _div_small_int(term, i)
        acc = add(acc, term)
    for _ in range(10):
        acc = mul(acc, acc)
    return (math.ldexp(acc[0], k), math.ldexp(acc[1], k))


def exp_array(x):
    """Vectorized :func:`exp` for a float array with entries in [-745, 709]."""
    x = np.asarray(x, dtype=float)
    k = np.rint(x / LN2[0])
    kln2 = mul(LN2, (k, np.zeros_like(k)))
    r = add((x, np.zeros_like(x)), (-kln2[0], -kln2[1]))
    r = (np.ldexp(r[0], -10), np.ldexp(r[1], -10))
    term = (np.ones_like(x), np.zeros_like(x))
    acc = term
    for i in range(1, 14):
        term = _div_small_int(mul(term, r), i)
        acc = add(acc, term)
    for _ in range(10):
        acc = mul(acc, acc)
    ki = k.astype(int)
    return (np.ldexp(acc[0], ki), np.ldexp(acc[1], ki))


def _div_small_int(x, n):
    q1 = x[0] / n
    p, e = two_prod(q1, n * 1.0)
    s, f = two_sum(x[0], -p)
    f = f - e + x[1]
    q2 = (s + f) / n
    return quick_two_sum(q1, q2)
