"""Truncated power series about the origin.

The helpers work on plain coefficient arrays, index = power.  All results
keep the length of their first argument.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TruncatedSeries:
    """Coefficients ``c[0] .. c[N]`` of a power series centered at 0."""

    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))

    @property
    def order(self):
        return len(self.coefficients) - 1

    def __getitem__(self, n):
        return self.coefficients[n]

    def __len__(self):
        return len(self.coefficients)

    def __call__(self, z):
        """Evaluate the partial sum by Horner's rule."""
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for c in self.coefficients[::-1]:
            acc = acc * z + c
        return acc[()] if acc.ndim == 0 else acc


def constant(c, n):
    out = np.zeros(n)
    out[0] = c
    return out


def variable(n):
    out = np.zeros(n)
    out[1] = 1.0
    return out


def mul(a, b):
    return np.convolve(a, b)[: len(a)]


def reciprocal(a):
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term is not invertible")
    n = len(a)
    out = np.zeros(n)
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1 : k + 1], out[k - 1 :: -1]) / a[0]
    return out


def div(a, b):
    return mul(a, reciprocal(b))


def exp(a):
    n = len(a)
    out = np.zeros(n)
    out[0] = np.exp(a[0])
    ka = np.arange(n) * a
    for k in range(1, n):
        out[k] = np.dot(ka[1 : k + 1], out[k - 1 :: -1]) / k
    return out


def sqrt(a):
    """Principal square root; requires ``a[0] > 0``."""
    if not a[0] > 0:
        raise ValueError("series square root needs a positive constant term")
    n = len(a)
    out = np.zeros(n)
    out[0] = np.sqrt(a[0])
    for k in range(1, n):
        out[k] = (a[k] - np.dot(out[1:k], out[k - 1 : 0 : -1])) / (2 * out[0])
    return out


def derivative(a):
    """Termwise derivative, zero-padded to the same length."""
    out = np.zeros(len(a))
    out[:-1] = np.arange(1, len(a)) * a[1:]
    return out
