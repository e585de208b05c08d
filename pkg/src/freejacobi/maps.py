"""Closed-form conformal and Herglotz maps.

All functions accept a complex scalar or a numpy array and return the same
shape.  Square roots are principal (cut along the negative real axis).
Inputs on a pole or outside the domain raise; nothing returns ``inf``.
"""

import numpy as np

from . import series as S
from .errors import DomainError, FlowOverflowError, PoleError

# exp overflows a double just above this
_EXP_MAX = 709.0


def _as_complex(z):
    return np.asarray(z, dtype=complex)


def _ret(x):
    return complex(x) if np.ndim(x) == 0 else x


def szego_alpha(z):
    r"""Map the cut plane :math:`\mathbb{C}\setminus[1,\infty)` onto the disc.

    Returns ``z / (1 + sqrt(1 - z))**2``.  The value at ``z = 1`` is the
    continuous limit 1; the open ray ``(1, inf)`` is rejected.
    """
    z = _as_complex(z)
    on_cut = (z.imag == 0) & (z.real > 1)
    if np.any(on_cut):
        raise DomainError("szego_alpha undefined on the ray (1, inf)")
    root = np.sqrt(1 - z)
    return _ret(z / (1 + root) ** 2)


def szego_alpha_inv(z):
    """Compositional inverse of :func:`szego_alpha`: ``4z / (1+z)**2``."""
    z = _as_complex(z)
    if np.any(z == -1):
        raise PoleError("szego_alpha_inv has a pole at z = -1")
    return _ret(4 * z / (1 + z) ** 2)


def herglotz_h0(z):
    """Herglotz transform of the point mass at 1: ``(1+z)/(1-z)``."""
    z = _as_complex(z)
    if np.any(z == 1):
        raise PoleError("herglotz_h0 has a pole at z = 1")
    return _ret((1 + z) / (1 - z))


def herglotz_h0_inv(y):
    """Inverse of :func:`herglotz_h0`: ``(y-1)/(y+1)``."""
    y = _as_complex(y)
    if np.any(y == -1):
        raise PoleError("herglotz_h0_inv has a pole at y = -1")
    return _ret((y - 1) / (y + 1))


def radial_a(y, kappa):
    """``sqrt(kappa**2 + (1 - kappa**2) * y**2)``."""
    y = _as_complex(y)
    k2 = kappa * kappa
    return _ret(np.sqrt(k2 + (1 - k2) * y * y))


def radial_a_inv(a, kappa):
    """Right half-plane preimage ``y`` of :func:`radial_a`."""
    a = _as_complex(a)
    k2 = kappa * kappa
    return _ret(np.sqrt((a * a - k2) / (1 - k2)))


def xi(a, t):
    """``(a-1)/(a+1) * exp(t*a)``, the time-``2t`` map of the free unitary Brownian motion."""
    a = _as_complex(a)
    if np.any(a == -1):
        raise PoleError("xi has a pole at a = -1")
    if np.any(t * a.real > _EXP_MAX):
        raise FlowOverflowError(f"exp(t*a) overflows for t*Re(a) > {_EXP_MAX}")
    return _ret((a - 1) / (a + 1) * np.exp(t * a))


def xi_prime(a, t):
    """Derivative of :func:`xi` in ``a``."""
    a = _as_complex(a)
    if np.any(t * a.real > _EXP_MAX):
        raise FlowOverflowError(f"exp(t*a) overflows for t*Re(a) > {_EXP_MAX}")
    return _ret(np.exp(t * a) * (t * a * a + 2 - t) / (a + 1) ** 2)


def herglotz_h_inf(z, kappa):
    """Herglotz transform of the large-time limit measure.

    ``sqrt(1 + 4 kappa**2 z / (1-z)**2)``; the radicand avoids the cut on the
    open disc, so the principal root is analytic there.
    """
    z = _as_complex(z)
    if np.any(z == 1):
        raise PoleError("herglotz_h_inf has a pole at z = 1")
    return _ret(np.sqrt(1 + 4 * kappa * kappa * z / (1 - z) ** 2))


def herglotz_h_inf_series(kappa, n_max):
    """Taylor coefficients of :func:`herglotz_h_inf` up to ``z**n_max``."""
    n = n_max + 1
    # z/(1-z)^2 = sum_k k z^k
    radicand = 4 * kappa * kappa * np.arange(n, dtype=float)
    radicand[0] = 1.0
    return S.TruncatedSeries(S.sqrt(radicand))
