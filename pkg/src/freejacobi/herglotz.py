"""Herglotz transforms of the flow and recovery of the underlying measures.

``H`` (the transform of the spectral distribution of ``U_t``) is available
by two routes that share only the inverse flow:

* ``route="ext"``:   ``H^2 = kappa^2 H0(z)^2 + (1-kappa^2) H0(psi^{-1}(z))^2``
* ``route="clark"``: ``H = H0(z) K (1 - xi(K)) / (1 + xi(K))`` with
  ``K = a(H0(psi^{-1}(z)))``.

Each identity check below evaluates ``H`` by the route it does not test.
Densities are taken with respect to ``d theta / (2 pi)``.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import flow, maps
from . import series as S
from .errors import DensityError, DomainError, PoleError
from .moments import unitary_moments

# r-schedule for radial limits; Richardson in h = 1 - r with ratio 10
ATOM_RADII = (0.99, 0.999, 0.9999)
# half-width of the angle window around theta = 0 flagged as uncertain
NEAR_ONE_WINDOW = 0.05
# negative density tolerated as discretization noise
NEG_TOL = 1e-6


@dataclass
class SpectralMeasureEstimate:
    """Atoms at +-1 plus a density sampled on a midpoint angle grid."""

    atom_at_one: float
    atom_at_minus_one: float
    grid: np.ndarray
    density: np.ndarray
    radius_used: float
    uncertain: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.uncertain is None:
            self.uncertain = np.zeros(len(self.grid), dtype=bool)

    @property
    def total_mass(self):
        return self.atom_at_one + self.atom_at_minus_one + float(np.mean(self.density))

    def symmetry_defect(self):
        """``max |rho(theta) - rho(-theta)|`` (the grid is symmetric)."""
        return float(np.max(np.abs(self.density - self.density[::-1])))


def angle_grid(m):
    """Uniform midpoint grid on (-pi, pi]; never contains 0 for even ``m``."""
    return -math.pi + (np.arange(m) + 0.5) * (2 * math.pi / m)


def h_series(p, n_max):
    """``(1, 2 tau(U_t), ..., 2 tau(U_t^{n_max}))`` as a truncated series."""
    if n_max > 30:
        raise DomainError("h_series is limited to n_max <= 30")
    return S.TruncatedSeries(np.concatenate([[1.0], 2 * unitary_moments(n_max, p)]))


def _h0(z):
    if z == 1:
        raise PoleError("H0 has a pole at z = 1")
    return (1 + z) / (1 - z)


def h_eval(z, p, route="ext"):
    """``H_{kappa,t}(z)`` on the open disc.

    Parameters
    ----------
    z : complex
    p : FlowParams
    route : {"ext", "clark"}
        Which closed form to use (see module docstring).
    """
    z = complex(z)
    if not abs(z) < 1:
        raise DomainError("h_eval expects z in the open unit disc")
    if p.t == 0:
        return _h0(z)
    if route == "ext":
        w = flow.psi_inverse(z, p)
        k2 = p.kappa**2
        return cmath.sqrt((1 - k2) * _h0(w) ** 2 + k2 * _h0(z) ** 2)
    if route == "clark":
        K = k_eval(z, p, route="flow")
        x = complex(maps.xi(K, p.t))
        return _h0(z) * K * (1 - x) / (1 + x)
    raise ValueError(f"unknown route {route!r}")


def k_eval(z, p, route="flow"):
    """``K_{kappa,2t}(z) = phi^{-1}(z)``.

    ``route="flow"`` inverts the flow in the a-variable; ``route="herglotz"``
    uses ``sqrt(H^2 + kappa^2 (1 - H0^2))`` with ``H`` from :func:`h_eval`.
    """
    z = complex(z)
    if route == "flow":
        return flow.psi_inverse_a(z, p)
    if route == "herglotz":
        h = h_eval(z, p)
        return cmath.sqrt(h * h + p.kappa**2 * (1 - _h0(z) ** 2))
    raise ValueError(f"unknown route {route!r}")


def taylor_coefficients(f, n_max, radius=0.25, m=64):
    """Taylor coefficients of ``f`` at 0 from ``m`` samples on a small circle."""
    theta = 2 * math.pi * np.arange(m) / m
    vals = np.array([f(radius * cmath.exp(1j * th)) for th in theta])
    coef = np.fft.fft(vals) / m
    return coef[: n_max + 1] / radius ** np.arange(n_max + 1)


def clark_identity_residual(z, p):
    """``|xi(K) - (H0 K - H)/(H0 K + H)|`` with ``H`` from the ext route."""
    z = complex(z)
    K = k_eval(z, p)
    H = h_eval(z, p, route="ext")
    y0 = _h0(z)
    den = y0 * K + H
    if den == 0:
        raise PoleError("H0 K + H vanished")
    return abs(complex(maps.xi(K, p.t)) - (y0 * K - H) / den)


def ext_residual(z, p):
    """``|H^2 - kappa^2 H0(z)^2 - (1-kappa^2) H0(psi^{-1}(z))^2|``, H from the clark route."""
    z = complex(z)
    H = h_eval(z, p, route="clark")
    w = flow.psi_inverse(z, p)
    k2 = p.kappa**2
    return abs(H * H - k2 * _h0(z) ** 2 - (1 - k2) * _h0(w) ** 2)


def characteristics_residual(z, p):
    """``|[H0^2 - H_inf^2](z) - [H_t^2 - H_inf^2](psi(z))|`` for ``z`` in Lambda.

    ``H_t`` at ``psi(z)`` is taken from the clark route, which inverts the flow
    again rather than reusing ``z``.
    """
    z = complex(z)
    k = p.kappa
    if z == 0:
        return 0.0
    w = complex(flow.psi(z, p))
    lhs = _h0(z) ** 2 - complex(maps.herglotz_h_inf(z, k)) ** 2
    H = h_eval(w, p, route="clark")
    rhs = H * H - complex(maps.herglotz_h_inf(w, k)) ** 2
    return abs(lhs - rhs)


def _richardson(f, radii=ATOM_RADII):
    vals = [f(r) for r in radii]
    # error is linear in 1 - r; eliminate it pairwise and keep the finest
    ext = [(10 * vals[i + 1] - vals[i]) / 9 for i in range(len(vals) - 1)]
    return ext[-1], vals


def radial_atom(H, sign=1, radii=ATOM_RADII):
    """``lim (1-r)/2 Re H(sign * r)`` by Richardson extrapolation."""
    value, _ = _richardson(lambda r: (1 - r) / 2 * H(sign * r).real, radii)
    return value


def _estimate(transform, grid_size, r, atom1, atom_m1, kappa):
    if grid_size < 64:
        raise DomainError("grid_size must be at least 64")
    theta = angle_grid(grid_size)
    pts = r * np.exp(1j * theta)
    vals = np.array([transform(z).real for z in pts])
    h0 = ((1 + pts) / (1 - pts)).real
    h0m = ((1 - pts) / (1 + pts)).real
    density = vals - atom1 * h0 - atom_m1 * h0m
    if np.min(density) < -NEG_TOL:
        i = int(np.argmin(density))
        raise DensityError(f"negative density {density[i]:.3e} at theta={theta[i]:.4f}")
    density = np.maximum(density, 0.0)
    uncertain = (np.abs(theta) < NEAR_ONE_WINDOW) if kappa != 0 else np.zeros(grid_size, bool)
    return SpectralMeasureEstimate(atom1, atom_m1, theta, density, r, uncertain)


def _clip_atom(x):
    return max(0.0, float(x))


def density_nu(p, grid_size=256, r=0.999):
    """Estimate the spectral distribution of ``U_t`` from ``H`` near the circle."""
    if not 0.9 < r < 1:
        raise DomainError("density_nu needs r in (0.9, 1)")

    def H(z):
        return h_eval(z, p)

    a1 = _clip_atom(radial_atom(H, 1))
    am1 = _clip_atom(radial_atom(H, -1))
    return _estimate(H, grid_size, r, a1, am1, p.kappa)


def density_clark(p, zeta=1.0, grid_size=256, r=0.999):
    """Aleksandrov-Clark measure of ``psi^{-1}`` at ``zeta``.

    Its Herglotz transform is ``(zeta + psi^{-1})/(zeta - psi^{-1})``.
    """
    zeta = complex(zeta)
    if abs(abs(zeta) - 1) > 1e-12:
        raise DomainError("zeta must lie on the unit circle")
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")

    def T(z):
        w = flow.psi_inverse(z, p)
        return (zeta + w) / (zeta - w)

    a1 = _clip_atom(radial_atom(T, 1))
    am1 = _clip_atom(radial_atom(T, -1))
    return _estimate(T, grid_size, r, a1, am1, p.kappa)


def clark_sup_profile(p, grid_size=256, radii=ATOM_RADII):
    """Max of the zeta = 1 Clark density over the grid for each radius."""
    return [float(np.max(density_clark(p, 1.0, grid_size, r).density)) for r in radii]


def profile_tail(profile):
    """Geometric-tail bound on ``|limit - profile[-1]|`` from the last three values.

    With increments ``d1, d2`` and contraction ``q = d2/d1 < 1`` the remaining
    change is at most ``d2 q / (1 - q)``; a non-contracting profile gives inf.
    """
    d1 = abs(profile[-2] - profile[-3])
    d2 = abs(profile[-1] - profile[-2])
    if d2 == 0:
        return 0.0
    if d1 == 0 or d2 >= d1:
        return math.inf
    q = d2 / d1
    return d2 * q / (1 - q)


def nu_radial_defect(p, radii=(0.9, 0.99, 0.999, 0.9999)):
    """``Re[H(r) - |kappa| H0(r)]`` along the radius, which should tend to 0."""
    return [(h_eval(r, p) - abs(p.kappa) * _h0(r)).real for r in radii]


def stationary_density(theta, kappa):
    """Density of the large-time limit measure away from its atom at 1."""
    s = np.sin(np.asarray(theta, dtype=float) / 2) ** 2
    k2 = kappa * kappa
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(s >= k2, np.sqrt(np.clip(1 - k2 / np.where(s > 0, s, 1), 0, None)), 0.0)
    return out


def stationary_mass(kappa, tol=1e-12):
    """``int rho dtheta/(2 pi)`` by adaptive quadrature over the support."""
    lo = 2 * math.asin(abs(kappa))
    if lo >= math.pi:
        return 0.0
    val, err = integrate.quad(lambda th: float(stationary_density(th, kappa)), lo, math.pi, epsabs=tol, epsrel=tol, limit=200)
    return 2 * val / (2 * math.pi)


def stationary_measure(kappa, grid_size=256):
    """Large-time limit: atom ``|kappa|`` at 1 plus :func:`stationary_density`."""
    if grid_size < 64:
        raise DomainError("grid_size must be at least 64")
    if not -1 < kappa < 1:
        raise DomainError("kappa must lie in (-1, 1)")
    theta = angle_grid(grid_size)
    return SpectralMeasureEstimate(abs(kappa), 0.0, theta, stationary_density(theta, kappa), 1.0)
