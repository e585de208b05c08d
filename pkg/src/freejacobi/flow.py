"""The characteristic flow psi_{kappa,t}, its univalence domain and inverse.

The flow factors as ``psi = phi o a o H0`` where ``H0(z) = (1+z)/(1-z)``,
``a(y) = sqrt(kappa^2 + (1-kappa^2) y^2)`` and

    phi(a) = alpha(g(a)),   g(a) = a^2/(a^2 - kappa^2) * alpha^{-1}(xi_{2t}(a)).

The univalence domain Lambda is the connected component of
``{z in D : g(a(H0(z))) not in [1, inf)}`` that contains the origin.  Most
numerical work happens in the ``a`` variable where ``g`` is explicit.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import maps
from .config import TOL
from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    DomainEscapeError,
    FlowOverflowError,
    IdentityError,
    PoleError,
    ResolutionError,
)


@dataclass(frozen=True)
class FlowParams:
    """Projection trace ``kappa`` in (-1, 1) and process time ``t >= 0``."""

    kappa: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and abs(self.kappa) < 1):
            raise DomainError(f"kappa must lie in (-1, 1), got {self.kappa}")
        if not (math.isfinite(self.t) and self.t >= 0):
            raise DomainError(f"t must be finite and >= 0, got {self.t}")

    @property
    def abs_kappa(self):
        return abs(self.kappa)


@dataclass(frozen=True)
class DomainProbe:
    point: complex
    inside: bool
    path_samples: int


# ---------------------------------------------------------------------------
# maps in the a-variable


def g_map(a, p):
    """``a^2/(a^2-kappa^2) * alpha^{-1}(xi_{2t}(a))``."""
    a = np.asarray(a, dtype=complex)
    den = a * a - p.kappa**2
    if np.any(den == 0):
        raise PoleError("g_map has poles at a = +-|kappa|")
    x = np.asarray(maps.xi(a, p.t))
    if np.any(x == -1):
        raise PoleError("g_map has a pole where xi_{2t}(a) = -1")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = a * a / den * (4 * x / (1 + x) ** 2)
    if not np.all(np.isfinite(out)):
        raise PoleError("g_map evaluated too close to a pole")
    return maps._ret(out)


def phi_map(a, p):
    """``alpha(g_map(a))``; raises :class:`DomainError` when g lands on (1, inf).

    Values of g within ``1e-12`` of 1 are snapped to 1 so the boundary point
    ``z_{kappa,t}`` evaluates to its continuous value despite rounding.
    """
    g = np.asarray(g_map(a, p))
    g = np.where(np.abs(g - 1) <= 1e-12, 1.0 + 0j, g)
    return maps.szego_alpha(g)


def psi(z, p):
    """The flow ``psi_{kappa,t}(z) = phi(a(H0(z)))``."""
    return phi_map(maps.radial_a(maps.herglotz_h0(z), p.kappa), p)


def z_to_a(z, kappa):
    return maps.radial_a(maps.herglotz_h0(z), kappa)


def a_to_z(a, kappa):
    return maps.herglotz_h0_inv(maps.radial_a_inv(a, kappa))


def _g_quiet(a, kappa, t):
    """Vectorized g with NaN/inf at poles instead of exceptions."""
    with np.errstate(all="ignore"):
        e = np.exp(t * a)
        x = (a - 1) / (a + 1) * e
        return a * a / (a * a - kappa * kappa) * (4 * x / (1 + x) ** 2)


def _g_and_dg(a, k2, t):
    e = cmath.exp(t * a)
    x = (a - 1) / (a + 1) * e
    dx = e * (t * a * a + 2 - t) / (a + 1) ** 2
    den = a * a - k2
    q = a * a / den
    dq = -2 * a * k2 / (den * den)
    h = 4 * x / (1 + x) ** 2
    dh = 4 * (1 - x) / (1 + x) ** 3 * dx
    return q * h, dq * h + q * dh


# ---------------------------------------------------------------------------
# domain membership


def in_domain(z, p, steps=None):
    """Certify whether ``z`` lies in the univalence domain Lambda.

    Walks the straight segment from 0 to ``z`` and checks that
    ``g(a(H0(.)))`` never meets the cut ``[1, inf)``.  Sign changes of
    ``Im g`` between samples are located by bisection so a crossing is not
    missed between grid points.
    """
    z = complex(z)
    if not abs(z) < 1:
        raise DomainError("in_domain expects a point of the open unit disc")
    steps = TOL.domain_steps if steps is None else int(steps)
    if z == 0:
        return DomainProbe(z, True, 0)
    s = np.linspace(0.0, 1.0, steps + 1)

    def g_of(sv):
        w = np.asarray(sv) * z
        y = (1 + w) / (1 - w)
        a = np.sqrt(p.kappa**2 + (1 - p.kappa**2) * y * y)
        return _g_quiet(a, p.kappa, p.t)

    g = g_of(s)
    finite = np.isfinite(g)
    blind = None
    if not finite.all():
        # a pole or an overflow of exp(t a); only fatal if the walk has not
        # already left Lambda before reaching it
        blind = int(np.argmin(finite))
        s, g, steps = s[:blind], g[:blind], blind - 1
    scale = np.maximum(1.0, np.abs(g))
    near_real = np.abs(g.imag) <= 1e-13 * scale
    on_cut = near_real & (g.real >= 1)
    first_bad = np.argmax(on_cut) if on_cut.any() else steps + 1

    sign = np.where(near_real, 0.0, np.sign(g.imag))
    flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    for i in flips:
        if i >= first_bad:
            break
        lo, hi = s[i], s[i + 1]
        s_lo = sign[i]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            gm = g_of(mid)
            if not np.isfinite(gm):
                raise ResolutionError("segment passes through a pole of g")
            if np.sign(gm.imag) == s_lo:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-16:
                break
        gc = complex(g_of(0.5 * (lo + hi)))
        if abs(gc.real - 1) < 1e-9 * max(1.0, abs(gc)):
            raise ResolutionError(f"cannot decide crossing of the cut at g = {gc}")
        if gc.real > 1:
            first_bad = i
            break

    # tangential contact with the cut (g real, touching 1 from below)
    close = near_real & (g.real > 1 - 1e-4) & (g.real < 1)
    for i in np.nonzero(close)[0]:
        if i >= first_bad or i == 0 or i == steps:
            continue
        if not (g.real[i] >= g.real[i - 1] and g.real[i] >= g.real[i + 1]):
            continue
        res = minimize_scalar(
            lambda sv: -complex(g_of(sv)).real,
            bounds=(s[i - 1], s[i + 1]),
            method="bounded",
            options={"xatol": 1e-15},
        )
        peak = complex(g_of(res.x))
        if peak.real >= 1 - 1e-10 and abs(peak.imag) <= 1e-10:
            first_bad = i
            break

    if first_bad <= steps:
        return DomainProbe(z, False, steps)
    if blind is not None:
        raise ResolutionError("segment passes through a pole of g")
    end = complex(maps.szego_alpha(g[-1]))
    return DomainProbe(z, abs(end) < 1, steps)


# ---------------------------------------------------------------------------
# boundary solvers on the real line


def _brent(f, lo, hi, tol):
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def _bracket_up(f, lo, start, what, limit=1e6):
    hi = start
    trace = []
    while hi < limit:
        v = f(hi)
        trace.append((hi, v))
        if v > 0:
            return hi
        lo, hi = hi, 2 * hi
    raise BracketError(f"could not bracket {what}", trace)


def solve_b(t, tol=None):
    """Unique ``b > 1`` with ``xi_{2t}(b) = 1``, i.e. ``e^{tb}(b-1) = b+1``."""
    tol = TOL.root if tol is None else tol
    if not t > 0:
        raise DomainError("solve_b requires t > 0")

    def f(b):
        return math.log((b - 1) / (b + 1)) + t * b

    hi = _bracket_up(f, 1.0, 2.0, "b_{2t}")
    return _brent(f, 1.0 + 1e-15 if hi <= 2 else hi / 2, hi, tol)


def solve_z_right(p, tol=None):
    """Right real boundary point ``z_{kappa,t}`` of the univalence domain.

    Solves ``xi_{2t}(A) = (A - |kappa|)/(A + |kappa|)`` for ``A > 1`` and maps
    back through ``A = a(H0(z))``; for ``kappa = 0`` the limiting equation
    ``xi_{2t}(A) = 1`` is used.
    """
    tol = TOL.root if tol is None else tol
    if not p.t > 0:
        raise DomainError("solve_z_right requires t > 0")
    k = p.abs_kappa
    A = solve_b(p.t, tol) if k == 0 else _solve_A(k, p.t, tol)
    return float(np.real(a_to_z(A, p.kappa)))


def _solve_A(k, t, tol):
    # log form of xi(A)(A+k) = A-k on A > 1; negative at A=1+, positive for large A
    def f(A):
        return math.log((A - 1) / (A + 1)) + t * A - math.log((A - k) / (A + k))

    hi = _bracket_up(f, 1.0, 2.0, "z_{kappa,t}")
    lo = 1.0 + 1e-15 if hi <= 2 else hi / 2
    return _brent(f, lo, hi, tol)


def right_boundary_a(p):
    """``a(H0(z_{kappa,t}))``, the a-value where g reaches 1."""
    return solve_b(p.t) if p.kappa == 0 else _solve_A(p.abs_kappa, p.t, TOL.root)


solve_a_right = right_boundary_a


def monotonicity_violations(p, n_points=1000):
    """Count non-increasing steps of ``g`` on the real interval where it must increase.

    The interval is ``(max(|kappa|, d_{2t}), a(H0(z_{kappa,t})))``; ``d_{2t}``
    only enters for ``t > 2``.  Endpoints are excluded (pole and g = 1).
    """
    lo = p.abs_kappa
    if p.t > 2:
        lo = max(lo, solve_d(p.t))
    hi = right_boundary_a(p)
    a = np.linspace(lo, hi, n_points + 2)[1:-1]
    g = np.real(g_map(a.astype(complex), p))
    return int(np.count_nonzero(np.diff(g) <= 0))


def z_right_residual(z, p):
    """Residual of the defining equation of ``z_{kappa,t}`` at ``z``."""
    A = float(np.real(z_to_a(z, p.kappa)))
    k = p.abs_kappa
    if k == 0:
        return abs(complex(maps.xi(A, p.t)) - 1)
    return abs(complex(maps.xi(A, p.t)) - (A - k) / (A + k))


def solve_d(t, tol=None):
    """``d_{2t}`` in ``(sqrt((t-2)/t), 1)`` with ``xi_{2t}(d) = -1``; needs t > 2."""
    tol = TOL.root if tol is None else tol
    if not t > 2:
        raise DomainError("d_{2t} exists only for t > 2")

    def f(d):
        return math.log((1 - d) / (1 + d)) + t * d

    lo = math.sqrt((t - 2) / t)
    hi = 1.0 - 1e-16
    if not (f(lo) > 0 > f(hi)):
        raise BracketError("d_{2t} bracket failed", [(lo, f(lo)), (hi, f(hi))])
    return _brent(f, lo, hi, tol)


def _log_strip_quantity(x, t):
    # log of 8 e^{tx} / (xi(x) - 1)^2 for x > b_{2t}
    log_xi = math.log((x - 1) / (x + 1)) + t * x
    if log_xi <= 0:
        return math.inf
    log_xi_m1 = log_xi + math.log1p(-math.exp(-log_xi))
    return math.log(8.0) + t * x - 2 * log_xi_m1


def strip_bound(t, growth=1.05, ceiling_factor=1e4):
    """Smallest grid-refined ``A > b_{2t}`` with ``8e^{tx}/(xi(x)-1)^2 < 1`` beyond it."""
    if not t > 0:
        raise DomainError("strip_bound requires t > 0")
    b = solve_b(t)
    ceiling = b * ceiling_factor
    xs = [b * growth]
    while xs[-1] < ceiling:
        xs.append(xs[-1] * growth)
    vals = [_log_strip_quantity(x, t) for x in xs]
    bad = [i for i, v in enumerate(vals) if v >= 0]
    if bad and bad[-1] == len(xs) - 1:
        raise BracketError(f"strip bound not reached below scan ceiling {ceiling}")
    if not bad:
        lo, hi = b * (1 + 1e-12), xs[0]
    else:
        lo, hi = xs[bad[-1]], xs[bad[-1] + 1]
    A = brentq(lambda x: _log_strip_quantity(x, t), lo, hi, xtol=1e-14)
    # nudge strictly inside the certified region
    A = A * (1 + 1e-12)
    if _log_strip_quantity(A, t) >= 0:
        A = hi
    return A


# ---------------------------------------------------------------------------
# inverse flow


def _solve_real(x, p):
    """Real-axis inverse by bracketing on g, which increases there."""
    T = 4 * x / (1 + x) ** 2
    A = right_boundary_a(p)
    lo_end = p.abs_kappa
    if p.t > 2:
        lo_end = max(lo_end, solve_d(p.t))
    k2, t = p.kappa**2, p.t

    def f(a):
        return _g_and_dg(complex(a), k2, t)[0].real - T

    width = A - lo_end
    frac = 0.5
    while True:
        a_lo = lo_end + frac * width
        if f(a_lo) < 0:
            break
        frac *= 0.5
        if frac < 1e-300:
            raise BracketError("real inverse bracket failed")
    if f(A) <= 0:
        return A
    return brentq(f, a_lo, A, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def _target(z):
    def target(r):
        rz = r * z
        return 4 * rz / (1 + rz) ** 2, 4 * z * (1 - rz) / (1 + rz) ** 3

    return target


def _track(x0, fn, target, what):
    """Predictor-corrector on ``fn(x) = target(r)``, ``r: 0 -> 1``.

    ``fn`` returns the value and derivative; non-finite values or a
    rejected point (``fn`` returning None) shrink the step.
    """
    x, r, dr = x0, 0.0, 0.05
    while r < 1.0:
        dr = min(dr, 1.0 - r)
        f0, df0 = fn(x)
        _, dT = target(r)
        x_pred = x + dr * dT / df0
        r_new = r + dr
        T_new, _ = target(r_new)
        cand, ok = x_pred, False
        for _ in range(15):
            try:
                fv = fn(cand)
                if fv is None:
                    break
                step = (fv[0] - T_new) / fv[1]
            except (OverflowError, ZeroDivisionError):
                break
            cand -= step
            if abs(step) <= 1e-14 * max(1.0, abs(cand)):
                ok = fn(cand) is not None
                break
        jump = abs(cand - x_pred)
        if ok and jump <= max(0.3 * abs(x_pred - x), 1e-10):
            x, r = cand, r_new
            dr *= 1.6
        else:
            dr *= 0.5
            if dr < 1e-13:
                raise ConvergenceError(
                    f"psi_inverse {what} continuation stalled at r={r:.6g}",
                    abs(f0 - target(r)[0]),
                )
    return x


def _continuation(z, p, tol):
    k2, t = p.kappa**2, p.t
    target = _target(z)

    def in_a(a):
        if not a.real > 0:
            return None
        return _g_and_dg(a, k2, t)

    try:
        return _track(1.0 + 0j, in_a, target, "a-space")
    except ConvergenceError:
        pass

    # g has a critical point at a = 0, which lies over the cut; near there
    # the a-space path is square-root like, but g(a(H0(w))) is regular in w.
    def in_w(w):
        if not abs(w) < 1:
            return None
        y = (1 + w) / (1 - w)
        a = cmath.sqrt(k2 + (1 - k2) * y * y)
        if a == 0:
            return None
        gv, dg = _g_and_dg(a, k2, t)
        return gv, dg * (1 - k2) * y / a * 2 / (1 - w) ** 2

    w = _track(0j, in_w, target, "w-space")
    y = (1 + w) / (1 - w)
    return cmath.sqrt(k2 + (1 - k2) * y * y)


def psi_prime(w, p):
    """Derivative of :func:`psi` at a scalar ``w`` by the chain rule."""
    w = complex(w)
    k2 = p.kappa**2
    y = (1 + w) / (1 - w)
    a = cmath.sqrt(k2 + (1 - k2) * y * y)
    gv, dg = _g_and_dg(a, k2, p.t)
    root = cmath.sqrt(1 - gv)
    # alpha'(g) = 1 / (s (1+s)^2) with s = sqrt(1-g)
    return dg / (root * (1 + root) ** 2) * (1 - k2) * y / a * 2 / (1 - w) ** 2


def psi_inverse(z, p, tol=None, certify=False):
    """Solve ``psi(w) = z`` for ``w`` in the univalence domain.

    Newton continuation in the a-variable along ``r*z``, ``r: 0 -> 1``, started
    at ``a = 1`` (the image of ``w = 0``).  Real targets use bracketing on the
    real line instead.  With ``certify=True`` the result is also checked with
    :func:`in_domain`.
    """
    tol = TOL.inverse if tol is None else tol
    z = complex(z)
    if not abs(z) < 1:
        raise DomainError("psi_inverse expects a target in the open unit disc")
    if z == 0:
        return 0j
    if p.t == 0:
        return z
    if z.imag == 0:
        a = complex(_solve_real(z.real, p))
    else:
        a = _continuation(z, p, tol)
    y = complex(maps.radial_a_inv(a, p.kappa))
    if not y.real > 0:
        raise DomainEscapeError("continuation left the unit disc", float("nan"))
    w = (y - 1) / (y + 1)
    if z.imag == 0:
        w = complex(w.real, 0.0)
    resid = abs(complex(psi(w, p)) - z)
    # rounding w, or a before it is mapped to w, moves psi(w) by about
    # eps |psi'(w)| (|w| + |a| |dw/da|); at large t Lambda shrinks towards 0,
    # a sits within 1e-9 of 1 and this floor dominates
    k2 = p.kappa**2
    da_dw = (1 - k2) * y / a * 2 / (1 - w) ** 2
    floor = 64 * 2.2e-16 * abs(psi_prime(w, p)) * (abs(w) + abs(a) / abs(da_dw))
    if not resid <= tol * max(1.0, 1.0 / max(1e-300, 1 - abs(z))) + floor:
        raise ConvergenceError(f"psi_inverse residual {resid:.3e} above tolerance", resid)
    if certify and not in_domain(w, p).inside:
        raise DomainEscapeError("inverse image is not certified inside Lambda", resid)
    return w


def sample_domain(p, m, rng, radius=0.95):
    """``m`` points of Lambda as inverse images of uniform points of ``|w| < radius``.

    Rejection sampling in the disc degrades badly at large ``t`` where
    Lambda shrinks, so the samples are drawn on the image side instead.
    """
    r = radius * np.sqrt(rng.uniform(size=m))
    th = rng.uniform(-math.pi, math.pi, size=m)
    return np.array([psi_inverse(x, p) for x in r * np.exp(1j * th)])


def psi_inverse_a(z, p):
    """``a(H0(psi^{-1}(z)))``, i.e. the local inverse of ``phi`` at ``z``."""
    z = complex(z)
    if z == 0 or p.t == 0:
        return complex(z_to_a(z, p.kappa)) if z != 0 else 1 + 0j
    if z.imag == 0:
        return complex(_solve_real(z.real, p))
    return _continuation(z, p, TOL.inverse)


def trace_boundary(p, n_points=128, eps=1e-9, theta_max=None):
    """Sample the boundary of Lambda as ``psi^{-1}((1-eps) e^{i theta})``.

    Returns both conjugate halves, ``theta`` on a midpoint grid in
    ``(0, theta_max)``.
    """
    theta_max = math.pi * 0.98 if theta_max is None else theta_max
    theta = (np.arange(n_points) + 0.5) * theta_max / n_points
    r = 1.0 - eps
    upper = np.array(
        [psi_inverse(r * cmath.exp(1j * th), p, tol=1e-6) for th in theta], dtype=complex
    )
    return np.concatenate([upper, upper.conj()])


# ---------------------------------------------------------------------------
# strip and boundary-equation evaluators


def eq2_residual(x, u, p):
    """Expanded imaginary-part equation for ``g`` at ``a = x + iu``, x, u > 0.

    Equals ``Im g(x+iu) * |D|^2 / (4 x u e^{tx})`` with
    ``D = (a^2-kappa^2)(a+1+(a-1)e^{ta})^2``, so its zeros and sign match
    those of ``Im g``.
    """
    k2, t = p.kappa**2, p.t
    r2 = x * x + u * u
    E = math.exp(2 * t * x)
    s, c = math.sin(t * u), math.cos(t * u)
    first = -4 * k2 * ((r2 + 1) ** 2 - 4 * x * x) * math.exp(t * x)
    second = (
        (k2 - (k2 + 1) * (x * x - u * u) + r2 * r2)
        / (x * u)
        * (
            2 * x * (E + 1) * (r2 * s + u * c)
            + (1 - E) * ((r2 * r2 + x * x - u * u) * s + 2 * u * r2 * c)
        )
    )
    third = (
        2
        * (1 - k2)
        * (
            (1 - E) * (2 * x * r2 * c - 2 * x * u * s)
            + (E + 1) * ((r2 * r2 + x * x - u * u) * c - 2 * u * r2 * s)
        )
    )
    return first + second + third


def eq2_normalizer(x, u, p):
    """Positive factor ``N`` with ``Im g(x+iu) = N * eq2_residual(x, u)``."""
    a = complex(x, u)
    e = cmath.exp(p.t * a)
    D = (a * a - p.kappa**2) * (a + 1 + (a - 1) * e) ** 2
    return 4 * x * u * math.exp(p.t * x) / abs(D) ** 2


def eq2_limit(u, p):
    """The ``x -> 0+`` limit of :func:`eq2_residual` in unfactored form."""
    k2, t = p.kappa**2, p.t
    s, c = math.sin(t * u), math.cos(t * u)
    return (
        -4 * k2 * (u * u + 1) ** 2
        + 2 * (1 + u * u) * (k2 + u * u) * (u * (t + 2 - t * u * u) * s + 2 * (1 - t * u * u) * c)
        + 4 * u * u * (1 - k2) * ((u * u - 1) * c - 2 * u * s)
    )


def eq2_limit_factored(u, p, tol=None):
    """Factors ``(f1, f2)`` of the ``x -> 0+`` limit, which equals ``-4 f1 f2``.

    ``f1 = u cos(tu/2) - sin(tu/2)`` vanishes exactly where ``tan(tu/2) = u``.
    The product is checked against :func:`eq2_limit` on every call.
    """
    tol = TOL.identity if tol is None else tol
    k2, t = p.kappa**2, p.t
    S, C = math.sin(t * u / 2), math.cos(t * u / 2)
    u2 = u * u
    f1 = u * C - S
    f2 = u * (k2 * (t * u2 + t + 2 * u2) + u2 * (t * u2 + t - 2)) * C + (
        k2 * (t * u2 * u2 + (t - 4) * u2 - 2) + u2 * u2 * (t * u2 + t - 2)
    ) * S
    full = eq2_limit(u, p)
    scale = 4 * (1 + u2) ** 2 * (1 + u2 * (1 + t) * (1 + u2)) * (1 + u)
    if abs(full + 4 * f1 * f2) > tol * scale:
        raise IdentityError(f"factorization mismatch at u={u}: {full} vs {-4 * f1 * f2}")
    return f1, f2


def curve_c_kappa(k, beta, kappa):
    """Point ``|kappa| sqrt(k w / (k w - 2))`` with ``w = 1 + i tan(beta)``."""
    w = 1 + 1j * math.tan(beta)
    den = k * w - 2
    if den == 0:
        raise PoleError("curve_c_kappa has a pole at k(1 + i tan beta) = 2")
    return abs(kappa) * cmath.sqrt(k * w / den)
