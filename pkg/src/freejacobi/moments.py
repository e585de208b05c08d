"""Explicit moment formulas for the flow and the two operator families.

The Taylor coefficients ``c_n`` of the local inverse ``K = phi^{-1}`` about
``z = 0`` (``K(0) = 1``) are an alternating triple sum.  For a fixed ``n`` the
sum regroups as

    c_n(kappa, t) = sum_j exp(-j t) R_{n,j}(t, kappa**2)

with ``R_{n,j}`` a polynomial with rational coefficients.  Those polynomials
are built once with exact integer arithmetic; evaluation then uses exact
rationals for ``R`` and double-double exponentials, so the cancellation
between the ``j`` terms costs nothing.  Past ``EXACT_MAX`` the same
polynomials are evaluated in floats with compensated summation and the
condition number is reported.
"""

import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, fsum, prod

import numpy as np

from . import _dd
from . import series as S
from .errors import ConvergenceError, DomainError, FlowOverflowError, QuadratureError
from .flow import FlowParams

EXACT_MAX = 30
QUAD_TOL = 1e-10

# 64-point Gauss-Legendre rule on [-1, 1], used by the fixed quadrature path
_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def laguerre(k, gamma, x):
    """Generalized Laguerre polynomial ``L_k^{(gamma)}(x)``.

    Three-term recurrence; ``x`` may be an array.
    """
    if k < 0:
        raise DomainError("laguerre degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev[()] if prev.ndim == 0 else prev
    cur = 1 + gamma - x
    for i in range(1, k):
        prev, cur = cur, ((2 * i + 1 + gamma - x) * cur - (i + gamma) * prev) / (i + 1)
    return cur[()] if cur.ndim == 0 else cur


def _poch(start, m):
    """Rising factorial with the convention ``(0)_m = delta_{m0}``."""
    if start == 0:
        return 1 if m == 0 else 0
    return prod(range(start, start + m))


@lru_cache(maxsize=None)
def _p_coeffs(k, m):
    """Coefficients in ``eps`` of ``P_k^{(m)}(eps)``, exact."""
    scale = Fraction((-2) ** m, factorial(m))
    return tuple(scale * comb(k, j) * (-1) ** j * _poch(2 * j, m) for j in range(k + 1))


def p_poly(k, m, eps):
    """``(-2)^m/m! * sum_j C(k,j) (-eps)^j (2j)_m``.

    Parameters
    ----------
    k : int
        Degree, ``k >= 1``.
    m : int
        Order, ``m >= 0``.
    eps : float
        Evaluated exactly from its binary value; the result is rounded once.
    """
    if k < 1 or m < 0:
        raise DomainError("p_poly needs k >= 1 and m >= 0")
    e = Fraction(eps)
    return float(sum(c * e**b for b, c in enumerate(_p_coeffs(k, m))))


def _laguerre_coeffs(k, gamma):
    return [Fraction((-1) ** i * comb(k + gamma, k - i), factorial(i)) for i in range(k + 1)]


@lru_cache(maxsize=None)
def _r_table(n):
    """Exact ``R_{n,j}`` as ``{j: C}`` with ``C[a][b]`` the coefficient of t^a eps^b."""
    out = {}
    for j in range(1, n + 1):
        C = [[Fraction(0)] * (n + 1) for _ in range(n + 1)]
        for m in range(j):
            # L_{j-m-1}^{(m+1)}(2 j t) expanded in powers of t
            lt = [c * (2 * j) ** i for i, c in enumerate(_laguerre_coeffs(j - m - 1, m + 1))]
            W = [Fraction(0)] * (n + 1)
            for k in range(j, n + 1):
                w = Fraction((-1) ** (n + k) * 2 * n, n + k) * comb(n + k, n - k) * comb(2 * k, k - j)
                for b, pc in enumerate(_p_coeffs(k, m)):
                    W[b] += w * pc
            for a, la in enumerate(lt):
                if la:
                    for b, wb in enumerate(W):
                        C[a][b] += la * wb
        scale = Fraction(2, n)
        out[j] = tuple(tuple(x * scale for x in row) for row in C)
    return out


@lru_cache(maxsize=4096)
def _t_polys(n, kappa):
    """Exact t-polynomial coefficients of ``R_{n,j}`` at ``eps = kappa**2``."""
    eps = Fraction(kappa) ** 2
    powers = [eps**b for b in range(n + 1)]
    return {
        j: tuple(sum(cb * pb for cb, pb in zip(row, powers)) for row in C)
        for j, C in _r_table(n).items()
    }


@lru_cache(maxsize=4096)
def _t_polys_float(n, kappa):
    """Float copies of :func:`_t_polys` in ``np.polyval`` order."""
    try:
        return {j: np.array([float(c) for c in reversed(cs)]) for j, cs in _t_polys(n, kappa).items()}
    except OverflowError as exc:
        raise FlowOverflowError(f"coefficients of c_{n} exceed the double range") from exc


def _exact_poly(coeffs, t):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def flow_coeff_condition(n, p):
    """``(c_n, condition)`` where ``condition = sum|terms| / |sum|`` over ``j``."""
    if n < 0:
        raise DomainError("flow_coeff needs n >= 0")
    if n == 0:
        return 1.0, 1.0
    if p.t == 0:
        # K is then the inverse of (a^2-1)/(a^2-kappa^2); coefficients via the oracle
        return float(series_reversion_oracle(p, n)[n]), 1.0
    kappa = float(p.kappa)
    if n <= EXACT_MAX:
        tf = Fraction(p.t)
        e1 = _dd.exp(-p.t)
        ej = (1.0, 0.0)
        terms = []
        for j, coeffs in _t_polys(n, kappa).items():
            ej = _dd.mul(ej, e1)
            terms.append(_dd.to_fraction(ej) * _exact_poly(coeffs, tf))
        total = sum(terms)
        value = float(total)
        mag = float(sum(abs(x) for x in terms))
    else:
        terms = [np.exp(-j * p.t) * np.polyval(c, p.t) for j, c in _t_polys_float(n, kappa).items()]
        value = fsum(terms)
        mag = fsum(abs(x) for x in terms)
    cond = mag / abs(value) if value != 0 else float("inf")
    if n > EXACT_MAX and cond > 1e8:
        warnings.warn(f"c_{n} evaluated in floats with condition {cond:.2e}", RuntimeWarning, stacklevel=2)
    return value, cond


def flow_coeff(n, p):
    """Taylor coefficient ``c_n`` of ``K(z) = phi^{-1}(z) = 1 + sum c_n z^n``.

    Examples
    --------
    >>> round(flow_coeff(1, FlowParams(0.6, 1.0)), 6)
    0.470886
    """
    return flow_coeff_condition(n, p)[0]


@lru_cache(maxsize=4096)
def _t_polys_dd(n, kappa):
    """Double-double coefficient matrices of :func:`_t_polys`.

    Row ``j-1`` holds ``R_{n,j}``, highest power of ``t`` first.
    """
    polys = _t_polys(n, kappa)
    pairs = [[_dd.from_fraction(c) for c in reversed(polys[j])] for j in sorted(polys)]
    hi = np.array([[h for h, _ in row] for row in pairs])
    lo = np.array([[l for _, l in row] for row in pairs])
    return hi, lo


def flow_coeffs_fast(n, kappa, s):
    """Vectorized ``c_n`` over an array of times ``s``.

    The polynomials and ``exp(-j s)`` are handled in double-double, which
    absorbs the cancellation up to ``n = EXACT_MAX``; the result is rounded
    to a float at the end.
    """
    s = np.asarray(s, dtype=float)
    if n == 0:
        return np.ones_like(s)
    hi, lo = _t_polys_dd(n, float(kappa))
    flat = s.reshape(1, -1)
    zero = np.zeros((hi.shape[0], flat.shape[1]))
    sd = (flat + zero, zero)
    acc = (hi[:, :1] + zero, lo[:, :1] + zero)
    for d in range(1, hi.shape[1]):
        acc = _dd.add(_dd.mul(acc, sd), (hi[:, d : d + 1], lo[:, d : d + 1]))
    # rows of exp(-j s), j = 1..n
    e1 = _dd.exp_array(-flat[0])
    rows_h, rows_l = [e1[0]], [e1[1]]
    for _ in range(1, hi.shape[0]):
        nxt = _dd.mul((rows_h[-1], rows_l[-1]), e1)
        rows_h.append(nxt[0])
        rows_l.append(nxt[1])
    terms = _dd.mul(acc, (np.array(rows_h), np.array(rows_l)))
    total = (terms[0][0], terms[1][0])
    for j in range(1, hi.shape[0]):
        total = _dd.add(total, (terms[0][j], terms[1][j]))
    return (total[0] + total[1]).reshape(s.shape)


def series_reversion_oracle(p, n_max, max_iter=12):
    """Coefficients of ``K`` with ``phi(K(z)) = z`` by formal Newton iteration.

    Works on the division-free form of ``phi(K) = z``,

        K^2 (K^2-1) e^{tK} (1+z)^2 = z (K^2-kappa^2) (K+1+(K-1)e^{tK})^2,

    which needs only series products, ``exp`` and one reciprocal per step.
    Each iteration doubles the number of correct orders.

    Returns
    -------
    numpy.ndarray
        ``c[0..n_max]`` with ``c[0] = 1``.
    """
    if not 1 <= n_max <= 20:
        raise DomainError("series_reversion_oracle supports 1 <= n_max <= 20")
    N = n_max + 1
    k2, t = p.kappa**2, p.t
    one = S.constant(1.0, N)
    z = S.variable(N)
    opz2 = S.mul(one + z, one + z)
    K = one.copy()
    K[1] = 2 * (1 - k2) * np.exp(-t)

    def residual(K):
        E = S.exp(t * K)
        K2 = S.mul(K, K)
        D = K + one + S.mul(K - one, E)
        F = S.mul(S.mul(K2, K2 - one), S.mul(E, opz2)) - S.mul(z, S.mul(K2 - k2 * one, S.mul(D, D)))
        return F, E, K2, D

    for _ in range(max_iter):
        F, E, K2, D = residual(K)
        dE = t * E
        dD = one + E + S.mul(K - one, dE)
        dl = S.mul(S.mul(4 * S.mul(K2, K) - 2 * K, E) + S.mul(S.mul(K2, K2 - one), dE), opz2)
        dr = S.mul(z, S.mul(2 * K, S.mul(D, D)) + S.mul(K2 - k2 * one, 2 * S.mul(D, dD)))
        step = S.div(F, dl - dr)
        K -= step
        if np.max(np.abs(step)) <= 1e-17 * np.max(np.abs(K)):
            break
    F = residual(K)[0]
    bad = np.nonzero(np.abs(F) > 1e-12 * max(1.0, np.abs(K).max()) ** 4)[0]
    if bad.size:
        order = int(bad[0])
        raise ConvergenceError(f"reversion did not converge at order {order}", float(abs(F[order])))
    return K


def formula_coeffs(p, n_max):
    """``c[0..n_max]`` from the closed formula, ``c[0] = 1``."""
    return np.array([1.0] + [flow_coeff(n, p) for n in range(1, n_max + 1)])


def reversion_gap(p, n_max, coeffs=None):
    """Largest relative gap between ``coeffs`` and the reversion oracle.

    ``coeffs`` defaults to :func:`formula_coeffs`; passing a perturbed copy
    is how the gate's sensitivity is exercised.
    """
    c = formula_coeffs(p, n_max) if coeffs is None else np.asarray(coeffs, dtype=float)
    ref = series_reversion_oracle(p, n_max)
    scale = np.maximum(np.abs(ref[1:]), 1e-300)
    return float(np.max(np.abs(c[1 : n_max + 1] - ref[1:]) / scale))


def _integrand(n_max, kappa, s):
    """Rows ``n * sum_{k=1}^n b_k b_{n-k}`` for ``n = 1..n_max`` at times ``s``."""
    b = [np.ones_like(s)] + [0.5 * flow_coeffs_fast(k, kappa, s) for k in range(1, n_max + 1)]
    return np.array([n * sum(b[k] * b[n - k] for k in range(1, n + 1)) for n in range(1, n_max + 1)])


def _panel_rule(f, t, panels):
    half = 0.5 * t / panels
    starts = np.arange(panels) * 2 * half
    s = (starts[:, None] + half * (_GL_X + 1)[None, :]).ravel()
    vals = f(s)
    return half * np.einsum("npk,k->n", vals.reshape(vals.shape[0], panels, -1), _GL_W)


def _integrate(f, t, method):
    if method == "gauss":
        return _panel_rule(f, t, 4)
    if method != "adaptive":
        raise ValueError(f"unknown quadrature method {method!r}")
    panels = max(1, int(np.ceil(t)))
    prev = _panel_rule(f, t, panels)
    for _ in range(6):
        panels *= 2
        cur = _panel_rule(f, t, panels)
        err = np.max(np.abs(cur - prev))
        if err <= QUAD_TOL:
            return cur
        prev = cur
    raise QuadratureError(f"panel quadrature stalled at error {err:.2e} with {panels} panels")


def unitary_moments(n_max, p, method="adaptive"):
    """``tau(U_t^n)``, ``n = 1..n_max``, from one vectorized quadrature.

    ``tau(U_t^n) = 1 - n int_0^t sum_{k=1}^n b_k b_{n-k} ds`` with ``b = c/2``.
    ``method="adaptive"`` doubles the number of 64-node Gauss-Legendre panels
    until two successive sums agree to ``QUAD_TOL``; ``"gauss"`` uses a fixed
    4-panel rule.
    """
    if n_max < 1:
        raise DomainError("need n_max >= 1")
    if p.t == 0:
        return np.ones(n_max)
    kappa = float(p.kappa)
    return 1.0 - _integrate(lambda s: _integrand(n_max, kappa, s), p.t, method)


def unitary_moment(n, p, method="adaptive"):
    """Single moment ``tau(U_t^n)``; see :func:`unitary_moments`."""
    if n < 1:
        raise DomainError("unitary_moment needs n >= 1")
    if p.t == 0:
        return 1.0
    kappa = float(p.kappa)
    return float(1.0 - _integrate(lambda s: _integrand(n, kappa, s)[-1:], p.t, method)[0])


def unitary_moments_oracle(p, n_max, method="adaptive"):
    """Same quadrature as :func:`unitary_moments`, with ``c_k(s)`` taken from
    :func:`series_reversion_oracle` instead of the closed formula."""
    if p.t == 0:
        return np.ones(n_max)

    def f(s):
        cols = []
        for si in np.atleast_1d(s):
            b = 0.5 * series_reversion_oracle(FlowParams(p.kappa, float(si)), n_max)
            b[0] = 1.0
            cols.append([n * sum(b[k] * b[n - k] for k in range(1, n + 1)) for n in range(1, n_max + 1)])
        return np.array(cols).T

    return 1.0 - _integrate(f, p.t, method)


def binomial_bracket(n, u_moments, kappa):
    """``2^{-(2n+1)}C(2n,n) + kappa/2 + 2^{-2n} sum_k C(2n,n-k) u_k`` (``u_k`` 1-based)."""
    head = Fraction(comb(2 * n, n), 2 ** (2 * n + 1))
    tail = fsum(comb(2 * n, n - k) * float(u_moments[k - 1]) for k in range(1, n + 1))
    return float(head) + kappa / 2 + tail / 4**n


def jacobi_moment(n, p, u_moments=None):
    """``tau(J_t^n) / tau(P)`` with ``tau(P) = (1+kappa)/2``.

    ``u_moments`` may supply precomputed ``tau(U_t^k)``, ``k = 1..n``.
    """
    if n < 1:
        raise DomainError("jacobi_moment needs n >= 1")
    if p.kappa == -1:
        raise DomainError("tau(P) vanishes at kappa = -1")
    if u_moments is None:
        u_moments = unitary_moments(n, p)
    return binomial_bracket(n, u_moments, p.kappa) / ((1 + p.kappa) / 2)


@dataclass
class MomentTable:
    """Moments ``tau(U_t^n)`` and ``tau(J_t^n)/tau(P)`` for ``n = 1..n_max``."""

    params: FlowParams
    n_max: int
    u_moments: np.ndarray
    j_moments: np.ndarray
    source: str = "formula"

    SOURCES = ("formula", "reversion-oracle", "ode-oracle", "monte-carlo")

    def __post_init__(self):
        if self.source not in self.SOURCES:
            raise ValueError(f"unknown moment source {self.source!r}")
        self.u_moments = np.asarray(self.u_moments, dtype=float)
        self.j_moments = np.asarray(self.j_moments, dtype=float)

    def check(self, slack=1e-9):
        """List invariant violations (empty when everything holds)."""
        out = []
        for n, u in enumerate(self.u_moments, 1):
            if abs(u) > 1 + slack:
                out.append(f"|u_{n}| = {abs(u):.6g} > 1")
        for n, j in enumerate(self.j_moments, 1):
            if not -slack <= j <= 1 + slack:
                out.append(f"j_{n} = {j:.6g} outside [0, 1]")
        for n in range(1, len(self.j_moments)):
            if self.j_moments[n] > self.j_moments[n - 1] + slack:
                out.append(f"j_{n + 1} > j_{n}")
        return out

    @classmethod
    def from_u(cls, params, u_moments, source):
        u = np.asarray(u_moments, dtype=float)
        j = [binomial_bracket(n, u, params.kappa) / ((1 + params.kappa) / 2) for n in range(1, len(u) + 1)]
        return cls(params, len(u), u, np.array(j), source)


def moment_table(p, n_max):
    """Formula-based :class:`MomentTable`."""
    return MomentTable.from_u(p, unitary_moments(n_max, p), "formula")


def kappa_zero_moment(n, t):
    """Closed form ``e^{-nt}/n L_{n-1}^{(1)}(2nt)`` of ``tau(U_t^n)`` at ``kappa = 0``."""
    return float(np.exp(-n * t) / n * laguerre(n - 1, 1, 2 * n * t))
