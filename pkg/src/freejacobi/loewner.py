"""ODE side of the flow: the radial Loewner system and the moment recursion.

Along a characteristic the pair ``(psi, h) = (psi_t(z), H_t(psi_t(z)))``
solves the closed system

    d psi / dt = psi * h,
    d h / dt   = 2 kappa^2 psi (1 + psi) / (1 - psi)^3,

with ``psi(0) = z`` and ``h(0) = H0(z)``.  Nothing here calls the closed-form
flow, so these integrators act as an independent check on it.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, DomainError
from .flow import FlowParams
from .moments import MomentTable, flow_coeffs_fast, unitary_moments

BLOWUP_TOL = 1e-6
MIN_STEP = 1e-13


@dataclass
class OdeTrajectory:
    """Samples of ``psi_s(z0)`` and ``H_s(psi_s(z0))`` for ``s`` in ``times``."""

    z0: complex
    times: np.ndarray
    psi_values: np.ndarray
    h_along: np.ndarray
    step: float
    lifespan: float = np.inf

    @property
    def endpoint(self):
        return complex(self.psi_values[-1])

    @property
    def survived(self):
        return not np.isfinite(self.lifespan)


def _rhs(psi, h, k2):
    return psi * h, 2 * k2 * psi * (1 + psi) / (1 - psi) ** 3


def _rk4(psi, h, dt, k2):
    """One RK4 step; also returns the largest ``|psi|`` among the stages."""
    k1 = _rhs(psi, h, k2)
    p2, h2 = psi + 0.5 * dt * k1[0], h + 0.5 * dt * k1[1]
    k2_ = _rhs(p2, h2, k2)
    p3, h3 = psi + 0.5 * dt * k2_[0], h + 0.5 * dt * k2_[1]
    k3 = _rhs(p3, h3, k2)
    p4, h4 = psi + dt * k3[0], h + dt * k3[1]
    k4 = _rhs(p4, h4, k2)
    reach = np.maximum(np.maximum(abs(p2), abs(p3)), abs(p4))
    return (
        psi + dt / 6 * (k1[0] + 2 * k2_[0] + 2 * k3[0] + k4[0]),
        h + dt / 6 * (k1[1] + 2 * k2_[1] + 2 * k3[1] + k4[1]),
        reach,
    )


def integrate_flow(z0, p, steps=10_000, tol=BLOWUP_TOL):
    """Integrate the Loewner system from 0 to ``p.t`` with RK4.

    The nominal step is ``p.t / steps``.  A step is halved and retried when
    any RK stage reaches ``|psi| >= 1 - tol`` or when it moves ``psi`` by more
    than a tenth of its distance to the circle.  When the step falls below
    ``MIN_STEP`` the trajectory stops and the current time is recorded as
    its lifespan.
    """
    z0 = complex(z0)
    if not abs(z0) < 1:
        raise DomainError("integrate_flow expects z0 in the open unit disc")
    if steps < 100:
        raise DomainError("integrate_flow needs at least 100 steps")
    k2 = p.kappa**2
    dt0 = p.t / steps
    psi, h, s = z0, (1 + z0) / (1 - z0), 0.0
    times, ps, hs = [0.0], [psi], [h]
    life = np.inf
    while s < p.t and p.t > 0:
        dt = min(dt0, p.t - s)
        while True:
            try:
                new_psi, new_h, reach = _rk4(psi, h, dt, k2)
                # near the circle h grows like 1/(1-|psi|); keep each move
                # a small fraction of the remaining distance
                ok = (
                    reach < 1 - tol
                    and abs(new_psi) < 1 - tol
                    and abs(new_psi - psi) <= 0.1 * (1 - abs(psi))
                    and np.isfinite(new_h)
                )
            except (ZeroDivisionError, OverflowError):
                ok = False
            if ok:
                break
            dt *= 0.5
            if dt < MIN_STEP:
                life = s
                break
        if np.isfinite(life):
            break
        psi, h, s = new_psi, new_h, s + dt
        times.append(s)
        ps.append(psi)
        hs.append(h)
    return OdeTrajectory(z0, np.array(times), np.array(ps), np.array(hs), dt0, life)


def integrate_endpoints(z0, p, steps=2000):
    """Vectorized fixed-step RK4 endpoints ``psi_t(z0)`` for an array of starts.

    Starts whose trajectory leaves the disc come back as ``nan``.
    """
    z0 = np.asarray(z0, dtype=complex)
    k2 = p.kappa**2
    psi = z0.copy()
    h = (1 + z0) / (1 - z0)
    dt = p.t / steps
    with np.errstate(all="ignore"):
        for _ in range(steps):
            psi, h, reach = _rk4(psi, h, dt, k2)
            dead = ~(reach < 1) | ~(np.abs(psi) < 1)
            psi = np.where(dead, np.nan, psi)
    return psi


def lifespan(z0, p_kappa, t_max, steps_per_unit=2000):
    """``min(T_{z0}, t_max)`` where ``T_z`` is the exit time of ``psi_s(z)`` from the disc."""
    if z0 == 0:
        return float(t_max)
    p = FlowParams(p_kappa, t_max)
    steps = max(100, int(np.ceil(steps_per_unit * t_max)))
    traj = integrate_flow(z0, p, steps)
    return float(min(traj.lifespan, t_max))


def moment_ode(p, n_max, rtol=1e-12, atol=1e-14):
    """``tau(U_t^n)`` from the coefficient form of the Herglotz PDE.

    Matching powers of ``z`` gives the closed triangular system

        m_n' = -n m_n - n sum_{k=1}^{n-1} m_k m_{n-k} + kappa^2 n^2,

    with ``m_n(0) = 1``.
    """
    n = np.arange(1, n_max + 1)
    k2 = p.kappa**2

    def rhs(_, m):
        full = np.concatenate([[0.0], m])
        conv = np.array([np.dot(full[1:k], full[k - 1 : 0 : -1]) for k in n])
        return -n * m - n * conv + k2 * n * n

    if p.t == 0:
        return np.ones(n_max)
    sol = solve_ivp(rhs, (0.0, p.t), np.ones(n_max), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise ConvergenceError(f"moment ODE failed: {sol.message}", float("nan"))
    return sol.y[:, -1]


def ode_moment_table(p, n_max):
    return MomentTable.from_u(p, moment_ode(p, n_max), "ode-oracle")


def pde_coefficient_residual(p, n_max, h=1e-4):
    """``|d/dt tau(U_t^n) + n sum_{k=1}^n b_k b_{n-k}|`` for ``n = 1..n_max``.

    The time derivative is a central difference of the quadrature moments;
    ``b_k = c_k / 2`` at time ``t``.
    """
    if n_max > 10:
        raise DomainError("pde_coefficient_residual supports n_max <= 10")
    if p.t < h:
        raise DomainError("need t >= h for a central difference")
    up = unitary_moments(n_max, FlowParams(p.kappa, p.t + h))
    down = unitary_moments(n_max, FlowParams(p.kappa, p.t - h))
    deriv = (up - down) / (2 * h)
    s = np.array([p.t])
    b = [1.0] + [0.5 * float(flow_coeffs_fast(k, p.kappa, s)[0]) for k in range(1, n_max + 1)]
    rhs = np.array([n * sum(b[k] * b[n - k] for k in range(1, n + 1)) for n in range(1, n_max + 1)])
    return np.abs(deriv + rhs)
