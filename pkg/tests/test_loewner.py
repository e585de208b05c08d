import cmath

import numpy as np
import pytest

from freejacobi import flow, herglotz, loewner, moments
from freejacobi.errors import DomainError
from freejacobi.flow import FlowParams

from conftest import disc_points


def test_time_zero_is_identity():
    traj = loewner.integrate_flow(0.3 + 0.2j, FlowParams(0.6, 0.0))
    assert traj.endpoint == 0.3 + 0.2j
    assert traj.survived


def test_origin_is_fixed():
    traj = loewner.integrate_flow(0, FlowParams(0.6, 2.0), 1000)
    assert np.all(traj.psi_values == 0)
    assert traj.lifespan == np.inf
    assert loewner.lifespan(0, 0.6, 5.0) == 5.0


def test_trajectory_invariants():
    z0 = 0.1 - 0.2j
    traj = loewner.integrate_flow(z0, FlowParams(-0.3, 1.0), 2000)
    assert traj.psi_values[0] == z0
    assert np.all(np.abs(traj.psi_values) < 1)
    assert traj.h_along[0] == pytest.approx((1 + z0) / (1 - z0))
    assert traj.times[-1] == pytest.approx(1.0)


def test_endpoint_matches_closed_form(rng):
    for k, t in ((0.0, 1.0), (0.6, 0.5), (-0.9, 2.0)):
        p = FlowParams(k, t)
        for z0 in flow.sample_domain(p, 5, rng):
            traj = loewner.integrate_flow(z0, p, 10_000)
            assert abs(traj.endpoint - complex(flow.psi(z0, p))) < 1e-6
            # the companion variable is H_t at the endpoint
            assert abs(traj.h_along[-1] - herglotz.h_eval(traj.endpoint, p)) < 1e-6 * max(1, abs(traj.h_along[-1]))


def test_vectorized_endpoints(rng):
    p = FlowParams(0.3, 1.0)
    z0 = flow.sample_domain(p, 20, rng)
    out = loewner.integrate_endpoints(z0, p, 4000)
    assert np.max(np.abs(out - flow.psi(z0, p))) < 1e-6


def test_real_starts_stay_real_and_increase():
    p = FlowParams(0.6, 1.0)
    zr = flow.solve_z_right(p)
    for frac in (0.2, 0.6, 0.95):
        traj = loewner.integrate_flow(frac * zr, p, 2000)
        assert np.max(np.abs(traj.psi_values.imag)) == 0
        assert np.all(np.diff(traj.psi_values.real) > 0)
        assert traj.endpoint.real < 1


def test_conjugation_equivariance():
    p = FlowParams(0.9, 0.7)
    a = loewner.integrate_flow(0.2 + 0.3j, p, 1000)
    b = loewner.integrate_flow(0.2 - 0.3j, p, 1000)
    assert np.allclose(a.psi_values, b.psi_values.conj(), atol=1e-14)


def test_lifespan_at_right_boundary_point():
    for k in (0.0, 0.6):
        z = flow.solve_z_right(FlowParams(k, 1.0))
        assert loewner.lifespan(z, k, 3.0) == pytest.approx(1.0, abs=1e-3)


def test_outside_start_exits_early():
    p = FlowParams(0.0, 2.0)
    zr = flow.solve_z_right(FlowParams(0.0, 1.0))
    traj = loewner.integrate_flow(0.5 * (zr + 1), p, 2000)
    assert not traj.survived
    assert traj.lifespan < 1.0


def test_argument_checks():
    with pytest.raises(DomainError):
        loewner.integrate_flow(1.0, FlowParams(0.0, 1.0))
    with pytest.raises(DomainError):
        loewner.integrate_flow(0.1, FlowParams(0.0, 1.0), steps=10)


def test_moment_ode_matches_formula():
    for k, t in ((0.0, 1.0), (0.6, 0.5), (-0.9, 3.0)):
        p = FlowParams(k, t)
        assert np.allclose(loewner.moment_ode(p, 8), moments.unitary_moments(8, p), atol=1e-10)
    assert np.all(loewner.moment_ode(FlowParams(0.3, 0.0), 3) == 1)
    table = loewner.ode_moment_table(FlowParams(0.6, 1.0), 4)
    assert table.source == "ode-oracle" and table.check() == []


def test_pde_residual_examples():
    r = loewner.pde_coefficient_residual(FlowParams(0.6, 1.0), 8)
    assert r[0] < 1e-5
    assert np.all(r < 1e-5)
    assert np.all(loewner.pde_coefficient_residual(FlowParams(0.0, 1.0), 8) < 1e-5)
    early = loewner.pde_coefficient_residual(FlowParams(0.3, 1e-3), 8)
    assert np.all(np.isfinite(early)) and np.all(early < 1e-3)


def test_pde_residual_kappa_zero_recursion():
    # at kappa = 0: d/dt b_n = -n b_n - n sum_{k=1}^{n-1} b_k b_{n-k}
    t, h = 1.0, 1e-4
    b = lambda n, s: moments.kappa_zero_moment(n, s)
    for n in range(1, 6):
        lhs = (b(n, t + h) - b(n, t - h)) / (2 * h)
        rhs = -n * b(n, t) - n * sum(b(k, t) * b(n - k, t) for k in range(1, n))
        assert lhs == pytest.approx(rhs, abs=1e-7)


def test_pde_residual_limits():
    with pytest.raises(DomainError):
        loewner.pde_coefficient_residual(FlowParams(0.0, 1.0), 11)
    with pytest.raises(DomainError):
        loewner.pde_coefficient_residual(FlowParams(0.0, 1e-5), 2)
