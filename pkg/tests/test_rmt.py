import numpy as np
import pytest

from freejacobi import moments, rmt
from freejacobi.errors import ConfigError
from freejacobi.flow import FlowParams


def small(**kw):
    base = dict(matrix_size=24, kappa=0.3, t=0.2, dt=0.01, trials=4, seed=11, n_max=4)
    base.update(kw)
    return rmt.SimConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        small(dt=0.1)
    with pytest.raises(ConfigError):
        small(matrix_size=1)
    with pytest.raises(ConfigError):
        small(kappa=1.0)
    with pytest.raises(ConfigError):
        small(matrix_size=4, kappa=0.9)  # rank would be N
    cfg = small(matrix_size=512, kappa=0.6)
    assert cfg.rank == 410
    assert cfg.kappa_n == pytest.approx(308 / 512)


def test_time_zero_gives_identity_and_unit_moments():
    cfg = small(t=0.0)
    ys = rmt.sample_unitary_bm(cfg)
    assert all(np.array_equal(y, np.eye(24)) for y in ys)
    emp = rmt.empirical_moments(cfg, ys)
    assert np.all(emp.table.u_moments == 1)
    assert np.allclose(emp.table.j_moments, 1, atol=1e-15)


def test_samples_are_unitary():
    for y in rmt.sample_unitary_bm(small(t=0.6)):
        assert np.max(np.abs(y.conj().T @ y - np.eye(24))) < 1e-10


def test_seeded_runs_are_reproducible_across_worker_counts():
    cfg = small()
    a = rmt.sample_unitary_bm(cfg, workers=1)
    b = rmt.sample_unitary_bm(cfg, workers=3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    c = rmt.sample_unitary_bm(small(seed=12))
    assert not np.array_equal(a[0], c[0])


def test_paths_share_prefix():
    cfg = small(t=0.3)
    paths = rmt.sample_unitary_paths(cfg, [0.1, 0.3])
    short = rmt.sample_unitary_bm(small(t=0.1))
    assert all(np.allclose(x, y, atol=1e-13) for x, y in zip(paths[0.1], short))
    with pytest.raises(ConfigError):
        rmt.sample_unitary_paths(cfg, [0.105])


def test_binomial_relation_is_exact_at_finite_size():
    for k in (-0.5, 0.0, 0.3):
        emp = rmt.empirical_moments(small(kappa=k, t=0.5))
        assert emp.binom_residual < 1e-10
        # U^{-1} = S U S, so the traces are real up to rounding
        assert emp.imag_residue < 1e-10


def test_trial_moments_by_hand():
    # U = S Y S Y*, J = P Y P Y* P restricted to the range of P
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    y, _ = np.linalg.qr(a)
    s = np.diag([1, 1, 1, 1, -1, -1]).astype(complex)
    pmat = np.diag([1, 1, 1, 1, 0, 0]).astype(complex)
    u = s @ y @ s @ y.conj().T
    j = pmat @ y @ pmat @ y.conj().T @ pmat
    tu, tj = rmt._trial_moments(y, 4, 3)
    for n in range(1, 4):
        assert tu[n - 1] == pytest.approx(np.trace(np.linalg.matrix_power(u, n)) / 6)
        assert tj[n - 1] == pytest.approx(np.trace(np.linalg.matrix_power(j, n)).real / 4)


def test_small_simulation_near_formula():
    cfg = rmt.SimConfig(64, 0.0, 0.5, trials=6, seed=5, n_max=3)
    emp = rmt.empirical_moments(cfg)
    ref = moments.moment_table(FlowParams(cfg.kappa_n, 0.5), 3)
    assert np.all(rmt.within_allowance(emp.table.u_moments, ref.u_moments, emp.u_stderr, 64))
    assert np.all(rmt.within_allowance(emp.table.j_moments, ref.j_moments, emp.j_stderr, 64))


def test_allowance_formula():
    ok = rmt.within_allowance([0.5, 0.6], [0.5, 0.5], [0.0, 0.0], 100, c=1.0, sigmas=3.0)
    assert ok.tolist() == [True, False]
    assert rmt.within_allowance(0.529, 0.5, 0.0, 100, c=1.0)
    assert not rmt.within_allowance(0.531, 0.5, 0.0, 100, c=1.0)
