import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freejacobi import maps
from freejacobi.errors import DomainError, PoleError

from conftest import disc_points

unit = st.floats(0.0, 0.98)
angle = st.floats(-math.pi, math.pi)


@pytest.mark.parametrize("z, expected", [(0, 0), (1, 1), (-3, -1 / 3)])
def test_szego_alpha_values(z, expected):
    assert maps.szego_alpha(z) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("z, expected", [(0, 0), (1, 1), (-1 / 3, -3)])
def test_szego_alpha_inv_values(z, expected):
    assert maps.szego_alpha_inv(z) == pytest.approx(expected, abs=1e-14)


def test_alpha_rejects_the_ray_beyond_one():
    with pytest.raises(DomainError):
        maps.szego_alpha(2.0)


@pytest.mark.parametrize("z, expected", [(0, 1), (1 / 3, 2), (-1, 0)])
def test_h0_values(z, expected):
    assert maps.herglotz_h0(z) == pytest.approx(expected, abs=1e-15)


def test_h0_pole():
    with pytest.raises(PoleError):
        maps.herglotz_h0(1.0)


@pytest.mark.parametrize(
    "y, kappa, expected",
    [(1, 0.3, 1), (1, -0.9, 1), (0, 0.6, 0.6), (2, 0.6, 1.70880)],
)
def test_radial_a_values(y, kappa, expected):
    assert maps.radial_a(y, kappa) == pytest.approx(expected, abs=1e-5)


def test_xi_values():
    assert maps.xi(1, 0.7) == 0
    assert maps.xi(0, 0.7) == pytest.approx(-1)
    assert maps.xi(2, 1.0) == pytest.approx(math.e**2 / 3, rel=1e-14)


def test_h_inf_values():
    assert maps.herglotz_h_inf(0, 0.6) == pytest.approx(1)
    for z in (0.3, -0.5j, 0.2 + 0.7j):
        assert maps.herglotz_h_inf(z, 0.0) == pytest.approx(1)


def test_h_inf_first_coefficient_is_twice_kappa_squared():
    for k in (0.0, 0.3, -0.6, 0.9):
        c = maps.herglotz_h_inf_series(k, 6)
        assert c[0] == pytest.approx(1)
        assert c[1] == pytest.approx(2 * k * k, abs=1e-14)


def test_h_inf_series_matches_fft_of_values():
    k = 0.6
    m = 64
    pts = 0.3 * np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.array([maps.herglotz_h_inf(z, k) for z in pts])
    fft = (np.fft.fft(vals) / m)[:8] / 0.3 ** np.arange(8)
    assert np.allclose(fft.real, maps.herglotz_h_inf_series(k, 7), atol=1e-12)


def test_alpha_round_trips_on_samples(rng):
    # reverse composition on the disc
    for z in disc_points(rng, 200, 0.999):
        assert abs(maps.szego_alpha(maps.szego_alpha_inv(z)) - z) < 1e-12
    # forward composition on the cut plane, sampled as alpha^{-1}(disc)
    for w in disc_points(rng, 200, 0.99):
        g = maps.szego_alpha_inv(w)
        assert abs(maps.szego_alpha_inv(maps.szego_alpha(g)) - g) < 1e-12 * max(1, abs(g))


def test_positivity_on_disc(rng):
    zs = disc_points(rng, 500, 0.999)
    assert np.all(np.real(maps.herglotz_h0(zs)) > 0)
    for k in (0.3, 0.9):
        assert all(maps.herglotz_h_inf(z, k).real >= -1e-12 for z in zs)


@given(unit, angle, st.floats(-0.95, 0.95), st.floats(0.1, 4.0))
def test_conjugation_symmetry(r, th, kappa, t):
    z = r * cmath.exp(1j * th)
    zc = z.conjugate()
    for f in (maps.szego_alpha, maps.szego_alpha_inv, maps.herglotz_h0):
        assert abs(f(zc) - complex(f(z)).conjugate()) <= 1e-12 * max(1, abs(f(z)))
    y = maps.herglotz_h0(z)
    a = maps.radial_a(y, kappa)
    assert abs(maps.radial_a(y.conjugate(), kappa) - a.conjugate()) <= 1e-12 * max(1, abs(a))
    assert abs(maps.xi(a.conjugate(), t) - complex(maps.xi(a, t)).conjugate()) <= 1e-12 * max(1, abs(maps.xi(a, t)))
    h = maps.herglotz_h_inf(z, kappa)
    assert abs(maps.herglotz_h_inf(zc, kappa) - h.conjugate()) <= 1e-12 * max(1, abs(h))


@given(st.floats(0.0, 5.0), st.floats(-0.99, 0.99))
def test_radial_a_inverse_round_trip(y, kappa):
    a = maps.radial_a(y, kappa)
    assert abs(maps.radial_a_inv(a, kappa) - y) <= 1e-10 * max(1, y)


def test_xi_prime_matches_finite_difference():
    a, t, h = 1.3 + 0.4j, 0.8, 1e-6
    fd = (maps.xi(a + h, t) - maps.xi(a - h, t)) / (2 * h)
    assert abs(maps.xi_prime(a, t) - fd) < 1e-8
