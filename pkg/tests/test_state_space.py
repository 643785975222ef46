"""Unit tests for stirapoc.core.state_space."""

import numpy as np
import pytest

from stirapoc.core.errors import ZeroVectorError
from stirapoc.core.state_space import (
    cart_to_sph,
    colatitude_trig,
    complex_to_real,
    controls_uv,
    controls_vu,
    real_to_complex,
    reduced_rhs,
    schrodinger_rhs,
    sph_to_cart,
    spherical_to_cartesian,
)
from tests.conftest import HALF_PI


# ── colatitude_trig ──────────────────────────────────────────────────────────


class TestColatitudeTrig:
    def test_equator_cosine_is_exactly_zero(self):
        sin_t, cos_t = colatitude_trig(HALF_PI)
        assert sin_t == 1.0
        assert cos_t == 0.0

    def test_matches_numpy_off_equator(self):
        theta = np.linspace(0.1, 3.0, 7)
        sin_t, cos_t = colatitude_trig(theta)
        np.testing.assert_allclose(sin_t, np.sin(theta))
        np.testing.assert_allclose(cos_t, np.cos(theta), atol=1e-15)


# ── complex_to_real / real_to_complex ────────────────────────────────────────


class TestComplexRealMaps:
    def test_layout(self):
        x = complex_to_real([1 + 2j, 3 + 4j, 5 + 6j])
        np.testing.assert_array_equal(x, [1.0, -4.0, 5.0, 2.0, 3.0, 6.0])

    def test_three_vector_has_zero_imaginary_block(self):
        c = real_to_complex([0.6, 0.0, 0.8])
        np.testing.assert_array_equal(c, [0.6, 0.0, 0.8])

    def test_inverse(self, rng):
        c = rng.normal(size=3) + 1j * rng.normal(size=3)
        np.testing.assert_allclose(real_to_complex(complex_to_real(c)), c)


# ── reduced_rhs / schrodinger_rhs ────────────────────────────────────────────


class TestReducedRhs:
    def test_pump_moves_population_into_level_two(self):
        np.testing.assert_array_equal(reduced_rhs([1, 0, 0], (1, 0), 0.0), [0, 1, 0])

    def test_stokes_sign(self):
        np.testing.assert_array_equal(reduced_rhs([0, 1, 0], (0, 1), 0.0), [0, 0, 1])
        np.testing.assert_array_equal(
            reduced_rhs([0, 1, 0], (0, 1), 0.0, stokes_sign=-1), [0, 0, -1]
        )

    def test_decay_acts_on_level_two_only(self):
        np.testing.assert_array_equal(reduced_rhs([0, 1, 0], (0, 0), 2.0), [0, -2, 0])

    @pytest.mark.parametrize("stokes_sign", [1, -1])
    def test_agrees_with_complex_dynamics(self, rng, stokes_sign):
        for _ in range(5):
            x = rng.normal(size=3)
            u = rng.normal(size=2)
            k = abs(rng.normal())
            dc = schrodinger_rhs(real_to_complex(x), u, k, stokes_sign)
            np.testing.assert_allclose(
                complex_to_real(dc)[:3], reduced_rhs(x, u, k, stokes_sign), atol=1e-14
            )

    def test_norm_never_increases(self, rng):
        for _ in range(5):
            c = rng.normal(size=3) + 1j * rng.normal(size=3)
            dc = schrodinger_rhs(c, rng.normal(size=2), 0.7)
            assert 2 * np.real(np.vdot(c, dc)) <= 1e-12


# ── cart_to_sph / sph_to_cart ────────────────────────────────────────────────


class TestSphericalChart:
    def test_level_one_on_equator(self):
        s = cart_to_sph([1.0, 0.0, 0.0])
        assert s.r == 1.0
        assert s.theta == pytest.approx(HALF_PI)
        assert s.phi == 0.0
        assert not s.degenerate

    def test_level_three_at_quarter_turn(self):
        assert cart_to_sph([0.0, 0.0, 1.0]).phi == pytest.approx(HALF_PI)

    def test_pole_is_flagged(self):
        s = cart_to_sph([0.0, 2.0, 0.0])
        assert s.degenerate
        assert s.phi == 0.0
        assert s.theta == 0.0

    def test_zero_vector_raises(self):
        with pytest.raises(ZeroVectorError):
            cart_to_sph([0.0, 0.0, 0.0])

    def test_round_trip(self, rng):
        x = rng.normal(size=3)
        np.testing.assert_allclose(sph_to_cart(cart_to_sph(x)), x, atol=1e-14)

    def test_vectorized_chart(self):
        xyz = spherical_to_cartesian(np.ones(2), np.array([HALF_PI, 0.5]), np.zeros(2))
        assert xyz.shape == (3, 2)
        assert xyz[1, 0] == 0.0


# ── controls_uv / controls_vu ────────────────────────────────────────────────


class TestControlRotation:
    def test_inverse(self, rng):
        u = rng.normal(size=2)
        phi = rng.uniform(0, 2 * np.pi)
        v1, v2 = controls_uv(u, phi)
        np.testing.assert_allclose(controls_vu(v1, v2, phi), u, atol=1e-15)

    def test_isometry(self, rng):
        u = rng.normal(size=2)
        v1, v2 = controls_uv(u, 0.4)
        assert v1**2 + v2**2 == pytest.approx(u @ u)
