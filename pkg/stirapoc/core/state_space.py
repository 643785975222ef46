"""
State representations of the three-level system and its raw dynamics.

The reduced real chart (x1, x2, x3) and the complex amplitudes (c1, c2, c3)
are related by c1 = x1 + i x4, c2 = x5 - i x2, c3 = x3 + i x6. The spherical
chart is x1 = r sin(theta) cos(phi), x2 = r cos(theta), x3 = r sin(theta) sin(phi).

Stokes terms follow the Hamiltonian
    H = [[0, u1, 0], [u1, -i k, -s u2], [0, -s u2, 0]]
with s = stokes_sign (default +1), so both charts share one convention.
"""

import logging

import numpy as np

from stirapoc.core.models import ControlPair, Spherical3
from stirapoc.core.errors import ZeroVectorError
from stirapoc.core.defaults import DEFAULT_STOKES_SIGN, POLE_GUARD

logger = logging.getLogger(__name__)

HALF_PI = np.pi / 2


def colatitude_trig(theta):
    """
    Returns (sin(theta), cos(theta)) with cos evaluated as sin(pi/2 - theta).

    At theta = pi/2 the cosine is exactly 0, so quantities that vanish on the
    equator vanish in floating point too. Works elementwise on arrays.
    """
    return np.sin(theta), np.sin(HALF_PI - theta)


def complex_to_real(c) -> np.ndarray:
    """
    Maps complex amplitudes to the six real coordinates (x1, ..., x6).

    Args:
        c: Complex amplitudes (c1, c2, c3).

    Returns:
        np.ndarray: (Re c1, -Im c2, Re c3, Im c1, Re c2, Im c3).
    """
    c1, c2, c3 = np.asarray(c, dtype=complex)
    return np.array([c1.real, -c2.imag, c3.real, c1.imag, c2.real, c3.imag])


def real_to_complex(x) -> np.ndarray:
    """
    Inverse of complex_to_real. A 3-vector is read as (x1, x2, x3) with
    x4 = x5 = x6 = 0.
    """
    x = np.asarray(x, dtype=float)
    if x.shape == (3,):
        x = np.concatenate([x, np.zeros(3)])
    x1, x2, x3, x4, x5, x6 = x
    return np.array([x1 + 1j * x4, x5 - 1j * x2, x3 + 1j * x6])


def reduced_rhs(x, u, k: float, stokes_sign: int = DEFAULT_STOKES_SIGN) -> np.ndarray:
    """
    Right-hand side of the reduced real dynamics.

    Args:
        x: Reduced state (x1, x2, x3).
        u: Controls (u1, u2).
        k: Relaxation rate of level 2.
        stokes_sign: Sign convention of the Stokes coupling.

    Returns:
        np.ndarray: (-u1 x2, u1 x1 - k x2 - s u2 x3, s u2 x2).
    """
    x1, x2, x3 = x
    u1, u2 = u
    s = stokes_sign
    return np.array([-u1 * x2, u1 * x1 - k * x2 - s * u2 * x3, s * u2 * x2])


def schrodinger_rhs(c, u, k: float, stokes_sign: int = DEFAULT_STOKES_SIGN) -> np.ndarray:
    """
    Right-hand side -i H c of the dissipative Schrodinger equation.

    Args:
        c: Complex amplitudes (c1, c2, c3).
        u: Controls (u1, u2).
        k: Relaxation rate of level 2.
        stokes_sign: Sign convention of the Stokes coupling.

    Returns:
        np.ndarray: Complex derivative of the amplitudes.
    """
    u1, u2 = u
    s = stokes_sign
    hamiltonian = np.array(
        [
            [0.0, u1, 0.0],
            [u1, -1j * k, -s * u2],
            [0.0, -s * u2, 0.0],
        ],
        dtype=complex,
    )
    return -1j * (hamiltonian @ np.asarray(c, dtype=complex))


def cart_to_sph(x) -> Spherical3:
    """
    Converts a reduced state to spherical coordinates.

    Args:
        x: Reduced state (x1, x2, x3).

    Returns:
        Spherical3: (r, theta, phi, degenerate). On a pole phi is set to 0 and
        the point is flagged degenerate.

    Raises:
        ZeroVectorError: If x is the zero vector.
    """
    x1, x2, x3 = (float(v) for v in x)
    r = float(np.sqrt(x1 * x1 + x2 * x2 + x3 * x3))
    if r == 0.0:
        raise ZeroVectorError()
    rho = float(np.hypot(x1, x3))
    theta = float(np.arctan2(rho, x2))
    if rho / r < POLE_GUARD:
        logger.debug("Pole reached at x = %s, phi set to 0", (x1, x2, x3))
        return Spherical3(r=r, theta=theta, phi=0.0, degenerate=True)
    return Spherical3(r=r, theta=theta, phi=float(np.arctan2(x3, x1)))


def sph_to_cart(s) -> np.ndarray:
    """Converts a Spherical3 (or an (r, theta, phi) triple) to (x1, x2, x3)."""
    r, theta, phi = s[0], s[1], s[2]
    return spherical_to_cartesian(r, theta, phi)


def spherical_to_cartesian(r, theta, phi) -> np.ndarray:
    """Vectorized chart map; array inputs give an array of shape (3, n)."""
    sin_t, cos_t = colatitude_trig(theta)
    return np.array([r * sin_t * np.cos(phi), r * cos_t, r * sin_t * np.sin(phi)])


def controls_uv(u, phi):
    """
    Rotates the physical controls to the frame attached to the azimuth.

    Returns:
        tuple: (v1, v2) = (-u1 cos(phi) + u2 sin(phi), -u1 sin(phi) - u2 cos(phi)).
    """
    u1, u2 = u
    cos_p, sin_p = np.cos(phi), np.sin(phi)
    return -u1 * cos_p + u2 * sin_p, -u1 * sin_p - u2 * cos_p


def controls_vu(v1, v2, phi) -> ControlPair:
    """Inverse of controls_uv."""
    cos_p, sin_p = np.cos(phi), np.sin(phi)
    return ControlPair(-v1 * cos_p - v2 * sin_p, v1 * sin_p - v2 * cos_p)
