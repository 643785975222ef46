"""
Singular reduction of the energy extremal flow by the p_phi symmetry.

The invariant polynomials pi1..pi6 are evaluated on Cartesian states and
costates. On the unit sphere with x . p = r p_r the constraints read
pi5 + pi1^2 = 1 and pi6 + pi1 pi2 = r p_r.
"""

import logging
from typing import Optional

import numpy as np
import pandas as pd
from scipy import ndimage

from stirapoc.core.models import BitorusSection, ExtremalPoint, ReductionPoint, Trajectory
from stirapoc.core.errors import ConstraintViolationError
from stirapoc.core.state_space import colatitude_trig, spherical_to_cartesian
from stirapoc.core.defaults import (
    CONSTRAINT_TOL,
    DEFAULT_PI1_RANGE,
    DEFAULT_PI2_RANGE,
    DEFAULT_SECTION_GRID,
    PINCH_INNER_RADIUS,
    PINCH_OUTER_RADIUS,
)

logger = logging.getLogger(__name__)


def costates_to_cartesian(theta, phi, p_r, p_theta, p_phi, r=1.0) -> np.ndarray:
    """
    Cartesian costate p_x = p_r e_r + (p_theta / r) e_theta + (p_phi / (r sin)) e_phi.

    Works elementwise; array inputs give an array of shape (3, n).
    """
    sin_t, cos_t = colatitude_trig(theta)
    cos_p, sin_p = np.cos(phi), np.sin(phi)
    radial = p_r
    polar = p_theta / r
    azimuthal = p_phi / (r * sin_t)
    return np.array(
        [
            radial * sin_t * cos_p + polar * cos_t * cos_p - azimuthal * sin_p,
            radial * cos_t - polar * sin_t,
            radial * sin_t * sin_p + polar * cos_t * sin_p + azimuthal * cos_p,
        ]
    )


def extremal_to_cartesian(e: ExtremalPoint, project: bool = True):
    """
    Returns (x, p) for an extremal point.

    With project=True the state is taken on the unit sphere and p_r = p_rho,
    otherwise r = exp(rho) and p_r = p_rho / r.
    """
    r = 1.0 if project else e.r
    x = spherical_to_cartesian(r, e.theta, e.phi)
    p = costates_to_cartesian(e.theta, e.phi, e.p_rho / r, e.p_theta, e.p_phi, r)
    return x, p


def invariants_of(x, p) -> ReductionPoint:
    """The six invariant polynomials at (x, p)."""
    x1, x2, x3 = x
    p1, p2, p3 = p
    return ReductionPoint(
        pi1=x2,
        pi2=p2,
        pi3=x1 * p3 - x3 * p1,
        pi4=p1 * p1 + p3 * p3,
        pi5=x1 * x1 + x3 * x3,
        pi6=x1 * p1 + x3 * p3,
    )


def reduced_hamiltonian(rp: ReductionPoint, k: float) -> float:
    """H = -k pi1 pi2 + (pi1^2 pi4 + pi2^2 pi5 - 2 pi1 pi2 pi6) / 2."""
    return -k * rp.pi1 * rp.pi2 + 0.5 * (
        rp.pi1**2 * rp.pi4 + rp.pi2**2 * rp.pi5 - 2.0 * rp.pi1 * rp.pi2 * rp.pi6
    )


def constraint_residual(rp: ReductionPoint, rpr: float) -> float:
    return max(abs(rp.pi5 + rp.pi1**2 - 1.0), abs(rp.pi6 + rp.pi1 * rp.pi2 - rpr))


def constrained_reduced_hamiltonian(
    rp: ReductionPoint, k: float, rpr: float, tol: float = CONSTRAINT_TOL
) -> float:
    """
    Reduced Hamiltonian on the sphere:
    H = -(k + r p_r) pi1 pi2 + (pi1^2 pi4 + pi2^2 pi1^2 + pi2^2) / 2.

    Raises:
        ConstraintViolationError: If the point is off the constrained space.
    """
    residual = constraint_residual(rp, rpr)
    if residual > tol:
        raise ConstraintViolationError(residual, tol)
    return _constrained_values(rp.pi1, rp.pi2, rp.pi4, k, rpr)


def _constrained_values(pi1, pi2, pi4, k, rpr):
    return -(k + rpr) * pi1 * pi2 + 0.5 * (pi1**2 * pi4 + pi2**2 * pi1**2 + pi2**2)


def section_pi4(pi1, pi2, p_phi, rpr):
    """pi4 eliminated with pi6^2 + pi3^2 = pi4 pi5 on the constrained space."""
    return ((rpr - pi1 * pi2) ** 2 + p_phi**2) / (1.0 - pi1**2)


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    axis = np.linspace(lo, hi, n)
    axis[np.abs(axis) < 1e-12 * (hi - lo)] = 0.0
    return axis


def bitorus_section(
    H: float,
    p_phi: float,
    rpr: float,
    k: float,
    grid: int = DEFAULT_SECTION_GRID,
    pi1_range: tuple = DEFAULT_PI1_RANGE,
    pi2_range: tuple = DEFAULT_PI2_RANGE,
) -> BitorusSection:
    """
    Scans the intersection of the reduced energy level with the reduced
    phase-space relation on a (pi1, pi2) grid.

    Args:
        H: Energy level.
        p_phi: Value of pi3.
        rpr: r p_r.
        k: Relaxation rate.
        grid: Points per axis; odd values put the origin on the grid for
            symmetric ranges.
        pi1_range: Range of pi1, inside (-1, 1).
        pi2_range: Range of pi2.

    Returns:
        BitorusSection: The sampled function and its zero crossings. An empty
        point set means the level is outside the image.
    """
    pi1 = _axis(*pi1_range, grid)
    pi2 = _axis(*pi2_range, grid)
    P1, P2 = np.meshgrid(pi1, pi2, indexing="ij")
    pi4 = section_pi4(P1, P2, p_phi, rpr)
    values = _constrained_values(P1, P2, pi4, k, rpr) - H
    points = _zero_crossings(pi1, pi2, values)
    points["pi4"] = section_pi4(points["pi1"], points["pi2"], p_phi, rpr)
    logger.debug("Section H = %g, p_phi = %g: %d crossings", H, p_phi, len(points))
    return BitorusSection(
        hamiltonian=H,
        p_phi=p_phi,
        p_rho=rpr,
        pi1=pi1,
        pi2=pi2,
        values=values,
        points=points,
    )


def _zero_crossings(pi1, pi2, values) -> pd.DataFrame:
    frames = []
    nodes = np.argwhere(values == 0.0)
    frames.append(pd.DataFrame({"pi1": pi1[nodes[:, 0]], "pi2": pi2[nodes[:, 1]]}))

    a, b = values[:-1, :], values[1:, :]
    i, j = np.nonzero(a * b < 0)
    weight = a[i, j] / (a[i, j] - b[i, j])
    frames.append(
        pd.DataFrame({"pi1": pi1[i] + weight * (pi1[i + 1] - pi1[i]), "pi2": pi2[j]})
    )

    a, b = values[:, :-1], values[:, 1:]
    i, j = np.nonzero(a * b < 0)
    weight = a[i, j] / (a[i, j] - b[i, j])
    frames.append(
        pd.DataFrame({"pi1": pi1[i], "pi2": pi2[j] + weight * (pi2[j + 1] - pi2[j])})
    )
    return pd.concat(frames, ignore_index=True)


def sign_components(
    section: BitorusSection,
    inner: int = PINCH_INNER_RADIUS,
    outer: int = PINCH_OUTER_RADIUS,
) -> tuple[int, int]:
    """
    Number of connected regions where the section function is positive and
    negative inside an index-space annulus around the grid node nearest the origin.
    """
    i0 = int(np.argmin(np.abs(section.pi1)))
    j0 = int(np.argmin(np.abs(section.pi2)))
    I, J = np.indices(section.values.shape)
    radius = np.hypot(I - i0, J - j0)
    annulus = (radius >= inner) & (radius <= outer)
    _, n_positive = ndimage.label((section.values > 0) & annulus)
    _, n_negative = ndimage.label((section.values < 0) & annulus)
    return int(n_positive), int(n_negative)


def detect_pinch(
    section: BitorusSection,
    inner: int = PINCH_INNER_RADIUS,
    outer: int = PINCH_OUTER_RADIUS,
    tol: float = 1e-9,
) -> bool:
    """
    True when the zero set crosses itself at pi1 = pi2 = 0: the origin lies on
    the zero set and at least two positive and two negative sectors meet there.
    """
    i0 = int(np.argmin(np.abs(section.pi1)))
    j0 = int(np.argmin(np.abs(section.pi2)))
    if abs(section.values[i0, j0]) > tol:
        return False
    n_positive, n_negative = sign_components(section, inner, outer)
    return n_positive >= 2 and n_negative >= 2


def saddle_at_origin(p_phi: float, rpr: float, k: float) -> bool:
    """The origin is a saddle of the reduced Hamiltonian iff rpr^2 + p_phi^2 < (k + rpr)^2."""
    return rpr**2 + p_phi**2 < (k + rpr) ** 2


def trajectory_invariants(traj: Trajectory, project: bool = False) -> pd.DataFrame:
    """Invariant polynomials along an energy extremal, one row per sample."""
    theta, phi = traj.column("theta"), traj.column("phi")
    p_rho, p_theta, p_phi = (
        traj.column("p_rho"),
        traj.column("p_theta"),
        traj.column("p_phi"),
    )
    r = np.ones_like(theta) if project else np.exp(traj.column("rho"))
    x = spherical_to_cartesian(r, theta, phi)
    p = costates_to_cartesian(theta, phi, p_rho / r, p_theta, p_phi, r)
    rp = invariants_of(x, p)
    return pd.DataFrame({"t": traj.t, **rp._asdict()})


def singular_circle_distance(traj: Trajectory) -> np.ndarray:
    """pi1^2 + pi2^2 on the unit sphere, zero on the circle x2 = p_x2 = 0."""
    invariants = trajectory_invariants(traj, project=True)
    return (invariants["pi1"] ** 2 + invariants["pi2"] ** 2).to_numpy()


def return_to_singular_circle(
    traj: Trajectory, t_min: Optional[float] = None, t_max: Optional[float] = None
) -> float:
    """Minimum of singular_circle_distance over [t_min, t_max] (default: second half)."""
    t_min = traj.t[0] + traj.duration / 2 if t_min is None else t_min
    t_max = traj.t[-1] if t_max is None else t_max
    window = (traj.t >= t_min) & (traj.t <= t_max)
    return float(np.min(singular_circle_distance(traj)[window]))
