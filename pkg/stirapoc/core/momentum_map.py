"""
Energy-momentum map (H, p_phi) of the energy extremal flow at fixed p_rho.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np
import pandas as pd
from scipy.stats import qmc

from stirapoc.core.models import MomentumMapDiagram, PointClass
from stirapoc.core.pmp_energy import check_pole, energy_hamiltonian_values
from stirapoc.core.state_space import colatitude_trig
from stirapoc.core.defaults import (
    CLASSIFY_TOL,
    DEFAULT_BOUNDARY_POINTS,
    DEFAULT_BOUNDARY_THETA,
    DEFAULT_IMAGE_BOX,
    DEFAULT_SAMPLE_BUDGET,
    DEFAULT_SINGULAR_LINE_POINTS,
    DEFAULT_WORKERS,
    RANK_THRESHOLD,
)

logger = logging.getLogger(__name__)

BOX_AXES = ("theta", "p_theta", "p_phi")


def gradient_matrix(theta, p_theta, p_phi, p_rho, k) -> np.ndarray:
    """
    Gradients of H and p_phi as the two columns of a 4x2 matrix.

    Rows are the partial derivatives with respect to (p_theta, p_phi, theta, phi).

    Raises:
        DegenerateChartError: If sin(theta) is below the pole guard.
    """
    check_pole(theta)
    sin_t, cos_t = colatitude_trig(theta)
    cot_t = cos_t / sin_t
    dH_dtheta = (
        k * p_rho * 2.0 * sin_t * cos_t
        + k * (cos_t * cos_t - sin_t * sin_t) * p_theta
        - cos_t / sin_t**3 * p_phi * p_phi
    )
    return np.array(
        [
            [k * sin_t * cos_t + p_theta, 0.0],
            [cot_t * cot_t * p_phi, 1.0],
            [dH_dtheta, 0.0],
            [0.0, 0.0],
        ]
    )


def smallest_singular_value(matrix: np.ndarray) -> float:
    """
    Smallest singular value after scaling every column to unit norm.

    A vanishing column stays zero, which yields 0.
    """
    norms = np.linalg.norm(matrix, axis=0)
    scaled = np.divide(matrix, norms, out=np.zeros_like(matrix), where=norms > 0)
    return float(np.linalg.svd(scaled, compute_uv=False)[-1])


def gradient_rank(matrix: np.ndarray, threshold: float = RANK_THRESHOLD) -> int:
    """Numerical rank of a 4x2 gradient matrix with column normalization."""
    return 1 if smallest_singular_value(matrix) < threshold else 2


def classify_point(theta, p_theta, p_phi, p_rho, k, tol: float = CLASSIFY_TOL) -> PointClass:
    """
    Classifies a phase-space point against the singular set of the map.

    Returns:
        PointClass: STIRAP_SINGULAR on the circle theta = pi/2, p_theta = 0;
        BOUNDARY where the gradients of H and p_phi are parallel off that circle;
        REGULAR otherwise.

    Raises:
        DegenerateChartError: If sin(theta) is below the pole guard.
    """
    check_pole(theta)
    if abs(theta - np.pi / 2) < tol and abs(p_theta) < tol:
        return PointClass.STIRAP_SINGULAR
    sin_t, cos_t = colatitude_trig(theta)
    if abs(p_theta + k * sin_t * cos_t) >= tol:
        return PointClass.REGULAR
    drive = k * p_rho * 2.0 * sin_t * cos_t + k * (cos_t * cos_t - sin_t * sin_t) * p_theta
    if abs(p_phi * p_phi * cos_t - sin_t**3 * drive) < tol:
        return PointClass.BOUNDARY
    return PointClass.REGULAR


def boundary_curve(p_rho, k, theta_grid) -> pd.DataFrame:
    """
    Boundary of the image of the energy-momentum map.

    For each theta, p_theta = -k sin cos and
    p_phi^2 = (sin^3 / cos)(k p_rho sin 2theta + k cos 2theta p_theta).
    Points with a negative radicand (or on the equator) are skipped.

    Returns:
        pd.DataFrame: Columns theta, p_theta, p_phi, H; the p_phi >= 0 branch
        first, then its mirror image.
    """
    theta = np.asarray(theta_grid, dtype=float)
    sin_t, cos_t = colatitude_trig(theta)
    p_theta = -k * sin_t * cos_t
    drive = k * p_rho * 2.0 * sin_t * cos_t + k * (cos_t * cos_t - sin_t * sin_t) * p_theta
    with np.errstate(divide="ignore", invalid="ignore"):
        radicand = sin_t**3 / cos_t * drive
    valid = np.isfinite(radicand) & (radicand >= 0) & (np.abs(sin_t) > 0)
    skipped = int(np.count_nonzero(~valid))
    if skipped:
        logger.warning("Skipped %d boundary points with a negative radicand", skipped)
    theta, p_theta = theta[valid], p_theta[valid]
    p_phi = np.sqrt(radicand[valid])
    H = energy_hamiltonian_values(theta, p_theta, p_phi, p_rho, k)
    upper = pd.DataFrame({"theta": theta, "p_theta": p_theta, "p_phi": p_phi, "H": H})
    lower = upper.assign(p_phi=-p_phi)
    return pd.concat([upper, lower], ignore_index=True)


def _image_chunk(args):
    points, p_rho, k = args
    return energy_hamiltonian_values(points[:, 0], points[:, 1], points[:, 2], p_rho, k)


def sample_image(
    p_rho,
    k,
    sample_budget: int = DEFAULT_SAMPLE_BUDGET,
    box: Optional[dict] = None,
    workers: int = DEFAULT_WORKERS,
) -> pd.DataFrame:
    """
    Deterministic low-discrepancy sweep of the energy-momentum map.

    Args:
        p_rho: Fixed r p_r.
        k: Relaxation rate.
        sample_budget: Number of points, at least 1.
        box: Ranges of theta, p_theta and p_phi; degenerate ranges are allowed.
        workers: Processes used to evaluate the samples.

    Returns:
        pd.DataFrame: Columns theta, p_theta, p_phi, H in sweep order.
    """
    if sample_budget < 1:
        raise ValueError(f"sample_budget must be at least 1, got {sample_budget}")
    box = {**DEFAULT_IMAGE_BOX, **(box or {})}
    lower = np.array([box[axis][0] for axis in BOX_AXES], dtype=float)
    upper = np.array([box[axis][1] for axis in BOX_AXES], dtype=float)
    unit = qmc.Halton(d=len(BOX_AXES), scramble=False).random(sample_budget)
    points = lower + unit * (upper - lower)
    for theta in (lower[0], upper[0]):
        check_pole(theta)

    if workers > 1 and sample_budget > workers:
        chunks = np.array_split(points, workers)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            H = np.concatenate(
                list(executor.map(_image_chunk, [(c, p_rho, k) for c in chunks]))
            )
    else:
        H = _image_chunk((points, p_rho, k))
    frame = pd.DataFrame(points, columns=list(BOX_AXES))
    frame["H"] = H
    return frame


def lower_envelope(p_phi, p_rho, k, theta_grid) -> np.ndarray:
    """
    Minimum of H over theta_grid (with p_theta at its minimizer -k sin cos)
    for each value of p_phi.
    """
    theta = np.asarray(theta_grid, dtype=float)[None, :]
    p_phi = np.asarray(p_phi, dtype=float)[:, None]
    sin_t, cos_t = colatitude_trig(theta)
    H = (
        -k * p_rho * cos_t * cos_t
        - 0.5 * (k * sin_t * cos_t) ** 2
        + 0.5 * (cos_t / sin_t * p_phi) ** 2
    )
    return H.min(axis=1)


def build_diagram(
    p_rho,
    k,
    sample_budget: int = DEFAULT_SAMPLE_BUDGET,
    box: Optional[dict] = None,
    boundary_theta: tuple = DEFAULT_BOUNDARY_THETA,
    boundary_points: int = DEFAULT_BOUNDARY_POINTS,
    singular_line_points: int = DEFAULT_SINGULAR_LINE_POINTS,
    workers: int = DEFAULT_WORKERS,
) -> MomentumMapDiagram:
    """Samples the image, its boundary and the STIRAP line H = 0."""
    image = sample_image(p_rho, k, sample_budget, box, workers)
    boundary = boundary_curve(
        p_rho, k, np.linspace(boundary_theta[0], boundary_theta[1], boundary_points)
    )
    p_phi_range = (image["p_phi"].min(), image["p_phi"].max())
    singular_line = pd.DataFrame(
        {
            "H": 0.0,
            "p_phi": np.linspace(*p_phi_range, singular_line_points),
        }
    )
    return MomentumMapDiagram(
        p_rho=p_rho,
        k=k,
        image=image,
        boundary=boundary,
        singular_line=singular_line,
    )
