"""
Extremal flow of the three-level system under the energy cost
C = integral of (u1^2 + u2^2) dt, with p0 = -1/2.

The flow is written on (rho, theta, phi, p_rho, p_theta, p_phi) with
rho = log r and p_rho = r p_r, so p_rho and p_phi are exactly constant.
"""

import logging
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from stirapoc.core.models import ControlPair, ExtremalPoint, IntegratorConfig, Trajectory
from stirapoc.core.errors import (
    ConservationDriftError,
    DegenerateChartError,
    InvalidParameterError,
)
from stirapoc.core.integrator import integrate, monitor_conserved
from stirapoc.core.state_space import (
    colatitude_trig,
    complex_to_real,
    controls_vu,
    real_to_complex,
    schrodinger_rhs,
    spherical_to_cartesian,
)
from stirapoc.core.defaults import HAMILTONIAN_DRIFT_ABORT, POLE_GUARD

logger = logging.getLogger(__name__)


def check_pole(theta, name: str = "theta") -> None:
    if abs(np.sin(theta)) < POLE_GUARD:
        raise DegenerateChartError(name, float(theta), POLE_GUARD)


def energy_hamiltonian_values(theta, p_theta, p_phi, p_rho, k):
    """Vectorized maximized Hamiltonian; no pole guard."""
    sin_t, cos_t = colatitude_trig(theta)
    cot_t = cos_t / sin_t
    return (
        -k * p_rho * cos_t * cos_t
        + k * cos_t * sin_t * p_theta
        + 0.5 * p_theta * p_theta
        + 0.5 * (cot_t * p_phi) ** 2
    )


def hamiltonian_energy(e: ExtremalPoint, k: float) -> float:
    """
    Maximized PMP Hamiltonian of the energy cost.

    H = -k p_rho cos^2 + k cos sin p_theta + p_theta^2 / 2 + cot^2 p_phi^2 / 2

    Raises:
        DegenerateChartError: If sin(theta) is below the pole guard.
    """
    check_pole(e.theta)
    return float(energy_hamiltonian_values(e.theta, e.p_theta, e.p_phi, e.p_rho, k))


def energy_vector_field(t, y, k):
    """Hamilton's equations of hamiltonian_energy on the extremal state vector."""
    _, theta, _, p_rho, p_theta, p_phi = y
    sin_t, cos_t = colatitude_trig(theta)
    if abs(sin_t) < POLE_GUARD:
        raise DegenerateChartError("theta", float(theta), POLE_GUARD)
    cot_t = cos_t / sin_t
    return np.array(
        [
            -k * cos_t * cos_t,
            k * sin_t * cos_t + p_theta,
            cot_t * cot_t * p_phi,
            0.0,
            -2.0 * k * p_rho * sin_t * cos_t
            - k * (cos_t * cos_t - sin_t * sin_t) * p_theta
            + p_phi * p_phi * cos_t / sin_t**3,
            0.0,
        ]
    )


def extremal_rhs(e: ExtremalPoint, k: float) -> np.ndarray:
    """
    Derivative of an extremal point, ordered as ExtremalPoint.LABELS.

    Raises:
        DegenerateChartError: If sin(theta) is below the pole guard.
    """
    return energy_vector_field(0.0, e.as_array(), k)


def energy_controls(theta, phi, p_theta, p_phi):
    """Vectorized control recovery: returns (v1, v2, u1, u2)."""
    sin_t, cos_t = colatitude_trig(theta)
    v1 = p_theta
    v2 = -(cos_t / sin_t) * p_phi
    u = controls_vu(v1, v2, phi)
    return v1, v2, u.u1, u.u2


def recover_controls(e: ExtremalPoint):
    """
    Controls maximizing the pseudo-Hamiltonian at an extremal point.

    Returns:
        tuple: (v1, v2, ControlPair) with v1 = p_theta, v2 = -cot(theta) p_phi.
    """
    check_pole(e.theta)
    v1, v2, u1, u2 = energy_controls(e.theta, e.phi, e.p_theta, e.p_phi)
    return float(v1), float(v2), ControlPair(float(u1), float(u2))


def costate_for_hamiltonian(
    theta: float, H: float, p_phi: float, p_rho: float, k: float, branch: int = 1
) -> float:
    """
    Solves hamiltonian_energy = H for p_theta.

    Args:
        branch: +1 or -1, sign in front of the square root.

    Raises:
        InvalidParameterError: If no real p_theta reaches H at this point.
    """
    check_pole(theta)
    sin_t, cos_t = colatitude_trig(theta)
    cot_t = cos_t / sin_t
    linear = k * sin_t * cos_t
    constant = -k * p_rho * cos_t * cos_t + 0.5 * (cot_t * p_phi) ** 2 - H
    radicand = linear * linear - 2.0 * constant
    if radicand < 0:
        raise InvalidParameterError(
            "H", H, f"no real p_theta reaches it at theta = {theta!r}"
        )
    return float(-linear + np.sign(branch) * np.sqrt(radicand))


def annotate_energy_trajectory(traj: Trajectory, k: float) -> Trajectory:
    """Adds chart, control and running-cost columns to an energy extremal."""
    rho, theta, phi = traj.column("rho"), traj.column("theta"), traj.column("phi")
    p_theta, p_phi = traj.column("p_theta"), traj.column("p_phi")
    r = np.exp(rho)
    x1, x2, x3 = spherical_to_cartesian(r, theta, phi)
    v1, v2, u1, u2 = energy_controls(theta, phi, p_theta, p_phi)
    traj.aux.update(
        {
            "x1": x1,
            "x2": x2,
            "x3": x3,
            "r": r,
            "u1": u1,
            "u2": u2,
            "v1": v1,
            "v2": v2,
            "cost": cumulative_trapezoid(u1 * u1 + u2 * u2, traj.t, initial=0.0),
        }
    )
    return traj


def propagate_extremal(
    init: ExtremalPoint,
    k: float,
    T: float,
    cfg: Optional[IntegratorConfig] = None,
    check_drift: bool = True,
) -> Trajectory:
    """
    Propagates the energy extremal flow over [0, T].

    Args:
        init: Initial extremal point.
        k: Relaxation rate.
        T: Horizon.
        cfg: Integrator settings.
        check_drift: Abort when H drifts more than the allowed threshold.

    Returns:
        Trajectory: Samples with x1..x3, r, u1, u2, v1, v2 and cost columns,
        drifts of H, p_phi and p_rho, and a summary with the final fidelity x3^2
        and the total cost.

    Raises:
        DegenerateChartError: If the flow reaches a pole.
        ConservationDriftError: If the H drift exceeds the abort threshold.
        IntegrationError: If the integrator fails.
    """
    check_pole(init.theta)
    traj = integrate(
        energy_vector_field,
        init.as_array(),
        0.0,
        T,
        cfg,
        args=(k,),
        labels=ExtremalPoint.LABELS,
    )
    annotate_energy_trajectory(traj, k)
    traj.drifts = monitor_conserved(
        traj,
        {
            "H": lambda y: energy_hamiltonian_values(y[1], y[4], y[5], y[3], k),
            "p_phi": lambda y: y[5],
            "p_rho": lambda y: y[3],
        },
    )
    if check_drift and traj.drifts["H"] > HAMILTONIAN_DRIFT_ABORT:
        raise ConservationDriftError("H", traj.drifts["H"], HAMILTONIAN_DRIFT_ABORT)
    traj.summary = {
        "H": hamiltonian_energy(init, k),
        "fidelity": float(traj.aux["x3"][-1] ** 2),
        "C": float(traj.aux["cost"][-1]),
        "final_norm": float(traj.aux["r"][-1]),
    }
    logger.debug(
        "Energy extremal: H = %.6g, x3^2(T) = %.6g, C = %.6g",
        traj.summary["H"],
        traj.summary["fidelity"],
        traj.summary["C"],
    )
    return traj


def _joint_vector_field(t, y, k):
    extremal = y[:6]
    d_extremal = energy_vector_field(t, extremal, k)
    _, _, u1, u2 = energy_controls(extremal[1], extremal[2], extremal[4], extremal[5])
    amplitudes = y[6:9] + 1j * y[9:12]
    d_amplitudes = schrodinger_rhs(amplitudes, (u1, u2), k)
    return np.concatenate([d_extremal, d_amplitudes.real, d_amplitudes.imag])


def schrodinger_cross_check(
    init: ExtremalPoint, k: float, T: float, cfg: Optional[IntegratorConfig] = None
) -> float:
    """
    Drives the complex amplitudes with the controls recovered along the
    extremal and compares them with the reduced state of the extremal.

    Returns:
        float: max over samples and components of |x_complex - x_extremal|.
    """
    check_pole(init.theta)
    x0 = spherical_to_cartesian(init.r, init.theta, init.phi)
    c0 = real_to_complex(x0)
    y0 = np.concatenate([init.as_array(), c0.real, c0.imag])
    traj = integrate(_joint_vector_field, y0, 0.0, T, cfg, args=(k,))
    extremal = traj.y[:, :6]
    x_extremal = spherical_to_cartesian(
        np.exp(extremal[:, 0]), extremal[:, 1], extremal[:, 2]
    )
    deviation = 0.0
    for row, x_ref in zip(traj.y, x_extremal.T):
        x_complex = complex_to_real(row[6:9] + 1j * row[9:12])[:3]
        deviation = max(deviation, float(np.max(np.abs(x_complex - x_ref))))
    return deviation
