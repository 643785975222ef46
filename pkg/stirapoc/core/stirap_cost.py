"""
Extremal flow of the three-level system under the STIRAP cost
C = integral of theta_dot^2 dt.

Only v1 is obtained by maximization (v1 = p_theta - k sin cos); v2 is an
exogenous control fixed by the closure p_theta_dot = 0, which keeps the flow
on the branch theta = theta0, p_theta = 0.
"""

import logging
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from stirapoc.core.models import IntegratorConfig, StirapExtremal, Trajectory
from stirapoc.core.errors import (
    DegenerateChartError,
    InvalidParameterError,
    SingularParameterError,
)
from stirapoc.core.integrator import integrate, monitor_conserved
from stirapoc.core.pmp_energy import check_pole
from stirapoc.core.state_space import (
    colatitude_trig,
    controls_vu,
    spherical_to_cartesian,
)
from stirapoc.core.defaults import MARGIN_THRESHOLD, MARGIN_WARNING, POLE_GUARD

logger = logging.getLogger(__name__)


def stirap_v2(theta, rpr: float, p_phi: float, k: float) -> float:
    """
    Closure value of v2 that freezes p_theta.

    v2 = -2 k (r p_r) sin^3(theta) cos(theta) / p_phi

    Raises:
        SingularParameterError: If p_phi = 0.
    """
    if p_phi == 0:
        raise SingularParameterError("p_phi", "the STIRAP closure divides by p_phi")
    sin_t, cos_t = colatitude_trig(theta)
    return -2.0 * k * rpr * sin_t**3 * cos_t / p_phi


def stirap_hamiltonian_value(theta, rpr: float, k: float) -> float:
    """Value of H on the branch: 2 k (r p_r) cos^2(theta) (sin^2(theta) - 1/2)."""
    sin_t, cos_t = colatitude_trig(theta)
    return 2.0 * k * rpr * cos_t * cos_t * (sin_t * sin_t - 0.5)


def stirap_hamiltonian(s: StirapExtremal, k: float) -> float:
    """
    Maximized Hamiltonian of the STIRAP cost for a given v2.

    H = -k p_rho cos^2 + p_theta^2 / 2 - p_phi cot(theta) v2
    """
    check_pole(s.theta)
    return float(_stirap_hamiltonian_values(s.theta, s.p_theta, s.p_phi, s.p_rho, s.v2, k))


def _stirap_hamiltonian_values(theta, p_theta, p_phi, p_rho, v2, k):
    sin_t, cos_t = colatitude_trig(theta)
    return (
        -k * p_rho * cos_t * cos_t
        + 0.5 * p_theta * p_theta
        - p_phi * (cos_t / sin_t) * v2
    )


def stirap_theta_for_hamiltonian(H: float, rpr: float, k: float) -> float:
    """
    Colatitude in (pi/4, pi/2] at which the branch has Hamiltonian value H.

    Raises:
        InvalidParameterError: If H is outside [0, k r p_r / 8].
    """
    scale = 2.0 * k * rpr
    if scale <= 0 or not 0 <= H <= scale / 16:
        raise InvalidParameterError(
            "H", H, f"the branch only reaches [0, {scale / 16:g}] for k r p_r = {k * rpr:g}"
        )
    ratio = H / scale
    cos_sq = ratio / (0.25 + np.sqrt(0.0625 - ratio))
    return float(np.pi / 2 - np.arcsin(np.sqrt(cos_sq)))


def stirap_vector_field(t, y, k, v2):
    """
    Canonical equations of the STIRAP Hamiltonian with a fixed v2.

    The p_theta equation is evaluated in balance form,
    -(p_phi / sin^2)(v2 - v2_closure(theta)), which vanishes exactly at the closure.
    """
    _, theta, _, p_rho, p_theta, p_phi = y
    sin_t, cos_t = colatitude_trig(theta)
    if abs(sin_t) < POLE_GUARD:
        raise DegenerateChartError("theta", float(theta), POLE_GUARD)
    if p_phi != 0:
        torque = -(p_phi / (sin_t * sin_t)) * (v2 - stirap_v2(theta, p_rho, p_phi, k))
    else:
        torque = -2.0 * k * p_rho * sin_t * cos_t
    return np.array(
        [
            -k * cos_t * cos_t,
            p_theta,
            -(cos_t / sin_t) * v2,
            0.0,
            torque,
            0.0,
        ]
    )


def stirap_rhs(s: StirapExtremal, k: float) -> np.ndarray:
    """
    Derivative of a STIRAP extremal, ordered as ExtremalPoint.LABELS.

    Raises:
        DegenerateChartError: If sin(theta) is below the pole guard.
    """
    return stirap_vector_field(0.0, s.as_array(), k, s.v2)


def stirap_duration(theta, v2: float) -> float:
    """
    Time for phi to sweep a quarter turn at rate -cot(theta) v2.

    Raises:
        SingularParameterError: If the sweep rate is zero (infinite transfer time).
    """
    check_pole(theta)
    sin_t, cos_t = colatitude_trig(theta)
    rate = v2 * cos_t / sin_t
    if rate == 0:
        raise SingularParameterError(
            "v2 cot(theta)", "zero sweep rate, the transfer time is infinite"
        )
    return float(abs(np.pi / (2.0 * rate)))


def adiabaticity_margin(p_phi: float, rpr: float, theta) -> float:
    """
    |pi p_phi / (4 r p_r sin^2(theta))|, which must stay well below 1.

    Raises:
        SingularParameterError: If r p_r = 0.
    """
    if rpr == 0:
        raise SingularParameterError("r p_r", "the adiabaticity margin divides by it")
    sin_t = np.sin(theta)
    return float(abs(np.pi * p_phi / (4.0 * rpr * sin_t * sin_t)))


def margin_status(margin: float) -> str:
    if margin < MARGIN_THRESHOLD:
        return "ok"
    if margin <= MARGIN_WARNING:
        return "warning"
    return "violated"


def propagate_stirap(
    theta0: float,
    phi0: float,
    rpr: float,
    p_phi: float,
    k: float,
    cfg: Optional[IntegratorConfig] = None,
    T: Optional[float] = None,
    rho0: float = 0.0,
) -> Trajectory:
    """
    Propagates the STIRAP branch started at p_theta = 0.

    Args:
        theta0: Initial colatitude, off the equator.
        phi0: Initial azimuth (0 for the state |1>).
        rpr: r p_r.
        p_phi: Azimuth momentum.
        k: Relaxation rate.
        cfg: Integrator settings.
        T: Horizon; None uses the quarter-turn duration.
        rho0: Initial log-norm.

    Returns:
        Trajectory: Samples with x1..x3, r, u1, u2, v1, v2, cost and
        stirap_cost columns and a summary of the branch diagnostics.

    Raises:
        SingularParameterError: If theta0 = pi/2 (infinite duration) or p_phi = 0.
    """
    check_pole(theta0)
    v2 = stirap_v2(theta0, rpr, p_phi, k)
    computed_T = stirap_duration(theta0, v2)
    horizon = computed_T if T is None else float(T)
    if T is not None and abs(horizon - computed_T) > 1e-9 * computed_T:
        logger.warning(
            "Horizon T = %g differs from the quarter-turn duration %g",
            horizon,
            computed_T,
        )
    margin = adiabaticity_margin(p_phi, rpr, theta0)
    status = margin_status(margin)
    if status != "ok":
        logger.warning("Adiabaticity margin %.4g is %s", margin, status)

    init = StirapExtremal(
        theta=theta0, phi=phi0, p_rho=rpr, p_theta=0.0, p_phi=p_phi, rho=rho0, v2=v2
    )
    traj = integrate(
        stirap_vector_field,
        init.as_array(),
        0.0,
        horizon,
        cfg,
        args=(k, v2),
        labels=StirapExtremal.LABELS,
    )
    _annotate(traj, k, v2)
    traj.drifts = monitor_conserved(
        traj,
        {
            "H": lambda y: _stirap_hamiltonian_values(y[1], y[4], y[5], y[3], v2, k),
            "p_phi": lambda y: y[5],
            "p_rho": lambda y: y[3],
        },
    )
    traj.summary = _branch_summary(traj, init, k, v2, computed_T, margin, status)
    return traj


def _annotate(traj: Trajectory, k: float, v2: float) -> None:
    rho, theta, phi = traj.column("rho"), traj.column("theta"), traj.column("phi")
    p_theta = traj.column("p_theta")
    sin_t, cos_t = colatitude_trig(theta)
    v1 = p_theta - k * sin_t * cos_t
    v2_column = np.full_like(theta, v2)
    u1, u2 = controls_vu(v1, v2_column, phi)
    r = np.exp(rho)
    x1, x2, x3 = spherical_to_cartesian(r, theta, phi)
    traj.aux.update(
        {
            "x1": x1,
            "x2": x2,
            "x3": x3,
            "r": r,
            "u1": u1,
            "u2": u2,
            "v1": v1,
            "v2": v2_column,
            "cost": cumulative_trapezoid(u1 * u1 + u2 * u2, traj.t, initial=0.0),
            "stirap_cost": cumulative_trapezoid(p_theta * p_theta, traj.t, initial=0.0),
        }
    )


def ratio_residual(traj: Trajectory) -> float:
    """max_t |u1 x1 - u2 x3| / sqrt(x1^2 + x3^2), the STIRAP ratio u2/u1 = x1/x3 cross-multiplied."""
    x1, x3 = traj.column("x1"), traj.column("x3")
    u1, u2 = traj.column("u1"), traj.column("u2")
    return float(np.max(np.abs(u1 * x1 - u2 * x3) / np.hypot(x1, x3)))


def peak_times(traj: Trajectory, pump: str = "u1", stokes: tuple = ("u2",)):
    """Returns (stokes peak time, pump peak time) of the control envelopes."""
    stokes_amplitude = np.sqrt(sum(traj.column(name) ** 2 for name in stokes))
    t_stokes = float(traj.t[np.argmax(stokes_amplitude)])
    t_pump = float(traj.t[np.argmax(np.abs(traj.column(pump)))])
    return t_stokes, t_pump


def _branch_summary(traj, init, k, v2, computed_T, margin, status) -> dict:
    x1, x2, x3 = traj.column("x1"), traj.column("x2"), traj.column("x3")
    theta, p_theta = traj.column("theta"), traj.column("p_theta")
    h_branch = stirap_hamiltonian_value(init.theta, init.p_rho, k)
    h_values = _stirap_hamiltonian_values(
        theta, p_theta, traj.column("p_phi"), traj.column("p_rho"), v2, k
    )
    fidelity = float(x3[-1] ** 2)
    norm_sq = float(x1[-1] ** 2 + x2[-1] ** 2 + x3[-1] ** 2)
    t_stokes, t_pump = peak_times(traj)
    return {
        "v2": float(v2),
        "T": traj.duration,
        "computed_T": computed_T,
        "T_discrepancy": traj.duration - computed_T,
        "margin": margin,
        "margin_status": status,
        "H": h_branch,
        "H_deviation": float(np.max(np.abs(h_values - h_branch))),
        "max_abs_p_theta": float(np.max(np.abs(p_theta))),
        "max_theta_deviation": float(np.max(np.abs(theta - init.theta))),
        "fidelity": fidelity,
        "transfer_ratio": fidelity / norm_sq,
        "max_population_2": float(np.max(x2 * x2)),
        "ratio_residual": ratio_residual(traj),
        "stokes_peak_time": t_stokes,
        "pump_peak_time": t_pump,
        "counterintuitive": bool(t_stokes < t_pump),
        "C": float(traj.aux["cost"][-1]),
        "stirap_cost": float(traj.aux["stirap_cost"][-1]),
    }
