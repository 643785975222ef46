"""
Four-level tripod system: |1>, |3>, |4> coupled to the lossy level |2> by
the pump u1 and the Stokes fields u2, u3.

Chart: x1 = r cos(theta1) sin(theta2), x2 = r cos(theta2),
x3 = r sin(theta1) sin(theta2) cos(theta3), x4 = r sin(theta1) sin(theta2) sin(theta3).
"""

import logging
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq, minimize_scalar

from stirapoc.core.models import (
    ControlTriple,
    IntegratorConfig,
    Spherical4,
    Trajectory,
    TripodExtremal,
)
from stirapoc.core.errors import (
    DegenerateChartError,
    InvalidParameterError,
    SingularParameterError,
    ZeroVectorError,
)
from stirapoc.core.integrator import integrate, monitor_conserved
from stirapoc.core.state_space import colatitude_trig
from stirapoc.core.stirap_cost import peak_times
from stirapoc.core.defaults import DEFAULT_THETA3_TARGET, POLE_GUARD

logger = logging.getLogger(__name__)

Schedule = Union[float, Callable[[float], float]]


def _guard(theta1, theta2) -> None:
    for name, angle in (("theta1", theta1), ("theta2", theta2)):
        if abs(np.sin(angle)) < POLE_GUARD:
            raise DegenerateChartError(name, float(angle), POLE_GUARD)


def tripod_sph_to_cart(r, theta1, theta2, theta3) -> np.ndarray:
    s1, c1 = colatitude_trig(theta1)
    s2, c2 = colatitude_trig(theta2)
    return np.array(
        [
            r * c1 * s2,
            r * c2,
            r * s1 * s2 * np.cos(theta3),
            r * s1 * s2 * np.sin(theta3),
        ]
    )


def tripod_cart_to_sph(x) -> Spherical4:
    """
    Raises:
        ZeroVectorError: If x is the zero vector.
    """
    x1, x2, x3, x4 = (float(v) for v in x)
    r = float(np.sqrt(x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4))
    if r == 0.0:
        raise ZeroVectorError()
    transverse = float(np.hypot(x3, x4))
    return Spherical4(
        r=r,
        theta1=float(np.arctan2(transverse, x1)),
        theta2=float(np.arctan2(np.hypot(x1, transverse), x2)),
        theta3=float(np.arctan2(x4, x3)),
    )


def tripod_real_rhs(x, u, k: float) -> np.ndarray:
    """(-u1 x2, -k x2 + u1 x1 - u2 x3 - u3 x4, u2 x2, u3 x2)."""
    x1, x2, x3, x4 = x
    u1, u2, u3 = u
    return np.array(
        [-u1 * x2, -k * x2 + u1 * x1 - u2 * x3 - u3 * x4, u2 * x2, u3 * x2]
    )


def rotate_controls(u, theta1, theta3):
    """
    Rotates (u1, u2, u3) to the frame of the chart.

    v2 = u2 cos3 + u3 sin3, v3 = -u2 sin3 + u3 cos3,
    w1 = u1 sin1 + v2 cos1, w2 = -u1 cos1 + v2 sin1.

    Returns:
        tuple: (w1, w2, v3).
    """
    u1, u2, u3 = u
    s1, c1 = colatitude_trig(theta1)
    c3, s3 = np.cos(theta3), np.sin(theta3)
    v2 = u2 * c3 + u3 * s3
    v3 = -u2 * s3 + u3 * c3
    return u1 * s1 + v2 * c1, -u1 * c1 + v2 * s1, v3


def rotate_controls_inverse(w1, w2, v3, theta1, theta3) -> ControlTriple:
    s1, c1 = colatitude_trig(theta1)
    c3, s3 = np.cos(theta3), np.sin(theta3)
    u1 = w1 * s1 - w2 * c1
    v2 = w1 * c1 + w2 * s1
    return ControlTriple(u1, v2 * c3 - v3 * s3, v2 * s3 + v3 * c3)


def tripod_sph_rhs(s: Spherical4, u, k: float) -> np.ndarray:
    """
    Spherical dynamics (r_dot, theta1_dot, theta2_dot, theta3_dot).

    r_dot = -k r cos^2(theta2), theta1_dot = cot(theta2) w1,
    theta2_dot = k sin(theta2) cos(theta2) + w2, theta3_dot = cot(theta2) v3 / sin(theta1).

    Raises:
        DegenerateChartError: If sin(theta1) or sin(theta2) is below the pole guard.
    """
    _guard(s.theta1, s.theta2)
    w1, w2, v3 = rotate_controls(u, s.theta1, s.theta3)
    s1, _ = colatitude_trig(s.theta1)
    s2, c2 = colatitude_trig(s.theta2)
    cot2 = c2 / s2
    return np.array(
        [-k * s.r * c2 * c2, cot2 * w1, k * s2 * c2 + w2, cot2 * v3 / s1]
    )


def tripod_energy_hamiltonian(e: TripodExtremal, w1, w2, v3, k: float) -> float:
    """
    Pseudo-Hamiltonian of the energy cost for given rotated controls.

    Raises:
        DegenerateChartError: On a chart degeneracy.
    """
    _guard(e.theta1, e.theta2)
    s1, _ = colatitude_trig(e.theta1)
    s2, c2 = colatitude_trig(e.theta2)
    cot2 = c2 / s2
    return float(
        -k * e.p_rho * c2 * c2
        + e.p_theta1 * cot2 * w1
        + e.p_theta2 * (k * s2 * c2 + w2)
        + e.p_theta3 * cot2 * v3 / s1
        - 0.5 * (w1 * w1 + w2 * w2 + v3 * v3)
    )


def tripod_maximizing_controls(e: TripodExtremal):
    """(w1, w2, v3) = (cot2 p_theta1, p_theta2, cot2 p_theta3 / sin1)."""
    _guard(e.theta1, e.theta2)
    s1, _ = colatitude_trig(e.theta1)
    s2, c2 = colatitude_trig(e.theta2)
    cot2 = c2 / s2
    return cot2 * e.p_theta1, e.p_theta2, cot2 * e.p_theta3 / s1


def _energy_max_values(theta1, theta2, p_rho, p1, p2, p3, k):
    s1, _ = colatitude_trig(theta1)
    s2, c2 = colatitude_trig(theta2)
    cot2 = c2 / s2
    return (
        -k * p_rho * c2 * c2
        + k * c2 * s2 * p2
        + 0.5 * (cot2 * cot2 * p1 * p1 + p2 * p2 + cot2 * cot2 * p3 * p3 / (s1 * s1))
    )


def tripod_energy_hamiltonian_max(e: TripodExtremal, k: float) -> float:
    """Maximized energy Hamiltonian of the tripod."""
    _guard(e.theta1, e.theta2)
    return float(
        _energy_max_values(
            e.theta1, e.theta2, e.p_rho, e.p_theta1, e.p_theta2, e.p_theta3, k
        )
    )


def tripod_energy_vector_field(t, y, k):
    _, theta1, theta2, _, p_rho, p1, p2, p3 = y
    s1, c1 = colatitude_trig(theta1)
    s2, c2 = colatitude_trig(theta2)
    if abs(s1) < POLE_GUARD or abs(s2) < POLE_GUARD:
        _guard(theta1, theta2)
    cot2 = c2 / s2
    return np.array(
        [
            -k * c2 * c2,
            cot2 * cot2 * p1,
            k * s2 * c2 + p2,
            cot2 * cot2 * p3 / (s1 * s1),
            0.0,
            cot2 * cot2 * p3 * p3 * c1 / s1**3,
            -2.0 * k * p_rho * s2 * c2
            - k * (c2 * c2 - s2 * s2) * p2
            + c2 / s2**3 * (p1 * p1 + p3 * p3 / (s1 * s1)),
            0.0,
        ]
    )


def tripod_costates_to_cartesian(r, theta1, theta2, theta3, p_r, p1, p2, p3):
    """
    Cartesian costate of a tripod extremal. The chart tangent vectors are
    orthogonal with norms 1, r sin2, r, r sin1 sin2, so each momentum is
    divided by the squared norm of its tangent vector.
    """
    s1, c1 = colatitude_trig(theta1)
    s2, c2 = colatitude_trig(theta2)
    c3, s3 = np.cos(theta3), np.sin(theta3)
    e_r = np.array([c1 * s2, c2, s1 * s2 * c3, s1 * s2 * s3])
    d_theta1 = r * np.array([-s1 * s2, 0.0 * s2, c1 * s2 * c3, c1 * s2 * s3])
    d_theta2 = r * np.array([c1 * c2, -s2, s1 * c2 * c3, s1 * c2 * s3])
    d_theta3 = r * np.array([0.0 * s2, 0.0 * s2, -s1 * s2 * s3, s1 * s2 * c3])
    return (
        p_r * e_r
        + p1 / (r * s2) ** 2 * d_theta1
        + p2 / r**2 * d_theta2
        + p3 / (r * s1 * s2) ** 2 * d_theta3
    )


def tripod_extremal_to_cartesian(y):
    """(x, p) of an extremal state vector ordered as TripodExtremal.LABELS."""
    rho, theta1, theta2, theta3, p_rho, p1, p2, p3 = y
    r = np.exp(rho)
    x = tripod_sph_to_cart(r, theta1, theta2, theta3)
    p = tripod_costates_to_cartesian(r, theta1, theta2, theta3, p_rho / r, p1, p2, p3)
    return x, p


def tripod_constants(x, p):
    """
    Angular momenta of the rotations among levels 1, 3 and 4.

    Returns:
        tuple: (L1, L3, L4) = (x3 p4 - x4 p3, x1 p4 - x4 p1, x1 p3 - x3 p1).
    """
    x1, _, x3, x4 = x
    p1, _, p3, p4 = p
    return x3 * p4 - x4 * p3, x1 * p4 - x4 * p1, x1 * p3 - x3 * p1


def _tripod_chart_columns(traj: Trajectory) -> None:
    rho = traj.column("rho")
    r = np.exp(rho)
    x = tripod_sph_to_cart(
        r, traj.column("theta1"), traj.column("theta2"), traj.column("theta3")
    )
    traj.aux["r"] = r
    for i in range(4):
        traj.aux[f"x{i + 1}"] = x[i]
    for i in range(4):
        traj.aux[f"pop{i + 1}"] = x[i] ** 2


def _control_columns(traj: Trajectory, w1, w2, v3) -> None:
    u = rotate_controls_inverse(
        w1, w2, v3, traj.column("theta1"), traj.column("theta3")
    )
    traj.aux.update({"u1": u.u1, "u2": u.u2, "u3": u.u3, "w1": w1, "w2": w2, "v3": v3})
    power = u.u1**2 + u.u2**2 + u.u3**2
    traj.aux["cost"] = cumulative_trapezoid(power, traj.t, initial=0.0)


def propagate_tripod_energy(
    init: TripodExtremal, k: float, T: float, cfg: Optional[IntegratorConfig] = None
) -> Trajectory:
    """
    Propagates the tripod energy extremal flow and monitors H, L1, L3, L4.

    Raises:
        DegenerateChartError: On a chart degeneracy.
        IntegrationError: If the integrator fails.
    """
    _guard(init.theta1, init.theta2)
    traj = integrate(
        tripod_energy_vector_field,
        init.as_array(),
        0.0,
        T,
        cfg,
        args=(k,),
        labels=TripodExtremal.LABELS,
    )
    _tripod_chart_columns(traj)
    s1, _ = colatitude_trig(traj.column("theta1"))
    s2, c2 = colatitude_trig(traj.column("theta2"))
    cot2 = c2 / s2
    _control_columns(
        traj,
        cot2 * traj.column("p_theta1"),
        traj.column("p_theta2"),
        cot2 * traj.column("p_theta3") / s1,
    )
    traj.drifts = monitor_conserved(
        traj,
        {
            "H": lambda y: _energy_max_values(y[1], y[2], y[4], y[5], y[6], y[7], k),
            "L1": lambda y: tripod_constants(*tripod_extremal_to_cartesian(y))[0],
            "L3": lambda y: tripod_constants(*tripod_extremal_to_cartesian(y))[1],
            "L4": lambda y: tripod_constants(*tripod_extremal_to_cartesian(y))[2],
        },
    )
    traj.summary = {
        "H": tripod_energy_hamiltonian_max(init, k),
        "C": float(traj.aux["cost"][-1]),
        **{f"final_population_{i}": float(traj.aux[f"pop{i}"][-1]) for i in range(1, 5)},
    }
    return traj


def tripod_stirap_hamiltonian(e: TripodExtremal, w1, v3, k: float) -> float:
    """
    H = -k p_rho cos^2(theta2) + p_theta2^2 / 2 + w1 cot2 p_theta1 + v3 cot2 p_theta3 / sin1.

    Raises:
        DegenerateChartError: On a chart degeneracy.
    """
    _guard(e.theta1, e.theta2)
    return float(
        _stirap_values(
            e.theta1, e.theta2, e.p_rho, e.p_theta1, e.p_theta2, e.p_theta3, w1, v3, k
        )
    )


def _stirap_values(theta1, theta2, p_rho, p1, p2, p3, w1, v3, k):
    s1, _ = colatitude_trig(theta1)
    s2, c2 = colatitude_trig(theta2)
    cot2 = c2 / s2
    return -k * p_rho * c2 * c2 + 0.5 * p2 * p2 + w1 * cot2 * p1 + v3 * cot2 * p3 / s1


def tripod_v3(w1, theta1, theta2, p_theta1, p_theta3, rpr, k):
    """
    Value of v3 that freezes p_theta2 for a given w1.

    v3 = (2 k (r p_r) cos2 sin2^3 - w1 p_theta1) sin1 / p_theta3

    Raises:
        SingularParameterError: If p_theta3 = 0.
    """
    if np.any(np.asarray(p_theta3) == 0):
        raise SingularParameterError("p_theta3", "the tripod closure divides by it")
    s1, _ = colatitude_trig(theta1)
    s2, c2 = colatitude_trig(theta2)
    return (2.0 * k * rpr * c2 * s2**3 - w1 * p_theta1) * s1 / p_theta3


def _schedule(w1: Schedule, t: float) -> float:
    return w1(t) if callable(w1) else w1


def tripod_stirap_vector_field(t, y, k, w1, v3=None):
    """
    Canonical equations of the tripod STIRAP Hamiltonian.

    v3 defaults to the closure value at the current state; the p_theta2
    equation is written as (p3 / (sin1 sin2^2)) (v3 - v3_closure).
    """
    _, theta1, theta2, _, p_rho, p1, _, p3 = y
    s1, c1 = colatitude_trig(theta1)
    s2, c2 = colatitude_trig(theta2)
    if abs(s1) < POLE_GUARD or abs(s2) < POLE_GUARD:
        _guard(theta1, theta2)
    w = _schedule(w1, t)
    closure = tripod_v3(w, theta1, theta2, p1, p3, p_rho, k)
    control = closure if v3 is None else v3
    cot2 = c2 / s2
    return np.array(
        [
            -k * c2 * c2,
            w * cot2,
            y[6],
            control * cot2 / s1,
            0.0,
            control * cot2 * p3 * c1 / (s1 * s1),
            p3 / (s1 * s2 * s2) * (control - closure),
            0.0,
        ]
    )


def theta3_advance(theta1_0, theta1_T, v3, w1):
    """theta3(T) - theta3(0) = (v3 / w1) ln[tan(theta1_T / 2) / tan(theta1_0 / 2)]."""
    return v3 / w1 * np.log(np.tan(theta1_T / 2) / np.tan(theta1_0 / 2))


def tripod_theta1_for_superposition(
    theta2: float,
    p_theta1: float,
    p_theta3: float,
    rpr: float,
    w1: float,
    k: float,
    theta3_0: float = 0.0,
    theta3_target: float = DEFAULT_THETA3_TARGET,
) -> float:
    """
    Smallest theta1(0) for which the branch ends at theta3 = theta3_target
    when theta1 reaches pi/2.

    Raises:
        SingularParameterError: If w1 = 0.
        InvalidParameterError: If the target angle cannot be reached.
    """
    if w1 == 0:
        raise SingularParameterError("w1", "theta1 does not move")
    needed = theta3_target - theta3_0
    if needed == 0:
        raise InvalidParameterError("theta3_target", theta3_target, "equals theta3(0)")

    def advance(theta1_0):
        v3 = tripod_v3(w1, theta1_0, theta2, p_theta1, p_theta3, rpr, k)
        return theta3_advance(theta1_0, np.pi / 2, v3, w1)

    lo, hi = 1e-12, np.pi / 2 - 1e-9
    direction = np.sign(needed)
    peak = minimize_scalar(
        lambda a: -direction * advance(a), bounds=(lo, hi), method="bounded"
    ).x
    if direction * advance(peak) < abs(needed):
        raise InvalidParameterError(
            "theta3_target",
            theta3_target,
            f"the branch reaches at most {theta3_0 + advance(peak):.6g}",
        )
    return float(brentq(lambda a: advance(a) - needed, lo, peak, xtol=1e-15))


def tripod_stirap_duration(theta1_0: float, theta2: float, w1: float) -> float:
    """
    Time for theta1 to reach pi/2 at the constant rate w1 cot(theta2).

    Raises:
        SingularParameterError: If the rate is zero.
    """
    s2, c2 = colatitude_trig(theta2)
    rate = w1 * c2 / s2
    if rate == 0:
        raise SingularParameterError("w1 cot(theta2)", "theta1 does not move")
    return float((np.pi / 2 - theta1_0) / rate)


def propagate_tripod_stirap(
    init: TripodExtremal,
    w1: Schedule,
    k: float,
    T: Optional[float] = None,
    cfg: Optional[IntegratorConfig] = None,
) -> Trajectory:
    """
    Propagates the tripod STIRAP branch with p_theta2 = 0.

    Args:
        init: Initial point; p_theta2 must be 0 and p_theta3 non-zero.
        w1: Constant control w1, or a schedule w1(t) (then T is required).
        k: Relaxation rate.
        T: Horizon; None runs until theta1 reaches pi/2.
        cfg: Integrator settings.

    Returns:
        Trajectory: Samples with x1..x4, pop1..pop4, u1..u3, w1, w2, v3 and
        cost columns and a summary of populations and pulse ordering.

    Raises:
        InvalidParameterError: If p_theta2(0) is not 0 or T is missing for a schedule.
        SingularParameterError: If p_theta3 = 0 or w1 cot(theta2) = 0 with T unset.
    """
    _guard(init.theta1, init.theta2)
    if init.p_theta2 != 0:
        raise InvalidParameterError("p_theta2", init.p_theta2, "the branch starts at 0")
    if init.p_theta3 == 0:
        raise SingularParameterError("p_theta3", "the tripod closure divides by it")
    if T is None:
        if callable(w1):
            raise InvalidParameterError("T", T, "a w1 schedule needs an explicit horizon")
        T = tripod_stirap_duration(init.theta1, init.theta2, w1)
    traj = integrate(
        tripod_stirap_vector_field,
        init.as_array(),
        0.0,
        T,
        cfg,
        args=(k, w1),
        labels=TripodExtremal.LABELS,
    )
    _tripod_chart_columns(traj)
    theta1, theta2 = traj.column("theta1"), traj.column("theta2")
    p1, p2, p3 = traj.column("p_theta1"), traj.column("p_theta2"), traj.column("p_theta3")
    w1_column = np.array([_schedule(w1, t) for t in traj.t])
    s2, c2 = colatitude_trig(theta2)
    v3 = tripod_v3(w1_column, theta1, theta2, p1, p3, traj.column("p_rho"), k)
    _control_columns(traj, w1_column, p2 - k * s2 * c2, v3)
    traj.aux["stirap_cost"] = cumulative_trapezoid(p2 * p2, traj.t, initial=0.0)

    drifts = {"p_rho": lambda y: y[4], "p_theta3": lambda y: y[7]}
    if not callable(w1):

        def hamiltonian(y):
            v3_row = tripod_v3(w1, y[1], y[2], y[5], y[7], y[4], k)
            return _stirap_values(y[1], y[2], y[4], y[5], y[6], y[7], w1, v3_row, k)

        drifts["H"] = hamiltonian
    traj.drifts = monitor_conserved(traj, drifts)
    traj.summary = _tripod_summary(traj, init)
    return traj


def _tripod_summary(traj: Trajectory, init: TripodExtremal) -> dict:
    t_stokes, t_pump = peak_times(traj, stokes=("u2", "u3"))
    t_u2 = float(traj.t[np.argmax(np.abs(traj.column("u2")))])
    t_u3 = float(traj.t[np.argmax(np.abs(traj.column("u3")))])
    final = {f"final_population_{i}": float(traj.aux[f"pop{i}"][-1]) for i in range(1, 5)}
    return {
        "theta1_0": init.theta1,
        "theta2": init.theta2,
        "T": traj.duration,
        "v3": float(traj.aux["v3"][0]),
        "final_theta3": float(traj.column("theta3")[-1]),
        **final,
        "population_difference_34": abs(final["final_population_3"] - final["final_population_4"]),
        "max_population_2": float(np.max(traj.aux["pop2"])),
        "max_abs_p_theta2": float(np.max(np.abs(traj.column("p_theta2")))),
        "max_theta2_deviation": float(np.max(np.abs(traj.column("theta2") - init.theta2))),
        "stokes_peak_time": t_stokes,
        "pump_peak_time": t_pump,
        "counterintuitive": bool(max(t_stokes, t_u2, t_u3) < t_pump),
        "C": float(traj.aux["cost"][-1]),
        "stirap_cost": float(traj.aux["stirap_cost"][-1]),
    }
