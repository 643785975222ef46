"""
Shooting over initial costates for fixed-horizon transfers, and the
control metrics used to compare extremal solutions.
"""

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.optimize import minimize
from scipy.stats import spearmanr

from stirapoc.core.models import (
    ExtremalPoint,
    IntegratorConfig,
    MetricsReport,
    SearchResult,
    ShootingProblem,
    Trajectory,
    TripodExtremal,
)
from stirapoc.core.errors import (
    InsufficientSamplesError,
    InvalidParameterError,
    ShootingError,
    StirapOCError,
)
from stirapoc.core.pmp_energy import costate_for_hamiltonian, propagate_extremal
from stirapoc.core.stirap_cost import propagate_stirap
from stirapoc.core.state_space import cart_to_sph
from stirapoc.core.tripod import (
    propagate_tripod_energy,
    propagate_tripod_stirap,
    tripod_cart_to_sph,
)
from stirapoc.core.defaults import (
    DEFAULT_SEARCH_GRID,
    DEFAULT_SEARCH_MAX_EVALS,
    DEFAULT_TREND_P_PHI,
    DEFAULT_TREND_P_RHO,
    DEFAULT_TREND_T,
    DEFAULT_TRIPOD_EPSILON,
    DEFAULT_WORKERS,
    MIN_METRIC_SAMPLES,
    ZERO_CONTROL_FRACTION,
)

logger = logging.getLogger(__name__)

CONTROL_COLUMNS = ("u1", "u2", "u3")

# initial values each problem reads, free or fixed
PARAMETERS = {
    ("three-level", "energy"): ("theta", "phi", "p_rho", "p_theta", "p_phi"),
    ("three-level", "stirap"): ("theta", "phi", "p_rho", "p_phi"),
    ("tripod", "energy"): (
        "theta1",
        "theta2",
        "theta3",
        "p_rho",
        "p_theta1",
        "p_theta2",
        "p_theta3",
    ),
    ("tripod", "stirap"): ("theta1", "theta2", "theta3", "p_rho", "p_theta1", "p_theta3", "w1"),
}


def zero_crossings(t, u) -> np.ndarray:
    """
    Times where u changes sign, located by linear interpolation.

    Samples with |u| below a fraction of max|u| are treated as zeros and
    skipped, so a crossing that lands on a sample is counted once.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    scale = np.max(np.abs(u)) if len(u) else 0.0
    keep = np.abs(u) > ZERO_CONTROL_FRACTION * scale
    t, u = t[keep], u[keep]
    flips = np.nonzero(np.sign(u[:-1]) != np.sign(u[1:]))[0]
    return t[flips] - u[flips] * (t[flips + 1] - t[flips]) / (u[flips + 1] - u[flips])


def oscillation_frequency(t, u) -> float:
    """
    Half the number of sign changes per unit time. With two or more
    crossings the rate is measured between the first and the last one.
    """
    crossings = zero_crossings(t, u)
    n = len(crossings)
    if n >= 2 and crossings[-1] > crossings[0]:
        return float((n - 1) / (2.0 * (crossings[-1] - crossings[0])))
    duration = float(t[-1] - t[0])
    return float(n / (2.0 * duration))


def _state_columns(traj: Trajectory, size: int) -> Optional[np.ndarray]:
    names = [f"x{i + 1}" for i in range(size)]
    if not all(traj.has_column(name) for name in names):
        return None
    return np.array([traj.column(name)[-1] for name in names])


def metrics(traj: Trajectory, target: Optional[Sequence[float]] = None) -> MetricsReport:
    """
    Cost, frequency and amplitude of the controls of a trajectory.

    Args:
        traj: Trajectory with u1, u2 (and u3 for the tripod) columns.
        target: Target state in the reduced chart; defaults to |3> when the
            trajectory carries x1..x3.

    Returns:
        MetricsReport: C, Freq, Amp, the final fidelity (x(T) . target)^2 and
        the distance |x(T) - target|, and the trajectory drifts.

    Raises:
        InsufficientSamplesError: If the trajectory has fewer than the minimum samples.
    """
    if len(traj) < MIN_METRIC_SAMPLES:
        raise InsufficientSamplesError(len(traj), MIN_METRIC_SAMPLES)
    controls = [traj.column(name) for name in CONTROL_COLUMNS if traj.has_column(name)]
    power = sum(u * u for u in controls)
    duration = traj.duration
    active = [u for u in controls if np.any(u != 0)]
    freq = (
        float(np.mean([oscillation_frequency(traj.t, u) for u in active]))
        if active
        else 0.0
    )

    if target is None and traj.has_column("x3") and not traj.has_column("x4"):
        target = (0.0, 0.0, 1.0)
    fidelity = distance = None
    if target is not None:
        target = np.asarray(target, dtype=float)
        final = _state_columns(traj, len(target))
        if final is not None:
            fidelity = float(np.dot(final, target) ** 2)
            distance = float(np.linalg.norm(final - target))

    return MetricsReport(
        C=float(trapezoid(power, traj.t)),
        Freq=freq,
        Amp=float(trapezoid(np.sqrt(power), traj.t) / duration),
        fidelity=fidelity,
        distance=distance,
        drifts=dict(traj.drifts),
    )


def _check_box(problem: ShootingProblem, values: Mapping[str, float]) -> None:
    for name, lo, hi in problem.box:
        value = values[name]
        if not lo <= value <= hi:
            raise InvalidParameterError(name, value, f"outside the search box [{lo}, {hi}]")


def _required(params: Mapping[str, float], name: str) -> float:
    if name not in params:
        raise InvalidParameterError(name, None, "needed by this problem but not given")
    return float(params[name])


def _initial_values(problem: ShootingProblem, costates) -> dict:
    if isinstance(costates, Mapping):
        free = {name: float(costates[name]) for name in problem.names}
    else:
        free = dict(zip(problem.names, (float(v) for v in costates)))
    _check_box(problem, free)
    return {**dict(problem.fixed), **free}


def _three_level_chart(problem: ShootingProblem, params: dict) -> dict:
    chart = cart_to_sph(problem.start)
    return {
        "rho": float(np.log(chart.r)),
        "theta": float(params.get("theta", chart.theta)),
        "phi": float(params.get("phi", chart.phi)),
    }


def _tripod_chart(problem: ShootingProblem, params: dict) -> dict:
    chart = tripod_cart_to_sph(problem.start)
    theta2 = chart.theta2
    if abs(np.cos(theta2)) < DEFAULT_TRIPOD_EPSILON / 2:
        theta2 = np.pi / 2 - DEFAULT_TRIPOD_EPSILON
    return {
        "rho": float(np.log(chart.r)),
        "theta1": float(params.get("theta1", chart.theta1)),
        "theta2": float(params.get("theta2", theta2)),
        "theta3": float(params.get("theta3", chart.theta3)),
    }


def _propagate(problem: ShootingProblem, params: dict) -> Trajectory:
    cfg = problem.integrator
    if problem.cost == "energy" and problem.T is None:
        raise InvalidParameterError("T", None, "the energy cost needs a fixed horizon")
    if problem.system == "three-level":
        chart = _three_level_chart(problem, params)
        if problem.cost == "stirap":
            return propagate_stirap(
                chart["theta"],
                chart["phi"],
                _required(params, "p_rho"),
                _required(params, "p_phi"),
                problem.k,
                cfg,
                T=problem.T,
                rho0=chart["rho"],
            )
        init = ExtremalPoint(
            theta=chart["theta"],
            phi=chart["phi"],
            p_rho=_required(params, "p_rho"),
            p_theta=_required(params, "p_theta"),
            p_phi=_required(params, "p_phi"),
            rho=chart["rho"],
        )
        return propagate_extremal(init, problem.k, problem.T, cfg)

    chart = _tripod_chart(problem, params)
    init = TripodExtremal(
        theta1=chart["theta1"],
        theta2=chart["theta2"],
        theta3=chart["theta3"],
        p_rho=_required(params, "p_rho"),
        p_theta1=_required(params, "p_theta1"),
        p_theta2=float(params.get("p_theta2", 0.0)),
        p_theta3=_required(params, "p_theta3"),
        rho=chart["rho"],
    )
    if problem.cost == "stirap":
        return propagate_tripod_stirap(
            init, _required(params, "w1"), problem.k, problem.T, cfg
        )
    return propagate_tripod_energy(init, problem.k, problem.T, cfg)


def _zero_duration(problem: ShootingProblem):
    start = np.asarray(problem.start, dtype=float)
    target = np.asarray(problem.target, dtype=float)
    aux = {f"x{i + 1}": np.array([v]) for i, v in enumerate(start)}
    aux["cost"] = np.zeros(1)
    traj = Trajectory(t=np.zeros(1), y=start[None, :], labels=(), aux=aux)
    report = MetricsReport(
        C=0.0,
        Freq=0.0,
        Amp=0.0,
        fidelity=float(np.dot(start, target) ** 2),
        distance=float(np.linalg.norm(start - target)),
    )
    return report, traj


def shoot(problem: ShootingProblem, costates):
    """
    Propagates the extremal flow of the problem from the given free costates.

    Args:
        problem: The transfer problem.
        costates: Free parameter values, as a mapping or ordered like problem.names.

    Returns:
        tuple: (MetricsReport, Trajectory).

    Raises:
        InvalidParameterError: If a value lies outside the search box.
        ShootingError: If the flow fails; the failing costates are recorded.
    """
    params = _initial_values(problem, costates)
    if problem.T == 0:
        return _zero_duration(problem)
    try:
        traj = _propagate(problem, params)
        report = metrics(traj, problem.target)
    except StirapOCError as err:
        raise ShootingError(params, err) from err
    logger.debug(
        "Shot %s: distance %.6g, C = %.6g",
        {k: round(v, 10) for k, v in params.items()},
        report.distance,
        report.C,
    )
    return report, traj


def _distance(job) -> float:
    problem, vector = job
    try:
        report, _ = shoot(problem, vector)
    except StirapOCError:
        return np.inf
    return report.distance


def _grid(problem: ShootingProblem, size: int):
    axes = [
        np.linspace(lo, hi, size) if hi > lo else np.array([lo])
        for _, lo, hi in problem.box
    ]
    return [np.array(point) for point in itertools.product(*axes)]


def search(
    problem: ShootingProblem,
    grid: int = DEFAULT_SEARCH_GRID,
    max_evals: int = DEFAULT_SEARCH_MAX_EVALS,
    workers: int = DEFAULT_WORKERS,
) -> SearchResult:
    """
    Coarse grid over the search box followed by a bounded Nelder-Mead
    refinement of the distance to the target.

    Args:
        problem: Transfer problem with a non-empty search box.
        grid: Points per non-collapsed axis.
        max_evals: Function evaluation budget of the refinement.
        workers: Processes used for the grid; results do not depend on it.

    Returns:
        SearchResult: Best costates found, their metrics and trajectory.

    Raises:
        InvalidParameterError: If the box is empty.
        ShootingError: If every grid point fails.
    """
    if not problem.box:
        raise InvalidParameterError("search.box", {}, "at least one free parameter is needed")

    candidates = _grid(problem, grid)
    jobs = [(problem, point) for point in candidates]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            distances = list(executor.map(_distance, jobs))
    else:
        distances = [_distance(job) for job in jobs]
    distances = np.asarray(distances)
    if not np.isfinite(distances).any():
        raise ShootingError(dict(zip(problem.names, candidates[0])), "every grid point failed")

    best_index = int(np.argmin(distances))
    best = candidates[best_index].copy()
    best_distance = float(distances[best_index])
    evaluations = len(candidates)
    logger.info(
        "Grid search: %d points, best distance %.6g", len(candidates), best_distance
    )

    improved = flagged = False
    free = [i for i, (_, lo, hi) in enumerate(problem.box) if hi > lo]
    if free:

        def objective(sub):
            vector = best.copy()
            vector[free] = sub
            return _distance((problem, vector))

        refined = minimize(
            objective,
            best[free],
            method="Nelder-Mead",
            bounds=[problem.bounds[i] for i in free],
            options={"maxfev": max_evals, "xatol": 1e-10, "fatol": 1e-12},
        )
        evaluations += int(refined.nfev)
        if refined.fun < best_distance:
            improved = True
            best[free] = refined.x
            best_distance = float(refined.fun)
        elif refined.nfev >= max_evals:
            flagged = True
            logger.warning(
                "Refinement budget of %d evaluations exhausted without improvement",
                max_evals,
            )

    report, traj = shoot(problem, best)
    return SearchResult(
        costates=dict(zip(problem.names, (float(v) for v in best))),
        report=report,
        trajectory=traj,
        evaluations=evaluations,
        improved=improved,
        flagged=flagged,
    )


def trend_hamiltonian(p_phi: float, p_rho: float, k: float, T: float) -> float:
    """
    Level H whose averaged azimuth sweep over [0, T] is a quarter turn:
    H = (p_phi^2 - 2 k p_rho - k^2) pi / (2 p_phi T).
    """
    omega_sq = p_phi * p_phi - 2.0 * k * p_rho - k * k
    if omega_sq <= 0:
        raise InvalidParameterError(
            "p_phi", p_phi, "the equator is not a stable orbit centre for this p_rho"
        )
    return float(omega_sq * np.pi / (2.0 * p_phi * T))


def trend_family(
    p_phis: Sequence[float] = DEFAULT_TREND_P_PHI,
    p_rho: float = DEFAULT_TREND_P_RHO,
    k: float = 1.0,
    T: float = DEFAULT_TREND_T,
    cfg: Optional[IntegratorConfig] = None,
) -> pd.DataFrame:
    """
    Energy extremals started at |1> on fibers of increasing H.

    Returns:
        pd.DataFrame: One row per p_phi with columns p_phi, H, p_theta, C,
        Freq, Amp, fidelity, sorted by H.
    """
    rows = []
    for p_phi in p_phis:
        H = trend_hamiltonian(p_phi, p_rho, k, T)
        p_theta = costate_for_hamiltonian(np.pi / 2, H, p_phi, p_rho, k)
        init = ExtremalPoint(theta=np.pi / 2, phi=0.0, p_rho=p_rho, p_theta=p_theta, p_phi=p_phi)
        report = metrics(propagate_extremal(init, k, T, cfg))
        rows.append(
            {
                "p_phi": float(p_phi),
                "H": H,
                "p_theta": p_theta,
                "C": report.C,
                "Freq": report.Freq,
                "Amp": report.Amp,
                "fidelity": report.fidelity,
            }
        )
    return pd.DataFrame(rows).sort_values("H", ignore_index=True)


def trend_correlations(family: pd.DataFrame) -> dict:
    """Spearman rank correlation of C, Freq and fidelity with H."""
    return {
        name: float(spearmanr(family["H"], family[name]).statistic)
        for name in ("C", "Freq", "fidelity")
    }
