import logging
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp

from stirapoc.core.models import IntegratorConfig, Trajectory
from stirapoc.core.errors import IntegrationError, NonFiniteDerivativeError
from stirapoc.core.defaults import DEFAULT_METHOD

logger = logging.getLogger(__name__)

Quantity = Callable[[np.ndarray], float]


def sample_times(t0: float, T: float, interval: float) -> np.ndarray:
    """
    Returns t0, t0 + interval, ... with the last sample exactly at T.
    """
    n = int(np.floor((T - t0) / interval + 1e-9))
    times = t0 + interval * np.arange(n + 1)
    if T - times[-1] > 1e-12:
        times = np.append(times, T)
    else:
        times[-1] = T
    return times


def integrate(
    rhs: Callable,
    y0,
    t0: float,
    T: float,
    cfg: Optional[IntegratorConfig] = None,
    args: tuple = (),
    labels: Sequence[str] = (),
) -> Trajectory:
    """
    Integrates y' = rhs(t, y, *args) from t0 to T with an embedded
    Runge-Kutta pair of order 8(5,3) and samples the dense output.

    Args:
        rhs: Vector field called as rhs(t, y, *args).
        y0: Initial state (real or complex).
        t0: Start time.
        T: Final time, greater than t0.
        cfg: Integrator settings; defaults to IntegratorConfig().
        args: Extra arguments passed to rhs.
        labels: Names of the state components.

    Returns:
        Trajectory: Samples at the configured interval, last sample at T.

    Raises:
        IntegrationError: If T <= t0 or the step size underflows.
        NonFiniteDerivativeError: If rhs returns NaN or infinity.
    """
    cfg = cfg or IntegratorConfig()
    if not T > t0:
        raise IntegrationError(t0, f"horizon T = {T!r} must exceed t0 = {t0!r}")

    last_time = [t0]

    def guarded(t, y):
        last_time[0] = t
        dy = rhs(t, y, *args)
        if not np.all(np.isfinite(dy)):
            raise NonFiniteDerivativeError(t)
        return dy

    solution = solve_ivp(
        guarded,
        (t0, T),
        np.atleast_1d(np.asarray(y0)),
        method=DEFAULT_METHOD,
        t_eval=sample_times(t0, T, cfg.sample_interval),
        rtol=cfg.rtol,
        atol=cfg.atol,
        max_step=cfg.max_step,
    )
    if solution.status < 0:
        raise IntegrationError(last_time[0], solution.message)
    logger.debug(
        "Integrated [%g, %g] with %d rhs evaluations, %d samples",
        t0,
        T,
        solution.nfev,
        len(solution.t),
    )
    return Trajectory(t=solution.t, y=solution.y.T, labels=tuple(labels))


def monitor_conserved(
    traj: Trajectory,
    quantities: Union[Mapping[str, Quantity], Sequence[Quantity]],
) -> Union[dict[str, float], list[float]]:
    """
    Measures how far each quantity moves away from its initial value.

    For each callback Q the drift is max_t |Q(y(t)) - Q(y(t0))| / max(1, |Q(y(t0))|).

    Args:
        traj: A non-empty trajectory.
        quantities: Callbacks evaluated on state rows, as a name mapping or a list.

    Returns:
        Drifts in the same shape as quantities (dict or list).
    """
    if isinstance(quantities, Mapping):
        return {name: _drift(traj, q) for name, q in quantities.items()}
    return [_drift(traj, q) for q in quantities]


def _drift(traj: Trajectory, quantity: Quantity) -> float:
    values = np.array([quantity(row) for row in traj.y], dtype=float)
    reference = values[0]
    return float(np.max(np.abs(values - reference)) / max(1.0, abs(reference)))
