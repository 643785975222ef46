from dataclasses import dataclass, field, fields
from enum import Enum, IntEnum
from typing import Any, NamedTuple, Optional

import numpy as np
import pandas as pd

from stirapoc.core.errors import ConfigError
from stirapoc.core.defaults import (
    DEFAULT_RTOL,
    DEFAULT_ATOL,
    DEFAULT_MAX_STEP,
    DEFAULT_SAMPLE_INTERVAL,
    MAX_TOLERANCE,
)


class ExitCode(IntEnum):
    SUCCESS = 0
    CONFIG_ERROR = 2
    NUMERICAL_FAILURE = 3


class PointClass(str, Enum):
    REGULAR = "regular"
    STIRAP_SINGULAR = "stirap-singular"
    BOUNDARY = "boundary"


class ControlPair(NamedTuple):
    u1: float
    u2: float


class ControlTriple(NamedTuple):
    u1: float
    u2: float
    u3: float


class Spherical3(NamedTuple):
    """
    Spherical chart of the reduced three-level state.

    Attributes:
        r (float): Norm of (x1, x2, x3).
        theta (float): Colatitude measured from the x2 axis.
        phi (float): Azimuth in the (x1, x3) plane.
        degenerate (bool): True when the point sits on a pole and phi was set to 0.
    """

    r: float
    theta: float
    phi: float
    degenerate: bool = False


class Spherical4(NamedTuple):
    r: float
    theta1: float
    theta2: float
    theta3: float


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Settings of the adaptive integrator.

    Attributes:
        rtol (float): Relative tolerance, in (0, 1e-2].
        atol (float): Absolute tolerance, in (0, 1e-2].
        max_step (float): Largest step the integrator may take.
        sample_interval (float): Spacing of the dense output samples.
    """

    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    max_step: float = DEFAULT_MAX_STEP
    sample_interval: float = DEFAULT_SAMPLE_INTERVAL

    def __post_init__(self):
        for name in ("rtol", "atol"):
            value = getattr(self, name)
            if not 0 < value <= MAX_TOLERANCE:
                raise ConfigError(
                    f"integrator.{name} must be in (0, {MAX_TOLERANCE:g}], got {value!r}"
                )
        if not self.max_step > 0:
            raise ConfigError(f"integrator.max_step must be positive, got {self.max_step!r}")
        if not self.sample_interval > 0:
            raise ConfigError(
                f"integrator.sample_interval must be positive, got {self.sample_interval!r}"
            )

    def with_tolerance(self, tol: float) -> "IntegratorConfig":
        """Returns a copy with rtol = tol and atol = tol / 100."""
        return IntegratorConfig(
            rtol=tol,
            atol=tol * 1e-2,
            max_step=self.max_step,
            sample_interval=self.sample_interval,
        )


@dataclass
class Trajectory:
    """
    Time-stamped samples of an integrated flow.

    Attributes:
        t (np.ndarray): Strictly increasing sample times.
        y (np.ndarray): State samples, one row per time.
        labels (tuple[str, ...]): Names of the state components.
        aux (dict[str, np.ndarray]): Per-sample derived columns (controls, cost, chart).
        drifts (dict[str, float]): Relative drift of monitored constants of motion.
        summary (dict[str, Any]): Scalar results of the run.
    """

    t: np.ndarray
    y: np.ndarray
    labels: tuple[str, ...] = ()
    aux: dict[str, np.ndarray] = field(default_factory=dict)
    drifts: dict[str, float] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def column(self, name: str) -> np.ndarray:
        if name in self.labels:
            return self.y[:, self.labels.index(name)]
        if name in self.aux:
            return self.aux[name]
        raise KeyError(f"Trajectory has no column named {name!r}")

    def has_column(self, name: str) -> bool:
        return name in self.labels or name in self.aux

    def to_frame(self, columns: Optional[list[str]] = None) -> pd.DataFrame:
        """Returns the samples as a DataFrame with a leading time column."""
        if columns is None:
            columns = list(self.labels) + list(self.aux)
        data = {"t": self.t}
        for name in columns:
            if name != "t":
                data[name] = self.column(name)
        return pd.DataFrame(data)


@dataclass(frozen=True)
class ExtremalPoint:
    """
    A point of the three-level extremal flow.

    Attributes:
        theta (float): Colatitude.
        phi (float): Azimuth.
        p_rho (float): Momentum of rho = log r, equal to r * p_r.
        p_theta (float): Momentum of theta.
        p_phi (float): Momentum of phi.
        rho (float): Logarithm of the state norm.
    """

    theta: float
    phi: float
    p_rho: float
    p_theta: float
    p_phi: float
    rho: float = 0.0

    LABELS = ("rho", "theta", "phi", "p_rho", "p_theta", "p_phi")

    @property
    def r(self) -> float:
        return float(np.exp(self.rho))

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.rho, self.theta, self.phi, self.p_rho, self.p_theta, self.p_phi],
            dtype=float,
        )

    @classmethod
    def from_array(cls, y) -> "ExtremalPoint":
        rho, theta, phi, p_rho, p_theta, p_phi = (float(v) for v in y[:6])
        return cls(theta=theta, phi=phi, p_rho=p_rho, p_theta=p_theta, p_phi=p_phi, rho=rho)


@dataclass(frozen=True)
class StirapExtremal(ExtremalPoint):
    """ExtremalPoint carrying the exogenous second control of the STIRAP cost."""

    v2: float = 0.0

    @classmethod
    def from_array(cls, y, v2: float = 0.0) -> "StirapExtremal":
        point = ExtremalPoint.from_array(y)
        return cls(**{f.name: getattr(point, f.name) for f in fields(point)}, v2=v2)


@dataclass(frozen=True)
class TripodExtremal:
    """
    A point of the tripod extremal flows.

    Attributes:
        theta1 (float): Angle between |1> and the (|3>, |4>) plane.
        theta2 (float): Colatitude measured from the x2 axis.
        theta3 (float): Azimuth in the (x3, x4) plane.
        p_rho (float): Momentum of rho = log r.
        p_theta1, p_theta2, p_theta3 (float): Angle momenta.
        rho (float): Logarithm of the state norm.
    """

    theta1: float
    theta2: float
    theta3: float
    p_rho: float
    p_theta1: float
    p_theta2: float
    p_theta3: float
    rho: float = 0.0

    LABELS = (
        "rho",
        "theta1",
        "theta2",
        "theta3",
        "p_rho",
        "p_theta1",
        "p_theta2",
        "p_theta3",
    )

    @property
    def r(self) -> float:
        return float(np.exp(self.rho))

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.rho,
                self.theta1,
                self.theta2,
                self.theta3,
                self.p_rho,
                self.p_theta1,
                self.p_theta2,
                self.p_theta3,
            ],
            dtype=float,
        )

    @classmethod
    def from_array(cls, y) -> "TripodExtremal":
        rho, t1, t2, t3, p_rho, p1, p2, p3 = (float(v) for v in y[:8])
        return cls(
            theta1=t1,
            theta2=t2,
            theta3=t3,
            p_rho=p_rho,
            p_theta1=p1,
            p_theta2=p2,
            p_theta3=p3,
            rho=rho,
        )


class ReductionPoint(NamedTuple):
    """
    The six polynomials invariant under the p_phi flow.

    pi1 = x2, pi2 = p_x2, pi3 = x1 p_x3 - x3 p_x1, pi4 = p_x1^2 + p_x3^2,
    pi5 = x1^2 + x3^2, pi6 = x1 p_x1 + x3 p_x3.
    """

    pi1: float
    pi2: float
    pi3: float
    pi4: float
    pi5: float
    pi6: float

    @property
    def relation_residual(self) -> float:
        return abs(self.pi6**2 + self.pi3**2 - self.pi4 * self.pi5)


@dataclass
class MomentumMapDiagram:
    """
    Sampled image of the energy-momentum map (H, p_phi).

    Attributes:
        p_rho (float): Fixed value of r * p_r.
        k (float): Dissipation rate.
        image (pd.DataFrame): Samples with columns theta, p_theta, p_phi, H.
        boundary (pd.DataFrame): Boundary curve with columns theta, p_theta, p_phi, H.
        singular_line (pd.DataFrame): Points (H = 0, p_phi) of the STIRAP line.
    """

    p_rho: float
    k: float
    image: pd.DataFrame
    boundary: pd.DataFrame
    singular_line: pd.DataFrame


@dataclass
class BitorusSection:
    """
    Zero set of the reduced Hamiltonian on the (pi1, pi2) plane.

    Attributes:
        hamiltonian (float): Level H of the section.
        p_phi (float): Value of pi3.
        p_rho (float): Value of r * p_r.
        pi1 (np.ndarray): Grid abscissae.
        pi2 (np.ndarray): Grid ordinates.
        values (np.ndarray): H_reduced - H on the grid, indexed [i_pi1, i_pi2].
        points (pd.DataFrame): Zero crossings with columns pi1, pi2, pi4.
    """

    hamiltonian: float
    p_phi: float
    p_rho: float
    pi1: np.ndarray
    pi2: np.ndarray
    values: np.ndarray
    points: pd.DataFrame

    @property
    def is_empty(self) -> bool:
        return self.points.empty


@dataclass
class MetricsReport:
    """
    Characteristics of an extremal solution.

    Attributes:
        C (float): Integral of the squared control amplitude.
        Freq (float): Mean zero-crossing frequency of the control components.
        Amp (float): Time average of the control amplitude.
        fidelity (Optional[float]): Squared overlap of the final state with the target.
        distance (Optional[float]): Euclidean distance of the final state to the target.
        drifts (dict[str, float]): Relative drift of the monitored constants of motion.
    """

    C: float
    Freq: float
    Amp: float
    fidelity: Optional[float] = None
    distance: Optional[float] = None
    drifts: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "Freq": self.Freq,
            "Amp": self.Amp,
            "fidelity": self.fidelity,
            "distance": self.distance,
            "drifts": dict(self.drifts),
        }


@dataclass(frozen=True)
class ShootingProblem:
    """
    Fixed-horizon transfer problem solved over free initial costates.

    Attributes:
        system (str): "three-level" or "tripod".
        cost (str): "energy" or "stirap".
        k (float): Dissipation rate.
        T (Optional[float]): Horizon; None lets the STIRAP branches compute it.
        start (tuple[float, ...]): Unit start state in the reduced chart.
        target (tuple[float, ...]): Unit target state in the reduced chart.
        box (tuple[tuple[str, float, float], ...]): Free parameters with their bounds.
        fixed (tuple[tuple[str, float], ...]): Remaining initial values.
        integrator (IntegratorConfig): Integrator settings.
    """

    system: str
    cost: str
    k: float
    T: Optional[float]
    start: tuple[float, ...]
    target: tuple[float, ...]
    box: tuple[tuple[str, float, float], ...]
    fixed: tuple[tuple[str, float], ...] = ()
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _, _ in self.box)

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return [(lo, hi) for _, lo, hi in self.box]


@dataclass
class SearchResult:
    """
    Outcome of a costate search.

    Attributes:
        costates (dict[str, float]): Best free parameters found.
        report (MetricsReport): Metrics of the best shot.
        trajectory (Trajectory): Trajectory of the best shot.
        evaluations (int): Number of shots taken.
        improved (bool): Whether refinement improved on the best grid point.
        flagged (bool): True when the refinement budget ran out without improvement.
    """

    costates: dict[str, float]
    report: MetricsReport
    trajectory: Trajectory
    evaluations: int
    improved: bool
    flagged: bool = False


@dataclass
class ScenarioResult:
    """
    Result of one CLI scenario.

    Attributes:
        command (str): Subcommand that produced the result.
        status (ExitCode): Exit status.
        results (dict): Scalars written to the summary.
        config (dict): Resolved configuration echoed in the summary.
        summary_path (Optional[str]): Path of the summary file.
        table_paths (list[str]): Paths of the tabular outputs.
    """

    command: str
    status: ExitCode
    results: dict
    config: dict
    summary_path: Optional[str] = None
    table_paths: list[str] = field(default_factory=list)
