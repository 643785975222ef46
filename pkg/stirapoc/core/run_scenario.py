import logging
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd

from stirapoc.core.utils import (
    ScenarioConfig,
    get_output_format,
    load_scenario,
    write_summary,
    write_table,
)
from stirapoc.core.models import (
    ExitCode,
    ExtremalPoint,
    ScenarioResult,
    ShootingProblem,
    TripodExtremal,
)
from stirapoc.core.errors import ConfigError
from stirapoc.core.integrator import integrate
from stirapoc.core.momentum_map import build_diagram, classify_point
from stirapoc.core.pmp_energy import (
    costate_for_hamiltonian,
    propagate_extremal,
    schrodinger_cross_check,
)
from stirapoc.core.singular_reduction import (
    bitorus_section,
    detect_pinch,
    return_to_singular_circle,
    saddle_at_origin,
    trajectory_invariants,
)
from stirapoc.core.solver import PARAMETERS, metrics, search
from stirapoc.core.state_space import real_to_complex, reduced_rhs, schrodinger_rhs
from stirapoc.core.stirap_cost import propagate_stirap, stirap_theta_for_hamiltonian
from stirapoc.core.tripod import (
    propagate_tripod_energy,
    propagate_tripod_stirap,
    tripod_real_rhs,
    tripod_theta1_for_superposition,
)
from stirapoc.core.defaults import (
    DEFAULT_OUTPUT_DIR,
    DEFAULT_THETA3_TARGET,
    DEFAULT_TRIPOD_EPSILON,
)

logger = logging.getLogger(__name__)

THREE_LEVEL_COLUMNS = [
    "x1",
    "x2",
    "x3",
    "r",
    "theta",
    "phi",
    "p_rho",
    "p_theta",
    "p_phi",
    "u1",
    "u2",
    "cost",
]
TRIPOD_COLUMNS = (
    [f"x{i}" for i in range(1, 5)]
    + ["r", "theta1", "theta2", "theta3", "p_rho"]
    + ["p_theta1", "p_theta2", "p_theta3", "u1", "u2", "u3", "cost"]
)
RAW_COLUMNS = [
    "x1",
    "x2",
    "x3",
    "c1_re",
    "c1_im",
    "c2_re",
    "c2_im",
    "c3_re",
    "c3_im",
    "u1",
    "u2",
    "norm",
]


def control_pulse(pulse) -> Callable[[float], float]:
    """
    Control envelope from its configuration: a constant, a Gaussian
    {amplitude, center, width} or piecewise-constant [t, value] steps
    (zero before the first step).
    """
    if isinstance(pulse, dict):
        amplitude, center, width = pulse["amplitude"], pulse["center"], pulse["width"]
        return lambda t: amplitude * np.exp(-(((t - center) / width) ** 2))
    if isinstance(pulse, list):
        times = np.array([step[0] for step in pulse])
        values = np.array([step[1] for step in pulse])

        def piecewise(t):
            index = int(np.searchsorted(times, t, side="right")) - 1
            return float(values[index]) if index >= 0 else 0.0

        return piecewise
    value = float(pulse)
    return lambda t: value


def _raw_vector_field(t, y, k, pulses):
    u = [pulse(t) for pulse in pulses]
    amplitudes = y[3:6] + 1j * y[6:9]
    d_amplitudes = schrodinger_rhs(amplitudes, u, k)
    return np.concatenate([reduced_rhs(y[:3], u, k), d_amplitudes.real, d_amplitudes.imag])


def _raw_tripod_vector_field(t, y, k, pulses):
    return tripod_real_rhs(y, [pulse(t) for pulse in pulses], k)


def _require(section: dict, name: str, where: str = "initial"):
    if name not in section:
        raise ConfigError(f"{where}.{name} is required by this command")
    return section[name]


def _horizon(cfg: ScenarioConfig) -> float:
    if cfg.T is None:
        raise ConfigError(f"T must be a number for the {cfg.command} command")
    return cfg.T


def _metrics_results(report) -> dict:
    results = report.to_dict()
    results.pop("drifts")
    return results


class RunScenario:
    def __init__(self):
        pass

    def _output_stem(self, cfg: ScenarioConfig, out: Optional[str]):
        stem = out if out else str(Path(DEFAULT_OUTPUT_DIR) / cfg.output)
        output_format = get_output_format(stem)
        if Path(stem).suffix:
            stem = str(Path(stem).with_suffix(""))
        return stem, output_format

    def run(
        self,
        command: str,
        config_file,
        out: Optional[str] = None,
        tol: Optional[float] = None,
        seedless: bool = False,
    ) -> ScenarioResult:
        """
        Runs one subcommand from a scenario file and writes its outputs.

        Keyword arguments:
            command -- subcommand name
            config_file -- scenario (or summary) YAML file
            out -- output stem; defaults to outputs/<output>
            tol -- integrator tolerance override
            seedless -- recorded in the summary
        """
        cfg = load_scenario(config_file, command)
        if tol is not None:
            cfg.integrator = cfg.integrator.with_tolerance(tol)
        cfg.seedless = cfg.seedless or seedless
        stem, output_format = self._output_stem(cfg, out)

        handler = getattr(self, "_" + command.replace("-", "_"))
        results, tables = handler(cfg)

        table_paths = []
        for name, frame in tables.items():
            suffix = f".{name}" if name else ""
            path = f"{stem}{suffix}.{output_format}"
            table_paths.append(write_table(frame, path, output_format))
        config = cfg.to_dict()
        summary_path = write_summary(
            f"{stem}.summary.yml", command, ExitCode.SUCCESS, results, config
        )
        logger.info("Wrote %s", summary_path)
        return ScenarioResult(
            command=command,
            status=ExitCode.SUCCESS,
            results=results,
            config=config,
            summary_path=summary_path,
            table_paths=table_paths,
        )

    def _simulate(self, cfg: ScenarioConfig):
        T = _horizon(cfg)
        names = ("u1", "u2") if cfg.system == "three-level" else ("u1", "u2", "u3")
        pulses = [control_pulse(cfg.controls.get(name, 0.0)) for name in names]
        size = 3 if cfg.system == "three-level" else 4
        state = np.asarray(cfg.initial.get("state", [1.0] + [0.0] * (size - 1)))
        if state.shape != (size,):
            raise ConfigError(f"initial.state must have {size} components for {cfg.system}")

        if cfg.system == "tripod":
            traj = integrate(
                _raw_tripod_vector_field, state, 0.0, T, cfg.integrator, args=(cfg.k, pulses)
            )
            frame = pd.DataFrame(traj.y, columns=[f"x{i}" for i in range(1, 5)])
        else:
            amplitudes = real_to_complex(state)
            y0 = np.concatenate([state, amplitudes.real, amplitudes.imag])
            traj = integrate(
                _raw_vector_field, y0, 0.0, T, cfg.integrator, args=(cfg.k, pulses)
            )
            x, re, im = traj.y[:, :3], traj.y[:, 3:6], traj.y[:, 6:9]
            frame = pd.DataFrame(x, columns=["x1", "x2", "x3"])
            for i in range(3):
                frame[f"c{i + 1}_re"] = re[:, i]
                frame[f"c{i + 1}_im"] = im[:, i]
        frame.insert(0, "t", traj.t)
        for name, pulse in zip(names, pulses):
            frame[name] = [pulse(t) for t in traj.t]
        x_columns = [f"x{i}" for i in range(1, size + 1)]
        frame["norm"] = (frame[x_columns] ** 2).sum(axis=1)

        results = {
            "T": T,
            "final_norm": float(frame["norm"].iloc[-1]),
            "norm_increase": float(np.diff(frame["norm"].to_numpy()).max(initial=0.0)),
            **{
                f"final_population_{i}": float(frame[f"x{i}"].iloc[-1] ** 2)
                for i in range(1, size + 1)
            },
        }
        if cfg.system == "three-level":
            # Re c1 = x1, Im c2 = -x2, Re c3 = x3
            chart = np.column_stack([frame["c1_re"], -frame["c2_im"], frame["c3_re"]])
            results["chart_deviation"] = float(np.max(np.abs(chart - traj.y[:, :3])))
            frame = frame[["t"] + RAW_COLUMNS]
        return results, {"": frame}

    def _three_level_init(self, cfg: ScenarioConfig, sign: int) -> ExtremalPoint:
        initial = cfg.initial
        theta = initial.get("theta", np.pi / 2)
        p_rho = _require(initial, "p_rho")
        p_phi = _require(initial, "p_phi")
        if "p_theta" in initial:
            p_theta = initial["p_theta"]
        else:
            H = _require(initial, "H")
            p_theta = costate_for_hamiltonian(theta, H, p_phi, p_rho, cfg.k, branch=sign)
        return ExtremalPoint(
            theta=theta,
            phi=initial.get("phi", 0.0),
            p_rho=p_rho,
            p_theta=p_theta,
            p_phi=p_phi,
            rho=initial.get("rho", 0.0),
        )

    def _tripod_init(self, cfg: ScenarioConfig) -> TripodExtremal:
        initial = cfg.initial
        return TripodExtremal(
            theta1=_require(initial, "theta1"),
            theta2=initial.get("theta2", np.pi / 2 - DEFAULT_TRIPOD_EPSILON),
            theta3=initial.get("theta3", 0.0),
            p_rho=_require(initial, "p_rho"),
            p_theta1=_require(initial, "p_theta1"),
            p_theta2=initial.get("p_theta2", 0.0),
            p_theta3=_require(initial, "p_theta3"),
            rho=initial.get("rho", 0.0),
        )

    def _extremal(self, cfg: ScenarioConfig):
        T = _horizon(cfg)
        if cfg.system == "tripod":
            traj = propagate_tripod_energy(self._tripod_init(cfg), cfg.k, T, cfg.integrator)
            report = metrics(traj)
            results = {**traj.summary, **_metrics_results(report), "drifts": traj.drifts}
            return results, {"": traj.to_frame(TRIPOD_COLUMNS)}

        sign = cfg.initial.get("sign", 1)
        signs = (1, -1) if sign == "best" else (sign,)
        candidates = []
        for branch in signs:
            init = self._three_level_init(cfg, branch)
            traj = propagate_extremal(init, cfg.k, T, cfg.integrator)
            candidates.append((metrics(traj), branch, init, traj))
        report, branch, init, traj = max(candidates, key=lambda c: c[0].fidelity)
        if sign == "best":
            logger.info("Chose p_theta sign %+d (fidelity %.6g)", branch, report.fidelity)

        results = {
            "H": traj.summary["H"],
            "p_theta": init.p_theta,
            "sign": branch,
            **_metrics_results(report),
            "final_norm": traj.summary["final_norm"],
            "drifts": traj.drifts,
            "schrodinger_deviation": schrodinger_cross_check(init, cfg.k, T, cfg.integrator),
        }
        return results, {"": traj.to_frame(THREE_LEVEL_COLUMNS)}

    def _stirap(self, cfg: ScenarioConfig):
        initial = cfg.initial
        p_rho = _require(initial, "p_rho")
        if "theta" in initial:
            theta = initial["theta"]
        else:
            theta = stirap_theta_for_hamiltonian(_require(initial, "H"), p_rho, cfg.k)
        traj = propagate_stirap(
            theta,
            initial.get("phi", 0.0),
            p_rho,
            _require(initial, "p_phi"),
            cfg.k,
            cfg.integrator,
            T=cfg.T,
            rho0=initial.get("rho", 0.0),
        )
        report = metrics(traj)
        results = {
            "theta0": theta,
            **traj.summary,
            **_metrics_results(report),
            "drifts": traj.drifts,
        }
        return results, {"": traj.to_frame(THREE_LEVEL_COLUMNS)}

    def _tripod(self, cfg: ScenarioConfig):
        initial = cfg.initial
        theta2 = initial.get("theta2", np.pi / 2 - DEFAULT_TRIPOD_EPSILON)
        theta3 = initial.get("theta3", 0.0)
        target_angle = initial.get("theta3_target", DEFAULT_THETA3_TARGET)
        w1 = _require(initial, "w1")
        theta1 = initial.get("theta1", "auto")
        if theta1 == "auto":
            theta1 = tripod_theta1_for_superposition(
                theta2,
                _require(initial, "p_theta1"),
                _require(initial, "p_theta3"),
                _require(initial, "p_rho"),
                w1,
                cfg.k,
                theta3_0=theta3,
                theta3_target=target_angle,
            )
            logger.info("theta1(0) = %.6g reaches theta3 = %.6g", theta1, target_angle)
        init = TripodExtremal(
            theta1=theta1,
            theta2=theta2,
            theta3=theta3,
            p_rho=_require(initial, "p_rho"),
            p_theta1=_require(initial, "p_theta1"),
            p_theta2=initial.get("p_theta2", 0.0),
            p_theta3=_require(initial, "p_theta3"),
            rho=initial.get("rho", 0.0),
        )
        traj = propagate_tripod_stirap(init, w1, cfg.k, cfg.T, cfg.integrator)
        target = (0.0, 0.0, np.cos(target_angle), np.sin(target_angle))
        report = metrics(traj, target)
        results = {**traj.summary, **_metrics_results(report), "drifts": traj.drifts}
        return results, {"": traj.to_frame(TRIPOD_COLUMNS)}

    def _momentum_map(self, cfg: ScenarioConfig):
        settings = cfg.momentum_map
        diagram = build_diagram(
            settings["p_rho"],
            cfg.k,
            sample_budget=settings["sample_budget"],
            box=settings["box"],
            boundary_theta=tuple(settings["boundary_theta"]),
            boundary_points=settings["boundary_points"],
            singular_line_points=settings["singular_line_points"],
            workers=settings["workers"],
        )
        image = diagram.image
        image["class"] = [
            classify_point(row.theta, row.p_theta, row.p_phi, diagram.p_rho, cfg.k).value
            for row in image.itertuples()
        ]
        results = {
            "samples": len(image),
            "H_min": float(image["H"].min()),
            "H_max": float(image["H"].max()),
            "boundary_points": len(diagram.boundary),
            "classes": image["class"].value_counts().to_dict(),
        }
        tables = {
            "image": image,
            "boundary": diagram.boundary,
            "singular_line": diagram.singular_line,
        }
        return results, tables

    def _reduce(self, cfg: ScenarioConfig):
        settings = cfg.reduce
        H = _require(settings, "hamiltonian", "reduce")
        p_phi = _require(settings, "p_phi", "reduce")
        p_rho = _require(settings, "p_rho", "reduce")
        section = bitorus_section(
            H,
            p_phi,
            p_rho,
            cfg.k,
            grid=settings["grid"],
            pi1_range=tuple(settings["pi1_range"]),
            pi2_range=tuple(settings["pi2_range"]),
        )
        results = {
            "hamiltonian": H,
            "empty": section.is_empty,
            "crossings": len(section.points),
            "pinch": detect_pinch(section),
            "saddle_at_origin": saddle_at_origin(p_phi, p_rho, cfg.k),
        }
        tables = {"section": section.points}

        thetas = settings.get("bitorus_thetas", [])
        if thetas:
            T = settings["bitorus_T"] if "bitorus_T" in settings else _horizon(cfg)
            window = settings.get("bitorus_window", [T / 2, T])
            rows, invariants = [], []
            for theta in thetas:
                p_theta = costate_for_hamiltonian(theta, H, p_phi, p_rho, cfg.k)
                init = ExtremalPoint(
                    theta=theta, phi=0.0, p_rho=p_rho, p_theta=p_theta, p_phi=p_phi
                )
                traj = propagate_extremal(init, cfg.k, T, cfg.integrator)
                rows.append(
                    {
                        "theta0": theta,
                        "p_theta0": p_theta,
                        "min_distance": return_to_singular_circle(traj, *window),
                        "H_drift": traj.drifts["H"],
                    }
                )
                invariants.append(
                    trajectory_invariants(traj, project=True).assign(theta0=theta)
                )
            results["returns"] = rows
            tables["returns"] = pd.DataFrame(rows)
            tables["invariants"] = pd.concat(invariants, ignore_index=True)
        return results, tables

    def _search(self, cfg: ScenarioConfig):
        key = (cfg.system, cfg.cost)
        allowed = PARAMETERS[key]
        box = cfg.search["box"]
        if not box:
            raise ConfigError("search.box must name at least one free parameter")
        for name in box:
            if name not in allowed:
                raise ConfigError(
                    f"search.box.{name} is not a parameter of {cfg.system} {cfg.cost} problems"
                )
        if cfg.system == "three-level":
            start = (1.0, 0.0, 0.0)
            target = (0.0, 0.0, 1.0)
        else:
            angle = cfg.initial.get("theta3_target", DEFAULT_THETA3_TARGET)
            start = (1.0, 0.0, 0.0, 0.0)
            target = (0.0, 0.0, float(np.cos(angle)), float(np.sin(angle)))
        start = tuple(cfg.initial.get("state", start))
        target = tuple(cfg.search.get("target", target))
        if len(start) != len(target):
            raise ConfigError("initial.state and search.target must have the same size")
        if cfg.cost == "energy":
            _horizon(cfg)

        problem = ShootingProblem(
            system=cfg.system,
            cost=cfg.cost,
            k=cfg.k,
            T=cfg.T,
            start=start,
            target=target,
            box=tuple((name, lo, hi) for name, (lo, hi) in box.items()),
            fixed=tuple(
                (name, cfg.initial[name])
                for name in allowed
                if name in cfg.initial and name not in box
            ),
            integrator=cfg.integrator,
        )
        result = search(
            problem,
            grid=cfg.search["grid"],
            max_evals=cfg.search["max_evals"],
            workers=cfg.search["workers"],
        )
        results = {
            "costates": result.costates,
            **_metrics_results(result.report),
            "drifts": result.report.drifts,
            "evaluations": result.evaluations,
            "improved": result.improved,
            "flagged": result.flagged,
        }
        columns = THREE_LEVEL_COLUMNS if cfg.system == "three-level" else TRIPOD_COLUMNS
        frame = (
            result.trajectory.to_frame(columns)
            if all(result.trajectory.has_column(c) for c in columns)
            else result.trajectory.to_frame()
        )
        return results, {"": frame}
