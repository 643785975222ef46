import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
import yaml

from stirapoc.core.models import IntegratorConfig
from stirapoc.core.errors import ConfigError, InvalidOutputFormat
from stirapoc.core.defaults import (
    DEFAULT_BOUNDARY_POINTS,
    DEFAULT_BOUNDARY_THETA,
    DEFAULT_FLOAT_FORMAT,
    DEFAULT_IMAGE_BOX,
    DEFAULT_OUTPUT_FORMAT,
    DEFAULT_PI1_RANGE,
    DEFAULT_PI2_RANGE,
    DEFAULT_SAMPLE_BUDGET,
    DEFAULT_SEARCH_GRID,
    DEFAULT_SEARCH_MAX_EVALS,
    DEFAULT_SECTION_GRID,
    DEFAULT_SINGULAR_LINE_POINTS,
    DEFAULT_WORKERS,
    MAX_TOLERANCE,
)

logger = logging.getLogger(__name__)

COMMANDS = (
    "simulate",
    "extremal",
    "stirap",
    "tripod",
    "momentum-map",
    "reduce",
    "search",
)
SYSTEMS = ("three-level", "tripod")
COSTS = ("energy", "stirap")
OUTPUT_FORMATS = {"tsv": "\t", "csv": ","}

SCHEMA = {
    "command": ("choice", COMMANDS),
    "system": ("choice", SYSTEMS),
    "cost": ("choice", COSTS),
    "k": "number",
    "T": "horizon",
    "output": "string",
    "seedless": "bool",
    "initial": {
        "state": "vector",
        "rho": "number",
        "theta": "number",
        "phi": "number",
        "H": "number",
        "sign": "sign",
        "p_rho": "number",
        "p_theta": "number",
        "p_phi": "number",
        "theta1": "auto_number",
        "theta2": "number",
        "theta3": "number",
        "p_theta1": "number",
        "p_theta2": "number",
        "p_theta3": "number",
        "w1": "number",
        "theta3_target": "number",
    },
    "search": {
        "box": "box",
        "grid": "count",
        "max_evals": "count",
        "workers": "count",
        "target": "vector",
    },
    "integrator": {
        "rtol": "tolerance",
        "atol": "tolerance",
        "max_step": "positive",
        "sample_interval": "positive",
    },
    "momentum_map": {
        "p_rho": "number",
        "sample_budget": "count",
        "box": "box",
        "boundary_points": "count",
        "boundary_theta": "range",
        "singular_line_points": "count",
        "workers": "count",
    },
    "reduce": {
        "hamiltonian": "number",
        "p_phi": "number",
        "p_rho": "number",
        "grid": "count",
        "pi1_range": "range",
        "pi2_range": "range",
        "bitorus_thetas": "vector",
        "bitorus_T": "number",
        "bitorus_window": "range",
    },
    "controls": {"u1": "pulse", "u2": "pulse", "u3": "pulse"},
}
SUMMARY_KEYS = {"command", "status", "results", "config"}


def _line_map(node, path=()) -> dict:
    """Maps every key path of a composed YAML mapping to its 1-based line."""
    lines = {path: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            child = path + (key_node.value,)
            lines.update(_line_map(value_node, child))
            lines[child] = key_node.start_mark.line + 1
    return lines


def _as_number(value, where, line) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{where} must be a number, got {value!r}", line)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a number, got {value!r}", line)


def _as_pair(value, where, line) -> list:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{where} must be a [low, high] pair, got {value!r}", line)
    lo, hi = (_as_number(v, where, line) for v in value)
    if lo > hi:
        raise ConfigError(f"{where} has low {lo} above high {hi}", line)
    return [lo, hi]


def _as_pulse(value, where, line):
    if isinstance(value, dict):
        missing = {"amplitude", "center", "width"} - set(value)
        extra = set(value) - {"amplitude", "center", "width"}
        if missing or extra:
            raise ConfigError(
                f"{where} Gaussian pulse needs exactly amplitude, center and width",
                line,
            )
        pulse = {name: _as_number(value[name], where, line) for name in sorted(value)}
        if pulse["width"] <= 0:
            raise ConfigError(f"{where}.width must be positive", line)
        return pulse
    if isinstance(value, list):
        steps = []
        for step in value:
            if not isinstance(step, list) or len(step) != 2:
                raise ConfigError(f"{where} steps must be [t, value] pairs", line)
            steps.append([_as_number(v, where, line) for v in step])
        times = [t for t, _ in steps]
        if not steps or times != sorted(times):
            raise ConfigError(f"{where} steps must be non-empty and sorted by time", line)
        return steps
    return _as_number(value, where, line)


def _check_value(kind, value, where, line):
    if isinstance(kind, tuple):
        _, choices = kind
        if value not in choices:
            raise ConfigError(f"{where} must be one of {list(choices)}, got {value!r}", line)
        return value
    if kind == "number":
        return _as_number(value, where, line)
    if kind == "count":
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ConfigError(f"{where} must be a positive integer, got {value!r}", line)
        return value
    if kind == "string":
        if not isinstance(value, str) or not value:
            raise ConfigError(f"{where} must be a non-empty string", line)
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false", line)
        return value
    if kind == "tolerance":
        tol = _as_number(value, where, line)
        if not 0 < tol <= MAX_TOLERANCE:
            raise ConfigError(f"{where} must be in (0, {MAX_TOLERANCE:g}], got {tol!r}", line)
        return tol
    if kind == "positive":
        number = _as_number(value, where, line)
        if not number > 0:
            raise ConfigError(f"{where} must be positive, got {number!r}", line)
        return number
    if kind == "horizon":
        if value == "computed":
            return value
        horizon = _as_number(value, where, line)
        if horizon < 0:
            raise ConfigError(f"{where} must be non-negative, got {horizon}", line)
        return horizon
    if kind == "auto_number":
        return value if value == "auto" else _as_number(value, where, line)
    if kind == "sign":
        if value in ("best", 1, -1):
            return value
        raise ConfigError(f"{where} must be 1, -1 or best, got {value!r}", line)
    if kind == "vector":
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{where} must be a non-empty list of numbers", line)
        return [_as_number(v, where, line) for v in value]
    if kind == "range":
        return _as_pair(value, where, line)
    if kind == "box":
        if not isinstance(value, dict):
            raise ConfigError(f"{where} must map parameter names to [low, high]", line)
        return {name: _as_pair(pair, f"{where}.{name}", line) for name, pair in value.items()}
    if kind == "pulse":
        return _as_pulse(value, where, line)
    raise ValueError(f"Unknown schema kind {kind!r}")


def validate(data: dict, lines: dict, prefix: tuple = ()) -> dict:
    """
    Checks a parsed scenario against SCHEMA.

    Raises:
        ConfigError: On an unknown key or a malformed value, with its line.
    """
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping", lines.get(prefix, 1))
    checked = _validate_mapping(data, SCHEMA, lines, prefix, ())
    initial = checked.get("initial", {})
    if initial.get("sign") == "best" and "p_theta" in initial:
        raise ConfigError(
            "initial.sign best chooses the root of initial.H; drop initial.p_theta",
            lines.get(prefix + ("initial", "sign")),
        )
    return checked


def _validate_mapping(data, schema, lines, prefix, path) -> dict:
    checked = {}
    for key, value in data.items():
        line = lines.get(prefix + path + (key,))
        where = ".".join(path + (str(key),))
        if key not in schema:
            raise ConfigError(f"unknown key {where!r}", line)
        kind = schema[key]
        if isinstance(kind, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a mapping", line)
            checked[key] = _validate_mapping(value, kind, lines, prefix, path + (key,))
        else:
            checked[key] = _check_value(kind, value, where, line)
    return checked


def _section(data: dict, name: str, defaults: dict) -> dict:
    return {**defaults, **data.get(name, {})}


@dataclass
class ScenarioConfig:
    """
    Validated scenario of one subcommand with every default filled in.

    Attributes:
        command (str): Subcommand the scenario belongs to.
        system (str): "three-level" or "tripod".
        cost (str): "energy" or "stirap".
        k (float): Relaxation rate of level 2.
        T (Optional[float]): Horizon; None means computed by the branch.
        initial (dict): Initial state and costate values.
        search (dict): Search box and budgets.
        integrator (IntegratorConfig): Integrator settings.
        momentum_map (dict): Sampling settings of the momentum map.
        reduce (dict): Section and bitorus settings.
        controls (dict): Pulses of the raw simulation.
        output (str): Stem of the output files.
        seedless (bool): Recorded only; every algorithm is deterministic.
    """

    command: str
    system: str = "three-level"
    cost: str = "energy"
    k: float = 1.0
    T: Optional[float] = None
    initial: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    momentum_map: dict = field(default_factory=dict)
    reduce: dict = field(default_factory=dict)
    controls: dict = field(default_factory=dict)
    output: str = ""
    seedless: bool = False

    @classmethod
    def from_mapping(cls, data: dict, command: str) -> "ScenarioConfig":
        horizon = data.get("T", "computed")
        return cls(
            command=command,
            system=data.get("system", "three-level"),
            cost=data.get("cost", "energy"),
            k=data.get("k", 1.0),
            T=None if horizon == "computed" else horizon,
            initial=dict(data.get("initial", {})),
            search=_section(
                data,
                "search",
                {
                    "box": {},
                    "grid": DEFAULT_SEARCH_GRID,
                    "max_evals": DEFAULT_SEARCH_MAX_EVALS,
                    "workers": DEFAULT_WORKERS,
                },
            ),
            integrator=IntegratorConfig(**data.get("integrator", {})),
            momentum_map=_section(
                data,
                "momentum_map",
                {
                    "p_rho": 1.0,
                    "sample_budget": DEFAULT_SAMPLE_BUDGET,
                    "box": {name: list(pair) for name, pair in DEFAULT_IMAGE_BOX.items()},
                    "boundary_points": DEFAULT_BOUNDARY_POINTS,
                    "boundary_theta": list(DEFAULT_BOUNDARY_THETA),
                    "singular_line_points": DEFAULT_SINGULAR_LINE_POINTS,
                    "workers": DEFAULT_WORKERS,
                },
            ),
            reduce=_section(
                data,
                "reduce",
                {
                    "grid": DEFAULT_SECTION_GRID,
                    "pi1_range": list(DEFAULT_PI1_RANGE),
                    "pi2_range": list(DEFAULT_PI2_RANGE),
                },
            ),
            controls=dict(data.get("controls", {})),
            output=data.get("output", command),
            seedless=data.get("seedless", False),
        )

    def to_dict(self) -> dict:
        """Resolved configuration as echoed in the summary."""
        return {
            "command": self.command,
            "system": self.system,
            "cost": self.cost,
            "k": self.k,
            "T": "computed" if self.T is None else self.T,
            "initial": self.initial,
            "search": self.search,
            "integrator": {
                "rtol": self.integrator.rtol,
                "atol": self.integrator.atol,
                "max_step": self.integrator.max_step,
                "sample_interval": self.integrator.sample_interval,
            },
            "momentum_map": self.momentum_map,
            "reduce": self.reduce,
            "controls": self.controls,
            "output": self.output,
            "seedless": self.seedless,
        }


def load_scenario(path, command: str) -> ScenarioConfig:
    """
    Reads and validates a scenario file. A summary written by a previous run
    is accepted too; its echoed configuration is used.

    Args:
        path: YAML file.
        command: Subcommand being run.

    Returns:
        ScenarioConfig: The resolved scenario.

    Raises:
        ConfigError: If the file is empty, malformed or does not match the schema.
    """
    path = Path(str(path))
    if not path.is_file():
        raise ConfigError(f"scenario file {path} not found")
    text = path.read_text()
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {err}", mark.line + 1 if mark else None)
    if node is None or data is None:
        raise ConfigError("empty configuration", 1)
    lines = _line_map(node)

    prefix = ()
    if isinstance(data, dict) and "config" in data and set(data) <= SUMMARY_KEYS:
        logger.debug("Reading the configuration echoed in summary %s", path)
        data, prefix = data["config"], ("config",)

    checked = validate(data, lines, prefix)
    declared = checked.get("command", command)
    if declared != command:
        raise ConfigError(
            f"scenario is for command {declared!r}, not {command!r}",
            lines.get(prefix + ("command",)),
        )
    return ScenarioConfig.from_mapping(checked, command)


def get_output_format(stem: str) -> str:
    """
    Output format from the extension of the --out stem; tsv when there is none.

    Raises:
        InvalidOutputFormat: On an extension other than .tsv or .csv.
    """
    suffix = Path(stem).suffix
    if not suffix:
        return DEFAULT_OUTPUT_FORMAT
    file_extension = suffix[1:]
    if file_extension not in OUTPUT_FORMATS:
        raise InvalidOutputFormat(file_extension)
    return file_extension


def write_table(frame: pd.DataFrame, path, output_format: str = DEFAULT_OUTPUT_FORMAT) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path,
        sep=OUTPUT_FORMATS[output_format],
        index=False,
        float_format=DEFAULT_FLOAT_FORMAT,
    )
    return str(path)


def to_builtin(value: Any) -> Any:
    """Converts numpy values, tuples, enums and paths to plain YAML types."""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return to_builtin(value.value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_summary(path, command: str, status: int, results: dict, config: dict) -> str:
    """Writes <stem>.summary.yml with command, status, results and config."""
    summary = {
        "command": command,
        "status": int(status),
        "results": to_builtin(results),
        "config": to_builtin(config),
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(summary, f, sort_keys=False)
    return str(path)