import typer, logging, colorlog
from typing import Optional
from stirapoc.core.run_scenario import RunScenario
from stirapoc.core.errors import ConfigError, InvalidOutputFormat, StirapOCError
from stirapoc.core.models import ExitCode
from stirapoc.core.defaults import DEFAULT_VERBOSE
from stirapoc import (
    SIMULATE_CONFIG_PATH,
    EXTREMAL_CONFIG_PATH,
    STIRAP_CONFIG_PATH,
    TRIPOD_CONFIG_PATH,
    MOMENTUM_MAP_CONFIG_PATH,
    REDUCE_CONFIG_PATH,
    SEARCH_CONFIG_PATH,
)

# core config
run_scenario = RunScenario()

# log config
handler = colorlog.StreamHandler()
handler.setLevel(logging.DEBUG)
handler.setFormatter(
    colorlog.ColoredFormatter(
        "%(log_color)s%(levelname)s:%(name)s:%(message)s",
        log_colors={
            "INFO": "green",
            "WARNING": "yellow",
            "ERROR": "red",
        },
    )
)
logger = logging.getLogger("stirapoc")
logger.setLevel(logging.INFO)
logger.addHandler(handler)
logger.propagate = False


def log_results(results: dict, prefix: str = ""):
    for key, value in results.items():
        if isinstance(value, dict):
            log_results(value, f"{prefix}{key}.")
        elif isinstance(value, list):
            logger.debug("%s%s: %d entries", prefix, key, len(value))
        else:
            logger.info("%s%s = %s", prefix, key, value)


def _run(command: str, config: str, out, tol, seedless: bool, verbose: bool):
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    try:
        result = run_scenario.run(
            command, config_file=config, out=out, tol=tol, seedless=seedless
        )
    except (ConfigError, InvalidOutputFormat) as e:
        logger.error(f"Invalid configuration {config}: {e}")
        raise typer.Exit(code=int(ExitCode.CONFIG_ERROR))
    except StirapOCError as e:
        logger.error(f"{command} failed: {e}")
        raise typer.Exit(code=int(ExitCode.NUMERICAL_FAILURE))
    log_results(result.results)
    for path in result.table_paths:
        logger.info(f"Table written to {path}")
    logger.info(f"{command} finished with success.")


# cli config
app = typer.Typer(no_args_is_help=True)
if __name__ == "__main__":
    app()

OUT_OPTION = typer.Option(
    None,
    "--out",
    help="Output file stem. A .tsv or .csv extension selects the table format.",
)
TOL_OPTION = typer.Option(
    None, "--tol", help="Integrator tolerance (rtol = tol, atol = tol/100)."
)
SEEDLESS_OPTION = typer.Option(
    False, "--seedless", help="Record that no random seed is involved."
)
VERBOSE_OPTION = typer.Option(
    DEFAULT_VERBOSE, "--verbose", "-v", help="Show debug logs."
)


def _config_option(default) -> str:
    return typer.Option(str(default), "--config", help="Scenario YAML file.")


@app.command()
def simulate(
    config: str = _config_option(SIMULATE_CONFIG_PATH),
    out: Optional[str] = OUT_OPTION,
    tol: Optional[float] = TOL_OPTION,
    seedless: bool = SEEDLESS_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Propagate the raw dynamics under prescribed pulses."""
    _run("simulate", config, out, tol, seedless, verbose)


@app.command()
def extremal(
    config: str = _config_option(EXTREMAL_CONFIG_PATH),
    out: Optional[str] = OUT_OPTION,
    tol: Optional[float] = TOL_OPTION,
    seedless: bool = SEEDLESS_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Propagate an energy-cost extremal and report its metrics."""
    _run("extremal", config, out, tol, seedless, verbose)


@app.command()
def stirap(
    config: str = _config_option(STIRAP_CONFIG_PATH),
    out: Optional[str] = OUT_OPTION,
    tol: Optional[float] = TOL_OPTION,
    seedless: bool = SEEDLESS_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Propagate the three-level STIRAP branch."""
    _run("stirap", config, out, tol, seedless, verbose)


@app.command()
def tripod(
    config: str = _config_option(TRIPOD_CONFIG_PATH),
    out: Optional[str] = OUT_OPTION,
    tol: Optional[float] = TOL_OPTION,
    seedless: bool = SEEDLESS_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Propagate the tripod STIRAP branch to a superposition of |3> and |4>."""
    _run("tripod", config, out, tol, seedless, verbose)


@app.command("momentum-map")
def momentum_map(
    config: str = _config_option(MOMENTUM_MAP_CONFIG_PATH),
    out: Optional[str] = OUT_OPTION,
    tol: Optional[float] = TOL_OPTION,
    seedless: bool = SEEDLESS_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Sample the energy-momentum map, its boundary and the STIRAP line."""
    _run("momentum-map", config, out, tol, seedless, verbose)


@app.command()
def reduce(
    config: str = _config_option(REDUCE_CONFIG_PATH),
    out: Optional[str] = OUT_OPTION,
    tol: Optional[float] = TOL_OPTION,
    seedless: bool = SEEDLESS_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Compute a reduced section and the returns to the singular circle."""
    _run("reduce", config, out, tol, seedless, verbose)


@app.command()
def search(
    config: str = _config_option(SEARCH_CONFIG_PATH),
    out: Optional[str] = OUT_OPTION,
    tol: Optional[float] = TOL_OPTION,
    seedless: bool = SEEDLESS_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Search initial costates that steer the start state to the target."""
    _run("search", config, out, tol, seedless, verbose)
