"""
Shared pytest fixtures and helpers for stirapoc test suite.
"""

import textwrap
from pathlib import Path

import numpy as np
import pytest
import yaml

from stirapoc.core.models import ExtremalPoint, IntegratorConfig, Trajectory, TripodExtremal
from stirapoc.core.pmp_energy import costate_for_hamiltonian

HALF_PI = np.pi / 2


# ---------------------------------------------------------------------------
# Generic helpers
# ---------------------------------------------------------------------------


def make_scenario(tmp_path: Path, data: dict, filename: str = "scenario.yml") -> Path:
    """Write a scenario mapping as YAML."""
    p = tmp_path / filename
    p.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    return p


def make_scenario_text(tmp_path: Path, text: str, filename: str = "scenario.yml") -> Path:
    """Write a scenario verbatim, keeping its line layout."""
    p = tmp_path / filename
    p.write_text(textwrap.dedent(text).lstrip(), encoding="utf-8")
    return p


def make_control_trajectory(t, **controls) -> Trajectory:
    """Trajectory carrying only control columns (and optional x columns)."""
    t = np.asarray(t, dtype=float)
    return Trajectory(
        t=t,
        y=np.zeros((len(t), 0)),
        aux={name: np.asarray(values, dtype=float) for name, values in controls.items()},
    )


def energy_point(theta=HALF_PI, H=0.33, p_phi=15.0, p_rho=69.0, k=1.0, branch=1):
    """Energy extremal point on the fiber (H, p_phi) at phi = 0."""
    p_theta = costate_for_hamiltonian(theta, H, p_phi, p_rho, k, branch=branch)
    return ExtremalPoint(theta=theta, phi=0.0, p_rho=p_rho, p_theta=p_theta, p_phi=p_phi)


# ---------------------------------------------------------------------------
# Shared data
# ---------------------------------------------------------------------------

# fiber of the reference energy extremal from |1> over T = 30
ENERGY_FIBER = {"H": 0.33, "p_phi": 15.0, "p_rho": 69.0, "k": 1.0, "T": 30.0}

# three-level STIRAP branch
STIRAP_BRANCH = {"H": 1.0e-3, "p_phi": 0.1, "p_rho": 10.0, "k": 1.0}

# tripod STIRAP branch to the equal |3>, |4> superposition
TRIPOD_BRANCH = {
    "theta2": HALF_PI - 0.02,
    "p_rho": 100.0,
    "p_theta1": 16.85,
    "p_theta3": -1.0,
    "w1": 1.0,
    "k": 1.0,
}

# generic tripod point away from every chart degeneracy
TRIPOD_POINT = TripodExtremal(
    theta1=1.0,
    theta2=1.4,
    theta3=0.3,
    p_rho=0.5,
    p_theta1=1.0,
    p_theta2=0.2,
    p_theta3=1.0,
)


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------


@pytest.fixture()
def precise_cfg():
    """Default integrator settings."""
    return IntegratorConfig()


@pytest.fixture()
def fast_cfg():
    """Looser tolerances for structural tests."""
    return IntegratorConfig(rtol=1e-8, atol=1e-10, sample_interval=0.05)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
