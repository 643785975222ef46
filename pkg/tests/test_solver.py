"""Unit tests for stirapoc.core.solver."""

from types import SimpleNamespace
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from stirapoc.core.errors import (
    InsufficientSamplesError,
    IntegrationError,
    InvalidParameterError,
    ShootingError,
)
from stirapoc.core.models import IntegratorConfig, ShootingProblem
from stirapoc.core.solver import (
    metrics,
    oscillation_frequency,
    search,
    shoot,
    trend_correlations,
    trend_family,
    trend_hamiltonian,
    zero_crossings,
)
from tests.conftest import HALF_PI, make_control_trajectory

FAST = IntegratorConfig(rtol=1e-8, atol=1e-10, sample_interval=0.05)


def make_problem(**overrides) -> ShootingProblem:
    """Short energy transfer from |1> to |3> with p_theta and p_phi free."""
    values = dict(
        system="three-level",
        cost="energy",
        k=1.0,
        T=5.0,
        start=(1.0, 0.0, 0.0),
        target=(0.0, 0.0, 1.0),
        box=(("p_theta", 0.5, 1.5), ("p_phi", 0.5, 1.5)),
        fixed=(("p_rho", 4.0),),
        integrator=FAST,
    )
    values.update(overrides)
    return ShootingProblem(**values)


# ── zero crossings / frequency ───────────────────────────────────────────────


class TestOscillationFrequency:
    def test_sine(self):
        t = np.linspace(0.0, 1.0, 1001)
        assert oscillation_frequency(t, np.sin(2 * np.pi * 5 * t)) == pytest.approx(5.0)

    def test_crossing_on_sample_counted_once(self):
        t = np.linspace(0.0, 1.0, 11)
        u = t - 0.5
        np.testing.assert_allclose(zero_crossings(t, u), [0.5])

    def test_interpolated_crossing(self):
        t = np.array([0.0, 1.0, 2.0])
        u = np.array([1.0, -3.0, -1.0])
        np.testing.assert_allclose(zero_crossings(t, u), [0.25])

    def test_single_crossing_uses_duration(self):
        t = np.linspace(0.0, 2.0, 21)
        assert oscillation_frequency(t, t - 0.95) == pytest.approx(0.25)

    def test_no_crossing(self):
        t = np.linspace(0.0, 2.0, 21)
        assert oscillation_frequency(t, np.ones_like(t)) == 0.0


# ── metrics ──────────────────────────────────────────────────────────────────


class TestMetrics:
    def test_constant_control(self):
        t = np.linspace(0.0, 2.0, 201)
        traj = make_control_trajectory(t, u1=np.ones_like(t), u2=np.zeros_like(t))
        report = metrics(traj)
        assert report.C == pytest.approx(2.0)
        assert report.Amp == pytest.approx(1.0)
        assert report.Freq == 0.0
        assert report.fidelity is None
        assert report.distance is None

    def test_zero_controls_are_not_averaged(self):
        t = np.linspace(0.0, 1.0, 1001)
        traj = make_control_trajectory(
            t, u1=np.sin(2 * np.pi * 5 * t), u2=np.zeros_like(t)
        )
        report = metrics(traj)
        assert report.Freq == pytest.approx(5.0)
        assert report.Amp == pytest.approx(2 / np.pi, rel=1e-4)

    def test_default_target_is_level_3(self):
        t = np.linspace(0.0, 1.0, 11)
        traj = make_control_trajectory(
            t,
            u1=np.ones_like(t),
            x1=np.zeros_like(t),
            x2=np.full_like(t, 0.6),
            x3=np.full_like(t, 0.8),
        )
        report = metrics(traj)
        assert report.fidelity == pytest.approx(0.64)
        assert report.distance == pytest.approx(np.sqrt(0.4))

    def test_explicit_target(self):
        t = np.linspace(0.0, 1.0, 11)
        traj = make_control_trajectory(
            t,
            u1=np.ones_like(t),
            x1=np.ones_like(t),
            x2=np.zeros_like(t),
            x3=np.zeros_like(t),
        )
        assert metrics(traj, target=(1.0, 0.0, 0.0)).fidelity == pytest.approx(1.0)

    def test_too_few_samples(self):
        t = np.linspace(0.0, 1.0, 5)
        with pytest.raises(InsufficientSamplesError):
            metrics(make_control_trajectory(t, u1=np.ones_like(t)))

    def test_carries_drifts(self):
        t = np.linspace(0.0, 1.0, 11)
        traj = make_control_trajectory(t, u1=np.ones_like(t))
        traj.drifts = {"H": 1e-12}
        assert metrics(traj).drifts == {"H": 1e-12}


# ── shoot ────────────────────────────────────────────────────────────────────


class TestShoot:
    def test_singular_circle_stays_at_level_1(self):
        problem = make_problem(
            box=(("p_theta", -0.1, 0.1),), fixed=(("p_rho", 4.0), ("p_phi", 0.1))
        )
        report, traj = shoot(problem, {"p_theta": 0.0})
        assert report.fidelity == 0.0
        assert report.distance == pytest.approx(np.sqrt(2.0))
        assert report.C == 0.0
        np.testing.assert_allclose(traj.column("theta"), HALF_PI)

    def test_accepts_ordered_values(self):
        report_a, _ = shoot(make_problem(), [1.0, 1.0])
        report_b, _ = shoot(make_problem(), {"p_phi": 1.0, "p_theta": 1.0})
        assert report_a.distance == report_b.distance

    def test_outside_box_raises(self):
        with pytest.raises(InvalidParameterError):
            shoot(make_problem(), {"p_theta": 2.0, "p_phi": 1.0})

    def test_zero_duration(self):
        report, traj = shoot(make_problem(T=0.0), [1.0, 1.0])
        assert report.C == 0.0
        assert report.fidelity == 0.0
        assert report.distance == pytest.approx(np.sqrt(2.0))
        assert len(traj) == 1

    def test_energy_cost_needs_horizon(self):
        with pytest.raises(ShootingError):
            shoot(make_problem(T=None), [1.0, 1.0])

    @patch("stirapoc.core.solver.propagate_extremal")
    def test_wraps_flow_failures(self, mock_propagate):
        mock_propagate.side_effect = IntegrationError(1.5, "step size underflow")
        with pytest.raises(ShootingError) as exc:
            shoot(make_problem(), [1.0, 1.0])
        assert "p_theta" in str(exc.value)

    def test_stirap_branch(self):
        problem = make_problem(
            cost="stirap",
            T=None,
            box=(("p_phi", 0.05, 0.15),),
            fixed=(("theta", HALF_PI - 0.01), ("p_rho", 10.0)),
        )
        report, traj = shoot(problem, [0.1])
        assert traj.duration == pytest.approx(78.5, abs=0.5)
        assert report.fidelity > 0.95


# ── search ───────────────────────────────────────────────────────────────────


class TestSearch:
    def test_improves_on_box_centre(self):
        problem = make_problem()
        centre, _ = shoot(problem, [1.0, 1.0])
        result = search(problem, grid=3, max_evals=20)
        assert result.report.distance <= centre.distance
        assert result.evaluations >= 9
        assert set(result.costates) == {"p_theta", "p_phi"}

    def test_deterministic_across_workers(self):
        problem = make_problem()
        serial = search(problem, grid=3, max_evals=10, workers=1)
        parallel = search(problem, grid=3, max_evals=10, workers=2)
        assert serial.costates == parallel.costates
        assert serial.report.distance == parallel.report.distance

    def test_collapsed_box_skips_refinement(self):
        problem = make_problem(box=(("p_theta", 1.0, 1.0), ("p_phi", 1.0, 1.0)))
        result = search(problem, grid=5)
        assert result.evaluations == 1
        assert not result.improved
        assert result.costates == {"p_theta": 1.0, "p_phi": 1.0}

    def test_empty_box_raises(self):
        with pytest.raises(InvalidParameterError):
            search(make_problem(box=()))

    @patch("stirapoc.core.solver._distance", return_value=np.inf)
    def test_all_grid_points_failing(self, _):
        with pytest.raises(ShootingError):
            search(make_problem(), grid=2)

    @patch("stirapoc.core.solver.minimize")
    def test_exhausted_budget_is_flagged(self, mock_minimize):
        mock_minimize.return_value = SimpleNamespace(
            x=np.array([1.0, 1.0]), fun=np.inf, nfev=7
        )
        result = search(make_problem(), grid=2, max_evals=7)
        assert result.flagged
        assert not result.improved
        assert result.evaluations == 4 + 7


# ── trend ────────────────────────────────────────────────────────────────────


class TestTrend:
    def test_hamiltonian(self):
        H = trend_hamiltonian(15.0, 69.0, 1.0, 30.0)
        assert H == pytest.approx(86.0 * np.pi / 900.0)

    def test_hamiltonian_needs_stable_centre(self):
        with pytest.raises(InvalidParameterError):
            trend_hamiltonian(10.0, 69.0, 1.0, 30.0)

    def test_family_is_sorted_by_h(self):
        cfg = IntegratorConfig(sample_interval=0.05)
        family = trend_family((30.0, 20.0), p_rho=30.0, T=30.0, cfg=cfg)
        assert list(family["p_phi"]) == [20.0, 30.0]
        assert family["H"].is_monotonic_increasing
        assert family["fidelity"].between(0.0, 1.0).all()
        assert (family["C"] > 0).all()

    def test_default_family_rises_together(self):
        family = trend_family(cfg=IntegratorConfig(sample_interval=0.02))
        assert len(family) == 4
        assert trend_correlations(family) == pytest.approx(
            {"C": 1.0, "Freq": 1.0, "fidelity": 1.0}
        )

    def test_correlations(self):
        family = pd.DataFrame(
            {
                "H": [0.1, 0.2, 0.3, 0.4],
                "C": [10.0, 20.0, 25.0, 40.0],
                "Freq": [4.0, 3.0, 2.0, 1.0],
                "fidelity": [0.5, 0.7, 0.6, 0.9],
            }
        )
        correlations = trend_correlations(family)
        assert correlations["C"] == pytest.approx(1.0)
        assert correlations["Freq"] == pytest.approx(-1.0)
        assert correlations["fidelity"] == pytest.approx(0.8)
