"""Unit tests for stirapoc.core.stirap_cost."""

import numpy as np
import pytest

from stirapoc.core.errors import InvalidParameterError, SingularParameterError
from stirapoc.core.models import StirapExtremal
from stirapoc.core.stirap_cost import (
    adiabaticity_margin,
    margin_status,
    propagate_stirap,
    stirap_duration,
    stirap_hamiltonian,
    stirap_hamiltonian_value,
    stirap_rhs,
    stirap_theta_for_hamiltonian,
    stirap_v2,
)
from tests.conftest import HALF_PI, STIRAP_BRANCH


def _branch_theta():
    return stirap_theta_for_hamiltonian(
        STIRAP_BRANCH["H"], STIRAP_BRANCH["p_rho"], STIRAP_BRANCH["k"]
    )


# ── stirap_v2 ────────────────────────────────────────────────────────────────


class TestStirapV2:
    def test_freezes_p_theta(self):
        v2 = stirap_v2(1.4, 10.0, 0.1, 1.0)
        s = StirapExtremal(theta=1.4, phi=0.0, p_rho=10.0, p_theta=0.0, p_phi=0.1, v2=v2)
        d = stirap_rhs(s, 1.0)
        assert d[1] == 0.0
        assert d[4] == 0.0

    def test_zero_p_phi(self):
        with pytest.raises(SingularParameterError):
            stirap_v2(1.4, 10.0, 0.0, 1.0)

    def test_vanishes_on_equator(self):
        assert stirap_v2(HALF_PI, 10.0, 0.1, 1.0) == 0.0


# ── stirap_hamiltonian ───────────────────────────────────────────────────────


class TestStirapHamiltonian:
    def test_branch_value(self):
        theta = 1.3
        v2 = stirap_v2(theta, 10.0, 0.1, 1.0)
        s = StirapExtremal(theta=theta, phi=0.0, p_rho=10.0, p_theta=0.0, p_phi=0.1, v2=v2)
        assert stirap_hamiltonian(s, 1.0) == pytest.approx(
            stirap_hamiltonian_value(theta, 10.0, 1.0)
        )

    def test_theta_for_hamiltonian(self):
        theta = _branch_theta()
        assert theta == pytest.approx(HALF_PI - 0.0100, abs=2e-4)
        assert stirap_hamiltonian_value(theta, 10.0, 1.0) == pytest.approx(1e-3, rel=1e-9)

    def test_theta_for_zero_level_is_equator(self):
        assert stirap_theta_for_hamiltonian(0.0, 10.0, 1.0) == HALF_PI

    def test_level_out_of_reach(self):
        with pytest.raises(InvalidParameterError):
            stirap_theta_for_hamiltonian(10.0, 10.0, 1.0)


# ── stirap_duration / adiabaticity_margin ────────────────────────────────────


class TestDurationAndMargin:
    def test_duration_of_branch(self):
        theta = _branch_theta()
        v2 = stirap_v2(theta, 10.0, 0.1, 1.0)
        assert stirap_duration(theta, v2) == pytest.approx(78.5, abs=0.5)

    def test_equator_has_no_finite_duration(self):
        with pytest.raises(SingularParameterError):
            stirap_duration(HALF_PI, stirap_v2(HALF_PI, 10.0, 0.1, 1.0))

    def test_margin(self):
        margin = adiabaticity_margin(0.1, 10.0, HALF_PI)
        assert margin == pytest.approx(np.pi / 400)
        assert margin_status(margin) == "ok"

    @pytest.mark.parametrize(
        "margin, status", [(0.001, "ok"), (0.05, "warning"), (0.5, "violated")]
    )
    def test_margin_status(self, margin, status):
        assert margin_status(margin) == status

    def test_margin_needs_p_rho(self):
        with pytest.raises(SingularParameterError):
            adiabaticity_margin(0.1, 0.0, 1.0)


# ── propagate_stirap ─────────────────────────────────────────────────────────


class TestPropagateStirap:
    def test_transfer(self, precise_cfg):
        traj = propagate_stirap(_branch_theta(), 0.0, 10.0, 0.1, 1.0, precise_cfg)
        summary = traj.summary
        assert summary["T"] == pytest.approx(78.5, abs=0.5)
        assert summary["fidelity"] == pytest.approx(0.984, abs=0.005)
        assert summary["transfer_ratio"] > 0.99
        assert summary["max_population_2"] < 1e-3
        assert summary["counterintuitive"]
        assert summary["margin_status"] == "ok"

    def test_branch_is_rigid(self, precise_cfg):
        traj = propagate_stirap(_branch_theta(), 0.0, 10.0, 0.1, 1.0, precise_cfg)
        assert traj.summary["max_abs_p_theta"] < 1e-12
        assert traj.summary["max_theta_deviation"] < 1e-12
        assert traj.summary["H_deviation"] < 1e-12

    def test_small_p_phi_reaches_high_fidelity(self, precise_cfg):
        traj = propagate_stirap(_branch_theta(), 0.0, 10.0, 0.05, 1.0, precise_cfg)
        assert traj.summary["fidelity"] > 0.99

    def test_ratio_residual_shrinks_with_offset(self, fast_cfg):
        residuals = [
            propagate_stirap(HALF_PI - eps, 0.0, 10.0, 0.1, 1.0, fast_cfg).summary[
                "ratio_residual"
            ]
            for eps in (0.1, 0.05, 0.025)
        ]
        assert residuals[0] > residuals[1] > residuals[2] > 0.0
        for coarse, fine in zip(residuals, residuals[1:]):
            assert fine / coarse < 0.6

    def test_user_horizon(self, fast_cfg):
        traj = propagate_stirap(HALF_PI - 0.04, 0.0, 10.0, 0.1, 1.0, fast_cfg, T=3.0)
        assert traj.duration == pytest.approx(3.0)
        assert traj.summary["T_discrepancy"] == pytest.approx(
            3.0 - traj.summary["computed_T"]
        )

    def test_equator_start(self):
        with pytest.raises(SingularParameterError):
            propagate_stirap(HALF_PI, 0.0, 10.0, 0.1, 1.0)
