"""Unit tests for stirapoc.core.pmp_energy."""

import numpy as np
import pytest

from stirapoc.core.errors import (
    ConservationDriftError,
    DegenerateChartError,
    InvalidParameterError,
)
from stirapoc.core.models import ExtremalPoint, IntegratorConfig
from stirapoc.core.pmp_energy import (
    costate_for_hamiltonian,
    energy_hamiltonian_values,
    extremal_rhs,
    hamiltonian_energy,
    propagate_extremal,
    recover_controls,
    schrodinger_cross_check,
)
from stirapoc.core.solver import metrics
from tests.conftest import ENERGY_FIBER, HALF_PI, energy_point


# ── hamiltonian_energy ───────────────────────────────────────────────────────


class TestHamiltonianEnergy:
    def test_zero_on_singular_circle(self):
        e = ExtremalPoint(theta=HALF_PI, phi=0.3, p_rho=4.0, p_theta=0.0, p_phi=7.0)
        assert hamiltonian_energy(e, 1.0) == 0.0

    def test_known_value(self):
        e = ExtremalPoint(theta=np.pi / 4, phi=0.0, p_rho=2.0, p_theta=1.0, p_phi=1.0)
        # -k p_rho / 2 + k / 2 + 1 / 2 + 1 / 2
        assert hamiltonian_energy(e, 1.0) == pytest.approx(0.5)

    def test_pole_raises(self):
        e = ExtremalPoint(theta=0.0, phi=0.0, p_rho=1.0, p_theta=0.0, p_phi=1.0)
        with pytest.raises(DegenerateChartError):
            hamiltonian_energy(e, 1.0)


# ── extremal_rhs ─────────────────────────────────────────────────────────────


class TestExtremalRhs:
    def test_cyclic_momenta_are_constant(self):
        e = ExtremalPoint(theta=1.1, phi=0.2, p_rho=3.0, p_theta=-0.4, p_phi=2.0)
        d = extremal_rhs(e, 1.0)
        assert d[3] == 0.0
        assert d[5] == 0.0

    def test_singular_circle_is_fixed(self):
        e = ExtremalPoint(theta=HALF_PI, phi=0.0, p_rho=4.0, p_theta=0.0, p_phi=0.1)
        d = extremal_rhs(e, 1.0)
        assert d[1] == 0.0
        assert d[2] == 0.0
        assert d[4] == 0.0

    def test_hamiltonian_is_invariant_to_first_order(self):
        e = ExtremalPoint(theta=1.2, phi=0.0, p_rho=2.0, p_theta=0.3, p_phi=1.5)
        y = e.as_array()
        h = 1e-6
        moved = ExtremalPoint.from_array(y + h * extremal_rhs(e, 1.0))
        assert hamiltonian_energy(moved, 1.0) == pytest.approx(
            hamiltonian_energy(e, 1.0), abs=1e-10
        )

    @pytest.mark.parametrize("seed", range(100))
    def test_matches_hamiltonian_gradient(self, seed):
        gen = np.random.default_rng(seed)
        theta = gen.uniform(0.3, np.pi - 0.3)
        rest = gen.uniform(-2.0, 2.0, size=5)
        k = gen.uniform(0.5, 2.0)
        e = ExtremalPoint(
            rho=rest[0],
            theta=theta,
            phi=rest[1],
            p_rho=rest[2],
            p_theta=rest[3],
            p_phi=rest[4],
        )
        y = e.as_array()
        h = 1e-6
        grad = np.zeros(6)
        for i in range(6):
            step = np.zeros(6)
            step[i] = h
            up, down = y + step, y - step
            grad[i] = (
                energy_hamiltonian_values(up[1], up[4], up[5], up[3], k)
                - energy_hamiltonian_values(down[1], down[4], down[5], down[3], k)
            ) / (2 * h)
        expected = np.concatenate([grad[3:], -grad[:3]])
        np.testing.assert_allclose(extremal_rhs(e, k), expected, rtol=1e-6, atol=1e-6)


# ── recover_controls ─────────────────────────────────────────────────────────


class TestRecoverControls:
    def test_controls_at_phi_zero(self):
        e = ExtremalPoint(theta=np.pi / 4, phi=0.0, p_rho=1.0, p_theta=0.5, p_phi=2.0)
        v1, v2, u = recover_controls(e)
        assert v1 == 0.5
        assert v2 == pytest.approx(-2.0)
        assert u.u1 == pytest.approx(-0.5)
        assert u.u2 == pytest.approx(2.0)


# ── costate_for_hamiltonian ──────────────────────────────────────────────────


class TestCostateForHamiltonian:
    @pytest.mark.parametrize("branch", [1, -1])
    def test_reaches_requested_level(self, branch):
        p_theta = costate_for_hamiltonian(1.3, 0.7, 2.0, 1.0, 1.0, branch=branch)
        e = ExtremalPoint(theta=1.3, phi=0.0, p_rho=1.0, p_theta=p_theta, p_phi=2.0)
        assert hamiltonian_energy(e, 1.0) == pytest.approx(0.7)

    def test_equator_is_symmetric(self):
        plus = costate_for_hamiltonian(HALF_PI, 0.33, 15.0, 69.0, 1.0, branch=1)
        minus = costate_for_hamiltonian(HALF_PI, 0.33, 15.0, 69.0, 1.0, branch=-1)
        assert plus == pytest.approx(np.sqrt(0.66))
        assert minus == -plus

    def test_unreachable_level(self):
        with pytest.raises(InvalidParameterError):
            costate_for_hamiltonian(HALF_PI, -1.0, 1.0, 1.0, 1.0)


# ── propagate_extremal ───────────────────────────────────────────────────────


class TestPropagateExtremal:
    def test_singular_circle_start_stays_put(self, fast_cfg):
        e = ExtremalPoint(theta=HALF_PI, phi=0.0, p_rho=4.0, p_theta=0.0, p_phi=0.1)
        traj = propagate_extremal(e, 1.0, 10.0, fast_cfg)
        assert traj.summary["fidelity"] == 0.0
        assert traj.summary["C"] == 0.0
        np.testing.assert_array_equal(traj.column("theta"), HALF_PI)

    def test_conservation(self, precise_cfg):
        e = ExtremalPoint(theta=1.2, phi=0.0, p_rho=2.0, p_theta=0.3, p_phi=1.5)
        traj = propagate_extremal(e, 1.0, 10.0, precise_cfg)
        assert traj.drifts["H"] < 1e-8
        assert traj.drifts["p_phi"] == 0.0
        assert traj.drifts["p_rho"] == 0.0

    def test_norm_decays(self, fast_cfg):
        e = ExtremalPoint(theta=1.2, phi=0.0, p_rho=2.0, p_theta=0.3, p_phi=1.5)
        r = propagate_extremal(e, 1.0, 5.0, fast_cfg).column("r")
        assert np.all(np.diff(r) <= 1e-12)

    @pytest.mark.parametrize("branch", [1, -1])
    def test_reference_fiber(self, precise_cfg, branch):
        e = energy_point(branch=branch)
        traj = propagate_extremal(e, ENERGY_FIBER["k"], ENERGY_FIBER["T"], precise_cfg)
        report = metrics(traj)
        assert report.fidelity == pytest.approx(0.7802, abs=1e-3)
        assert report.C == pytest.approx(35.61, rel=5e-3)
        assert report.Freq == pytest.approx(1.486, rel=1e-2)
        assert report.Amp == pytest.approx(1.075, rel=1e-2)
        assert traj.drifts["H"] < 1e-8

    def test_both_signs_agree(self, precise_cfg):
        plus = propagate_extremal(energy_point(branch=1), 1.0, 30.0, precise_cfg)
        minus = propagate_extremal(energy_point(branch=-1), 1.0, 30.0, precise_cfg)
        assert plus.summary["fidelity"] == pytest.approx(minus.summary["fidelity"], abs=1e-6)
        assert plus.summary["C"] == pytest.approx(minus.summary["C"], rel=1e-6)

    def test_drift_abort(self):
        loose = IntegratorConfig(rtol=1e-2, atol=1e-2, sample_interval=0.1)
        e = energy_point()
        with pytest.raises(ConservationDriftError):
            propagate_extremal(e, 1.0, 30.0, loose)


# ── schrodinger_cross_check ──────────────────────────────────────────────────


class TestSchrodingerCrossCheck:
    def test_charts_agree(self, precise_cfg):
        e = ExtremalPoint(theta=1.3, phi=0.1, p_rho=1.0, p_theta=0.4, p_phi=1.2)
        assert schrodinger_cross_check(e, 1.0, 5.0, precise_cfg) < 1e-7

    @pytest.mark.parametrize("branch", [1, -1])
    def test_reference_fiber_charts_agree(self, precise_cfg, branch):
        e = energy_point(branch=branch)
        deviation = schrodinger_cross_check(
            e, ENERGY_FIBER["k"], ENERGY_FIBER["T"], precise_cfg
        )
        assert deviation < 1e-8
