"""Envelope extraction, rate fitting, closeness, contraction probe."""

import math

import numpy as np
import pytest

from liees import analysis, costs, sim
from liees.analysis import Envelope, closeness, contraction_check, envelope, fit_rate
from liees.errors import InsufficientSignalError, InvalidParameterError
from liees.sim import Trajectory, build_two_input


def synthetic_traj(times, states, epsilon):
    states = np.asarray(states, dtype=float)
    return Trajectory(times=np.asarray(times, dtype=float), states=states,
                      cost_values=states**2, epsilon=epsilon, meta={})


class TestEnvelope:
    def test_constant_at_minimizer(self):
        t = np.arange(0, 30) * 0.01
        traj = synthetic_traj(t, np.full_like(t, 0.4), 0.01)
        env = envelope(traj, 0.4)
        assert np.all(env.distances == 0.0)

    def test_lbs_exponential_samples(self):
        cost = costs.make_power_cost(0.5, 0.0, 2)
        traj = sim.integrate_lbs(cost, [(1, 1.0)], 1.0, 1.0, 1000,
                                 record_epsilon=0.01)
        env = envelope(traj, 0.0)
        ks = np.arange(len(env.distances))
        assert np.max(np.abs(env.distances - np.exp(-0.01 * ks))) <= 1e-6

    def test_too_short_rejected(self):
        t = np.arange(0, 10) * 0.01
        traj = synthetic_traj(t, np.ones_like(t), 0.01)
        with pytest.raises(InvalidParameterError):
            envelope(traj, 0.0)


class TestFitRate:
    def test_exact_exponential_recovery(self):
        t = np.arange(1, 501) * 0.02
        est = fit_rate(Envelope(t, np.exp(-2.0 * t)))
        assert est.rate_class == "exponential"
        assert est.lam == pytest.approx(2.0, abs=0.02 * 2.0)
        assert est.r_squared > 0.999
        assert not est.ambiguous

    def test_exact_polynomial_recovery(self):
        # (1 + 2t)^(-1/2) fitted in its scaling regime
        t = np.arange(1, 20001) * 0.05
        est = fit_rate(Envelope(t, (1 + 2.0 * t) ** -0.5))
        assert est.rate_class == "polynomial"
        assert est.power_exponent == pytest.approx(-0.5, abs=0.05)
        assert est.r_squared > 0.99

    def test_polynomial_recovery_within_ten_percent(self):
        for p in (-0.5, -1.0):
            t = np.arange(1, 20001) * 0.05
            est = fit_rate(Envelope(t, (1 + 2.0 * t) ** p))
            assert est.rate_class == "polynomial"
            assert abs(est.power_exponent - p) <= 0.1 * abs(p)

    def test_constant_is_stalled(self):
        t = np.arange(1, 200) * 0.01
        est = fit_rate(Envelope(t, np.full_like(t, 0.8)))
        assert est.rate_class == "stalled"

    def test_floor_recovery(self):
        # exponential decay onto a visible floor
        t = np.arange(1, 2001) * 0.01
        d = np.exp(-1.5 * t) + 0.003
        est = fit_rate(Envelope(t, d))
        assert est.rate_class == "exponential"
        assert est.rho == pytest.approx(0.003, rel=0.05)
        assert est.lam == pytest.approx(1.5, rel=0.05)

    def test_insufficient_signal(self):
        t = np.arange(1, 30) * 0.01
        with pytest.raises(InsufficientSignalError):
            fit_rate(Envelope(t[:10], np.exp(-t[:10])))


class TestCloseness:
    def test_identical_is_zero(self):
        t = np.arange(0, 50) * 0.01
        a = synthetic_traj(t, np.exp(-t), 0.01)
        assert closeness(a, a) == 0.0

    def test_symmetry(self):
        t = np.arange(0, 50) * 0.01
        a = synthetic_traj(t, np.exp(-t), 0.01)
        b = synthetic_traj(t, np.exp(-1.2 * t), 0.01)
        assert closeness(a, b) == closeness(b, a)

    def test_span_mismatch(self):
        a = synthetic_traj(np.arange(0, 50) * 0.01, np.zeros(50), 0.01)
        b = synthetic_traj(np.arange(0, 30) * 0.01, np.zeros(30), 0.01)
        with pytest.raises(InvalidParameterError):
            closeness(a, b)

    def test_constant_versus_moving(self):
        t = np.arange(0, 101) * 0.01
        a = synthetic_traj(t, np.full_like(t, 1.0), 0.01)
        b = synthetic_traj(t, 1.0 - t, 0.01)
        assert closeness(a, b) == pytest.approx(1.0)


class TestTimeToBand:
    def test_basic(self):
        t = np.arange(0, 200) * 0.01
        traj = synthetic_traj(t, np.exp(-3.0 * t), 0.01)
        ttb = analysis.time_to_band(traj, 0.0, band=0.05)
        assert ttb == pytest.approx(math.log(20) / 3.0, abs=0.01)

    def test_never_reached(self):
        t = np.arange(0, 50) * 0.01
        traj = synthetic_traj(t, np.ones_like(t), 0.01)
        assert analysis.time_to_band(traj, 0.0, band=0.05) == math.inf


class TestContraction:
    def test_fourth_order_system_contracts(self):
        quartic = costs.make_power_cost(1.0, 1.0, 4)
        system = build_two_input(quartic, 4, 1, 1e-3, 1.0)
        rep = contraction_check(system, [0.0, 0.25, 0.5, 0.75], 1.0,
                                steps_per_period=2048)
        assert rep.contracts
        assert rep.gamma > 1.0
        assert all(p["holds"] for p in rep.points)

    def test_third_order_on_quadratic_stalls(self):
        quad = costs.make_power_cost(1.0, 0.0, 2)
        system = build_two_input(quad, 4, 1, 1e-3, 1.0)
        rep = contraction_check(system, [0.3, 0.5, 0.7, 0.9], 0.0,
                                steps_per_period=2048)
        assert abs(rep.gamma) < 1.0   # no meaningful contraction rate

    def test_zero_dither_trivial(self):
        quad = costs.make_power_cost(1.0, 0.0, 2)
        from liees.dither import DitherSpec

        def zchan(shape):
            return (shape, DitherSpec("custom-harmonic", 1, 1e-3, amplitude=0.0,
                                      harmonic=1, waveform="cos", bracket_length=2))

        system = sim.ESSystem(cost=quad, channels=(zchan(sim.linear_shape(1.0)),
                                                   zchan(sim.const_shape(1.0))))
        rep = contraction_check(system, [0.2, 0.5, 0.8], 0.0, steps_per_period=64)
        assert rep.gamma == pytest.approx(0.0, abs=1e-9)
        assert rep.sigma == pytest.approx(0.0, abs=1e-9)
        assert not rep.contracts
        assert all(p["holds"] for p in rep.points)

    def test_rescaling_preserves_sign(self):
        # J -> 2J with the gain halved gives identical fields, identical gamma
        a = build_two_input(costs.make_power_cost(1.0, 1.0, 4), 4, 1, 1e-3, 1.0)
        b = build_two_input(costs.make_power_cost(2.0, 1.0, 4), 4, 1, 1e-3, 0.5)
        ra = contraction_check(a, [0.25, 0.5, 0.75], 1.0, steps_per_period=1024)
        rb = contraction_check(b, [0.25, 0.5, 0.75], 1.0, steps_per_period=1024)
        assert math.copysign(1.0, ra.gamma) == math.copysign(1.0, rb.gamma)
        assert ra.gamma == pytest.approx(rb.gamma, rel=1e-9)
