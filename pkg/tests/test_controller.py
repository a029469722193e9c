import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from gapwatch.controller import (ControllerParams, DelayLine, ErrorState, VehicleState,
                                 build_state_matrices, check_stability, command_accel,
                                 derive_error_state, desired_spacing, is_stable, step_glvd)
from gapwatch.errors import CollisionDetected, InvariantViolation

P = ControllerParams()


def characteristic_coeffs(params):
    """Monic cubic of A + B k^T, expanded by hand: s^3 - c3 s^2 + (c2 + tau c1) s + c1."""
    k1, k2, k3 = params.k
    c1 = k1 * params.K / params.T
    c2 = k2 * params.K / params.T
    c3 = (k3 * params.K - 1.0) / params.T
    return np.array([1.0, -c3, c2 + params.tau_star * c1, c1])


def routh_hurwitz_stable(coeffs):
    _, a2, a1, a0 = coeffs
    return a2 > 0 and a0 > 0 and a2 * a1 > a0


class TestDesiredSpacing:
    @pytest.mark.parametrize("v, tau, expected", [(0.0, 1.6, 5.0), (20.0, 1.6, 37.0),
                                                  (31.29, 1.0, 36.29)])
    def test_values(self, v, tau, expected):
        assert desired_spacing(v, P.with_tau(tau)) == pytest.approx(expected, abs=1e-12)

    def test_increasing_in_speed(self):
        v = np.linspace(0, 40, 50)
        assert np.all(np.diff([desired_spacing(x, P) for x in v]) > 0)


class TestErrorState:
    def test_equilibrium(self):
        err = derive_error_state(VehicleState(37.0, 20.0), VehicleState(0.0, 20.0), P)
        assert err == ErrorState(0.0, 0.0, 0.0)

    def test_offset(self):
        err = derive_error_state(VehicleState(40.0, 20.0), VehicleState(0.0, 20.0, 0.5), P)
        assert err.dd == pytest.approx(3.0)
        assert err.dv == 0.0
        assert err.a == 0.5

    def test_collision(self):
        with pytest.raises(CollisionDetected):
            derive_error_state(VehicleState(0.0, 20.0), VehicleState(0.0, 20.0), P)


class TestCommand:
    def test_equilibrium_is_zero(self):
        assert command_accel(ErrorState(0, 0, 0), 0.0, P) == 0.0

    def test_single_component(self):
        params = ControllerParams(k=(0.2, 0.4, -0.1), kf=0.0)
        assert command_accel(ErrorState(1, 0, 0), 0.0, params) == pytest.approx(0.2)

    def test_clamped(self):
        params = ControllerParams(k=(0.2, 0.4, -0.1), kf=0.5, u_max=0.8)
        assert command_accel(ErrorState(1, 1, 1), 2.0, params) == 0.8

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-100, 100), st.floats(-30, 30), st.floats(-10, 10), st.floats(-10, 10))
    def test_saturation(self, dd, dv, a, lead):
        u = command_accel(ErrorState(dd, dv, a), lead, P)
        assert P.u_min <= u <= P.u_max


class TestGLVD:
    def test_coasting(self):
        s = step_glvd(VehicleState(3.0, 10.0), 0.0, 0.1, P)
        assert (s.x, s.v, s.a) == (3.0 + 0.1 * 10.0, 10.0, 0.0)

    def test_single_step(self):
        s = step_glvd(VehicleState(0.0, 10.0), 1.0, 0.1, P)
        assert s.a == pytest.approx(0.1 / 0.45, rel=1e-14)
        assert s.u == 1.0

    def test_settles_to_command(self):
        s = VehicleState(0.0, 10.0)
        for _ in range(50):
            s = step_glvd(s, 1.0, 0.1, P)
        assert abs(s.a - 1.0) < 0.01

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3), st.floats(-5, 3), st.integers(1, 100))
    def test_lag_envelope(self, a0, u, steps):
        dt = 0.1
        s = VehicleState(0.0, 50.0, a0)
        for _ in range(steps):
            s = step_glvd(s, u, dt, P)
        bound = abs(a0 - P.K * u) * math.exp(-steps * dt / P.T)
        assert abs(s.a - P.K * u) <= bound + 1e-12

    def test_speed_clamped_at_zero(self):
        s = step_glvd(VehicleState(0.0, 0.1, -5.0), -5.0, 0.1, P)
        assert s.v == 0.0


class TestStateMatrices:
    def test_entries(self):
        A, B, D = build_state_matrices(P)
        assert A[0, 2] == -1.6
        assert A[2, 2] == pytest.approx(-1 / 0.45)
        assert B[2, 0] == pytest.approx(1 / 0.45)
        assert A[1, 2] == -1.0
        assert_array_equal(D.ravel(), [0.0, 1.0, 0.0])
        assert_array_equal(A[1:, :2], 0.0)


class TestStability:
    def test_open_loop_marginal(self):
        params = ControllerParams(k=(0.0, 0.0, 0.0))
        eig = np.sort_complex(check_stability(params))
        assert_allclose(eig, [-1 / 0.45, 0.0, 0.0], atol=1e-12)
        assert not is_stable(params)

    def test_default_gains_stable(self):
        eig = check_stability(P)
        assert np.all(eig.real < 0)
        assert routh_hurwitz_stable(characteristic_coeffs(P))

    def test_flipped_spacing_gain_unstable(self):
        k1, k2, k3 = P.k
        params = ControllerParams(k=(-k1, k2, k3))
        assert np.max(check_stability(params).real) > 0

    def test_characteristic_polynomial(self):
        A, B, _ = build_state_matrices(P)
        closed = A + B @ np.reshape(P.k, (1, 3))
        assert_allclose(np.poly(closed), characteristic_coeffs(P), rtol=1e-10)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-2, 2), st.floats(-4, 4), st.floats(-2, 2), st.floats(0.5, 2.5))
    def test_matches_routh_hurwitz(self, k1, k2, k3, tau):
        params = ControllerParams(tau_star=tau, k=(k1, k2, k3))
        coeffs = characteristic_coeffs(params)
        _, a2, a1, a0 = coeffs
        # skip cases sitting on the stability boundary
        if min(abs(a2), abs(a0), abs(a2 * a1 - a0)) < 1e-6:
            return
        assert is_stable(params) == routh_hurwitz_stable(coeffs)


class TestParams:
    @pytest.mark.parametrize("field, value", [("T", 0.0), ("tau_star", -1.0), ("s0", -0.1),
                                              ("theta", -0.2), ("u_min", 3.0)])
    def test_invariants(self, field, value):
        with pytest.raises(InvariantViolation):
            ControllerParams(**{field: value})

    def test_gain_count(self):
        with pytest.raises(InvariantViolation):
            ControllerParams(k=(1.0, 2.0))


class TestDelayLine:
    def test_delay_steps(self):
        line = DelayLine.for_delay(0.2, 0.1)
        assert line.steps == 2
        assert [line.push(x) for x in [1.0, 2.0, 3.0, 4.0]] == [0.0, 0.0, 1.0, 2.0]

    def test_rounding_tolerance(self):
        assert DelayLine.for_delay(0.3, 0.1).steps == 3
        assert DelayLine.for_delay(0.25, 0.1).steps == 3

    def test_zero_delay_passes_through(self):
        line = DelayLine.for_delay(0.0, 0.1)
        assert line.push(5.0) == 5.0
