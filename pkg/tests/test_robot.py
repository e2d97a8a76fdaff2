"""Kinematics, dead reckoning, and Jacobian checks."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fnnekf.robot import (
    EncoderTicks,
    MotionIncrement,
    Pose,
    RobotGeometry,
    conversion_factor,
    dead_reckon_step,
    measurement,
    measurement_jacobians,
    motion_increment,
    process_jacobians,
    state_transition,
    wheel_displacements,
    wrap_angle,
)

LAB_GEOMETRY = RobotGeometry(
    wheel_diameter=0.05, wheel_base=0.6, gear_ratio=1.0, encoder_resolution=500.0
)


class TestWrapAngle:
    def test_zero(self):
        assert wrap_angle(0.0) == 0.0

    def test_odd_multiple_maps_to_pi(self):
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)

    def test_negative_three_and_a_half_pi(self):
        assert wrap_angle(-3.5 * math.pi) == pytest.approx(0.5 * math.pi)

    def test_rejects_non_finite(self):
        for bad in (math.inf, -math.inf, math.nan):
            with pytest.raises(ValueError):
                wrap_angle(bad)

    @given(st.floats(min_value=-50.0, max_value=50.0))
    def test_range_and_idempotence(self, theta):
        wrapped = wrap_angle(theta)
        assert -math.pi < wrapped <= math.pi
        assert wrap_angle(wrapped) == pytest.approx(wrapped, abs=1e-12)

    @given(st.floats(min_value=-20.0, max_value=20.0), st.integers(-3, 3))
    def test_two_pi_periodic(self, theta, k):
        assert wrap_angle(theta + 2 * math.pi * k) == pytest.approx(
            wrap_angle(theta), abs=1e-9
        )


class TestConversionFactor:
    def test_lab_geometry(self):
        assert conversion_factor(LAB_GEOMETRY) == pytest.approx(
            3.141592653589793e-4, rel=1e-12
        )

    def test_unit_case(self):
        geom = RobotGeometry(1.0 / math.pi, 0.6, 1.0, 1.0)
        assert conversion_factor(geom) == pytest.approx(1.0, rel=1e-12)

    def test_gear_ratio_halves(self):
        geom = RobotGeometry(0.05, 0.6, 2.0, 500.0)
        assert conversion_factor(geom) == pytest.approx(1.5707963e-4, rel=1e-6)

    @pytest.mark.parametrize("field", ["wheel_diameter", "wheel_base", "gear_ratio", "encoder_resolution"])
    def test_rejects_non_positive(self, field):
        kwargs = dict(wheel_diameter=0.05, wheel_base=0.6, gear_ratio=1.0, encoder_resolution=500.0)
        kwargs[field] = 0.0
        with pytest.raises(ValueError, match=field):
            RobotGeometry(**kwargs)


class TestWheelDisplacements:
    def test_zero_ticks(self):
        assert wheel_displacements(EncoderTicks(0, 0), LAB_GEOMETRY) == (0.0, 0.0)

    def test_thousand_ticks(self):
        left, right = wheel_displacements(EncoderTicks(1000, 1000), LAB_GEOMETRY)
        assert left == pytest.approx(0.31416, abs=1e-5)
        assert right == pytest.approx(0.31416, abs=1e-5)

    def test_sign_follows_ticks(self):
        left, right = wheel_displacements(EncoderTicks(-500, 500), LAB_GEOMETRY)
        assert left == pytest.approx(-0.15708, abs=1e-5)
        assert right == pytest.approx(0.15708, abs=1e-5)

    def test_ticks_must_be_integers(self):
        with pytest.raises(ValueError):
            EncoderTicks(1.5, 2)


class TestMotionIncrement:
    def test_straight(self):
        m = motion_increment(0.1, 0.1, LAB_GEOMETRY)
        assert m.ds == pytest.approx(0.1)
        assert m.dtheta == 0.0

    def test_one_wheel(self):
        m = motion_increment(0.0, 0.06, LAB_GEOMETRY)
        assert m.ds == pytest.approx(0.03)
        assert m.dtheta == pytest.approx(0.1)

    def test_pure_rotation(self):
        m = motion_increment(-0.05, 0.05, LAB_GEOMETRY)
        assert m.ds == pytest.approx(0.0)
        assert m.dtheta == pytest.approx(1.0 / 6.0)

    def test_inconsistent_mean_rejected(self):
        with pytest.raises(ValueError, match="mean"):
            MotionIncrement(ds=1.0, dtheta=0.0, ds_left=0.0, ds_right=0.0)

    def test_from_center_round_trips(self):
        m = MotionIncrement.from_center(0.04, -0.2, wheel_base=0.6)
        again = MotionIncrement.from_wheels(m.ds_left, m.ds_right, wheel_base=0.6)
        assert again.ds == pytest.approx(m.ds, abs=1e-15)
        assert again.dtheta == pytest.approx(m.dtheta, abs=1e-15)


class TestDeadReckonStep:
    def test_straight_along_x(self):
        p = dead_reckon_step(Pose(0, 0, 0), MotionIncrement.from_center(1.0, 0.0, 0.6))
        assert (p.x, p.y, p.theta) == (1.0, 0.0, 0.0)

    def test_rotation_in_place(self):
        p = dead_reckon_step(Pose(0, 0, 0), MotionIncrement.from_center(0.0, math.pi / 2, 0.6))
        assert p.x == pytest.approx(0.0)
        assert p.y == pytest.approx(0.0)
        assert p.theta == pytest.approx(math.pi / 2)

    def test_endpoint_angle_convention(self):
        # The chord is laid along the post-step heading.
        p = dead_reckon_step(Pose(0, 0, 0), MotionIncrement.from_center(1.0, math.pi / 2, 0.6))
        assert p.x == pytest.approx(0.0, abs=1e-15)
        assert p.y == pytest.approx(1.0)
        assert p.theta == pytest.approx(math.pi / 2)

    def test_straight_line_conservation(self):
        rng = np.random.default_rng(7)
        pose = Pose(0, 0, 0)
        steps = rng.uniform(0.0, 0.3, size=50)
        for ds in steps:
            pose = dead_reckon_step(pose, MotionIncrement.from_center(float(ds), 0.0, 0.6))
        assert pose.theta == 0.0
        assert pose.y == 0.0
        total = 0.0
        for ds in steps:
            total += float(ds)
        assert pose.x == total


class TestStateTransition:
    def test_zero_noise_is_bitwise_dead_reckoning(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            pose = Pose(*rng.uniform(-2, 2, 2), rng.uniform(-3, 3))
            m = MotionIncrement.from_center(rng.uniform(-0.2, 0.2), rng.uniform(-0.5, 0.5), 0.6)
            a = state_transition(pose, m, (0.0, 0.0))
            b = dead_reckon_step(pose, m)
            assert (a.x, a.y, a.theta) == (b.x, b.y, b.theta)

    def test_additive_displacement_noise(self):
        p = state_transition(Pose(0, 0, 0), MotionIncrement.from_center(1.0, 0.0, 0.6), (0.1, 0.0))
        assert (p.x, p.y, p.theta) == (pytest.approx(1.1), 0.0, 0.0)

    def test_additive_heading_noise(self):
        p = state_transition(Pose(0, 0, 0), MotionIncrement.from_center(0.0, 0.0, 0.6), (0.0, 0.2))
        assert (p.x, p.y, p.theta) == (0.0, 0.0, pytest.approx(0.2))


class TestMeasurement:
    def test_noiseless_identity(self):
        z = measurement(Pose(1.5, -2.0, 0.7), (0.0, 0.0, 0.0))
        assert z == pytest.approx([1.5, -2.0, 0.7])

    def test_additive(self):
        z = measurement(Pose(1, 2, 0.5), (0.01, -0.01, 0.0))
        assert z == pytest.approx([1.01, 1.99, 0.5])

    def test_heading_wraps(self):
        z = measurement(Pose(0, 0, math.pi), (0.0, 0.0, 0.1))
        assert z[2] == pytest.approx(-math.pi + 0.1)


def _finite_difference_jacobians(pose, m, step=1e-6):
    """Central differences of the process model, the independent oracle.

    Heading rows are differenced through wrap_angle so the derivative is
    taken on the circle rather than across the branch cut.
    """

    def f(state_vec, noise_vec):
        p = Pose(state_vec[0], state_vec[1], state_vec[2])
        out = state_transition(p, m, (noise_vec[0], noise_vec[1]))
        return np.array([out.x, out.y, out.theta])

    x0 = np.array([pose.x, pose.y, pose.theta])
    a = np.zeros((3, 3))
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = step
        hi = f(x0 + dx, np.zeros(2))
        lo = f(x0 - dx, np.zeros(2))
        diff = hi - lo
        diff[2] = wrap_angle(float(diff[2]))
        a[:, j] = diff / (2 * step)
    w = np.zeros((3, 2))
    for j in range(2):
        dw = np.zeros(2)
        dw[j] = step
        hi = f(x0, dw)
        lo = f(x0, -dw)
        diff = hi - lo
        diff[2] = wrap_angle(float(diff[2]))
        w[:, j] = diff / (2 * step)
    return a, w


class TestProcessJacobians:
    def test_no_motion_gives_identity(self):
        a, _ = process_jacobians(Pose(0.3, -0.8, 1.1), MotionIncrement.from_center(0.0, 0.0, 0.6))
        assert a == pytest.approx(np.eye(3))

    def test_closed_form_at_origin(self):
        a, w = process_jacobians(Pose(0, 0, 0), MotionIncrement.from_center(1.0, 0.0, 0.6))
        assert a[0][2] == pytest.approx(0.0)
        assert a[1][2] == pytest.approx(1.0)
        assert w[:, 0] == pytest.approx([1.0, 0.0, 0.0])

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            pose = Pose(*rng.uniform(-3, 3, 2), rng.uniform(-3, 3))
            m = MotionIncrement.from_center(
                rng.uniform(-0.5, 0.5), rng.uniform(-0.8, 0.8), 0.6
            )
            a, w = process_jacobians(pose, m)
            a_fd, w_fd = _finite_difference_jacobians(pose, m)
            assert np.allclose(a, a_fd, rtol=1e-5, atol=1e-7)
            assert np.allclose(w, w_fd, rtol=1e-5, atol=1e-7)


class TestMeasurementJacobians:
    def test_identity(self):
        h, v = measurement_jacobians(Pose(0.4, 0.2, -1.0))
        assert np.array_equal(h, np.eye(3))
        assert np.array_equal(v, np.eye(3))

    def test_h_matches_finite_differences(self):
        pose = Pose(0.9, -1.2, 0.4)
        step = 1e-7
        h_fd = np.zeros((3, 3))
        x0 = pose.as_array()
        for j in range(3):
            dx = np.zeros(3)
            dx[j] = step
            hi = measurement(Pose(*(x0 + dx)), (0.0, 0.0, 0.0))
            lo = measurement(Pose(*(x0 - dx)), (0.0, 0.0, 0.0))
            diff = hi - lo
            diff[2] = wrap_angle(float(diff[2]))
            h_fd[:, j] = diff / (2 * step)
        h, _ = measurement_jacobians(pose)
        assert np.allclose(h, h_fd, atol=1e-9)


class TestPose:
    def test_theta_wrapped_at_construction(self):
        assert Pose(0, 0, 3 * math.pi).theta == pytest.approx(math.pi)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Pose(math.inf, 0, 0)

    def test_array_round_trip(self):
        p = Pose(1.0, -2.0, 0.3)
        assert Pose.from_array(p.as_array()) == p
