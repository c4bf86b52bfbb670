"""Polar conversion, angle unwrapping and sliding-window OLS slopes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groundtrack.kinematics import (
    KinematicsParams,
    compute_states,
    sliding_slopes,
    to_polar,
    unwrap_angles,
    window_slope,
    wrap_degrees,
)


class TestToPolar:
    def test_zero_vector_convention(self):
        assert to_polar((0.0, 0.0)) == (0.0, 0.0)

    def test_unit_x(self):
        assert to_polar((1.0, 0.0)) == (1.0, 0.0)

    def test_two_up(self):
        v_r, v_theta = to_polar((0.0, 2.0))
        assert v_r == pytest.approx(2.0)
        assert v_theta == pytest.approx(90.0)

    def test_range_is_half_open(self):
        # Straight along -x must give +180, not -180.
        _, theta = to_polar((-1.0, 0.0))
        assert theta == pytest.approx(180.0)
        _, theta = to_polar((-1.0, -1e-12))
        assert -180.0 < theta <= 180.0

    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_round_trip(self, vx, vy):
        v_r, v_theta = to_polar((vx, vy))
        back = np.array([
            v_r * math.cos(math.radians(v_theta)),
            v_r * math.sin(math.radians(v_theta)),
        ])
        assert np.allclose(back, [vx, vy], atol=1e-12)


class TestUnwrap:
    def test_seam_crossing(self):
        out = unwrap_angles([170.0, -170.0], [1.0, 1.0], floor=0.1)
        assert np.allclose(out, [170.0, 190.0])

    def test_constant_series_unchanged(self):
        series = [33.0] * 5
        out = unwrap_angles(series, [1.0] * 5, floor=0.1)
        assert np.allclose(out, series)

    def test_slow_frames_hold_previous_angle(self):
        out = unwrap_angles([10.0, 120.0, 50.0], [1.0, 0.01, 1.0], floor=0.1)
        assert np.allclose(out, [10.0, 10.0, 50.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            unwrap_angles([], [], floor=0.1)

    @given(st.lists(st.floats(-89.0, 89.0), min_size=1, max_size=60))
    @settings(max_examples=60)
    def test_random_walk_properties(self, steps):
        # Build a walk with steps below 90 degrees, wrap it, unwrap it.
        walk = np.cumsum([0.0, *steps])
        wrapped = wrap_degrees(walk)
        out = unwrap_angles(wrapped, np.ones_like(wrapped), floor=0.1)
        residual = (out - wrapped) % 360.0
        assert np.allclose(np.minimum(residual, 360.0 - residual), 0.0, atol=1e-9)
        assert np.all(np.abs(np.diff(out)) <= 180.0 + 1e-9)


class TestWindowSlope:
    def test_exact_linear(self):
        assert window_slope([1, 2, 3, 4, 5], t0=2, w=2, fps=1.0) == pytest.approx(1.0)

    def test_constant_series(self):
        assert window_slope([7, 7, 7, 7, 7], t0=2, w=2, fps=1.0) == 0.0

    def test_quadratic_center(self):
        # y = t^2 at t = 0..4: OLS slope about t0=2 is 4.0 (computed from the
        # closed form sum k*(t0+k)^2 / sum k^2 = 2*t0).
        y = [t**2 for t in range(5)]
        assert window_slope(y, t0=2, w=2, fps=1.0) == pytest.approx(4.0)

    def test_incomplete_window_rejected(self):
        with pytest.raises(ValueError):
            window_slope([1, 2, 3], t0=0, w=1, fps=1.0)

    def test_matches_polyfit_oracle(self):
        rng = np.random.default_rng(11)
        fps = 12.5
        for _ in range(50):
            w = int(rng.integers(1, 8))
            n = 2 * w + 1 + int(rng.integers(0, 10))
            y = rng.normal(0, 5, n)
            t0 = int(rng.integers(w, n - w))
            times = np.arange(t0 - w, t0 + w + 1) / fps
            expected = np.polyfit(times, y[t0 - w: t0 + w + 1], 1)[0]
            got = window_slope(y, t0, w, fps)
            assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)

    @given(
        st.lists(st.floats(-100, 100), min_size=5, max_size=40),
        st.floats(-10, 10),
        st.floats(0.1, 10),
    )
    @settings(max_examples=60)
    def test_shift_invariance_and_scaling(self, ys, shift, gain):
        w = 2
        if len(ys) < 2 * w + 1:
            return
        t0 = len(ys) // 2
        t0 = min(max(t0, w), len(ys) - w - 1)
        base = window_slope(ys, t0, w, fps=2.0)
        shifted = window_slope([y + shift for y in ys], t0, w, fps=2.0)
        scaled = window_slope([y * gain for y in ys], t0, w, fps=2.0)
        assert shifted == pytest.approx(base, abs=1e-6 + 1e-9 * abs(base))
        assert scaled == pytest.approx(base * gain, rel=1e-9, abs=1e-6)

    def test_reversed_window_negates_slope(self):
        rng = np.random.default_rng(5)
        y = rng.normal(0, 3, 9)
        fwd = window_slope(y, t0=4, w=4, fps=3.0)
        rev = window_slope(y[::-1], t0=4, w=4, fps=3.0)
        assert rev == pytest.approx(-fwd, rel=1e-12, abs=1e-12)

    def test_affine_exactness_tight(self):
        t = np.arange(31)
        y = -3.25 * t + 17.0
        for t0 in range(4, 27):
            got = window_slope(y, t0, w=4, fps=1.0)
            assert abs(got - (-3.25)) < 1e-12


class TestSlidingSlopes:
    def test_matches_scalar_op(self):
        rng = np.random.default_rng(2)
        y = rng.normal(0, 2, 40)
        slopes, valid = sliding_slopes(y, w=3, fps=10.0)
        assert not valid[:3].any() and not valid[-3:].any()
        for t0 in range(3, 37):
            assert valid[t0]
            assert slopes[t0] == pytest.approx(window_slope(y, t0, 3, 10.0), rel=1e-12, abs=1e-12)

    def test_short_series_all_invalid(self):
        slopes, valid = sliding_slopes([1.0, 2.0], w=2, fps=1.0)
        assert not valid.any()
        assert np.all(slopes == 0.0)


class TestComputeStates:
    def test_straight_motion(self):
        n = 20
        v = np.tile([3.0, 4.0], (n, 1))
        states = compute_states(range(n), np.arange(n) / 10.0, v,
                                KinematicsParams(w=2), fps=10.0)
        assert len(states) == n
        mid = states[10]
        assert mid.v_r == pytest.approx(5.0)
        assert mid.v_theta == pytest.approx(math.degrees(math.atan2(4, 3)))
        assert mid.a_r == pytest.approx(0.0, abs=1e-12)
        assert mid.a_theta == pytest.approx(0.0, abs=1e-12)
        assert mid.window_valid
        assert not states[0].window_valid and states[0].a_r == 0.0

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            KinematicsParams(w=0)
