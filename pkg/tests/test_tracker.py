import math

import numpy as np
import pytest

from cimpl.fusion import FusedDoa, Mode, wrap
from cimpl.tracker import TrackerConfig, TrackerState, WrappedKalmanTracker, initial_state, predict, update

CFG = TrackerConfig()
Q = CFG.q


def state(az=0.0, vel=0.0, p=((0.1, 0.01), (0.01, 0.02))):
    return TrackerState(az, vel, np.array(p, dtype=float))


def test_predict_zero_velocity():
    s0 = state(0.7)
    s1 = predict(s0, Q)
    assert s1.azimuth == 0.7
    assert s1.covariance[0, 0] > s0.covariance[0, 0]
    assert s1.covariance[1, 1] > s0.covariance[1, 1]


def test_predict_wraps():
    s = predict(state(math.radians(179), math.radians(2)), Q)
    assert math.degrees(s.azimuth) == pytest.approx(-179.0, abs=1e-9)


def test_predict_covariance_closed_form():
    F = np.array([[1.0, 1.0], [0.0, 1.0]])
    Qm = Q ** 2 * np.array([[1.0, 1.0], [1.0, 1.0]])
    s = state()
    P = s.covariance.copy()
    last = P[0, 0]
    for _ in range(50):
        s = predict(s, Q)
        P = F @ P @ F.T + Qm
        np.testing.assert_allclose(s.covariance, P, rtol=1e-12)
        assert s.covariance[0, 0] > last
        last = s.covariance[0, 0]


def test_zero_innovation_update():
    s0 = state(0.3)
    s1 = update(s0, 0.3, 0.1)
    assert s1.azimuth == pytest.approx(0.3, abs=1e-9)
    assert s1.covariance[0, 0] < s0.covariance[0, 0]


def test_update_matches_textbook_kalman(rng):
    for _ in range(100):
        A = rng.normal(size=(2, 2))
        P = A @ A.T + 0.01 * np.eye(2)
        s = TrackerState(rng.uniform(-1, 1), rng.normal(0, 0.01), P)
        m, r = rng.uniform(-1, 1), rng.uniform(1e-3, 5)
        H = np.array([[1.0, 0.0]])
        K = P @ H.T / (P[0, 0] + r)
        x = np.array([s.azimuth, s.velocity]) + K[:, 0] * wrap(m - s.azimuth)
        Pp = (np.eye(2) - K @ H) @ P
        out = update(s, m, r)
        assert out.azimuth == pytest.approx(wrap(x[0]), abs=1e-9)
        # measurements are snapped to a 2**-32 rad grid
        assert out.velocity == pytest.approx(x[1], abs=1e-9)
        np.testing.assert_allclose(out.covariance, Pp, rtol=1e-9, atol=1e-12)


def test_wrap_equivalence_bit_identical(rng):
    for m in rng.uniform(-math.pi, math.pi, 2000):
        s = state(rng.uniform(-math.pi, math.pi))
        ref = update(s, m, 0.05)
        for n in (-3, -1, 1, 2, 7):
            other = update(s, m + 2 * math.pi * n, 0.05)
            assert other.azimuth == ref.azimuth
            assert other.velocity == ref.velocity
            assert np.array_equal(other.covariance, ref.covariance)


def test_innovation_taken_on_circle():
    s = update(state(math.radians(175)), math.radians(-175), 0.05)
    # moves towards +180 across the wrap, not back through 0
    assert abs(math.degrees(s.azimuth)) > 175


def test_convergence_to_constant_measurement():
    m = math.radians(-37.0)
    s = initial_state(math.radians(60.0))
    for frame in range(1, 21):
        s = update(predict(s, Q), m, 1e-4)
    assert abs(math.degrees(wrap(s.azimuth - m))) < 0.1


def test_gain_monotone_in_dispersion():
    s = state(0.0)
    steps = [abs(update(s, 0.5, d).azimuth) for d in np.linspace(1e-4, 25, 200)]
    assert all(a > b for a, b in zip(steps, steps[1:]))


def test_dispersion_clamped():
    s = state(0.0)
    assert update(s, 0.5, 0.0).azimuth == update(s, 0.5, CFG.delta_min).azimuth
    assert update(s, 0.5, 1e9).azimuth == update(s, 0.5, CFG.delta_max).azimuth


def test_covariance_stays_positive_definite(rng):
    s = initial_state(0.0)
    ms = rng.uniform(-math.pi, math.pi, 100_000)
    ds = 10 ** rng.uniform(-6, 2, 100_000)
    skip = rng.random(100_000) < 0.2
    for m, d, sk in zip(ms, ds, skip):
        s = predict(s, Q)
        if not sk:
            s = update(s, m, d)
        P = s.covariance
        assert P[0, 1] == P[1, 0]
        assert P[0, 0] > 0 and P[0, 0] * P[1, 1] - P[0, 1] ** 2 > 0


def test_tracker_lifecycle():
    t = WrappedKalmanTracker()
    invalid = FusedDoa(0, math.nan, 0.0, math.inf, Mode.INVALID)
    assert t.step(invalid) is None
    assert t.step(FusedDoa(1, 0.4, 0.9, 0.1, Mode.COMMON_MEAN)) == pytest.approx(0.4)
    assert t.step(invalid) == pytest.approx(0.4)  # predict only, zero velocity


def test_no_large_jumps_with_bounded_noise(rng):
    t = WrappedKalmanTracker()
    truth = np.cumsum(np.full(3000, math.radians(0.3)))
    out = []
    for l, az in enumerate(truth):
        m = wrap(az + rng.uniform(-0.3, 0.3))
        out.append(t.step(FusedDoa(l, m, 0.9, 0.05, Mode.COMMON_MEAN)))
    steps = np.abs([wrap(b - a) for a, b in zip(out, out[1:])])
    assert steps.max() < math.pi / 2
