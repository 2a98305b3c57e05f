"""Wrapped Kalman filter for a single azimuth.

State is (azimuth, angular velocity per frame) with a constant-velocity
model. The innovation is wrapped to [-pi, pi) so the filter runs on the
circle, and the measurement variance of each frame is that frame's
circular dispersion, clamped to a sane range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fusion import FusedDoa, wrap

# Measurement angles are snapped to this grid after wrapping so that m and
# m + 2 pi n (which differ by float rounding) give the same posterior.
_ANGLE_QUANTUM = 2.0 ** -32


@dataclass(frozen=True)
class TrackerConfig:
    process_std_deg: float = 1.0
    delta_min: float = 1e-4
    delta_max: float = 25.0
    init_angle_std_deg: float = 30.0
    init_velocity_std_deg: float = 5.0

    def __post_init__(self):
        if not self.process_std_deg > 0:
            raise ValueError("process noise must be positive")
        if not 0 < self.delta_min < self.delta_max:
            raise ValueError("need 0 < delta_min < delta_max")
        if not (self.init_angle_std_deg > 0 and self.init_velocity_std_deg > 0):
            raise ValueError("initial standard deviations must be positive")

    @property
    def q(self) -> float:
        return math.radians(self.process_std_deg)


@dataclass
class TrackerState:
    azimuth: float
    velocity: float
    covariance: np.ndarray = field(default_factory=lambda: np.eye(2))


def canonical_angle(m: float) -> float:
    w = wrap(m)
    return wrap(round(w / _ANGLE_QUANTUM) * _ANGLE_QUANTUM)


def initial_state(measurement: float, config: TrackerConfig = TrackerConfig()) -> TrackerState:
    P = np.diag([math.radians(config.init_angle_std_deg) ** 2,
                 math.radians(config.init_velocity_std_deg) ** 2])
    return TrackerState(canonical_angle(measurement), 0.0, P)


def predict(state: TrackerState, q: float) -> TrackerState:
    """Constant-velocity step; process noise enters the velocity and is
    carried into the angle by the transition, so Q = q^2 [[1, 1], [1, 1]]."""
    (p00, p01), (p10, p11) = state.covariance.tolist()
    q2 = q * q
    n00 = p00 + p01 + p10 + p11 + q2
    n01 = p01 + p11 + q2
    n11 = p11 + q2
    P = np.array([[n00, n01], [n01, n11]])
    return TrackerState(wrap(state.azimuth + state.velocity), state.velocity, P)


def update(state: TrackerState, measurement: float, delta: float,
           config: TrackerConfig = TrackerConfig()) -> TrackerState:
    """Measurement update with variance ``clamp(delta)``; Joseph-form covariance."""
    r = min(config.delta_max, max(config.delta_min, delta))
    (p00, p01), (_, p11) = state.covariance.tolist()
    s = p00 + r
    k0 = p00 / s
    k1 = p01 / s
    innovation = wrap(canonical_angle(measurement) - state.azimuth)
    azimuth = wrap(state.azimuth + k0 * innovation)
    velocity = state.velocity + k1 * innovation
    # (I - K H) P (I - K H)^T + K r K^T with H = [1, 0]
    a = 1.0 - k0
    n00 = a * a * p00 + k0 * k0 * r
    n01 = a * (p01 - k1 * p00) + k0 * k1 * r
    n11 = p11 - 2.0 * k1 * p01 + k1 * k1 * p00 + k1 * k1 * r
    P = np.array([[n00, n01], [n01, n11]])
    return TrackerState(azimuth, velocity, P)


class WrappedKalmanTracker:
    """Sequential tracker fed with one fused measurement per frame.

    The filter starts at the first valid measurement. Invalid frames only
    predict. :meth:`step` returns the tracked azimuth or None before start.
    """

    def __init__(self, config: TrackerConfig = TrackerConfig()):
        self.config = config
        self.state: Optional[TrackerState] = None

    def step(self, measurement: FusedDoa) -> Optional[float]:
        if self.state is None:
            if not measurement.valid:
                return None
            self.state = initial_state(measurement.varphi, self.config)
            return self.state.azimuth
        self.state = predict(self.state, self.config.q)
        if measurement.valid:
            self.state = update(self.state, measurement.varphi, measurement.dispersion, self.config)
        return self.state.azimuth
