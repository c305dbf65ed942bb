"""Ego motion: constant turn rate and acceleration propagation, a linear
Kalman filter over the dynamic states, and rigid transforms between the
global frame and the ego-stationary frame.

The ego state is (x, y, v, a, heading, yaw rate). Propagation integrates the
turn-and-accelerate motion exactly; the displacement is evaluated in a form
that stays numerically stable through omega -> 0, so the straight-line case
is the genuine limit rather than a separate branch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import wrap_angle

# Below this value of |omega * dt| the acceleration displacement terms use a
# series expansion (truncation error < 2e-18); above it the trigonometric
# form is well conditioned.
_THETA_SWITCH = 1e-3


@dataclass
class EgoState:
    """Pose and dynamics in a planar frame. heading is wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    v: float = 0.0
    a: float = 0.0
    heading: float = 0.0
    yaw_rate: float = 0.0
    timestamp: float = 0.0

    def __post_init__(self):
        self.heading = float(wrap_angle(self.heading))

    @property
    def pos(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class GlobalEgoState:
    """Ego pose in the global (planar projected) frame, east/north meters."""

    east: float
    north: float
    heading: float
    timestamp: float = 0.0


@dataclass(frozen=True)
class ImuSample:
    """One inertial measurement: speed, acceleration, yaw rate."""

    timestamp: float
    speed: float
    accel: float
    yaw_rate: float


def _sinc(u: float) -> float:
    """sin(u)/u, continuous at 0."""
    if abs(u) < 1e-4:
        u2 = u * u
        return 1.0 - u2 / 6.0 + u2 * u2 / 120.0
    return math.sin(u) / u


def _accel_terms(heading: float, theta: float) -> tuple[float, float]:
    """Coefficients of a*dt^2 in the displacement, stable through theta = 0.

    B multiplies the x displacement, D the y displacement. Exact values:
    B = sin(h+t)/t + (cos(h+t) - cos h)/t^2
    D = (sin(h+t) - sin h)/t^2 - cos(h+t)/t
    """
    ch, sh = math.cos(heading), math.sin(heading)
    if abs(theta) < _THETA_SWITCH:
        t2 = theta * theta
        even = 0.5 - t2 / 8.0 + t2 * t2 / 144.0
        odd = theta / 3.0 - theta * t2 / 30.0
        return ch * even - sh * odd, sh * even + ch * odd
    b = math.sin(heading + theta) / theta + (math.cos(heading + theta) - ch) / (theta * theta)
    d = (math.sin(heading + theta) - sh) / (theta * theta) - math.cos(heading + theta) / theta
    return b, d


def ctra_displacement(v: float, a: float, heading: float, yaw_rate: float,
                      dt: float) -> tuple[float, float]:
    """Displacement over dt under constant yaw rate and acceleration."""
    theta = yaw_rate * dt
    half = 0.5 * theta
    s = _sinc(half)
    ax = math.cos(heading + half) * s
    ay = math.sin(heading + half) * s
    b, d = _accel_terms(heading, theta)
    return v * dt * ax + a * dt * dt * b, v * dt * ay + a * dt * dt * d


def ctra_predict(state: EgoState, dt: float) -> EgoState:
    """Propagate the ego state by dt. dt must be nonnegative."""
    if dt < 0.0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    dx, dy = ctra_displacement(state.v, state.a, state.heading,
                               state.yaw_rate, dt)
    return EgoState(
        x=state.x + dx,
        y=state.y + dy,
        v=state.v + state.a * dt,
        a=state.a,
        heading=wrap_angle(state.heading + state.yaw_rate * dt),
        yaw_rate=state.yaw_rate,
        timestamp=state.timestamp + dt,
    )


# ---- dynamic-state Kalman filter -----------------------------------------


@dataclass(frozen=True)
class KfNoise:
    """Diagonal process / measurement noise for the (v, a, yaw rate) filter.

    process entries are continuous-time intensities; the discrete process
    covariance is diag(process) * dt.
    """

    process: tuple = (0.5, 0.5, 0.05)
    measurement: tuple = (0.1, 0.2, 0.01)


@dataclass
class DynKalmanState:
    """Gaussian belief over (speed, acceleration, yaw rate)."""

    mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    cov: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        if self.mean.shape != (3,) or self.cov.shape != (3, 3):
            raise ValueError("mean must be (3,), cov must be (3, 3)")
        if np.abs(self.cov - self.cov.T).max() > 1e-9:
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(self.cov + 1e-12 * np.eye(3))
        except np.linalg.LinAlgError:
            raise ValueError("covariance must be positive semidefinite") from None


def kf_predict_update(kf: DynKalmanState, sample: ImuSample, dt: float,
                      noise: KfNoise = KfNoise()) -> DynKalmanState:
    """One predict + update step with a direct observation of all states.

    Model: speed integrates acceleration, acceleration and yaw rate are
    random walks. The measurement observes (speed, accel, yaw rate).
    """
    if dt < 0.0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    f = np.array([[1.0, dt, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    q = np.diag(noise.process) * dt
    m = f @ kf.mean
    p = f @ kf.cov @ f.T + q

    z = np.array([sample.speed, sample.accel, sample.yaw_rate])
    r = np.diag(noise.measurement)
    s = p + r  # H = I
    k = p @ np.linalg.inv(s)
    m = m + k @ (z - m)
    ikh = np.eye(3) - k
    p = ikh @ p @ ikh.T + k @ r @ k.T  # Joseph form keeps p symmetric PSD
    return DynKalmanState(mean=m, cov=0.5 * (p + p.T))


# ---- frame anchoring -------------------------------------------------------


@dataclass(frozen=True)
class FrameAnchor:
    """Pairing of a global pose with the matching ego-stationary pose.

    Fixes the rigid transform between the two frames: the ego vehicle sits
    at global_pose in the global frame and at ego_pose in the ego-stationary
    frame at the same instant.
    """

    global_pose: GlobalEgoState
    ego_pose: EgoState = field(default_factory=EgoState)

    def _rotation(self) -> float:
        return wrap_angle(self.ego_pose.heading - self.global_pose.heading)

    def global_to_ego_points(self, points) -> np.ndarray:
        """Map global east/north points into the ego-stationary frame."""
        p = np.asarray(points, dtype=float)
        delta = self._rotation()
        c, s = math.cos(delta), math.sin(delta)
        rot = np.array([[c, -s], [s, c]])
        origin = np.array([self.global_pose.east, self.global_pose.north])
        ego0 = np.array([self.ego_pose.x, self.ego_pose.y])
        return (p - origin) @ rot.T + ego0

    def ego_to_global_points(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        delta = self._rotation()
        c, s = math.cos(delta), math.sin(delta)
        rot = np.array([[c, s], [-s, c]])  # inverse rotation
        origin = np.array([self.global_pose.east, self.global_pose.north])
        ego0 = np.array([self.ego_pose.x, self.ego_pose.y])
        return (p - ego0) @ rot.T + origin

    def global_to_ego_heading(self, heading: float) -> float:
        return wrap_angle(heading + self._rotation())

    def ego_to_global_heading(self, heading: float) -> float:
        return wrap_angle(heading - self._rotation())


class DeadReckoner:
    """Integrates an inertial sample stream into an ego trajectory.

    Each sample first refines the dynamic states through the Kalman filter,
    then the pose advances with the turn-and-accelerate model over the
    sample interval.
    """

    def __init__(self, initial: EgoState, noise: KfNoise = KfNoise()):
        self.state = replace(initial)
        self.noise = noise
        self.kf = DynKalmanState(
            mean=np.array([initial.v, initial.a, initial.yaw_rate]),
            cov=np.eye(3),
        )

    def step(self, sample: ImuSample) -> EgoState:
        dt = sample.timestamp - self.state.timestamp
        if dt < 0.0:
            raise ValueError("samples must be time ordered")
        self.state = ctra_predict(self.state, dt)
        self.kf = kf_predict_update(self.kf, sample, dt, self.noise)
        self.state.v = float(self.kf.mean[0])
        self.state.a = float(self.kf.mean[1])
        self.state.yaw_rate = float(self.kf.mean[2])
        return replace(self.state)


def read_imu_jsonl(path) -> list[ImuSample]:
    """Read inertial samples from a JSON-lines file.

    Each line: {"timestamp": ..., "speed": ..., "accel": ..., "yaw_rate": ...}
    """
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            samples.append(ImuSample(
                timestamp=float(rec["timestamp"]),
                speed=float(rec["speed"]),
                accel=float(rec["accel"]),
                yaw_rate=float(rec["yaw_rate"]),
            ))
    return samples
