"""Sensor orientation estimation and gravity-free signal extraction.

A gradient-descent complementary filter (MARG form) fuses gyroscope
integration with accelerometer and magnetometer corrections. Quaternions
are (w, x, y, z) and rotate sensor-frame vectors into the Earth frame
(magnetic North, West, vertical up): v_earth = q (0, v_s) q*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import EmptyRecording
from .series import SensorSite, SignalSeries

GRAVITY = 9.81
DEFAULT_BETA = 0.1
DEFAULT_CONVERGENCE_WINDOW = 3.0

_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass
class ImuRecording:
    """Time-stamped tri-axial accel/gyro/mag streams for one body site.

    Units: accel m/s^2, gyro rad/s, mag unitless direction. ``mag`` may be
    None (IMU-only mode): heading is then unconstrained but gravity removal
    is unaffected. ``gap_indices`` flags samples preceded by a gap longer
    than two nominal periods.
    """

    site: SensorSite
    sample_rate: float
    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    mag: np.ndarray | None = None
    gap_indices: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.accel = np.asarray(self.accel, dtype=float)
        self.gyro = np.asarray(self.gyro, dtype=float)
        if self.mag is not None:
            self.mag = np.asarray(self.mag, dtype=float)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if len(self.t) and np.any(np.diff(self.t) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate a sensor-frame vector into the Earth frame."""
    p = np.array([0.0, v[0], v[1], v[2]])
    return quat_multiply(quat_multiply(q, p), quat_conjugate(q))[1:]


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    half = 0.5 * angle
    return np.array([math.cos(half), *(math.sin(half) * ax)])


def quat_distance(a, b) -> float:
    """Sign-insensitive quaternion distance min(|a-b|, |a+b|)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def _field_gradient(q, ref_earth, meas_sensor) -> np.ndarray:
    """Gradient of 0.5*|conj(q) (0,ref) q - meas|^2 with respect to q."""
    p = np.array([0.0, ref_earth[0], ref_earth[1], ref_earth[2]])
    qc = quat_conjugate(q)
    f = quat_multiply(quat_multiply(qc, p), q)[1:] - meas_sensor
    grad = np.empty(4)
    basis = np.eye(4)
    for i in range(4):
        e = basis[i]
        d = quat_multiply(quat_multiply(quat_conjugate(e), p), q) \
            + quat_multiply(quat_multiply(qc, p), e)
        grad[i] = d[1:] @ f
    return grad


def filter_update(q, accel, gyro, mag, dt: float, beta: float) -> np.ndarray:
    """One complementary-filter step.

    Advances the gyro integration and, when beta > 0 and the accelerometer
    reading is usable, applies a normalized gradient step of magnitude beta
    toward gravity (and magnetic-field, when given) agreement. Degenerate
    accel falls back to pure gyro propagation. The result is renormalized.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    q = np.asarray(q, dtype=float)
    omega = np.array([0.0, gyro[0], gyro[1], gyro[2]])
    q_dot = 0.5 * quat_multiply(q, omega)
    if beta > 0.0:
        accel = np.asarray(accel, dtype=float)
        a_norm = np.linalg.norm(accel)
        if a_norm > 1e-9:
            grad = _field_gradient(q, np.array([0.0, 0.0, 1.0]), accel / a_norm)
            if mag is not None:
                mag = np.asarray(mag, dtype=float)
                m_norm = np.linalg.norm(mag)
                if m_norm > 1e-9:
                    m_hat = mag / m_norm
                    h = quat_rotate(q, m_hat)
                    # Earth-frame field reference: horizontal magnitude north,
                    # measured vertical component.
                    b = np.array([math.hypot(h[0], h[1]), 0.0, h[2]])
                    grad = grad + _field_gradient(q, b, m_hat)
            g_norm = np.linalg.norm(grad)
            if g_norm > 1e-12:
                q_dot = q_dot - beta * grad / g_norm
    q = q + q_dot * dt
    return q / np.linalg.norm(q)


def initial_orientation(accel, mag=None) -> np.ndarray:
    """Attitude from a single (assumed stationary) accel/mag reading.

    Accelerometer fixes the up direction, magnetometer the heading; without
    a magnetometer the heading is arbitrary. Returns identity for a
    degenerate accelerometer reading.
    """
    accel = np.asarray(accel, dtype=float)
    a_norm = np.linalg.norm(accel)
    if a_norm < 1e-9:
        return _IDENTITY.copy()
    up = accel / a_norm
    north = None
    if mag is not None:
        mag = np.asarray(mag, dtype=float)
        horiz = mag - (mag @ up) * up
        h_norm = np.linalg.norm(horiz)
        if h_norm > 1e-9:
            north = horiz / h_norm
    if north is None:
        ref = np.array([1.0, 0.0, 0.0]) if abs(up[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        horiz = ref - (ref @ up) * up
        north = horiz / np.linalg.norm(horiz)
    west = np.cross(up, north)
    r = np.vstack([north, west, up])  # rows: Earth axes in sensor coordinates
    xyzw = Rotation.from_matrix(r).as_quat()
    return np.array([xyzw[3], xyzw[0], xyzw[1], xyzw[2]])


def estimate_orientation(recording: ImuRecording, beta: float = DEFAULT_BETA,
                         convergence_window: float = DEFAULT_CONVERGENCE_WINDOW) -> np.ndarray:
    """Per-sample orientation quaternions (n, 4) for a recording.

    The filter starts from the first sample's accel/mag attitude and runs
    forward; orientations within the initial convergence window are replaced
    by the estimate reached at its end, which prevents startup gravity
    leakage into the earliest samples.
    """
    n = len(recording)
    if n == 0:
        raise EmptyRecording("recording has no samples")
    quats = np.empty((n, 4))
    mag0 = recording.mag[0] if recording.mag is not None else None
    q = initial_orientation(recording.accel[0], mag0)
    quats[0] = q
    for i in range(1, n):
        mag_i = recording.mag[i] if recording.mag is not None else None
        q = filter_update(q, recording.accel[i], recording.gyro[i], mag_i,
                          recording.t[i] - recording.t[i - 1], beta)
        quats[i] = q
    if convergence_window > 0:
        w_end = int(np.searchsorted(recording.t, recording.t[0] + convergence_window))
        quats[:w_end] = quats[min(w_end, n - 1)]
    return quats


def earth_acceleration(recording: ImuRecording, beta: float = DEFAULT_BETA,
                       convergence_window: float = DEFAULT_CONVERGENCE_WINDOW) -> np.ndarray:
    """Gravity-free acceleration components (n, 3) in the Earth frame."""
    quats = estimate_orientation(recording, beta, convergence_window)
    rot = Rotation.from_quat(quats[:, [1, 2, 3, 0]])
    a_earth = rot.apply(recording.accel)
    a_earth[:, 2] -= GRAVITY
    return a_earth


def linear_acceleration(recording: ImuRecording, beta: float = DEFAULT_BETA,
                        convergence_window: float = DEFAULT_CONVERGENCE_WINDOW) -> SignalSeries:
    """Norm of the Earth-frame acceleration after removing gravity."""
    a_earth = earth_acceleration(recording, beta, convergence_window)
    return SignalSeries(t0=float(recording.t[0]), dt=recording.dt,
                        values=np.linalg.norm(a_earth, axis=1))


def angular_velocity_norm(recording: ImuRecording) -> SignalSeries:
    """Per-sample Euclidean norm of the gyroscope reading, rad/s."""
    if len(recording) == 0:
        raise EmptyRecording("recording has no samples")
    return SignalSeries(t0=float(recording.t[0]), dt=recording.dt,
                        values=np.linalg.norm(recording.gyro, axis=1))
