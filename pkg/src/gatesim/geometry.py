"""Quaternion and rotation helpers.

Quaternions are scalar-first (w, x, y, z) and act on vectors through the
Hamilton sandwich product q * v * q^-1 (body-to-world when q encodes a body
orientation). All functions work on plain float64 numpy arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import GeometryError, ValidationError

UNIT_QUAT_TOL = 1e-6

IDENTITY_QUAT = (1.0, 0.0, 0.0, 0.0)


def ensure_unit_quaternion(q, tol: float = UNIT_QUAT_TOL) -> np.ndarray:
    """Return q as a float64 array, rejecting anything that is not unit-norm."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise ValidationError(f"quaternion must have 4 components, got shape {q.shape}")
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"quaternion norm {norm!r} deviates from 1 by more than {tol}")
    return q


def quat_multiply(p, q) -> np.ndarray:
    """Hamilton product p * q."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (much faster than np.cross here)."""
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector v by unit quaternion q (i.e. q * v * q^-1)."""
    q = ensure_unit_quaternion(q)
    v = np.asarray(v, dtype=np.float64)
    u = q[1:]
    t = 2.0 * cross3(u, v)
    return v + q[0] * t + cross3(u, t)


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    norm = float(np.linalg.norm(axis))
    if norm < 1e-12:
        raise GeometryError("rotation axis has zero length")
    half = 0.5 * float(angle)
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / norm])


def yaw_quat(angle: float) -> np.ndarray:
    """Rotation about the world vertical (+z) by `angle` radians."""
    return quat_from_axis_angle((0.0, 0.0, 1.0), angle)


def rotation_matrix(q) -> np.ndarray:
    """3x3 rotation matrix equivalent to quat_rotate(q, .)."""
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def normalized(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise GeometryError("cannot normalize a zero-length vector")
    return v / norm
