"""Rotation helpers: hat operator, Rodrigues exponential and its Jacobian.

Rotations are 3x3 float64 matrices throughout; scipy's Rotation is used where
it is convenient (log map, slerp, random sampling), never as a public type.
"""
import numpy as np
from scipy.spatial.transform import Rotation

_SMALL_ANGLE = 1e-8


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix [v]x so that hat(v) @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rodrigues(rotvec: np.ndarray) -> np.ndarray:
    """Rotation matrix for an axis-angle vector."""
    rotvec = np.asarray(rotvec, dtype=np.float64)
    theta = float(np.linalg.norm(rotvec))
    K = hat(rotvec)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * K @ K
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * K @ K


def rotate_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation by `angle` radians about the unit vector `axis`."""
    axis = np.asarray(axis, dtype=np.float64)
    K = hat(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * K @ K


def rodrigues_jacobian(rotvec: np.ndarray) -> np.ndarray:
    """Derivatives dR/d(rotvec_j), stacked as an array of shape (3, 3, 3).

    Uses the closed form of Gallego & Yezzi:
        dR/dphi_j = (phi_j [phi]x + [phi x ((I - R) e_j)]x) R / |phi|^2
    which reduces to [e_j]x at the origin.
    """
    rotvec = np.asarray(rotvec, dtype=np.float64)
    theta2 = float(rotvec @ rotvec)
    R = rodrigues(rotvec)
    out = np.empty((3, 3, 3))
    if theta2 < _SMALL_ANGLE * _SMALL_ANGLE:
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1.0
            out[j] = hat(e) @ R
        return out
    K = hat(rotvec)
    I_minus_R = np.eye(3) - R
    for j in range(3):
        term = rotvec[j] * K + hat(np.cross(rotvec, I_minus_R[:, j]))
        out[j] = term @ R / theta2
    return out


def polar_project(matrix: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (orthogonal polar factor with det +1)."""
    U, _, Vt = np.linalg.svd(matrix)
    d = np.sign(np.linalg.det(U @ Vt))
    return U @ np.diag([1.0, 1.0, d]) @ Vt


def rotation_log(matrix: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (angle in [0, pi])."""
    return Rotation.from_matrix(matrix).as_rotvec()


def geodesic_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Angle of the relative rotation a^T b, in radians."""
    rel = a.T @ b
    cos = (np.trace(rel) - 1.0) / 2.0
    if cos > 0.99:
        # arccos loses precision near zero; the log map does not
        return float(np.linalg.norm(rotation_log(polar_project(rel))))
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))
