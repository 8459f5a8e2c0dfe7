#!/usr/bin/env python3.9
"""SE3 Opt -> Geom3
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Exact rotation-group primitives: the hat/vee isomorphism between R^3 and so(3),
the Rodrigues exponential, and its inverse below the cut locus."""
import math

import numpy as np

from se3opt.exceptions import CutLocusError, GeometryError

SKEW_TOL = 1e-10
ORTHO_TOL = 1e-10
SMALL_ANGLE = 1e-6
CUT_LOCUS_MARGIN = 1e-9
EYE3 = np.eye(3)


def hat(v: np.ndarray) -> np.ndarray:
    """Hat map S(v); S(v) @ w == cross(v, w)

    Args:
        v (np.ndarray): (3,)

    Returns:
        (np.ndarray): (3, 3) skew-symmetric"""
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of the hat map

    Args:
        m (np.ndarray): (3, 3) skew-symmetric within SKEW_TOL

    Raises:
        GeometryError

    Returns:
        (np.ndarray): (3,)"""
    m = np.asarray(m, dtype=float)
    asym = np.linalg.norm(m + m.T)
    if asym > SKEW_TOL:
        raise GeometryError(f'Matrix is not skew-symmetric; ‖M + Mᵀ‖ = {asym:.3e}')

    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def exp_so3(v: np.ndarray) -> np.ndarray:
    """Rodrigues exponential; exp_so3(0) = I

    Args:
        v (np.ndarray): (3,) rotation vector

    Returns:
        (np.ndarray): (3, 3) rotation matrix"""
    v = np.asarray(v, dtype=float)
    theta2 = float(v @ v)
    s = hat(v)
    if theta2 < SMALL_ANGLE ** 2:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        theta = math.sqrt(theta2)
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta2

    return EYE3 + a * s + b * (s @ s)


def log_so3(r: np.ndarray) -> np.ndarray:
    """Rotation vector of a rotation matrix; norm strictly below π

    Args:
        r (np.ndarray): (3, 3) rotation matrix

    Raises:
        CutLocusError: rotation angle at π

    Returns:
        (np.ndarray): (3,)"""
    r = np.asarray(r, dtype=float)
    tr = float(np.trace(r))
    if tr <= -1.0 + CUT_LOCUS_MARGIN:
        raise CutLocusError(tr)

    w = 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    cos_theta = min(1.0, max(-1.0, 0.5 * (tr - 1.0)))
    theta = math.acos(cos_theta)

    if theta < SMALL_ANGLE:
        return w * (1.0 + theta * theta / 6.0)

    if theta < math.pi - 1e-3:
        return w * (theta / math.sin(theta))

    # Near π the antisymmetric part vanishes; recover the axis from the symmetric part.
    b = (0.5 * (r + r.T) - cos_theta * EYE3) / (1.0 - cos_theta)
    col = int(np.argmax(np.diag(b)))
    axis = b[:, col] / math.sqrt(max(b[col, col], 0.0))
    axis /= np.linalg.norm(axis)
    if axis @ w < 0.0:
        axis = -axis

    return theta * axis


def right_jacobian(v: np.ndarray) -> np.ndarray:
    """Right Jacobian of exp_so3: exp(v + dv) ≈ exp(v) exp(Jr(v) dv)."""
    v = np.asarray(v, dtype=float)
    theta2 = float(v @ v)
    s = hat(v)
    if theta2 < 1e-8:
        return EYE3 - 0.5 * s + (s @ s) / 6.0

    theta = math.sqrt(theta2)
    return EYE3 - (1.0 - math.cos(theta)) / theta2 * s + (theta - math.sin(theta)) / (theta2 * theta) * (s @ s)


def orthonormality_error(r: np.ndarray) -> float:
    """‖RᵀR − I‖_F"""
    return float(np.linalg.norm(r.T @ r - EYE3))


def validate_rotation(m, tol: float = ORTHO_TOL) -> np.ndarray:
    """Boundary check of the rotation-matrix invariants

    Args:
        m (array-like): (3, 3)
        tol (float):

    Raises:
        GeometryError

    Returns:
        (np.ndarray)"""
    r = np.asarray(m, dtype=float)
    if r.shape != (3, 3):
        raise GeometryError(f'Rotation must be 3x3; got shape {r.shape}')

    if not np.all(np.isfinite(r)):
        raise GeometryError('Rotation has non-finite entries')

    if (err := orthonormality_error(r)) > tol:
        raise GeometryError(f'Rotation is not orthonormal; ‖RᵀR − I‖ = {err:.3e}')

    if abs(np.linalg.det(r) - 1.0) > tol:
        raise GeometryError(f'Rotation is improper; det = {np.linalg.det(r):.12f}')

    return r


if __name__ == '__main__':
    print(__doc__)
