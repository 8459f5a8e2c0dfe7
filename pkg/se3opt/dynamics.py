#!/usr/bin/env python3.9
"""SE3 Opt -> Dynamics
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Rigid-body model: the configuration-dependent potential and the force/moment it induces.

Attitude variations are left-trivialized, δR = R S(ζ); the moment M satisfies
dU/dε (R exp(εζ), x) = −Mᵀζ, and f = −∂U/∂x."""
from abc import ABC, abstractmethod
from typing import Dict, Tuple, Type

import numpy as np

from se3opt.exceptions import PotentialSingularityError
from se3opt.geom3 import hat
from se3opt.models.body import BodyParams, State

MIN_SEPARATION = 1e-9


class GravityField(ABC):
    """Potential model interface; integrator and optctrl only see this"""

    @abstractmethod
    def potential(self, params: BodyParams, R: np.ndarray, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def loads(self, params: BodyParams, R: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Force (inertial frame) and moment (body frame)"""

    @abstractmethod
    def jacobians(self, params: BodyParams, R: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, ...]:
        """(df/dx, df/dζ, dM/dx, dM/dζ), each 3x3"""


class FreeSpace(GravityField):
    """Zero potential"""

    def potential(self, params, R, x):
        return 0.0

    def loads(self, params, R, x):
        return np.zeros(3), np.zeros(3)

    def jacobians(self, params, R, x):
        z = np.zeros((3, 3))
        return z, z, z, z


class CentralGravity(GravityField):
    """Dumbbell in a central inverse-square field

    Mass m is split evenly over the spheres at body-frame offsets ρ_q; with no offsets the body is
    a point mass. U = −(μ m / n_q) Σ_q 1/‖x + Rρ_q‖"""

    @staticmethod
    def _spheres(params: BodyParams, R: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        rho = params.rho if len(params.rho) else np.zeros((1, 3))
        p = x + rho @ R.T
        r = np.linalg.norm(p, axis=1)
        q = int(np.argmin(r))
        if r[q] <= MIN_SEPARATION:
            raise PotentialSingularityError(q + 1, float(r[q]))

        return rho, p, params.mu * params.m / len(rho)

    def potential(self, params, R, x):
        _, p, k = self._spheres(params, R, x)
        return float(-k * np.sum(1.0 / np.linalg.norm(p, axis=1)))

    def loads(self, params, R, x):
        rho, p, k = self._spheres(params, R, x)
        r = np.linalg.norm(p, axis=1)
        f_q = -k * p / (r ** 3)[:, None]
        f = f_q.sum(axis=0)
        m = np.cross(rho, f_q @ R).sum(axis=0)  # Σ ρ_q × Rᵀ f_q

        return f, m

    def jacobians(self, params, R, x):
        rho, p, k = self._spheres(params, R, x)
        df_dx = np.zeros((3, 3))
        df_dz = np.zeros((3, 3))
        dm_dx = np.zeros((3, 3))
        dm_dz = np.zeros((3, 3))

        for rho_q, p_q in zip(rho, p):
            r = float(np.linalg.norm(p_q))
            u = p_q / r
            d = (np.eye(3) - 3.0 * np.outer(u, u)) / r ** 3  # ∂(p/‖p‖³)/∂p
            s_rho = hat(rho_q)
            f_body = -k * (R.T @ p_q) / r ** 3
            dfq_dx = -k * d
            dfq_dz = k * d @ R @ s_rho  # δp_q = δx − R S(ρ_q) ζ

            df_dx += dfq_dx
            df_dz += dfq_dz
            dm_dx += s_rho @ R.T @ dfq_dx
            dm_dz += s_rho @ (hat(f_body) + R.T @ dfq_dz)

        return df_dx, df_dz, dm_dx, dm_dz


FIELDS: Dict[str, Type[GravityField]] = {'central': CentralGravity, 'free': FreeSpace}


def field_of(params: BodyParams) -> GravityField:
    return FIELDS[params.field]()


def potential(params: BodyParams, R: np.ndarray, x: np.ndarray) -> float:
    """Potential energy U(R, x)

    Raises:
        PotentialSingularityError"""
    return field_of(params).potential(params, R, x)


def force(params: BodyParams, R: np.ndarray, x: np.ndarray) -> np.ndarray:
    """f = −∂U/∂x, inertial frame"""
    return field_of(params).loads(params, R, x)[0]


def moment(params: BodyParams, R: np.ndarray, x: np.ndarray) -> np.ndarray:
    """M = Σ r_i × u_ri, body frame"""
    return field_of(params).loads(params, R, x)[1]


def loads(params: BodyParams, R: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Force and moment in one evaluation"""
    return field_of(params).loads(params, R, x)


def load_jacobians(params: BodyParams, R: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, ...]:
    """(df/dx, df/dζ, dM/dx, dM/dζ)"""
    return field_of(params).jacobians(params, R, x)


def force_jacobian(params: BodyParams, R: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(df/dx, df/dζ)"""
    return field_of(params).jacobians(params, R, x)[:2]


def moment_jacobian(params: BodyParams, R: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(dM/dx, dM/dζ)"""
    return field_of(params).jacobians(params, R, x)[2:]


def angular_velocity(params: BodyParams, Pi: np.ndarray) -> np.ndarray:
    return params.J_inv @ Pi


def energy(params: BodyParams, s: State) -> float:
    """‖γ‖²/2m + ½ΩᵀJΩ + U"""
    omega = angular_velocity(params, s.Pi)
    return float(s.gamma @ s.gamma / (2.0 * params.m) + 0.5 * omega @ s.Pi + potential(params, s.R, s.x))


if __name__ == '__main__':
    print(__doc__)
