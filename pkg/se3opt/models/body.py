#!/usr/bin/env python3.9
"""SE3 Opt -> Models -> Body
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
import math
from typing import List, Literal, Optional

import numpy as np
from pydantic import PrivateAttr, validator

from se3opt.geom3 import EYE3, validate_rotation
from se3opt.models.base import Base, as_matrix, as_vector, is_spd

FOUR_PI2 = 4.0 * math.pi ** 2


class BodyParams(Base):
    """Rigid Body Parameters

    Normalized units: mass of the body, radius of a reference circular orbit, and its period;
    mu = 4π² gives a unit-radius circular orbit a unit period."""
    m: float = 1.0
    J: np.ndarray
    Jd: Optional[np.ndarray] = None
    rho: np.ndarray = np.zeros((0, 3))
    mu: float = FOUR_PI2
    field: Literal['central', 'free'] = 'central'

    _j_inv: np.ndarray = PrivateAttr()

    def __init__(self, **data):
        super().__init__(**data)
        self._j_inv = np.linalg.inv(self.J)

    @validator('m', 'mu')
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('must be finite and positive')

        return float(v)

    @validator('J', pre=True)
    def inertia(cls, v) -> np.ndarray:
        j = as_matrix(v)
        if not is_spd(j):
            raise ValueError('inertia must be symmetric positive definite')

        return 0.5 * (j + j.T)

    @validator('Jd', pre=True, always=True)
    def nonstandard_inertia(cls, v, values) -> np.ndarray:
        if 'J' not in values:
            return v

        j = values['J']
        jd = 0.5 * np.trace(j) * EYE3 - j
        if v is not None and not np.array_equal(as_matrix(v), jd):
            raise ValueError('Jd must equal ½ tr(J) I − J')

        return jd

    @validator('rho', pre=True)
    def offsets(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float).reshape(-1, 3) if np.size(v) else np.zeros((0, 3))
        if not np.all(np.isfinite(arr)):
            raise ValueError('sphere offsets must be finite')

        return arr

    @property
    def J_inv(self) -> np.ndarray:
        return self._j_inv


def dumbbell_params(m: float = 1.0,
                    d: float = 0.01,
                    sphere_radius: Optional[float] = None,
                    mu: float = FOUR_PI2,
                    field: str = 'central') -> BodyParams:
    """Dumbbell: two spheres of mass m/2 at ±d e1 on a massless rod

    The point-mass inertia m d² diag(0, 1, 1) is singular about the rod; each sphere also carries
    its own uniform-sphere inertia (2/5)(m/2)r², so J stays positive definite.

    Args:
        m (float): total mass
        d (float): sphere offset from the mass center
        sphere_radius (float): defaults to d / 2
        mu (float): gravitational parameter
        field (str): 'central' | 'free'

    Returns:
        (BodyParams)"""
    r = 0.5 * d if sphere_radius is None else sphere_radius
    j = m * d * d * np.diag([0.0, 1.0, 1.0]) + 0.4 * m * r * r * EYE3

    return BodyParams(m=m, J=j, rho=[[d, 0.0, 0.0], [-d, 0.0, 0.0]], mu=mu, field=field)


class State(Base):
    """State on T*SE(3): attitude, position, body angular momentum, inertial linear momentum

    Validated when built from user data; the integrator builds successors with State.construct()."""
    R: np.ndarray
    x: np.ndarray
    Pi: np.ndarray
    gamma: np.ndarray

    @validator('R', pre=True)
    def rotation(cls, v) -> np.ndarray:
        return validate_rotation(v).copy()

    @validator('x', 'Pi', 'gamma', pre=True)
    def vector(cls, v) -> np.ndarray:
        return as_vector(v)

    def to_flat(self) -> List[float]:
        """x, R (row-major), Pi, gamma"""
        return [*self.x, *self.R.reshape(-1), *self.Pi, *self.gamma]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.R)) and np.all(np.isfinite(self.x))
                    and np.all(np.isfinite(self.Pi)) and np.all(np.isfinite(self.gamma)))


class ControlSample(Base):
    """Control force (inertial frame) and control moment (body frame)"""
    uf: np.ndarray = np.zeros(3)
    um: np.ndarray = np.zeros(3)

    @validator('uf', 'um', pre=True)
    def vector(cls, v) -> np.ndarray:
        return as_vector(v)

    @classmethod
    def zero(cls) -> 'ControlSample':
        return cls.construct(uf=np.zeros(3), um=np.zeros(3))


class Costate(Base):
    """Multiplier of the discrete equations of motion, stacked (x, γ, R, Π) as λ¹..λ⁴"""
    lam1: np.ndarray = np.zeros(3)
    lam2: np.ndarray = np.zeros(3)
    lam3: np.ndarray = np.zeros(3)
    lam4: np.ndarray = np.zeros(3)

    @validator('lam1', 'lam2', 'lam3', 'lam4', pre=True)
    def vector(cls, v) -> np.ndarray:
        return as_vector(v)

    @classmethod
    def from_array(cls, lam: np.ndarray) -> 'Costate':
        lam = np.asarray(lam, dtype=float).reshape(12)
        return cls(lam1=lam[0:3], lam2=lam[3:6], lam3=lam[6:9], lam4=lam[9:12])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.lam1, self.lam2, self.lam3, self.lam4])


class BoundaryConditions(Base):
    """Fixed initial and desired terminal states of a single transfer"""
    initial: State
    desired: State
    N: int
    h: float

    @validator('N')
    def horizon(cls, v: int) -> int:
        if v < 1:
            raise ValueError('horizon must be at least one step')

        return v

    @validator('h')
    def step(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('step size must be finite and positive')

        return float(v)


if __name__ == '__main__':
    print(__doc__)
