#!/usr/bin/env python3.9
"""SE3 Opt -> Models -> Config
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
import math
from enum import Enum
from typing import List, Literal, Optional

import numpy as np
from pydantic import Field, PrivateAttr, root_validator, validator

from se3opt.geom3 import validate_rotation
from se3opt.models.base import Base, as_matrix, as_vector, is_spd
from se3opt.models.body import FOUR_PI2, BodyParams, State, dumbbell_params


class SensitivityStrategy(str, Enum):
    """Methods to choose which sensitivity extrapolates an unknown cost-matrix entry"""
    TERM = 'Term'  # terminal sensitivity, along rows
    INIT = 'Init'  # initial sensitivity, along columns
    RAND = 'Rand'
    RPT = 'Rpt'
    ALT = 'Alt'
    COMP = 'Comp'

    @classmethod
    def names(cls) -> List[str]:
        return [s.value for s in cls]


class IntegratorConfig(Base):
    """Integrator Configuration"""
    h: float = 0.005
    order: Literal['second', 'first'] = 'second'
    implicit_tol: float = 1e-14
    implicit_max_iters: int = 50
    orthonormality_recheck_period: int = 1000

    @validator('h', 'implicit_tol')
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('must be finite and positive')

        return float(v)

    @validator('implicit_max_iters', 'orthonormality_recheck_period')
    def count(cls, v: int) -> int:
        if v < 1:
            raise ValueError('must be at least 1')

        return v


class Weights(Base):
    """Control weights; cost = Σ (h/2)(ufᵀ Wf uf + umᵀ Wm um)"""
    Wf: np.ndarray = np.eye(3)
    Wm: np.ndarray = np.eye(3)

    _wf_inv: np.ndarray = PrivateAttr()
    _wm_inv: np.ndarray = PrivateAttr()

    def __init__(self, **data):
        super().__init__(**data)
        self._wf_inv = np.linalg.inv(self.Wf)
        self._wm_inv = np.linalg.inv(self.Wm)

    @validator('Wf', 'Wm', pre=True)
    def spd(cls, v) -> np.ndarray:
        w = as_matrix(v)
        if not is_spd(w):
            raise ValueError('weight must be symmetric positive definite')

        return 0.5 * (w + w.T)

    @property
    def Wf_inv(self) -> np.ndarray:
        return self._wf_inv

    @property
    def Wm_inv(self) -> np.ndarray:
        return self._wm_inv

    @property
    def costate_weight(self) -> np.ndarray:
        """diag(0, Wf⁻¹, 0, Wm⁻¹) in costate order (x, γ, R, Π)"""
        w = np.zeros((12, 12))
        w[3:6, 3:6] = self._wf_inv
        w[9:12, 9:12] = self._wm_inv

        return w


class ShootingConfig(Base):
    """Newton-Armijo shooting configuration"""
    tol: float = 1e-10
    max_outer: int = 50
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-8
    max_condition: float = 1e12

    @validator('tol', 'armijo_c', 'min_step', 'max_condition')
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('must be finite and positive')

        return float(v)

    @validator('backtrack')
    def fraction(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError('must lie in (0, 1)')

        return float(v)


class BfgsConfig(Base):
    """BFGS configuration for the target-parameter optimization"""
    grad_tol: float = 1e-4
    max_iters: int = 30
    initial_hessian: float = 1.0
    max_step: float = 0.5
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 30
    curvature_eps: float = 1e-12
    periodic: bool = True

    @validator('grad_tol', 'initial_hessian', 'max_step', 'armijo_c', 'curvature_eps')
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('must be finite and positive')

        return float(v)


class TargetCircle(Base):
    """Target circle; center x∘, radius r∘, unit normal n∘

    convention:
        slot    - slot j sits at θ¹ + (2π/n)(j − 1); body i goes to slot A_i
        printed - body i sits at θ¹ + (2π/n)(A_i − i)"""
    center: np.ndarray
    radius: float
    normal: np.ndarray
    convention: Literal['slot', 'printed'] = 'slot'

    @validator('center', pre=True)
    def vector(cls, v) -> np.ndarray:
        return as_vector(v)

    @validator('radius')
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('radius must be finite and positive')

        return float(v)

    @validator('normal', pre=True)
    def unit(cls, v) -> np.ndarray:
        n = as_vector(v)
        norm = float(np.linalg.norm(n))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f'normal must be a unit vector; ‖n‖ = {norm}')

        return n / norm


class Scenario(Base):
    """Formation reconfiguration scenario; all bodies identical"""
    body: BodyParams
    initial_states: List[State]
    target: TargetCircle
    R_d: np.ndarray = np.eye(3)
    Pi_d: np.ndarray = np.zeros(3)
    gamma_d: np.ndarray = np.zeros(3)
    N: int = 20
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    weights: Weights = Field(default_factory=Weights)
    shooting: ShootingConfig = Field(default_factory=ShootingConfig)
    bfgs: BfgsConfig = Field(default_factory=BfgsConfig)
    strategy: SensitivityStrategy = SensitivityStrategy.COMP
    M: int = 3
    theta0: np.ndarray = np.zeros(1)
    initial_assignment: Optional[List[int]] = None
    fix_first: bool = True
    max_alternations: int = 10
    theta_tol: float = 1e-6
    improve_tol: float = 1e-6
    seed: int = 0

    @validator('R_d', pre=True)
    def rotation(cls, v) -> np.ndarray:
        return validate_rotation(v).copy()

    @validator('Pi_d', 'gamma_d', pre=True)
    def vector(cls, v) -> np.ndarray:
        return as_vector(v)

    @validator('theta0', pre=True)
    def parameter(cls, v) -> np.ndarray:
        arr = np.atleast_1d(np.array(v, dtype=float))
        if not np.all(np.isfinite(arr)):
            raise ValueError('components must be finite')

        return arr

    @validator('theta_tol', 'improve_tol')
    def tolerance(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('must be finite and positive')

        return float(v)

    @validator('N', 'M', 'max_alternations')
    def count(cls, v: int) -> int:
        if v < 1:
            raise ValueError('must be at least 1')

        return v

    @root_validator(skip_on_failure=True)
    def consistent(cls, values: dict) -> dict:
        n = len(values['initial_states'])
        if n < 1:
            raise ValueError('at least one body is required')

        if (a := values.get('initial_assignment')) is not None:
            if sorted(a) != list(range(1, n + 1)):
                raise ValueError(f'initial_assignment must be a permutation of 1..{n}')

            if values['fix_first'] and a[0] != 1:
                raise ValueError('fix_first requires body 1 assigned to slot 1')

        return values

    @property
    def n(self) -> int:
        return len(self.initial_states)

    @property
    def h(self) -> float:
        return self.integrator.h


class BodySection(Base):
    """[body]; a dumbbell of two equal spheres"""
    m: float = 1.0
    d: float = 0.01
    sphere_radius: Optional[float] = None
    mu: float = FOUR_PI2
    field: Literal['central', 'free'] = 'central'

    @validator('m', 'd', 'mu')
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('must be finite and positive')

        return float(v)

    def params(self) -> BodyParams:
        return dumbbell_params(m=self.m, d=self.d, sphere_radius=self.sphere_radius, mu=self.mu, field=self.field)


class StateSection(Base):
    """An explicit state; attitude defaults to the identity"""
    R: np.ndarray = np.eye(3)
    x: np.ndarray
    Pi: np.ndarray = np.zeros(3)
    gamma: np.ndarray = np.zeros(3)

    @validator('R', pre=True)
    def rotation(cls, v) -> np.ndarray:
        return validate_rotation(v).copy()

    @validator('x', 'Pi', 'gamma', pre=True)
    def vector(cls, v) -> np.ndarray:
        return as_vector(v)

    def state(self) -> State:
        return State(R=self.R, x=self.x, Pi=self.Pi, gamma=self.gamma)


class WeightsSection(Base):
    """[weights]; diagonals or full matrices"""
    wf: List = [1.0, 1.0, 1.0]
    wm: List = [1.0, 1.0, 1.0]

    def weights(self) -> Weights:
        return Weights(Wf=self.wf, Wm=self.wm)


class TargetSection(Base):
    """[target]; center and normal default to the reference orbit position and its along-track direction"""
    center: Optional[List[float]] = None
    radius: float = 0.05
    normal: Optional[List[float]] = None
    convention: Literal['slot', 'printed'] = 'slot'


class DesiredSection(Base):
    """[desired]; common terminal attitude and momenta, defaulting to the reference circular orbit"""
    R: Optional[List[List[float]]] = None
    Pi: Optional[List[float]] = None
    gamma: Optional[List[float]] = None


class FormationSection(Base):
    """[formation]"""
    n: int = 5
    spacing: float = 0.02
    N: int = 20
    theta0: List[float] = [0.0]
    initial_assignment: Optional[List[int]] = None
    initial_states: Optional[List[StateSection]] = None
    strategy: SensitivityStrategy = SensitivityStrategy.COMP
    M: int = 3
    fix_first: bool = True
    max_alternations: int = 10
    theta_tol: float = 1e-6
    improve_tol: float = 1e-6
    seed: int = 0

    @validator('n', 'N', 'M', 'max_alternations')
    def count(cls, v: int) -> int:
        if v < 1:
            raise ValueError('must be at least 1')

        return v

    @validator('spacing', 'theta_tol', 'improve_tol')
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0.0):
            raise ValueError('must be finite and positive')

        return float(v)

    @validator('theta0')
    def finite(cls, v: List[float]) -> List[float]:
        if not v or not all(math.isfinite(t) for t in v):
            raise ValueError('must be a non-empty list of finite angles')

        return v


class OutputSection(Base):
    """[output]"""
    directory: str = 'out'


class BoundaryFile(Base):
    """Boundary file of a single transfer; horizon and step default to the scenario's"""
    initial: StateSection
    desired: StateSection
    N: Optional[int] = None
    h: Optional[float] = None


class ConfigFile(Base):
    """One file fully determines a run"""
    body: BodySection = Field(default_factory=BodySection)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    weights: WeightsSection = Field(default_factory=WeightsSection)
    shooting: ShootingConfig = Field(default_factory=ShootingConfig)
    bfgs: BfgsConfig = Field(default_factory=BfgsConfig)
    target: TargetSection = Field(default_factory=TargetSection)
    desired: DesiredSection = Field(default_factory=DesiredSection)
    formation: FormationSection = Field(default_factory=FormationSection)
    output: OutputSection = Field(default_factory=OutputSection)


if __name__ == '__main__':
    print(__doc__)
