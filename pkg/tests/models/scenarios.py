#!/usr/bin/env python3.9
"""SE3 Opt -> Tests -> Models -> Scenarios
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

This program is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
SSPL for more details.

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

You should have received a copy of the SSPL along with this program.
If not, see <https://www.mongodb.com/licensing/server-side-public-license>."""
from typing import List, Optional, Sequence, Tuple

import numpy as np

from se3opt.assign import ExactSolve, TransferOracle
from se3opt.formation import default_scenario
from se3opt.geom3 import exp_so3
from se3opt.models.body import BodyParams, BoundaryConditions, State, dumbbell_params
from se3opt.models.config import Scenario, Weights


def free_body(m: float = 1.0, d: float = 0.01) -> BodyParams:
    """Dumbbell with the potential switched off"""
    return dumbbell_params(m=m, d=d, field='free')


def point_mass(m: float = 1.0) -> BodyParams:
    return BodyParams(m=m, J=np.eye(3))


def random_rotation(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return exp_so3(scale * rng.normal(size=3))


def random_state(rng: np.random.Generator, params: BodyParams, radius: float = 1.0) -> State:
    """Near a circular orbit of the given radius, random attitude and spin"""
    x = radius * np.array([1.0, 0.0, 0.0]) + 0.01 * rng.normal(size=3)
    return State(R=random_rotation(rng), x=x, Pi=params.J @ rng.normal(size=3),
                 gamma=params.m * (2.0 * np.pi * np.array([0.0, 1.0, 0.0]) + 0.1 * rng.normal(size=3)))


def translation_problem(N: int = 10, distance: float = 1.0, m: float = 1.0) -> Tuple[BodyParams, BoundaryConditions]:
    """Zero potential, rest to rest along e1 over N h = 1"""
    params = free_body(m=m)
    h = 1.0 / N
    rest = State(R=np.eye(3), x=[0.0, 0.0, 0.0], Pi=[0.0, 0.0, 0.0], gamma=[0.0, 0.0, 0.0])
    goal = State(R=np.eye(3), x=[distance, 0.0, 0.0], Pi=[0.0, 0.0, 0.0], gamma=[0.0, 0.0, 0.0])

    return params, BoundaryConditions(initial=rest, desired=goal, N=N, h=h)


def orbit_problem(N: int = 10, h: float = 0.005, offset: Sequence[float] = (0.0, 0.0, 0.01)) -> Tuple[BodyParams, BoundaryConditions]:
    """One dumbbell of the default scenario sent a little off its free endpoint"""
    sc = default_scenario(n=1, N=N, h=h)
    s0 = sc.initial_states[0]
    goal = State(R=sc.R_d, x=sc.target.center + np.asarray(offset), Pi=sc.Pi_d, gamma=sc.gamma_d)

    return sc.body, BoundaryConditions(initial=s0, desired=goal, N=N, h=h)


def small_scenario(n: int = 3, N: int = 10, h: float = 0.005, **overrides) -> Scenario:
    return default_scenario(n=n, N=N, h=h, **overrides)


def unit_weights() -> Weights:
    return Weights()


class QuadraticOracle(TransferOracle):
    """Synthetic transfer costs c(i, t) = (t − p_i)ᵀ Q (t − p_i)

    p_i is the position block (3:6) of a synthetic 12-vector initial state, so the terminal
    sensitivity is 2Q(t − p_i) and the initial sensitivity is −2Q(t − p_i) on that block."""

    def __init__(self, positions: Sequence[Sequence[float]], Q: Optional[np.ndarray] = None):
        p = np.asarray(positions, dtype=float)
        self.z = np.zeros((len(p), 12))
        self.z[:, 3:6] = p
        self.Q = np.eye(3) if Q is None else np.asarray(Q, dtype=float)
        self.calls: List[Tuple[int, int]] = []

    def cost(self, body: int, target: np.ndarray) -> float:
        d = np.asarray(target, dtype=float) - self.z[body, 3:6]
        return float(d @ self.Q @ d)

    def matrix(self, table: np.ndarray) -> np.ndarray:
        """Exact (n, n) costs for a body-by-slot target table"""
        n = len(self.z)
        return np.array([[self.cost(i, table[i, j]) for j in range(n)] for i in range(n)])

    async def solve(self, body: int, slot: int, target: np.ndarray) -> ExactSolve:
        self.calls.append((body, slot))
        d = np.asarray(target, dtype=float) - self.z[body, 3:6]
        initial = np.zeros(12)
        initial[3:6] = -2.0 * self.Q @ d

        return ExactSolve(float(d @ self.Q @ d), 2.0 * self.Q @ d, initial)

    def initial_difference(self, body: int, other: int) -> np.ndarray:
        return self.z[body] - self.z[other]
