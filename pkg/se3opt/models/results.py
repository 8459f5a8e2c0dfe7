#!/usr/bin/env python3.9
"""SE3 Opt -> Models -> Results
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
from typing import List, Literal, NoReturn, Optional

import numpy as np
from pydantic import Field
from pydantic.dataclasses import dataclass

from se3opt.models.base import Base
from se3opt.models.body import ControlSample, State


class StepResult(Base):
    """One integrator step"""
    next: State
    F: np.ndarray
    implicit_iters: int
    implicit_residual: float


class Trajectory(Base):
    """States at nodes 0..N and the node-indexed controls that produced them"""
    states: List[State]
    controls: List[ControlSample] = Field(default_factory=list)
    h: float

    @property
    def N(self) -> int:
        return len(self.states) - 1

    @property
    def final(self) -> State:
        return self.states[-1]

    def control_at(self, k: int) -> ControlSample:
        if k < len(self.controls):
            return self.controls[k]

        return ControlSample.zero()


class OptimalSolution(Base):
    """A converged single-body transfer

    controls[k] is the control at node k + 1 and equals controls_from_costate(multipliers[k]);
    multipliers are stacked in costate order (x, γ, R, Π)."""
    trajectory: List[State]
    controls: List[ControlSample]
    multipliers: np.ndarray
    cost: float
    dcost_dz0: np.ndarray
    dcost_dzN: np.ndarray
    terminal_residual: float
    newton_iters: int
    h: float
    phi11_N: Optional[np.ndarray] = None
    phi12_N: Optional[np.ndarray] = None

    @property
    def lam0(self) -> np.ndarray:
        return self.multipliers[0]

    @property
    def N(self) -> int:
        return len(self.trajectory) - 1

    def as_trajectory(self) -> Trajectory:
        """Node-indexed view; node 0 carries no control"""
        return Trajectory.construct(states=self.trajectory, controls=[ControlSample.zero(), *self.controls], h=self.h)


class TraceRecord(Base):
    """One stage of the hierarchical optimization"""
    iteration: int
    phase: Literal['theta-opt', 'assign-opt']
    theta: List[float]
    assignment: List[int]
    J: float
    grad_norm: float
    solves: int = 0
    newton_iters: int = 0
    converged: bool = True


class RunResult(Base):
    """Outcome of the hierarchical optimization; assignment is 1-based (body i -> slot assignment[i])"""
    theta: List[float]
    assignment: List[int]
    J: float
    grad_norm: float
    solutions: List[OptimalSolution]
    trace: List[TraceRecord]
    converged: bool
    total_solves: int = 0


class EnumerationRow(Base):
    theta: float
    assignment: List[int]
    J: float


class EnumerationTable(Base):
    """Total cost of every (pinned) assignment at every grid point"""
    rows: List[EnumerationRow]
    solves: int
    fix_first: bool

    def best(self) -> EnumerationRow:
        return min(self.rows, key=lambda r: r.J)

    def totals(self) -> np.ndarray:
        return np.array([r.J for r in self.rows], dtype=float)


@dataclass
class Results:
    """Results of a batch of runs; failures are recorded and the batch continues"""
    success: List[dict] = Field(default_factory=list)
    failure: List[dict] = Field(default_factory=list)

    @property
    def dict(self) -> dict:
        """Dict

        Provides a dictionary with success/failure results

        Returns:
            (dict)"""
        return {'success': self.success, 'failure': self.failure}

    def cleanup(self, sort_key: Optional[str] = None) -> NoReturn:
        """Cleanup

        Removes keys that have a null value and optionally sorts by a key

        Args:
            sort_key (str):

        Returns:
            (NoReturn)"""
        self.success = [{k: v for k, v in rec.items() if v is not None} for rec in self.success]

        if sort_key:
            self.success.sort(key=lambda r: r[sort_key])


if __name__ == '__main__':
    print(__doc__)
