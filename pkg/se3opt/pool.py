#!/usr/bin/env python3.9
"""SE3 Opt -> Solver Pool
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
import asyncio
from asyncio import Lock, Semaphore
from logging import DEBUG, WARNING
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from tenacity import Retrying, after_log, before_sleep_log, retry_if_exception_type, stop_after_attempt

from se3opt.assign import ExactSolve, TransferOracle
from se3opt.exceptions import Se3OptError, ShootingError, TransferError
from se3opt.integrator import state_difference
from se3opt.models.body import BoundaryConditions, State
from se3opt.models.config import Scenario
from se3opt.models.results import OptimalSolution
from se3opt.optctrl import shoot, warm_start_guess
from se3opt.utils import TWO_PI, default_jobs, quantize


class CacheEntry(NamedTuple):
    theta: np.ndarray
    lam0: np.ndarray
    desired: State
    phi12_N: np.ndarray


class WarmStartCache:
    """Converged initial multipliers keyed by (body, slot, quantized θ)

    Reads take a snapshot and need no lock; writes are serialized, last writer wins."""
    STEP: float = 1e-3  # θ quantization, radians

    def __init__(self, radius: float = 0.5, step: float = STEP, periodic: bool = True):
        self.radius = radius
        self.step = step
        self.periodic = periodic
        self.hits: int = 0
        self.misses: int = 0
        self._entries: Dict[Tuple[int, int, tuple], CacheEntry] = {}
        self._lock: Optional[Lock] = None

    def __len__(self) -> int:
        return len(self._entries)

    def _distance(self, a: np.ndarray, b: np.ndarray) -> float:
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self.periodic:
            d = np.mod(d + np.pi, TWO_PI) - np.pi

        return float(np.linalg.norm(d))

    def key(self, body: int, slot: int, theta: np.ndarray) -> Tuple[int, int, tuple]:
        return body, slot, quantize(np.atleast_1d(theta), self.step)

    def lookup(self, body: int, slot: int, theta: np.ndarray) -> Optional[CacheEntry]:
        """Entry with the nearest θ within the radius, or None"""
        if (entry := self._entries.get(self.key(body, slot, theta))) is None:
            candidates = [e for (b, s, _), e in list(self._entries.items()) if b == body and s == slot]
            near = [(self._distance(e.theta, theta), i, e) for i, e in enumerate(candidates)]
            near = [c for c in near if c[0] <= self.radius]
            entry = min(near, key=lambda c: c[:2])[2] if near else None

        if entry is None:
            self.misses += 1
            logger.debug(f'Cache miss: body {body + 1}, slot {slot + 1}')
        else:
            self.hits += 1
            logger.debug(f'Cache hit: body {body + 1}, slot {slot + 1}, θ={np.round(entry.theta, 6).tolist()}')

        return entry

    async def store(self, body: int, slot: int, theta: np.ndarray, entry: CacheEntry) -> None:
        if self._lock is None:
            self._lock = Lock()

        async with self._lock:
            self._entries[self.key(body, slot, theta)] = entry


class SolverPool(TransferOracle):
    """Parallel single-body transfer solves for one scenario

    Solves run in worker threads, at most `jobs` at a time; results are gathered in submission order.
    A warm-started solve that fails is retried once from a zero multiplier."""
    SEM: int = 5  # Default number of parallel solves when no job count resolves.

    def __init__(self,
                 scenario: Scenario,
                 jobs: Optional[int] = None,
                 cache: Optional[WarmStartCache] = None,
                 warm: bool = True):
        self.scenario = scenario
        self.jobs: int = default_jobs(jobs) or self.SEM
        self.cache: Optional[WarmStartCache] = (cache or WarmStartCache(periodic=scenario.bfgs.periodic)) if warm else None
        self.theta: np.ndarray = np.array(scenario.theta0, dtype=float)
        self.sem: Optional[Semaphore] = None
        self.solves: int = 0
        self.newton_iters: int = 0

    async def __aenter__(self):
        self.sem = Semaphore(self.jobs)
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        logger.debug(f'Solver pool closed after {self.solves} solves / {self.newton_iters} Newton iterations')

    def desired_state(self, target: np.ndarray) -> State:
        sc = self.scenario
        return State.construct(R=sc.R_d, x=np.asarray(target, dtype=float), Pi=sc.Pi_d, gamma=sc.gamma_d)

    def boundary(self, body: int, target: np.ndarray) -> BoundaryConditions:
        sc = self.scenario
        return BoundaryConditions.construct(initial=sc.initial_states[body], desired=self.desired_state(target), N=sc.N, h=sc.h)

    def _shoot(self, body: int, slot: int, bc: BoundaryConditions, guess: Optional[np.ndarray]) -> OptimalSolution:
        sc = self.scenario
        for attempt in Retrying(retry=retry_if_exception_type(ShootingError),
                                stop=stop_after_attempt(1 if guess is None else 2),
                                after=after_log(logger, DEBUG),
                                before_sleep=before_sleep_log(logger, WARNING),
                                reraise=True):
            with attempt:
                lam0 = guess if attempt.retry_state.attempt_number == 1 else None
                return shoot(sc.body, bc, sc.weights, lam0, cfg=sc.shooting, integrator=sc.integrator)

    async def transfer(self, body: int, slot: int, target: np.ndarray, theta: Optional[np.ndarray] = None) -> OptimalSolution:
        """Optimal transfer of one body to one target

        Args:
            body (int): 0-based
            slot (int): 0-based
            target (np.ndarray): desired position
            theta (np.ndarray): target parameter the slot was placed with; cache key

        Raises:
            TransferError

        Returns:
            (OptimalSolution)"""
        theta = self.theta if theta is None else np.atleast_1d(np.asarray(theta, dtype=float))
        bc = self.boundary(body, target)
        guess = None
        if self.cache is not None and (entry := self.cache.lookup(body, slot, theta)) is not None:
            guess = warm_start_guess(entry.lam0, entry.phi12_N, entry.desired, bc.desired)

        if self.sem is None:
            self.sem = Semaphore(self.jobs)

        async with self.sem:
            try:
                solution = await asyncio.to_thread(self._shoot, body, slot, bc, guess)
            except Se3OptError as err:
                raise TransferError(body, slot, err) from err

        self.solves += 1
        self.newton_iters += solution.newton_iters

        if self.cache is not None:
            await self.cache.store(body, slot, theta, CacheEntry(theta.copy(), solution.lam0, bc.desired, solution.phi12_N))

        return solution

    async def transfer_many(self,
                            requests: Sequence[Tuple[int, int, np.ndarray]],
                            theta: Optional[np.ndarray] = None) -> List[OptimalSolution]:
        """Gather (body, slot, target) transfers in submission order"""
        return list(await asyncio.gather(*[asyncio.create_task(self.transfer(b, s, t, theta)) for b, s, t in requests]))

    async def solve(self, body: int, slot: int, target: np.ndarray) -> ExactSolve:
        solution = await self.transfer(body, slot, target)
        return ExactSolve(solution.cost, solution.dcost_dzN[3:6], solution.dcost_dz0, solution.newton_iters, solution)

    def initial_difference(self, body: int, other: int) -> np.ndarray:
        states = self.scenario.initial_states
        return state_difference(states[body], states[other])


if __name__ == '__main__':
    print(__doc__)
