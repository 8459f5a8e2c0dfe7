#!/usr/bin/env python3.9
"""SE3 Opt -> Formation
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Hierarchical reconfiguration: the target parameter is optimized for a fixed assignment, then the
assignment for a fixed target parameter, until neither stage moves."""
import asyncio
import itertools
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from se3opt.assign import combinatorial_loop
from se3opt.exceptions import BudgetExceededError, Se3OptError, StageError
from se3opt.geom3 import exp_so3
from se3opt.models.assignment import Assignment
from se3opt.models.body import BodyParams, State, dumbbell_params
from se3opt.models.config import Scenario, TargetCircle
from se3opt.models.results import EnumerationRow, EnumerationTable, OptimalSolution, Results, RunResult, TraceRecord
from se3opt.paramopt import assemble_gradient, optimize_theta, target_table, target_table_derivative
from se3opt.pool import SolverPool
from se3opt.utils import TWO_PI, angle_distance, default_jobs

ENUMERATION_BUDGET = 5000


def reference_target(N: int, h: float, radius: float = 0.05) -> TargetCircle:
    """Circle centred where the unit circular orbit is at T = N h, normal along-track"""
    phase = TWO_PI * N * h

    return TargetCircle(center=[math.cos(phase), math.sin(phase), 0.0], radius=radius,
                        normal=[-math.sin(phase), math.cos(phase), 0.0])


def reference_desired(body: BodyParams, N: int, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(R_d, Π_d, γ_d): radially aligned, spinning and moving at the unit-orbit rate at T = N h"""
    phase = TWO_PI * N * h
    along = np.array([-math.sin(phase), math.cos(phase), 0.0])

    return exp_so3(np.array([0.0, 0.0, phase])), body.J @ np.array([0.0, 0.0, TWO_PI]), body.m * TWO_PI * along


def default_scenario(n: int = 5,
                     spacing: float = 0.02,
                     N: int = 20,
                     h: float = 0.005,
                     radius: float = 0.05,
                     body: Optional[BodyParams] = None,
                     **overrides) -> Scenario:
    """Desk-scale reconfiguration scenario; invented defaults, normalized units

    n identical dumbbells (m = 1, half-length 0.01) start on a radial line centred on the unit
    circular orbit, each on its own circular orbit with the dumbbell radially aligned and spinning
    at the orbital rate. Over T = N h they move to a circle of the given radius centred where the
    unit orbit is at time T; the circle lies in the radial / out-of-plane plane (normal along-track)
    and every body must arrive radially aligned with the reference circular-orbit momenta.

    Args:
        n (int): number of bodies
        spacing (float): radial spacing of the initial line
        N (int): horizon
        h (float): step size
        radius (float): target-circle radius
        body (BodyParams): defaults to dumbbell_params()
        overrides: any further Scenario field

    Returns:
        (Scenario)"""
    body = body or dumbbell_params()
    states = []
    for i in range(n):
        r = 1.0 + (i - 0.5 * (n - 1)) * spacing
        rate = TWO_PI / r ** 1.5
        states.append(State(R=np.eye(3), x=[r, 0.0, 0.0], Pi=body.J @ np.array([0.0, 0.0, rate]),
                            gamma=[0.0, body.m * TWO_PI / math.sqrt(r), 0.0]))

    R_d, Pi_d, gamma_d = reference_desired(body, N, h)
    fields = dict(body=body,
                  initial_states=states,
                  target=reference_target(N, h, radius),
                  R_d=R_d,
                  Pi_d=Pi_d,
                  gamma_d=gamma_d,
                  N=N,
                  integrator={'h': h},
                  theta0=[0.0],
                  initial_assignment=list(range(1, n + 1)))
    fields.update(overrides)

    return Scenario(**fields)


def _solutions_for(assignment: Assignment, solutions: dict) -> List[OptimalSolution]:
    return [solutions[pair].solution for pair in assignment.pairs()]


async def run(scenario: Scenario,
              jobs: Optional[int] = None,
              warm: bool = True,
              pool: Optional[SolverPool] = None) -> RunResult:
    """Alternate theta-opt and assign-opt to a joint fixed point

    Args:
        scenario (Scenario):
        jobs (int): parallel solves
        warm (bool): warm-start inner solves from the cache
        pool (SolverPool): reuse an open pool (and its cache)

    Raises:
        StageError: labelled with the failing phase

    Returns:
        (RunResult): best so far, converged False, when max_alternations runs out"""
    pool = pool or SolverPool(scenario, jobs=jobs, warm=warm)
    sc = scenario
    n = sc.n
    theta = np.atleast_1d(np.array(sc.theta0, dtype=float))
    assignment = Assignment(perm=sc.initial_assignment) if sc.initial_assignment else Assignment.identity(n)
    trace: List[TraceRecord] = []
    converged = False
    J, grad_norm, solutions = math.inf, math.inf, []

    async with pool:
        for alternation in range(1, sc.max_alternations + 1):
            logger.info(f'Alternation {alternation}: theta-opt for A = {assignment}')
            try:
                t_res = await optimize_theta(pool, sc.target, theta, assignment, sc.bfgs)
            except Se3OptError as err:
                raise StageError('theta-opt', err) from err

            d_theta = max(angle_distance(a, b) for a, b in zip(t_res.theta, theta))
            theta, J, grad_norm, solutions = t_res.theta, t_res.J, t_res.grad_norm, t_res.solutions
            trace.append(TraceRecord.construct(iteration=alternation, phase='theta-opt', theta=theta.tolist(),
                                               assignment=list(assignment.perm), J=J, grad_norm=grad_norm,
                                               solves=t_res.solves, newton_iters=t_res.newton_iters,
                                               converged=t_res.converged))

            if n == 1:
                converged = t_res.converged
                break

            logger.info(f'Alternation {alternation}: assign-opt at θ = {np.round(theta, 6).tolist()}')
            pool.theta = theta
            solves0, iters0 = pool.solves, pool.newton_iters
            table = target_table(sc.target, theta, n)
            try:
                loop = await combinatorial_loop(pool, table, assignment, sc.strategy, sc.M, sc.fix_first, sc.seed)
            except Se3OptError as err:
                raise StageError('assign-opt', err) from err

            unchanged = loop.assignment == assignment or loop.best_cost >= J - sc.improve_tol
            if not unchanged:
                assignment = loop.assignment
                solutions = _solutions_for(assignment, loop.solutions)
                J = float(sum(s.cost for s in solutions))
                gradient = assemble_gradient(solutions, assignment.pairs(), target_table_derivative(sc.target, theta, n),
                                             theta.size)
                grad_norm = float(np.linalg.norm(gradient))

            trace.append(TraceRecord.construct(iteration=alternation, phase='assign-opt', theta=theta.tolist(),
                                               assignment=list(assignment.perm), J=J, grad_norm=grad_norm,
                                               solves=pool.solves - solves0, newton_iters=pool.newton_iters - iters0,
                                               converged=True))

            if unchanged and d_theta <= sc.theta_tol and grad_norm <= sc.bfgs.grad_tol:
                converged = True
                break
        else:
            logger.warning(f'No fixed point after {sc.max_alternations} alternations; returning best so far')

    logger.info(f'Run finished: A = {assignment}, θ = {np.round(theta, 6).tolist()}, J = {J:.6e}, solves = {pool.solves}')

    return RunResult.construct(theta=theta.tolist(), assignment=list(assignment.perm), J=J, grad_norm=grad_norm,
                               solutions=solutions, trace=trace, converged=converged, total_solves=pool.solves)


def pinned_assignments(n: int, fix_first: bool) -> List[Assignment]:
    """Every permutation, or every one with body 1 at slot 1"""
    if fix_first:
        return [Assignment.from_zero_based((0, *rest)) for rest in itertools.permutations(range(1, n))]

    return [Assignment.from_zero_based(p) for p in itertools.permutations(range(n))]


def _required_pairs(n: int, fix_first: bool) -> List[Tuple[int, int]]:
    if fix_first:
        return [(0, 0)] + [(i, j) for i in range(1, n) for j in range(1, n)]

    return [(i, j) for i in range(n) for j in range(n)]


async def enumerate_all(scenario: Scenario,
                        theta_grid: Sequence[float],
                        fix_first: bool = True,
                        jobs: Optional[int] = None,
                        budget: int = ENUMERATION_BUDGET) -> EnumerationTable:
    """Total cost of every assignment at every grid point

    Args:
        scenario (Scenario):
        theta_grid (Sequence[float]):
        fix_first (bool): only assignments with body 1 at slot 1
        jobs (int):
        budget (int): most solves allowed

    Raises:
        BudgetExceededError
        TransferError

    Returns:
        (EnumerationTable)"""
    n = scenario.n
    pairs = _required_pairs(n, fix_first)
    if (requested := len(theta_grid) * len(pairs)) > budget:
        raise BudgetExceededError(requested, budget)

    perms = pinned_assignments(n, fix_first)
    rows: List[EnumerationRow] = []

    async with SolverPool(scenario, jobs=jobs) as pool:
        for theta in theta_grid:
            theta = np.atleast_1d(float(theta))
            table = target_table(scenario.target, theta, n)
            solved = await pool.transfer_many([(i, j, table[i, j]) for i, j in pairs], theta)
            cost = dict(zip(pairs, (s.cost for s in solved)))
            rows.extend(EnumerationRow.construct(theta=float(theta[0]), assignment=list(a.perm),
                                                 J=float(sum(cost[p] for p in a.pairs()))) for a in perms)
            logger.debug(f'Enumerated θ = {theta[0]:.6f}: {len(perms)} assignments')

        solves = pool.solves

    return EnumerationTable.construct(rows=rows, solves=solves, fix_first=fix_first)


def histogram(table: EnumerationTable, bins: int = 20) -> List[dict]:
    """Binned totals; counts sum to the number of rows"""
    counts, edges = np.histogram(table.totals(), bins=bins)

    return [{'lo': float(lo), 'hi': float(hi), 'count': int(c)} for lo, hi, c in zip(edges[:-1], edges[1:], counts)]


async def global_optimum(scenario: Scenario,
                         theta_grid: Sequence[float],
                         jobs: Optional[int] = None,
                         budget: int = ENUMERATION_BUDGET) -> float:
    """Lowest total cost over every pinned assignment

    The enumeration minimum is refined by BFGS on its own assignment, starting from its grid point.

    Raises:
        BudgetExceededError
        StageError: the refinement failed

    Returns:
        (float)"""
    table = await enumerate_all(scenario, theta_grid, fix_first=scenario.fix_first, jobs=jobs, budget=budget)
    best = table.best()

    async with SolverPool(scenario, jobs=jobs) as pool:
        try:
            refined = await optimize_theta(pool, scenario.target, [best.theta], Assignment(perm=best.assignment),
                                           scenario.bfgs)
        except Se3OptError as err:
            raise StageError('theta-opt', err) from err

    logger.info(f'Global optimum: J = {min(best.J, refined.J):.6e} for A = ({",".join(map(str, best.assignment))})')

    return min(best.J, refined.J)


def mark_global(results: Results, reference: Optional[float] = None, tol: float = 1e-6) -> Optional[float]:
    """Flag successful runs whose J reaches the reference within tol (relative)

    Args:
        results (Results):
        reference (float): global optimum; None falls back to the best run
        tol (float):

    Returns:
        (Optional[float]): the reference used, None when every run failed"""
    if not results.success:
        return None

    best = min(r['J'] for r in results.success) if reference is None else float(reference)
    for rec in results.success:
        rec['global'] = bool(rec['J'] <= best + tol * max(1.0, abs(best)))

    return best


async def sweep_initial_assignments(scenario: Scenario,
                                    jobs: Optional[int] = None,
                                    reference: Optional[float] = None,
                                    tol: float = 1e-6) -> Results:
    """Run the hierarchy from every pinned initial assignment

    Failed runs are recorded under failure and the sweep continues.

    Args:
        scenario (Scenario):
        jobs (int): concurrent runs
        reference (float): global optimum, e.g. from global_optimum; defaults to the best run
        tol (float): relative tolerance for reaching the reference

    Returns:
        (Results)"""
    sem = asyncio.Semaphore(default_jobs(jobs))
    starts = pinned_assignments(scenario.n, scenario.fix_first)

    async def one(start: Assignment) -> dict:
        async with sem:
            sc = scenario.copy(update={'initial_assignment': list(start.perm)})
            try:
                res = await run(sc, jobs=1)
            except Se3OptError as err:
                logger.warning(f'Sweep start {start} failed: {err}')
                return {'initial': list(start.perm), 'error': str(err)}

            return {'initial': list(start.perm), 'assignment': res.assignment, 'theta': res.theta, 'J': res.J,
                    'converged': res.converged, 'solves': res.total_solves}

    results = Results()
    for rec in await asyncio.gather(*[one(s) for s in starts]):
        (results.failure if 'error' in rec else results.success).append(rec)

    best = mark_global(results, reference, tol)
    results.cleanup()
    logger.info(f'Sweep: {sum(r["global"] for r in results.success)} of {len(starts)} starts reached J = {best:.6e}'
                if best is not None else 'Sweep: every start failed')

    return results


if __name__ == '__main__':
    print(__doc__)
