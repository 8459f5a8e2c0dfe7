#!/usr/bin/env python3.9
"""SE3 Opt -> Parameter Optimization
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Target-parameter optimization for a fixed assignment.

Bodies are spread uniformly on the target circle
    x(θ) = x∘ + r∘ cos θ e₁ + r∘ sin θ e₂,   e₁ = x∘/‖x∘‖,   e₂ = e₁ × n∘ (normalized)
and ∂J/∂θ = Σ_i (∂cⁱ/∂x_N)(∂x_d^{A_i}/∂θ), the position block of each terminal sensitivity."""
from typing import Awaitable, Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from se3opt.exceptions import GeometryError, Se3OptError
from se3opt.models.assignment import Assignment
from se3opt.models.config import BfgsConfig, TargetCircle
from se3opt.models.results import OptimalSolution
from se3opt.pool import SolverPool
from se3opt.utils import TWO_PI, wrap_angle

FRAME_TOL = 1e-9

Objective = Callable[[np.ndarray], Awaitable[Tuple[float, np.ndarray, object]]]


class Evaluation(NamedTuple):
    J: float
    gradient: np.ndarray
    solutions: List[OptimalSolution]
    newton_iters: int


class BfgsStep(NamedTuple):
    theta: np.ndarray
    J: float
    grad_norm: float


class BfgsResult(NamedTuple):
    theta: np.ndarray
    J: float
    gradient: np.ndarray
    converged: bool
    trace: List[BfgsStep]
    extra: object
    evaluations: int


class ThetaResult(NamedTuple):
    theta: np.ndarray
    J: float
    grad_norm: float
    trace: List[BfgsStep]
    converged: bool
    solutions: List[OptimalSolution]
    newton_iters: int
    solves: int


def circle_frame(circle: TargetCircle) -> Tuple[np.ndarray, np.ndarray]:
    """(e₁, e₂)

    Raises:
        GeometryError: x∘ at the origin or n∘ parallel to x∘"""
    norm = float(np.linalg.norm(circle.center))
    if norm < FRAME_TOL:
        raise GeometryError('target center at the origin leaves e1 undefined')

    e1 = circle.center / norm
    e2 = np.cross(e1, circle.normal)
    if (n2 := float(np.linalg.norm(e2))) < FRAME_TOL:
        raise GeometryError(f'degenerate target frame; ‖e1 × n‖ = {n2:.3e}')

    return e1, e2 / n2


def body_angles(theta1: float, assignment: Assignment, n: int, convention: str = 'slot') -> np.ndarray:
    """Angle of every body on the circle

    slot:    θ¹ + (2π/n)(A_i − 1)
    printed: θ¹ + (2π/n)(A_i − i)"""
    a = np.asarray(assignment.perm, dtype=float)
    offset = 1.0 if convention == 'slot' else np.arange(1, n + 1, dtype=float)

    return float(theta1) + (TWO_PI / n) * (a - offset)


def _angle_table(theta1: float, n: int, convention: str) -> np.ndarray:
    """(n, n) angles of body i when sent to slot j"""
    slots = np.arange(1, n + 1, dtype=float)[None, :]
    offset = 1.0 if convention == 'slot' else np.arange(1, n + 1, dtype=float)[:, None]

    return float(theta1) + (TWO_PI / n) * (slots - offset) * np.ones((n, 1))


def target_table(circle: TargetCircle, theta: np.ndarray, n: int) -> np.ndarray:
    """(n, n, 3) desired positions; T[i, j] for body i at slot j"""
    e1, e2 = circle_frame(circle)
    ang = _angle_table(np.atleast_1d(theta)[0], n, circle.convention)

    return circle.center + circle.radius * (np.cos(ang)[..., None] * e1 + np.sin(ang)[..., None] * e2)


def target_table_derivative(circle: TargetCircle, theta: np.ndarray, n: int) -> np.ndarray:
    """∂T/∂θ¹ = r∘(−sin θ e₁ + cos θ e₂)"""
    e1, e2 = circle_frame(circle)
    ang = _angle_table(np.atleast_1d(theta)[0], n, circle.convention)

    return circle.radius * (-np.sin(ang)[..., None] * e1 + np.cos(ang)[..., None] * e2)


def slot_positions(circle: TargetCircle, theta1: float, assignment: Assignment, n: int) -> List[np.ndarray]:
    """Desired position of every body under the assignment

    Raises:
        GeometryError"""
    table = target_table(circle, np.atleast_1d(theta1), n)

    return [table[i, j].copy() for i, j in assignment.pairs()]


def assemble_gradient(solutions: Sequence[OptimalSolution],
                      pairs: Sequence[Tuple[int, int]],
                      d_table: np.ndarray,
                      size: int = 1) -> np.ndarray:
    """Σ_i (position block of dcost_dzN) · ∂x_d/∂θ¹"""
    gradient = np.zeros(size)
    gradient[0] = sum(float(s.dcost_dzN[3:6] @ d_table[i, j]) for s, (i, j) in zip(solutions, pairs))

    return gradient


async def formation_cost_and_gradient(pool: SolverPool,
                                      circle: TargetCircle,
                                      theta: np.ndarray,
                                      assignment: Assignment) -> Evaluation:
    """Total cost and its θ-gradient; the n transfers are solved in parallel

    Raises:
        TransferError

    Returns:
        (Evaluation)"""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = assignment.n
    table = target_table(circle, theta, n)
    d_table = target_table_derivative(circle, theta, n)
    pairs = assignment.pairs()

    solutions = await pool.transfer_many([(i, j, table[i, j]) for i, j in pairs], theta)

    J = float(sum(s.cost for s in solutions))
    gradient = assemble_gradient(solutions, pairs, d_table, theta.size)

    return Evaluation(J, gradient, solutions, sum(s.newton_iters for s in solutions))


async def bfgs_minimize(objective: Objective, theta0: Sequence[float], cfg: BfgsConfig) -> BfgsResult:
    """Quasi-Newton descent with Armijo backtracking

    Args:
        objective (Objective): coroutine θ -> (J, ∂J/∂θ, extra)
        theta0 (Sequence[float]):
        cfg (BfgsConfig):

    Returns:
        (BfgsResult): best accepted iterate; converged is False on a line-search failure
                      or when max_iters runs out"""
    wrap = wrap_angle if cfg.periodic else (lambda t: np.asarray(t, dtype=float))
    theta = np.atleast_1d(wrap(np.asarray(theta0, dtype=float)))
    J, g, extra = await objective(theta)
    evaluations = 1
    B = cfg.initial_hessian * np.eye(theta.size)
    trace = [BfgsStep(theta.copy(), J, float(np.linalg.norm(g)))]
    converged = False

    for it in range(cfg.max_iters + 1):
        if np.linalg.norm(g) <= cfg.grad_tol:
            converged = True
            break

        if it == cfg.max_iters:
            break

        D = -np.linalg.solve(B, g)
        if g @ D >= 0.0:
            logger.warning('BFGS direction is not a descent direction; resetting the Hessian')
            B = cfg.initial_hessian * np.eye(theta.size)
            D = -g / cfg.initial_hessian

        if (dn := float(np.linalg.norm(D))) > cfg.max_step:
            D *= cfg.max_step / dn

        slope = float(g @ D)
        alpha = 1.0
        for _ in range(cfg.max_backtracks):
            trial = theta + alpha * D
            try:
                Jt, gt, et = await objective(np.atleast_1d(wrap(trial)))
                evaluations += 1
            except Se3OptError as err:
                logger.debug(f'BFGS trial α={alpha:.3e} failed: {err}')
                Jt = np.inf

            logger.debug(f'BFGS {it}: α={alpha:.3e}, J {J:.9e} -> {Jt:.9e}')
            if Jt <= J + cfg.armijo_c * alpha * slope:
                break

            alpha *= cfg.backtrack
        else:
            logger.warning(f'BFGS line search failed at θ={theta.tolist()}; returning best so far')
            break

        s = trial - theta
        y = gt - g
        if (ys := float(y @ s)) > cfg.curvature_eps:
            Bs = B @ s
            B = B + np.outer(y, y) / ys - np.outer(Bs, Bs) / float(s @ Bs)
        else:
            logger.warning(f'BFGS curvature yᵀs={ys:.3e}; Hessian update skipped')

        theta, J, g, extra = np.atleast_1d(wrap(trial)), Jt, gt, et
        trace.append(BfgsStep(theta.copy(), J, float(np.linalg.norm(g))))

    return BfgsResult(theta, J, g, converged, trace, extra, evaluations)


async def optimize_theta(pool: SolverPool,
                         circle: TargetCircle,
                         theta0: Sequence[float],
                         assignment: Assignment,
                         cfg: Optional[BfgsConfig] = None) -> ThetaResult:
    """Optimal target parameter for a fixed assignment

    Args:
        pool (SolverPool): inner solves and the warm-start cache
        circle (TargetCircle):
        theta0 (Sequence[float]):
        assignment (Assignment):
        cfg (BfgsConfig):

    Raises:
        TransferError: the first evaluation failed

    Returns:
        (ThetaResult)"""
    cfg = cfg or BfgsConfig()
    solves0, iters0 = pool.solves, pool.newton_iters

    async def objective(theta: np.ndarray) -> Tuple[float, np.ndarray, List[OptimalSolution]]:
        ev = await formation_cost_and_gradient(pool, circle, theta, assignment)
        return ev.J, ev.gradient, ev.solutions

    res = await bfgs_minimize(objective, theta0, cfg)
    grad_norm = float(np.linalg.norm(res.gradient))
    logger.info(f'θ = {np.round(res.theta, 6).tolist()}, J = {res.J:.6e}, ‖∂J/∂θ‖ = {grad_norm:.3e} for A = {assignment}')

    return ThetaResult(res.theta, res.J, grad_norm, res.trace, res.converged, res.extra,
                       pool.newton_iters - iters0, pool.solves - solves0)


if __name__ == '__main__':
    print(__doc__)
