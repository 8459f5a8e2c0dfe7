#!/usr/bin/env python3.9
"""SE3 Opt -> Integrator
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Discrete-time propagation on T*SE(3).

    second order (Lie group variational integrator)
        x_{k+1} = x_k + (h/m) γ_k + (h²/2m)(f_k + uf_k)
        h S(Π_k + (h/2)(M_k + um_k)) = F_k Jd − Jd F_kᵀ
        R_{k+1} = R_k F_k
        γ_{k+1} = γ_k + (h/2)(f_k + uf_k) + (h/2)(f_{k+1} + uf_{k+1})
        Π_{k+1} = F_kᵀ Π_k + (h/2) F_kᵀ (M_k + um_k) + (h/2)(M_{k+1} + um_{k+1})

    first order (the form the optimal-control necessary conditions are built on)
        x_{k+1} = x_k + (h/m) γ_k
        h S(Π_k) = F_k Jd − Jd F_kᵀ
        R_{k+1} = R_k F_k
        γ_{k+1} = γ_k + h (f_{k+1} + uf_{k+1})
        Π_{k+1} = F_kᵀ Π_k + h (M_{k+1} + um_{k+1})

Controls are node-indexed (0..N); a second-order step consumes the pair (u_k, u_{k+1})."""
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from se3opt.dynamics import loads
from se3opt.exceptions import GeometryError, ImplicitSolveError, IntegrationError, Se3OptError
from se3opt.geom3 import EYE3, exp_so3, hat, log_so3, validate_rotation, vee
from se3opt.models.body import BodyParams, ControlSample, State
from se3opt.models.config import IntegratorConfig
from se3opt.models.results import StepResult, Trajectory

FIRST, SECOND = 'first', 'second'


class ImplicitSolution(NamedTuple):
    F: np.ndarray
    g: np.ndarray
    iterations: int
    residual: float


def _implicit_terms(g: np.ndarray, j: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """vee(exp(g) Jd − Jd exp(g)ᵀ) and its Jacobian w.r.t. g, with J = tr(Jd) I − Jd

    vee(...) = (sinθ/θ) J g + ((1 − cosθ)/θ²) g × J g"""
    theta2 = float(g @ g)
    theta = math.sqrt(theta2)
    if theta < 1e-3:
        alpha = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        beta = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
        d_alpha = -1.0 / 3.0 + theta2 / 30.0
        d_beta = -1.0 / 12.0 + theta2 / 180.0
    else:
        s, c = math.sin(theta), math.cos(theta)
        alpha = s / theta
        beta = (1.0 - c) / theta2
        d_alpha = (theta * c - s) / (theta2 * theta)
        d_beta = (theta * s - 2.0 * (1.0 - c)) / (theta2 * theta2)

    jg = j @ g
    gxjg = np.cross(g, jg)
    value = alpha * jg + beta * gxjg
    jac = alpha * j + d_alpha * np.outer(jg, g) + d_beta * np.outer(gxjg, g) + beta * (hat(g) @ j - hat(jg))

    return value, jac


def implicit_residual(F: np.ndarray, a: np.ndarray, Jd: np.ndarray) -> float:
    """‖vee(F Jd − Jd Fᵀ) − a‖"""
    return float(np.linalg.norm(vee(F @ Jd - Jd @ F.T) - a))


def solve_implicit(a: np.ndarray, Jd: np.ndarray, cfg: IntegratorConfig) -> ImplicitSolution:
    """Newton iteration in exponential coordinates for S(a) = F Jd − Jd Fᵀ

    Args:
        a (np.ndarray): h (Π_k + (h/2)(M_k + um_k)), or h Π_k for the first-order step
        Jd (np.ndarray): nonstandard inertia
        cfg (IntegratorConfig):

    Raises:
        ImplicitSolveError

    Returns:
        (ImplicitSolution)"""
    j = np.trace(Jd) * EYE3 - Jd
    g = np.linalg.solve(j, a)
    value, jac = _implicit_terms(g, j)
    res = float(np.linalg.norm(value - a))
    iters = 0

    while res > cfg.implicit_tol and iters < cfg.implicit_max_iters:
        g = g - np.linalg.solve(jac, value - a)
        value, jac = _implicit_terms(g, j)
        res = float(np.linalg.norm(value - a))
        iters += 1

    if res > cfg.implicit_tol:
        raise ImplicitSolveError(res, iters)

    # one polishing step brings g to round-off; kept only if it does not hurt
    if res > 0.0:
        g_p = g - np.linalg.solve(jac, value - a)
        value_p, _ = _implicit_terms(g_p, j)
        if (res_p := float(np.linalg.norm(value_p - a))) <= res:
            g, res = g_p, res_p

    F = exp_so3(g)

    return ImplicitSolution(F, g, iters, implicit_residual(F, a, Jd))


def solve_implicit_F(a: np.ndarray, Jd: np.ndarray, cfg: IntegratorConfig) -> np.ndarray:
    """Relative attitude F with h S(·) = F Jd − Jd Fᵀ

    Raises:
        ImplicitSolveError

    Returns:
        (np.ndarray): F"""
    return solve_implicit(np.asarray(a, dtype=float), Jd, cfg).F


def _second_order(params: BodyParams,
                  s: State,
                  loads_k: Tuple[np.ndarray, np.ndarray],
                  u_k: ControlSample,
                  u_k1: ControlSample,
                  cfg: IntegratorConfig) -> Tuple[StepResult, Tuple[np.ndarray, np.ndarray]]:
    h, m = cfg.h, params.m
    f_k, m_k = loads_k
    ft_k = f_k + u_k.uf
    mt_k = m_k + u_k.um

    x1 = s.x + (h / m) * s.gamma + (h * h / (2.0 * m)) * ft_k
    sol = solve_implicit(h * (s.Pi + 0.5 * h * mt_k), params.Jd, cfg)
    r1 = s.R @ sol.F
    f_k1, m_k1 = loads(params, r1, x1)
    gamma1 = s.gamma + 0.5 * h * ft_k + 0.5 * h * (f_k1 + u_k1.uf)
    pi1 = sol.F.T @ (s.Pi + 0.5 * h * mt_k) + 0.5 * h * (m_k1 + u_k1.um)

    nxt = State.construct(R=r1, x=x1, Pi=pi1, gamma=gamma1)
    return StepResult.construct(next=nxt, F=sol.F, implicit_iters=sol.iterations, implicit_residual=sol.residual), (f_k1, m_k1)


def lgvi_step(params: BodyParams, s: State, u_k: ControlSample, u_k1: ControlSample, cfg: IntegratorConfig) -> StepResult:
    """Second-order Lie group variational integrator step

    Args:
        params (BodyParams):
        s (State): state at node k
        u_k (ControlSample): control at node k
        u_k1 (ControlSample): control at node k + 1
        cfg (IntegratorConfig):

    Raises:
        ImplicitSolveError
        PotentialSingularityError

    Returns:
        (StepResult)"""
    return _second_order(params, s, loads(params, s.R, s.x), u_k, u_k1, cfg)[0]


def lgvi_step_first_order(params: BodyParams, s: State, u_k1: ControlSample, cfg: IntegratorConfig) -> StepResult:
    """First-order variant; the control enters at node k + 1 only

    Raises:
        ImplicitSolveError
        PotentialSingularityError

    Returns:
        (StepResult)"""
    h, m = cfg.h, params.m
    x1 = s.x + (h / m) * s.gamma
    sol = solve_implicit(h * s.Pi, params.Jd, cfg)
    r1 = s.R @ sol.F
    f_k1, m_k1 = loads(params, r1, x1)
    gamma1 = s.gamma + h * (f_k1 + u_k1.uf)
    pi1 = sol.F.T @ s.Pi + h * (m_k1 + u_k1.um)

    nxt = State.construct(R=r1, x=x1, Pi=pi1, gamma=gamma1)
    return StepResult.construct(next=nxt, F=sol.F, implicit_iters=sol.iterations, implicit_residual=sol.residual)


def _recheck(r: np.ndarray, step: int) -> None:
    try:
        validate_rotation(r)
    except GeometryError as ge:
        raise IntegrationError(step, ge) from ge


def propagate(params: BodyParams,
              s0: State,
              controls: Sequence[ControlSample],
              cfg: IntegratorConfig) -> Trajectory:
    """Propagate N = len(controls) − 1 steps; controls are node-indexed 0..N

    An empty control sequence (or a single node) yields the trajectory [s0].

    Raises:
        IntegrationError: carries the failing step index

    Returns:
        (Trajectory)"""
    controls = list(controls)
    n_steps = max(len(controls) - 1, 0)
    states: List[State] = [s0]
    s = s0
    loads_k: Optional[Tuple[np.ndarray, np.ndarray]] = None

    for k in range(n_steps):
        try:
            if cfg.order == SECOND:
                if loads_k is None:
                    loads_k = loads(params, s.R, s.x)
                step, loads_k = _second_order(params, s, loads_k, controls[k], controls[k + 1], cfg)
            else:
                step = lgvi_step_first_order(params, s, controls[k + 1], cfg)
        except Se3OptError as err:
            raise IntegrationError(k, err) from err

        s = step.next
        states.append(s)

        if (k + 1) % cfg.orthonormality_recheck_period == 0:
            _recheck(s.R, k + 1)

    logger.debug(f'Propagated {n_steps} {cfg.order}-order steps')

    return Trajectory.construct(states=states, controls=controls, h=cfg.h)


def _rk4_rates(params: BodyParams, y: np.ndarray, u: ControlSample) -> np.ndarray:
    r = y[:9].reshape(3, 3)
    x, pi, gamma = y[9:12], y[12:15], y[15:18]
    f, m = loads(params, r, x)
    omega = params.J_inv @ pi

    return np.concatenate([(r @ hat(omega)).reshape(-1),
                           gamma / params.m,
                           np.cross(pi, omega) + m + u.um,
                           f + u.uf])


def rk4_reference_step(params: BodyParams, s: State, u: ControlSample, cfg: IntegratorConfig) -> State:
    """Classical fourth-order Runge-Kutta step treating R as nine raw components

    The result is not projected back onto SO(3).

    Returns:
        (State)"""
    h = cfg.h
    y = np.concatenate([s.R.reshape(-1), s.x, s.Pi, s.gamma])
    k1 = _rk4_rates(params, y, u)
    k2 = _rk4_rates(params, y + 0.5 * h * k1, u)
    k3 = _rk4_rates(params, y + 0.5 * h * k2, u)
    k4 = _rk4_rates(params, y + h * k3, u)
    y1 = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return State.construct(R=y1[:9].reshape(3, 3), x=y1[9:12], Pi=y1[12:15], gamma=y1[15:18])


def propagate_rk4(params: BodyParams, s0: State, controls: Sequence[ControlSample], cfg: IntegratorConfig) -> Trajectory:
    """Reference trajectory; the control at node k is held over step k"""
    controls = list(controls)
    states = [s0]
    for k in range(max(len(controls) - 1, 0)):
        states.append(rk4_reference_step(params, states[-1], controls[k], cfg))

    return Trajectory.construct(states=states, controls=controls, h=cfg.h)


def state_difference(a: State, b: State) -> np.ndarray:
    """a ⊖ b in variation coordinates (ζ, δx, δΠ, δγ); ζ = log(R_bᵀ R_a)"""
    return np.concatenate([log_so3(b.R.T @ a.R), a.x - b.x, a.Pi - b.Pi, a.gamma - b.gamma])


def retract(s: State, z: np.ndarray) -> State:
    """s ⊕ z = (R exp(ζ), x + δx, Π + δΠ, γ + δγ)"""
    return State.construct(R=s.R @ exp_so3(z[0:3]), x=s.x + z[3:6], Pi=s.Pi + z[6:9], gamma=s.gamma + z[9:12])


if __name__ == '__main__':
    print(__doc__)
