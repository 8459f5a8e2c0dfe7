#!/usr/bin/env python3.9
"""SE3 Opt -> Optimal Control
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Minimum-effort transfer between fixed boundary states, solved by indirect shooting on the
initial multiplier.

Two orderings of ℝ¹² are in play:
    costate order    (x, γ, R, Π)   λ¹..λ⁴; how multipliers are stored and reported
    variation order  (ζ, δx, δΠ, δγ)   z; how A_k, Φ and the cost sensitivities are expressed

Necessary conditions of the first-order discrete flow s_{k+1} = f(s_k) + control:
    u^f_{k+1} = −Wf⁻¹ λ²_k,   u^m_{k+1} = −Wm⁻¹ λ⁴_k
    λ_k = A_{k+1}ᵀ λ_{k+1}
Linearized:
    z_{k+1} = A_k z_k + 𝒜¹² δλ_k
    δλ_k = 𝒜²¹_{k+1} z_{k+1} + A_{k+1}ᵀ δλ_{k+1}"""
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np
from loguru import logger

from se3opt.dynamics import load_jacobians
from se3opt.exceptions import IllConditionedError, IntegrationError, Se3OptError, ShootingError
from se3opt.geom3 import EYE3, hat
from se3opt.integrator import lgvi_step_first_order, retract, solve_implicit, state_difference
from se3opt.models.body import BodyParams, BoundaryConditions, ControlSample, Costate, State
from se3opt.models.config import IntegratorConfig, ShootingConfig, Weights
from se3opt.models.results import OptimalSolution

# z[i] = λ[Z_FROM_COSTATE[i]]
Z_FROM_COSTATE = np.r_[6:9, 0:3, 9:12, 3:6]
ZETA, DX, DPI, DGAMMA = slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 12)
FD_REL_STEP = 1e-6


class TransitionBlocks(NamedTuple):
    """[z_k; δλ_k] = [[phi11, phi12], [phi21, phi22]] [z_0; δλ_0], all in variation order

    The terminal block carries no costate rows (phi21, phi22 are None); there is no λ_N."""
    phi11: np.ndarray
    phi12: np.ndarray
    phi21: Optional[np.ndarray]
    phi22: Optional[np.ndarray]


class Sweep(NamedTuple):
    trajectory: List[State]
    multipliers: np.ndarray
    terminal_state: State
    controls: List[ControlSample]
    step_matrices: List[np.ndarray]


def to_variation_order(lam: np.ndarray) -> np.ndarray:
    return np.asarray(lam, dtype=float)[..., Z_FROM_COSTATE]


def to_costate_order(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., Z_FROM_COSTATE] = v

    return out


def _optimality_config(h: float, cfg: Optional[IntegratorConfig]) -> IntegratorConfig:
    if cfg is None:
        return IntegratorConfig(h=h, order='first')

    return cfg.copy(update={'h': h, 'order': 'first'})


def controls_from_costate(lam: Union[Costate, np.ndarray], w: Weights) -> ControlSample:
    """uf = −Wf⁻¹ λ², um = −Wm⁻¹ λ⁴

    Args:
        lam (Union[Costate, np.ndarray]): costate order
        w (Weights):

    Returns:
        (ControlSample)"""
    lam = lam.as_array() if isinstance(lam, Costate) else np.asarray(lam, dtype=float)

    return ControlSample.construct(uf=-w.Wf_inv @ lam[3:6], um=-w.Wm_inv @ lam[9:12])


def control_cost(controls: Sequence[ControlSample], w: Weights, h: float) -> float:
    """Σ (h/2)(ufᵀ Wf uf + umᵀ Wm um)"""
    return float(sum(0.5 * h * (u.uf @ w.Wf @ u.uf + u.um @ w.Wm @ u.um) for u in controls))


def costate_step_matrix(params: BodyParams, s_k1: State, h: float, cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Jacobian A of the first-order flow at s_k1, controls held fixed, in variation order

    The load Jacobians are evaluated at the successor pose, where the flow samples the loads.

    Args:
        params (BodyParams):
        s_k1 (State): the state the step starts from
        h (float):
        cfg (IntegratorConfig): implicit-solve tolerances

    Returns:
        (np.ndarray): 12x12"""
    cfg = _optimality_config(h, cfg)
    m = params.m
    F = solve_implicit(h * s_k1.Pi, params.Jd, cfg).F
    Ft = F.T
    fj = F @ params.Jd
    P = h * np.linalg.inv((np.trace(fj) * EYE3 - fj) @ F)

    x1 = s_k1.x + (h / m) * s_k1.gamma
    fx, fz, mx, mz = load_jacobians(params, s_k1.R @ F, x1)

    a = np.zeros((12, 12))
    a[ZETA, ZETA] = Ft
    a[ZETA, DPI] = P

    a[DX, DX] = EYE3
    a[DX, DGAMMA] = (h / m) * EYE3

    a[DPI, ZETA] = h * mz @ Ft
    a[DPI, DX] = h * mx
    a[DPI, DPI] = hat(Ft @ s_k1.Pi) @ P + Ft + h * mz @ P
    a[DPI, DGAMMA] = (h * h / m) * mx

    a[DGAMMA, ZETA] = h * fz @ Ft
    a[DGAMMA, DX] = h * fx
    a[DGAMMA, DPI] = h * fz @ P
    a[DGAMMA, DGAMMA] = EYE3 + (h * h / m) * fx

    return a


def control_coupling(w: Weights, h: float) -> np.ndarray:
    """𝒜¹² = ∂z_{k+1}/∂λ_k, variation order on both sides"""
    a12 = np.zeros((12, 12))
    a12[DPI, DPI] = -h * w.Wm_inv
    a12[DGAMMA, DGAMMA] = -h * w.Wf_inv

    return a12


def _fd_steps(params: BodyParams, s: State, h: float) -> np.ndarray:
    """Per-coordinate difference steps sized to what moves the flow by ~FD_REL_STEP"""
    pi_scale = max(float(np.linalg.norm(s.Pi)), float(np.trace(params.J)) / h)
    gamma_scale = max(float(np.linalg.norm(s.gamma)), params.m / h)

    return FD_REL_STEP * np.repeat([1.0, max(1.0, float(np.linalg.norm(s.x))), pi_scale, gamma_scale], 3)


def costate_curvature(params: BodyParams,
                      s_k1: State,
                      lam_k1: np.ndarray,
                      h: float,
                      cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """𝒜²¹ = ∂(A(s)ᵀ λ)/∂z at s_k1, λ fixed, by central differences of the analytic A

    Args:
        lam_k1 (np.ndarray): variation order

    Returns:
        (np.ndarray): 12x12"""
    steps = _fd_steps(params, s_k1, h)
    out = np.empty((12, 12))
    for j, eps in enumerate(steps):
        dz = np.zeros(12)
        dz[j] = eps
        hi = costate_step_matrix(params, retract(s_k1, dz), h, cfg).T @ lam_k1
        lo = costate_step_matrix(params, retract(s_k1, -dz), h, cfg).T @ lam_k1
        out[:, j] = (hi - lo) / (2.0 * eps)

    return out


def forward_backward_sweep(params: BodyParams,
                           bc: BoundaryConditions,
                           lam0: Union[Costate, np.ndarray],
                           w: Weights,
                           cfg: Optional[IntegratorConfig] = None) -> Sweep:
    """Propagate state and costate jointly from (s_0, λ_0) over N steps

    λ_{k+1} is recovered from λ_k = A_{k+1}ᵀ λ_{k+1}; controls are eliminated through
    controls_from_costate.

    Raises:
        IntegrationError: carries the failing step index

    Returns:
        (Sweep): multipliers (N, 12) in costate order"""
    lam0 = lam0.as_array() if isinstance(lam0, Costate) else np.asarray(lam0, dtype=float)
    cfg = _optimality_config(bc.h, cfg)
    states = [bc.initial]
    lams = [lam0]
    controls = []
    step_matrices = []

    for k in range(bc.N):
        u = controls_from_costate(lams[k], w)
        try:
            s1 = lgvi_step_first_order(params, states[k], u, cfg).next
            if not s1.is_finite():
                raise FloatingPointError('non-finite state')
        except (Se3OptError, FloatingPointError, np.linalg.LinAlgError) as err:
            raise IntegrationError(k, err) from err

        states.append(s1)
        controls.append(u)

        if k + 1 < bc.N:
            a = costate_step_matrix(params, s1, bc.h, cfg)
            step_matrices.append(a)
            lams.append(to_costate_order(np.linalg.solve(a.T, to_variation_order(lams[k]))))

    return Sweep(states, np.array(lams), states[-1], controls, step_matrices)


def transition_blocks(params: BodyParams,
                      trajectory: Sequence[State],
                      multipliers: np.ndarray,
                      w: Weights,
                      h: float,
                      cfg: Optional[IntegratorConfig] = None,
                      step_matrices: Optional[Sequence[np.ndarray]] = None) -> List[TransitionBlocks]:
    """Φ_k for k = 0..N; only the state rows at k = N

    Args:
        trajectory (Sequence[State]): states 0..N from a completed sweep
        multipliers (np.ndarray): (N, 12), costate order
        step_matrices (Sequence[np.ndarray]): A_1..A_{N−1} already built by the sweep

    Returns:
        (List[TransitionBlocks])"""
    n = len(trajectory) - 1
    lam_z = [to_variation_order(lam) for lam in multipliers]
    a12 = control_coupling(w, h)
    eye, zero = np.eye(12), np.zeros((12, 12))
    blocks = [TransitionBlocks(eye, zero, zero, eye)]
    step_matrices = list(step_matrices or [])

    def step_matrix(k: int) -> np.ndarray:
        if 1 <= k <= len(step_matrices):
            return step_matrices[k - 1]

        return costate_step_matrix(params, trajectory[k], h, cfg)

    a_k = step_matrix(0)

    for k in range(n):
        b = blocks[-1]
        phi11 = a_k @ b.phi11 + a12 @ b.phi21
        phi12 = a_k @ b.phi12 + a12 @ b.phi22

        if k + 1 == n:
            blocks.append(TransitionBlocks(phi11, phi12, None, None))
            break

        a_k1 = step_matrix(k + 1)
        a21 = costate_curvature(params, trajectory[k + 1], lam_z[k + 1], h, cfg)
        phi21 = np.linalg.solve(a_k1.T, b.phi21 - a21 @ phi11)
        phi22 = np.linalg.solve(a_k1.T, b.phi22 - a21 @ phi12)

        blocks.append(TransitionBlocks(phi11, phi12, phi21, phi22))
        a_k = a_k1

    return blocks


def _checked_inverse(phi12: np.ndarray, max_condition: float, residual: float = float('nan'), iterations: int = 0) -> np.ndarray:
    cond = float(np.linalg.cond(phi12))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedError(cond, residual, iterations)

    return np.linalg.inv(phi12)


def _sensitivities(multipliers: np.ndarray,
                   blocks: Sequence[TransitionBlocks],
                   w: Weights,
                   h: float,
                   max_condition: float) -> tuple:
    """δc = h Σ λ_kᵀ W δλ_k with δλ_0 = (Φ¹²_N)⁻¹(z_N − Φ¹¹_N z_0)"""
    n = len(multipliers)
    inv12 = _checked_inverse(blocks[n].phi12, max_condition)
    wz = np.zeros((12, 12))
    wz[DPI, DPI] = w.Wm_inv
    wz[DGAMMA, DGAMMA] = w.Wf_inv

    dz0 = np.zeros(12)
    dzn = np.zeros(12)
    for k in range(n):
        row = h * to_variation_order(multipliers[k]) @ wz
        dz0 += row @ (blocks[k].phi21 - blocks[k].phi22 @ inv12 @ blocks[n].phi11)
        dzn += row @ blocks[k].phi22 @ inv12

    return dz0, dzn


def cost_sensitivities(solution: OptimalSolution,
                       blocks: Sequence[TransitionBlocks],
                       w: Weights,
                       max_condition: float = 1e12) -> tuple:
    """Sensitivity of the optimal cost to the initial state and to the terminal boundary condition

    Args:
        solution (OptimalSolution):
        blocks (Sequence[TransitionBlocks]): from transition_blocks on the converged sweep
        w (Weights):
        max_condition (float):

    Raises:
        IllConditionedError

    Returns:
        (tuple): dcost_dz0, dcost_dzN; 12-vectors in variation order"""
    return _sensitivities(solution.multipliers, blocks, w, solution.h, max_condition)


def multiplier_cost(multipliers: np.ndarray, w: Weights, h: float) -> float:
    """(h/2) Σ λᵀ W λ with W = diag(0, Wf⁻¹, 0, Wm⁻¹) in costate order"""
    wc = w.costate_weight
    return float(0.5 * h * np.einsum('ki,ij,kj->', multipliers, wc, multipliers))


def shoot(params: BodyParams,
          bc: BoundaryConditions,
          w: Weights,
          lam0_guess: Optional[Union[Costate, np.ndarray]] = None,
          tol: Optional[float] = None,
          max_outer: Optional[int] = None,
          cfg: Optional[ShootingConfig] = None,
          integrator: Optional[IntegratorConfig] = None) -> OptimalSolution:
    """Newton-Armijo iteration on λ_0 until s_N matches the desired state

    Args:
        params (BodyParams):
        bc (BoundaryConditions):
        w (Weights):
        lam0_guess (Union[Costate, np.ndarray]): costate order; zero when absent
        tol (float): overrides cfg.tol
        max_outer (int): overrides cfg.max_outer
        cfg (ShootingConfig):
        integrator (IntegratorConfig): implicit-solve tolerances

    Raises:
        IllConditionedError
        ShootingError
        IntegrationError

    Returns:
        (OptimalSolution)"""
    cfg = cfg or ShootingConfig()
    tol = cfg.tol if tol is None else tol
    max_outer = cfg.max_outer if max_outer is None else max_outer
    if lam0_guess is None:
        lam0 = np.zeros(12)
    else:
        lam0 = lam0_guess.as_array() if isinstance(lam0_guess, Costate) else np.asarray(lam0_guess, dtype=float)

    sweep = forward_backward_sweep(params, bc, lam0, w, integrator)
    res_vec = state_difference(sweep.terminal_state, bc.desired)
    res = float(np.linalg.norm(res_vec))
    iters = 0

    while res > tol:
        if iters >= max_outer:
            raise ShootingError(res, iters)

        blocks = transition_blocks(params, sweep.trajectory, sweep.multipliers, w, bc.h, integrator, sweep.step_matrices)
        inv12 = _checked_inverse(blocks[-1].phi12, cfg.max_condition, res, iters)
        direction = to_costate_order(inv12 @ -res_vec)

        alpha = 1.0
        while True:
            trial = lam0 + alpha * direction
            try:
                t_sweep = forward_backward_sweep(params, bc, trial, w, integrator)
                t_vec = state_difference(t_sweep.terminal_state, bc.desired)
                t_res = float(np.linalg.norm(t_vec))
            except Se3OptError as err:
                logger.debug(f'Trial step α={alpha:.3e} failed: {err}')
                t_res = float('inf')

            logger.debug(f'Newton {iters}: α={alpha:.3e}, residual {res:.3e} -> {t_res:.3e}')
            if t_res <= (1.0 - cfg.armijo_c * alpha) * res:
                break

            alpha *= cfg.backtrack
            if alpha < cfg.min_step:
                raise ShootingError(res, iters, reason='line search failed')

        lam0, sweep, res_vec, res = trial, t_sweep, t_vec, t_res
        iters += 1

    blocks = transition_blocks(params, sweep.trajectory, sweep.multipliers, w, bc.h, integrator, sweep.step_matrices)
    dz0, dzn = _sensitivities(sweep.multipliers, blocks, w, bc.h, cfg.max_condition)
    cost = control_cost(sweep.controls, w, bc.h)
    logger.debug(f'Shooting converged in {iters} iterations; cost={cost:.6e}, residual={res:.3e}')

    return OptimalSolution.construct(trajectory=sweep.trajectory,
                                     controls=sweep.controls,
                                     multipliers=sweep.multipliers,
                                     cost=cost,
                                     dcost_dz0=dz0,
                                     dcost_dzN=dzn,
                                     terminal_residual=res,
                                     newton_iters=iters,
                                     h=bc.h,
                                     phi11_N=blocks[-1].phi11,
                                     phi12_N=blocks[-1].phi12)


def warm_start_guess(lam0: np.ndarray, phi12_N: np.ndarray, old_desired: State, new_desired: State) -> np.ndarray:
    """λ_0 + (Φ¹²_N)⁻¹(new ⊖ old), costate order; λ_0 itself when Φ¹²_N is singular"""
    try:
        step = np.linalg.solve(phi12_N, state_difference(new_desired, old_desired))
    except np.linalg.LinAlgError:
        return np.array(lam0, dtype=float)

    return np.asarray(lam0, dtype=float) + to_costate_order(step)


if __name__ == '__main__':
    print(__doc__)
