#!/usr/bin/env python3.9
"""SE3 Opt -> Assign
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Exact linear assignment plus the sensitivity-driven loop that proposes assignments from an
extrapolated cost matrix and only solves the transfers it needs.

    (i)   solve the transfers of the initial assignment
    (ii)  estimate the cost matrix with first-order extrapolation
    (iii) propose the optimum of the estimate and solve its missing transfers
    (iv)  keep the best assignment whose entries are all exact
    (v)   refit second-order row models around the best assignment and re-estimate
    (vi)  stop once the same proposal comes back M times in a row"""
import asyncio
import itertools
from abc import ABC, abstractmethod
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.optimize import linear_sum_assignment

from se3opt.exceptions import ConfigError, InvalidOptionError
from se3opt.models.assignment import Assignment, CostEntry, CostMatrix, EntryStatus, LoopRecord
from se3opt.models.config import SensitivityStrategy

BRUTE_FORCE_MAX_N = 8
ROW, COLUMN = 'row', 'column'


class ExactSolve(NamedTuple):
    """What a solved transfer contributes to the cost matrix"""
    cost: float
    terminal_sens: np.ndarray
    initial_sens: np.ndarray
    newton_iters: int = 0
    solution: Optional[object] = None


class TransferOracle(ABC):
    """Source of exact transfer costs; body and slot indices are 0-based"""

    @abstractmethod
    async def solve(self, body: int, slot: int, target: np.ndarray) -> ExactSolve:
        ...

    @abstractmethod
    def initial_difference(self, body: int, other: int) -> np.ndarray:
        """s0_body ⊖ s0_other in variation order"""


class LoopResult(NamedTuple):
    assignment: Assignment
    cost_matrix: CostMatrix
    solves: int
    best_cost: float
    records: List[LoopRecord]
    solutions: Dict[Tuple[int, int], ExactSolve]


def _finite(cost: np.ndarray) -> np.ndarray:
    """Replace missing entries by a value no optimal assignment would pick over a finite one"""
    c = np.array(cost, dtype=float)
    bad = ~np.isfinite(c)
    if bad.any():
        finite = np.abs(c[~bad])
        c[bad] = (c.shape[0] + 1) * ((finite.max() if finite.size else 0.0) + 1.0)

    return c


def hungarian(cost: np.ndarray) -> Tuple[int, ...]:
    """Shortest augmenting path with row/column potentials, O(n³)

    Args:
        cost (np.ndarray): square, finite

    Returns:
        (Tuple[int, ...]): column assigned to each row"""
    c = np.asarray(cost, dtype=float)
    n = c.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)  # p[j]: row matched to column j, 1-based, 0 = free
    way = np.zeros(n + 1, dtype=int)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)

        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j

            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta

            j0 = j1
            if p[j0] == 0:
                break

        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    cols = [0] * n
    for j in range(1, n + 1):
        cols[p[j] - 1] = j - 1

    return tuple(cols)


def scipy_lsa(cost: np.ndarray) -> Tuple[int, ...]:
    """scipy's Jonker-Volgenant solver"""
    return tuple(int(j) for j in linear_sum_assignment(np.asarray(cost, dtype=float))[1])


def brute_force(cost: np.ndarray) -> Tuple[int, ...]:
    """Compare every permutation; n ≤ 8"""
    c = np.asarray(cost, dtype=float)
    n = c.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f'brute force is limited to n ≤ {BRUTE_FORCE_MAX_N}; got {n}')

    rows = np.arange(n)
    return min(itertools.permutations(range(n)), key=lambda perm: c[rows, list(perm)].sum())


SOLVERS = {'hungarian': hungarian, 'brute': brute_force, 'scipy': scipy_lsa}


def solve_assignment_exact(C: Union[CostMatrix, np.ndarray],
                           fix_first: bool = False,
                           method: str = 'hungarian') -> Tuple[Assignment, float]:
    """Optimal permutation of a fully valued cost matrix

    Args:
        C (Union[CostMatrix, np.ndarray]):
        fix_first (bool): pin body 1 to slot 1
        method (str): 'hungarian' | 'brute' | 'scipy'

    Returns:
        (Tuple[Assignment, float]): assignment, total cost"""
    if method not in SOLVERS:
        raise InvalidOptionError(method, list(SOLVERS))

    values = C.values() if isinstance(C, CostMatrix) else np.asarray(C, dtype=float)
    solver = SOLVERS[method]
    c = _finite(values)

    if fix_first:
        cols = (0, *(j + 1 for j in solver(c[1:, 1:]))) if len(c) > 1 else (0,)
    else:
        cols = solver(c)

    total = float(sum(values[i, j] for i, j in enumerate(cols)))

    return Assignment.from_zero_based(cols), total


def best_exact_assignment(C: CostMatrix, fix_first: bool = False) -> Optional[Tuple[Assignment, float]]:
    """Optimum over assignments whose n entries are all Exact; None if there is none"""
    values = np.where(C.exact_mask(), C.values(), np.inf)
    assignment, total = solve_assignment_exact(values, fix_first)
    if not all(C[i, j].is_exact for i, j in assignment.pairs()):
        return None

    return assignment, total


def approximate_entry(anchor: CostEntry, target_x: np.ndarray) -> float:
    """c + (∂c/∂x_d) Δ + ½ Δᵀ H Δ with Δ = target_x − anchor.target; H = 0 until fitted"""
    delta = np.asarray(target_x, dtype=float) - anchor.target
    value = anchor.value + anchor.terminal_sens @ delta
    if anchor.hessian_est is not None:
        value += 0.5 * delta @ anchor.hessian_est @ delta

    return float(value)


def approximate_column_entry(anchor: CostEntry, dz0: np.ndarray) -> float:
    """c + (∂c/∂z_0)(s0_i ⊖ s0_k)"""
    return float(anchor.value + anchor.initial_sens @ dz0)


def fit_hessian(anchor: CostEntry, others: Sequence[CostEntry]) -> np.ndarray:
    """Symmetric H from the value and gradient of other exact entries in the anchor's row

    Every other entry l contributes
        ½ ΔᵀHΔ = c_l − c − sᵀΔ
        H Δ = s_l − s
    over the six free elements; min-norm when under-determined, least squares otherwise.

    Returns:
        (np.ndarray): 3x3"""
    idx = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    rows, rhs = [], []

    for other in others:
        d = other.target - anchor.target
        if not np.any(d):
            continue

        quad = np.zeros(6)
        for col, (a, b) in enumerate(idx):
            quad[col] = 0.5 * d[a] * d[b] * (1.0 if a == b else 2.0)
        rows.append(quad)
        rhs.append(other.value - anchor.value - anchor.terminal_sens @ d)

        for r in range(3):
            lin = np.zeros(6)
            for col, (a, b) in enumerate(idx):
                if a == r:
                    lin[col] += d[b]
                elif b == r:
                    lin[col] += d[a]
            rows.append(lin)
            rhs.append(other.terminal_sens[r] - anchor.terminal_sens[r])

    if not rows:
        return np.zeros((3, 3))

    h = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)[0]
    H = np.zeros((3, 3))
    for col, (a, b) in enumerate(idx):
        H[a, b] = H[b, a] = h[col]

    return H


def target_table(targets: Union[Sequence[np.ndarray], np.ndarray]) -> np.ndarray:
    """(n, n, 3) table; T[i, j] is where body i goes when sent to slot j

    A (n, 3) list of slot positions is shared by every body."""
    t = np.asarray(targets, dtype=float)
    if t.ndim == 2:
        return np.broadcast_to(t, (len(t), len(t), 3))

    return t


def _choose(strategy: SensitivityStrategy,
            direction: str,
            has_row: bool,
            has_col: bool,
            row_count: int,
            col_count: int,
            rng: np.random.Generator) -> Optional[str]:
    if strategy == SensitivityStrategy.TERM:
        return ROW if has_row else None

    if strategy == SensitivityStrategy.INIT:
        return COLUMN if has_col else None

    if not (has_row and has_col):
        return ROW if has_row else COLUMN if has_col else None

    if strategy == SensitivityStrategy.RAND:
        return ROW if rng.random() < 0.5 else COLUMN

    if strategy == SensitivityStrategy.COMP:
        if row_count != col_count:
            return ROW if row_count > col_count else COLUMN

        return ROW if rng.random() < 0.5 else COLUMN

    return direction


def populate_matrix(C: CostMatrix,
                    strategy: SensitivityStrategy,
                    targets: Sequence[np.ndarray],
                    initial_difference: Callable[[int, int], np.ndarray],
                    anchors: Optional[Assignment] = None,
                    direction: str = ROW,
                    rng: Optional[np.random.Generator] = None,
                    second_order: bool = False) -> CostMatrix:
    """Fill every non-exact entry by row (terminal) or column (initial) extrapolation

    Row anchors are the anchor assignment's entries when exact, else the exact entry of the row with
    the nearest target; column anchors likewise with the nearest initial state. An entry with no
    usable anchor stays at +∞.

    Args:
        C (CostMatrix): exact entries; not modified
        strategy (SensitivityStrategy):
        targets (Sequence[np.ndarray]): slot positions, or an (n, n, 3) body-by-slot table
        initial_difference (Callable): (i, k) -> s0_i ⊖ s0_k
        anchors (Assignment): typically the best exact assignment so far
        direction (str): current matrix-wide direction for Rpt / Alt
        rng (np.random.Generator): Rand draws and Comp ties
        second_order (bool): refit row Hessians from the other exact entries of each row

    Returns:
        (CostMatrix)"""
    n = C.n
    T = target_table(targets)
    rng = rng or np.random.default_rng(0)
    out = CostMatrix.construct(entries=[list(row) for row in C.entries])
    slot_of = dict(anchors.pairs()) if anchors else {}
    body_of = {j: i for i, j in slot_of.items()}

    def row_anchor(i: int, j: int) -> Optional[Tuple[int, int]]:
        if i in slot_of and C[i, slot_of[i]].is_exact:
            return i, slot_of[i]
        if cols := C.row_exact(i):
            return i, min(cols, key=lambda l: float(np.linalg.norm(T[i, j] - T[i, l])))

        return None

    def column_anchor(i: int, j: int) -> Optional[Tuple[int, int]]:
        if j in body_of and C[body_of[j], j].is_exact:
            return body_of[j], j
        if bodies := C.column_exact(j):
            return min(bodies, key=lambda k: float(np.linalg.norm(initial_difference(i, k)))), j

        return None

    if second_order:
        for i in range(n):
            if (a := row_anchor(i, 0)) is None:
                continue
            others = [C[i, l] for l in C.row_exact(i) if l != a[1]]
            out[a] = C[a].copy(update={'hessian_est': fit_hessian(C[a], others)})

    for i in range(n):
        for j in range(n):
            if C[i, j].is_exact:
                continue

            ra, ca = row_anchor(i, j), column_anchor(i, j)
            chosen = _choose(strategy, direction, ra is not None, ca is not None,
                             len(C.row_exact(i)), len(C.column_exact(j)), rng)

            if chosen == ROW:
                value, anchor = approximate_entry(out[ra], T[i, j]), ra
            elif chosen == COLUMN:
                value, anchor = approximate_column_entry(C[ca], initial_difference(i, ca[0])), ca
            else:
                out[i, j] = CostEntry.construct(target=T[i, j].copy())
                continue

            out[i, j] = CostEntry.construct(value=value, status=EntryStatus.APPROXIMATED, target=T[i, j].copy(),
                                            anchor=anchor, direction=chosen)

    return out


async def combinatorial_loop(oracle: TransferOracle,
                             targets: Sequence[np.ndarray],
                             initial_assignment: Assignment,
                             strategy: SensitivityStrategy = SensitivityStrategy.COMP,
                             M: int = 3,
                             fix_first: bool = True,
                             seed: int = 0,
                             max_iters: int = 50) -> LoopResult:
    """Sensitivity-driven assignment search at fixed targets

    Args:
        oracle (TransferOracle):
        targets (Sequence[np.ndarray]): slot positions (0-based slots), or an (n, n, 3) body-by-slot table
        initial_assignment (Assignment):
        strategy (SensitivityStrategy):
        M (int): identical consecutive proposals that end the loop
        fix_first (bool): pin body 1 to slot 1
        seed (int): Rand draws and Comp ties
        max_iters (int):

    Raises:
        ConfigError: assignment size or pinning does not match
        TransferError

    Returns:
        (LoopResult)"""
    n = len(targets)
    if initial_assignment.n != n:
        raise ConfigError(f'initial assignment has {initial_assignment.n} bodies; {n} targets given')

    if fix_first and initial_assignment.perm[0] != 1:
        raise ConfigError('fix_first requires body 1 assigned to slot 1')

    T = target_table(targets)
    rng = np.random.default_rng(seed)
    C = CostMatrix.unknown(n)
    solutions: Dict[Tuple[int, int], ExactSolve] = {}
    solves = 0

    async def solve_pairs(pairs: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
        nonlocal solves
        needed = [(i, j) for i, j in pairs if not C[i, j].is_exact]
        results = await asyncio.gather(*[oracle.solve(i, j, T[i, j]) for i, j in needed])
        for (i, j), r in zip(needed, results):
            C[i, j] = CostEntry.construct(value=float(r.cost), status=EntryStatus.EXACT, target=T[i, j].copy(),
                                          terminal_sens=np.asarray(r.terminal_sens), initial_sens=np.asarray(r.initial_sens))
            solutions[(i, j)] = r
        solves += len(needed)

        return needed

    await solve_pairs(initial_assignment.pairs())
    best, best_cost = best_exact_assignment(C, fix_first)
    direction = COLUMN if strategy == SensitivityStrategy.INIT else ROW
    estimate = populate_matrix(C, strategy, targets, oracle.initial_difference, best, direction, rng)

    records: List[LoopRecord] = []
    previous: Optional[Assignment] = None
    repeats = 0

    for iteration in range(1, max_iters + 1):
        proposed, _ = solve_assignment_exact(estimate, fix_first)
        solved = await solve_pairs(proposed.pairs())
        best, best_cost = best_exact_assignment(C, fix_first)
        repeats = repeats + 1 if proposed == previous else 1
        previous = proposed

        records.append(LoopRecord.construct(iteration=iteration, proposed=list(proposed.perm), solved=solved,
                                            best=list(best.perm), best_cost=best_cost, direction=direction,
                                            repeats=repeats, matrix=estimate.values().tolist()))
        logger.debug(f'Assign {iteration}: proposed {proposed}, solved {len(solved)}, best {best} = {best_cost:.6e}')

        if repeats >= M:
            break

        if strategy == SensitivityStrategy.ALT or (strategy == SensitivityStrategy.RPT and repeats == 2):
            direction = COLUMN if direction == ROW else ROW

        estimate = populate_matrix(C, strategy, targets, oracle.initial_difference, best, direction, rng, second_order=True)
    else:
        logger.warning(f'Combinatorial loop stopped after {max_iters} iterations without {M} repeats')

    logger.info(f'Assignment {best} with cost {best_cost:.6e} after {solves} solves')

    return LoopResult(best, C, solves, best_cost, records, solutions)


if __name__ == '__main__':
    print(__doc__)
