#!/usr/bin/env python3.9
"""SE3 Opt -> CLI
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Exit codes: 0 success, 1 other failure, 2 config error, 3 solver non-convergence, 4 budget exceeded."""
import argparse
import asyncio
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from loguru import logger
from rich import print
from rich.table import Table

from se3opt import __version__
from se3opt.config import load_boundary, load_config, scenario_from_config
from se3opt.dynamics import energy
from se3opt.exceptions import ConfigError, InvalidOptionError, Se3OptError
from se3opt.formation import (ENUMERATION_BUDGET, enumerate_all, global_optimum, histogram, run,
                              sweep_initial_assignments)
from se3opt.geom3 import orthonormality_error
from se3opt.integrator import propagate
from se3opt.models.body import ControlSample
from se3opt.models.config import ConfigFile, Scenario, SensitivityStrategy
from se3opt.models.results import RunResult
from se3opt.optctrl import shoot
from se3opt.paramopt import target_table
from se3opt.persist import write_enumeration, write_run, write_solution, write_sweep, write_trajectory
from se3opt.pool import SolverPool
from se3opt.utils import TWO_PI, default_jobs


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='toml | json configuration; defaults to the built-in scenario')
    common.add_argument('--jobs', type=int, default=None, help='parallel solves (fallback SE3OPT_JOBS, then cpu count)')
    common.add_argument('--debug', action='store_true', help='debug logging')
    common.add_argument('--out', default=None, help='output directory (overrides [output] directory)')

    p = argparse.ArgumentParser(prog='se3opt', description='Rigid-body formation reconfiguration on SE(3)')
    p.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = p.add_subparsers(dest='command', required=True)

    s = sub.add_parser('simulate', parents=[common], help='propagate one body without control')
    s.add_argument('--steps', type=int, default=None, help='number of steps (default: horizon N)')
    s.add_argument('--order', choices=['first', 'second'], default=None)
    s.add_argument('--body', type=int, default=1, help='1-based body index')

    s = sub.add_parser('solve', parents=[common], help='one optimal transfer')
    s.add_argument('--boundary', default=None, help='toml | json with [initial] and [desired] state tables')
    s.add_argument('--body', type=int, default=1, help='1-based body, without --boundary')
    s.add_argument('--slot', type=int, default=1, help='1-based slot at theta0, without --boundary')

    s = sub.add_parser('reconfigure', parents=[common], help='hierarchical theta / assignment optimization')
    s.add_argument('--strategy', default=None, help='|'.join(SensitivityStrategy.names()))
    s.add_argument('--seed', type=int, default=None)
    s.add_argument('--no-warm', action='store_true', help='disable warm-started inner solves')

    s = sub.add_parser('enumerate', parents=[common], help='cost of every assignment on a theta grid')
    s.add_argument('--grid', type=int, default=100, help='grid points on [0, 2π)')
    s.add_argument('--bins', type=int, default=20)
    s.add_argument('--budget', type=int, default=ENUMERATION_BUDGET)

    s = sub.add_parser('sweep', parents=[common], help='reconfigure from every pinned initial assignment')
    s.add_argument('--reference', type=float, default=None, help='known global optimum J; skips the enumeration')
    s.add_argument('--grid', type=int, default=24, help='enumeration grid points on [0, 2π) for the global optimum')
    s.add_argument('--budget', type=int, default=ENUMERATION_BUDGET)

    return p


def setup_logging(debug: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level='DEBUG' if debug else 'INFO')
    logger.enable('se3opt')


def out_dir(args: argparse.Namespace, cfg: ConfigFile) -> Path:
    return Path(args.out or cfg.output.directory)


def scenario_for(args: argparse.Namespace, cfg: ConfigFile) -> Scenario:
    sc = scenario_from_config(cfg)
    update = {}
    if getattr(args, 'strategy', None) is not None:
        if args.strategy not in SensitivityStrategy.names():
            raise InvalidOptionError(args.strategy, SensitivityStrategy.names())
        update['strategy'] = SensitivityStrategy(args.strategy)

    if getattr(args, 'seed', None) is not None:
        update['seed'] = args.seed

    return sc.copy(update=update) if update else sc


def _body_index(value: int, n: int, name: str) -> int:
    if not 1 <= value <= n:
        raise ConfigError(f'--{name} must lie in 1..{n}, got {value}')

    return value - 1


def enumeration_grid(points: int) -> List[float]:
    """Uniform grid on [0, 2π)"""
    if points < 1:
        raise ConfigError(f'--grid must be at least 1, got {points}')

    return [TWO_PI * k / points for k in range(points)]


def trace_table(result: RunResult) -> Table:
    t = Table(title='Reconfiguration trace')
    for col in ('#', 'phase', 'θ', 'A', 'J', '‖∂J/∂θ‖', 'solves', 'newton'):
        t.add_column(col, justify='right' if col not in ('phase', 'A') else 'left')

    for r in result.trace:
        t.add_row(str(r.iteration), r.phase, ' '.join(f'{v:.4f}' for v in r.theta),
                  '(' + ','.join(map(str, r.assignment)) + ')', f'{r.J:.6e}', f'{r.grad_norm:.2e}',
                  str(r.solves), str(r.newton_iters))

    return t


async def cmd_simulate(args: argparse.Namespace, cfg: ConfigFile) -> int:
    sc = scenario_for(args, cfg)
    body = _body_index(args.body, sc.n, 'body')
    steps = sc.N if args.steps is None else args.steps
    if steps < 0:
        raise ConfigError(f'--steps must be non-negative, got {steps}')

    integrator = sc.integrator if args.order is None else sc.integrator.copy(update={'order': args.order})
    s0 = sc.initial_states[body]
    traj = await asyncio.to_thread(propagate, sc.body, s0, [ControlSample.zero()] * (steps + 1), integrator)

    path = await write_trajectory(out_dir(args, cfg) / f'simulate_body_{body + 1}.csv', traj)
    e = np.array([energy(sc.body, s) for s in traj.states])
    drift = float(np.max(np.abs(e - e[0])))
    ortho = max(orthonormality_error(s.R) for s in traj.states)

    print(f'[bold]{steps}[/bold] {integrator.order}-order steps: energy drift {drift:.3e} '
          f'(E0 = {e[0]:.9e}), orthonormality drift {ortho:.3e} -> {path}')

    return 0


async def cmd_solve(args: argparse.Namespace, cfg: ConfigFile) -> int:
    sc = scenario_for(args, cfg)
    if args.boundary:
        bc = load_boundary(args.boundary, sc)
    else:
        body = _body_index(args.body, sc.n, 'body')
        slot = _body_index(args.slot, sc.n, 'slot')
        target = target_table(sc.target, np.asarray(sc.theta0, dtype=float), sc.n)[body, slot]
        bc = SolverPool(sc, jobs=1).boundary(body, target)

    solution = await asyncio.to_thread(shoot, sc.body, bc, sc.weights, cfg=sc.shooting, integrator=sc.integrator)
    await write_solution(out_dir(args, cfg), solution, sc.weights)

    t = Table(title='Optimal transfer')
    t.add_column('cost', justify='right')
    t.add_column('residual', justify='right')
    t.add_column('newton', justify='right')
    t.add_column('‖∂c/∂z0‖', justify='right')
    t.add_column('‖∂c/∂zN‖', justify='right')
    t.add_row(f'{solution.cost:.9e}', f'{solution.terminal_residual:.2e}', str(solution.newton_iters),
              f'{np.linalg.norm(solution.dcost_dz0):.3e}', f'{np.linalg.norm(solution.dcost_dzN):.3e}')
    print(t)

    return 0


async def cmd_reconfigure(args: argparse.Namespace, cfg: ConfigFile) -> int:
    sc = scenario_for(args, cfg)
    result = await run(sc, jobs=default_jobs(args.jobs), warm=not args.no_warm)
    await write_run(out_dir(args, cfg), result, sc)

    print(trace_table(result))
    status = '[bold green]converged[/bold green]' if result.converged else '[bold yellow]not converged[/bold yellow]'
    print(f'{status}: A = ({",".join(map(str, result.assignment))}), θ = {np.round(result.theta, 6).tolist()}, '
          f'J = {result.J:.9e}, solves = {result.total_solves}')

    return 0


async def cmd_enumerate(args: argparse.Namespace, cfg: ConfigFile) -> int:
    sc = scenario_for(args, cfg)
    table = await enumerate_all(sc, enumeration_grid(args.grid), sc.fix_first, default_jobs(args.jobs), args.budget)
    bins = histogram(table, args.bins)
    await write_enumeration(out_dir(args, cfg), table, bins, sc.seed)

    best = table.best()
    print(f'{len(table.rows)} assignments evaluated with {table.solves} solves; best J = {best.J:.9e} at '
          f'θ = {best.theta:.6f}, A = ({",".join(map(str, best.assignment))})')

    return 0


async def cmd_sweep(args: argparse.Namespace, cfg: ConfigFile) -> int:
    sc = scenario_for(args, cfg)
    jobs = default_jobs(args.jobs)
    reference = args.reference
    if reference is None:
        reference = await global_optimum(sc, enumeration_grid(args.grid), jobs=jobs, budget=args.budget)

    results = await sweep_initial_assignments(sc, jobs=jobs, reference=reference)
    await write_sweep(out_dir(args, cfg), results, sc.seed, reference)

    t = Table(title=f'Initial-assignment sweep, global J = {reference:.9e}')
    for col in ('initial', 'final', 'J', 'global'):
        t.add_column(col)

    for r in results.success:
        t.add_row(str(r['initial']), str(r['assignment']), f'{r["J"]:.9e}', str(r['global']))

    for r in results.failure:
        t.add_row(str(r['initial']), '-', '-', f'[red]{r["error"]}[/red]')

    print(t)

    return 0


COMMANDS = {'simulate': cmd_simulate,
            'solve': cmd_solve,
            'reconfigure': cmd_reconfigure,
            'enumerate': cmd_enumerate,
            'sweep': cmd_sweep}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.debug)

    try:
        cfg = load_config(args.config)
        return asyncio.run(COMMANDS[args.command](args, cfg))
    except Se3OptError as err:
        logger.error(str(err))
        return err.exit_code


if __name__ == '__main__':
    sys.exit(main())
