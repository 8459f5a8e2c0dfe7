#!/usr/bin/env python3.9
"""SE3 Opt -> Persist
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version.

Result bundles. Everything except metadata.json is a pure function of the config and seed."""
import platform
from datetime import datetime, timezone
from os.path import realpath
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np
import rapidjson
import scipy
from aiofiles import open
from loguru import logger

from se3opt import __version__
from se3opt.exceptions import ConfigError
from se3opt.models.body import ControlSample, State
from se3opt.models.config import Scenario, Weights
from se3opt.models.results import EnumerationTable, OptimalSolution, Results, RunResult, Trajectory
from se3opt.optctrl import control_cost
from se3opt.utils import fmt_float, to_builtin

TRAJECTORY_COLUMNS = ['k', 't',
                      'x1', 'x2', 'x3',
                      'R11', 'R12', 'R13', 'R21', 'R22', 'R23', 'R31', 'R32', 'R33',
                      'Pi1', 'Pi2', 'Pi3',
                      'g1', 'g2', 'g3',
                      'uf1', 'uf2', 'uf3',
                      'um1', 'um2', 'um3']
TRACE_COLUMNS = ['iteration', 'phase', 'theta', 'assignment', 'J', 'grad_norm', 'solves', 'newton_iters', 'converged']
BUNDLE_TOL = 1e-10

PathLike = Union[str, Path]


class Bundle(NamedTuple):
    result: dict
    trajectories: List[Trajectory]
    J: float
    consistent: bool


def _csv(rows: Sequence[Sequence[str]]) -> str:
    return ''.join(','.join(r) + '\n' for r in rows)


async def write_text(path: PathLike, text: str) -> Path:
    """Write a text file, creating parents; '\n' line endings"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with open(realpath(path), 'w', encoding='utf-8', newline='\n') as f:
        await f.write(text)

    logger.debug(f'Wrote {path}')

    return path


async def read_text(path: PathLike) -> str:
    async with open(realpath(path), 'r', encoding='utf-8') as f:
        return await f.read()


def dumps(obj) -> str:
    return rapidjson.dumps(to_builtin(obj), indent=2) + '\n'


async def write_json(path: PathLike, obj) -> Path:
    return await write_text(path, dumps(obj))


def trajectory_csv(traj: Trajectory) -> str:
    """k, t, x, R (row-major), Π, γ, uf, um; repr floats"""
    rows = [TRAJECTORY_COLUMNS]
    for k, s in enumerate(traj.states):
        u = traj.control_at(k)
        rows.append([str(k), fmt_float(k * traj.h), *(fmt_float(v) for v in [*s.to_flat(), *u.uf, *u.um])])

    return _csv(rows)


def parse_trajectory_csv(text: str, h: Optional[float] = None) -> Trajectory:
    """Inverse of trajectory_csv

    Raises:
        ConfigError: wrong header or row width"""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0].split(',') != TRAJECTORY_COLUMNS:
        raise ConfigError('trajectory CSV header does not match the 26-field schema', 1)

    states, controls = [], []
    for no, ln in enumerate(lines[1:], start=2):
        v = ln.split(',')
        if len(v) != len(TRAJECTORY_COLUMNS):
            raise ConfigError(f'trajectory CSV row has {len(v)} fields', no)

        f = np.array(v[2:], dtype=float)
        states.append(State.construct(x=f[0:3], R=f[3:12].reshape(3, 3), Pi=f[12:15], gamma=f[15:18]))
        controls.append(ControlSample.construct(uf=f[18:21], um=f[21:24]))

    if h is None:
        h = float(lines[2].split(',')[1]) if len(lines) > 2 else 0.0

    return Trajectory.construct(states=states, controls=controls, h=h)


async def write_trajectory(path: PathLike, traj: Trajectory) -> Path:
    return await write_text(path, trajectory_csv(traj))


def solution_dict(solution: OptimalSolution) -> dict:
    return {'cost': solution.cost,
            'terminal_residual': solution.terminal_residual,
            'newton_iters': solution.newton_iters,
            'N': solution.N,
            'h': solution.h,
            'lam0': solution.lam0,
            'dcost_dz0': solution.dcost_dz0,
            'dcost_dzN': solution.dcost_dzN,
            'multipliers': solution.multipliers,
            'controls': [{'uf': u.uf, 'um': u.um} for u in solution.controls]}


def weights_dict(w: Weights) -> dict:
    return {'Wf': w.Wf, 'Wm': w.Wm}


async def write_solution(directory: PathLike, solution: OptimalSolution, weights: Weights) -> List[Path]:
    """solution.json and trajectory.csv of a single transfer"""
    directory = Path(directory)
    doc = {**solution_dict(solution), 'weights': weights_dict(weights)}

    return [await write_json(directory / 'solution.json', doc),
            await write_trajectory(directory / 'trajectory.csv', solution.as_trajectory())]


def trace_csv(result: RunResult) -> str:
    rows = [TRACE_COLUMNS]
    for t in result.trace:
        rows.append([str(t.iteration), t.phase, ' '.join(fmt_float(v) for v in t.theta),
                     ' '.join(str(a) for a in t.assignment), fmt_float(t.J), fmt_float(t.grad_norm),
                     str(t.solves), str(t.newton_iters), str(t.converged).lower()])

    return _csv(rows)


def result_dict(result: RunResult, scenario: Scenario) -> dict:
    return {'theta': result.theta,
            'assignment': result.assignment,
            'J': result.J,
            'grad_norm': result.grad_norm,
            'converged': result.converged,
            'total_solves': result.total_solves,
            'strategy': scenario.strategy.value,
            'seed': scenario.seed,
            'h': scenario.h,
            'N': scenario.N,
            'weights': weights_dict(scenario.weights),
            'bodies': [{'body': i + 1, 'slot': a, 'file': f'body_{i + 1}.csv', **solution_dict(s)}
                       for i, (a, s) in enumerate(zip(result.assignment, result.solutions))],
            'trace': [t.dict() for t in result.trace]}


def metadata(command: str, seed: Optional[int] = None) -> dict:
    """Run metadata; the only non-deterministic file"""
    return {'command': command,
            'seed': seed,
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'versions': {'se3opt': __version__,
                         'python': platform.python_version(),
                         'numpy': np.__version__,
                         'scipy': scipy.__version__}}


async def write_run(directory: PathLike, result: RunResult, scenario: Scenario, command: str = 'reconfigure') -> List[Path]:
    """result.json, trace.csv, body_<i>.csv and metadata.json"""
    directory = Path(directory)
    written = [await write_json(directory / 'result.json', result_dict(result, scenario)),
               await write_text(directory / 'trace.csv', trace_csv(result))]
    for i, s in enumerate(result.solutions):
        written.append(await write_trajectory(directory / f'body_{i + 1}.csv', s.as_trajectory()))

    written.append(await write_json(directory / 'metadata.json', metadata(command, scenario.seed)))
    logger.info(f'Result bundle written to {directory}')

    return written


def enumeration_csv(table: EnumerationTable) -> str:
    rows = [['theta', 'assignment', 'J']]
    rows.extend([fmt_float(r.theta), ' '.join(str(a) for a in r.assignment), fmt_float(r.J)] for r in table.rows)

    return _csv(rows)


def histogram_csv(bins: Sequence[dict]) -> str:
    return _csv([['lo', 'hi', 'count']] + [[fmt_float(b['lo']), fmt_float(b['hi']), str(b['count'])] for b in bins])


async def write_enumeration(directory: PathLike, table: EnumerationTable, bins: Sequence[dict], seed: Optional[int] = None) -> List[Path]:
    directory = Path(directory)

    return [await write_text(directory / 'enumeration.csv', enumeration_csv(table)),
            await write_text(directory / 'histogram.csv', histogram_csv(bins)),
            await write_json(directory / 'metadata.json', metadata('enumerate', seed))]


async def write_sweep(directory: PathLike,
                      results: Results,
                      seed: Optional[int] = None,
                      reference: Optional[float] = None) -> List[Path]:
    directory = Path(directory)
    doc = results.dict if reference is None else {**results.dict, 'reference': float(reference)}

    return [await write_json(directory / 'sweep.json', doc),
            await write_json(directory / 'metadata.json', metadata('sweep', seed))]


async def load_bundle(directory: PathLike) -> Bundle:
    """Reload a result bundle and recompute J from the stored controls

    Raises:
        ConfigError: missing or malformed files

    Returns:
        (Bundle): consistent is True when the recomputed J matches the stored one to 1e-10"""
    directory = Path(directory)
    try:
        doc = rapidjson.loads(await read_text(directory / 'result.json'))
    except (OSError, ValueError) as err:
        raise ConfigError(f'Cannot load {directory / "result.json"}: {err}') from err

    weights = Weights(**doc['weights'])
    trajectories = [parse_trajectory_csv(await read_text(directory / b['file']), doc['h']) for b in doc['bodies']]
    J = float(sum(control_cost(t.controls[1:], weights, t.h) for t in trajectories))
    consistent = abs(J - doc['J']) <= BUNDLE_TOL * max(1.0, abs(doc['J']))
    if not consistent:
        logger.warning(f'Bundle {directory}: stored J = {doc["J"]!r}, recomputed {J!r}')

    return Bundle(doc, trajectories, J, consistent)


if __name__ == '__main__':
    print(__doc__)
