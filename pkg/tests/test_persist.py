#!/usr/bin/env python3.9
"""SE3 Opt -> Tests -> Persist
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
import time

import numpy as np
import pytest
import rapidjson

from se3opt.exceptions import ConfigError
from se3opt.integrator import propagate
from se3opt.models.body import ControlSample
from se3opt.models.results import EnumerationRow, EnumerationTable, Results, RunResult, TraceRecord
from se3opt.optctrl import shoot
from se3opt.persist import (TRAJECTORY_COLUMNS, load_bundle, parse_trajectory_csv, trajectory_csv, write_enumeration,
                            write_run, write_solution, write_sweep)
from se3opt.utils import bprint
from .models.scenarios import small_scenario, translation_problem, unit_weights


def translation_run():
    params, bc = translation_problem(N=10)
    sol = shoot(params, bc, unit_weights())
    sc = small_scenario(n=1, N=10, h=bc.h)
    trace = [TraceRecord.construct(iteration=1, phase='theta-opt', theta=[0.0], assignment=[1], J=sol.cost,
                                   grad_norm=0.0, solves=1, newton_iters=sol.newton_iters, converged=True)]
    result = RunResult.construct(theta=[0.0], assignment=[1], J=sol.cost, grad_norm=0.0, solutions=[sol], trace=trace,
                                 converged=True, total_solves=1)

    return sol, sc, result


@pytest.mark.asyncio
async def test_trajectory_csv():
    ts = time.perf_counter()
    bprint('Test: Trajectory CSV', 'top')

    assert len(TRAJECTORY_COLUMNS) == 26

    sc = small_scenario(n=1)
    traj = propagate(sc.body, sc.initial_states[0], [ControlSample.zero()], sc.integrator)
    lines = trajectory_csv(traj).splitlines()
    assert len(lines) == 2
    assert lines[0].split(',') == TRAJECTORY_COLUMNS
    assert lines[1].split(',')[:2] == ['0', '0.0']
    assert len(lines[1].split(',')) == 26

    sol, _, _ = translation_run()
    text = trajectory_csv(sol.as_trajectory())
    assert '\r' not in text
    back = parse_trajectory_csv(text, sol.h)
    assert back.N == sol.N
    for a, b in zip(back.states, sol.trajectory):
        assert np.array_equal(a.R, b.R)
        assert np.array_equal(a.gamma, b.gamma)
    assert np.array_equal(back.controls[3].uf, sol.controls[2].uf)
    assert not back.controls[0].uf.any()

    with pytest.raises(ConfigError) as exc:
        parse_trajectory_csv('k,t\n0,0.0\n')
    assert exc.value.line == 1

    with pytest.raises(ConfigError) as exc:
        parse_trajectory_csv(','.join(TRAJECTORY_COLUMNS) + '\n0,0.0,1.0\n')
    assert exc.value.line == 2

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_run_bundle(tmp_path):
    ts = time.perf_counter()
    bprint('Test: Run Bundle', 'top')

    sol, sc, result = translation_run()
    written = await write_run(tmp_path, result, sc)
    assert {p.name for p in written} == {'result.json', 'trace.csv', 'body_1.csv', 'metadata.json'}

    doc = rapidjson.loads((tmp_path / 'result.json').read_text())
    assert doc['assignment'] == [1]
    assert doc['strategy'] == sc.strategy.value
    assert doc['bodies'][0]['file'] == 'body_1.csv'
    assert 'timestamp' not in doc

    meta = rapidjson.loads((tmp_path / 'metadata.json').read_text())
    assert meta['command'] == 'reconfigure'
    assert {'se3opt', 'python', 'numpy', 'scipy'} <= set(meta['versions'])

    trace = (tmp_path / 'trace.csv').read_text().splitlines()
    assert len(trace) == 2
    assert trace[1].split(',')[1] == 'theta-opt'

    bundle = await load_bundle(tmp_path)
    assert bundle.consistent
    assert bundle.J == pytest.approx(sol.cost, rel=1e-12)
    assert len(bundle.trajectories) == 1

    doc['J'] *= 1.0 + 1e-6
    (tmp_path / 'result.json').write_text(rapidjson.dumps(doc))
    assert not (await load_bundle(tmp_path)).consistent

    with pytest.raises(ConfigError):
        await load_bundle(tmp_path / 'nowhere')

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_other_outputs(tmp_path):
    ts = time.perf_counter()
    bprint('Test: Solution / Enumeration / Sweep Outputs', 'top')

    sol, _, _ = translation_run()
    await write_solution(tmp_path / 'solve', sol, unit_weights())
    doc = rapidjson.loads((tmp_path / 'solve' / 'solution.json').read_text())
    assert doc['cost'] == sol.cost
    assert len(doc['multipliers']) == sol.N
    assert len(doc['dcost_dzN']) == 12
    assert len((tmp_path / 'solve' / 'trajectory.csv').read_text().splitlines()) == sol.N + 2

    rows = [EnumerationRow.construct(theta=0.0, assignment=[1, 2], J=2.0),
            EnumerationRow.construct(theta=0.0, assignment=[2, 1], J=1.0)]
    table = EnumerationTable.construct(rows=rows, solves=4, fix_first=False)
    await write_enumeration(tmp_path / 'enum', table, [{'lo': 1.0, 'hi': 2.0, 'count': 2}], seed=3)
    lines = (tmp_path / 'enum' / 'enumeration.csv').read_text().splitlines()
    assert lines == ['theta,assignment,J', '0.0,1 2,2.0', '0.0,2 1,1.0']
    assert (tmp_path / 'enum' / 'histogram.csv').read_text().splitlines()[1] == '1.0,2.0,2'

    results = Results()
    results.success.append({'initial': [1, 2], 'J': 1.0, 'global': True})
    results.failure.append({'initial': [1, 3], 'error': 'boom'})
    await write_sweep(tmp_path / 'sweep', results, seed=3, reference=0.75)
    doc = rapidjson.loads((tmp_path / 'sweep' / 'sweep.json').read_text())
    assert doc['reference'] == 0.75
    assert doc['success'][0]['global'] is True
    assert doc['failure'][0]['error'] == 'boom'
    assert rapidjson.loads((tmp_path / 'sweep' / 'metadata.json').read_text())['seed'] == 3

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')
