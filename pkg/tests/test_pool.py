#!/usr/bin/env python3.9
"""SE3 Opt -> Tests -> Solver Pool
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
from numpy.testing import assert_allclose

from se3opt.exceptions import TransferError
from se3opt.models.config import ShootingConfig
from se3opt.paramopt import target_table
from se3opt.pool import CacheEntry, SolverPool, WarmStartCache
from se3opt.utils import TWO_PI, bprint
from .models.scenarios import small_scenario


def entry(theta: float) -> CacheEntry:
    return CacheEntry(np.array([theta]), np.full(12, theta), None, np.eye(12))


@pytest.mark.asyncio
async def test_cache_lookup():
    ts = time.perf_counter()
    bprint('Test: Warm Start Cache -> Lookup', 'top')

    cache = WarmStartCache(radius=0.5)
    assert cache.lookup(0, 0, np.array([1.0])) is None
    assert cache.misses == 1

    await cache.store(0, 0, np.array([1.0]), entry(1.0))
    await cache.store(0, 0, np.array([1.3]), entry(1.3))
    await cache.store(1, 0, np.array([1.0]), entry(9.0))
    assert len(cache) == 3

    assert cache.lookup(0, 0, np.array([1.0004])).theta[0] == 1.0
    assert cache.lookup(0, 0, np.array([1.2])).theta[0] == 1.3
    assert cache.lookup(0, 0, np.array([1.9])) is None
    assert cache.lookup(0, 1, np.array([1.0])) is None
    assert cache.lookup(1, 0, np.array([1.0])).lam0[0] == 9.0
    assert cache.hits == 3

    assert cache.lookup(0, 0, np.array([1.15])).theta[0] == 1.0

    await cache.store(0, 0, np.array([1.0]), entry(1.0001))
    assert len(cache) == 3
    assert cache.lookup(0, 0, np.array([1.0])).lam0[0] == 1.0001

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_cache_periodic():
    ts = time.perf_counter()
    bprint('Test: Warm Start Cache -> Periodic', 'top')

    periodic = WarmStartCache(radius=0.1)
    await periodic.store(0, 0, np.array([0.02]), entry(0.02))
    assert periodic.lookup(0, 0, np.array([TWO_PI - 0.02])) is not None

    flat = WarmStartCache(radius=0.1, periodic=False)
    await flat.store(0, 0, np.array([0.02]), entry(0.02))
    assert flat.lookup(0, 0, np.array([TWO_PI - 0.02])) is None

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_pool_boundary():
    ts = time.perf_counter()
    bprint('Test: Solver Pool -> Boundary', 'top')

    sc = small_scenario(n=3)
    pool = SolverPool(sc, jobs=2)
    assert pool.jobs == 2
    assert pool.cache is not None
    assert SolverPool(sc, warm=False).cache is None

    target = target_table(sc.target, sc.theta0, 3)[1, 2]
    bc = pool.boundary(1, target)
    assert bc.initial is sc.initial_states[1]
    assert_allclose(bc.desired.x, target)
    assert_allclose(bc.desired.R, sc.R_d)
    assert bc.N == sc.N
    assert bc.h == sc.h

    assert_allclose(pool.initial_difference(2, 0)[3:6], sc.initial_states[2].x - sc.initial_states[0].x)
    assert not pool.initial_difference(1, 1).any()

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_pool_transfer_error():
    ts = time.perf_counter()
    bprint('Test: Solver Pool -> Transfer Error', 'top')

    sc = small_scenario(n=2, shooting=ShootingConfig(max_outer=0))
    target = target_table(sc.target, sc.theta0, 2)[0, 1]

    async with SolverPool(sc, jobs=1) as pool:
        with pytest.raises(TransferError) as exc:
            await pool.transfer(0, 1, target)

    assert exc.value.body == 0
    assert exc.value.slot == 1
    assert exc.value.exit_code == 3
    assert pool.solves == 0
    assert len(pool.cache) == 0

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.slow
@pytest.mark.asyncio
async def test_pool_warm_start():
    ts = time.perf_counter()
    bprint('Test: Solver Pool -> Warm Start', 'top')

    sc = small_scenario(n=2)
    theta = np.array([0.3])
    moved = theta + 0.01

    async with SolverPool(sc, jobs=2) as pool:
        first = await pool.transfer_many([(i, i, target_table(sc.target, theta, 2)[i, i]) for i in range(2)], theta)
        warm = await pool.transfer(0, 0, target_table(sc.target, moved, 2)[0, 0], moved)

    async with SolverPool(sc, jobs=1, warm=False) as cold_pool:
        cold = await cold_pool.transfer(0, 0, target_table(sc.target, moved, 2)[0, 0], moved)

    assert len(first) == 2
    assert pool.solves == 3
    assert pool.cache.hits >= 1
    assert warm.newton_iters <= cold.newton_iters
    assert warm.cost == pytest.approx(cold.cost, rel=1e-8)

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')
