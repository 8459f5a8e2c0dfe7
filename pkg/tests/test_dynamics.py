#!/usr/bin/env python3.9
"""SE3 Opt -> Tests -> Dynamics
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
import math
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from se3opt.dynamics import energy, force, force_jacobian, load_jacobians, loads, moment, moment_jacobian, potential
from se3opt.exceptions import PotentialSingularityError
from se3opt.geom3 import exp_so3
from se3opt.models.body import FOUR_PI2, BodyParams, State, dumbbell_params
from se3opt.utils import bprint
from .models.scenarios import free_body, point_mass, random_rotation


@pytest.mark.asyncio
async def test_body_params():
    ts = time.perf_counter()
    bprint('Test: Body Params', 'top')

    p = dumbbell_params()
    assert np.all(np.linalg.eigvalsh(p.J) > 0.0)
    assert np.array_equal(p.Jd, 0.5 * np.trace(p.J) * np.eye(3) - p.J)
    assert p.mu == FOUR_PI2

    with pytest.raises(ValidationError):
        BodyParams(m=1.0, J=np.diag([1.0, 1.0, -1.0]))

    with pytest.raises(ValidationError):
        BodyParams(m=-1.0, J=np.eye(3))

    with pytest.raises(ValidationError):
        BodyParams(m=1.0, J=np.eye(3), Jd=np.eye(3))

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_potential():
    ts = time.perf_counter()
    bprint('Test: Potential', 'top')

    p = dumbbell_params(d=0.01)
    x = np.array([1.0, 0.0, 0.0])
    assert potential(p, np.eye(3), x) == pytest.approx(-(FOUR_PI2 / 2.0) * (1.0 / 0.99 + 1.0 / 1.01), rel=1e-14)

    # point-mass limit
    assert potential(dumbbell_params(d=1e-7), np.eye(3), x) == pytest.approx(-FOUR_PI2, rel=1e-10)
    assert potential(free_body(), np.eye(3), x) == 0.0

    # common rotation about the origin
    rng = np.random.default_rng(3)
    R = random_rotation(rng)
    Q = random_rotation(rng)
    x = np.array([1.0, 0.2, -0.1])
    assert potential(p, Q @ R, Q @ x) == pytest.approx(potential(p, R, x), rel=1e-12)
    assert_allclose(force(p, Q @ R, Q @ x), Q @ force(p, R, x), rtol=1e-10, atol=1e-14)
    assert_allclose(moment(p, Q @ R, Q @ x), moment(p, R, x), rtol=1e-8, atol=1e-14)

    with pytest.raises(PotentialSingularityError):
        potential(p, np.eye(3), np.array([0.01, 0.0, 0.0]))

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_point_mass_loads():
    ts = time.perf_counter()
    bprint('Test: Point Mass Loads', 'top')

    p = point_mass()
    f, m = loads(p, np.eye(3), np.array([1.0, 0.0, 0.0]))
    assert_allclose(f, [-FOUR_PI2, 0.0, 0.0], rtol=1e-14)
    assert_allclose(m, np.zeros(3), atol=0.0)

    # rod radial: force along −x, no gravity-gradient moment
    d = dumbbell_params()
    f, m = loads(d, np.eye(3), np.array([2.0, 0.0, 0.0]))
    assert abs(f[1]) < 1e-15 and abs(f[2]) < 1e-15 and f[0] < 0.0
    assert_allclose(m, np.zeros(3), atol=1e-15)

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_loads_match_finite_differences():
    ts = time.perf_counter()
    bprint('Test: Loads vs Finite Differences', 'top')

    p = dumbbell_params(d=0.05)
    rng = np.random.default_rng(11)
    eps = 1e-6
    for _ in range(100):
        R = random_rotation(rng, 2.0)
        x = rng.normal(size=3)
        x *= (0.5 + rng.random()) / np.linalg.norm(x)
        f, m = loads(p, R, x)

        grad = np.array([(potential(p, R, x + eps * e) - potential(p, R, x - eps * e)) / (2 * eps) for e in np.eye(3)])
        assert_allclose(f, -grad, rtol=1e-5, atol=1e-6 * np.linalg.norm(f))

        dU = np.array([(potential(p, R @ exp_so3(eps * e), x) - potential(p, R @ exp_so3(-eps * e), x)) / (2 * eps)
                       for e in np.eye(3)])
        assert_allclose(m, -dU, rtol=1e-5, atol=1e-6 * max(np.linalg.norm(f), 1.0) * 0.05)

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_load_jacobians():
    ts = time.perf_counter()
    bprint('Test: Load Jacobians', 'top')

    p = dumbbell_params(d=0.05)
    rng = np.random.default_rng(5)
    eps = 1e-6
    for _ in range(20):
        R = random_rotation(rng)
        x = np.array([1.0, 0.0, 0.0]) + 0.2 * rng.normal(size=3)
        df_dx, df_dz, dm_dx, dm_dz = load_jacobians(p, R, x)

        for i, e in enumerate(np.eye(3)):
            fp, mp = loads(p, R, x + eps * e)
            fm, mm = loads(p, R, x - eps * e)
            assert_allclose(df_dx[:, i], (fp - fm) / (2 * eps), rtol=1e-5, atol=1e-7)
            assert_allclose(dm_dx[:, i], (mp - mm) / (2 * eps), rtol=1e-5, atol=1e-7)

            fp, mp = loads(p, R @ exp_so3(eps * e), x)
            fm, mm = loads(p, R @ exp_so3(-eps * e), x)
            assert_allclose(df_dz[:, i], (fp - fm) / (2 * eps), rtol=1e-5, atol=1e-7)
            assert_allclose(dm_dz[:, i], (mp - mm) / (2 * eps), rtol=1e-5, atol=1e-7)

    assert not any(np.any(j) for j in load_jacobians(free_body(), np.eye(3), np.ones(3)))

    R, x = random_rotation(rng), np.array([1.1, 0.1, 0.0])
    split = force_jacobian(p, R, x) + moment_jacobian(p, R, x)
    for a, b in zip(split, load_jacobians(p, R, x)):
        assert np.array_equal(a, b)

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_energy():
    ts = time.perf_counter()
    bprint('Test: Energy', 'top')

    p = point_mass(m=2.0)
    s = State(R=np.eye(3), x=[1.0, 0.0, 0.0], Pi=[0.0, 0.0, 1.0], gamma=[0.0, 2.0 * 2.0 * math.pi, 0.0])
    expected = (4.0 * math.pi) ** 2 / 4.0 + 0.5 - 2.0 * FOUR_PI2
    assert energy(p, s) == pytest.approx(expected, rel=1e-14)

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')
