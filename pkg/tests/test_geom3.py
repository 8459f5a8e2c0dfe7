#!/usr/bin/env python3.9
"""SE3 Opt -> Tests -> Geom3
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
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from se3opt.exceptions import CutLocusError, GeometryError
from se3opt.geom3 import exp_so3, hat, log_so3, orthonormality_error, right_jacobian, validate_rotation, vee
from se3opt.utils import bprint

vectors = arrays(np.float64, 3, elements=st.floats(-5.7, 5.7, allow_nan=False))


@pytest.mark.asyncio
async def test_hat_vee():
    ts = time.perf_counter()
    bprint('Test: Hat / Vee', 'top')

    assert_allclose(hat(np.array([1.0, 0.0, 0.0])) @ np.array([0.0, 1.0, 0.0]), [0.0, 0.0, 1.0])
    assert not np.any(hat(np.zeros(3)))

    v = np.array([1.0, 2.0, 3.0])
    assert_allclose(hat(v).T, -hat(v))
    assert_allclose(vee(hat(v)), v)
    assert_allclose(vee(np.zeros((3, 3))), np.zeros(3))

    with pytest.raises(GeometryError):
        vee(np.diag([1.0, 0.0, 0.0]))

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@given(vectors, vectors)
def test_hat_is_cross_product(v, w):
    assert_allclose(hat(v) @ w, np.cross(v, w), atol=1e-12)
    assert_allclose(vee(hat(v)), v)


@pytest.mark.asyncio
async def test_exp_log():
    ts = time.perf_counter()
    bprint('Test: Exp / Log', 'top')

    assert_allclose(exp_so3(np.zeros(3)), np.eye(3))
    assert_allclose(exp_so3(np.array([np.pi, 0.0, 0.0])), np.diag([1.0, -1.0, -1.0]), atol=1e-15)

    assert_allclose(log_so3(np.eye(3)), np.zeros(3))
    v = np.array([0.1, 0.2, 0.3])
    assert_allclose(log_so3(exp_so3(v)), v, atol=1e-12)

    # small-angle branches
    tiny = np.array([1e-8, -2e-8, 3e-9])
    assert_allclose(log_so3(exp_so3(tiny)), tiny, rtol=1e-6, atol=1e-20)

    with pytest.raises(CutLocusError):
        log_so3(np.diag([1.0, -1.0, -1.0]))

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@settings(max_examples=200)
@given(vectors)
def test_exp_is_a_rotation(v):
    r = exp_so3(v)
    assert orthonormality_error(r) <= 1e-10
    assert abs(np.linalg.det(r) - 1.0) <= 1e-10
    validate_rotation(r)


@settings(max_examples=200)
@given(arrays(np.float64, 3, elements=st.floats(-1.0, 1.0, allow_nan=False)), st.floats(0.0, np.pi - 0.01))
def test_exp_log_round_trip(axis, angle):
    norm = np.linalg.norm(axis)
    if norm < 1e-3:
        return

    v = axis / norm * angle
    assert_allclose(exp_so3(log_so3(exp_so3(v))), exp_so3(v), atol=1e-9)
    assert np.linalg.norm(log_so3(exp_so3(v))) < np.pi


@pytest.mark.asyncio
async def test_right_jacobian():
    ts = time.perf_counter()
    bprint('Test: Right Jacobian', 'top')

    rng = np.random.default_rng(7)
    for _ in range(20):
        v = rng.normal(size=3)
        dv = 1e-6 * rng.normal(size=3)
        lhs = exp_so3(v + dv)
        rhs = exp_so3(v) @ exp_so3(right_jacobian(v) @ dv)
        assert np.linalg.norm(lhs - rhs) <= 1e-10

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')


@pytest.mark.asyncio
async def test_validate_rotation():
    ts = time.perf_counter()
    bprint('Test: Validate Rotation', 'top')

    with pytest.raises(GeometryError):
        validate_rotation(np.eye(3) * 1.01)

    with pytest.raises(GeometryError):
        validate_rotation(np.diag([1.0, 1.0, -1.0]))

    with pytest.raises(GeometryError):
        validate_rotation(np.eye(2))

    with pytest.raises(GeometryError):
        validate_rotation(np.full((3, 3), np.nan))

    bprint(f'Completed in {(time.perf_counter() - ts):f} seconds.', 'bottom')
