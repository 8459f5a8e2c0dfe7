#!/usr/bin/env python3.9
"""SE3 Opt -> Models -> Pydantic Config
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel as PydanticBaseModel, Extra
from rapidjson import dumps, loads

from se3opt.utils import to_builtin


def _json_dumps(value: Any, *, default=None, **kwargs) -> str:
    return dumps(to_builtin(value), **kwargs)


class Base(PydanticBaseModel):
    """Base Model

    Used for pydantic configuration"""

    class Config:
        """Config

        Pydantic configuration"""
        allow_population_by_field_name = True
        anystr_strip_whitespace = True
        arbitrary_types_allowed = True
        extra = Extra.forbid
        json_dumps = _json_dumps
        json_loads = loads
        json_encoders = {np.ndarray: lambda a: a.tolist()}


def as_vector(value: Any, size: int = 3) -> np.ndarray:
    """Coerce to a finite float vector of the given size."""
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (size,):
        raise ValueError(f'expected {size} components, got {arr.size}')

    if not np.all(np.isfinite(arr)):
        raise ValueError('components must be finite')

    return arr


def as_matrix(value: Any, shape: Sequence[int] = (3, 3)) -> np.ndarray:
    """Coerce to a finite float matrix; a length-3 value is read as a diagonal."""
    arr = np.array(value, dtype=float)
    if arr.shape == (shape[0],) and shape[0] == shape[1]:
        arr = np.diag(arr)

    if arr.shape != tuple(shape):
        raise ValueError(f'expected shape {tuple(shape)}, got {arr.shape}')

    if not np.all(np.isfinite(arr)):
        raise ValueError('entries must be finite')

    return arr


def is_spd(m: np.ndarray, tol: float = 1e-12) -> bool:
    """Symmetric positive definite check."""
    if not np.allclose(m, m.T, rtol=0.0, atol=tol * max(1.0, float(np.abs(m).max()))):
        return False

    return bool(np.linalg.eigvalsh(0.5 * (m + m.T)).min() > 0.0)


if __name__ == '__main__':
    print(__doc__)
