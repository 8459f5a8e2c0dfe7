#!/usr/bin/env python3.9
"""SE3 Opt -> Utils
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
import math
from os import cpu_count, getenv
from typing import Iterable, NoReturn, Optional, Union

import numpy as np
from rich import print

from se3opt.exceptions import ConfigError

TWO_PI = 2.0 * math.pi


def bprint(message: str, location: Optional[str] = None, width: int = 100) -> NoReturn:
    """Build a banner

    Args:
        message (str):
        location (str): ['top', 'above', 'bottom', 'bot', 'below', None]
        width (int): total banner width

    Returns:
        (NoReturn)"""
    if len(message) > width - 6:
        message = f'{message[:width - 9]}...'

    len_banner = width - len(message)
    hlf0 = len_banner // 2
    hlf1 = len_banner - hlf0

    if location in ['top', 'above']:
        msg = f'\n▛{"▘" * hlf0} {message} {"▝" * hlf1}▜'
    elif location in ['bottom', 'bot', 'below']:
        msg = f'▙{"▖" * hlf0} {message} {"▗" * hlf1}▟\n'
    else:
        msg = f'▌{" " * hlf0} {message} {" " * hlf1}▐'

    print(msg)


def to_builtin(value):
    """Convert numpy containers/scalars (recursively) into plain python for JSON output."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]

    return value


def fmt_float(value: float) -> str:
    """Full precision, '.' decimal, shortest round-trip representation."""
    return repr(float(value))


def wrap_angle(theta: Union[float, np.ndarray]) -> np.ndarray:
    """Wrap angle(s) into [0, 2π)."""
    wrapped = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # np.mod can return 2π for tiny negative inputs
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def angle_distance(a: float, b: float) -> float:
    """Shortest distance between two angles."""
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def quantize(theta: Iterable[float], step: float) -> tuple:
    """Quantize a parameter vector into an integer key."""
    return tuple(int(round(float(t) / step)) for t in theta)


def default_jobs(jobs: Optional[int] = None) -> int:
    """Worker count; --jobs, then SE3OPT_JOBS, then available cores.

    Args:
        jobs (int):

    Raises:
        ConfigError: SE3OPT_JOBS is not an integer

    Returns:
        (int)"""
    if jobs:
        return max(1, int(jobs))

    if env_jobs := getenv('SE3OPT_JOBS'):
        try:
            return max(1, int(env_jobs))
        except ValueError as err:
            raise ConfigError(f'SE3OPT_JOBS must be an integer, got {env_jobs!r}') from err

    return cpu_count() or 1


if __name__ == '__main__':
    print(__doc__)
