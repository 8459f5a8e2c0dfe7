#!/usr/bin/env python3.9
"""SE3 Opt -> Config
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
import re
from os import getenv
from pathlib import Path
from typing import Optional, Sequence, Tuple, Type, TypeVar, Union

import rapidjson
import toml
from loguru import logger
from pydantic import ValidationError

from se3opt.exceptions import ConfigError, InvalidOptionError
from se3opt.formation import default_scenario, reference_desired, reference_target
from se3opt.models.base import Base
from se3opt.models.body import BoundaryConditions
from se3opt.models.config import BoundaryFile, ConfigFile, Scenario, SensitivityStrategy, TargetCircle

M = TypeVar('M', bound=Base)

_OFFSET = re.compile(r'offset (\d+)')


def _read(path: Union[str, Path]) -> Tuple[dict, str]:
    """Parse a toml or json file

    Raises:
        ConfigError: unreadable file, unknown type or a decode error (with its line)"""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as err:
        raise ConfigError(f'Cannot read {path}: {err.strerror}') from err

    if path.suffix == '.toml':
        try:
            return toml.loads(text), text
        except toml.TomlDecodeError as err:
            raise ConfigError(f'{path}: {err.msg}', err.lineno) from err
    elif path.suffix == '.json':
        try:
            return rapidjson.loads(text), text
        except (rapidjson.JSONDecodeError, ValueError) as err:
            line = text.count('\n', 0, int(m.group(1))) + 1 if (m := _OFFSET.search(str(err))) else None
            raise ConfigError(f'{path}: {err}', line) from err

    logger.error(f'Unknown configuration file type: {path.suffix}\n-> Valid Types: .toml | .json')
    raise ConfigError(f'Unknown configuration file type: {path.suffix!r}')


def load_config_data(cfg_data: Union[str, Path, dict, None]) -> Tuple[dict, Optional[str]]:
    """Load Configuration Data

    Args:
        cfg_data (Union[str, Path, dict]): path to a config file [toml|json], a dictionary matching
            config.example.toml, or None for every default.
            SE3OPT_SEED and SE3OPT_OUT override formation.seed and output.directory.

    Returns:
        (Tuple[dict, Optional[str]]): data, source text (None for a dict)"""
    if cfg_data is None:
        cfg, text = {}, None
    elif isinstance(cfg_data, dict):
        cfg, text = dict(cfg_data), None
    else:
        cfg, text = _read(cfg_data)

    if env_seed := getenv('SE3OPT_SEED'):
        try:
            cfg.setdefault('formation', {})['seed'] = int(env_seed)
        except ValueError as err:
            raise ConfigError(f'SE3OPT_SEED must be an integer, got {env_seed!r}') from err

    if env_out := getenv('SE3OPT_OUT'):
        cfg.setdefault('output', {})['directory'] = env_out

    return cfg, text


def _key_line(text: Optional[str], loc: Sequence) -> Optional[int]:
    """Best-effort line of a key path in toml/json source"""
    if not text:
        return None

    keys = [str(k) for k in loc if not isinstance(k, int)]
    lines = text.splitlines()
    start, found = 0, None
    for key in keys:
        pattern = re.compile(rf'^\s*(\[+\s*([\w.]+\.)?{re.escape(key)}\s*\]+|"?{re.escape(key)}"?\s*[=:])')
        for no in range(start, len(lines)):
            if pattern.search(lines[no]):
                start = found = no
                break

    return None if found is None else found + 1


def validate(model: Type[M], data: dict, text: Optional[str] = None) -> M:
    """Validate data against a section model

    Raises:
        ConfigError: first failure, with its key path and a best-effort line"""
    try:
        return model(**data)
    except ValidationError as err:
        first = err.errors()[0]
        path = '.'.join(str(p) for p in first['loc'])
        raise ConfigError(f'{path}: {first["msg"]}', _key_line(text, first['loc'])) from err
    except TypeError as err:
        raise ConfigError(f'Malformed configuration: {err}') from err


def load_config(cfg_data: Union[str, Path, dict, None] = None) -> ConfigFile:
    """Load and validate a configuration

    Raises:
        InvalidOptionError: unknown sensitivity strategy
        ConfigError

    Returns:
        (ConfigFile)"""
    cfg, text = load_config_data(cfg_data)
    if not isinstance(cfg, dict):
        raise ConfigError('Configuration root must be a table')

    strategy = (cfg.get('formation') or {}).get('strategy')
    if strategy is not None and strategy not in SensitivityStrategy.names():
        raise InvalidOptionError(strategy, SensitivityStrategy.names())

    return validate(ConfigFile, cfg, text)


def scenario_from_config(cfg: ConfigFile) -> Scenario:
    """The scenario a configuration fully determines

    Omitted states, target and desired values fall back to default_scenario's.

    Raises:
        ConfigError"""
    f = cfg.formation
    h = cfg.integrator.h
    n = len(f.initial_states) if f.initial_states else f.n
    d = cfg.desired

    try:
        body = cfg.body.params()
        ref = reference_target(f.N, h, cfg.target.radius)
        R_d, Pi_d, gamma_d = reference_desired(body, f.N, h)
        overrides = dict(integrator=cfg.integrator,
                         weights=cfg.weights.weights(),
                         shooting=cfg.shooting,
                         bfgs=cfg.bfgs,
                         strategy=f.strategy,
                         M=f.M,
                         fix_first=f.fix_first,
                         max_alternations=f.max_alternations,
                         theta_tol=f.theta_tol,
                         improve_tol=f.improve_tol,
                         seed=f.seed,
                         theta0=f.theta0,
                         R_d=R_d if d.R is None else d.R,
                         Pi_d=Pi_d if d.Pi is None else d.Pi,
                         gamma_d=gamma_d if d.gamma is None else d.gamma,
                         initial_assignment=f.initial_assignment or list(range(1, n + 1)))
        overrides['target'] = TargetCircle(center=ref.center if cfg.target.center is None else cfg.target.center,
                                           radius=cfg.target.radius,
                                           normal=ref.normal if cfg.target.normal is None else cfg.target.normal,
                                           convention=cfg.target.convention)
        if f.initial_states:
            overrides['initial_states'] = [s.state() for s in f.initial_states]

        return default_scenario(n=n, spacing=f.spacing, N=f.N, h=h, radius=cfg.target.radius, body=body, **overrides)
    except ValidationError as err:
        first = err.errors()[0]
        raise ConfigError(f'scenario.{".".join(str(p) for p in first["loc"])}: {first["msg"]}') from err


def load_boundary(path: Union[str, Path], scenario: Scenario) -> BoundaryConditions:
    """Single-transfer boundary file; [initial] and [desired] state tables

    Raises:
        ConfigError"""
    data, text = _read(path)
    bf = validate(BoundaryFile, data, text)

    try:
        return BoundaryConditions(initial=bf.initial.state(), desired=bf.desired.state(),
                                  N=bf.N or scenario.N, h=bf.h or scenario.h)
    except ValidationError as err:
        first = err.errors()[0]
        raise ConfigError(f'{".".join(str(p) for p in first["loc"])}: {first["msg"]}') from err


if __name__ == '__main__':
    print(__doc__)
