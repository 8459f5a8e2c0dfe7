#!/usr/bin/env python3.9
"""SE3 Opt -> Models -> Assignment
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
import math
from enum import Enum
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import validator

from se3opt.models.base import Base


class Assignment(Base):
    """perm[i] = A_i, the 1-based slot of body i + 1"""
    perm: Tuple[int, ...]

    @validator('perm', pre=True)
    def bijection(cls, v) -> Tuple[int, ...]:
        perm = tuple(int(a) for a in v)
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise ValueError(f'{list(perm)} is not a permutation of 1..{len(perm)}')

        return perm

    @classmethod
    def from_zero_based(cls, cols: Sequence[int]) -> 'Assignment':
        return cls(perm=[int(c) + 1 for c in cols])

    @classmethod
    def identity(cls, n: int) -> 'Assignment':
        return cls(perm=range(1, n + 1))

    @property
    def zero_based(self) -> Tuple[int, ...]:
        return tuple(a - 1 for a in self.perm)

    @property
    def n(self) -> int:
        return len(self.perm)

    def pairs(self) -> List[Tuple[int, int]]:
        """(body, slot), 0-based"""
        return list(enumerate(self.zero_based))

    def __str__(self) -> str:
        return '(' + ','.join(str(a) for a in self.perm) + ')'


class EntryStatus(str, Enum):
    EXACT = 'Exact'
    APPROXIMATED = 'Approximated'
    UNKNOWN = 'Unknown'


class CostEntry(Base):
    """One cost-matrix element

    Exact entries carry the terminal-position sensitivity (3) and the initial-state sensitivity (12);
    Approximated entries record the anchor they were extrapolated from and the direction used."""
    value: float = math.inf
    status: EntryStatus = EntryStatus.UNKNOWN
    target: Optional[np.ndarray] = None
    terminal_sens: Optional[np.ndarray] = None
    initial_sens: Optional[np.ndarray] = None
    hessian_est: Optional[np.ndarray] = None
    anchor: Optional[Tuple[int, int]] = None
    direction: Optional[Literal['row', 'column']] = None

    @property
    def is_exact(self) -> bool:
        return self.status == EntryStatus.EXACT


class CostMatrix(Base):
    """n x n cost matrix, rows are bodies and columns are slots (0-based)"""
    entries: List[List[CostEntry]]

    @classmethod
    def unknown(cls, n: int) -> 'CostMatrix':
        return cls.construct(entries=[[CostEntry.construct() for _ in range(n)] for _ in range(n)])

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij: Tuple[int, int]) -> CostEntry:
        return self.entries[ij[0]][ij[1]]

    def __setitem__(self, ij: Tuple[int, int], entry: CostEntry):
        self.entries[ij[0]][ij[1]] = entry

    def values(self) -> np.ndarray:
        return np.array([[e.value for e in row] for row in self.entries], dtype=float)

    def exact_mask(self) -> np.ndarray:
        return np.array([[e.is_exact for e in row] for row in self.entries], dtype=bool)

    def exact_count(self) -> int:
        return int(self.exact_mask().sum())

    def row_exact(self, i: int) -> List[int]:
        return [j for j, e in enumerate(self.entries[i]) if e.is_exact]

    def column_exact(self, j: int) -> List[int]:
        return [i for i in range(self.n) if self.entries[i][j].is_exact]

    def snapshot(self) -> List[List[dict]]:
        """Plain values for persistence"""
        return [[{'value': e.value, 'status': e.status.value, 'anchor': e.anchor, 'direction': e.direction} for e in row]
                for row in self.entries]


class LoopRecord(Base):
    """One pass of the combinatorial loop"""
    iteration: int
    proposed: List[int]
    solved: List[Tuple[int, int]]
    best: List[int]
    best_cost: float
    direction: str
    repeats: int
    matrix: List[List[float]]


if __name__ == '__main__':
    print(__doc__)
