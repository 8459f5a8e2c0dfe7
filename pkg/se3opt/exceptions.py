#!/usr/bin/env python3.9
"""SE3 Opt -> Exceptions
Copyright © 2019-2021 Jerod Gawne <https://github.com/jerodg/>

This program is free software: you can redistribute it and/or modify
it under the terms of the Server Side Public License (SSPL) as
published by MongoDB, Inc., either version 1 of the
License, or (at your option) any later version."""
from typing import Any, Optional, Sequence


class Se3OptError(Exception):
    """SE3 Opt Error
       - Base for every error raised by this package; carries the cli exit code."""
    exit_code: int = 1


class GeometryError(Se3OptError, ValueError):
    """Geometry Error
       - For when a matrix violates a rotation-group precondition (non-skew, non-orthonormal)."""


class CutLocusError(GeometryError):
    """Cut Locus Error
       - For when log_so3 is asked for a rotation by π; the caller must perturb."""

    def __init__(self, trace: float):
        super().__init__(trace)
        self.trace = trace

    def __str__(self):
        return f'Rotation angle is at the cut locus (trace={self.trace:.3e}); log is not unique'


class PotentialSingularityError(Se3OptError, ArithmeticError):
    """Potential Singularity Error
       - For when a sphere of the body reaches the center of attraction."""

    def __init__(self, sphere: int, separation: float):
        super().__init__(sphere, separation)
        self.sphere = sphere
        self.separation = separation

    def __str__(self):
        return f'Sphere {self.sphere} is {self.separation:.3e} from the primary; potential is singular'


class ImplicitSolveError(Se3OptError, ArithmeticError):
    """Implicit Solve Error
       - For when the Newton iteration for the relative attitude does not converge."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(residual, iterations)
        self.residual = residual
        self.iterations = iterations

    def __str__(self):
        return f'Implicit attitude update did not converge in {self.iterations} iterations (residual={self.residual:.3e})'


class IntegrationError(Se3OptError):
    """Integration Error
       - Wraps a step failure with the index of the step that failed."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(step, cause)
        self.step = step
        self.cause = cause

    def __str__(self):
        return f'Integration failed at step {self.step}: {self.cause}'


class ShootingError(Se3OptError):
    """Shooting Error
       - For when the Newton-Armijo iteration on the initial multiplier fails."""
    exit_code = 3

    def __init__(self, residual: float, iterations: int, reason: str = 'maximum iterations exceeded'):
        super().__init__(residual, iterations, reason)
        self.residual = residual
        self.iterations = iterations
        self.reason = reason

    def __str__(self):
        return f'Shooting did not converge ({self.reason}) after {self.iterations} iterations; residual={self.residual:.3e}'


class IllConditionedError(ShootingError):
    """Ill-Conditioned Error
       - For when the terminal sensitivity to the initial multiplier is numerically singular."""

    def __init__(self, condition: float, residual: float = float('nan'), iterations: int = 0):
        super().__init__(residual, iterations, reason=f'condition number {condition:.3e}')
        self.condition = condition


class TransferError(Se3OptError):
    """Transfer Error
       - For when the optimal transfer of one body to one slot fails."""

    def __init__(self, body: int, slot: int, cause: Exception):
        super().__init__(body, slot, cause)
        self.body = body
        self.slot = slot
        self.cause = cause
        self.exit_code = getattr(cause, 'exit_code', 1)

    def __str__(self):
        return f'Transfer of body {self.body + 1} to slot {self.slot + 1} failed: {self.cause}'


class StageError(Se3OptError):
    """Stage Error
       - Labels a failure with the optimization phase that raised it."""

    def __init__(self, phase: str, cause: Exception):
        super().__init__(phase, cause)
        self.phase = phase
        self.cause = cause
        self.exit_code = getattr(cause, 'exit_code', 1)

    def __str__(self):
        return f'[{self.phase}] {self.cause}'


class BudgetExceededError(Se3OptError):
    """Budget Exceeded Error
       - For when an enumeration would need more solves than allowed."""
    exit_code = 4

    def __init__(self, requested: int, budget: int):
        super().__init__(requested, budget)
        self.requested = requested
        self.budget = budget

    def __str__(self):
        return f'{self.requested} optimal-control solves requested; budget is {self.budget}'


class ConfigError(Se3OptError):
    """Config Error
       - For when a configuration or boundary file cannot be parsed or validated."""
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message, line)
        self.message = message
        self.line = line

    def __str__(self):
        if self.line is not None:
            return f'line {self.line}: {self.message}'

        return self.message


class InvalidOptionError(ConfigError):
    """Invalid Option Error
       - For when a field can only be one of available options."""

    def __init__(self, var: Any, options: Sequence[str]):
        super().__init__(f'Invalid option {var!r}; should be one of:\n\t->' + '\n\t->'.join(options))
        self.var = var
        self.options = list(options)


if __name__ == '__main__':
    print(__doc__)
