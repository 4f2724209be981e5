"""
Driftless control-affine systems x' = sum_i u_i f_i(x), their first- and
second-order Lie brackets, and the bracket matrix F(x) whose columns span R^n.

Indices of control fields are 1-based everywhere, as in scenario documents.
The bracket convention is [f, g](x) = Dg(x) f(x) - Df(x) g(x).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .conf import steering_setting
from .exceptions import EvaluationDomainError, RankDeficiencyError, ScenarioError

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class VectorFieldSet:
    n: int
    m: int
    fields: Tuple[Field, ...]
    jacobians: Optional[Tuple[Field, ...]] = None
    fd_step: float = field(default_factory=lambda: steering_setting('FD_STEP'))
    name: str = 'custom'

    def __post_init__(self):
        object.__setattr__(self, 'fields', tuple(self.fields))
        if self.jacobians is not None:
            object.__setattr__(self, 'jacobians', tuple(self.jacobians))
        if self.n < 1 or self.m < 1:
            raise ScenarioError('n and m must be positive', code=ScenarioError.DIMENSION)
        if self.m >= self.n:
            raise ScenarioError('system must be underactuated (m < n), got m=%d, n=%d' % (self.m, self.n),
                                code=ScenarioError.DIMENSION)
        if len(self.fields) != self.m:
            raise ScenarioError('expected %d vector fields, got %d' % (self.m, len(self.fields)),
                                code=ScenarioError.DIMENSION)
        if self.jacobians is not None and len(self.jacobians) != self.m:
            raise ScenarioError('expected %d jacobians, got %d' % (self.m, len(self.jacobians)),
                                code=ScenarioError.DIMENSION)
        if not self.fd_step > 0:
            raise ScenarioError('fd_step must be positive')

    @property
    def has_jacobians(self):
        return self.jacobians is not None

    def field(self, i, x):
        value = np.asarray(self.fields[i - 1](x), dtype=float)
        if value.shape != (self.n,):
            raise EvaluationDomainError('field f%d returned shape %s, expected (%d,)' % (i, value.shape, self.n))
        if not np.all(np.isfinite(value)):
            raise EvaluationDomainError('field f%d is not finite at x=%s' % (i, np.array2string(x)))
        return value

    def matrix(self, x):
        """Columns f_1(x) ... f_m(x)."""
        return np.column_stack([self.field(i, x) for i in range(1, self.m + 1)])

    def velocity(self, x, u):
        return self.matrix(x) @ u

    def fd_jacobian(self, i, x):
        x = np.asarray(x, dtype=float)
        h = self.fd_step * max(1.0, float(np.linalg.norm(x)))
        jac = np.empty((self.n, self.n))
        for k in range(self.n):
            step = np.zeros(self.n)
            step[k] = h
            jac[:, k] = (self.field(i, x + step) - self.field(i, x - step)) / (2.0 * h)
        return jac

    def analytic_jacobian(self, i, x):
        jac = np.asarray(self.jacobians[i - 1](x), dtype=float)
        if jac.shape != (self.n, self.n):
            raise EvaluationDomainError('jacobian of f%d returned shape %s' % (i, jac.shape))
        if not np.all(np.isfinite(jac)):
            raise EvaluationDomainError('jacobian of f%d is not finite at x=%s' % (i, np.array2string(x)))
        return jac

    def jacobian(self, i, x):
        if self.has_jacobians:
            return self.analytic_jacobian(i, x)
        return self.fd_jacobian(i, x)


@dataclass(frozen=True)
class BracketBasis:
    s1: Tuple[int, ...] = ()
    s2: Tuple[Tuple[int, int], ...] = ()
    s3: Tuple[Tuple[int, int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 's1', tuple(int(i) for i in self.s1))
        object.__setattr__(self, 's2', tuple(tuple(int(i) for i in pair) for pair in self.s2))
        object.__setattr__(self, 's3', tuple(tuple(int(i) for i in triple) for triple in self.s3))
        for label, entries, width in (('S2', self.s2, 2), ('S3', self.s3, 3)):
            for entry in entries:
                if len(entry) != width:
                    raise ScenarioError('%s entry %s must have %d indices' % (label, entry, width),
                                        code=ScenarioError.DIMENSION)
        for label, entries in (('S1', self.s1), ('S2', self.s2), ('S3', self.s3)):
            if len(set(entries)) != len(entries):
                raise ScenarioError('%s contains duplicate entries: %s' % (label, list(entries)))

    @property
    def size(self):
        return len(self.s1) + len(self.s2) + len(self.s3)

    @property
    def labels(self):
        """Coefficient names in column order, e.g. ('a1', 'a2', 'a121')."""
        return tuple('a' + ''.join(str(i) for i in entry)
                     for entry in [(i,) for i in self.s1] + list(self.s2) + list(self.s3))

    def validate_for(self, vfs):
        if self.size != vfs.n:
            raise ScenarioError('|S1|+|S2|+|S3| = %d but the state dimension is %d' % (self.size, vfs.n),
                                code=ScenarioError.DIMENSION)
        indices = list(self.s1) + [i for pair in self.s2 for i in pair] + [i for t in self.s3 for i in t]
        bad = sorted({i for i in indices if not 1 <= i <= vfs.m})
        if bad:
            raise ScenarioError('basis indices %s are outside 1..%d' % (bad, vfs.m), code=ScenarioError.DIMENSION)


@dataclass(frozen=True)
class BracketMatrix:
    columns: np.ndarray
    condition_estimate: float

    @property
    def invertible(self):
        return bool(np.isfinite(self.condition_estimate))


def lie_bracket(vfs, i, j, x):
    x = np.asarray(x, dtype=float)
    if i == j:
        return np.zeros(vfs.n)
    return vfs.jacobian(j, x) @ vfs.field(i, x) - vfs.jacobian(i, x) @ vfs.field(j, x)


def second_bracket(vfs, l1, l2, l3, x, step=None):
    """
    [[f_l1, f_l2], f_l3](x). The inner bracket is differentiated along
    f_l3 by central differences even when analytic jacobians exist.
    """
    x = np.asarray(x, dtype=float)
    if l1 == l2:
        return np.zeros(vfs.n)
    if step is None:
        step = steering_setting('SECOND_BRACKET_STEP')
    inner = lie_bracket(vfs, l1, l2, x)
    direction = vfs.field(l3, x)
    first = vfs.jacobian(l3, x) @ inner
    length = float(np.linalg.norm(direction))
    if length == 0.0:
        return first
    s = step * max(1.0, float(np.linalg.norm(x))) / length
    derivative = (lie_bracket(vfs, l1, l2, x + s * direction)
                  - lie_bracket(vfs, l1, l2, x - s * direction)) / (2.0 * s)
    return first - derivative


def build_bracket_matrix(vfs, basis, x):
    basis.validate_for(vfs)
    x = np.asarray(x, dtype=float)
    columns = [vfs.field(i, x) for i in basis.s1]
    columns += [lie_bracket(vfs, j1, j2, x) for j1, j2 in basis.s2]
    columns += [second_bracket(vfs, l1, l2, l3, x) for l1, l2, l3 in basis.s3]
    matrix = np.column_stack(columns)
    with np.errstate(all='ignore'):
        condition = float(np.linalg.cond(matrix))
    if not np.isfinite(condition):
        condition = float('inf')
    return BracketMatrix(columns=matrix, condition_estimate=condition)


def solve_coefficients(bracket_matrix, grad, gamma, condition_limit=None):
    """a = -gamma F^-1 grad, in the coefficient order of the basis."""
    grad = np.asarray(grad, dtype=float)
    if condition_limit is None:
        condition_limit = steering_setting('RANK_CONDITION_LIMIT')
    if not gamma > 0:
        raise ValueError('gamma must be positive')
    if grad.shape != (bracket_matrix.columns.shape[0],):
        raise ScenarioError('gradient has length %d, expected %d' % (grad.size, bracket_matrix.columns.shape[0]),
                            code=ScenarioError.DIMENSION)
    if not bracket_matrix.condition_estimate <= condition_limit:
        raise RankDeficiencyError('bracket matrix is rank deficient (condition %.3g > %.3g)'
                                  % (bracket_matrix.condition_estimate, condition_limit),
                                  condition=bracket_matrix.condition_estimate)
    if not np.any(grad):
        return np.zeros_like(grad)
    # LAPACK gesv: LU with partial pivoting
    return np.linalg.solve(bracket_matrix.columns, -gamma * grad)


def coefficients_at(vfs, basis, grad, gamma, x):
    try:
        return solve_coefficients(build_bracket_matrix(vfs, basis, x), grad, gamma)
    except RankDeficiencyError as exc:
        exc.x = np.asarray(x, dtype=float)
        raise


@dataclass(frozen=True)
class JacobianReport:
    max_errors: Tuple[float, ...]
    tolerance: float

    @property
    def flagged(self):
        return tuple(i + 1 for i, err in enumerate(self.max_errors) if err >= self.tolerance)

    @property
    def passed(self):
        return not self.flagged


def check_jacobians(vfs, points: Sequence, tolerance=None):
    """
    Compares analytic jacobians against central differences.
    The error of field i is max over points of ||J_a - J_fd|| / max(1, ||J_fd||).
    Systems without analytic jacobians report zero error.
    """
    if tolerance is None:
        tolerance = steering_setting('JACOBIAN_TOLERANCE')
    errors = [0.0] * vfs.m
    if vfs.has_jacobians:
        for x in points:
            x = np.asarray(x, dtype=float)
            for i in range(1, vfs.m + 1):
                numeric = vfs.fd_jacobian(i, x)
                diff = np.linalg.norm(vfs.analytic_jacobian(i, x) - numeric)
                errors[i - 1] = max(errors[i - 1], float(diff / max(1.0, np.linalg.norm(numeric))))
    report = JacobianReport(max_errors=tuple(errors), tolerance=tolerance)
    if report.flagged:
        logger.warning('jacobian check flagged fields %s of %s', report.flagged, vfs.name)
    return report
