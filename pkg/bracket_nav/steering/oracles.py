"""
Empirical checks of the averaging analysis: one-epoch remainder order,
open-loop bracket displacement, per-epoch decrease of P and the a-priori
excursion bound.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .conf import steering_setting
from .control import (REPEATED_INDEX, ControlLaw, FrequencyAssignment, remark1_primitive,
                      validate_nonresonance)
from .exceptions import FrequencyAssignmentError
from .sim import COLLISION, integrate_epoch, integrate_open_loop
from .system import BracketBasis, second_bracket

logger = logging.getLogger(__name__)

EPOCH_DISPLACEMENT_ORDER = 4.0 / 3.0 - 0.1
DRIFT_TOLERANCE = 0.1
REMARK1_TOLERANCE = 0.1
CUBIC_ORDER_TOLERANCE = 0.15
DEGENERATE_BRACKET = 1e-12


def fitted_slope(epsilons, values):
    """Least-squares slope of log(values) against log(epsilons); NaN if not computable."""
    epsilons = np.asarray(epsilons, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(epsilons) < 2 or np.any(values <= 0):
        return math.nan
    return float(np.polyfit(np.log(epsilons), np.log(values), 1)[0])


@dataclass
class OrderReport:
    name: str
    epsilons: List[float]
    residuals: List[float]
    slope: float
    relative_errors: List[float] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def to_document(self):
        return {
            'oracle': self.name,
            'passed': self.passed,
            'epsilons': list(self.epsilons),
            'residuals': list(self.residuals),
            'relative_errors': list(self.relative_errors),
            'slope': self.slope,
            'failures': list(self.failures),
        }


def epoch_displacement_oracle(vfs, basis, nf, fa, params, x0, epsilons, substeps=None):
    """
    r(eps) = |x(eps) - x0 + eps gamma grad P(x0)| for one epoch per eps;
    passes when the log-log slope is at least 4/3 - 0.1 and
    (x(eps) - x0)/eps is within 10% of -gamma grad P(x0) at the smallest eps.
    """
    x0 = np.asarray(x0, dtype=float)
    epsilons = sorted((float(e) for e in epsilons), reverse=True)
    if substeps is None:
        substeps = 4 * steering_setting('SUBSTEPS_PER_UNIT_FREQUENCY')
    steps = substeps * fa.max_frequency
    drift = params.gamma * nf.gradient(x0)
    residuals, errors = [], []
    for eps in epsilons:
        law = ControlLaw(vfs, basis, nf, fa, replace(params, epsilon=eps))
        x_end = integrate_epoch(vfs, law.epoch(x0), x0, 0.0, eps, steps).states[-1]
        residuals.append(float(np.linalg.norm(x_end - x0 + eps * drift)))
        if np.any(drift):
            errors.append(float(np.linalg.norm((x_end - x0) / eps + drift) / np.linalg.norm(drift)))
        else:
            errors.append(0.0)
        logger.debug('epoch displacement eps=%g: r=%.6g', eps, residuals[-1])

    report = OrderReport('epoch-displacement', epsilons, residuals, fitted_slope(epsilons, residuals), errors)
    if not np.any(drift):
        report.slope = math.nan
        if any(residuals):
            report.failures.append('grad P(x0) = 0 but the epoch moved the state')
        return report
    if not report.slope >= EPOCH_DISPLACEMENT_ORDER:
        report.failures.append('remainder order %.4g is below %.4g' % (report.slope, EPOCH_DISPLACEMENT_ORDER))
    if errors and errors[-1] >= DRIFT_TOLERANCE:
        report.failures.append('mean velocity deviates from -gamma grad P by %.2f%% at eps=%g'
                               % (100 * errors[-1], epsilons[-1]))
    logger.info('epoch displacement oracle: slope %.4g, passed=%s', report.slope, report.passed)
    return report


def remark1_displacement_oracle(vfs, triple, frequencies, epsilons, x0, variant=REPEATED_INDEX, substeps=None):
    """
    Integrates the unit-amplitude primitive of a triple for one epoch per eps
    and compares the displacement with eps^3/(16 pi^2 (K2^2 - K1^2)) times
    the second bracket at x0.
    """
    x0 = np.asarray(x0, dtype=float)
    epsilons = sorted((float(e) for e in epsilons), reverse=True)
    triple = tuple(int(i) for i in triple)
    k1, k2 = frequencies
    report = OrderReport('remark1', epsilons, [], math.nan)

    try:
        assignment = FrequencyAssignment(k3={triple: (k1, k2)})
    except FrequencyAssignmentError as exc:
        report.failures.append(str(exc))
    else:
        report.failures.extend(validate_nonresonance(assignment, BracketBasis(s3=(triple,))).violations)

    bracket = second_bracket(vfs, *triple, x0)
    if np.linalg.norm(bracket) < DEGENERATE_BRACKET:
        report.failures.append('degenerate reference bracket [[f%d,f%d],f%d](x0) = 0 on %s'
                               % (triple + (vfs.name,)))
        return report

    if substeps is None:
        substeps = 4 * steering_setting('SUBSTEPS_PER_UNIT_FREQUENCY')
    steps = substeps * max(abs(k1), abs(k2), abs(k1 + k2), abs(k2 - k1), 1)
    displacements = []
    for eps in epsilons:
        signal = remark1_primitive(triple, (k1, k2), eps, variant=variant, m=vfs.m)
        displacement = integrate_open_loop(vfs, signal, x0, eps, steps)[-1] - x0
        displacements.append(float(np.linalg.norm(displacement)))
        predicted = signal.leading_coefficient * bracket
        if np.all(np.isfinite(predicted)):
            report.relative_errors.append(float(np.linalg.norm(displacement - predicted) / np.linalg.norm(predicted)))
        else:
            report.relative_errors.append(math.inf)
    report.residuals = displacements
    report.slope = fitted_slope(epsilons, displacements)

    if not all(np.isfinite(report.relative_errors)):
        report.failures.append('closed-form displacement is undefined for K1=%d, K2=%d' % (k1, k2))
    elif max(report.relative_errors) >= REMARK1_TOLERANCE:
        report.failures.append('displacement deviates from the closed form by %.2f%%'
                               % (100 * max(report.relative_errors)))
    if not abs(report.slope - 3.0) <= CUBIC_ORDER_TOLERANCE:
        report.failures.append('displacement order %.4g is not 3 +- %.2f' % (report.slope, CUBIC_ORDER_TOLERANCE))
    logger.info('remark1 oracle on %s: slope %.4g, passed=%s', vfs.name, report.slope, report.passed)
    return report


@dataclass
class MonotonicityReport:
    increases: List[tuple] = field(default_factory=list)
    epochs: int = 0
    slack: float = 0.0

    @property
    def violations(self):
        return len(self.increases)

    @property
    def largest_increase(self):
        return max((amount for _, amount in self.increases), default=0.0)

    @property
    def passed(self):
        return not self.increases

    def to_document(self):
        return {
            'oracle': 'monotonicity',
            'passed': self.passed,
            'violations': self.violations,
            'largest_increase': self.largest_increase,
            'epochs': self.epochs,
        }


def monotonicity_check(traj, slack=None):
    """P at consecutive epoch boundaries must not increase by more than slack."""
    if slack is None:
        slack = steering_setting('MONOTONICITY_SLACK')
    indices = list(traj.epoch_starts)
    if traj.outcome != COLLISION and (not indices or indices[-1] != len(traj.times) - 1):
        indices.append(len(traj.times) - 1)
    values = traj.potential[indices]
    report = MonotonicityReport(epochs=len(values) - 1, slack=slack)
    for j, (before, after) in enumerate(zip(values[:-1], values[1:])):
        if after > before + slack:
            report.increases.append((j, float(after - before)))
    if report.increases:
        logger.warning('P increased across %d of %d epochs (largest %.3g)', report.violations, report.epochs,
                       report.largest_increase)
    return report


@dataclass
class Lemma1Report:
    lipschitz: float
    field_bound: float
    max_ratio: float = 0.0
    violations: List[tuple] = field(default_factory=list)
    epochs: int = 0

    @property
    def passed(self):
        return not self.violations

    def to_document(self):
        return {
            'oracle': 'lemma1',
            'passed': self.passed,
            'lipschitz': self.lipschitz,
            'field_bound': self.field_bound,
            'max_ratio': self.max_ratio,
            'violations': len(self.violations),
            'epochs': self.epochs,
        }


def estimate_field_constants(traj, vfs, samples=None, seed=0):
    """
    L = max operator norm of the field jacobians and M = max field norm over
    random points of the trajectory's bounding box plus the trajectory itself.
    Sampled estimates, not certified constants.
    """
    if samples is None:
        samples = steering_setting('LIPSCHITZ_SAMPLES')
    rng = np.random.default_rng(seed)
    low, high = traj.states.min(axis=0), traj.states.max(axis=0)
    stride = max(1, len(traj.states) // samples)
    points = np.concatenate([rng.uniform(low, high, size=(samples, traj.n)), traj.states[::stride],
                             traj.states[-1:]])
    lipschitz = field_bound = 0.0
    for x in points:
        for i in range(1, vfs.m + 1):
            lipschitz = max(lipschitz, float(np.linalg.norm(vfs.jacobian(i, x), 2)))
            field_bound = max(field_bound, float(np.linalg.norm(vfs.field(i, x))))
    return lipschitz, field_bound


def lemma1_bound_check(traj, vfs, lipschitz_estimate: Optional[float] = None, samples=None, seed=0):
    """
    |x(t) - x(t_j)| <= M/L (exp(L U_j (t - t_j)) - 1) on every epoch j, with
    U_j the epoch's sup of sum_k |u_k|. L = 0 uses the limit M U_j (t - t_j).
    """
    lipschitz, field_bound = estimate_field_constants(traj, vfs, samples, seed)
    if lipschitz_estimate is not None:
        lipschitz = float(lipschitz_estimate)
    report = Lemma1Report(lipschitz=lipschitz, field_bound=field_bound, epochs=traj.epochs)
    for j in range(traj.epochs):
        window = traj.epoch_slice(j)
        elapsed = traj.times[window] - traj.times[window][0]
        excursion = np.linalg.norm(traj.states[window] - traj.states[window][0], axis=1)
        growth = traj.epoch_control_sups[j] * elapsed
        if lipschitz > 0:
            bound = field_bound / lipschitz * np.expm1(lipschitz * growth)
        else:
            bound = field_bound * growth
        tolerance = 1e-9 * bound + 1e-12
        broken = np.flatnonzero(excursion > bound + tolerance)
        if broken.size:
            k = int(broken[0])
            report.violations.append((j, float(excursion[k]), float(bound[k])))
        positive = bound > 0
        if np.any(positive):
            report.max_ratio = max(report.max_ratio, float(np.max(excursion[positive] / bound[positive])))
    if report.violations:
        logger.warning('a-priori excursion bound violated on %d epochs', len(report.violations))
    return report
