"""
pi_eps (sampled-data) closed-loop integration and the reference gradient flow.

Each epoch [t_j, t_j + eps) freezes x_hold = x(t_j), precomputes the
epoch's controls on the RK4 nodes and half-nodes, and integrates with a
fixed step. Everything here is deterministic: re-running an epoch from its
recorded (t_j, x(t_j)) with the same step count reproduces it bit-for-bit.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .conf import steering_setting
from .control import ControlLaw, validate_nonresonance
from .exceptions import (BoundarySingularityError, CollisionError, EvaluationDomainError,
                         FrequencyAssignmentError, ScenarioError)
from .potential import free_space_margin

logger = logging.getLogger(__name__)

CONVERGED = 'converged'
HORIZON_EXHAUSTED = 'horizon-exhausted'
CRITICAL_POINT = 'critical-point'
COLLISION = 'collision'
RANK_FAILURE = 'rank-failure'


def _setting(name):
    return field(default_factory=lambda: steering_setting(name))


@dataclass(frozen=True)
class SimConfig:
    epsilon: float
    substeps_per_unit_frequency: int = _setting('SUBSTEPS_PER_UNIT_FREQUENCY')
    t_max: float = _setting('T_MAX')
    stop_distance: float = _setting('STOP_DISTANCE')
    collision_margin: float = _setting('COLLISION_MARGIN')
    gradient_tolerance: float = _setting('GRADIENT_TOLERANCE')

    def __post_init__(self):
        problems = ['%s must be positive' % name
                    for name in ('epsilon', 't_max', 'stop_distance', 'collision_margin', 'gradient_tolerance')
                    if not getattr(self, name) > 0]
        floor = steering_setting('MIN_SUBSTEPS_PER_UNIT_FREQUENCY')
        if int(self.substeps_per_unit_frequency) < floor:
            problems.append('substeps_per_unit_frequency must be at least %d, got %s'
                            % (floor, self.substeps_per_unit_frequency))
        if problems:
            raise ScenarioError(problems)
        object.__setattr__(self, 'substeps_per_unit_frequency', int(self.substeps_per_unit_frequency))

    def steps_per_epoch(self, max_frequency=1):
        return self.substeps_per_unit_frequency * max(1, int(max_frequency))

    @property
    def epoch_count(self):
        return int(math.floor(self.t_max / self.epsilon + 1e-9))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    epoch_starts: List[int]
    distance: np.ndarray
    margin: np.ndarray
    potential: np.ndarray
    log_barrier: np.ndarray
    epsilon: float
    outcome: str = HORIZON_EXHAUSTED
    epoch_gradient_norms: List[float] = field(default_factory=list)
    epoch_control_sups: List[float] = field(default_factory=list)

    @property
    def n(self):
        return self.states.shape[1]

    @property
    def epochs(self):
        return len(self.epoch_control_sups)

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_distance(self):
        return float(self.distance[-1])

    @property
    def min_margin(self):
        return float(np.min(self.margin))

    @property
    def epoch_potentials(self):
        return self.potential[self.epoch_starts]

    def epoch_slice(self, j):
        """Samples of epoch j, both boundaries included."""
        start = self.epoch_starts[j]
        stop = self.epoch_starts[j + 1] if j + 1 < len(self.epoch_starts) else len(self.times) - 1
        return slice(start, stop + 1)


def rk4_path(rhs, x0, h, u_nodes, u_half):
    """
    Classical RK4 with controls held per stage: u_nodes[i] at t_i,
    u_half[i] at t_i + h/2. Returns the states at every node.
    """
    steps = len(u_half)
    states = np.empty((steps + 1, x0.size))
    states[0] = x = np.array(x0, dtype=float)
    for i in range(steps):
        k1 = rhs(x, u_nodes[i])
        k2 = rhs(x + 0.5 * h * k1, u_half[i])
        k3 = rhs(x + 0.5 * h * k2, u_half[i])
        k4 = rhs(x + h * k3, u_nodes[i + 1])
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[i + 1] = x
    if not np.all(np.isfinite(states)):
        raise EvaluationDomainError('integration produced non-finite states')
    return states


def _controlled_rhs(vfs):
    def rhs(x, u):
        return vfs.velocity(x, u)
    return rhs


@dataclass
class EpochSegment:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    control_sup: float


def integrate_epoch(vfs, epoch_control, x_hold, t_start, epsilon, steps):
    """One epoch from x_hold at t_start; times/states/controls include both ends."""
    h = epsilon / steps
    offsets = h * np.arange(steps + 1)
    times = t_start + offsets
    half_times = t_start + h * (np.arange(steps) + 0.5)
    u_nodes = epoch_control.at(times)
    u_half = epoch_control.at(half_times)
    states = rk4_path(_controlled_rhs(vfs), np.asarray(x_hold, dtype=float), h, u_nodes, u_half)
    sup = max(np.max(np.sum(np.abs(u_nodes), axis=1)), np.max(np.sum(np.abs(u_half), axis=1)))
    return EpochSegment(times, states, u_nodes, float(sup))


def integrate_open_loop(vfs, signal, x0, epsilon, steps):
    """Integrates an open-loop signal u(t) over [0, epsilon]; returns all node states."""
    h = epsilon / steps
    u_nodes = signal(h * np.arange(steps + 1))
    u_half = signal(h * (np.arange(steps) + 0.5))
    return rk4_path(_controlled_rhs(vfs), np.asarray(x0, dtype=float), h, u_nodes, u_half)


class _Recorder:
    """Accumulates epoch segments and evaluates the metric streams per segment."""

    def __init__(self, nf, epsilon):
        self.nf = nf
        self.epsilon = epsilon
        self.chunks = []
        self.epoch_starts = []
        self.gradient_norms = []
        self.control_sups = []
        self.count = 0

    def metrics(self, states):
        scene = self.nf.scene
        return (np.linalg.norm(states - self.nf.target, axis=1), scene.margins(states),
                self.nf.values(states), scene.log_barrier(states))

    def add(self, times, states, controls, epoch=True):
        if epoch:
            self.epoch_starts.append(self.count)
        self.chunks.append((times, states, controls) + self.metrics(states))
        self.count += len(times)

    def build(self, outcome):
        columns = list(zip(*self.chunks))
        times, states, controls, distance, margin, potential, log_barrier = (np.concatenate(c) for c in columns)
        return Trajectory(times=times, states=states, controls=controls, epoch_starts=list(self.epoch_starts),
                          distance=distance, margin=margin, potential=potential, log_barrier=log_barrier,
                          epsilon=self.epsilon, outcome=outcome, epoch_gradient_norms=list(self.gradient_norms),
                          epoch_control_sups=list(self.control_sups))


def _collision(recorder, time, state, reason):
    trajectory = recorder.build(COLLISION)
    logger.info('collision at t=%.6g: %s', time, reason)
    return CollisionError('collision at t=%.6g, x=%s: %s' % (time, np.array2string(state), reason),
                          time=time, state=state, trajectory=trajectory)


def pi_epsilon_solve(vfs, basis, nf, fa, params, x0, cfg):
    x0 = np.asarray(x0, dtype=float)
    if not free_space_margin(nf.scene, x0) > 0:
        raise ScenarioError('x0=%s is not strictly inside the free space' % np.array2string(x0),
                            code=ScenarioError.FEASIBILITY)
    report = validate_nonresonance(fa, basis)
    if not report.passed:
        raise FrequencyAssignmentError('; '.join(report.violations))

    law = ControlLaw(vfs, basis, nf, fa, params)
    eps = params.epsilon
    steps = cfg.steps_per_epoch(fa.max_frequency)
    recorder = _Recorder(nf, eps)
    x_hold = x0
    last_controls = np.zeros((1, vfs.m))
    logger.debug('pi_eps run: eps=%g gamma=%g, %d steps per epoch', eps, params.gamma, steps)

    outcome = HORIZON_EXHAUSTED
    for j in range(cfg.epoch_count + 1):
        t_j = j * eps
        distance = float(np.linalg.norm(x_hold - nf.target))
        try:
            gradient = nf.gradient(x_hold)
        except BoundarySingularityError as exc:
            recorder.add(np.array([t_j]), x_hold[None, :], last_controls, epoch=False)
            raise _collision(recorder, t_j, x_hold, str(exc)) from exc
        gradient_norm = float(np.linalg.norm(gradient))
        stop = None
        if distance <= cfg.stop_distance:
            stop = CONVERGED
        elif gradient_norm < cfg.gradient_tolerance:
            stop = CRITICAL_POINT
        elif j == cfg.epoch_count:
            stop = HORIZON_EXHAUSTED
        if stop is not None:
            recorder.add(np.array([t_j]), x_hold[None, :], last_controls, epoch=False)
            outcome = stop
            break

        control = law.epoch(x_hold)
        recorder.gradient_norms.append(gradient_norm)
        segment = integrate_epoch(vfs, control, x_hold, t_j, eps, steps)
        recorder.control_sups.append(segment.control_sup)
        margins = nf.scene.margins(segment.states)
        hit = np.flatnonzero(margins < cfg.collision_margin)
        if hit.size:
            k = int(hit[0])
            recorder.add(segment.times[:k + 1], segment.states[:k + 1], segment.controls[:k + 1])
            raise _collision(recorder, float(segment.times[k]), segment.states[k],
                             'free-space margin %.3g below %.3g' % (margins[k], cfg.collision_margin))
        recorder.add(segment.times[:-1], segment.states[:-1], segment.controls[:-1])
        x_hold = segment.states[-1]
        last_controls = segment.controls[-1:]
        if j % 50 == 0:
            logger.debug('epoch %d: t=%.4g distance=%.6g |grad P|=%.3g', j, t_j, distance, gradient_norm)

    trajectory = recorder.build(outcome)
    logger.info('pi_eps run finished: %s after %d epochs, distance %.6g', outcome, trajectory.epochs,
                trajectory.final_distance)
    return trajectory


def gradient_flow_solve(nf, x0, cfg, gain=1.0):
    """
    Reference flow x' = -gain * grad P(x) with the same RK4 at step
    eps / substeps_per_unit_frequency; an epoch marker every eps.
    """
    x = np.asarray(x0, dtype=float)
    steps = cfg.substeps_per_unit_frequency
    h = cfg.epsilon / steps
    recorder = _Recorder(nf, cfg.epsilon)
    no_control = np.zeros((steps + 1, 0))

    def rhs(state, _):
        return -gain * nf.gradient(state)

    j = 0
    while True:
        t_j = j * cfg.epsilon
        gradient_norm = float(np.linalg.norm(nf.gradient(x)))
        if float(np.linalg.norm(x - nf.target)) <= cfg.stop_distance:
            outcome = CONVERGED
        elif gradient_norm < cfg.gradient_tolerance:
            outcome = CRITICAL_POINT
        elif j == cfg.epoch_count:
            outcome = HORIZON_EXHAUSTED
        else:
            outcome = None
        if outcome is not None:
            recorder.add(np.array([t_j]), x[None, :], no_control[:1], epoch=False)
            return recorder.build(outcome)

        recorder.gradient_norms.append(gradient_norm)
        states = rk4_path(rhs, x, h, no_control, no_control[:-1])
        times = t_j + h * np.arange(steps + 1)
        margins = nf.scene.margins(states)
        hit = np.flatnonzero(margins < cfg.collision_margin)
        if hit.size:
            k = int(hit[0])
            recorder.add(times[:k + 1], states[:k + 1], no_control[:k + 1])
            raise _collision(recorder, float(times[k]), states[k], 'gradient flow left the free space')
        recorder.control_sups.append(0.0)
        recorder.add(times[:-1], states[:-1], no_control[:-1])
        x = states[-1]
        j += 1
