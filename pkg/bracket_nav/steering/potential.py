"""
Workspace, obstacles and the navigation function

    P(x) = |x - x*|^2 / (|x - x*|^4 + prod_j beta_j(x))^(1/2)

where beta_0 >= 0 describes the workspace and beta_j < 0 (j >= 1) the
interior of obstacle j. Every beta_j is a quadric.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .conf import steering_setting
from .exceptions import BoundarySingularityError, OutsideFreeSpaceError, ScenarioError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadricFunction:
    """beta(x) = x^T quad x + lin . x + const, with quad symmetrized."""

    quad: np.ndarray
    lin: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        quad = np.atleast_2d(np.asarray(self.quad, dtype=float))
        lin = np.asarray(self.lin, dtype=float).reshape(-1)
        if quad.shape != (lin.size, lin.size):
            raise ScenarioError('quadric matrix shape %s does not match linear term of length %d'
                                % (quad.shape, lin.size), code=ScenarioError.DIMENSION)
        object.__setattr__(self, 'quad', 0.5 * (quad + quad.T))
        object.__setattr__(self, 'lin', lin)
        object.__setattr__(self, 'const', float(self.const))

    @property
    def n(self):
        return self.lin.size

    @classmethod
    def ball(cls, center, radius_sq):
        """Inside-positive sphere: radius_sq - |x - center|^2."""
        center = np.asarray(center, dtype=float)
        return cls(-np.eye(center.size), 2.0 * center, radius_sq - center @ center)

    @classmethod
    def sphere_exterior(cls, center, radius_sq):
        """Outside-positive sphere: |x - center|^2 - radius_sq."""
        return -cls.ball(center, radius_sq)

    @classmethod
    def squared_affine(cls, weight, direction, offset=0.0):
        """weight * (direction . x + offset)^2"""
        d = np.asarray(direction, dtype=float)
        return cls(weight * np.outer(d, d), 2.0 * weight * offset * d, weight * offset ** 2)

    @classmethod
    def affine(cls, lin, const=0.0):
        lin = np.asarray(lin, dtype=float)
        return cls(np.zeros((lin.size, lin.size)), lin, const)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return QuadricFunction(self.quad, self.lin, self.const + other)
        return QuadricFunction(self.quad + other.quad, self.lin + other.lin, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return QuadricFunction(-self.quad, -self.lin, -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum('...i,ij,...j->...', x, self.quad, x) + x @ self.lin + self.const

    def gradient(self, x):
        return 2.0 * np.asarray(x, dtype=float) @ self.quad + self.lin

    def bounding_box(self, inside_positive):
        """
        Half-width box of the bounded region {beta >= 0} (inside_positive) or
        {beta <= 0}, or None when that region is unbounded.
        """
        quad = -self.quad if inside_positive else self.quad
        try:
            np.linalg.cholesky(quad)
        except np.linalg.LinAlgError:
            return None
        center = -0.5 * np.linalg.solve(self.quad, self.lin)
        level = abs(float(self(center)))
        half = np.sqrt(level * np.diag(np.linalg.inv(quad)))
        return center - half, center + half

    def to_document(self):
        return {
            'quad': self.quad.tolist(),
            'lin': self.lin.tolist(),
            'const': self.const,
        }

    def __eq__(self, other):
        if not isinstance(other, QuadricFunction):
            return NotImplemented
        return (np.array_equal(self.quad, other.quad) and np.array_equal(self.lin, other.lin)
                and self.const == other.const)

    __hash__ = None


@dataclass(frozen=True)
class Scene:
    workspace: QuadricFunction
    obstacles: Tuple[QuadricFunction, ...]
    target: np.ndarray
    walls: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'obstacles', tuple(self.obstacles))
        object.__setattr__(self, 'target', np.asarray(self.target, dtype=float))
        n = self.workspace.n
        if self.target.shape != (n,):
            raise ScenarioError('target has length %d, expected %d' % (self.target.size, n),
                                code=ScenarioError.DIMENSION)
        for j, obstacle in enumerate(self.obstacles, start=1):
            if obstacle.n != n:
                raise ScenarioError('obstacle %d is defined on R^%d, workspace on R^%d' % (j, obstacle.n, n),
                                    code=ScenarioError.DIMENSION)

    @property
    def n(self):
        return self.workspace.n

    @property
    def functions(self):
        return (self.workspace,) + self.obstacles

    def betas(self, x):
        """beta_0 ... beta_N stacked on the last axis."""
        return np.stack([beta(x) for beta in self.functions], axis=-1)

    def barrier(self, x):
        return np.prod(self.betas(x), axis=-1)

    def margins(self, x):
        return np.min(self.betas(x), axis=-1)

    def log_barrier(self, x):
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.log1p(self.barrier(x))

    def target_is_free(self):
        return bool(free_space_margin(self, self.target) > 0)

    def bounding_box(self):
        box = self.workspace.bounding_box(inside_positive=True)
        if box is None:
            raise ScenarioError('workspace is unbounded; a bounded free space is required',
                                code=ScenarioError.FEASIBILITY)
        return box


@dataclass(frozen=True)
class NavigationFunction:
    scene: Scene
    boundary_tolerance: float = field(default_factory=lambda: steering_setting('BOUNDARY_TOLERANCE'))

    @property
    def target(self):
        return self.scene.target

    def value(self, x):
        return eval_P(self, x)

    def gradient(self, x):
        return grad_P(self, x)

    def values(self, xs):
        """Vectorized P over rows; NaN where the radicand is negative."""
        xs = np.asarray(xs, dtype=float)
        diff = xs - self.target
        q = np.einsum('...i,...i->...', diff, diff)
        radicand = q ** 2 + self.scene.barrier(xs)
        with np.errstate(invalid='ignore', divide='ignore'):
            values = np.where(radicand > 0, q / np.sqrt(np.where(radicand > 0, radicand, 1.0)), np.nan)
        return np.where(q == 0.0, 0.0, values)


def eval_P(nf, x):
    x = np.asarray(x, dtype=float)
    diff = x - nf.target
    q = float(diff @ diff)
    if q == 0.0:
        return 0.0
    radicand = q * q + float(nf.scene.barrier(x))
    if radicand < 0.0:
        raise OutsideFreeSpaceError('navigation function radicand is negative (%.3g) at x=%s'
                                    % (radicand, np.array2string(x)))
    return q / np.sqrt(radicand)


def _barrier_gradient(betas, gradients):
    # sum_j grad(beta_j) * prod_{i != j} beta_i without dividing by beta_j
    prefix = np.concatenate(([1.0], np.cumprod(betas)[:-1]))
    suffix = np.concatenate((np.cumprod(betas[::-1])[::-1][1:], [1.0]))
    return (prefix * suffix) @ gradients


def grad_P(nf, x):
    x = np.asarray(x, dtype=float)
    functions = nf.scene.functions
    betas = np.array([float(beta(x)) for beta in functions])
    barrier = float(np.prod(betas))
    if barrier < nf.boundary_tolerance:
        raise BoundarySingularityError('product of obstacle functions %.3g is below %.3g at x=%s'
                                       % (barrier, nf.boundary_tolerance, np.array2string(x)))
    diff = x - nf.target
    q = float(diff @ diff)
    if q == 0.0:
        return np.zeros_like(x)
    grad_q = 2.0 * diff
    grad_barrier = _barrier_gradient(betas, np.stack([beta.gradient(x) for beta in functions]))
    radicand = q * q + barrier
    return (barrier * grad_q - 0.5 * q * grad_barrier) / radicand ** 1.5


def free_space_margin(scene, x):
    return float(scene.margins(np.asarray(x, dtype=float)))


@dataclass
class SceneReport:
    overlaps: List[tuple] = field(default_factory=list)
    containment: List[tuple] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    samples: int = 0

    @property
    def valid(self):
        return not self.overlaps and not self.containment

    def describe(self):
        lines = ['obstacles %d and %d overlap (%d samples, e.g. %s)' % (j, k, count, np.round(point, 4).tolist())
                 for j, k, count, point in self.overlaps]
        lines += ['obstacle %d leaves the workspace (%d samples, e.g. %s)' % (j, count, np.round(point, 4).tolist())
                  for j, count, point in self.containment]
        return lines


def _sample_cloud(scene, resolution, samples, rng):
    boxes = [scene.bounding_box()]
    boxes += [box for box in (o.bounding_box(inside_positive=False) for o in scene.obstacles) if box is not None]
    clouds = []
    for low, high in boxes:
        if resolution ** scene.n <= 2_000_000:
            axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(low, high)]
            clouds.append(np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, scene.n))
        clouds.append(rng.uniform(low, high, size=(samples, scene.n)))
        clouds.append(0.5 * (low + high)[None, :])
    return np.concatenate(clouds)


def validate_scene(scene, resolution=21, samples=None, seed=0):
    """
    Empirical validity scan: obstacle closures must lie in the workspace
    interior and must not intersect each other. Wall scenes only warn
    about overlaps and skip containment.
    """
    if samples is None:
        samples = steering_setting('SCENE_SAMPLES')
    rng = np.random.default_rng(seed)
    cloud = _sample_cloud(scene, resolution, samples, rng)
    betas = scene.betas(cloud)
    report = SceneReport(samples=len(cloud))
    inside_workspace = betas[:, 0] > 0
    for j, k in itertools.combinations(range(1, len(scene.functions)), 2):
        both = (betas[:, j] < 0) & (betas[:, k] < 0)
        if scene.walls:
            both &= inside_workspace
        if np.any(both):
            entry = (j, k, int(both.sum()), cloud[np.argmax(both)])
            if scene.walls:
                report.warnings.append('walls %d and %d intersect inside the workspace (e.g. %s)'
                                       % (j, k, np.round(entry[3], 4).tolist()))
            else:
                report.overlaps.append(entry)
    if not scene.walls:
        for j in range(1, len(scene.functions)):
            outside = (betas[:, j] <= 0) & ~inside_workspace
            if np.any(outside):
                report.containment.append((j, int(outside.sum()), cloud[np.argmax(outside)]))
    for line in report.describe():
        logger.warning(line)
    for line in report.warnings:
        logger.info(line)
    return report
