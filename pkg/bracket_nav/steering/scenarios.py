"""
Scenarios: a control system, its bracket basis, a scene, control parameters,
frequencies, simulation settings and an initial state. Built-in scenarios
reproduce the two worked examples; other scenarios are TOML documents with
the sections [system], [basis], [scene], [scene.workspace],
[[scene.obstacles]], [control] and [sim].
"""

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

from .catalog import catalog_system
from .conf import steering_setting
from .control import ControlParams, FrequencyAssignment, assign_frequencies, validate_nonresonance
from .exceptions import FrequencyAssignmentError, ScenarioError
from .expressions import expression_system
from .forms import BasisForm, ControlForm, QuadricForm, SceneForm, SimForm, SystemForm
from .potential import NavigationFunction, QuadricFunction, Scene, free_space_margin, validate_scene
from .sim import SimConfig, pi_epsilon_solve
from .system import BracketBasis, build_bracket_matrix, check_jacobians

try:
    import tomllib
except ImportError:  # pragma: no cover
    import tomli as tomllib

logger = logging.getLogger(__name__)

SIM_KEYS = ('t_max', 'substeps_per_unit_frequency', 'stop_distance', 'collision_margin', 'gradient_tolerance')


@dataclass(frozen=True)
class Scenario:
    name: str
    system: object
    basis: BracketBasis
    scene: Scene
    params: ControlParams
    frequencies: FrequencyAssignment
    sim: SimConfig
    x0: np.ndarray
    system_document: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'x0', np.asarray(self.x0, dtype=float))
        self.basis.validate_for(self.system)
        n = self.system.n
        if self.scene.n != n:
            raise ScenarioError('scene is defined on R^%d but the system on R^%d' % (self.scene.n, n),
                                code=ScenarioError.DIMENSION)
        if self.x0.shape != (n,):
            raise ScenarioError('x0 has %d entries, expected %d' % (self.x0.size, n), code=ScenarioError.DIMENSION)
        problems = []
        if not free_space_margin(self.scene, self.scene.target) > 0:
            problems.append('target %s is not strictly inside the free space' % self.scene.target.tolist())
        if not free_space_margin(self.scene, self.x0) > 0:
            problems.append('x0 %s is not strictly inside the free space' % self.x0.tolist())
        if problems:
            raise ScenarioError(problems, code=ScenarioError.FEASIBILITY)

    @property
    def navigation(self):
        return NavigationFunction(self.scene)

    @property
    def target(self):
        return self.scene.target

    def run(self):
        return pi_epsilon_solve(self.system, self.basis, self.navigation, self.frequencies, self.params, self.x0,
                                self.sim)


def _sphere_scene(n, workspace_radius_sq, obstacles, target):
    return Scene(
        workspace=QuadricFunction.ball(np.zeros(n), workspace_radius_sq),
        obstacles=[QuadricFunction.sphere_exterior(center, radius_sq) for center, radius_sq in obstacles],
        target=target,
    )


def builtin_rigid_body():
    scene = _sphere_scene(3, 12.25, [
        ((0.0, 0.0, 1.75), 0.5625),
        ((0.5, 0.0, -1.5), 0.5625),
        ((-2.0, 0.0, 0.0), 0.36),
    ], target=(0.0, 0.0, 3.0))
    params = ControlParams(epsilon=0.5, gamma=0.5)
    return Scenario(
        name='rigid-body',
        system=catalog_system('rigid-body'),
        basis=BracketBasis(s1=(1, 2), s3=((1, 2, 1),)),
        scene=scene,
        params=params,
        frequencies=FrequencyAssignment(k3={(1, 2, 1): (1, 3)}),
        sim=SimConfig(epsilon=params.epsilon, t_max=200.0),
        x0=(0.0, 0.0, -3.0),
        system_document={'catalog': 'rigid-body'},
    )


def rolling_disc_scene():
    e = np.eye(4)
    diagonal, anti = e[0] - e[1], e[0] + e[1]
    workspace = (QuadricFunction.affine(np.zeros(4), 1.0)
                 + QuadricFunction.squared_affine(-1.0 / 8.0, diagonal)
                 + QuadricFunction.squared_affine(-1.0 / 32.0, anti)
                 + QuadricFunction.squared_affine(-0.1, e[2])
                 + QuadricFunction.squared_affine(-0.1, e[3]))
    walls = [
        QuadricFunction.squared_affine(2.0, diagonal, -1.5) + QuadricFunction.affine(anti / 3.0, 2.5 / 3.0 - 1.0),
        QuadricFunction.squared_affine(2.0, diagonal, 1.5) + QuadricFunction.affine(anti / 3.0, 1.5 / 3.0 - 1.0),
        QuadricFunction.squared_affine(4.0, e[0], -1.0) + QuadricFunction.affine(4.0 / 3.0 * e[1],
                                                                                -4.0 / 3.0 * 1.75 - 1.0),
    ]
    return Scene(workspace=workspace, obstacles=walls, target=(2.5, 1.5, 0.0, math.pi / 4), walls=True)


def builtin_rolling_disc():
    params = ControlParams(epsilon=0.75, gamma=0.5)
    return Scenario(
        name='rolling-disc',
        system=catalog_system('rolling-disc'),
        basis=BracketBasis(s1=(1, 2), s2=((1, 2),), s3=((1, 2, 2),)),
        scene=rolling_disc_scene(),
        params=params,
        frequencies=FrequencyAssignment(k2={(1, 2): 1}, k3={(1, 2, 2): (3, 7)}),
        sim=SimConfig(epsilon=params.epsilon, t_max=300.0),
        x0=(-2.5, -2.5, 0.0, math.pi / 4),
        system_document={'catalog': 'rolling-disc'},
    )


BUILTINS = {
    'rigid-body': builtin_rigid_body,
    'rolling-disc': builtin_rolling_disc,
}


def _error_code(errors):
    codes = [e.code for e in errors]
    for code in (ScenarioError.DIMENSION, ScenarioError.FEASIBILITY):
        if code in codes:
            return code
    return ScenarioError.SCHEMA


def _clean(form_class, data, section):
    """Validates one document section with its form; ScenarioError on any problem."""
    if not isinstance(data, dict):
        raise ScenarioError('[%s] must be a table' % section)
    unknown = sorted(set(data) - set(form_class.base_fields))
    if unknown:
        raise ScenarioError('[%s] has unknown keys: %s' % (section, ', '.join(unknown)))
    form = form_class(data=data)
    if form.is_valid():
        return form.cleaned_data
    messages, errors = [], []
    for name, field_errors in form.errors.as_data().items():
        where = section if name == '__all__' else '%s.%s' % (section, name)
        for error in field_errors:
            errors.append(error)
            messages.extend('%s: %s' % (where, message) for message in error.messages)
    raise ScenarioError(messages, code=_error_code(errors))


def _quadric(data, section, inside_positive):
    cleaned = _clean(QuadricForm, data, section)
    if cleaned.get('center') is not None:
        if inside_positive:
            return QuadricFunction.ball(cleaned['center'], cleaned['radius_sq'])
        return QuadricFunction.sphere_exterior(cleaned['center'], cleaned['radius_sq'])
    return QuadricFunction(cleaned['quad'], cleaned['lin'], cleaned['const'])


def _parse(document):
    if isinstance(document, dict):
        return document
    try:
        return tomllib.loads(document)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError('scenario document is not valid TOML: %s' % exc)


def load_scenario(document):
    """Scenario from a TOML string or an already-parsed mapping."""
    doc = _parse(document)
    missing = [s for s in ('system', 'basis', 'scene', 'control', 'sim') if s not in doc]
    if missing:
        raise ScenarioError(['missing section [%s]' % s for s in missing])
    unknown = sorted(set(doc) - {'name', 'system', 'basis', 'scene', 'control', 'sim'})
    if unknown:
        raise ScenarioError('unknown top-level keys: %s' % ', '.join(unknown))

    system_data = _clean(SystemForm, doc['system'], 'system')
    if system_data['catalog']:
        system = catalog_system(system_data['catalog'])
        system_document = {'catalog': system_data['catalog']}
    else:
        system = expression_system(system_data['n'], system_data['fields'], name=system_data['name'] or 'custom')
        system_document = {'n': system_data['n'], 'fields': system_data['fields']}
        if system_data['name']:
            system_document['name'] = system_data['name']

    basis_data = _clean(BasisForm, doc['basis'], 'basis')
    basis = BracketBasis(s1=basis_data['s1'], s2=basis_data['s2'], s3=basis_data['s3'])
    basis.validate_for(system)

    scene_data = _clean(SceneForm, doc['scene'], 'scene')
    scene = Scene(
        workspace=_quadric(scene_data['workspace'], 'scene.workspace', inside_positive=True),
        obstacles=[_quadric(o, 'scene.obstacles[%d]' % j, inside_positive=False)
                   for j, o in enumerate(scene_data['obstacles'], start=1)],
        target=scene_data['target'],
        walls=scene_data['walls'],
    )

    control_data = _clean(ControlForm, doc['control'], 'control')
    params = ControlParams(epsilon=control_data['epsilon'], gamma=control_data['gamma'])
    try:
        if control_data['pairs'] is None:
            frequencies = assign_frequencies(basis)
        else:
            frequencies = FrequencyAssignment(k2=control_data['pairs'], k3=control_data['triples'])
    except FrequencyAssignmentError as exc:
        raise ScenarioError('frequencies: %s' % exc)

    sim_data = _clean(SimForm, doc['sim'], 'sim')
    sim = SimConfig(epsilon=params.epsilon, **{k: sim_data[k] for k in SIM_KEYS if sim_data.get(k) is not None})

    return Scenario(name=str(doc.get('name', 'custom')), system=system, basis=basis, scene=scene, params=params,
                    frequencies=frequencies, sim=sim, x0=sim_data['x0'], system_document=system_document)


def load_scenario_file(path):
    return load_scenario(Path(path).read_text(encoding='utf-8'))


def resolve_scenario(name_or_path):
    """A built-in by name, otherwise a TOML file."""
    if name_or_path in BUILTINS:
        return BUILTINS[name_or_path]()
    path = Path(name_or_path)
    if not path.is_file():
        raise ScenarioError('%r is neither a built-in scenario (%s) nor a readable file'
                            % (name_or_path, ', '.join(BUILTINS)))
    return load_scenario_file(path)


def _floats(values):
    return [float(v) for v in np.asarray(values, dtype=float).reshape(-1)]


def scenario_document(scenario):
    sim = scenario.sim
    return {
        'name': scenario.name,
        'system': dict(scenario.system_document),
        'basis': {
            's1': list(scenario.basis.s1),
            's2': [list(p) for p in scenario.basis.s2],
            's3': [list(t) for t in scenario.basis.s3],
        },
        'scene': {
            'target': _floats(scenario.scene.target),
            'walls': scenario.scene.walls,
            'workspace': _quadric_document(scenario.scene.workspace),
            'obstacles': [_quadric_document(o) for o in scenario.scene.obstacles],
        },
        'control': dict({'epsilon': float(scenario.params.epsilon), 'gamma': float(scenario.params.gamma)},
                        **scenario.frequencies.to_document()),
        'sim': dict({'x0': _floats(scenario.x0)}, **{
            't_max': float(sim.t_max),
            'substeps_per_unit_frequency': int(sim.substeps_per_unit_frequency),
            'stop_distance': float(sim.stop_distance),
            'collision_margin': float(sim.collision_margin),
            'gradient_tolerance': float(sim.gradient_tolerance),
        }),
    }


def _quadric_document(quadric):
    return {
        'quad': [_floats(row) for row in quadric.quad],
        'lin': _floats(quadric.lin),
        'const': float(quadric.const),
    }


def dump_scenario(scenario):
    return tomli_w.dumps(scenario_document(scenario))


def with_overrides(scenario, epsilon=None, gamma=None, t_max=None, substeps=None, stop_distance=None, seed=None):
    params = replace(scenario.params,
                     epsilon=scenario.params.epsilon if epsilon is None else epsilon,
                     gamma=scenario.params.gamma if gamma is None else gamma)
    sim_changes = {'epsilon': params.epsilon}
    if t_max is not None:
        sim_changes['t_max'] = t_max
    if substeps is not None:
        sim_changes['substeps_per_unit_frequency'] = substeps
    if stop_distance is not None:
        sim_changes['stop_distance'] = stop_distance
    frequencies = scenario.frequencies
    if seed is not None:
        frequencies = assign_frequencies(scenario.basis, seed=seed)
    return replace(scenario, params=params, sim=replace(scenario.sim, **sim_changes), frequencies=frequencies)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ''


@dataclass
class ScenarioCheck:
    scenario: str
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, detail=''):
        self.checks.append(Check(name, bool(passed), detail))

    def to_document(self):
        return {
            'scenario': self.scenario,
            'passed': self.passed,
            'checks': [{'name': c.name, 'passed': c.passed, 'detail': c.detail} for c in self.checks],
            'warnings': list(self.warnings),
        }


def validate_scenario(scenario, jacobian_points=100, seed=0, scene_samples: Optional[int] = None):
    """Static checks: rank at x0 and x*, non-resonance, calibration, scene validity, jacobians."""
    report = ScenarioCheck(scenario.name)
    limit = steering_setting('RANK_CONDITION_LIMIT')
    for label, x in (('x0', scenario.x0), ('target', scenario.target)):
        condition = build_bracket_matrix(scenario.system, scenario.basis, x).condition_estimate
        report.add('rank at %s' % label, condition <= limit, 'condition %.4g (limit %.3g)' % (condition, limit))

    nonresonance = validate_nonresonance(scenario.frequencies, scenario.basis)
    report.add('non-resonance', nonresonance.passed, '; '.join(nonresonance.violations) or 'ok')

    residuals = scenario.frequencies.calibration_residuals()
    worst = max(residuals.values(), default=0.0)
    report.add('calibration identity', worst < 1e-12, 'max residual %.3g' % worst)

    scene = validate_scene(scenario.scene, samples=scene_samples, seed=seed)
    report.add('scene validity', scene.valid, '; '.join(scene.describe()) or '%d samples' % scene.samples)
    report.warnings.extend(scene.warnings)

    low, high = scenario.scene.bounding_box()
    points = np.random.default_rng(seed).uniform(low, high, size=(jacobian_points, scenario.system.n))
    jacobians = check_jacobians(scenario.system, points)
    report.add('jacobians', jacobians.passed,
               'max relative error %.3g' % max(jacobians.max_errors, default=0.0))
    logger.info('scenario %s validation passed=%s', scenario.name, report.passed)
    return report
