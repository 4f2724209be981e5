from django.conf import settings

DEFAULTS = {
    'FD_STEP': 1e-6,
    'SECOND_BRACKET_STEP': 1e-4,
    'RANK_CONDITION_LIMIT': 1e8,
    'JACOBIAN_TOLERANCE': 1e-5,
    'BOUNDARY_TOLERANCE': 1e-12,
    'SCENE_SAMPLES': 20000,
    'MAX_FREQUENCY': 997,
    'SUBSTEPS_PER_UNIT_FREQUENCY': 100,
    'MIN_SUBSTEPS_PER_UNIT_FREQUENCY': 50,
    'STOP_DISTANCE': 0.1,
    'COLLISION_MARGIN': 1e-6,
    'GRADIENT_TOLERANCE': 1e-10,
    'T_MAX': 300.0,
    'MONOTONICITY_SLACK': 1e-9,
    'LIPSCHITZ_SAMPLES': 1000,
    'SWEEP_WORKERS': 4,
    'OUTPUT_DIR': 'runs',
}


def steering_setting(name):
    '''
    Reads a key of the STEERING settings dict, falling back to the
    built-in default when the key is absent or Django is not configured.
    '''
    if name not in DEFAULTS:
        raise KeyError('Unknown steering setting %r' % name)
    if not settings.configured:
        return DEFAULTS[name]
    return getattr(settings, 'STEERING', {}).get(name, DEFAULTS[name])
