"""
Django settings for bracket_nav project.

The project uses Django for configuration, form validation, management
commands and the test runner; there is no database and no web layer.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# Management commands never sign anything, but Django refuses to start without a key.
SECRET_KEY = os.environ.get('BRACKET_NAV_SECRET_KEY', 'bracket-nav-offline-key')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'steering.apps.SteeringConfig',
]

MIDDLEWARE = []


# Database

DATABASES = {}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'steering': {
            'handlers': ['console'],
            'level': 'DEBUG' if os.environ.get('STEERING_DEBUG') else 'INFO',
            'propagate': False,
        },
    },
}


# Steering app configuration

STEERING = {
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
    'OUTPUT_DIR': os.path.join(BASE_DIR, 'runs'),
}
