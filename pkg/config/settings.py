"""
Django settings for the curveflow project.

curveflow has no database, no URLs and no web views. Django provides the
settings layer, the management-command CLI and the test runner; run
configurations themselves are TOML files parsed by ``flows.run_config``.
"""

from pathlib import Path
import os

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get(
    'DJANGO_SECRET_KEY',
    'curveflow-local-only-key-not-used-for-signing',
)
DEBUG = os.environ.get('CURVEFLOW_DEBUG', '0') == '1'
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'curves',
    'flows',
    'audits',
]

# Runs and audits persist to the filesystem only.
DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
}

# Overrides ``output.dir`` of every run configuration when set.
CURVEFLOW_OUTPUT = os.environ.get('CURVEFLOW_OUTPUT', '')
CURVEFLOW_SWEEP_WORKERS = int(os.environ.get('CURVEFLOW_SWEEP_WORKERS', '4'))
CURVEFLOW_LOG_LEVEL = os.environ.get('CURVEFLOW_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'curves': {'handlers': ['console'], 'level': CURVEFLOW_LOG_LEVEL},
        'flows': {'handlers': ['console'], 'level': CURVEFLOW_LOG_LEVEL},
        'audits': {'handlers': ['console'], 'level': CURVEFLOW_LOG_LEVEL},
    },
}
