"""
Django settings for the dibi_models project.

The project hosts the kernel library, the satisfaction checker and the
conditional-independence procedures in the ``core`` app. There is no web
surface: everything runs through management commands and Celery tasks.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.1/ref/settings/
"""
import os
from pathlib import Path

import environ


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env = environ.Env()
environ.Env.read_env(env_file=os.path.join(BASE_DIR, ".env"))

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env('SECRET_KEY', default='dibi-models-insecure-development-key')
DEBUG = env.bool('DEBUG', default=False)
ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'core',
]

# Database
# No models are declared; the connection only backs the test runner and
# optional Celery result storage.
DATABASES = {
    # The db() method is an alias for db_url().
    'default': env.db('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}"),
}

REST_FRAMEWORK = {
    # Serializers are used for kernel files only; no API views are exposed.
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}

# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Kernel library configuration
DIBI_GAUSS_TOLERANCE = env.float('DIBI_GAUSS_TOLERANCE', default=1e-9)
DIBI_FRAME_TRIALS = env.int('DIBI_FRAME_TRIALS', default=200)
DIBI_HARNESS_TRIALS = env.int('DIBI_HARNESS_TRIALS', default=200)
DIBI_SYNVAR_NODE_BUDGET = env.int('DIBI_SYNVAR_NODE_BUDGET', default=20)
DIBI_SUPERSET_MAX_U = env.int('DIBI_SUPERSET_MAX_U', default=8)
DIBI_SAT_BUDGET = env.int('DIBI_SAT_BUDGET', default=20000)
DIBI_LOG_LEVEL = env('DIBI_LOG_LEVEL', default='WARNING')

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
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
        'core': {
            'handlers': ['console'],
            'level': DIBI_LOG_LEVEL,
            'propagate': False,
        },
        'celery': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
    },
}

# Celery Configuration
CELERY_BROKER_URL = env('CELERY_BROKER_URL', default='redis://localhost:6379/0')  # Redis as the broker
CELERY_RESULT_BACKEND = env('CELERY_RESULT_BACKEND', default='redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
# Trial batches run in-process unless a worker pool is configured.
CELERY_TASK_ALWAYS_EAGER = env.bool('CELERY_TASK_ALWAYS_EAGER', default=True)
CELERY_TASK_EAGER_PROPAGATES = True
