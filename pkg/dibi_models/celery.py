import os

from celery import Celery

# Set default Django settings module for the 'celery' program.
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'dibi_models.settings')

app = Celery('dibi_models')

# Broker, result backend and eager mode all come from the CELERY_* settings.
app.config_from_object('django.conf:settings', namespace='CELERY')

# Pick up core.tasks (frame-check and harness batches).
app.autodiscover_tasks()
