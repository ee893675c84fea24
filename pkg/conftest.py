import os

import django
from hypothesis import HealthCheck, settings

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'dibi_models.settings')
django.setup()

# The Markov-law property tests live on a mixin shared by several TestCase
# classes, which Hypothesis flags as "differing executors".
settings.register_profile('default', suppress_health_check=[HealthCheck.differing_executors])
settings.load_profile('default')
