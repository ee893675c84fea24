from django.apps import AppConfig


class CoreConfig(AppConfig):
    """
    Configuration class for the 'core' app.

    Holds the kernel library, its kernel-file serializers, the trial tasks
    and the management commands.
    """
    name = 'core'
    verbose_name = 'DIBI kernel models'
