"""
Experiments app configuration.
"""
from django.apps import AppConfig


class ExperimentsConfig(AppConfig):
    """Experiment protocol, records and command-line entry points."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.experiments'
    verbose_name = 'Experiments'
