"""
Datasets app configuration.
"""
from django.apps import AppConfig


class DatasetsConfig(AppConfig):
    """Dataset ingestion, the benchmark catalog and model files."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.datasets'
    verbose_name = 'Datasets'
