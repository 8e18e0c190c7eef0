from django.apps import AppConfig


class EngineConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'app.engine'
    verbose_name = 'Policy Reuse Engine'
