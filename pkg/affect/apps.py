from django.apps import AppConfig


class AffectConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'affect'
    verbose_name = 'Sentiment and emotion experiments'

    def ready(self):
        """Завантажуємо сигнали при ініціалізації додатку"""
        import affect.signals  # noqa: F401
