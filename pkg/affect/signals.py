import logging
from pathlib import Path

from django.db.models.signals import post_save
from django.dispatch import receiver

from affect.exceptions import AffectError
from affect.models import RunMetric, TrainingRun
from affect.services.reporting import METRICS_FILENAME, load_metrics, metric_values

logger = logging.getLogger(__name__)


@receiver(post_save, sender=TrainingRun)
def training_run_post_save(sender, instance: TrainingRun, created, **kwargs):
    """
    Коли прогін завершено, числові значення з файлу метрик переносяться в RunMetric,
    щоб порівнювати прогони запитами до БД.
    """
    if instance.status != TrainingRun.STATUS_COMPLETED or not instance.out_dir:
        return
    metrics_path = Path(instance.out_dir) / METRICS_FILENAME
    if not metrics_path.exists():
        return
    try:
        values = metric_values(load_metrics(metrics_path))
    except (AffectError, OSError) as e:
        logger.error("Cannot import metrics for run %s: %s", instance.pk, e)
        return

    for key, value in values.items():
        if isinstance(value, str) or key.startswith('run.'):
            continue
        RunMetric.objects.update_or_create(run=instance, key=key, defaults={'value': float(value)})
    logger.info("Imported %d metrics for run %s", instance.metrics.count(), instance.pk)
