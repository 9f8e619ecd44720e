from django.db import models


# -----------------------
# TrainingRun
# -----------------------
class TrainingRun(models.Model):
    STATUS_RUNNING = 'running'
    STATUS_COMPLETED = 'completed'
    STATUS_FAILED = 'failed'
    STATUS_CHOICES = [
        (STATUS_RUNNING, 'Running'),
        (STATUS_COMPLETED, 'Completed'),
        (STATUS_FAILED, 'Failed'),
    ]

    MODE_CHOICES = [(mode, mode) for mode in ('S1', 'S2', 'E1', 'E2', 'M1', 'M2')]

    mode = models.CharField(max_length=2, choices=MODE_CHOICES)
    seed = models.PositiveIntegerField()
    config = models.JSONField(default=dict)
    out_dir = models.CharField(max_length=500, blank=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default=STATUS_RUNNING)
    epochs_completed = models.PositiveIntegerField(default=0)
    final_loss = models.FloatField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f"{self.mode} seed={self.seed} ({self.status})"


# -----------------------
# EpochLog
# -----------------------
class EpochLog(models.Model):
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name='epochs')
    epoch = models.PositiveIntegerField()
    mean_loss = models.FloatField()
    examples = models.PositiveIntegerField(default=0)

    class Meta:
        ordering = ['run', 'epoch']
        constraints = [
            models.UniqueConstraint(fields=['run', 'epoch'], name='unique_epoch_per_run'),
        ]

    def __str__(self):
        return f"{self.run_id}#{self.epoch}: {self.mean_loss:.6f}"


# -----------------------
# RunMetric
# -----------------------
class RunMetric(models.Model):
    """Одне значення з плаского файлу метрик (ключ `sentiment.macro_f1` тощо)"""
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name='metrics')
    key = models.CharField(max_length=100)
    value = models.FloatField()

    class Meta:
        ordering = ['run', 'key']
        constraints = [
            models.UniqueConstraint(fields=['run', 'key'], name='unique_metric_per_run'),
        ]

    def __str__(self):
        return f"{self.key} = {self.value}"
