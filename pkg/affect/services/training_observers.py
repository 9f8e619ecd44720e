"""
Observer Pattern для подій навчання.
Цикл навчання публікує завершення кожної епохи і всього прогону; спостерігачі
логують події або зберігають їх у БД.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional

from django.utils import timezone

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float
    examples: int
    batches: int


@dataclass(frozen=True)
class TrainingEvent:
    KIND_EPOCH = 'epoch'
    KIND_FINISHED = 'finished'

    kind: str
    record: Optional[EpochRecord] = None
    stopped_early: bool = False


class TrainingObserver(ABC):
    """Абстрактний спостерігач"""

    @abstractmethod
    def update(self, event: TrainingEvent):
        """Отримати подію навчання"""
        pass


class LogObserver(TrainingObserver):
    """Спостерігач, який логує кожну епоху"""

    def update(self, event: TrainingEvent):
        if event.kind == TrainingEvent.KIND_EPOCH:
            logger.info("[TRAIN] epoch %d: mean loss %.6f (%d examples, %d batches)",
                        event.record.epoch, event.record.mean_loss, event.record.examples, event.record.batches)
        elif event.stopped_early:
            logger.info("[TRAIN] stopped early after epoch %d", event.record.epoch)


class RunRecorderObserver(TrainingObserver):
    """Зберігає журнал епох у TrainingRun / EpochLog"""

    def __init__(self, run):
        self.run = run

    def update(self, event: TrainingEvent):
        from affect.models import EpochLog

        if event.kind == TrainingEvent.KIND_EPOCH:
            EpochLog.objects.update_or_create(
                run=self.run, epoch=event.record.epoch,
                defaults={'mean_loss': event.record.mean_loss, 'examples': event.record.examples},
            )
            self.run.epochs_completed = event.record.epoch
            self.run.final_loss = event.record.mean_loss
            self.run.save(update_fields=['epochs_completed', 'final_loss'])
        elif event.kind == TrainingEvent.KIND_FINISHED:
            self.run.finished_at = timezone.now()
            self.run.save(update_fields=['finished_at'])


class TrainingSubject:
    """
    Суб'єкт подій навчання.
    Помилка спостерігача логується і не перериває навчання.
    """

    def __init__(self, observers: Optional[List[TrainingObserver]] = None):
        self._observers: List[TrainingObserver] = []
        self.attach(LogObserver())
        for observer in observers or []:
            self.attach(observer)

    def attach(self, observer: TrainingObserver):
        """Підписати спостерігача"""
        if observer not in self._observers:
            self._observers.append(observer)
            logger.debug("Observer %s attached", observer.__class__.__name__)

    def detach(self, observer: TrainingObserver):
        """Відписати спостерігача"""
        if observer in self._observers:
            self._observers.remove(observer)
            logger.debug("Observer %s detached", observer.__class__.__name__)

    def notify_observers(self, event: TrainingEvent):
        for observer in self._observers:
            try:
                observer.update(event)
            except Exception as e:
                logger.error("Observer %s failed: %s", observer.__class__.__name__, str(e))
