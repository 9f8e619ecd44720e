"""
Навчання і оцінювання моделі.

Міні-батчі з перемішуванням за seed, градієнти накопичуються по прикладах
батчу і усереднюються, після чого виконується один крок Adam.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from affect.exceptions import ContractError, InvalidHyperparameterError
from affect.services import ndcore
from affect.services.metrics import MetricsReport, emotion_report, sentiment_report
from affect.services.ndcore import ComputationTape, Tensor
from affect.services.network import (
    TASK_EMOTION, TASK_SENTIMENT, ForwardTrace, ModelParameters, Prediction, forward, predict_labels,
)
from affect.services.resources import EncodedExample
from affect.services.training_observers import EpochRecord, TrainingEvent, TrainingSubject

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    epochs: int = 10
    seed: int = 13
    sentiment_weight: float = 1.0
    emotion_weight: float = 1.0
    threshold: float = 0.5
    patience: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidHyperparameterError("batch_size повинен бути >= 1")
        if self.epochs < 1:
            raise InvalidHyperparameterError("epochs повинен бути >= 1")
        if self.seed < 0:
            raise InvalidHyperparameterError("seed повинен бути невідʼємним")
        if self.sentiment_weight < 0 or self.emotion_weight < 0:
            raise InvalidHyperparameterError("Ваги втрат не можуть бути відʼємними")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidHyperparameterError("threshold повинен бути в (0, 1)")
        if self.patience is not None and self.patience < 1:
            raise InvalidHyperparameterError("patience повинен бути >= 1")
        if self.workers < 1:
            raise InvalidHyperparameterError("workers повинен бути >= 1")

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Mapping[str, object]) -> 'TrainConfig':
        return cls(**{key: values[key] for key in cls.__dataclass_fields__ if key in values})


@dataclass
class TrainingResult:
    params: ModelParameters
    epochs: List[EpochRecord] = field(default_factory=list)
    stopped_early: bool = False
    optimizer_steps: int = 0

    @property
    def loss_log(self) -> List[float]:
        return [record.mean_loss for record in self.epochs]


# -----------------------
# Loss
# -----------------------
def joint_loss(trace: ForwardTrace, example: EncodedExample, config: Optional[TrainConfig] = None) -> Tensor:
    """
    L = w_s·XEnt(сентимент) + w_e·XEnt(емоції).
    Неактивна задача дає 0; сентимент пропускається для прикладів 'other'.
    """
    config = config or TrainConfig()
    terms = []
    if TASK_SENTIMENT in trace.tasks and example.has_polarity:
        loss = ndcore.sigmoid_xent(trace.tasks[TASK_SENTIMENT].logits, example.sentiment_target)
        terms.append(ndcore.scale(loss, config.sentiment_weight))
    if TASK_EMOTION in trace.tasks:
        loss = ndcore.sigmoid_xent(trace.tasks[TASK_EMOTION].logits, example.emotions)
        terms.append(ndcore.scale(loss, config.emotion_weight))
    if not terms:
        return Tensor(np.array(0.0))
    total = terms[0]
    for term in terms[1:]:
        total = ndcore.add(total, term)
    return total


def contributes_to_loss(example: EncodedExample, params: ModelParameters) -> bool:
    """Приклади 'other' не навчають моделі лише з сентимент-задачею"""
    return TASK_EMOTION in params.config.tasks or example.has_polarity


# -----------------------
# Train
# -----------------------
def train(examples: Sequence[EncodedExample], params: ModelParameters, config: TrainConfig,
          subject: Optional[TrainingSubject] = None) -> TrainingResult:
    """
    Детерміновано за config.seed: порядок прикладів (етап 'shuffle') і маски
    dropout (етап 'dropout') мають окремі генератори.
    """
    usable = [example for example in examples if contributes_to_loss(example, params)]
    if not usable:
        raise ContractError("train: корпус не містить прикладів для активних задач")
    subject = subject or TrainingSubject()

    shuffle_rng = ndcore.stage_rng(config.seed, 'shuffle')
    dropout_rng = ndcore.stage_rng(config.seed, 'dropout')
    state = ndcore.AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, epsilon=config.adam_epsilon)
    result = TrainingResult(params)
    best_loss = np.inf
    stale_epochs = 0

    logger.info("Training %s on %d examples (%d skipped) for up to %d epochs",
                params.config.mode, len(usable), len(examples) - len(usable), config.epochs)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(usable))
        epoch_loss = 0.0
        batches = 0
        for start in range(0, len(usable), config.batch_size):
            batch = [usable[i] for i in order[start:start + config.batch_size]]
            grads, batch_loss = _batch_gradients(batch, params, config, dropout_rng)
            updated, state = ndcore.adam_step(params.trainable(), grads, state)
            params = params.replace(updated)
            epoch_loss += batch_loss
            batches += 1

        record = EpochRecord(epoch, epoch_loss / len(usable), len(usable), batches)
        result.epochs.append(record)
        subject.notify_observers(TrainingEvent(TrainingEvent.KIND_EPOCH, record))

        if config.patience is not None:
            if record.mean_loss < best_loss:
                best_loss, stale_epochs = record.mean_loss, 0
            else:
                stale_epochs += 1
                if stale_epochs >= config.patience:
                    result.stopped_early = True
                    break

    result.params = params
    result.optimizer_steps = state.t
    subject.notify_observers(TrainingEvent(TrainingEvent.KIND_FINISHED, result.epochs[-1], result.stopped_early))
    return result


def _batch_gradients(batch, params: ModelParameters, config: TrainConfig, rng):
    trainable = params.trainable()
    summed = {name: np.zeros(tensor.shape) for name, tensor in trainable.items()}
    batch_loss = 0.0
    for example in batch:
        with ComputationTape() as tape:
            for name, tensor in trainable.items():
                tape.watch(name, tensor)
            trace = forward(example, params, train_mode=True, rng=rng)
            loss = joint_loss(trace, example, config)
        for name, grad in ndcore.backward(tape, loss).items():
            summed[name] += grad
        batch_loss += loss.item()
    return {name: grad / len(batch) for name, grad in summed.items()}, batch_loss


# -----------------------
# Evaluate
# -----------------------
def predict_corpus(examples: Sequence[EncodedExample], params: ModelParameters, threshold: float = 0.5,
                   workers: int = 1) -> List[Prediction]:
    """Прогін без dropout; порядок результатів збігається з порядком прикладів"""
    def run(example: EncodedExample) -> Prediction:
        return predict_labels(forward(example, params).logits, threshold)

    if workers <= 1:
        return [run(example) for example in examples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, examples))


def evaluate(examples: Sequence[EncodedExample], params: ModelParameters, threshold: float = 0.5,
             workers: int = 1, seed: int = 0, epoch: int = 0) -> MetricsReport:
    """
    Сентимент оцінюється на прикладах з полярністю (negative/positive),
    емоції на всіх прикладах з порогом threshold.
    """
    if not examples:
        raise ContractError("evaluate: порожній корпус")
    predictions = predict_corpus(examples, params, threshold, workers)
    tasks = params.config.tasks

    sentiment = emotion = None
    if TASK_SENTIMENT in tasks:
        pairs = [(example.sentiment, prediction.sentiment)
                 for example, prediction in zip(examples, predictions) if example.has_polarity]
        sentiment = sentiment_report([gold for gold, _ in pairs], [predicted for _, predicted in pairs])
    if TASK_EMOTION in tasks:
        gold = np.vstack([example.emotions for example in examples]).astype(np.int64)
        predicted = np.array([[int(p >= threshold) for p in prediction.emotion_probabilities.values()]
                              for prediction in predictions], dtype=np.int64)
        emotion = emotion_report(gold, predicted)

    report = MetricsReport(params.config.mode, seed, epoch, sentiment, emotion)
    logger.info("Evaluated %s on %d examples", params.config.mode, len(examples))
    return report
