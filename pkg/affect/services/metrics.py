"""
Метрики оцінювання: матриці невідповідностей 2×2, P/R/F1 по класах,
макро- і мікроусереднення (sklearn.metrics, zero_division=0).
Матриця: рядки - фактичний клас, стовпці - передбачений, порядок (negative, positive).
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from sklearn import metrics as sk_metrics

from affect.exceptions import ContractError
from affect.services.resources import EMOTIONS, POLARITY_LABELS

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[int, int], Tuple[int, int]]

BINARY_LABELS = [0, 1]


def _as_matrix(counts) -> Matrix:
    return tuple(tuple(int(value) for value in row) for row in np.asarray(counts))


def _check_bits(gold, predicted) -> Tuple[np.ndarray, np.ndarray]:
    gold = np.asarray(gold, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if gold.shape != predicted.shape:
        raise ContractError(f"Форми gold {gold.shape} і predicted {predicted.shape} різні")
    if not (np.isin(gold, BINARY_LABELS).all() and np.isin(predicted, BINARY_LABELS).all()):
        raise ContractError("Мітки повинні бути 0 або 1")
    return gold, predicted


def confusion_matrix(gold: Sequence[int], predicted: Sequence[int]) -> Matrix:
    """Матриця 2×2 для бінарних міток 0/1"""
    gold = np.asarray(gold, dtype=np.int64).reshape(-1)
    predicted = np.asarray(predicted, dtype=np.int64).reshape(-1)
    if gold.shape != predicted.shape:
        raise ContractError(f"Довжини gold ({gold.size}) і predicted ({predicted.size}) різні")
    gold, predicted = _check_bits(gold, predicted)
    if not gold.size:
        return (0, 0), (0, 0)
    return _as_matrix(sk_metrics.confusion_matrix(gold, predicted, labels=BINARY_LABELS))


def confusion_matrices(gold, predicted, targets: Sequence[str]) -> Dict[str, Matrix]:
    """
    Матриця для кожної цілі.
    gold, predicted: масиви 0/1 форми (n, len(targets)), або (n,) для однієї цілі.
    """
    gold, predicted = _check_bits(gold, predicted)
    if gold.ndim == 1:
        gold, predicted = gold.reshape(-1, 1), predicted.reshape(-1, 1)
    if gold.shape[1] != len(targets):
        raise ContractError(f"Очікується {len(targets)} цілей, отримано {gold.shape[1]}")
    return {target: confusion_matrix(gold[:, j], predicted[:, j]) for j, target in enumerate(targets)}


def labels_from_matrix(matrix) -> Tuple[np.ndarray, np.ndarray]:
    """Пари (gold, predicted), що дають задану матрицю 2×2"""
    counts = np.asarray(matrix, dtype=np.int64).reshape(-1)
    if counts.size != 4 or (counts < 0).any():
        raise ContractError(f"Очікується матриця 2×2 з невідʼємними лічильниками: {matrix}")
    gold = np.repeat([0, 0, 1, 1], counts)
    predicted = np.repeat([0, 1, 0, 1], counts)
    return gold, predicted


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float

    @classmethod
    def zero(cls) -> 'ClassScores':
        return cls(0.0, 0.0, 0.0)


def _scores(gold, predicted, **kwargs):
    precision, recall, f1, _ = sk_metrics.precision_recall_fscore_support(gold, predicted, zero_division=0, **kwargs)
    return precision, recall, f1


# -----------------------
# Звіти
# -----------------------
@dataclass(frozen=True)
class SentimentMetrics:
    per_class: Dict[str, ClassScores]
    macro_f1: float
    micro_f1: float
    confusion: Matrix

    @classmethod
    def from_labels(cls, gold, predicted) -> 'SentimentMetrics':
        """gold/predicted: 0 - negative, 1 - positive"""
        confusion = confusion_matrix(gold, predicted)
        if not len(gold):
            per_class = {label: ClassScores.zero() for label in POLARITY_LABELS}
            return cls(per_class, 0.0, 0.0, confusion)
        precision, recall, f1 = _scores(gold, predicted, labels=BINARY_LABELS, average=None)
        per_class = {label: ClassScores(float(precision[i]), float(recall[i]), float(f1[i]))
                     for i, label in enumerate(POLARITY_LABELS)}
        macro = sk_metrics.f1_score(gold, predicted, labels=BINARY_LABELS, average='macro', zero_division=0)
        # мікро-F1 для одноміткової задачі дорівнює точності
        micro = sk_metrics.f1_score(gold, predicted, labels=BINARY_LABELS, average='micro', zero_division=0)
        return cls(per_class, float(macro), float(micro), confusion)

    @classmethod
    def from_matrix(cls, matrix) -> 'SentimentMetrics':
        return cls.from_labels(*labels_from_matrix(matrix))


@dataclass(frozen=True)
class EmotionMetrics:
    per_label: Dict[str, ClassScores]
    micro: ClassScores
    macro_f1: float
    confusion: Dict[str, Matrix]

    @classmethod
    def from_labels(cls, gold, predicted) -> 'EmotionMetrics':
        """gold/predicted: масиви бітів форми (n, 8)"""
        gold, predicted = _check_bits(gold, predicted)
        if gold.ndim != 2 or gold.shape[1] != len(EMOTIONS):
            raise ContractError(f"Очікується форма (n, {len(EMOTIONS)}), отримано {gold.shape}")
        if not gold.shape[0]:
            zero = {label: ClassScores.zero() for label in EMOTIONS}
            return cls(zero, ClassScores.zero(), 0.0, {label: ((0, 0), (0, 0)) for label in EMOTIONS})

        confusion = confusion_matrices(gold, predicted, EMOTIONS)
        precision, recall, f1 = _scores(gold, predicted, average=None)
        per_label = {label: ClassScores(float(precision[j]), float(recall[j]), float(f1[j]))
                     for j, label in enumerate(EMOTIONS)}
        micro = ClassScores(*(float(value) for value in _scores(gold, predicted, average='micro')))
        macro = sk_metrics.f1_score(gold, predicted, average='macro', zero_division=0)
        return cls(per_label, micro, float(macro), confusion)


@dataclass(frozen=True)
class MetricsReport:
    mode: str
    seed: int
    epoch: int
    sentiment: Optional[SentimentMetrics] = None
    emotion: Optional[EmotionMetrics] = None

    def value(self, key: str) -> float:
        """Значення метрики за ключем плаского формату, напр. 'sentiment.macro_f1'"""
        from affect.services.reporting import metric_values
        values = metric_values(self)
        if key not in values:
            raise ContractError(f"Метрика '{key}' відсутня у звіті режиму {self.mode}")
        return float(values[key])


def sentiment_report(gold: Sequence[str], predicted: Sequence[str]) -> SentimentMetrics:
    """gold/predicted - мітки 'negative'/'positive' лише для прикладів з полярністю"""
    if len(gold) != len(predicted):
        raise ContractError(f"Довжини gold ({len(gold)}) і predicted ({len(predicted)}) різні")
    to_bit = {label: i for i, label in enumerate(POLARITY_LABELS)}
    return SentimentMetrics.from_labels(np.array([to_bit[label] for label in gold], dtype=np.int64),
                                        np.array([to_bit[label] for label in predicted], dtype=np.int64))


def emotion_report(gold, predicted) -> EmotionMetrics:
    """gold/predicted - масиви бітів форми (n, 8)"""
    return EmotionMetrics.from_labels(gold, predicted)
