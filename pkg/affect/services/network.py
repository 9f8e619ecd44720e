"""
Двошарова багатозадачна мережа з увагою.

Спільний BiLSTM-енкодер, для кожної задачі первинна (словесна) увага над
кандидатами з тезауруса, вторинна (речення) увага і окрема вихідна голова.
Режими: S1/S2 - лише сентимент, E1/E2 - лише емоції, M1/M2 - обидві задачі;
суфікс 2 вмикає первинну увагу.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from affect.exceptions import ContractError, InvalidHyperparameterError, ShapeError
from affect.services import ndcore
from affect.services.ndcore import Tensor
from affect.services.resources import EMOTIONS, POLARITY_LABELS, EncodedExample

logger = logging.getLogger(__name__)

TASK_SENTIMENT = 'sentiment'
TASK_EMOTION = 'emotion'
TASK_OUTPUTS = {TASK_SENTIMENT: len(POLARITY_LABELS), TASK_EMOTION: len(EMOTIONS)}

MODES = ('S1', 'S2', 'E1', 'E2', 'M1', 'M2')
TASKS_BY_FAMILY = {
    'S': (TASK_SENTIMENT,),
    'E': (TASK_EMOTION,),
    'M': (TASK_SENTIMENT, TASK_EMOTION),
}

EMBEDDINGS = 'embeddings'


@dataclass(frozen=True)
class ModelConfig:
    mode: str = 'M2'
    embed_dim: int = 300
    lstm_hidden: int = 300
    context_dim: int = 150
    dt_k: int = 4
    dropout_rate: float = 0.6
    head_hidden: int = 0
    init_stddev: float = 0.1
    train_embeddings: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidHyperparameterError(f"Невідомий режим '{self.mode}', допустимі: {', '.join(MODES)}")
        for name in ('embed_dim', 'lstm_hidden', 'context_dim', 'dt_k'):
            if getattr(self, name) < 1:
                raise InvalidHyperparameterError(f"{name} повинен бути додатним")
        if self.head_hidden < 0:
            raise InvalidHyperparameterError("head_hidden не може бути відʼємним")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidHyperparameterError(f"dropout повинен бути в [0, 1), отримано {self.dropout_rate}")
        if self.init_stddev <= 0:
            raise InvalidHyperparameterError("init_stddev повинен бути додатним")

    @property
    def primary_attention_enabled(self) -> bool:
        return self.mode.endswith('2')

    @property
    def tasks(self) -> Tuple[str, ...]:
        return TASKS_BY_FAMILY[self.mode[0]]

    @property
    def encoder_dim(self) -> int:
        return 2 * self.lstm_hidden

    @property
    def sentence_dim(self) -> int:
        """D_ĥ: [m_t, h_t] з первинною увагою, інакше h_t"""
        if self.primary_attention_enabled:
            return self.encoder_dim + self.embed_dim
        return self.encoder_dim

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Mapping[str, object]) -> 'ModelConfig':
        return cls(**{key: values[key] for key in cls.__dataclass_fields__ if key in values})


class ModelParameters:
    """
    Всі тензори моделі за іменами.
    Ембедінги зберігаються разом з параметрами, але заморожені, якщо
    config.train_embeddings не ввімкнено.
    """

    def __init__(self, config: ModelConfig, tensors: Mapping[str, Tensor]):
        self.config = config
        if EMBEDDINGS not in tensors:
            raise ShapeError("ModelParameters: відсутній тензор 'embeddings'")
        expected = self.expected_shapes(config, tensors[EMBEDDINGS].shape[0])
        if set(expected) != set(tensors):
            missing = sorted(set(expected) - set(tensors))
            extra = sorted(set(tensors) - set(expected))
            raise ShapeError(f"ModelParameters: відсутні {missing}, зайві {extra}")
        for name, shape in expected.items():
            if tensors[name].shape != shape:
                raise ShapeError(f"Параметр '{name}': очікується {shape}, отримано {tensors[name].shape}")
        self._tensors = dict(tensors)

    @staticmethod
    def expected_shapes(config: ModelConfig, vocab_size: int) -> Dict[str, Tuple[int, ...]]:
        E, H, C, D = config.embed_dim, config.lstm_hidden, config.context_dim, config.sentence_dim
        shapes = {EMBEDDINGS: (vocab_size, E)}
        for direction in ('forward', 'backward'):
            shapes[f'lstm.{direction}.W'] = (E, 4 * H)
            shapes[f'lstm.{direction}.U'] = (H, 4 * H)
            shapes[f'lstm.{direction}.b'] = (4 * H,)
        for task in config.tasks:
            if config.primary_attention_enabled:
                shapes[f'primary.{task}.W_w'] = (2 * H, E)
                shapes[f'primary.{task}.b_w'] = (E,)
            shapes[f'secondary.{task}.W_s'] = (D, C)
            shapes[f'secondary.{task}.b_s'] = (C,)
            shapes[f'secondary.{task}.u'] = (C,)
            head_input = D
            if config.head_hidden:
                shapes[f'head.{task}.V_hidden'] = (D, config.head_hidden)
                shapes[f'head.{task}.c_hidden'] = (config.head_hidden,)
                head_input = config.head_hidden
            shapes[f'head.{task}.V'] = (head_input, TASK_OUTPUTS[task])
            shapes[f'head.{task}.c'] = (TASK_OUTPUTS[task],)
        return shapes

    @classmethod
    def initialize(cls, config: ModelConfig, embedding_rows: np.ndarray, seed: int) -> 'ModelParameters':
        """Усічений нормальний розподіл для кожного тензора, детерміновано за seed"""
        embedding_rows = np.asarray(embedding_rows, dtype=np.float64)
        if embedding_rows.ndim != 2 or embedding_rows.shape[1] != config.embed_dim:
            raise ShapeError(f"Ембедінги {embedding_rows.shape} не відповідають embed_dim={config.embed_dim}")
        rng = ndcore.stage_rng(seed, 'init')
        tensors = {EMBEDDINGS: Tensor(embedding_rows)}
        for name, shape in sorted(cls.expected_shapes(config, embedding_rows.shape[0]).items()):
            if name != EMBEDDINGS:
                tensors[name] = Tensor(ndcore.truncated_normal(shape, config.init_stddev, rng))
        logger.debug("Initialized %d parameter tensors for mode %s", len(tensors), config.mode)
        return cls(config, tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    @property
    def names(self) -> List[str]:
        return sorted(self._tensors)

    @property
    def tensors(self) -> Dict[str, Tensor]:
        return dict(self._tensors)

    def trainable(self) -> Dict[str, Tensor]:
        return {name: tensor for name, tensor in self._tensors.items()
                if name != EMBEDDINGS or self.config.train_embeddings}

    def replace(self, updates: Mapping[str, Tensor]) -> 'ModelParameters':
        tensors = dict(self._tensors)
        tensors.update(updates)
        return ModelParameters(self.config, tensors)


# -----------------------
# Trace
# -----------------------
@dataclass
class TaskTrace:
    word_coefficients: List[np.ndarray]
    memory_vectors: List[np.ndarray]
    augmented: List[np.ndarray]
    sentence_coefficients: np.ndarray
    sentence_vector: np.ndarray
    logits: Tensor


@dataclass
class ForwardTrace:
    mode: str
    hidden_states: List[np.ndarray]
    candidates: List[np.ndarray]
    tasks: Dict[str, TaskTrace] = field(default_factory=dict)

    @property
    def logits(self) -> Dict[str, Tensor]:
        return {task: trace.logits for task, trace in self.tasks.items()}


# -----------------------
# BiLSTM
# -----------------------
def bilstm_forward(inputs: Tensor, params: ModelParameters, train_mode: bool = False, rng=None) -> List[Tensor]:
    """h_t = [→h_t, ←h_t] для кожного кроку; dropout на h_t у режимі навчання"""
    if inputs.ndim != 2 or inputs.shape[0] < 1:
        raise ContractError(f"bilstm_forward очікує непорожню послідовність (T, E), отримано {inputs.shape}")
    forward_states = _lstm_direction(inputs, params, 'forward', reverse=False)
    backward_states = _lstm_direction(inputs, params, 'backward', reverse=True)
    hidden = [ndcore.concat([f, b]) for f, b in zip(forward_states, backward_states)]

    rate = params.config.dropout_rate
    if train_mode and rate > 0:
        hidden = [ndcore.mul(h, ndcore.dropout_mask(h.shape, rate, rng)) for h in hidden]
    return hidden


def _lstm_direction(inputs: Tensor, params: ModelParameters, direction: str, reverse: bool) -> List[Tensor]:
    H = params.config.lstm_hidden
    U = params[f'lstm.{direction}.U']
    # вхідна проєкція для всіх кроків одразу; порядок вентилів: i, f, o, g
    projected = ndcore.add(ndcore.matmul(inputs, params[f'lstm.{direction}.W']), params[f'lstm.{direction}.b'])
    steps = range(inputs.shape[0])
    if reverse:
        steps = reversed(steps)

    h = Tensor(np.zeros(H))
    c = Tensor(np.zeros(H))
    outputs: List[Optional[Tensor]] = [None] * inputs.shape[0]
    for t in steps:
        gates = ndcore.add(ndcore.take(projected, t), ndcore.matmul(h, U))
        i = ndcore.sigmoid(ndcore.slice1d(gates, 0, H))
        f = ndcore.sigmoid(ndcore.slice1d(gates, H, 2 * H))
        o = ndcore.sigmoid(ndcore.slice1d(gates, 2 * H, 3 * H))
        g = ndcore.tanh(ndcore.slice1d(gates, 3 * H, 4 * H))
        c = ndcore.add(ndcore.mul(f, c), ndcore.mul(i, g))
        h = ndcore.mul(o, ndcore.tanh(c))
        outputs[t] = h
    return outputs


# -----------------------
# Attention
# -----------------------
def primary_attention(h_t: Tensor, candidates: Optional[Tensor], task: str,
                      params: ModelParameters) -> Tuple[Tensor, Optional[Tensor], Tensor]:
    """
    Словесна увага над DT-кандидатами слова.
    s_i = (h_t W_w + b_w) · v_i, α = softmax(s), m_t = Σ α_i v_i, ĥ_t = [m_t, h_t].
    Без кандидатів: m_t = 0, α відсутня.
    Повертає (ĥ_t, α, m_t).
    """
    if candidates is None:
        memory = Tensor(np.zeros(params.config.embed_dim))
        return ndcore.concat([memory, h_t]), None, memory
    if candidates.ndim != 2 or candidates.shape[1] != params.config.embed_dim:
        raise ShapeError(f"Кандидати повинні мати форму (n, {params.config.embed_dim}), отримано {candidates.shape}")
    query = ndcore.add(ndcore.matmul(h_t, params[f'primary.{task}.W_w']), params[f'primary.{task}.b_w'])
    alpha = ndcore.softmax(ndcore.matmul(candidates, query))
    memory = ndcore.matmul(alpha, candidates)
    return ndcore.concat([memory, h_t]), alpha, memory


def secondary_attention(augmented: Sequence[Tensor], task: str, params: ModelParameters) -> Tuple[Tensor, Tensor]:
    """
    Увага рівня речення: e_t = u · tanh(W_sᵀ ĥ_t + b_s), α = softmax(e), Ĥ = Σ α_t ĥ_t.
    Повертає (вектор речення, α).
    """
    if not augmented:
        raise ContractError("secondary_attention очікує непорожню послідовність")
    stacked = ndcore.stack(list(augmented))
    projected = ndcore.tanh(ndcore.add(ndcore.matmul(stacked, params[f'secondary.{task}.W_s']),
                                       params[f'secondary.{task}.b_s']))
    alpha = ndcore.softmax(ndcore.matmul(projected, params[f'secondary.{task}.u']))
    return ndcore.matmul(alpha, stacked), alpha


def task_heads(sentence_vectors: Mapping[str, Tensor], params: ModelParameters) -> Dict[str, Tensor]:
    """Логіти кожної активної задачі: афінний шар (опційно з прихованим ReLU-шаром)"""
    logits = {}
    for task, vector in sentence_vectors.items():
        if vector.shape != (params.config.sentence_dim,):
            raise ShapeError(f"Голова '{task}' очікує вектор {params.config.sentence_dim}, отримано {vector.shape}")
        hidden = vector
        if params.config.head_hidden:
            hidden = ndcore.relu(ndcore.add(ndcore.matmul(vector, params[f'head.{task}.V_hidden']),
                                            params[f'head.{task}.c_hidden']))
        logits[task] = ndcore.add(ndcore.matmul(hidden, params[f'head.{task}.V']), params[f'head.{task}.c'])
    return logits


# -----------------------
# Word representation strategies
# -----------------------
class WordRepresentationStrategy(ABC):
    """Як отримати ĥ_t з h_t для задачі"""

    @abstractmethod
    def represent(self, hidden: Sequence[Tensor], candidates: Sequence[Optional[Tensor]], task: str,
                  params: ModelParameters) -> Tuple[List[Tensor], List[np.ndarray], List[np.ndarray]]:
        """Повертає (ĥ_t для кожного t, коефіцієнти α_ti, вектори m_t)"""
        pass


class PrimaryAttentionStrategy(WordRepresentationStrategy):
    def represent(self, hidden, candidates, task, params):
        augmented, coefficients, memories = [], [], []
        for h_t, v in zip(hidden, candidates):
            h_hat, alpha, memory = primary_attention(h_t, v, task, params)
            augmented.append(h_hat)
            coefficients.append(np.zeros(0) if alpha is None else alpha.data)
            memories.append(memory.data)
        return augmented, coefficients, memories


class ContextOnlyStrategy(WordRepresentationStrategy):
    """ĥ_t = h_t (архітектури без первинної уваги)"""

    def represent(self, hidden, candidates, task, params):
        return list(hidden), [], []


def representation_strategy(config: ModelConfig) -> WordRepresentationStrategy:
    if config.primary_attention_enabled:
        return PrimaryAttentionStrategy()
    return ContextOnlyStrategy()


# -----------------------
# Forward
# -----------------------
def forward(example: EncodedExample, params: ModelParameters, train_mode: bool = False, rng=None) -> ForwardTrace:
    """
    embed -> BiLSTM -> (первинна увага | ĥ_t = h_t) -> вторинна увага -> голови.
    Обчислюються лише голови активних задач режиму.
    rng: генератор для dropout (потрібен тільки при train_mode).
    """
    config = params.config
    if example.token_ids.size == 0:
        raise ContractError(f"Приклад '{example.id}' не містить токенів")
    if train_mode and rng is None:
        rng = np.random.default_rng(0)

    embeddings = params[EMBEDDINGS]
    hidden = bilstm_forward(ndcore.gather_rows(embeddings, example.token_ids), params, train_mode, rng)

    candidates: List[Optional[Tensor]] = [None] * len(hidden)
    if config.primary_attention_enabled:
        candidates = [ndcore.gather_rows(embeddings, ids) if ids.size else None for ids in example.candidate_ids]

    strategy = representation_strategy(config)
    trace = ForwardTrace(config.mode, [h.data for h in hidden], list(example.candidate_ids))
    sentence_vectors: Dict[str, Tensor] = {}
    partial: Dict[str, tuple] = {}
    for task in config.tasks:
        augmented, coefficients, memories = strategy.represent(hidden, candidates, task, params)
        sentence, alpha = secondary_attention(augmented, task, params)
        partial[task] = (coefficients, memories, [a.data for a in augmented], alpha.data, sentence.data)
        if train_mode and config.dropout_rate > 0:
            sentence = ndcore.mul(sentence, ndcore.dropout_mask(sentence.shape, config.dropout_rate, rng))
        sentence_vectors[task] = sentence

    for task, logits in task_heads(sentence_vectors, params).items():
        trace.tasks[task] = TaskTrace(*partial[task], logits=logits)
    return trace


# -----------------------
# Prediction
# -----------------------
@dataclass(frozen=True)
class Prediction:
    sentiment: Optional[str]
    sentiment_probabilities: Optional[Dict[str, float]]
    emotions: Tuple[str, ...]
    emotion_probabilities: Optional[Dict[str, float]]


def predict_labels(logits: Mapping[str, Tensor], threshold: float = 0.5) -> Prediction:
    """
    Сентимент: argmax двох сигмоїдних виходів [negative, positive].
    Емоції: кожна мітка з ймовірністю >= threshold.
    """
    sentiment = sentiment_probabilities = emotion_probabilities = None
    emotions: Tuple[str, ...] = ()
    if TASK_SENTIMENT in logits:
        probabilities = expit(np.asarray(logits[TASK_SENTIMENT].data))
        sentiment = POLARITY_LABELS[int(np.argmax(probabilities))]
        sentiment_probabilities = {label: float(p) for label, p in zip(POLARITY_LABELS, probabilities)}
    if TASK_EMOTION in logits:
        probabilities = expit(np.asarray(logits[TASK_EMOTION].data))
        emotions = tuple(label for label, p in zip(EMOTIONS, probabilities) if p >= threshold)
        emotion_probabilities = {label: float(p) for label, p in zip(EMOTIONS, probabilities)}
    return Prediction(sentiment, sentiment_probabilities, emotions, emotion_probabilities)
