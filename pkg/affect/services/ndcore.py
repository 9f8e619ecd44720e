"""
Мінімальний тензорний субстрат для моделі.

Щільні float64-тензори, стрічка обчислень для зворотного диференціювання,
оптимізатор Adam, inverted dropout і перевірка градієнтів скінченними різницями.
Все, що нижче за течією (BiLSTM, увага, голови), будується тільки з цих операцій.
"""
from __future__ import annotations

import logging
import threading
import zlib
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from affect.exceptions import ContractError, InvalidHyperparameterError, ShapeError

logger = logging.getLogger(__name__)

DTYPE = np.float64


class Tensor:
    """
    Незмінний щільний тензор (row-major, float64).
    Дані копіюються при створенні і позначаються як read-only.
    """

    __slots__ = ('_data',)

    def __init__(self, data):
        array = np.array(data, dtype=DTYPE)
        if any(extent <= 0 for extent in array.shape):
            raise ShapeError(f"Тензор повинен мати додатні розміри, отримано {array.shape}")
        array.setflags(write=False)
        self._data = array

    @classmethod
    def _wrap(cls, array) -> 'Tensor':
        # результат операції: без копіювання
        tensor = cls.__new__(cls)
        array = np.asarray(array, dtype=DTYPE)
        array.setflags(write=False)
        tensor._data = array
        return tensor

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() можливий лише для скаляра, форма {self.shape}")
        return float(self._data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, data={np.array2string(self._data, precision=4, threshold=8)})"


# -----------------------
# Стрічка обчислень
# -----------------------
@dataclass(frozen=True)
class OpContext:
    inputs: Tuple[np.ndarray, ...]
    output: np.ndarray
    attrs: Mapping[str, object]


@dataclass(frozen=True)
class TapeEntry:
    op: str
    inputs: Tuple[Optional[int], ...]
    output: int
    context: OpContext


BackwardRule = Callable[[np.ndarray, OpContext], Tuple[Optional[np.ndarray], ...]]

_local = threading.local()


def _tape_stack() -> List[Optional['ComputationTape']]:
    stack = getattr(_local, 'tapes', None)
    if stack is None:
        stack = []
        _local.tapes = stack
    return stack


def active_tape() -> Optional['ComputationTape']:
    stack = _tape_stack()
    return stack[-1] if stack else None


@contextmanager
def suspended_tape() -> Iterator[None]:
    """Тимчасово вимикає запис (операції всередині не потрапляють на стрічку)"""
    stack = _tape_stack()
    stack.append(None)
    try:
        yield
    finally:
        stack.pop()


class ComputationTape:
    """
    Впорядкований журнал примітивних операцій.
    Вузол отримує id при реєстрації, тому входи кожної операції завжди передують їй.
    Стрічка належить одному потоку й одному прогону.
    """

    def __init__(self):
        self.entries: List[TapeEntry] = []
        self._nodes: List[Tensor] = []
        self._node_ids: Dict[int, int] = {}
        self._leaves: Dict[str, int] = {}

    def __enter__(self) -> 'ComputationTape':
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _tape_stack().pop()
        return False

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def leaves(self) -> Dict[str, int]:
        return dict(self._leaves)

    def tensor(self, node: int) -> Tensor:
        return self._nodes[node]

    def node_of(self, tensor: Tensor) -> Optional[int]:
        return self._node_ids.get(id(tensor))

    def watch(self, name: str, tensor: Tensor) -> Tensor:
        """Зареєструвати листовий параметр, для якого backward() поверне градієнт"""
        if name in self._leaves:
            raise ContractError(f"Параметр '{name}' вже зареєстровано на стрічці")
        node = self.node_of(tensor)
        if node is None:
            node = self._register(tensor)
        self._leaves[name] = node
        return tensor

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, attrs: Mapping[str, object]):
        input_nodes = tuple(self.node_of(tensor) for tensor in inputs)
        if all(node is None for node in input_nodes):
            # жоден вхід не залежить від параметрів: результат є константою
            return
        context = OpContext(tuple(tensor.data for tensor in inputs), output.data, attrs)
        output_node = self._register(output)
        self.entries.append(TapeEntry(op, input_nodes, output_node, context))

    def _register(self, tensor: Tensor) -> int:
        node = len(self._nodes)
        self._nodes.append(tensor)
        self._node_ids[id(tensor)] = node
        return node


BACKWARD_RULES: Dict[str, BackwardRule] = {}


def backward_rule(op: str):
    def register(rule: BackwardRule) -> BackwardRule:
        BACKWARD_RULES[op] = rule
        return rule
    return register


@contextmanager
def patched_backward(op: str, rule: BackwardRule) -> Iterator[None]:
    """Підмінити правило backward для операції (використовується для fault injection)"""
    if op not in BACKWARD_RULES:
        raise ContractError(f"Невідома операція: {op}")
    original = BACKWARD_RULES[op]
    BACKWARD_RULES[op] = rule
    try:
        yield
    finally:
        BACKWARD_RULES[op] = original


def _apply(op: str, inputs: Sequence[Tensor], output, **attrs) -> Tensor:
    result = Tensor._wrap(output)
    tape = active_tape()
    if tape is not None:
        tape.record(op, inputs, result, attrs)
    return result


def backward(tape: ComputationTape, loss: Tensor) -> Dict[str, np.ndarray]:
    """
    Зворотний прохід по стрічці.
    Повертає градієнт для кожного зареєстрованого параметра;
    параметри, від яких loss не залежить, отримують нулі.
    """
    if loss.size != 1:
        raise ContractError(f"backward() очікує скалярний loss, отримано форму {loss.shape}")

    grads: List[Optional[np.ndarray]] = [None] * tape.node_count
    loss_node = tape.node_of(loss)
    if loss_node is not None:
        grads[loss_node] = np.ones(loss.shape, dtype=DTYPE)
        for entry in reversed(tape.entries):
            grad = grads[entry.output]
            if grad is None:
                continue
            input_grads = BACKWARD_RULES[entry.op](grad, entry.context)
            for node, input_grad in zip(entry.inputs, input_grads):
                if node is None or input_grad is None:
                    continue
                grads[node] = input_grad if grads[node] is None else grads[node] + input_grad
            grads[entry.output] = None

    result = {}
    for name, node in tape.leaves.items():
        shape = tape.tensor(node).shape
        grad = grads[node]
        result[name] = np.zeros(shape, dtype=DTYPE) if grad is None else np.asarray(grad, dtype=DTYPE).reshape(shape)
    return result


# -----------------------
# Операції
# -----------------------
def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: несумісні форми {a.shape} і {b.shape}")
    return _apply('matmul', (a, b), a.data @ b.data)


@backward_rule('matmul')
def _matmul_backward(grad, ctx):
    a, b = ctx.inputs
    a2 = a.reshape(1, -1) if a.ndim == 1 else a
    b2 = b.reshape(-1, 1) if b.ndim == 1 else b
    g2 = np.reshape(grad, (a2.shape[0], b2.shape[1]))
    return (g2 @ b2.T).reshape(a.shape), (a2.T @ g2).reshape(b.shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Поелементна сума; також матриця + вектор-зсув по рядках"""
    row_bias = a.ndim == 2 and b.ndim == 1 and a.shape[1] == b.shape[0]
    if a.shape != b.shape and not row_bias:
        raise ShapeError(f"add: несумісні форми {a.shape} і {b.shape}")
    return _apply('add', (a, b), a.data + b.data)


@backward_rule('add')
def _add_backward(grad, ctx):
    b = ctx.inputs[1]
    if grad.shape != b.shape:
        return grad, grad.sum(axis=0)
    return grad, grad


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"mul: несумісні форми {a.shape} і {b.shape}")
    return _apply('mul', (a, b), a.data * b.data)


@backward_rule('mul')
def _mul_backward(grad, ctx):
    a, b = ctx.inputs
    return grad * b, grad * a


def scale(a: Tensor, factor: float) -> Tensor:
    return _apply('scale', (a,), a.data * factor, factor=float(factor))


@backward_rule('scale')
def _scale_backward(grad, ctx):
    return (grad * ctx.attrs['factor'],)


def sigmoid(a: Tensor) -> Tensor:
    return _apply('sigmoid', (a,), expit(a.data))


@backward_rule('sigmoid')
def _sigmoid_backward(grad, ctx):
    out = ctx.output
    return (grad * out * (1.0 - out),)


def tanh(a: Tensor) -> Tensor:
    return _apply('tanh', (a,), np.tanh(a.data))


@backward_rule('tanh')
def _tanh_backward(grad, ctx):
    return (grad * (1.0 - ctx.output ** 2),)


def relu(a: Tensor) -> Tensor:
    return _apply('relu', (a,), np.maximum(a.data, 0.0))


@backward_rule('relu')
def _relu_backward(grad, ctx):
    return (grad * (ctx.inputs[0] > 0.0),)


def softmax(scores: Tensor) -> Tensor:
    """Softmax вектора з відніманням максимуму"""
    if scores.ndim != 1 or scores.size == 0:
        raise ShapeError(f"softmax очікує непорожній вектор, отримано форму {scores.shape}")
    shifted = np.exp(scores.data - scores.data.max())
    return _apply('softmax', (scores,), shifted / shifted.sum())


@backward_rule('softmax')
def _softmax_backward(grad, ctx):
    out = ctx.output
    return (out * (grad - np.dot(grad, out)),)


def sigmoid_xent(logits: Tensor, targets) -> Tensor:
    """
    Середня сигмоїдна крос-ентропія по n виходах.
    Стабільна форма: softplus(z) - y*z == -[y log σ(z) + (1-y) log(1-σ(z))].
    """
    y = np.asarray(targets.data if isinstance(targets, Tensor) else targets, dtype=DTYPE)
    if y.shape != logits.shape:
        raise ShapeError(f"sigmoid_xent: форма logits {logits.shape} і targets {y.shape} різні")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ContractError("sigmoid_xent: targets повинні бути 0 або 1")
    z = logits.data
    loss = np.mean(np.logaddexp(0.0, z) - y * z)
    return _apply('sigmoid_xent', (logits,), loss, targets=y)


@backward_rule('sigmoid_xent')
def _sigmoid_xent_backward(grad, ctx):
    z = ctx.inputs[0]
    y = ctx.attrs['targets']
    return (grad * (expit(z) - y) / z.size,)


def concat(tensors: Sequence[Tensor]) -> Tensor:
    if not tensors or any(t.ndim != 1 for t in tensors):
        raise ShapeError("concat очікує непорожній список векторів")
    return _apply('concat', tuple(tensors), np.concatenate([t.data for t in tensors]),
                  sizes=tuple(t.size for t in tensors))


@backward_rule('concat')
def _concat_backward(grad, ctx):
    bounds = np.cumsum(ctx.attrs['sizes'])[:-1]
    return tuple(np.split(grad, bounds))


def stack(tensors: Sequence[Tensor]) -> Tensor:
    if not tensors:
        raise ShapeError("stack очікує непорожній список")
    shape = tensors[0].shape
    if any(t.shape != shape for t in tensors):
        raise ShapeError(f"stack: різні форми {[t.shape for t in tensors]}")
    return _apply('stack', tuple(tensors), np.stack([t.data for t in tensors]))


@backward_rule('stack')
def _stack_backward(grad, ctx):
    return tuple(grad[i] for i in range(grad.shape[0]))


def take(a: Tensor, index: int) -> Tensor:
    """Рядок (елемент) за першою віссю"""
    if a.ndim == 0 or not -a.shape[0] <= index < a.shape[0]:
        raise ShapeError(f"take: індекс {index} поза формою {a.shape}")
    return _apply('take', (a,), a.data[index], index=int(index))


@backward_rule('take')
def _take_backward(grad, ctx):
    full = np.zeros_like(ctx.inputs[0])
    full[ctx.attrs['index']] = grad
    return (full,)


def slice1d(a: Tensor, start: int, stop: int) -> Tensor:
    if a.ndim != 1 or not 0 <= start < stop <= a.shape[0]:
        raise ShapeError(f"slice1d: [{start}:{stop}] поза формою {a.shape}")
    return _apply('slice1d', (a,), a.data[start:stop], start=start, stop=stop)


@backward_rule('slice1d')
def _slice_backward(grad, ctx):
    full = np.zeros_like(ctx.inputs[0])
    full[ctx.attrs['start']:ctx.attrs['stop']] = grad
    return (full,)


def gather_rows(matrix: Tensor, ids) -> Tensor:
    """Вибірка рядків за індексами (пошук ембедінгів)"""
    index = np.asarray(ids, dtype=np.int64)
    if matrix.ndim != 2 or index.ndim != 1 or index.size == 0:
        raise ShapeError(f"gather_rows: матриця {matrix.shape}, індекси {index.shape}")
    if index.min() < 0 or index.max() >= matrix.shape[0]:
        raise ShapeError(f"gather_rows: індекс поза межами {matrix.shape[0]} рядків")
    return _apply('gather_rows', (matrix,), matrix.data[index], ids=index)


@backward_rule('gather_rows')
def _gather_backward(grad, ctx):
    full = np.zeros_like(ctx.inputs[0])
    np.add.at(full, ctx.attrs['ids'], grad)
    return (full,)


def total(a: Tensor) -> Tensor:
    """Сума всіх елементів (скаляр)"""
    return _apply('sum', (a,), a.data.sum())


@backward_rule('sum')
def _sum_backward(grad, ctx):
    return (np.full(ctx.inputs[0].shape, grad, dtype=DTYPE),)


# -----------------------
# Випадковість
# -----------------------
def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Незалежний генератор для етапу, виведений з одного seed конфігурації"""
    if seed < 0:
        raise InvalidHyperparameterError(f"seed повинен бути невідʼємним, отримано {seed}")
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(stage.encode('utf-8'))]))


def truncated_normal(shape, stddev: float, rng: np.random.Generator, cutoff: float = 2.0) -> np.ndarray:
    """Нормальний розподіл з перевибіркою значень за межами ±cutoff·σ"""
    values = rng.standard_normal(shape)
    outside = np.abs(values) > cutoff
    while outside.any():
        values[outside] = rng.standard_normal(int(outside.sum()))
        outside = np.abs(values) > cutoff
    return values * stddev


def dropout_mask(shape, rate: float, rng=None, train_mode: bool = True) -> Tensor:
    """
    Маска inverted dropout: 0 з ймовірністю rate, інакше 1/(1-rate).
    В режимі оцінювання маска тотожна (всі одиниці).
    rng: seed або np.random.Generator.
    """
    if not 0.0 <= rate < 1.0:
        raise InvalidHyperparameterError(f"dropout rate повинен бути в [0, 1), отримано {rate}")
    shape = tuple(shape)
    if not train_mode or rate == 0.0:
        return Tensor(np.ones(shape, dtype=DTYPE))
    generator = np.random.default_rng(rng)
    keep = generator.random(shape) >= rate
    return Tensor._wrap(keep / (1.0 - rate))


# -----------------------
# Adam
# -----------------------
@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr < 0:
            raise InvalidHyperparameterError(f"lr повинен бути >= 0, отримано {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise InvalidHyperparameterError("beta1 і beta2 повинні бути в [0, 1)")
        if self.epsilon <= 0:
            raise InvalidHyperparameterError("epsilon повинен бути додатним")


def adam_step(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray],
              state: AdamState) -> Tuple[Dict[str, Tensor], AdamState]:
    """
    Один крок Adam з корекцією зміщення.
    Параметри без градієнта повертаються без змін. Вхідний стан не змінюється.
    """
    t = state.t + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    updated = dict(params)
    new_m, new_v = dict(state.m), dict(state.v)

    for name, grad in grads.items():
        if name not in params:
            raise ShapeError(f"adam_step: градієнт для невідомого параметра '{name}'")
        param = params[name]
        grad = np.asarray(grad, dtype=DTYPE)
        if grad.shape != param.shape:
            raise ShapeError(f"adam_step: '{name}' має форму {param.shape}, градієнт {grad.shape}")
        m = state.m.get(name, np.zeros(param.shape, dtype=DTYPE))
        v = state.v.get(name, np.zeros(param.shape, dtype=DTYPE))
        if m.shape != param.shape or v.shape != param.shape:
            raise ShapeError(f"adam_step: стан для '{name}' не відповідає формі {param.shape}")

        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * (grad * grad)
        step = (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
        updated[name] = Tensor._wrap(param.data - state.lr * step)
        new_m[name], new_v[name] = m, v

    new_state = AdamState(lr=state.lr, beta1=state.beta1, beta2=state.beta2,
                          epsilon=state.epsilon, t=t, m=new_m, v=new_v)
    return updated, new_state


# -----------------------
# Перевірка градієнтів
# -----------------------
@dataclass(frozen=True)
class GradCheckReport:
    per_tensor: Dict[str, float]

    @property
    def max_relative_error(self) -> float:
        return max(self.per_tensor.values(), default=0.0)

    def failing(self, tolerance: float) -> List[str]:
        return sorted(name for name, error in self.per_tensor.items() if not error < tolerance)

    def worst(self, count: int = 5) -> List[Tuple[str, float]]:
        return sorted(self.per_tensor.items(), key=lambda item: item[1], reverse=True)[:count]


def grad_check(f: Callable[[Dict[str, Tensor]], Tensor], params: Mapping[str, object],
               eps: float = 1e-5) -> GradCheckReport:
    """
    Порівняння градієнтів стрічки з центральними скінченними різницями.
    f повинна бути детермінованою (dropout вимкнено).
    Похибка координати: |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
    """
    if eps <= 0:
        raise InvalidHyperparameterError(f"eps повинен бути додатним, отримано {eps}")
    base = {name: np.array(value.data if isinstance(value, Tensor) else value, dtype=DTYPE)
            for name, value in params.items()}

    with ComputationTape() as tape:
        watched = {name: tape.watch(name, Tensor(array)) for name, array in base.items()}
        loss = f(watched)
    analytic = backward(tape, loss)

    constants = {name: Tensor(array) for name, array in base.items()}
    per_tensor = {}
    with suspended_tape():
        for name, array in base.items():
            worst = 0.0
            for index in np.ndindex(array.shape):
                numeric = (_shifted_value(f, constants, name, array, index, eps)
                           - _shifted_value(f, constants, name, array, index, -eps)) / (2.0 * eps)
                exact = float(analytic[name][index])
                error = abs(exact - numeric) / max(1e-8, abs(exact) + abs(numeric))
                worst = max(worst, error)
            per_tensor[name] = worst
            logger.debug("grad_check %s: max relative error %.3e", name, worst)
    return GradCheckReport(per_tensor)


def _shifted_value(f, constants, name, array, index, delta) -> float:
    shifted = array.copy()
    shifted[index] += delta
    arguments = dict(constants)
    arguments[name] = Tensor(shifted)
    return f(arguments).item()
