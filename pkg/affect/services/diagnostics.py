"""
Перевірка градієнтів повної моделі на крихітному синтетичному прикладі.
"""
import logging
from typing import Dict

import numpy as np

from affect.services import ndcore
from affect.services.ndcore import GradCheckReport, Tensor
from affect.services.network import ModelConfig, ModelParameters, forward
from affect.services.resources import EMOTIONS, EncodedExample
from affect.services.training import TrainConfig, joint_loss

logger = logging.getLogger(__name__)

TINY_VOCAB = 8
TINY_DIMS = {'embed_dim': 4, 'lstm_hidden': 3, 'context_dim': 3, 'dt_k': 3}
TINY_STDDEV = 0.5


def tiny_config(mode: str, head_hidden: int = 0) -> ModelConfig:
    """Мала модель без dropout; ембедінги включені в перевірку"""
    return ModelConfig(mode=mode, dropout_rate=0.0, head_hidden=min(head_hidden, 3), init_stddev=TINY_STDDEV,
                       train_embeddings=True, **TINY_DIMS)


def synthetic_example() -> EncodedExample:
    """Три токени: два з кандидатами DT, останній без кандидатів"""
    emotions = np.zeros(len(EMOTIONS))
    emotions[[0, 2, 5]] = 1.0
    return EncodedExample(
        id='gradcheck',
        token_ids=np.array([5, 6, 7], dtype=np.int64),
        candidate_ids=(np.array([1, 2], dtype=np.int64), np.array([3, 4, 2], dtype=np.int64),
                       np.array([], dtype=np.int64)),
        sentiment='positive',
        emotions=emotions,
    )


def model_gradcheck(mode: str, seed: int = 0, head_hidden: int = 0, eps: float = 1e-5) -> GradCheckReport:
    config = tiny_config(mode, head_hidden)
    embedding_rows = ndcore.truncated_normal((TINY_VOCAB, config.embed_dim), TINY_STDDEV,
                                             ndcore.stage_rng(seed, 'oov'))
    params = ModelParameters.initialize(config, embedding_rows, seed)
    example = synthetic_example()
    train_config = TrainConfig()

    def loss(tensors: Dict[str, Tensor]) -> Tensor:
        trace = forward(example, params.replace(tensors))
        return joint_loss(trace, example, train_config)

    report = ndcore.grad_check(loss, params.tensors, eps)
    logger.info("Gradient check %s: max relative error %.3e over %d tensors",
                mode, report.max_relative_error, len(report.per_tensor))
    return report
