"""
Чекпоінт моделі.

Формат:
    рядок 1: `AFFECT-CHECKPOINT 1`
    рядок 2: JSON-заголовок з відсортованими ключами (конфігурація моделі,
             метадані навчання, словник, кандидати DT, таблиця тензорів)
    далі:    значення тензорів little-endian float64 у порядку таблиці
Однакові вхідні дані дають побайтово однаковий файл.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional

import numpy as np

from affect.exceptions import CheckpointError, InvalidHyperparameterError, ShapeError
from affect.services.ndcore import Tensor
from affect.services.network import ModelConfig, ModelParameters
from affect.services.resources import Thesaurus, Vocabulary

logger = logging.getLogger(__name__)

MAGIC = 'AFFECT-CHECKPOINT'
VERSION = 1
PAYLOAD_DTYPE = np.dtype('<f8')
CHECKPOINT_FILENAME = 'model.ckpt'


@dataclass(frozen=True)
class Checkpoint:
    params: ModelParameters
    vocabulary: Vocabulary
    thesaurus: Thesaurus
    train_config: Dict[str, object] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def config(self) -> ModelConfig:
        return self.params.config


def candidate_table(thesaurus: Optional[Thesaurus], vocabulary: Vocabulary, headwords: Iterable[str],
                    k: int) -> Thesaurus:
    """
    Тезаурус, обмежений словами, які модель може побачити:
    лише перші k кандидатів, що мають рядок у словнику.
    """
    if thesaurus is None:
        return Thesaurus()
    entries = {}
    for word in sorted(set(headwords)):
        candidates = tuple(c for c in thesaurus.expand(word, k) if c in vocabulary)
        if candidates:
            entries[word] = candidates
    return Thesaurus(entries)


def save_checkpoint(path, checkpoint: Checkpoint) -> Path:
    path = Path(path)
    params = checkpoint.params
    table = []
    offset = 0
    chunks: List[bytes] = []
    for name in params.names:
        array = params[name].data
        table.append({'name': name, 'offset': offset, 'shape': list(array.shape)})
        chunks.append(np.ascontiguousarray(array, dtype=PAYLOAD_DTYPE).tobytes())
        offset += array.size

    header = {
        'candidates': {word: list(candidates) for word, candidates in checkpoint.thesaurus.entries.items()},
        'metadata': checkpoint.metadata,
        'model': checkpoint.config.to_dict(),
        'tensors': table,
        'train': checkpoint.train_config,
        'vocabulary': list(checkpoint.vocabulary.words),
    }
    encoded = json.dumps(header, sort_keys=True, ensure_ascii=False, separators=(',', ':'))
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('wb') as handle:
        handle.write(f'{MAGIC} {VERSION}\n'.encode('utf-8'))
        handle.write(encoded.encode('utf-8') + b'\n')
        for chunk in chunks:
            handle.write(chunk)
    logger.info("Checkpoint saved to %s (%d tensors, %d values)", path, len(table), offset)
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Чекпоінт не знайдено: {path}")
    raw = path.read_bytes()

    first_end = raw.find(b'\n')
    second_end = raw.find(b'\n', first_end + 1) if first_end >= 0 else -1
    if first_end < 0 or second_end < 0:
        raise CheckpointError(f"{path}: пошкоджений заголовок")
    tag = raw[:first_end].decode('utf-8', errors='replace').split()
    if len(tag) != 2 or tag[0] != MAGIC:
        raise CheckpointError(f"{path}: файл не є чекпоінтом")
    if tag[1] != str(VERSION):
        raise CheckpointError(f"{path}: непідтримувана версія {tag[1]}")
    try:
        header = json.loads(raw[first_end + 1:second_end].decode('utf-8'))
        config = ModelConfig.from_dict(header['model'])
        table = header['tensors']
        words = tuple(header['vocabulary'])
        expected = sum(int(np.prod(entry['shape'])) for entry in table)
    except (ValueError, KeyError, TypeError, InvalidHyperparameterError) as e:
        raise CheckpointError(f"{path}: некоректний JSON-заголовок ({e})")

    payload_bytes = len(raw) - second_end - 1
    if payload_bytes != expected * PAYLOAD_DTYPE.itemsize:
        raise CheckpointError(f"{path}: очікується {expected * PAYLOAD_DTYPE.itemsize} байт даних, "
                              f"отримано {payload_bytes}")
    payload = np.frombuffer(raw, dtype=PAYLOAD_DTYPE, offset=second_end + 1)

    tensors = {}
    try:
        for entry in table:
            size = int(np.prod(entry['shape']))
            values = payload[entry['offset']:entry['offset'] + size]
            tensors[entry['name']] = Tensor(values.astype(np.float64).reshape(entry['shape']))
        params = ModelParameters(config, tensors)
    except (ShapeError, ValueError, KeyError) as e:
        raise CheckpointError(f"{path}: {e}")

    thesaurus = Thesaurus({word: tuple(candidates) for word, candidates in header.get('candidates', {}).items()})
    logger.info("Checkpoint loaded from %s (mode %s)", path, config.mode)
    return Checkpoint(params, Vocabulary(words), thesaurus, header.get('train', {}), header.get('metadata', {}))


def check_compatible(checkpoint: Checkpoint, model_values: Mapping[str, object]):
    """Конфігурація моделі, передана разом з чекпоінтом, повинна збігатися з збереженою"""
    stored = checkpoint.config.to_dict()
    mismatched = sorted(key for key, value in model_values.items() if key in stored and stored[key] != value)
    if mismatched:
        details = ', '.join(f"{key}: {model_values[key]!r} != {stored[key]!r}" for key in mismatched)
        raise CheckpointError(f"Конфігурація не відповідає чекпоінту ({details})")
