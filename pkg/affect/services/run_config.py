"""
Файл конфігурації запуску: пласкі рядки `key = value`, коментарі '#'.

Невідомі ключі відхиляються до будь-якої іншої перевірки; значення
валідуються RunConfigSerializer; відсутні ключі беруться з
settings.AFFECT_MODEL_DEFAULTS / AFFECT_TRAIN_DEFAULTS. Відносні шляхи
розвʼязуються від каталогу файлу конфігурації.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Mapping, Optional

from django.conf import settings

from affect.exceptions import ConfigError, InvalidHyperparameterError
from affect.services.network import ModelConfig
from affect.services.training import TrainConfig

logger = logging.getLogger(__name__)

PATH_KEYS = ('corpus.train', 'corpus.test', 'embeddings', 'thesaurus', 'lexicon')

MODEL_KEYS = ('mode', 'embed_dim', 'lstm_hidden', 'context_dim', 'dt_k', 'dropout', 'head_hidden',
              'init_stddev', 'train_embeddings')
TRAIN_KEYS = ('batch_size', 'lr', 'beta1', 'beta2', 'adam_epsilon', 'epochs', 'seed', 'loss.sentiment_weight',
              'loss.emotion_weight', 'threshold', 'patience', 'workers')

CONFIG_KEYS = PATH_KEYS + ('out_dir',) + MODEL_KEYS + TRAIN_KEYS

# ключ файлу -> поле серіалізатора
FIELD_NAMES = {
    'corpus.train': 'corpus_train',
    'corpus.test': 'corpus_test',
    'loss.sentiment_weight': 'sentiment_weight',
    'loss.emotion_weight': 'emotion_weight',
}

# поле серіалізатора -> атрибут ModelConfig
MODEL_ATTRIBUTES = {'dropout': 'dropout_rate'}

NULL_VALUES = ('none', 'null', '')


def field_name(key: str) -> str:
    return FIELD_NAMES.get(key, key)


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    train: TrainConfig
    paths: Dict[str, Path] = field(default_factory=dict)
    out_dir: Path = Path('runs')
    source: Optional[Path] = None
    explicit_keys: FrozenSet[str] = frozenset()

    def path(self, key: str) -> Optional[Path]:
        return self.paths.get(key)

    def explicit_model_values(self) -> Dict[str, object]:
        """Значення моделі, задані у файлі явно (у термінах ModelConfig)"""
        values = self.model.to_dict()
        return {MODEL_ATTRIBUTES.get(key, key): values[MODEL_ATTRIBUTES.get(key, key)]
                for key in MODEL_KEYS if key in self.explicit_keys}

    def echo(self) -> Dict[str, object]:
        """Повна ефективна конфігурація у термінах ключів файлу"""
        values: Dict[str, object] = {key: str(path) for key, path in sorted(self.paths.items())}
        values['out_dir'] = str(self.out_dir)
        model = self.model.to_dict()
        for key in MODEL_KEYS:
            values[key] = model[MODEL_ATTRIBUTES.get(key, key)]
        train = self.train.to_dict()
        for key in TRAIN_KEYS:
            values[key] = train[field_name(key)]
        return values


class RunConfigLoader:
    """Завантаження і валідація конфігурації запуску"""

    @staticmethod
    def parse_text(text: str, source=None) -> Dict[str, str]:
        values: Dict[str, str] = {}
        for line_number, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, separator, value = line.partition('=')
            key = key.strip()
            if not separator or not key:
                raise ConfigError(f"{source or 'config'}:{line_number}: очікується `key = value`")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{source or 'config'}:{line_number}: невідомий ключ конфігурації '{key}'")
            if key in values:
                raise ConfigError(f"{source or 'config'}:{line_number}: ключ '{key}' задано повторно")
            values[key] = value.strip()
        return values

    @staticmethod
    def load(path=None, overrides: Optional[Mapping[str, object]] = None,
             required: Iterable[str] = ()) -> RunConfig:
        """
        path: файл конфігурації (None - лише значення за замовчуванням).
        overrides: значення з командного рядка (`seed`, `out_dir`), мають пріоритет над файлом.
        required: ключі шляхів, які повинні бути задані.
        """
        from affect.serializers import RunConfigSerializer

        raw: Dict[str, object] = {}
        base_dir = Path.cwd()
        source = None
        if path is not None:
            source = Path(path)
            if not source.is_file():
                raise ConfigError(f"Файл конфігурації не знайдено: {source}")
            raw.update(RunConfigLoader.parse_text(source.read_text(encoding='utf-8'), source))
            base_dir = source.resolve().parent
        for key, value in (overrides or {}).items():
            if key not in CONFIG_KEYS:
                raise ConfigError(f"Невідомий ключ конфігурації '{key}'")
            if value is not None:
                raw[key] = value

        data = {field_name(key): (None if key == 'patience' and str(value).lower() in NULL_VALUES else value)
                for key, value in raw.items()}
        serializer = RunConfigSerializer(data=data)
        if not serializer.is_valid():
            details = '; '.join(f"{key}: {' '.join(str(m) for m in messages)}"
                                for key, messages in serializer.errors.items())
            raise ConfigError(f"Некоректна конфігурація: {details}")
        validated = serializer.validated_data

        model_values = dict(getattr(settings, 'AFFECT_MODEL_DEFAULTS', {}))
        train_values = dict(getattr(settings, 'AFFECT_TRAIN_DEFAULTS', {}))
        for key in MODEL_KEYS:
            if key in validated:
                model_values[key] = validated[key]
        for key in TRAIN_KEYS:
            if field_name(key) in validated:
                train_values[field_name(key)] = validated[field_name(key)]
        try:
            model = ModelConfig(**{MODEL_ATTRIBUTES.get(key, key): value for key, value in model_values.items()})
            train = TrainConfig(**train_values)
        except (InvalidHyperparameterError, TypeError) as e:
            raise ConfigError(f"Некоректна конфігурація: {e}")

        paths: Dict[str, Path] = {}
        for key in PATH_KEYS:
            if field_name(key) in validated:
                resolved = Path(validated[field_name(key)])
                paths[key] = resolved if resolved.is_absolute() else base_dir / resolved
        RunConfigLoader.check_paths(paths, required)

        out_dir = Path(validated.get('out_dir') or getattr(settings, 'AFFECT_OUT_DIR', 'runs'))
        from_file = (overrides or {}).get('out_dir') is None
        if not out_dir.is_absolute() and 'out_dir' in raw and source is not None and from_file:
            out_dir = base_dir / out_dir

        logger.debug("Run config loaded from %s: mode=%s seed=%d", source, model.mode, train.seed)
        return RunConfig(model, train, paths, out_dir, source, frozenset(raw))

    @staticmethod
    def check_paths(paths: Mapping[str, Path], required: Iterable[str] = ()):
        """Всі задані шляхи повинні існувати; обовʼязкові - бути заданими"""
        for key in required:
            if key not in paths:
                raise ConfigError(f"Не задано обовʼязковий ключ '{key}'")
        for key, path in paths.items():
            if not path.exists():
                raise ConfigError(f"Шлях '{key}' не існує: {path}")
