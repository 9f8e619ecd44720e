"""
Артефакти звітів.

Файл метрик - плаский текст `metric.path = value` зі стабільними ключами,
придатний для parse_metrics. Таблиця для людини повторює розкладку
зведеної таблиці F-score (режим × задача) і поемоційної таблиці P/R/F з
колонкою Micro-Avg.
"""
import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from affect.exceptions import ParseError
from affect.services.metrics import ClassScores, EmotionMetrics, MetricsReport, SentimentMetrics
from affect.services.resources import EMOTIONS, POLARITY_LABELS

logger = logging.getLogger(__name__)

METRICS_FILENAME = 'metrics.txt'
REPORT_FILENAME = 'report.txt'
CONFUSION_KEYS = ('tn', 'fp', 'fn', 'tp')
SCORE_KEYS = ('precision', 'recall', 'f1')

Value = Union[int, float, str]


def _scores(prefix: str, scores: ClassScores) -> List[Tuple[str, Value]]:
    return [(f'{prefix}.{name}', float(getattr(scores, name))) for name in SCORE_KEYS]


def _confusion(prefix: str, matrix) -> List[Tuple[str, Value]]:
    (tn, fp), (fn, tp) = matrix
    return list(zip((f'{prefix}.confusion.{key}' for key in CONFUSION_KEYS), (tn, fp, fn, tp)))


def metric_values(report: MetricsReport) -> Dict[str, Value]:
    """Всі значення звіту за пласкими ключами, у стабільному порядку"""
    items: List[Tuple[str, Value]] = [('run.mode', report.mode), ('run.seed', report.seed),
                                      ('run.epoch', report.epoch)]
    if report.sentiment is not None:
        for label in POLARITY_LABELS:
            items += _scores(f'sentiment.{label}', report.sentiment.per_class[label])
        items += [('sentiment.macro_f1', float(report.sentiment.macro_f1)),
                  ('sentiment.micro_f1', float(report.sentiment.micro_f1))]
        items += _confusion('sentiment', report.sentiment.confusion)
    if report.emotion is not None:
        for label in EMOTIONS:
            items += _scores(f'emotion.{label}', report.emotion.per_label[label])
            items += _confusion(f'emotion.{label}', report.emotion.confusion[label])
        items += _scores('emotion.micro', report.emotion.micro)
        items.append(('emotion.macro_f1', float(report.emotion.macro_f1)))
    return dict(items)


def render_metrics(report: MetricsReport) -> str:
    # repr(float) відновлюється float() без втрат
    lines = [f'{key} = {value!r}' if isinstance(value, float) else f'{key} = {value}'
             for key, value in metric_values(report).items()]
    return '\n'.join(lines) + '\n'


def parse_metrics(text: str, source: Optional[str] = None) -> MetricsReport:
    """Обернене до render_metrics"""
    values: Dict[str, str] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        key, separator, value = line.partition('=')
        if not separator:
            raise ParseError("очікується `key = value`", source, line_number)
        values[key.strip()] = value.strip()

    try:
        mode, seed, epoch = values['run.mode'], int(values['run.seed']), int(values['run.epoch'])
        sentiment = _parse_sentiment(values) if 'sentiment.macro_f1' in values else None
        emotion = _parse_emotion(values) if 'emotion.macro_f1' in values else None
    except KeyError as e:
        raise ParseError(f"відсутній ключ {e.args[0]}", source)
    except ValueError as e:
        raise ParseError(f"некоректне значення: {e}", source)
    return MetricsReport(mode, seed, epoch, sentiment, emotion)


def _read_scores(values, prefix: str) -> ClassScores:
    return ClassScores(*(float(values[f'{prefix}.{name}']) for name in SCORE_KEYS))


def _read_confusion(values, prefix: str):
    tn, fp, fn, tp = (int(values[f'{prefix}.confusion.{key}']) for key in CONFUSION_KEYS)
    return (tn, fp), (fn, tp)


def _parse_sentiment(values) -> SentimentMetrics:
    per_class = {label: _read_scores(values, f'sentiment.{label}') for label in POLARITY_LABELS}
    return SentimentMetrics(per_class, float(values['sentiment.macro_f1']), float(values['sentiment.micro_f1']),
                            _read_confusion(values, 'sentiment'))


def _parse_emotion(values) -> EmotionMetrics:
    per_label = {label: _read_scores(values, f'emotion.{label}') for label in EMOTIONS}
    confusion = {label: _read_confusion(values, f'emotion.{label}') for label in EMOTIONS}
    return EmotionMetrics(per_label, _read_scores(values, 'emotion.micro'), float(values['emotion.macro_f1']),
                          confusion)


# -----------------------
# Таблиці
# -----------------------
def _percent(value: float) -> str:
    return f'{100.0 * value:.2f}'


def _grid(rows: Sequence[Sequence[str]]) -> List[str]:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return ['  '.join(cell.ljust(width) if i == 0 else cell.rjust(width)
                      for i, (cell, width) in enumerate(zip(row, widths))).rstrip()
            for row in rows]


def render_table(report: MetricsReport) -> str:
    lines = [f'Mode {report.mode} (seed {report.seed}, epoch {report.epoch})', '']
    if report.sentiment is not None:
        sentiment = report.sentiment
        rows = [['Sentiment', 'P', 'R', 'F']]
        for label in POLARITY_LABELS:
            scores = sentiment.per_class[label]
            rows.append([label, _percent(scores.precision), _percent(scores.recall), _percent(scores.f1)])
        rows.append(['Macro-F', '', '', _percent(sentiment.macro_f1)])
        rows.append(['Micro-F', '', '', _percent(sentiment.micro_f1)])
        lines += _grid(rows)
        (tn, fp), (fn, tp) = sentiment.confusion
        lines += [''] + _grid([['Actual \\ Predicted', 'negative', 'positive'],
                               ['negative', str(tn), str(fp)],
                               ['positive', str(fn), str(tp)]])
        lines.append('')
    if report.emotion is not None:
        emotion = report.emotion
        header = ['Emotion'] + [label.capitalize() for label in EMOTIONS] + ['Micro-Avg']
        rows = [header]
        for name, title in zip(SCORE_KEYS, ('P', 'R', 'F')):
            rows.append([title] + [_percent(getattr(emotion.per_label[label], name)) for label in EMOTIONS]
                        + [_percent(getattr(emotion.micro, name))])
        lines += _grid(rows)
        lines.append(f'Macro-F: {_percent(emotion.macro_f1)}')
        lines += [''] + _grid([['Label', 'TN', 'FP', 'FN', 'TP']] + [
            [label] + [str(value) for row in emotion.confusion[label] for value in row] for label in EMOTIONS
        ])
        lines.append('')
    return '\n'.join(lines)


def render_comparison_table(reports: Sequence[MetricsReport]) -> str:
    """
    Режим × задача: F-score сентименту (macro) і емоцій (micro),
    усереднені по seed-ах одного режиму.
    """
    grouped: Dict[str, List[MetricsReport]] = defaultdict(list)
    for run_report in reports:
        grouped[run_report.mode].append(run_report)
    rows = [['Mode', 'Runs', 'Sentiment', 'Emotion']]
    for mode in sorted(grouped):
        runs = grouped[mode]
        sentiment = [r.sentiment.macro_f1 for r in runs if r.sentiment is not None]
        emotion = [r.emotion.micro.f1 for r in runs if r.emotion is not None]
        rows.append([mode, str(len(runs)),
                     _percent(float(np.mean(sentiment))) if sentiment else '-',
                     _percent(float(np.mean(emotion))) if emotion else '-'])
    return '\n'.join(_grid(rows)) + '\n'


def report(metrics: MetricsReport, path) -> str:
    """
    Записує файл метрик і таблицю в каталог path.
    Повертає текст таблиці; помилки запису (OSError) не перехоплюються.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    table = render_table(metrics)
    (path / METRICS_FILENAME).write_text(render_metrics(metrics), encoding='utf-8')
    (path / REPORT_FILENAME).write_text(table, encoding='utf-8')
    logger.info("Report written to %s", path)
    return table


def load_metrics(path) -> MetricsReport:
    path = Path(path)
    if path.is_dir():
        path = path / METRICS_FILENAME
    return parse_metrics(path.read_text(encoding='utf-8'), str(path))
