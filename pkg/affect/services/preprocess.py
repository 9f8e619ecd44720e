"""
Нормалізація твітів у послідовність токенів для моделі.

Порядок правил: URL -> <url>, @згадка -> <user>, сегментація хештегів
(символ '#' лишається окремим токеном), розкриття скорочень, числа -> <number>,
токенізація, нижній регістр (плейсхолдери вже канонічні).
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Mapping, Optional

import regex as re

from affect.exceptions import ParseError, ResourceError

logger = logging.getLogger(__name__)

USER = '<user>'
NUMBER = '<number>'
URL = '<url>'
PLACEHOLDERS = (USER, NUMBER, URL)

FLAGS = re.UNICODE | re.VERSION1

RE_URL = re.compile(r"(?:https?://|www\.)\S+", FLAGS)
RE_USER = re.compile(r"@\w+", FLAGS)
RE_HASHTAG = re.compile(r"#(\w+)", FLAGS)
RE_NUMBER = re.compile(r"[+-]?\p{N}+(?:[.,:]\p{N}+)*", FLAGS)
RE_STANDALONE_NUMBER = re.compile(r"(?<![\p{L}\p{M}\p{N}_])[+-]?\p{N}+(?:[.,:]\p{N}+)*(?![\p{L}\p{M}\p{N}_])", FLAGS)
# плейсхолдер | слово з апострофами всередині | будь-який інший непробільний символ
RE_TOKEN = re.compile(r"<(?:user|number|url)>|[\p{L}\p{M}\p{N}_]+(?:'[\p{L}\p{M}]+)*|[^\s\p{L}\p{M}\p{N}_]", FLAGS)
# межі camelCase: "BeautifulDay" -> "Beautiful", "Day"; "HTTPServer" -> "HTTP", "Server"
RE_CAMEL = re.compile(r"\p{Lu}+(?=\p{Lu}\p{Ll})|\p{Lu}?[\p{Ll}\p{M}]+|[\p{Lu}\p{M}]+|\p{N}+|[\p{L}\p{M}]+|[^\p{L}\p{M}\p{N}]+",
                      FLAGS)
APOSTROPHES = str.maketrans({'’': "'", '‘': "'", 'ʼ': "'", '`': "'"})


@dataclass(frozen=True)
class SegmentationLexicon:
    """Частотний словник униграм для сегментації хештегів"""
    counts: Mapping[str, int] = field(default_factory=dict)

    @cached_property
    def total(self) -> int:
        return sum(self.counts.values())

    @cached_property
    def max_word_length(self) -> int:
        return max((len(word) for word in self.counts), default=0)

    def cost(self, word: str) -> float:
        """-log P(word); нескінченність для слів поза словником"""
        count = self.counts.get(word, 0)
        if count <= 0:
            return math.inf
        return -math.log(count / self.total)

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> 'SegmentationLexicon':
        merged: Dict[str, int] = {}
        for word, count in counts.items():
            key = word.lower()
            merged[key] = merged.get(key, 0) + int(count)
        return cls(merged)


def load_lexicon(path) -> SegmentationLexicon:
    """
    Формат: UTF-8, рядки `word<TAB>count`; порядок за спаданням частоти не обовʼязковий.
    """
    path = Path(path)
    if not path.exists():
        raise ResourceError(f"Файл лексикону не знайдено: {path}")
    counts: Dict[str, int] = {}
    with path.open(encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip('\n')
            if not line.strip():
                continue
            parts = line.split('\t')
            if len(parts) != 2:
                raise ParseError("очікується `word<TAB>count`", path, line_number)
            word, raw_count = parts[0].strip(), parts[1].strip()
            try:
                count = int(raw_count)
            except ValueError:
                raise ParseError(f"некоректна частота '{raw_count}'", path, line_number)
            if not word or count < 0:
                raise ParseError("порожнє слово або відʼємна частота", path, line_number)
            counts[word.lower()] = counts.get(word.lower(), 0) + count
    logger.info("Loaded segmentation lexicon %s: %d words", path, len(counts))
    return SegmentationLexicon(counts)


# -----------------------
# Скорочення
# -----------------------
# неправильні форми, які не зводяться до суфікса
IRREGULAR_CONTRACTIONS = {
    "won't": ['will', 'not'],
    "can't": ['can', 'not'],
    "shan't": ['shall', 'not'],
    "ain't": ['is', 'not'],
    "let's": ['let', 'us'],
    "y'all": ['you', 'all'],
    "ma'am": ['madam'],
    "o'clock": ["o'clock"],
}

# "'s" неоднозначне (присвійний відмінок чи "is"); завжди розкриваємо як "is"
SUFFIX_CONTRACTIONS = (
    ("n't", ['not']),
    ("'ve", ['have']),
    ("'ll", ['will']),
    ("'re", ['are']),
    ("'m", ['am']),
    ("'d", ['would']),
    ("'s", ['is']),
)


def expand_contraction(token: str) -> List[str]:
    """
    Розкриття стандартних англійських скорочень; невідомі токени проходять без змін.
    Суфікси знімаються з голови, доки вона змінюється: "i'd've" -> i, would, have.
    """
    token = token.translate(APOSTROPHES)
    tail: List[str] = []
    while token not in IRREGULAR_CONTRACTIONS:
        for suffix, expansion in SUFFIX_CONTRACTIONS:
            if token.endswith(suffix) and len(token) > len(suffix):
                token = token[:-len(suffix)]
                tail = expansion + tail
                break
        else:
            return [token] + tail
    return list(IRREGULAR_CONTRACTIONS[token]) + tail


# -----------------------
# Хештеги
# -----------------------
def segment_hashtag(body: str, lexicon: Optional[SegmentationLexicon] = None) -> List[str]:
    """
    Сегментація тіла хештега на слова словника.
    Межі camelCase використовуються як попереднє розбиття; кожен фрагмент
    розбивається динамічним програмуванням (Вітербі по точках розрізу) з
    максимальною ймовірністю за униграмною моделлю. Фрагмент, який не
    покривається словником, лишається цілим.
    """
    lexicon = lexicon or SegmentationLexicon()
    chunks = RE_CAMEL.findall(body) or [body]
    words: List[str] = []
    for chunk in chunks:
        lowered = chunk.lower()
        split = _viterbi_split(lowered, lexicon)
        if split is None:
            words.append(lowered)
        else:
            words.extend(split)
    return words


def _viterbi_split(text: str, lexicon: SegmentationLexicon) -> Optional[List[str]]:
    if not text:
        return None
    limit = lexicon.max_word_length
    if limit == 0:
        return None
    # best[i] = (мінімальна вартість префікса довжини i, позиція попереднього розрізу)
    best = [(0.0, 0)] + [(math.inf, 0)] * len(text)
    for end in range(1, len(text) + 1):
        for start in range(max(0, end - limit), end):
            previous = best[start][0]
            if previous == math.inf:
                continue
            cost = previous + lexicon.cost(text[start:end])
            if cost < best[end][0]:
                best[end] = (cost, start)
    if best[-1][0] == math.inf:
        return None
    words = []
    end = len(text)
    while end > 0:
        start = best[end][1]
        words.append(text[start:end])
        end = start
    return list(reversed(words))


# -----------------------
# Нормалізація
# -----------------------
def normalize(raw: str, lexicon: Optional[SegmentationLexicon] = None) -> List[str]:
    """Перетворити сирий текст твіта на список токенів"""
    text = raw.translate(APOSTROPHES)
    text = RE_URL.sub(f" {URL} ", text)
    text = RE_USER.sub(f" {USER} ", text)
    text = RE_HASHTAG.sub(lambda match: " # " + " ".join(segment_hashtag(match.group(1), lexicon)) + " ", text)
    text = RE_STANDALONE_NUMBER.sub(f" {NUMBER} ", text)

    tokens: List[str] = []
    for token in RE_TOKEN.findall(text):
        if token in PLACEHOLDERS:
            tokens.append(token)
            continue
        for word in expand_contraction(token.lower()):
            if word == '@':
                continue
            tokens.append(NUMBER if RE_NUMBER.fullmatch(word) else word)
    return tokens
