"""
Зовнішні ресурси: попередньо навчені ембедінги (word2vec text), списки
розширення з дистрибутивного тезауруса, розмічений корпус і словник моделі.
Всі завантажувачі повертають незмінні структури.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from affect.exceptions import ContractError, CorpusIntegrityError, ParseError, ResourceError
from affect.services import ndcore
from affect.services.preprocess import NUMBER, URL, USER, SegmentationLexicon, normalize

logger = logging.getLogger(__name__)

EMOTIONS = ('anger', 'anticipation', 'disgust', 'fear', 'joy', 'sadness', 'surprise', 'trust')

SENTIMENT_NEGATIVE = 'negative'
SENTIMENT_POSITIVE = 'positive'
SENTIMENT_OTHER = 'other'
SENTIMENTS = (SENTIMENT_NEGATIVE, SENTIMENT_POSITIVE, SENTIMENT_OTHER)
# порядок виходів сентимент-голови
POLARITY_LABELS = (SENTIMENT_NEGATIVE, SENTIMENT_POSITIVE)

PAD = '<pad>'
OOV = '<oov>'
SPECIAL_TOKENS = (PAD, OOV, USER, NUMBER, URL)


# -----------------------
# Embeddings
# -----------------------
@dataclass(frozen=True)
class EmbeddingMatrix:
    dim: int
    index: Mapping[str, int]
    vectors: np.ndarray

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def __len__(self) -> int:
        return len(self.index)

    def row(self, word: str) -> int:
        return self.index.get(word, self.index[OOV])

    def lookup(self, word: str) -> np.ndarray:
        return self.vectors[self.row(word)]


def load_embeddings(path, expected_dim: int = 300, seed: int = 0, stddev: float = 0.1) -> EmbeddingMatrix:
    """
    Формат word2vec text: `word v1 ... v_dim`, опційний заголовок `count dim`.
    Рядки <oov> і плейсхолдерів, яких немає у файлі, ініціалізуються усіченим
    нормальним розподілом (seed), рядок <pad> нульовий.
    """
    path = Path(path)
    if not path.exists():
        raise ResourceError(f"Файл ембедінгів не знайдено: {path}")

    words: List[str] = []
    rows: List[np.ndarray] = []
    seen = set()
    with path.open(encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            parts = line.split()
            if not parts:
                continue
            if line_number == 1 and len(parts) == 2 and all(part.isdigit() for part in parts):
                if int(parts[1]) != expected_dim:
                    raise ParseError(f"заголовок оголошує розмірність {parts[1]}, очікується {expected_dim}",
                                     path, line_number)
                continue
            if len(parts) != expected_dim + 1:
                raise ParseError(f"очікується {expected_dim} значень, отримано {len(parts) - 1}", path, line_number)
            try:
                vector = np.asarray(parts[1:], dtype=np.float64)
            except ValueError:
                raise ParseError("нечислове значення у векторі", path, line_number)
            if not np.isfinite(vector).all():
                raise ParseError("вектор містить NaN або Inf", path, line_number)
            word = parts[0]
            if word in seen:
                logger.warning("Duplicate embedding for '%s' at %s:%d ignored", word, path, line_number)
                continue
            seen.add(word)
            words.append(word)
            rows.append(vector)

    if not rows:
        raise ResourceError(f"Файл ембедінгів порожній: {path}")

    from_file = dict(zip(words, rows))
    rng = ndcore.stage_rng(seed, 'oov')
    special_rows = []
    for token in SPECIAL_TOKENS:
        if token == PAD:
            special_rows.append(np.zeros(expected_dim))
        elif token in from_file:
            special_rows.append(from_file[token])
        else:
            special_rows.append(ndcore.truncated_normal((expected_dim,), stddev, rng))

    ordinary = [(word, row) for word, row in zip(words, rows) if word not in SPECIAL_TOKENS]
    all_words = list(SPECIAL_TOKENS) + [word for word, _ in ordinary]
    matrix = np.vstack(special_rows + [row for _, row in ordinary])
    matrix.setflags(write=False)
    logger.info("Loaded %d embeddings of dim %d from %s", len(ordinary), expected_dim, path)
    return EmbeddingMatrix(expected_dim, {word: i for i, word in enumerate(all_words)}, matrix)


# -----------------------
# Distributional Thesaurus
# -----------------------
@dataclass(frozen=True)
class Thesaurus:
    """Слово -> ранжований список кандидатів (найподібніші першими)"""
    entries: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def expand(self, word: str, k: int = 4) -> List[str]:
        if k < 1:
            raise ContractError(f"k повинен бути >= 1, отримано {k}")
        return list(self.entries.get(word, ())[:k])

    @classmethod
    def from_entries(cls, entries: Mapping[str, Iterable[str]]) -> 'Thesaurus':
        cleaned = {}
        for headword, candidates in entries.items():
            headword = headword.lower()
            ranked: List[str] = []
            for candidate in candidates:
                candidate = candidate.strip().lower()
                if candidate and candidate != headword and candidate not in ranked:
                    ranked.append(candidate)
            cleaned[headword] = tuple(ranked)
        return cls(cleaned)


def load_thesaurus(path) -> Thesaurus:
    """Формат: UTF-8, `word<TAB>cand1,cand2,...` у порядку рангу"""
    path = Path(path)
    if not path.exists():
        raise ResourceError(f"Файл тезауруса не знайдено: {path}")
    entries: Dict[str, List[str]] = {}
    with path.open(encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip('\n')
            if not line.strip() or line.startswith('#'):
                continue
            if '\t' not in line:
                raise ParseError("очікується `word<TAB>cand1,cand2,...`", path, line_number)
            headword, raw_candidates = line.split('\t', 1)
            headword = headword.strip().lower()
            if not headword:
                raise ParseError("порожнє головне слово", path, line_number)
            if headword in entries:
                logger.warning("Duplicate thesaurus headword '%s' at %s:%d ignored", headword, path, line_number)
                continue
            entries[headword] = raw_candidates.split(',')
    thesaurus = Thesaurus.from_entries(entries)
    logger.info("Loaded thesaurus %s: %d headwords", path, len(thesaurus))
    return thesaurus


# -----------------------
# Corpus
# -----------------------
@dataclass(frozen=True)
class Example:
    id: str
    text: str
    tokens: Tuple[str, ...]
    sentiment: str
    emotions: Tuple[int, ...]

    def __post_init__(self):
        if self.sentiment not in SENTIMENTS:
            raise ContractError(f"Невідомий сентимент '{self.sentiment}'")
        if len(self.emotions) != len(EMOTIONS) or any(bit not in (0, 1) for bit in self.emotions):
            raise ContractError(f"Вектор емоцій повинен мати {len(EMOTIONS)} бітів 0/1")

    @property
    def has_polarity(self) -> bool:
        return self.sentiment != SENTIMENT_OTHER

    @property
    def emotion_labels(self) -> List[str]:
        return [label for label, bit in zip(EMOTIONS, self.emotions) if bit]


@dataclass(frozen=True)
class Corpus:
    split: str
    examples: Tuple[Example, ...]

    def __post_init__(self):
        seen = set()
        for example in self.examples:
            if example.id in seen:
                raise CorpusIntegrityError(f"Дубльований id '{example.id}' у розбитті '{self.split}'")
            seen.add(example.id)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)


def load_corpus(path, lexicon: Optional[SegmentationLexicon] = None, split: Optional[str] = None) -> Corpus:
    """
    Формат: `id<TAB>text<TAB>sentiment<TAB>b1 b2 ... b8`, біти в порядку EMOTIONS.
    Рядки, що починаються з '#', ігноруються.
    """
    path = Path(path)
    if not path.exists():
        raise ResourceError(f"Файл корпусу не знайдено: {path}")
    examples: List[Example] = []
    first_seen: Dict[str, int] = {}
    with path.open(encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip('\n').rstrip('\r')
            if not line.strip() or line.startswith('#'):
                continue
            example = _parse_corpus_row(line, path, line_number, lexicon)
            if example.id in first_seen:
                raise CorpusIntegrityError(
                    f"{path}:{line_number}: дубльований id '{example.id}' (вперше в рядку {first_seen[example.id]})"
                )
            first_seen[example.id] = line_number
            examples.append(example)
    corpus = Corpus(split or path.stem, tuple(examples))
    logger.info("Loaded corpus %s: %d examples", path, len(corpus))
    return corpus


def _parse_corpus_row(line: str, path: Path, line_number: int, lexicon) -> Example:
    fields = line.split('\t')
    if len(fields) != 4:
        raise ParseError(f"очікується 4 поля, отримано {len(fields)}", path, line_number)
    example_id, text, sentiment, raw_bits = (value.strip() for value in fields)
    if not example_id:
        raise ParseError("порожній id", path, line_number)
    if not text:
        raise ParseError("порожній текст", path, line_number)
    sentiment = sentiment.lower()
    if sentiment not in SENTIMENTS:
        raise ParseError(f"невідомий сентимент '{sentiment}'", path, line_number)
    bits = raw_bits.split()
    if len(bits) != len(EMOTIONS):
        raise ParseError(f"очікується {len(EMOTIONS)} бітів емоцій, отримано {len(bits)}", path, line_number)
    if any(bit not in ('0', '1') for bit in bits):
        raise ParseError(f"некоректний біт емоції у '{raw_bits}'", path, line_number)
    tokens = tuple(normalize(text, lexicon))
    if not tokens:
        raise ParseError("текст порожній після нормалізації", path, line_number)
    return Example(example_id, text, tokens, sentiment, tuple(int(bit) for bit in bits))


def serialize_corpus(corpus: Corpus) -> str:
    lines = []
    for example in corpus:
        bits = ' '.join(str(bit) for bit in example.emotions)
        lines.append(f"{example.id}\t{example.text}\t{example.sentiment}\t{bits}")
    return '\n'.join(lines) + '\n'


# -----------------------
# Vocabulary
# -----------------------
@dataclass(frozen=True)
class Vocabulary:
    words: Tuple[str, ...]

    @cached_property
    def index(self) -> Dict[str, int]:
        return {word: i for i, word in enumerate(self.words)}

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def __len__(self) -> int:
        return len(self.words)

    def id_of(self, word: str) -> int:
        return self.index.get(word, self.index[OOV])

    def embedding_rows(self, embeddings: EmbeddingMatrix) -> np.ndarray:
        """Матриця, індексована id словника"""
        return np.vstack([embeddings.lookup(word) for word in self.words])


def build_vocab(corpora: Union[Corpus, Sequence[Corpus]], embeddings: EmbeddingMatrix,
                thesaurus: Optional[Thesaurus] = None, k: int = 4) -> Vocabulary:
    """
    Обʼєднання токенів корпусу та їхніх DT-кандидатів, обмежене покриттям ембедінгів.
    Кандидати входять навіть тоді, коли в тексті не зустрічаються.
    """
    if isinstance(corpora, Corpus):
        corpora = [corpora]
    if not any(len(corpus) for corpus in corpora):
        raise ContractError("build_vocab: корпус порожній")
    thesaurus = thesaurus or Thesaurus()

    words = list(SPECIAL_TOKENS)
    known = set(words)
    for corpus in corpora:
        for example in corpus:
            for token in example.tokens:
                for word in [token] + thesaurus.expand(token, k):
                    if word not in known and word in embeddings:
                        known.add(word)
                        words.append(word)
    logger.info("Vocabulary built: %d words (%d specials)", len(words), len(SPECIAL_TOKENS))
    return Vocabulary(tuple(words))


# -----------------------
# Encoding
# -----------------------
@dataclass(frozen=True)
class EncodedExample:
    id: str
    token_ids: np.ndarray
    candidate_ids: Tuple[np.ndarray, ...]
    sentiment: str
    emotions: np.ndarray

    @property
    def has_polarity(self) -> bool:
        return self.sentiment != SENTIMENT_OTHER

    @property
    def sentiment_target(self) -> Optional[np.ndarray]:
        """one-hot у порядку POLARITY_LABELS; None для 'other'"""
        if not self.has_polarity:
            return None
        target = np.zeros(len(POLARITY_LABELS))
        target[POLARITY_LABELS.index(self.sentiment)] = 1.0
        return target


def encode_tokens(tokens: Sequence[str], vocabulary: Vocabulary, thesaurus: Optional[Thesaurus],
                  k: int) -> Tuple[np.ndarray, Tuple[np.ndarray, ...]]:
    thesaurus = thesaurus or Thesaurus()
    token_ids = np.array([vocabulary.id_of(token) for token in tokens], dtype=np.int64)
    # кандидати без ембедінга відкидаються, а не заміщуються <oov>
    candidate_ids = tuple(
        np.array([vocabulary.index[c] for c in thesaurus.expand(token, k) if c in vocabulary], dtype=np.int64)
        for token in tokens
    )
    return token_ids, candidate_ids


def encode_example(example: Example, vocabulary: Vocabulary, thesaurus: Optional[Thesaurus], k: int) -> EncodedExample:
    token_ids, candidate_ids = encode_tokens(example.tokens, vocabulary, thesaurus, k)
    return EncodedExample(example.id, token_ids, candidate_ids, example.sentiment,
                          np.asarray(example.emotions, dtype=np.float64))


def encode_corpus(corpus: Corpus, vocabulary: Vocabulary, thesaurus: Optional[Thesaurus], k: int) -> List[EncodedExample]:
    return [encode_example(example, vocabulary, thesaurus, k) for example in corpus]
