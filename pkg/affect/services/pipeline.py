"""
Конвеєр запуску: ресурси -> нормалізація -> словник -> навчання -> оцінювання -> артефакти.
Кожен етап загортає свої помилки в StageError з назвою етапу.
"""
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

import numpy as np
from django.utils import timezone

from affect.exceptions import AffectError, ContractError, StageError
from affect.services import checkpoint as checkpoints
from affect.services import reporting
from affect.services.checkpoint import Checkpoint
from affect.services.metrics import MetricsReport
from affect.services.network import ModelParameters
from affect.services.preprocess import SegmentationLexicon, load_lexicon, normalize
from affect.services.resources import (
    EMOTIONS, Corpus, EmbeddingMatrix, EncodedExample, Thesaurus, Vocabulary, build_vocab, encode_corpus, encode_tokens,
    load_corpus, load_embeddings, load_thesaurus,
)
from affect.services.run_config import RunConfig
from affect.services.training import TrainingResult, evaluate, train
from affect.services.training_observers import RunRecorderObserver, TrainingSubject

logger = logging.getLogger(__name__)

LOSS_LOG_FILENAME = 'epochs.tsv'
CONFIG_ECHO_FILENAME = 'config.txt'
VOCAB_FILENAME = 'vocab.txt'


@contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except (AffectError, OSError) as e:
        raise StageError(name, e) from e


@dataclass
class PreparedData:
    lexicon: Optional[SegmentationLexicon]
    embeddings: EmbeddingMatrix
    thesaurus: Optional[Thesaurus]
    train_corpus: Corpus
    test_corpus: Optional[Corpus]
    vocabulary: Vocabulary
    candidates: Thesaurus

    @property
    def corpora(self) -> List[Corpus]:
        return [corpus for corpus in (self.train_corpus, self.test_corpus) if corpus is not None]


@dataclass
class TrainOutcome:
    result: TrainingResult
    report: MetricsReport
    checkpoint_path: Path
    out_dir: Path
    run: object = None


class PipelineService:
    @staticmethod
    def load_lexicon(run_config: RunConfig) -> Optional[SegmentationLexicon]:
        path = run_config.path('lexicon')
        if path is None:
            return None
        with stage('resources'):
            return load_lexicon(path)

    @staticmethod
    def load_corpora(run_config: RunConfig, lexicon: Optional[SegmentationLexicon]):
        with stage('preprocess'):
            train_corpus = load_corpus(run_config.path('corpus.train'), lexicon, split='train')
            test_path = run_config.path('corpus.test')
            test_corpus = load_corpus(test_path, lexicon, split='test') if test_path else None
        if not len(train_corpus):
            raise StageError('preprocess', ContractError("навчальний корпус порожній"))
        return train_corpus, test_corpus

    @staticmethod
    def prepare(run_config: RunConfig) -> PreparedData:
        """Ресурси, корпуси і словник; словник будується по train і test"""
        model = run_config.model
        lexicon = PipelineService.load_lexicon(run_config)
        with stage('resources'):
            embeddings = load_embeddings(run_config.path('embeddings'), model.embed_dim, run_config.train.seed,
                                         model.init_stddev)
            thesaurus = load_thesaurus(run_config.path('thesaurus')) if run_config.path('thesaurus') else None
        train_corpus, test_corpus = PipelineService.load_corpora(run_config, lexicon)

        corpora = [corpus for corpus in (train_corpus, test_corpus) if corpus is not None]
        with stage('vocab'):
            vocabulary = build_vocab(corpora, embeddings, thesaurus, model.dt_k)
            headwords = set(vocabulary.words)
            for corpus in corpora:
                for example in corpus:
                    headwords.update(example.tokens)
            candidates = checkpoints.candidate_table(thesaurus, vocabulary, headwords, model.dt_k)
        return PreparedData(lexicon, embeddings, thesaurus, train_corpus, test_corpus, vocabulary, candidates)

    @staticmethod
    def encode(corpus: Corpus, vocabulary: Vocabulary, candidates: Thesaurus, k: int) -> List[EncodedExample]:
        with stage('vocab'):
            return encode_corpus(corpus, vocabulary, candidates, k)

    @staticmethod
    def train_run(run_config: RunConfig, record: bool = True) -> TrainOutcome:
        """
        Повний прогін: чекпоінт, метрики, таблиця і журнал епох у run_config.out_dir.
        Метрики рахуються на test, якщо його задано, інакше на train.
        """
        from affect.models import TrainingRun

        model_config, train_config = run_config.model, run_config.train
        data = PipelineService.prepare(run_config)
        train_examples = PipelineService.encode(data.train_corpus, data.vocabulary, data.candidates, model_config.dt_k)
        eval_corpus = data.test_corpus if data.test_corpus is not None else data.train_corpus
        eval_examples = PipelineService.encode(eval_corpus, data.vocabulary, data.candidates, model_config.dt_k)

        run = None
        subject = TrainingSubject()
        if record:
            run = TrainingRun.objects.create(mode=model_config.mode, seed=train_config.seed,
                                             config=run_config.echo(), out_dir=str(run_config.out_dir))
            subject.attach(RunRecorderObserver(run))

        try:
            with stage('train'):
                params = ModelParameters.initialize(model_config, data.vocabulary.embedding_rows(data.embeddings),
                                                    train_config.seed)
                result = train(train_examples, params, train_config, subject)
            with stage('evaluate'):
                metrics = evaluate(eval_examples, result.params, train_config.threshold, train_config.workers,
                                   train_config.seed, len(result.epochs))
            out_dir = Path(run_config.out_dir)
            with stage('checkpoint'):
                metadata = {
                    'epochs': len(result.epochs),
                    'evaluated_split': eval_corpus.split,
                    'lexicon': str(run_config.path('lexicon') or ''),
                    'optimizer_steps': result.optimizer_steps,
                    'stopped_early': result.stopped_early,
                }
                checkpoint_path = checkpoints.save_checkpoint(
                    out_dir / checkpoints.CHECKPOINT_FILENAME,
                    Checkpoint(result.params, data.vocabulary, data.candidates, train_config.to_dict(), metadata),
                )
            with stage('report'):
                reporting.report(metrics, out_dir)
                PipelineService.write_loss_log(out_dir / LOSS_LOG_FILENAME, result)
                PipelineService.write_config_echo(out_dir / CONFIG_ECHO_FILENAME, run_config)
        except StageError:
            if run is not None:
                run.status = TrainingRun.STATUS_FAILED
                run.finished_at = timezone.now()
                run.save(update_fields=['status', 'finished_at'])
            raise

        if run is not None:
            run.status = TrainingRun.STATUS_COMPLETED
            run.save(update_fields=['status'])
        return TrainOutcome(result, metrics, checkpoint_path, out_dir, run)

    @staticmethod
    def write_loss_log(path: Path, result: TrainingResult):
        lines = ['epoch\tmean_loss\texamples\tbatches']
        lines += [f'{r.epoch}\t{r.mean_loss!r}\t{r.examples}\t{r.batches}' for r in result.epochs]
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

    @staticmethod
    def write_config_echo(path: Path, run_config: RunConfig):
        lines = [f'{key} = {"none" if value is None else value}' for key, value in run_config.echo().items()]
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

    @staticmethod
    def write_tokenized(path: Path, corpus: Corpus):
        """Той самий формат корпусу, але текст замінено нормалізованими токенами"""
        lines = []
        for example in corpus:
            bits = ' '.join(str(bit) for bit in example.emotions)
            lines.append(f"{example.id}\t{' '.join(example.tokens)}\t{example.sentiment}\t{bits}")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')

    @staticmethod
    def write_vocabulary(path: Path, vocabulary: Vocabulary):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text('\n'.join(vocabulary.words) + '\n', encoding='utf-8')

    # -----------------------
    # Робота з готовим чекпоінтом
    # -----------------------
    @staticmethod
    def load_checkpoint(path) -> Checkpoint:
        with stage('checkpoint'):
            return checkpoints.load_checkpoint(path)

    @staticmethod
    def checkpoint_lexicon(checkpoint: Checkpoint, run_config: Optional[RunConfig] = None):
        """Лексикон з конфігурації, інакше шлях, збережений у чекпоінті (якщо файл ще існує)"""
        if run_config is not None and run_config.path('lexicon') is not None:
            return PipelineService.load_lexicon(run_config)
        stored = checkpoint.metadata.get('lexicon')
        if stored and Path(stored).exists():
            with stage('resources'):
                return load_lexicon(stored)
        return None

    @staticmethod
    def encode_text(text: str, checkpoint: Checkpoint, lexicon: Optional[SegmentationLexicon]) -> EncodedExample:
        with stage('preprocess'):
            tokens = normalize(text, lexicon)
            if not tokens:
                raise ContractError("текст порожній після нормалізації")
            token_ids, candidate_ids = encode_tokens(tokens, checkpoint.vocabulary, checkpoint.thesaurus,
                                                     checkpoint.config.dt_k)
        return EncodedExample('input', token_ids, candidate_ids, 'other', np.zeros(len(EMOTIONS)))

    @staticmethod
    def evaluate_checkpoint(checkpoint: Checkpoint, corpus: Corpus, threshold: float, workers: int = 1,
                            seed: Optional[int] = None) -> MetricsReport:
        examples = PipelineService.encode(corpus, checkpoint.vocabulary, checkpoint.thesaurus, checkpoint.config.dt_k)
        with stage('evaluate'):
            seed = checkpoint.train_config.get('seed', 0) if seed is None else seed
            return evaluate(examples, checkpoint.params, threshold, workers, int(seed),
                            int(checkpoint.metadata.get('epochs', 0)))


def load_reports(paths: Sequence) -> List[MetricsReport]:
    reports = []
    for path in paths:
        with stage('report'):
            reports.append(reporting.load_metrics(path))
    return reports
