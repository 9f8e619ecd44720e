from pathlib import Path

from affect.management.pipeline_command import PipelineCommand
from affect.services import checkpoint as checkpoints
from affect.services import reporting
from affect.services.pipeline import PipelineService, stage
from affect.services.resources import load_corpus


class Command(PipelineCommand):
    help = "Evaluate a checkpoint on a corpus and write the metrics file and report table"

    def add_command_arguments(self, parser):
        parser.add_argument('--checkpoint', help="Чекпоінт (за замовчуванням <out_dir>/model.ckpt)")
        parser.add_argument('--corpus', help="Корпус для оцінювання (за замовчуванням corpus.test, інакше corpus.train)")

    def run(self, *args, **options):
        run_config = self.load_config(options, required=())
        checkpoint_path = Path(options.get('checkpoint') or run_config.out_dir / checkpoints.CHECKPOINT_FILENAME)
        checkpoint = PipelineService.load_checkpoint(checkpoint_path)

        corpus_path = options.get('corpus') or run_config.path('corpus.test') or run_config.path('corpus.train')
        if corpus_path is None:
            self.usage_error("Не задано корпус: --corpus або corpus.test у конфігурації")
        if not Path(corpus_path).exists():
            self.usage_error(f"Корпус не знайдено: {corpus_path}")

        lexicon = PipelineService.checkpoint_lexicon(checkpoint, run_config)
        with stage('preprocess'):
            corpus = load_corpus(corpus_path, lexicon)

        threshold = run_config.train.threshold if 'threshold' in run_config.explicit_keys \
            else checkpoint.train_config.get('threshold', run_config.train.threshold)
        metrics = PipelineService.evaluate_checkpoint(checkpoint, corpus, threshold, run_config.train.workers)
        with stage('report'):
            table = reporting.report(metrics, run_config.out_dir)
        self.stdout.write(table)
        self.stdout.write(self.style.SUCCESS(f"Метрики записано в {run_config.out_dir}"))
