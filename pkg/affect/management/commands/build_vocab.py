from affect.management.pipeline_command import PipelineCommand
from affect.services.pipeline import VOCAB_FILENAME, PipelineService, stage


class Command(PipelineCommand):
    help = "Build the model vocabulary from the corpora, embeddings and thesaurus"
    required_paths = ('corpus.train', 'embeddings')

    def run(self, *args, **options):
        run_config = self.load_config(options)
        data = PipelineService.prepare(run_config)

        tokens = covered = with_candidates = 0
        for corpus in data.corpora:
            for example in corpus:
                for token in example.tokens:
                    tokens += 1
                    covered += token in data.vocabulary
                    with_candidates += bool(data.candidates.expand(token, run_config.model.dt_k))

        path = run_config.out_dir / VOCAB_FILENAME
        with stage('vocab'):
            PipelineService.write_vocabulary(path, data.vocabulary)
        self.stdout.write(f"Словник: {len(data.vocabulary)} слів")
        self.stdout.write(f"Покриття токенів ембедінгами: {covered}/{tokens}")
        self.stdout.write(f"Токенів з кандидатами DT: {with_candidates}/{tokens}")
        self.stdout.write(self.style.SUCCESS(f"Словник записано в {path}"))
