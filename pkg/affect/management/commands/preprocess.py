from affect.management.pipeline_command import PipelineCommand
from affect.services.pipeline import PipelineService, stage
from affect.services.preprocess import normalize


class Command(PipelineCommand):
    help = "Normalize tweets: corpus files from the config into token files, or a single --text"

    def add_command_arguments(self, parser):
        parser.add_argument('--text', help="Нормалізувати один текст і вивести токени")

    def run(self, *args, **options):
        text = options.get('text')
        if text is not None:
            lexicon = None
            if options.get('config'):
                lexicon = PipelineService.load_lexicon(self.load_config(options, required=()))
            with stage('preprocess'):
                tokens = normalize(text, lexicon)
            self.stdout.write(' '.join(tokens))
            return

        run_config = self.load_config(options, required=('corpus.train',))
        lexicon = PipelineService.load_lexicon(run_config)
        train_corpus, test_corpus = PipelineService.load_corpora(run_config, lexicon)
        target = run_config.out_dir / 'preprocessed'
        with stage('preprocess'):
            for corpus in (train_corpus, test_corpus):
                if corpus is None:
                    continue
                PipelineService.write_tokenized(target / f'{corpus.split}.tsv', corpus)
                self.stdout.write(f"{corpus.split}: {len(corpus)} прикладів")
        self.stdout.write(self.style.SUCCESS(f"Токени записано в {target}"))
