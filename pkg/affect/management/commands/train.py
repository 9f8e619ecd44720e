from affect.management.pipeline_command import PipelineCommand
from affect.services.pipeline import PipelineService
from affect.services.reporting import render_table


class Command(PipelineCommand):
    help = "Train one model: resources -> preprocess -> train -> evaluate; writes checkpoint, metrics and epoch log"
    required_paths = ('corpus.train', 'embeddings')

    def add_command_arguments(self, parser):
        parser.add_argument('--no-record', action='store_true', help="Не зберігати прогін у БД")

    def run(self, *args, **options):
        run_config = self.load_config(options)
        self.stdout.write(f"Навчання {run_config.model.mode}, seed={run_config.train.seed}, "
                          f"epochs={run_config.train.epochs}")
        outcome = PipelineService.train_run(run_config, record=not options.get('no_record'))

        self.stdout.write(render_table(outcome.report))
        self.stdout.write(self.style.SUCCESS(
            f"Чекпоінт: {outcome.checkpoint_path}; остання втрата {outcome.result.loss_log[-1]:.6f}"
        ))
