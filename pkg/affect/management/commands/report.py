from pathlib import Path

from affect.management.pipeline_command import PipelineCommand
from affect.services.pipeline import load_reports, stage
from affect.services.reporting import render_comparison_table, render_table


class Command(PipelineCommand):
    help = "Render report tables from metrics files; several runs give a mode-by-task comparison"

    def add_command_arguments(self, parser):
        parser.add_argument('runs', nargs='*', help="Каталоги прогонів або файли metrics.txt")

    def run(self, *args, **options):
        run_config = self.load_config(options, required=())
        runs = options.get('runs') or [run_config.out_dir]
        reports = load_reports(runs)

        if len(reports) == 1:
            table = render_table(reports[0])
        else:
            table = render_comparison_table(reports)
        self.stdout.write(table)

        if options.get('out'):
            target = Path(options['out']) / 'comparison.txt'
            with stage('report'):
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(table, encoding='utf-8')
            self.stdout.write(self.style.SUCCESS(f"Таблицю записано в {target}"))
