from django.conf import settings
from django.core.management.base import CommandError

from affect.management.pipeline_command import EXIT_CHECK_FAILED, PipelineCommand
from affect.services.diagnostics import model_gradcheck
from affect.services.network import MODES
from affect.services.pipeline import stage


class Command(PipelineCommand):
    help = "Finite-difference gradient check of the full model on a tiny synthetic example"

    def add_command_arguments(self, parser):
        parser.add_argument('--modes', help="Режими через кому, напр. S1,M2 (за замовчуванням усі шість)")
        parser.add_argument('--tolerance', type=float, help="Допустима максимальна відносна похибка")
        parser.add_argument('--show', type=int, default=3, help="Скільки найгірших тензорів вивести")

    def run(self, *args, **options):
        run_config = self.load_config(options, required=())
        if options.get('modes'):
            modes = [mode.strip().upper() for mode in options['modes'].split(',') if mode.strip()]
        elif options.get('config') and 'mode' in run_config.explicit_keys:
            modes = [run_config.model.mode]
        else:
            modes = list(MODES)
        unknown = [mode for mode in modes if mode not in MODES]
        if unknown or not modes:
            self.usage_error(f"Невідомі режими: {', '.join(unknown) or '(порожньо)'}")
        tolerance = options.get('tolerance') or getattr(settings, 'AFFECT_GRADCHECK_TOLERANCE', 1e-3)

        failures = []
        for mode in modes:
            with stage('gradcheck'):
                report = model_gradcheck(mode, run_config.train.seed, run_config.model.head_hidden)
            self.stdout.write(f"{mode}: max relative error {report.max_relative_error:.3e}")
            for name, error in report.worst(options.get('show') or 3):
                self.stdout.write(f"  {name}: {error:.3e}")
            failures += [f"{mode}/{name} ({report.per_tensor[name]:.3e})" for name in report.failing(tolerance)]

        if failures:
            raise CommandError(f"Перевірку градієнтів не пройдено (tolerance {tolerance:g}): {', '.join(failures)}",
                               returncode=EXIT_CHECK_FAILED)
        self.stdout.write(self.style.SUCCESS(f"Усі тензори в межах {tolerance:g}"))
