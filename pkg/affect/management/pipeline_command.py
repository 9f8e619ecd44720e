from django.core.management.base import BaseCommand, CommandError

from affect.exceptions import AffectError, CheckpointError, ConfigError, StageError
from affect.services.run_config import RunConfig, RunConfigLoader

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


class PipelineCommand(BaseCommand):
    """
    Спільна основа команд: глобальні опції --config/--seed/--out і
    перетворення помилок сервісів на коди виходу
    (2 - використання/конфігурація, 1 - збій етапу або перевірки).
    """
    required_paths = ()

    def add_arguments(self, parser):
        parser.add_argument('--config', help="Файл конфігурації `key = value`")
        parser.add_argument('--seed', type=int, help="Перевизначає seed з конфігурації")
        parser.add_argument('--out', help="Каталог для артефактів (перевизначає out_dir)")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def load_config(self, options, required=None) -> RunConfig:
        overrides = {'seed': options.get('seed'), 'out_dir': options.get('out')}
        required = self.required_paths if required is None else required
        try:
            return RunConfigLoader.load(options.get('config'), overrides, required)
        except ConfigError as e:
            raise CommandError(f"[config] {e}", returncode=EXIT_USAGE)

    def usage_error(self, message: str):
        raise CommandError(message, returncode=EXIT_USAGE)

    def handle(self, *args, **options):
        try:
            return self.run(*args, **options)
        except StageError as e:
            code = EXIT_USAGE if isinstance(e.cause, (ConfigError, CheckpointError)) else EXIT_CHECK_FAILED
            raise CommandError(str(e), returncode=code)
        except (ConfigError, CheckpointError) as e:
            raise CommandError(str(e), returncode=EXIT_USAGE)
        except AffectError as e:
            raise CommandError(str(e), returncode=EXIT_CHECK_FAILED)

    def run(self, *args, **options):
        raise NotImplementedError
