"""
Ієрархія помилок застосунку.
Management-команди перетворюють їх на CommandError з відповідним кодом виходу.
"""


class AffectError(Exception):
    """Базова помилка для всіх сервісів affect"""


class ShapeError(AffectError, ValueError):
    """Невідповідність форм тензорів"""


class ContractError(AffectError):
    """Порушено передумову операції (порожня послідовність, нескалярний loss тощо)"""


class InvalidHyperparameterError(AffectError, ValueError):
    """Гіперпараметр поза допустимим діапазоном"""


class ConfigError(AffectError):
    """Помилка у файлі конфігурації запуску"""


class ResourceError(AffectError):
    """Зовнішній ресурс (ембедінги, тезаурус, корпус) недоступний або порожній"""


class ParseError(ResourceError):
    """Рядок ресурсу не вдалося розібрати"""

    def __init__(self, message, path=None, line_number=None):
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}:"
        if line_number is not None:
            location = f"{location}{line_number}: "
        elif location:
            location = f"{location} "
        super().__init__(f"{location}{message}")


class CorpusIntegrityError(ResourceError):
    """Корпус містить дублікати id або інші порушення цілісності"""


class CheckpointError(AffectError):
    """Файл чекпоінта пошкоджений або несумісний"""


class StageError(AffectError):
    """Помилка етапу конвеєра; повідомлення має вигляд `[stage] причина`"""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
