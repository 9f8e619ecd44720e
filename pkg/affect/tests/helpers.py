from pathlib import Path

FIXTURE_DIR = Path(__file__).resolve().parent.parent / 'data' / 'fixture'
FIXTURE_CONFIG = FIXTURE_DIR / 'fixture.cfg'


def write_file(directory, name: str, text: str) -> Path:
    path = Path(directory) / name
    path.write_text(text, encoding='utf-8')
    return path


def write_config(directory, **values) -> Path:
    """Конфігурація з абсолютними шляхами до фікстур; values перевизначають параметри малої моделі"""
    entries = {
        'corpus.train': FIXTURE_DIR / 'train.tsv',
        'corpus.test': FIXTURE_DIR / 'test.tsv',
        'embeddings': FIXTURE_DIR / 'embeddings.txt',
        'thesaurus': FIXTURE_DIR / 'thesaurus.tsv',
        'lexicon': FIXTURE_DIR / 'lexicon.tsv',
        'mode': 'M2',
        'embed_dim': 16,
        'lstm_hidden': 4,
        'context_dim': 4,
        'dt_k': 3,
        'dropout': 0.0,
        'batch_size': 16,
        'lr': 0.01,
        'epochs': 2,
        'seed': 3,
    }
    entries.update({key.replace('__', '.'): value for key, value in values.items()})
    text = ''.join(f'{key} = {value}\n' for key, value in entries.items())
    return write_file(directory, 'run.cfg', text)
