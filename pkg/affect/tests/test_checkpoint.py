import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from affect.exceptions import CheckpointError
from affect.services import checkpoint as checkpoints
from affect.services.checkpoint import Checkpoint, candidate_table, check_compatible
from affect.services.diagnostics import TINY_VOCAB, synthetic_example, tiny_config
from affect.services.ndcore import truncated_normal
from affect.services.network import ModelParameters, forward
from affect.services.resources import SPECIAL_TOKENS, Thesaurus, Vocabulary


def sample_checkpoint(mode='M2'):
    config = tiny_config(mode)
    rows = truncated_normal((TINY_VOCAB, config.embed_dim), 0.5, np.random.default_rng(1))
    params = ModelParameters.initialize(config, rows, 1)
    vocabulary = Vocabulary(SPECIAL_TOKENS + ('good', 'great', 'day'))
    thesaurus = Thesaurus({'good': ('great',)})
    return Checkpoint(params, vocabulary, thesaurus, {'seed': 1, 'threshold': 0.5}, {'epochs': 3})


class CheckpointTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / checkpoints.CHECKPOINT_FILENAME

    def tearDown(self):
        self.tmp.cleanup()

    def test_logits_identical_after_reload(self):
        original = sample_checkpoint()
        checkpoints.save_checkpoint(self.path, original)
        loaded = checkpoints.load_checkpoint(self.path)

        self.assertEqual(loaded.config, original.config)
        self.assertEqual(loaded.vocabulary.words, original.vocabulary.words)
        self.assertEqual(loaded.thesaurus.expand('good'), ['great'])
        self.assertEqual(loaded.metadata, {'epochs': 3})
        before = forward(synthetic_example(), original.params).logits
        after = forward(synthetic_example(), loaded.params).logits
        for task in before:
            np.testing.assert_array_equal(before[task].data, after[task].data)

    def test_same_input_same_bytes(self):
        other = Path(self.tmp.name) / 'second.ckpt'
        checkpoints.save_checkpoint(self.path, sample_checkpoint())
        checkpoints.save_checkpoint(other, sample_checkpoint())
        self.assertEqual(self.path.read_bytes(), other.read_bytes())

    def test_truncated_payload(self):
        checkpoints.save_checkpoint(self.path, sample_checkpoint())
        self.path.write_bytes(self.path.read_bytes()[:-8])
        with self.assertRaises(CheckpointError):
            checkpoints.load_checkpoint(self.path)

    def test_wrong_magic(self):
        checkpoints.save_checkpoint(self.path, sample_checkpoint())
        rest = self.path.read_bytes().partition(b'\n')[2]
        self.path.write_bytes(b'SOMETHING-ELSE 1\n' + rest)
        with self.assertRaises(CheckpointError):
            checkpoints.load_checkpoint(self.path)

    def test_unsupported_version(self):
        checkpoints.save_checkpoint(self.path, sample_checkpoint())
        data = self.path.read_bytes().replace(b'AFFECT-CHECKPOINT 1\n', b'AFFECT-CHECKPOINT 9\n', 1)
        self.path.write_bytes(data)
        with self.assertRaisesMessage(CheckpointError, '9'):
            checkpoints.load_checkpoint(self.path)

    def test_broken_header(self):
        self.path.write_bytes(b'AFFECT-CHECKPOINT 1\n{not json\n')
        with self.assertRaises(CheckpointError):
            checkpoints.load_checkpoint(self.path)

    def test_missing_file(self):
        with self.assertRaises(CheckpointError):
            checkpoints.load_checkpoint(self.path)

    def test_config_mismatch(self):
        ckpt = sample_checkpoint()
        check_compatible(ckpt, {'mode': 'M2', 'embed_dim': 4})
        with self.assertRaisesMessage(CheckpointError, 'mode'):
            check_compatible(ckpt, {'mode': 'S1'})


class CandidateTableTests(SimpleTestCase):
    def test_restricted_to_vocabulary(self):
        thesaurus = Thesaurus({'good': ('great', 'nice', 'fine'), 'day': ('night',)})
        vocabulary = Vocabulary(SPECIAL_TOKENS + ('good', 'great', 'fine', 'day'))
        table = candidate_table(thesaurus, vocabulary, ['good', 'day'], 2)
        self.assertEqual(table.expand('good', 4), ['great'])
        self.assertNotIn('day', table)

    def test_without_thesaurus(self):
        self.assertEqual(len(candidate_table(None, Vocabulary(SPECIAL_TOKENS), ['good'], 4)), 0)
