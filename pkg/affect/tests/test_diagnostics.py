from django.test import SimpleTestCase

from affect.services.diagnostics import model_gradcheck
from affect.services.network import MODES


class ModelGradcheckTests(SimpleTestCase):
    def test_every_mode_within_tolerance(self):
        for mode in MODES:
            report = model_gradcheck(mode, seed=5)
            self.assertEqual(report.failing(1e-3), [], mode)

    def test_hidden_head_layer(self):
        report = model_gradcheck('M2', seed=5, head_hidden=3)
        self.assertIn('head.emotion.V_hidden', report.per_tensor)
        self.assertLess(report.max_relative_error, 1e-3)
