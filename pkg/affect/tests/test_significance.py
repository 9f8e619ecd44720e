import math

from django.test import SimpleTestCase

from affect.exceptions import ContractError
from affect.services.significance import pair_by_seed, significance_test


class SignificanceTests(SimpleTestCase):
    def test_textbook_example(self):
        result = significance_test(list(zip([2, 4, 6, 8, 10], [1, 2, 3, 4, 5])), 'sentiment.macro_f1')
        self.assertAlmostEqual(result.t_statistic, 3 * math.sqrt(2), places=9)
        self.assertAlmostEqual(result.p_value, 0.0132356, delta=1e-6)
        self.assertAlmostEqual(result.mean_difference, 3.0)
        self.assertTrue(result.is_significant(0.05))
        self.assertFalse(result.is_significant(0.01))
        self.assertFalse(result.degenerate)

    def test_sign_follows_order(self):
        result = significance_test([(1.0, 2.0), (3.0, 5.0), (2.0, 2.5)])
        self.assertLess(result.t_statistic, 0.0)

    def test_identical_runs(self):
        result = significance_test([(0.7, 0.7), (0.8, 0.8), (0.75, 0.75)])
        self.assertEqual((result.t_statistic, result.p_value), (0.0, 1.0))
        self.assertTrue(result.degenerate)

    def test_constant_difference(self):
        result = significance_test([(0.5, 0.25), (0.75, 0.5), (1.0, 0.75)])
        self.assertEqual(result.t_statistic, math.inf)
        self.assertEqual(result.p_value, 0.0)
        self.assertTrue(result.degenerate)

    def test_needs_two_pairs(self):
        with self.assertRaises(ContractError):
            significance_test([(0.5, 0.4)])

    def test_pair_by_seed(self):
        pairs = pair_by_seed({3: 0.3, 1: 0.1, 7: 0.7}, {1: 0.2, 3: 0.4, 9: 0.9})
        self.assertEqual(pairs, [(0.1, 0.2), (0.3, 0.4)])
