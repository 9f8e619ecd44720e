import math

import numpy as np
from django.test import SimpleTestCase

from affect.exceptions import ContractError, InvalidHyperparameterError, ShapeError
from affect.services import ndcore
from affect.services.ndcore import AdamState, ComputationTape, Tensor


class TensorTests(SimpleTestCase):
    def test_zero_extent_rejected(self):
        with self.assertRaises(ShapeError):
            Tensor(np.zeros((0, 3)))

    def test_data_is_read_only_copy(self):
        source = np.array([1.0, 2.0])
        tensor = Tensor(source)
        source[0] = 5.0
        self.assertEqual(tensor.data[0], 1.0)
        with self.assertRaises(ValueError):
            tensor.data[0] = 3.0


class MatmulTests(SimpleTestCase):
    def test_identity(self):
        result = ndcore.matmul(Tensor(np.eye(2)), Tensor([[1, 2], [3, 4]]))
        np.testing.assert_array_equal(result.data, [[1, 2], [3, 4]])

    def test_hand_arithmetic(self):
        result = ndcore.matmul(Tensor([[1, 2]]), Tensor([[3], [4]]))
        np.testing.assert_array_equal(result.data, [[11]])

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(3)
        # цілі значення: сума точна в float64 незалежно від порядку
        a = rng.integers(-9, 10, size=(3, 4)).astype(float)
        b = rng.integers(-9, 10, size=(4, 2)).astype(float)
        expected = np.zeros((3, 2))
        for i in range(3):
            for j in range(2):
                for k in range(4):
                    expected[i, j] += a[i, k] * b[k, j]
        np.testing.assert_array_equal(ndcore.matmul(Tensor(a), Tensor(b)).data, expected)

    def test_mismatch_names_both_shapes(self):
        with self.assertRaisesMessage(ShapeError, '(2, 3)'):
            ndcore.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class SoftmaxTests(SimpleTestCase):
    def test_symmetric(self):
        np.testing.assert_array_equal(ndcore.softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])

    def test_single_element(self):
        for value in (-1e6, 0.0, 3.7, 1e6):
            np.testing.assert_array_equal(ndcore.softmax(Tensor([value])).data, [1.0])

    def test_large_scores_do_not_overflow(self):
        out = ndcore.softmax(Tensor([1000.0, 1000.0, 999.0])).data
        self.assertTrue(np.isfinite(out).all())
        self.assertAlmostEqual(out.sum(), 1.0, delta=1e-12)
        e = math.exp(-1.0)
        np.testing.assert_allclose(out, [1 / (2 + e), 1 / (2 + e), e / (2 + e)], rtol=1e-12)

    def test_random_vectors_sum_to_one(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            out = ndcore.softmax(Tensor(rng.normal(scale=20.0, size=rng.integers(1, 12)))).data
            self.assertAlmostEqual(out.sum(), 1.0, delta=1e-12)
            self.assertTrue(((out > 0.0) & (out <= 1.0)).all())

    def test_matrix_rejected(self):
        with self.assertRaises(ShapeError):
            ndcore.softmax(Tensor(np.ones((2, 2))))


class SigmoidXentTests(SimpleTestCase):
    def test_zero_logit(self):
        self.assertAlmostEqual(ndcore.sigmoid_xent(Tensor([0.0]), [1.0]).item(), math.log(2.0), places=12)

    def test_saturated_correct(self):
        self.assertLess(ndcore.sigmoid_xent(Tensor([50.0]), [1.0]).item(), 1e-9)

    def test_direct_formula(self):
        sigma = lambda z: 1.0 / (1.0 + math.exp(-z))
        expected = -(math.log(sigma(2.0)) + math.log(1.0 - sigma(-1.0))) / 2.0
        self.assertAlmostEqual(ndcore.sigmoid_xent(Tensor([2.0, -1.0]), [1.0, 0.0]).item(), expected, places=12)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            ndcore.sigmoid_xent(Tensor([0.0, 1.0]), [1.0])


class BackwardTests(SimpleTestCase):
    def test_sum_gives_ones(self):
        with ComputationTape() as tape:
            p = tape.watch('p', Tensor(np.arange(6.0).reshape(2, 3)))
            loss = ndcore.total(p)
        np.testing.assert_array_equal(ndcore.backward(tape, loss)['p'], np.ones((2, 3)))

    def test_unused_parameter_gets_zero_gradient(self):
        with ComputationTape() as tape:
            used = tape.watch('used', Tensor([1.0, 2.0]))
            tape.watch('unused', Tensor([[3.0]]))
            loss = ndcore.total(ndcore.mul(used, used))
        grads = ndcore.backward(tape, loss)
        np.testing.assert_array_equal(grads['used'], [2.0, 4.0])
        np.testing.assert_array_equal(grads['unused'], [[0.0]])

    def test_non_scalar_loss(self):
        with ComputationTape() as tape:
            p = tape.watch('p', Tensor([1.0, 2.0]))
            out = ndcore.tanh(p)
        with self.assertRaises(ContractError):
            ndcore.backward(tape, out)

    def test_entries_in_topological_order(self):
        with ComputationTape() as tape:
            p = tape.watch('p', Tensor([0.5, -0.5]))
            ndcore.total(ndcore.sigmoid(ndcore.tanh(p)))
        for entry in tape.entries:
            self.assertTrue(all(node is None or node < entry.output for node in entry.inputs))

    def test_suspended_tape_records_nothing(self):
        with ComputationTape() as tape:
            p = tape.watch('p', Tensor([1.0]))
            with ndcore.suspended_tape():
                ndcore.tanh(p)
        self.assertEqual(len(tape), 0)


class AdamTests(SimpleTestCase):
    def test_zero_gradient_is_identity(self):
        params = {'w': Tensor([[1.0, -2.0]]), 'b': Tensor([0.5])}
        grads = {'w': np.zeros((1, 2)), 'b': np.zeros(1)}
        updated, state = ndcore.adam_step(params, grads, AdamState())
        np.testing.assert_array_equal(updated['w'].data, params['w'].data)
        np.testing.assert_array_equal(updated['b'].data, params['b'].data)
        self.assertEqual(state.t, 1)

    def test_first_step_moves_by_lr(self):
        updated, state = ndcore.adam_step({'x': Tensor([1.0])}, {'x': np.array([1.0])}, AdamState(lr=0.001))
        self.assertAlmostEqual(updated['x'].item(), 0.999, places=9)
        self.assertEqual(state.m['x'].shape, (1,))

    def test_descends_convex_quadratic(self):
        params = {'x': Tensor([3.0])}
        state = AdamState(lr=0.05)
        values = []
        for _ in range(40):
            x = params['x'].data
            values.append(float(x[0] ** 2))
            params, state = ndcore.adam_step(params, {'x': 2.0 * x}, state)
        self.assertTrue(all(b < a for a, b in zip(values, values[1:])))
        self.assertEqual(state.t, 40)

    def test_gradient_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            ndcore.adam_step({'x': Tensor([1.0, 2.0])}, {'x': np.ones(3)}, AdamState())

    def test_invalid_hyperparameters(self):
        with self.assertRaises(InvalidHyperparameterError):
            AdamState(beta1=1.0)
        with self.assertRaises(InvalidHyperparameterError):
            AdamState(lr=-0.1)


class DropoutTests(SimpleTestCase):
    def test_zero_rate_is_all_ones(self):
        np.testing.assert_array_equal(ndcore.dropout_mask((4, 3), 0.0, rng=1).data, np.ones((4, 3)))

    def test_eval_mode_is_all_ones(self):
        np.testing.assert_array_equal(ndcore.dropout_mask((5,), 0.6, rng=1, train_mode=False).data, np.ones(5))

    def test_empirical_rate_and_scaling(self):
        mask = ndcore.dropout_mask((10_000,), 0.6, rng=42).data
        self.assertAlmostEqual(float((mask == 0.0).mean()), 0.6, delta=0.02)
        np.testing.assert_allclose(np.unique(mask), [0.0, 1.0 / 0.4])

    def test_same_seed_same_mask(self):
        first = ndcore.dropout_mask((50,), 0.5, rng=9).data
        second = ndcore.dropout_mask((50,), 0.5, rng=9).data
        np.testing.assert_array_equal(first, second)

    def test_rate_out_of_range(self):
        for rate in (1.0, 1.5, -0.1):
            with self.assertRaises(InvalidHyperparameterError):
                ndcore.dropout_mask((3,), rate)


class RandomnessTests(SimpleTestCase):
    def test_truncated_normal_within_cutoff(self):
        values = ndcore.truncated_normal((2000,), 0.1, np.random.default_rng(0))
        self.assertLessEqual(np.abs(values).max(), 0.2)

    def test_stage_generators_are_independent_and_reproducible(self):
        first = ndcore.stage_rng(5, 'init').random(4)
        np.testing.assert_array_equal(first, ndcore.stage_rng(5, 'init').random(4))
        self.assertFalse(np.array_equal(first, ndcore.stage_rng(5, 'shuffle').random(4)))


class GradCheckTests(SimpleTestCase):
    def test_square(self):
        report = ndcore.grad_check(lambda p: ndcore.total(ndcore.mul(p['x'], p['x'])), {'x': np.array([3.0])})
        self.assertLess(report.max_relative_error, 1e-9)

    def test_constant_function(self):
        report = ndcore.grad_check(lambda p: Tensor(1.0), {'x': np.array([1.0, 2.0])})
        self.assertEqual(report.per_tensor['x'], 0.0)

    def test_one_layer_model(self):
        rng = np.random.default_rng(2)
        inputs = Tensor(rng.normal(size=(3, 4)))

        def loss(p):
            hidden = ndcore.tanh(ndcore.add(ndcore.matmul(inputs, p['W']), p['b']))
            weights = ndcore.softmax(ndcore.matmul(hidden, p['u']))
            pooled = ndcore.matmul(weights, hidden)
            logits = ndcore.concat([ndcore.relu(pooled), ndcore.sigmoid(ndcore.take(hidden, 1))])
            return ndcore.sigmoid_xent(logits, [1.0, 0.0, 1.0, 0.0])

        report = ndcore.grad_check(loss, {'W': rng.normal(size=(4, 2)), 'b': rng.normal(size=2),
                                          'u': rng.normal(size=2)})
        self.assertLess(report.max_relative_error, 1e-5)

    def test_gather_rows_scatters_repeated_ids(self):
        def loss(p):
            rows = ndcore.gather_rows(p['E'], [2, 0, 2])
            return ndcore.total(ndcore.mul(rows, rows))

        report = ndcore.grad_check(loss, {'E': np.arange(12.0).reshape(4, 3) / 10.0})
        self.assertLess(report.max_relative_error, 1e-6)

    def test_corrupted_rule_is_detected(self):
        def wrong(grad, ctx):
            return (grad * ctx.output,)

        with ndcore.patched_backward('tanh', wrong):
            report = ndcore.grad_check(lambda p: ndcore.total(ndcore.tanh(p['x'])), {'x': np.array([0.3, -0.7])})
        self.assertGreater(report.max_relative_error, 1e-3)
        self.assertEqual(report.failing(1e-3), ['x'])
