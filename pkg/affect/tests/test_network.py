import numpy as np
from django.test import SimpleTestCase
from scipy.special import expit

from affect.exceptions import ContractError, InvalidHyperparameterError, ShapeError
from affect.services import ndcore
from affect.services.diagnostics import TINY_VOCAB, synthetic_example, tiny_config
from affect.services.ndcore import Tensor
from affect.services.network import (
    EMBEDDINGS, ModelConfig, ModelParameters, bilstm_forward, forward, predict_labels, primary_attention,
    secondary_attention, task_heads,
)
from affect.services.resources import EMOTIONS, EncodedExample


def make_params(mode='M2', seed=3, head_hidden=0):
    config = tiny_config(mode, head_hidden)
    rows = ndcore.truncated_normal((TINY_VOCAB, config.embed_dim), 0.5, np.random.default_rng(seed))
    return ModelParameters.initialize(config, rows, seed)


def naive_lstm(inputs, W, U, b, reverse=False):
    H = U.shape[0]
    h, c = np.zeros(H), np.zeros(H)
    outputs = [None] * len(inputs)
    steps = range(len(inputs) - 1, -1, -1) if reverse else range(len(inputs))
    for t in steps:
        z = np.zeros(4 * H)
        for j in range(4 * H):
            z[j] = b[j] + sum(inputs[t][k] * W[k, j] for k in range(W.shape[0])) + sum(h[k] * U[k, j] for k in range(H))
        i, f, o = expit(z[:H]), expit(z[H:2 * H]), expit(z[2 * H:3 * H])
        g = np.tanh(z[3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        outputs[t] = h
    return outputs


def naive_softmax(scores):
    scores = np.asarray(scores, dtype=float)
    exp = np.exp(scores - scores.max())
    return exp / exp.sum()


class ModelConfigTests(SimpleTestCase):
    def test_modes(self):
        self.assertEqual(ModelConfig(mode='S1').tasks, ('sentiment',))
        self.assertEqual(ModelConfig(mode='E2').tasks, ('emotion',))
        self.assertEqual(ModelConfig(mode='M1').tasks, ('sentiment', 'emotion'))
        self.assertTrue(ModelConfig(mode='M2').primary_attention_enabled)
        self.assertFalse(ModelConfig(mode='S1').primary_attention_enabled)

    def test_sentence_dim(self):
        self.assertEqual(ModelConfig(mode='M2', embed_dim=300, lstm_hidden=300).sentence_dim, 900)
        self.assertEqual(ModelConfig(mode='M1', embed_dim=300, lstm_hidden=300).sentence_dim, 600)

    def test_invalid_values(self):
        with self.assertRaises(InvalidHyperparameterError):
            ModelConfig(mode='X3')
        with self.assertRaises(InvalidHyperparameterError):
            ModelConfig(dropout_rate=1.0)
        with self.assertRaises(InvalidHyperparameterError):
            ModelConfig(lstm_hidden=0)


class ModelParametersTests(SimpleTestCase):
    def test_only_active_tasks_have_parameters(self):
        names = make_params('S1').names
        self.assertIn('head.sentiment.V', names)
        self.assertFalse(any('emotion' in name for name in names))
        self.assertFalse(any(name.startswith('primary.') for name in names))
        self.assertIn('primary.emotion.W_w', make_params('E2').names)

    def test_initialization_is_deterministic(self):
        first, second = make_params(seed=4), make_params(seed=4)
        for name in first.names:
            np.testing.assert_array_equal(first[name].data, second[name].data)
        self.assertFalse(np.array_equal(first['lstm.forward.W'].data, make_params(seed=5)['lstm.forward.W'].data))

    def test_wrong_shape_rejected(self):
        params = make_params()
        with self.assertRaises(ShapeError):
            params.replace({'head.sentiment.c': Tensor(np.zeros(3))})

    def test_frozen_embeddings_not_trainable(self):
        config = ModelConfig(mode='S1', embed_dim=4, lstm_hidden=3, context_dim=3, dt_k=2, dropout_rate=0.0)
        params = ModelParameters.initialize(config, np.ones((6, 4)), 0)
        self.assertNotIn(EMBEDDINGS, params.trainable())
        self.assertIn(EMBEDDINGS, params.tensors)


class LayerOracleTests(SimpleTestCase):
    def setUp(self):
        self.params = make_params('M2', seed=8)
        self.inputs = self.params[EMBEDDINGS].data[[5, 6, 7]]

    def test_bilstm_matches_naive_loops(self):
        hidden = bilstm_forward(Tensor(self.inputs), self.params)
        p = {name: self.params[name].data for name in self.params.names}
        forward_states = naive_lstm(self.inputs, p['lstm.forward.W'], p['lstm.forward.U'], p['lstm.forward.b'])
        backward_states = naive_lstm(self.inputs, p['lstm.backward.W'], p['lstm.backward.U'], p['lstm.backward.b'],
                                     reverse=True)
        for t, h in enumerate(hidden):
            expected = np.concatenate([forward_states[t], backward_states[t]])
            np.testing.assert_allclose(h.data, expected, rtol=0, atol=1e-12)

    def test_primary_attention_matches_formula(self):
        h_t = Tensor(np.linspace(-1.0, 1.0, 6))
        candidates = self.params[EMBEDDINGS].data[[1, 2, 3]]
        augmented, alpha, memory = primary_attention(h_t, Tensor(candidates), 'sentiment', self.params)

        W, b = self.params['primary.sentiment.W_w'].data, self.params['primary.sentiment.b_w'].data
        query = h_t.data @ W + b
        expected_alpha = naive_softmax([candidates[i] @ query for i in range(3)])
        expected_memory = sum(expected_alpha[i] * candidates[i] for i in range(3))
        np.testing.assert_allclose(alpha.data, expected_alpha, rtol=0, atol=1e-12)
        np.testing.assert_allclose(memory.data, expected_memory, rtol=0, atol=1e-12)
        np.testing.assert_allclose(augmented.data, np.concatenate([expected_memory, h_t.data]), rtol=0, atol=1e-12)

    def test_single_candidate_gets_all_weight(self):
        candidate = self.params[EMBEDDINGS].data[[4]]
        _, alpha, memory = primary_attention(Tensor(np.ones(6)), Tensor(candidate), 'emotion', self.params)
        np.testing.assert_array_equal(alpha.data, [1.0])
        np.testing.assert_allclose(memory.data, candidate[0], rtol=0, atol=1e-15)

    def test_identical_candidates_are_uniform(self):
        candidates = np.tile(self.params[EMBEDDINGS].data[2], (3, 1))
        _, alpha, _ = primary_attention(Tensor(np.ones(6)), Tensor(candidates), 'emotion', self.params)
        np.testing.assert_allclose(alpha.data, [1 / 3] * 3, rtol=0, atol=1e-12)

    def test_no_candidates_gives_zero_memory(self):
        h_t = Tensor(np.arange(6.0))
        augmented, alpha, memory = primary_attention(h_t, None, 'sentiment', self.params)
        self.assertIsNone(alpha)
        np.testing.assert_array_equal(memory.data, np.zeros(4))
        np.testing.assert_array_equal(augmented.data, np.concatenate([np.zeros(4), np.arange(6.0)]))

    def test_secondary_attention_matches_formula(self):
        rng = np.random.default_rng(1)
        states = [rng.normal(size=10) for _ in range(4)]
        sentence, alpha = secondary_attention([Tensor(s) for s in states], 'emotion', self.params)

        W, b, u = (self.params[f'secondary.emotion.{name}'].data for name in ('W_s', 'b_s', 'u'))
        expected_alpha = naive_softmax([u @ np.tanh(s @ W + b) for s in states])
        expected = sum(a * s for a, s in zip(expected_alpha, states))
        np.testing.assert_allclose(alpha.data, expected_alpha, rtol=0, atol=1e-12)
        np.testing.assert_allclose(sentence.data, expected, rtol=0, atol=1e-12)

    def test_secondary_attention_needs_states(self):
        with self.assertRaises(ContractError):
            secondary_attention([], 'emotion', self.params)

    def test_secondary_attention_is_permutation_equivariant(self):
        rng = np.random.default_rng(4)
        states = [rng.normal(size=10) for _ in range(5)]
        order = [3, 0, 4, 1, 2]
        sentence, alpha = secondary_attention([Tensor(s) for s in states], 'sentiment', self.params)
        permuted_sentence, permuted_alpha = secondary_attention([Tensor(states[i]) for i in order], 'sentiment',
                                                                self.params)
        np.testing.assert_allclose(permuted_alpha.data, alpha.data[order], rtol=0, atol=1e-12)
        np.testing.assert_allclose(permuted_sentence.data, sentence.data, rtol=0, atol=1e-12)

    def test_secondary_attention_identical_states_are_uniform(self):
        state = np.linspace(-2.0, 2.0, 10)
        sentence, alpha = secondary_attention([Tensor(state), Tensor(state)], 'emotion', self.params)
        np.testing.assert_allclose(alpha.data, [0.5, 0.5], rtol=0, atol=1e-15)
        np.testing.assert_allclose(sentence.data, state, rtol=0, atol=1e-12)

    def test_secondary_attention_single_state(self):
        state = np.arange(10.0) / 7.0
        sentence, alpha = secondary_attention([Tensor(state)], 'emotion', self.params)
        np.testing.assert_array_equal(alpha.data, [1.0])
        np.testing.assert_allclose(sentence.data, state, rtol=0, atol=1e-15)


class TaskHeadsTests(SimpleTestCase):
    @staticmethod
    def naive_affine(vector, V, c):
        return np.array([c[j] + sum(vector[k] * V[k, j] for k in range(len(vector))) for j in range(V.shape[1])])

    def test_linear_heads_match_naive_loops(self):
        params = make_params('M2', seed=6)
        rng = np.random.default_rng(9)
        vectors = {'sentiment': rng.normal(size=10), 'emotion': rng.normal(size=10)}
        logits = task_heads({task: Tensor(v) for task, v in vectors.items()}, params)
        for task, vector in vectors.items():
            expected = self.naive_affine(vector, params[f'head.{task}.V'].data, params[f'head.{task}.c'].data)
            np.testing.assert_allclose(logits[task].data, expected, rtol=0, atol=1e-12)
        self.assertEqual(logits['sentiment'].shape, (2,))
        self.assertEqual(logits['emotion'].shape, (8,))

    def test_hidden_layer_matches_naive_loops(self):
        params = make_params('S1', seed=6, head_hidden=3)
        vector = np.random.default_rng(10).normal(size=6)
        logits = task_heads({'sentiment': Tensor(vector)}, params)
        hidden = np.maximum(self.naive_affine(vector, params['head.sentiment.V_hidden'].data,
                                              params['head.sentiment.c_hidden'].data), 0.0)
        expected = self.naive_affine(hidden, params['head.sentiment.V'].data, params['head.sentiment.c'].data)
        np.testing.assert_allclose(logits['sentiment'].data, expected, rtol=0, atol=1e-12)

    def test_only_requested_tasks(self):
        logits = task_heads({'emotion': Tensor(np.ones(10))}, make_params('M2'))
        self.assertEqual(set(logits), {'emotion'})

    def test_wrong_vector_size(self):
        with self.assertRaises(ShapeError):
            task_heads({'sentiment': Tensor(np.ones(6))}, make_params('M2'))



class ForwardTests(SimpleTestCase):
    def test_output_shapes_per_mode(self):
        example = synthetic_example()
        expected = {'S1': {'sentiment': (2,)}, 'S2': {'sentiment': (2,)}, 'E1': {'emotion': (8,)},
                    'E2': {'emotion': (8,)}, 'M1': {'sentiment': (2,), 'emotion': (8,)},
                    'M2': {'sentiment': (2,), 'emotion': (8,)}}
        for mode, shapes in expected.items():
            trace = forward(example, make_params(mode))
            self.assertEqual({task: logits.shape for task, logits in trace.logits.items()}, shapes, mode)

    def test_attention_distributions(self):
        trace = forward(synthetic_example(), make_params('M2'))
        for task_trace in trace.tasks.values():
            self.assertAlmostEqual(task_trace.sentence_coefficients.sum(), 1.0, delta=1e-12)
            self.assertEqual(len(task_trace.sentence_coefficients), 3)
            self.assertAlmostEqual(task_trace.word_coefficients[0].sum(), 1.0, delta=1e-12)
            self.assertEqual(len(task_trace.word_coefficients[1]), 3)
            # третій токен без кандидатів
            self.assertEqual(task_trace.word_coefficients[2].size, 0)
            np.testing.assert_array_equal(task_trace.memory_vectors[2], np.zeros(4))

    def test_attention_sums_over_random_inputs(self):
        rng = np.random.default_rng(17)
        for n in range(60):
            mode = ('M2', 'E2', 'S2', 'M1')[n % 4]
            length = int(rng.integers(1, 7))
            candidate_ids = tuple(rng.integers(0, TINY_VOCAB, size=int(rng.integers(0, 4))) for _ in range(length))
            example = EncodedExample(f'r{n}', rng.integers(0, TINY_VOCAB, size=length), candidate_ids, 'positive',
                                     np.zeros(len(EMOTIONS)))
            trace = forward(example, make_params(mode, seed=n))
            for task_trace in trace.tasks.values():
                self.assertEqual(task_trace.sentence_coefficients.shape, (length,))
                self.assertAlmostEqual(task_trace.sentence_coefficients.sum(), 1.0, delta=1e-12)
                self.assertTrue((task_trace.sentence_coefficients >= 0.0).all())
                for ids, coefficients in zip(candidate_ids, task_trace.word_coefficients):
                    self.assertEqual(coefficients.size, ids.size)
                    if ids.size:
                        self.assertAlmostEqual(coefficients.sum(), 1.0, delta=1e-12)

    def test_context_only_mode_has_no_word_attention(self):

        trace = forward(synthetic_example(), make_params('M1'))
        for task_trace in trace.tasks.values():
            self.assertEqual(task_trace.word_coefficients, [])
            np.testing.assert_array_equal(task_trace.augmented[0], trace.hidden_states[0])

    def test_zero_weights_give_half_probabilities(self):
        params = make_params('M2')
        zeros = {name: Tensor(np.zeros(params[name].shape)) for name in params.names if name != EMBEDDINGS}
        trace = forward(synthetic_example(), params.replace(zeros))
        for h in trace.hidden_states:
            np.testing.assert_array_equal(h, np.zeros(6))
        prediction = predict_labels(trace.logits)
        self.assertEqual(set(prediction.sentiment_probabilities.values()), {0.5})
        self.assertEqual(set(prediction.emotion_probabilities.values()), {0.5})

    def test_tasks_are_independent_branches(self):
        params = make_params('M2')
        before = forward(synthetic_example(), params)
        changed = params.replace({name: Tensor(params[name].data + 1.0) for name in params.names
                                  if '.emotion.' in name})
        after = forward(synthetic_example(), changed)
        np.testing.assert_array_equal(before.logits['sentiment'].data, after.logits['sentiment'].data)
        self.assertFalse(np.array_equal(before.logits['emotion'].data, after.logits['emotion'].data))

    def test_dropout_only_in_train_mode(self):
        params = make_params('M2').replace({})
        config = ModelConfig(**{**params.config.to_dict(), 'dropout_rate': 0.5})
        params = ModelParameters(config, params.tensors)
        example = synthetic_example()
        np.testing.assert_array_equal(forward(example, params).logits['emotion'].data,
                                      forward(example, params).logits['emotion'].data)
        trained = forward(example, params, train_mode=True, rng=np.random.default_rng(0))
        self.assertFalse(np.array_equal(trained.logits['emotion'].data, forward(example, params).logits['emotion'].data))

    def test_empty_example(self):
        example = EncodedExample('empty', np.array([], dtype=np.int64), (), 'positive', np.zeros(len(EMOTIONS)))
        with self.assertRaises(ContractError):
            forward(example, make_params())


class PredictLabelsTests(SimpleTestCase):
    def test_sentiment_argmax_and_emotion_threshold(self):
        logits = {'sentiment': Tensor([-1.0, 2.0]), 'emotion': Tensor([3.0, -3.0, 0.0, -1.0, 1.0, -5.0, -2.0, 0.1])}
        prediction = predict_labels(logits, threshold=0.5)
        self.assertEqual(prediction.sentiment, 'positive')
        self.assertEqual(prediction.emotions, ('anger', 'disgust', 'joy', 'trust'))

    def test_higher_threshold(self):
        prediction = predict_labels({'emotion': Tensor([3.0, -3.0, 0.0, -1.0, 1.0, -5.0, -2.0, 0.1])}, threshold=0.9)
        self.assertEqual(prediction.emotions, ('anger',))
        self.assertIsNone(prediction.sentiment)
